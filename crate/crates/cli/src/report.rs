//! Evaluation reports: a `key = value` block followed by a bins table, the
//! same content as JSON, and a fixed-width summary table across pipelines.

use std::fmt::Write as _;
use std::path::Path;

use relcal_core::metrics::{CalibrationReport, ConfidenceBin, ConfidenceFlag};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// How the pipeline was run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub pipeline: String,
    pub beta: f64,
    /// 0 for class 1, 1 for class 2.
    pub tie_class: usize,
    /// `builtin`, `external` or `none`.
    pub fallback: String,
    pub mc_runs: usize,
    pub n_variants: usize,
    /// Samples the first stage sent to class 3 before the continuation ran.
    pub rejected_before_continuation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub meta: ReportMeta,
    pub metrics: CalibrationReport,
}

const BINS_HEADER: &str = "lower,upper,center,count,correct,mean_confidence";

impl EvaluationReport {
    pub fn to_text(&self) -> String {
        let (m, r) = (&self.meta, &self.metrics);
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            writeln!(out, "{k} = {v}").unwrap();
        };
        kv("pipeline", m.pipeline.clone());
        kv("beta", m.beta.to_string());
        kv("tie_class", m.tie_class.to_string());
        kv("fallback", m.fallback.clone());
        kv("mc_runs", m.mc_runs.to_string());
        kv("n_variants", m.n_variants.to_string());
        kv(
            "rejected_before_continuation",
            m.rejected_before_continuation.to_string(),
        );
        kv("n_samples", r.n_samples.to_string());
        kv("bin_width", r.bin_width.to_string());
        kv("ece", r.ece.to_string());
        kv("mce", r.mce.to_string());
        kv("mc", r.mc.to_string());
        kv("ma", r.ma.to_string());
        kv("nll", r.nll.to_string());
        kv("bsl", r.bsl.to_string());
        kv("flag", r.flag.to_string());
        kv("rs", r.rs.to_string());
        kv("ece_mean_confidence", r.ece_mean_confidence.to_string());
        out.push('\n');
        out.push_str(BINS_HEADER);
        out.push('\n');
        for b in &r.bins {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                b.lower, b.upper, b.center, b.count, b.correct, b.mean_confidence
            )
            .unwrap();
        }
        out
    }

    pub fn from_text(path: &Path, text: &str) -> Result<Self> {
        let err = |msg: String| CliError::parse(path, msg);
        let (head, bins) = text
            .split_once("\n\n")
            .ok_or_else(|| err("missing blank line before the bins table".into()))?;
        let mut lines = head.lines().enumerate();
        let mut next = |key: &str| -> Result<String> {
            let (i, line) = lines
                .next()
                .ok_or_else(|| err(format!("missing key `{key}`")))?;
            match line.split_once(" = ") {
                Some((k, v)) if k == key => Ok(v.to_string()),
                _ => Err(err(format!("line {}: expected `{key} = …`", i + 1))),
            }
        };
        fn num<T: std::str::FromStr>(path: &Path, key: &str, v: String) -> Result<T> {
            v.parse()
                .map_err(|_| CliError::parse(path, format!("bad value `{v}` for `{key}`")))
        }
        macro_rules! field {
            ($k:literal) => {
                num(path, $k, next($k)?)?
            };
        }
        let meta = ReportMeta {
            pipeline: next("pipeline")?,
            beta: field!("beta"),
            tie_class: field!("tie_class"),
            fallback: next("fallback")?,
            mc_runs: field!("mc_runs"),
            n_variants: field!("n_variants"),
            rejected_before_continuation: field!("rejected_before_continuation"),
        };
        let n_samples = field!("n_samples");
        let bin_width = field!("bin_width");
        let ece = field!("ece");
        let mce = field!("mce");
        let mc = field!("mc");
        let ma = field!("ma");
        let nll = field!("nll");
        let bsl = field!("bsl");
        let flag: ConfidenceFlag = next("flag")?
            .parse()
            .map_err(|e: relcal_core::Error| err(e.to_string()))?;
        let rs = field!("rs");
        let ece_mean_confidence = field!("ece_mean_confidence");
        if let Some((i, _)) = lines.next() {
            return Err(err(format!("line {}: unexpected key", i + 1)));
        }

        let mut bin_lines = bins.lines();
        if bin_lines.next() != Some(BINS_HEADER) {
            return Err(err(format!("expected bins header `{BINS_HEADER}`")));
        }
        let bins = bin_lines
            .map(|line| {
                let f: Vec<&str> = line.split(',').collect();
                if f.len() != 6 {
                    return Err(err(format!("bad bin row `{line}`")));
                }
                Ok(ConfidenceBin {
                    lower: num(path, "lower", f[0].into())?,
                    upper: num(path, "upper", f[1].into())?,
                    center: num(path, "center", f[2].into())?,
                    count: num(path, "count", f[3].into())?,
                    correct: num(path, "correct", f[4].into())?,
                    mean_confidence: num(path, "mean_confidence", f[5].into())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            meta,
            metrics: CalibrationReport {
                n_samples,
                bin_width,
                ece,
                mce,
                mc,
                ma,
                nll,
                bsl,
                flag,
                rs,
                ece_mean_confidence,
                bins,
            },
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(path: &Path, text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::parse(path, e.to_string()))
    }

    /// Reads either format, chosen by the `.json` extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::formats::read_text(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(path, &text)
        } else {
            Self::from_text(path, &text)
        }
    }
}

/// Columns ECE, MCE, MC, MA, NLL, BSL, OC/UC, RS; one row per report.
pub fn summary_table(reports: &[EvaluationReport]) -> String {
    let mut out = format!(
        "{:<12} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>8} {:>6} {:>9}\n",
        "pipeline", "ECE", "MCE", "MC", "MA", "NLL", "BSL", "OC/UC", "RS", "rejected"
    );
    for r in reports {
        let m = &r.metrics;
        writeln!(
            out,
            "{:<12} {:>7.2} {:>7.2} {:>7.2} {:>7.2} {:>7.4} {:>7.2} {:>8} {:>6.2} {:>9}",
            r.meta.pipeline,
            m.ece,
            m.mce,
            m.mc,
            m.ma,
            m.nll,
            m.bsl,
            m.flag.to_string(),
            m.rs,
            r.meta.rejected_before_continuation
        )
        .unwrap();
    }
    out
}
