use std::path::{Path, PathBuf};

use relcal_core::ensemble::{ingest_runs, mc_average, AveragedPrediction};
use relcal_core::fallback::{train_builtin, FallbackModel, TrainConfig};
use relcal_core::methods::{
    beta_grid, beta_sweep, run_named, BetaFilter, FallbackInputs, Pipeline, PipelineConfig,
    SweepRow, DEFAULT_SWEEP_RESOLUTION,
};
use relcal_core::metrics::{report_for_decisions, DEFAULT_BIN_WIDTH};
use relcal_core::synth::{generate_training_samples, simulate, ScenarioConfig};
use relcal_core::{Label, SampleRecord};

use crate::config::{DiagramArgs, EvaluateArgs, SweepArgs, SynthArgs};
use crate::diagram;
use crate::error::{CliError, Result};
use crate::formats::{self, read_text, write_text};
use crate::report::{summary_table, EvaluationReport, ReportMeta};

pub const SAMPLES_FILE: &str = "samples.csv";
pub const TRAIN_FILE: &str = "train.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const DIAGRAM_TABLE_FILE: &str = "diagram.txt";
pub const DIAGRAM_SVG_FILE: &str = "diagram.svg";

fn out_dir(dir: &Option<PathBuf>) -> PathBuf {
    dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| CliError::Config(format!("--{flag} is required")))
}

/// File name stem for a pipeline's reports.
pub fn report_stem(p: Pipeline) -> String {
    p.name().replace('+', "-")
}

// ---------------------------------------------------------------- synth

pub fn scenario(args: &SynthArgs) -> Result<ScenarioConfig> {
    let d = ScenarioConfig::default();
    let cfg = ScenarioConfig {
        n_samples: args.n_samples.unwrap_or(d.n_samples),
        sequence_length: args.sequence_length.unwrap_or(d.sequence_length),
        n_variables: args.variables.unwrap_or(d.n_variables),
        balance: args.balance.unwrap_or(d.balance),
        separation: args.separation.unwrap_or(d.separation),
        noise_scale: args.noise.unwrap_or(d.noise_scale),
        gamma: args.gamma.unwrap_or(d.gamma),
        ar_coefficient: args.ar_coefficient.unwrap_or(d.ar_coefficient),
        recency_slope: args.recency_slope.unwrap_or(d.recency_slope),
        mc_runs: args.mc_runs.unwrap_or(d.mc_runs),
        seed: args.seed.unwrap_or(d.seed),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Writes samples, training samples and runs; returns their paths.
pub fn cmd_synth(args: &SynthArgs) -> Result<Vec<PathBuf>> {
    let cfg = scenario(args)?;
    let dir = out_dir(&args.out_dir);
    let (samples, tensors) = simulate(&cfg)?;
    let train = generate_training_samples(&cfg)?;
    let files = [
        (SAMPLES_FILE, formats::write_samples(&samples)?),
        (TRAIN_FILE, formats::write_samples(&train)?),
        (RUNS_FILE, formats::write_runs(&tensors)),
    ];
    files
        .into_iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            write_text(&path, &text)?;
            Ok(path)
        })
        .collect()
}

// ---------------------------------------------------------------- evaluate

/// Labeled samples with their Monte-Carlo averaged predictions.
pub struct LoadedData {
    pub samples: Vec<SampleRecord>,
    pub averaged: Vec<AveragedPrediction>,
    pub mc_runs: usize,
}

impl LoadedData {
    pub fn labels(&self) -> Vec<Label> {
        self.samples.iter().map(|s| s.label).collect()
    }
}

pub fn load_data(samples: &Path, runs: &Path) -> Result<LoadedData> {
    let samples_v = formats::read_samples(samples, &read_text(samples)?)?;
    let rows = formats::read_runs(runs, &read_text(runs)?)?;
    let ids: Vec<String> = samples_v.iter().map(|s| s.id.clone()).collect();
    let tensors = ingest_runs(&rows, &ids)?;
    let averaged = tensors
        .iter()
        .map(mc_average)
        .collect::<relcal_core::Result<Vec<_>>>()?;
    Ok(LoadedData {
        mc_runs: tensors.first().map_or(0, |t| t.n_runs()),
        samples: samples_v,
        averaged,
    })
}

pub fn parse_pipelines(name: &str) -> Result<Vec<Pipeline>> {
    if name == "all" {
        Ok(Pipeline::ALL.to_vec())
    } else {
        Ok(vec![name.parse()?])
    }
}

/// Where the class-3 fallback comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum FallbackSource {
    Builtin { train: PathBuf, seed: u64 },
    External(PathBuf),
}

impl FallbackSource {
    fn kind(&self) -> &'static str {
        match self {
            FallbackSource::Builtin { .. } => "builtin",
            FallbackSource::External(_) => "external",
        }
    }

    pub fn load(&self) -> Result<FallbackModel> {
        match self {
            FallbackSource::Builtin { train, seed } => {
                let samples = formats::read_samples(train, &read_text(train)?)?;
                Ok(train_builtin(
                    &samples,
                    &TrainConfig {
                        seed: *seed,
                        ..TrainConfig::default()
                    },
                )?)
            }
            FallbackSource::External(path) => {
                let rows = formats::read_external(path, &read_text(path)?)?;
                Ok(FallbackModel::load_external(&rows)?)
            }
        }
    }
}

/// Fully resolved evaluation settings.
#[derive(Debug, Clone)]
pub struct EvaluateSettings {
    pub samples: PathBuf,
    pub runs: PathBuf,
    pub pipelines: Vec<Pipeline>,
    pub config: PipelineConfig,
    pub bin_width: f64,
    pub fallback: Option<FallbackSource>,
    pub mc_runs: Option<usize>,
    pub out_dir: PathBuf,
}

impl EvaluateSettings {
    pub fn resolve(args: &EvaluateArgs) -> Result<Self> {
        let pipelines = parse_pipelines(args.pipeline.as_deref().unwrap_or("all"))?;
        let beta = BetaFilter::new(args.beta.unwrap_or(relcal_core::methods::DEFAULT_BETA))?;
        let tie_class = Label::from_index(args.tie_class.unwrap_or(0))
            .map_err(|_| CliError::Config("tie class must be 0 or 1".into()))?;
        let bin_width = args.bin_width.unwrap_or(DEFAULT_BIN_WIDTH);
        relcal_core::metrics::BinLayout::new(bin_width)?;
        let seed = args.seed.unwrap_or(0);
        let fallback = match args.fallback.as_deref() {
            Some("external") => Some(FallbackSource::External(
                required(&args.external, "external")?.into(),
            )),
            Some("builtin") | None => args
                .train
                .clone()
                .map(|train| FallbackSource::Builtin { train, seed }),
            Some(other) => {
                return Err(CliError::Config(format!(
                    "unknown fallback source `{other}`"
                )))
            }
        };
        if args.fallback.as_deref() == Some("builtin") && fallback.is_none() {
            return Err(CliError::Config(
                "the builtin fallback needs --train".into(),
            ));
        }
        if fallback.is_none() && pipelines.iter().any(|p| p.needs_fallback()) {
            return Err(CliError::Config(
                "a selected pipeline needs a fallback: give --train or --fallback external --external FILE".into(),
            ));
        }
        Ok(Self {
            samples: required(&args.samples, "samples")?.into(),
            runs: required(&args.runs, "runs")?.into(),
            pipelines,
            config: PipelineConfig { beta, tie_class },
            bin_width,
            fallback,
            mc_runs: args.mc_runs,
            out_dir: out_dir(&args.out_dir),
        })
    }
}

/// Runs each pipeline over already loaded data.
pub fn evaluate(
    data: &LoadedData,
    pipelines: &[Pipeline],
    config: &PipelineConfig,
    bin_width: f64,
    fallback: Option<(&FallbackModel, &str)>,
) -> Result<Vec<EvaluationReport>> {
    let labels = data.labels();
    let inputs = FallbackInputs {
        model: fallback.map(|(m, _)| m),
        originals: Some(&data.samples),
    };
    pipelines
        .iter()
        .map(|&p| {
            let run = run_named(&data.averaged, p, config, inputs)?;
            let metrics = report_for_decisions(&run.decisions, &labels, bin_width)?;
            Ok(EvaluationReport {
                meta: ReportMeta {
                    pipeline: p.name().to_string(),
                    beta: config.beta.beta(),
                    tie_class: config.tie_class.index(),
                    fallback: if p.needs_fallback() {
                        fallback.map_or("none", |(_, k)| k).to_string()
                    } else {
                        "none".into()
                    },
                    mc_runs: data.mc_runs,
                    n_variants: data.averaged.first().map_or(0, |a| a.n_variants()),
                    rejected_before_continuation: run.rejected_ids.len(),
                },
                metrics,
            })
        })
        .collect()
}

/// Writes `<pipeline>.report`, `<pipeline>.json` and the summary table.
pub fn cmd_evaluate(settings: &EvaluateSettings) -> Result<Vec<EvaluationReport>> {
    let data = load_data(&settings.samples, &settings.runs)?;
    if let Some(t) = settings.mc_runs {
        if t != data.mc_runs {
            return Err(CliError::Config(format!(
                "expected {t} runs per variant, run file has {}",
                data.mc_runs
            )));
        }
    }
    let model = settings.fallback.as_ref().map(|f| f.load()).transpose()?;
    let fallback = model
        .as_ref()
        .zip(settings.fallback.as_ref().map(|f| f.kind()));
    let reports = evaluate(
        &data,
        &settings.pipelines,
        &settings.config,
        settings.bin_width,
        fallback,
    )?;
    for (p, r) in settings.pipelines.iter().zip(&reports) {
        let stem = report_stem(*p);
        write_text(
            &settings.out_dir.join(format!("{stem}.report")),
            &r.to_text(),
        )?;
        write_text(&settings.out_dir.join(format!("{stem}.json")), &r.to_json())?;
    }
    write_text(
        &settings.out_dir.join(SUMMARY_FILE),
        &summary_table(&reports),
    )?;
    Ok(reports)
}

// ---------------------------------------------------------------- diagram

pub fn cmd_diagram(args: &DiagramArgs) -> Result<(PathBuf, PathBuf)> {
    if args.reports.is_empty() {
        return Err(CliError::Config("no report files given".into()));
    }
    let reports = args
        .reports
        .iter()
        .map(|p| {
            let r = EvaluationReport::load(p)?;
            if r.metrics.bins.iter().all(|b| b.count == 0) {
                return Err(CliError::EmptyReport(p.clone()));
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    let dir = out_dir(&args.out_dir);
    let (table, svg) = (dir.join(DIAGRAM_TABLE_FILE), dir.join(DIAGRAM_SVG_FILE));
    write_text(&table, &diagram::text_table(&reports))?;
    write_text(&svg, &diagram::svg(&reports))?;
    Ok((table, svg))
}

// ---------------------------------------------------------------- sweep

pub fn sweep_betas(args: &SweepArgs) -> Result<Vec<f64>> {
    match &args.betas {
        Some(b) => Ok(b.clone()),
        None => Ok(beta_grid(
            args.resolution.unwrap_or(DEFAULT_SWEEP_RESOLUTION),
        )?),
    }
}

pub fn cmd_beta_sweep(args: &SweepArgs) -> Result<(PathBuf, Vec<SweepRow>)> {
    let betas = sweep_betas(args)?;
    let data = load_data(
        required(&args.samples, "samples")?,
        required(&args.runs, "runs")?,
    )?;
    let rows = beta_sweep(&data.averaged, &data.labels(), &betas)?;
    let path = out_dir(&args.out_dir).join(SWEEP_FILE);
    write_text(&path, &formats::write_sweep(&rows))?;
    Ok((path, rows))
}
