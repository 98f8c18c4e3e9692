//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relcal::commands::{
    cmd_beta_sweep, cmd_evaluate, cmd_synth, load_data, EvaluateSettings, FallbackSource,
};
use relcal::config::{SweepArgs, SynthArgs};
use relcal::report::EvaluationReport;
use relcal_core::augment::{apply_mask, augment_dataset, enumerate_masks};
use relcal_core::ensemble::AveragedPrediction;
use relcal_core::fallback::{train_builtin, TrainConfig};
use relcal_core::methods::{
    method1, method2, method3, run_named, BetaFilter, FallbackInputs, Pipeline, PipelineConfig,
    SweepRow,
};
use relcal_core::metrics::{bin_decisions, build_report, mc_ma, reliability_score, ConfidenceFlag};
use relcal_core::{Decision, Label, Outcome, ProbPair, Provenance, SampleRecord};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

// ------------------------------------------------------------ generators

fn random_pair(rng: &mut ChaCha8Rng) -> ProbPair {
    let q = match rng.random_range(0..10) {
        0 => 0.5,
        1 => [0.6, 0.7, 0.8, 0.9, 1.0, 0.4, 0.3, 0.2, 0.1, 0.0][rng.random_range(0..10)],
        _ => rng.random::<f64>(),
    };
    ProbPair::from_class1(q)
}

fn random_decisions(rng: &mut ChaCha8Rng) -> (Vec<Decision>, Vec<ProbPair>, Vec<Label>) {
    let n = rng.random_range(1..300);
    let mut d = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let pair = random_pair(rng);
        let class = pair.vote().label().unwrap_or(Label::Class1);
        d.push(Decision::accepted(
            format!("d{i}"),
            class,
            pair,
            Provenance::Method3,
        ));
        p.push(pair);
        y.push(if rng.random_bool(0.5) {
            Label::Class1
        } else {
            Label::Class2
        });
    }
    (d, p, y)
}

// ------------------------------------------------------------ 1

struct Brute {
    ece: f64,
    mce: f64,
    mc: f64,
    ma: f64,
    nll: f64,
    bsl: f64,
}

/// Per-bin loops over every decision, straight from the definitions.
fn brute_metrics(d: &[Decision], p: &[ProbPair], y: &[Label], width: f64) -> Brute {
    let k = (0.5 / width).round() as usize;
    let n = d.len() as f64;
    let edge = |j: usize| ((0.5 + j as f64 * width) * 1e12).round() / 1e12;
    let (mut ece, mut mce, mut mc, mut ma) = (0.0, 0.0f64, 0.0, 0.0);
    for i in 0..k {
        let lo = edge(i);
        let hi = if i + 1 == k { 1.0 } else { edge(i + 1) };
        let center = ((lo + hi) / 2.0 * 1e12).round() / 1e12;
        let (mut count, mut correct, mut conf) = (0.0, 0.0, 0.0);
        for (dec, label) in d.iter().zip(y) {
            let c = dec.confidence().unwrap();
            let member = c >= lo && (c < hi || (i + 1 == k && c <= hi));
            if member {
                count += 1.0;
                conf += c;
                if dec.outcome == Outcome::from(*label) {
                    correct += 1.0;
                }
            }
        }
        if count > 0.0 {
            let gap = (correct / count - center).abs();
            ece += count / n * gap;
            mce = mce.max(gap);
            mc += conf / n;
            ma += correct / n;
        }
    }
    let (mut nll, mut bsl) = (0.0, 0.0);
    for (pair, label) in p.iter().zip(y) {
        let (t1, t2) = match label {
            Label::Class1 => (1.0, 0.0),
            Label::Class2 => (0.0, 1.0),
        };
        let truth = if *label == Label::Class1 {
            pair.p1()
        } else {
            pair.p2()
        };
        nll += -truth.max(1e-12).ln();
        bsl += ((pair.p1() - t1).powi(2) + (pair.p2() - t2).powi(2)) / 2.0;
    }
    Brute {
        ece: 100.0 * ece.min(mce),
        mce: 100.0 * mce,
        mc: 100.0 * mc,
        ma: 100.0 * ma,
        nll: nll / n,
        bsl: 100.0 * bsl / n,
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn c1() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (d, p, y) = random_decisions(&mut rng);
        let width = [0.1, 0.05, 0.25, 0.02, 0.5][rng.random_range(0..5)];
        let r = build_report(&d, &p, &y, width).unwrap();
        let b = brute_metrics(&d, &p, &y, width);
        for (got, want) in [
            (r.ece, b.ece),
            (r.mce, b.mce),
            (r.mc, b.mc),
            (r.ma, b.ma),
            (r.nll, b.nll),
            (r.bsl, b.bsl),
        ] {
            worst = worst.max(rel_err(got, want));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-9 && secs < 5.0,
        format!("1000 sets, max relative error {worst:.1e}, {secs:.2} s"),
    )
}

// ------------------------------------------------------------ 2

fn c2() -> Verdict {
    // (row, MC, MA, published RS, published flag); the external classifier
    // row is labelled "fallback".
    let rows = [
        (
            "no_method",
            89.77,
            91.01,
            1.24,
            ConfidenceFlag::UnderConfident,
        ),
        (
            "fallback",
            92.43,
            85.21,
            7.22,
            ConfidenceFlag::OverConfident,
        ),
        (
            "m1+fallback",
            91.59,
            87.74,
            3.85,
            ConfidenceFlag::OverConfident,
        ),
        (
            "m2+fallback",
            94.41,
            91.19,
            3.21,
            ConfidenceFlag::OverConfident,
        ),
        ("method3", 91.84, 91.19, 0.65, ConfidenceFlag::OverConfident),
        ("m1+m3", 90.26, 91.19, 0.92, ConfidenceFlag::UnderConfident),
        ("m2+m3", 94.20, 91.18, 3.02, ConfidenceFlag::OverConfident),
    ];
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for (name, mc, ma, rs, flag) in rows {
        let (got, got_flag) = reliability_score(mc, ma);
        let gap = (got - rs).abs();
        worst = worst.max(gap);
        // ±0.01 on two-decimal inputs; the slack absorbs binary rounding of
        // the decimal difference.
        if gap > 0.01 + 1e-9 || got_flag != flag {
            bad.push(format!("{name}: {got:.4} {got_flag}"));
        }
    }
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            format!("7 rows, max |RS - published| {worst:.4}, flags exact")
        } else {
            bad.join("; ")
        },
    )
}

// ------------------------------------------------------------ 3

fn pairs(v: &[(f64, f64)]) -> AveragedPrediction {
    let variants = v
        .iter()
        .map(|&(a, b)| ProbPair::validate(a, b).unwrap())
        .collect();
    AveragedPrediction::new("x", variants, 1).unwrap()
}

fn c3() -> Verdict {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };
    let beta = |b| BetaFilter::new(b).unwrap();

    let d = method1(
        &pairs(&[(0.9, 0.1), (0.8, 0.2), (0.7, 0.3), (0.95, 0.05)]),
        beta(0.3),
    )
    .unwrap();
    check(
        "m1 trace",
        d.outcome == Outcome::Class1 && (d.confidence().unwrap() - 0.8375).abs() < 1e-12,
    );
    let d = method1(
        &pairs(&[(0.6, 0.4), (0.4, 0.6), (0.55, 0.45), (0.45, 0.55)]),
        beta(0.3),
    )
    .unwrap();
    check("m1 symmetric rejection", d.outcome == Outcome::Rejected);
    for b in [0.01, 0.2, 0.49] {
        let d = method1(&pairs(&[(1.0, 0.0); 4]), beta(b)).unwrap();
        check(
            "m1 unanimous",
            d.outcome == Outcome::Class1 && d.confidence() == Some(1.0),
        );
    }

    let d = method2(&pairs(&[(0.9, 0.1), (0.2, 0.8), (0.7, 0.3), (0.6, 0.4)])).unwrap();
    check(
        "m2 majority",
        d.outcome == Outcome::Class1 && (d.confidence().unwrap() - 2.2 / 3.0).abs() < 1e-12,
    );
    let d = method2(&pairs(&[(0.9, 0.1), (0.2, 0.8), (0.7, 0.3), (0.4, 0.6)])).unwrap();
    check("m2 2-2 tie", d.outcome == Outcome::Rejected);

    let d = method3(
        &pairs(&[(0.9, 0.1), (0.2, 0.8), (0.3, 0.7), (0.95, 0.05)]),
        Label::Class1,
    );
    check(
        "m3 max",
        d.confidence() == Some(0.95) && d.outcome == Outcome::Class1,
    );
    let d = method3(&pairs(&[(0.3, 0.7)]), Label::Class1);
    check(
        "m3 single",
        d.outcome == Outcome::Class2 && d.confidence() == Some(0.7),
    );
    let d = method3(
        &pairs(&[(0.6, 0.4), (0.4, 0.6), (0.9, 0.1), (0.3, 0.7)]),
        Label::Class1,
    );
    check(
        "m3 enumerate",
        d.outcome == Outcome::Class1 && d.confidence() == Some(0.9),
    );

    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            "Method 1/2/3 worked examples exact".to_string()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

// ------------------------------------------------------------ 4

fn c4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    for _ in 0..10_000 {
        let p = random_pair(&mut rng);
        let mut b = rng.random_range(0.001..0.499);
        let mut b2 = rng.random_range(0.001..0.499);
        if rng.random_range(0..5) == 0 {
            // Put one threshold on the pair's own boundary.
            b = p.p1().min(p.p2()).clamp(0.001, 0.499);
        }
        if b2 > b {
            std::mem::swap(&mut b, &mut b2);
        }
        if b2 == b {
            continue;
        }
        let (hi, lo) = (BetaFilter::new(b).unwrap(), BetaFilter::new(b2).unwrap());
        if hi.neutralises(&p) && !lo.neutralises(&p) {
            violations += 1;
        }
    }
    verdict(
        violations == 0,
        format!("10000 (pair, β' < β) draws, {violations} violations"),
    )
}

// ------------------------------------------------------------ 5

fn c5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    for _ in 0..10_000 {
        let n = [2, 4, 8][rng.random_range(0..3)];
        let variants: Vec<ProbPair> = (0..n).map(|_| random_pair(&mut rng)).collect();
        let (mut c1, mut c2) = (0, 0);
        for p in &variants {
            if p.p1() > p.p2() {
                c1 += 1;
            }
            if p.p2() > p.p1() {
                c2 += 1;
            }
        }
        let want = match c1.cmp(&c2) {
            std::cmp::Ordering::Greater => Outcome::Class1,
            std::cmp::Ordering::Less => Outcome::Class2,
            std::cmp::Ordering::Equal => Outcome::Rejected,
        };
        let a = AveragedPrediction::new("x", variants, 1).unwrap();
        if method2(&a).unwrap().outcome != want {
            violations += 1;
        }
    }
    verdict(
        violations == 0,
        format!("10000 samples, N in {{2,4,8}}, {violations} violations"),
    )
}

// ------------------------------------------------------------ 6

fn c6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = Vec::new();
    let mut distinct_checked = 0;
    for i in 0..1000 {
        let v = rng.random_range(1..=3);
        let l = rng.random_range(1..8);
        let seqs: Vec<Vec<f64>> = (0..v)
            .map(|_| {
                let mut s: Vec<f64> = (0..l).map(|_| rng.random_range(-3.0..3.0)).collect();
                if rng.random_range(0..8) == 0 {
                    for t in 0..l / 2 {
                        s[l - 1 - t] = s[t];
                    }
                }
                s
            })
            .collect();
        let label = if rng.random_bool(0.5) {
            Label::Class1
        } else {
            Label::Class2
        };
        let sample = SampleRecord::new(format!("s{i}"), seqs, label).unwrap();
        let out = augment_dataset(std::slice::from_ref(&sample)).unwrap();
        let masks = enumerate_masks(v).unwrap();
        if out.len() != 1 << v || out[0].record.sequences() != sample.sequences() {
            violations.push(format!("s{i}: count or variant 0"));
        }
        for (m, a) in masks.iter().zip(&out) {
            if a.record.label != label {
                violations.push(format!("s{i}: label"));
            }
            if apply_mask(&a.record, m).unwrap().sequences() != sample.sequences() {
                violations.push(format!("s{i}: involution"));
            }
        }
        let palindrome = sample
            .sequences()
            .iter()
            .any(|s| s.iter().eq(s.iter().rev()));
        if !palindrome {
            distinct_checked += 1;
            for x in 0..out.len() {
                for y in x + 1..out.len() {
                    if out[x].record.sequences() == out[y].record.sequences() {
                        violations.push(format!("s{i}: variants {x} and {y} equal"));
                    }
                }
            }
        }
    }
    verdict(
        violations.is_empty(),
        format!(
            "1000 samples, V in {{1,2,3}}, {distinct_checked} non-palindromic, {} violations{}",
            violations.len(),
            violations
                .first()
                .map_or(String::new(), |v| format!(" (first: {v})"))
        ),
    )
}

// ------------------------------------------------------------ 7

fn c7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (d, _, y) = random_decisions(&mut rng);
        let width = [0.1, 0.05, 0.25][rng.random_range(0..3)];
        let (mc, ma) = mc_ma(&bin_decisions(&d, &y, width).unwrap()).unwrap();
        let n = d.len() as f64;
        let conf = 100.0 * d.iter().map(|x| x.confidence().unwrap()).sum::<f64>() / n;
        let acc = 100.0
            * d.iter()
                .zip(&y)
                .filter(|(x, l)| x.outcome == Outcome::from(**l))
                .count() as f64
            / n;
        worst = worst.max((mc - conf).abs()).max((ma - acc).abs());
    }
    verdict(
        worst <= 1e-9,
        format!("1000 sets, max |binned - unbinned| {worst:.1e}"),
    )
}

// ------------------------------------------------------------ 8-11

/// Synthesises a scenario and writes every report and the sweep under `dir`.
fn scenario_run(dir: &Path, gamma: f64) -> Vec<EvaluationReport> {
    let synth = SynthArgs {
        out_dir: Some(dir.to_path_buf()),
        n_samples: Some(2000),
        variables: Some(2),
        mc_runs: Some(15),
        gamma: Some(gamma),
        seed: Some(42),
        ..Default::default()
    };
    cmd_synth(&synth).unwrap();
    let settings = EvaluateSettings {
        samples: dir.join("samples.csv"),
        runs: dir.join("runs.csv"),
        pipelines: Pipeline::ALL.to_vec(),
        config: PipelineConfig::default(),
        bin_width: 0.1,
        fallback: Some(FallbackSource::Builtin {
            train: dir.join("train.csv"),
            seed: 0,
        }),
        mc_runs: Some(15),
        out_dir: dir.join("reports"),
    };
    let reports = cmd_evaluate(&settings).unwrap();
    cmd_beta_sweep(&SweepArgs {
        samples: Some(dir.join("samples.csv")),
        runs: Some(dir.join("runs.csv")),
        out_dir: Some(dir.to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    reports
}

fn c8(dir: &Path) -> Verdict {
    let start = Instant::now();
    let reports = scenario_run(dir, 1.0);
    // Final decisions straight from the library, to count Rejected outcomes.
    let data = load_data(&dir.join("samples.csv"), &dir.join("runs.csv")).unwrap();
    let train_path = dir.join("train.csv");
    let train =
        relcal::formats::read_samples(&train_path, &fs::read_to_string(&train_path).unwrap())
            .unwrap();
    let model = train_builtin(&train, &TrainConfig::default()).unwrap();
    let inputs = FallbackInputs {
        model: Some(&model),
        originals: Some(&data.samples),
    };
    let mut rejected = 0;
    for p in Pipeline::ALL {
        let run = run_named(&data.averaged, p, &PipelineConfig::default(), inputs).unwrap();
        rejected += run.decisions.iter().filter(|d| d.is_rejected()).count();
    }
    let secs = start.elapsed().as_secs_f64();
    let counts_ok = reports
        .iter()
        .all(|r| r.metrics.bins.iter().map(|b| b.count).sum::<usize>() == 2000);
    let ece_ok = reports.iter().all(|r| r.metrics.ece <= r.metrics.mce);
    verdict(
        reports.len() == 7 && rejected == 0 && counts_ok && ece_ok && secs < 60.0,
        format!(
            "{} reports, {rejected} rejected, bin counts sum to 2000: {counts_ok}, ECE <= MCE: {ece_ok}, {secs:.1} s",
            reports.len()
        ),
    )
}

fn rs_of(reports: &[EvaluationReport], name: &str) -> (f64, ConfidenceFlag) {
    let r = reports.iter().find(|r| r.meta.pipeline == name).unwrap();
    (r.metrics.rs, r.metrics.flag)
}

fn c9(reports: &[EvaluationReport]) -> Verdict {
    let (base, base_flag) = rs_of(reports, "no_method");
    let (m3, _) = rs_of(reports, "method3");
    let (m13, _) = rs_of(reports, "m1+m3");
    verdict(
        m3 < base && m13 < base,
        format!("gamma=3: RS no_method {base:.3} ({base_flag}), method3 {m3:.3}, m1+m3 {m13:.3}"),
    )
}

fn c10(dir: &Path) -> Verdict {
    let path = dir.join("sweep.csv");
    let rows: Vec<SweepRow> =
        relcal::formats::read_sweep(&path, &fs::read_to_string(&path).unwrap()).unwrap();
    let rises: Vec<String> = rows
        .windows(2)
        .filter(|w| w[1].rejected_fraction > w[0].rejected_fraction)
        .map(|w| {
            format!(
                "{}->{}: {}->{}",
                w[0].beta, w[1].beta, w[0].rejected_fraction, w[1].rejected_fraction
            )
        })
        .collect();
    let first = rows.first().unwrap();
    let last = rows.last().unwrap();
    let acc_ok = match (first.accepted_accuracy, last.accepted_accuracy) {
        (Some(a), Some(b)) => a >= b,
        _ => false,
    };
    verdict(
        rows.len() == 24 && rises.is_empty() && acc_ok,
        format!(
            "{} betas; rejected {:.4} at {} to {:.4} at {}; accuracy {:?} vs {:?}; increases: {}",
            rows.len(),
            first.rejected_fraction,
            first.beta,
            last.rejected_fraction,
            last.beta,
            first.accepted_accuracy,
            last.accepted_accuracy,
            if rises.is_empty() {
                "none".to_string()
            } else {
                format!("{} [{}]", rises.len(), rises.join(", "))
            }
        ),
    )
}

fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

fn c11(first: &Path, second: &Path) -> Verdict {
    scenario_run(&second.join("c8"), 1.0);
    scenario_run(&second.join("c9"), 3.0);
    let (a, b) = (read_tree(first), read_tree(second));
    let differing: Vec<String> = a
        .iter()
        .filter(|(k, v)| b.get(*k) != Some(v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    verdict(
        a.len() == b.len() && differing.is_empty(),
        format!("{} files compared, {} differ", a.len(), differing.len()),
    )
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let (first, second) = (tmp.path().join("first"), tmp.path().join("second"));

    let mut results: Vec<(&str, Verdict)> = vec![
        ("metric-oracle equivalence", c1()),
        ("published reliability-score rows", c2()),
        ("method hand-traces", c3()),
        ("filter-set monotonicity", c4()),
        ("vote-oracle equivalence", c5()),
        ("augmentation invariants", c6()),
        ("MA/MC identities", c7()),
        ("end-to-end synthetic pipeline", c8(&first.join("c8"))),
    ];
    let over = scenario_run(&first.join("c9"), 3.0);
    results.push(("over-confident scenario RS ranking", c9(&over)));
    results.push(("beta-sweep shape", c10(&first.join("c9"))));
    results.push(("determinism", c11(&first, &second)));

    let mut failed = 0;
    for (i, (name, v)) in results.iter().enumerate() {
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} [{}] {name}: {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!(
        "{}/{} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
