//! Monte-Carlo averaging of repeated prediction runs, and grouping of raw
//! prediction rows into per-sample tensors.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::types::{PredictionTensor, ProbPair};

/// Default number of Monte-Carlo runs for synthetic pipelines.
pub const DEFAULT_MC_RUNS: usize = 15;

/// One averaged pair per flip variant, in mask order.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedPrediction {
    pub sample_id: String,
    variants: Vec<ProbPair>,
    pub runs_used: usize,
}

impl AveragedPrediction {
    pub fn new(
        sample_id: impl Into<String>,
        variants: Vec<ProbPair>,
        runs_used: usize,
    ) -> Result<Self> {
        let n = variants.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidVariantCount(n));
        }
        Ok(Self {
            sample_id: sample_id.into(),
            variants,
            runs_used,
        })
    }

    pub fn variants(&self) -> &[ProbPair] {
        &self.variants
    }

    pub fn n_variants(&self) -> usize {
        self.variants.len()
    }

    /// Variant 0, the un-flipped sample.
    pub fn original(&self) -> ProbPair {
        self.variants[0]
    }
}

/// Component-wise mean over runs for each variant.
///
/// Runs are summed sequentially in run order, so the result does not depend
/// on how callers schedule samples.
pub fn mc_average(tensor: &PredictionTensor) -> Result<AveragedPrediction> {
    let runs = tensor.runs();
    if runs.is_empty() {
        return Err(Error::EmptyTensor(tensor.sample_id.clone()));
    }
    let t = runs.len() as f64;
    let variants = (0..tensor.n_variants())
        .map(|n| {
            let (s1, s2) = runs
                .iter()
                .fold((0.0, 0.0), |(a, b), run| (a + run[n].p1(), b + run[n].p2()));
            ProbPair::try_new(s1 / t, s2 / t)
        })
        .collect::<Result<Vec<_>>>()?;
    AveragedPrediction::new(tensor.sample_id.clone(), variants, runs.len())
}

/// A raw prediction row as found in a prediction-run file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub sample_id: String,
    pub variant_index: usize,
    pub run_index: usize,
    pub p1: f64,
    pub p2: f64,
}

/// Groups rows into one tensor per sample, in the order of `sample_ids`.
///
/// Every sample needs the same variant count `N` (a power of two) and the
/// same run count `T`, with every `(variant, run)` cell present exactly once.
pub fn ingest_runs(rows: &[RunRow], sample_ids: &[String]) -> Result<Vec<PredictionTensor>> {
    let position: HashMap<&str, usize> = sample_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    if position.len() != sample_ids.len() {
        let mut seen = std::collections::HashSet::new();
        let dup = sample_ids
            .iter()
            .find(|id| !seen.insert(id.as_str()))
            .unwrap();
        return Err(Error::DuplicateSampleId(dup.clone()));
    }

    let mut cells: Vec<HashMap<(usize, usize), ProbPair>> = vec![HashMap::new(); sample_ids.len()];
    let (mut n_variants, mut n_runs) = (0usize, 0usize);
    for row in rows {
        let &i = position
            .get(row.sample_id.as_str())
            .ok_or_else(|| Error::UnknownSample(row.sample_id.clone()))?;
        let pair = ProbPair::validate(row.p1, row.p2)?;
        if cells[i]
            .insert((row.variant_index, row.run_index), pair)
            .is_some()
        {
            return Err(Error::DuplicateCell {
                sample_id: row.sample_id.clone(),
                variant: row.variant_index,
                run: row.run_index,
            });
        }
        n_variants = n_variants.max(row.variant_index + 1);
        n_runs = n_runs.max(row.run_index + 1);
    }
    if !n_variants.is_power_of_two() && n_variants != 0 {
        return Err(Error::InvalidVariantCount(n_variants));
    }

    let expected = n_variants * n_runs;
    sample_ids
        .iter()
        .zip(cells)
        .map(|(id, mut grid)| {
            if grid.is_empty() {
                return Err(Error::MissingPredictions(id.clone()));
            }
            if grid.len() != expected {
                return Err(Error::RaggedRuns(format!(
                    "sample `{id}` has {} cells, expected {n_variants} variants x {n_runs} runs",
                    grid.len()
                )));
            }
            let runs = (0..n_runs)
                .map(|t| {
                    (0..n_variants)
                        .map(|n| {
                            grid.remove(&(n, t)).ok_or_else(|| {
                                Error::RaggedRuns(format!(
                                    "sample `{id}` is missing variant {n} in run {t}"
                                ))
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            PredictionTensor::new(id.clone(), runs)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor(runs: Vec<Vec<f64>>) -> PredictionTensor {
        let runs = runs
            .into_iter()
            .map(|r| r.into_iter().map(ProbPair::from_class1).collect())
            .collect();
        PredictionTensor::new("s", runs).unwrap()
    }

    fn rows(n_samples: usize, n_variants: usize, n_runs: usize) -> Vec<RunRow> {
        let mut out = Vec::new();
        for s in 0..n_samples {
            for n in 0..n_variants {
                for t in 0..n_runs {
                    out.push(RunRow {
                        sample_id: format!("s{s}"),
                        variant_index: n,
                        run_index: t,
                        p1: 0.25,
                        p2: 0.75,
                    });
                }
            }
        }
        out
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn two_point_mean() {
        let avg = mc_average(&tensor(vec![vec![0.8], vec![0.6]])).unwrap();
        assert!((avg.variants()[0].p1() - 0.7).abs() < 1e-15);
        assert!((avg.variants()[0].p2() - 0.3).abs() < 1e-15);
        assert_eq!(avg.runs_used, 2);
    }

    #[test]
    fn single_run_is_identity() {
        let t = tensor(vec![vec![0.9, 0.35]]);
        let avg = mc_average(&t).unwrap();
        assert_eq!(avg.variants(), t.runs()[0].as_slice());
    }

    #[test]
    fn constant_runs_are_fixed_points() {
        let avg = mc_average(&tensor(vec![vec![0.9]; 15])).unwrap();
        assert!((avg.original().p1() - 0.9).abs() < 1e-12);
        assert!((avg.original().p2() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ingest_groups_rows() {
        let tensors = ingest_runs(&rows(2, 4, 3), &ids(2)).unwrap();
        assert_eq!(tensors.len(), 2);
        assert!(tensors
            .iter()
            .all(|t| t.n_runs() == 3 && t.n_variants() == 4));
        assert_eq!(tensors[1].sample_id, "s1");
    }

    #[test]
    fn ingest_missing_cell_is_ragged() {
        let mut r = rows(2, 4, 3);
        r.retain(|row| !(row.sample_id == "s0" && row.variant_index == 2 && row.run_index == 1));
        assert!(matches!(
            ingest_runs(&r, &ids(2)),
            Err(Error::RaggedRuns(_))
        ));
    }

    #[test]
    fn ingest_duplicate_and_unknown() {
        let mut r = rows(1, 2, 2);
        r.push(r[0].clone());
        assert!(matches!(
            ingest_runs(&r, &ids(1)),
            Err(Error::DuplicateCell { .. })
        ));
        assert_eq!(
            ingest_runs(&rows(2, 2, 1), &ids(1)),
            Err(Error::UnknownSample("s1".into()))
        );
        assert_eq!(
            ingest_runs(&rows(1, 2, 1), &ids(2)),
            Err(Error::MissingPredictions("s1".into()))
        );
    }

    #[test]
    fn ingest_rejects_bad_rows() {
        let mut r = rows(1, 2, 1);
        r[0].p1 = 0.5;
        assert!(matches!(
            ingest_runs(&r, &ids(1)),
            Err(Error::NonSimplex { .. })
        ));
        assert_eq!(
            ingest_runs(&rows(1, 3, 1), &ids(1)),
            Err(Error::InvalidVariantCount(3))
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn grid() -> impl Strategy<Value = Vec<Vec<f64>>> {
            (1usize..20, prop::sample::select(vec![1usize, 2, 4, 8])).prop_flat_map(|(t, n)| {
                prop::collection::vec(prop::collection::vec(0.0f64..=1.0, n), t)
            })
        }

        proptest! {
            #[test]
            fn permutation_invariance(g in grid(), seed in any::<u64>()) {
                use rand::{seq::SliceRandom, SeedableRng};
                let mut shuffled = g.clone();
                shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let a = mc_average(&tensor(g)).unwrap();
                let b = mc_average(&tensor(shuffled)).unwrap();
                for (x, y) in a.variants().iter().zip(b.variants()) {
                    prop_assert!((x.p1() - y.p1()).abs() <= 1e-12);
                    prop_assert!((x.p2() - y.p2()).abs() <= 1e-12);
                }
            }

            #[test]
            fn simplex_and_convexity(g in grid()) {
                let avg = mc_average(&tensor(g.clone())).unwrap();
                for (n, pair) in avg.variants().iter().enumerate() {
                    prop_assert!((pair.p1() + pair.p2() - 1.0).abs() <= 1e-9);
                    let column: Vec<f64> = g.iter().map(|run| run[n]).collect();
                    let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(pair.p1() >= lo - 1e-12 && pair.p1() <= hi + 1e-12);
                }
            }
        }
    }
}
