//! Flip augmentation: each of the `V` variable sequences of a sample is
//! either kept or reversed, giving `2^V` variants per sample.
//!
//! Variants are numbered in binary counting order with the first variable as
//! the most significant bit, so variant 0 is always the original sample.

use crate::error::{Error, Result};
use crate::types::SampleRecord;

/// Hard cap on the number of variables, to bound `2^V`.
pub const MAX_VARIABLES: usize = 16;

/// Which variables to reverse; bit `v` set means sequence `v` is flipped.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlipMask {
    bits: Vec<bool>,
}

impl FlipMask {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Mask for `variant` among `n_variables` variables.
    pub fn from_index(variant: usize, n_variables: usize) -> Self {
        let bits = (0..n_variables)
            .map(|v| (variant >> (n_variables - 1 - v)) & 1 == 1)
            .collect();
        Self { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Position of this mask in counting order.
    pub fn index(&self) -> usize {
        self.bits
            .iter()
            .fold(0, |acc, &bit| (acc << 1) | usize::from(bit))
    }
}

/// All `2^V` masks in counting order.
pub fn enumerate_masks(n_variables: usize) -> Result<Vec<FlipMask>> {
    if n_variables == 0 {
        return Err(Error::InvalidConfig(
            "at least one variable is required".into(),
        ));
    }
    if n_variables > MAX_VARIABLES {
        return Err(Error::TooManyVariables(n_variables));
    }
    Ok((0..1usize << n_variables)
        .map(|i| FlipMask::from_index(i, n_variables))
        .collect())
}

/// Variant id used for augmented records, e.g. `s17#3`.
pub fn variant_id(sample_id: &str, variant: usize) -> String {
    format!("{sample_id}#{variant}")
}

/// Reverses the sequences selected by `mask`; the label is carried over.
pub fn apply_mask(sample: &SampleRecord, mask: &FlipMask) -> Result<SampleRecord> {
    if mask.len() != sample.n_variables() {
        return Err(Error::MaskLengthMismatch {
            mask: mask.len(),
            variables: sample.n_variables(),
        });
    }
    let sequences = sample
        .sequences()
        .iter()
        .zip(mask.bits())
        .map(|(seq, &flip)| {
            if flip {
                seq.iter().rev().copied().collect()
            } else {
                seq.clone()
            }
        })
        .collect();
    Ok(sample.with_sequences(variant_id(&sample.id, mask.index()), sequences))
}

/// One augmented record: the source sample id, its variant index, and the data.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample {
    pub sample_id: String,
    pub variant_index: usize,
    pub record: SampleRecord,
}

/// Expands every sample into its `2^V` variants, sample-major.
pub fn augment_dataset(samples: &[SampleRecord]) -> Result<Vec<AugmentedSample>> {
    let first = samples.first().ok_or(Error::EmptyDataset)?;
    let n_variables = first.n_variables();
    if let Some(bad) = samples.iter().find(|s| s.n_variables() != n_variables) {
        return Err(Error::InconsistentVariableCount {
            id: bad.id.clone(),
            expected: n_variables,
            found: bad.n_variables(),
        });
    }
    let masks = enumerate_masks(n_variables)?;
    let mut out = Vec::with_capacity(samples.len() * masks.len());
    for sample in samples {
        for mask in &masks {
            out.push(AugmentedSample {
                sample_id: sample.id.clone(),
                variant_index: mask.index(),
                record: apply_mask(sample, mask)?,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Label;

    fn bits(masks: &[FlipMask]) -> Vec<Vec<bool>> {
        masks.iter().map(|m| m.bits().to_vec()).collect()
    }

    fn sample(id: &str, seqs: Vec<Vec<f64>>) -> SampleRecord {
        SampleRecord::new(id, seqs, Label::Class2).unwrap()
    }

    #[test]
    fn masks_for_one_variable() {
        assert_eq!(
            bits(&enumerate_masks(1).unwrap()),
            vec![vec![false], vec![true]]
        );
    }

    #[test]
    fn masks_for_two_variables_follow_table_order() {
        let (f, t) = (false, true);
        assert_eq!(
            bits(&enumerate_masks(2).unwrap()),
            vec![vec![f, f], vec![f, t], vec![t, f], vec![t, t]]
        );
    }

    #[test]
    fn masks_for_three_variables_are_binary_strings() {
        let expected: Vec<Vec<bool>> = (0..8)
            .map(|i: u32| format!("{i:03b}").chars().map(|c| c == '1').collect())
            .collect();
        let masks = enumerate_masks(3).unwrap();
        assert_eq!(bits(&masks), expected);
        for (i, m) in masks.iter().enumerate() {
            assert_eq!(m.index(), i);
        }
    }

    #[test]
    fn mask_guards() {
        assert_eq!(enumerate_masks(17), Err(Error::TooManyVariables(17)));
        assert!(enumerate_masks(0).is_err());
        assert_eq!(enumerate_masks(16).unwrap().len(), 65536);
    }

    #[test]
    fn apply_mask_examples() {
        let s = sample("a", vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        let out = apply_mask(&s, &FlipMask::new(vec![false, true])).unwrap();
        assert_eq!(out.sequences(), &[vec![1.0, 2.0, 3.0], vec![6.0, 5.0, 4.0]]);
        assert_eq!(out.id, "a#1");
        let out = apply_mask(&s, &FlipMask::new(vec![false, false])).unwrap();
        assert_eq!(out.sequences(), s.sequences());
        let out = apply_mask(&s, &FlipMask::new(vec![true, true])).unwrap();
        assert_eq!(out.sequences(), &[vec![3.0, 2.0, 1.0], vec![6.0, 5.0, 4.0]]);
        assert_eq!(out.label, Label::Class2);
    }

    #[test]
    fn apply_mask_length_mismatch() {
        let s = sample("a", vec![vec![1.0, 2.0]]);
        assert_eq!(
            apply_mask(&s, &FlipMask::new(vec![true, true])),
            Err(Error::MaskLengthMismatch {
                mask: 2,
                variables: 1
            })
        );
    }

    #[test]
    fn augment_counts_and_order() {
        let two: Vec<_> = (0..10)
            .map(|i| sample(&format!("s{i}"), vec![vec![i as f64, 1.0], vec![2.0, 3.0]]))
            .collect();
        let out = augment_dataset(&two).unwrap();
        assert_eq!(out.len(), 40);
        assert_eq!(out[5].sample_id, "s1");
        assert_eq!(out[5].variant_index, 1);

        let one = vec![sample("x", vec![vec![1.0, 2.0]])];
        assert_eq!(augment_dataset(&one).unwrap().len(), 2);

        let three: Vec<_> = (0..3)
            .map(|i| sample(&format!("s{i}"), vec![vec![1.0, 2.0]; 3]))
            .collect();
        assert_eq!(augment_dataset(&three).unwrap().len(), 24);
    }

    #[test]
    fn augment_errors() {
        assert_eq!(augment_dataset(&[]), Err(Error::EmptyDataset));
        let mixed = vec![
            sample("a", vec![vec![1.0]]),
            sample("b", vec![vec![1.0], vec![2.0]]),
        ];
        assert!(matches!(
            augment_dataset(&mixed),
            Err(Error::InconsistentVariableCount { .. })
        ));
    }
}
