use serde::Serialize;

use crate::error::{Error, Result};

/// Per-trigger photon or detection counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShotSeries {
    counts: Vec<u32>,
    label: String,
}

impl ShotSeries {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        Self::labeled(counts, "")
    }

    pub fn labeled(counts: Vec<u32>, label: impl Into<String>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptySeries);
        }
        Ok(Self {
            counts,
            label: label.into(),
        })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn max(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn into_counts(self) -> Vec<u32> {
        self.counts
    }
}

/// Two shot-by-shot aligned arms, e.g. the outputs of a beam splitter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairedShotSeries {
    arm1: ShotSeries,
    arm2: ShotSeries,
}

impl PairedShotSeries {
    pub fn new(arm1: ShotSeries, arm2: ShotSeries) -> Result<Self> {
        if arm1.len() != arm2.len() {
            return Err(Error::LengthMismatch {
                arm1: arm1.len(),
                arm2: arm2.len(),
            });
        }
        Ok(Self { arm1, arm2 })
    }

    pub fn arm1(&self) -> &ShotSeries {
        &self.arm1
    }

    pub fn arm2(&self) -> &ShotSeries {
        &self.arm2
    }

    pub fn len(&self) -> usize {
        self.arm1.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_arms(self) -> (ShotSeries, ShotSeries) {
        (self.arm1, self.arm2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_series_is_rejected() {
        assert!(matches!(ShotSeries::new(vec![]), Err(Error::EmptySeries)));
    }

    #[test]
    fn pairing_checks_lengths() {
        let a = ShotSeries::new(vec![1, 2, 3]).unwrap();
        let b = ShotSeries::new(vec![1, 2]).unwrap();
        assert!(matches!(
            PairedShotSeries::new(a, b),
            Err(Error::LengthMismatch { arm1: 3, arm2: 2 })
        ));
    }
}
