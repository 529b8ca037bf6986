use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::ShotSeries;

/// Probabilities below this are treated as absent when choosing the
/// fidelity cutoff.
pub const NEGLIGIBLE: f64 = 1e-12;

/// Photon-number pmf over `m = 0..=max_m` with per-bin standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhotonNumberDistribution {
    probs: Vec<f64>,
    uncertainties: Vec<f64>,
    sample_count: u64,
    #[serde(skip)]
    bin_counts: Option<Vec<u64>>,
}

impl PhotonNumberDistribution {
    /// Builds a pmf from explicit probabilities (analytic, `sample_count` 0).
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("pmf needs at least one bin".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidParameter(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        let uncertainties = vec![0.0; probs.len()];
        Ok(Self {
            probs,
            uncertainties,
            sample_count: 0,
            bin_counts: None,
        })
    }

    /// Point mass at `m`.
    pub fn point_mass(m: usize) -> Self {
        let mut probs = vec![0.0; m + 1];
        probs[m] = 1.0;
        Self::from_probs(probs).expect("valid point mass")
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn uncertainties(&self) -> &[f64] {
        &self.uncertainties
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    pub fn max_m(&self) -> usize {
        self.probs.len() - 1
    }

    /// Probability of `m`, zero beyond the stored range.
    pub fn prob(&self, m: usize) -> f64 {
        self.probs.get(m).copied().unwrap_or(0.0)
    }

    /// Mean photon number. For histograms this is computed from the raw bin
    /// counts and equals the series mean exactly.
    pub fn mean(&self) -> f64 {
        match &self.bin_counts {
            Some(counts) => {
                let s1: u128 = counts
                    .iter()
                    .enumerate()
                    .map(|(m, &c)| m as u128 * c as u128)
                    .sum();
                s1 as f64 / self.sample_count as f64
            }
            None => self
                .probs
                .iter()
                .enumerate()
                .map(|(m, p)| m as f64 * p)
                .sum(),
        }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Poisson pmf `mu^m e^-mu / m!` for `m = 0..=cutoff`, evaluated through the
/// log-space recurrence `ln p(m+1) = ln p(m) + ln mu - ln(m+1)`.
pub fn poisson_pmf(mean: f64, cutoff: usize) -> Result<PhotonNumberDistribution> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(Error::NegativeMean(mean));
    }
    let mut probs = vec![0.0; cutoff + 1];
    if mean == 0.0 {
        probs[0] = 1.0;
    } else {
        let ln_mu = mean.ln();
        let mut ln_p = -mean;
        for (m, p) in probs.iter_mut().enumerate() {
            if m > 0 {
                ln_p += ln_mu - (m as f64).ln();
            }
            *p = ln_p.exp();
        }
    }
    PhotonNumberDistribution::from_probs(probs)
}

/// Cutoff large enough that the truncated Poisson pmf loses < 1e-9 mass.
pub fn poisson_cutoff(mean: f64) -> usize {
    (mean + 12.0 * mean.sqrt() + 20.0).ceil() as usize
}

/// Normalized histogram over `0..=max(counts)` with multinomial standard
/// errors `sqrt(p (1 - p) / N)`.
pub fn empirical_distribution(series: &ShotSeries) -> PhotonNumberDistribution {
    let mut bins = vec![0u64; series.max() as usize + 1];
    for &c in series.counts() {
        bins[c as usize] += 1;
    }
    let n = series.len() as f64;
    let probs: Vec<f64> = bins.iter().map(|&c| c as f64 / n).collect();
    let uncertainties = probs.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
    PhotonNumberDistribution {
        probs,
        uncertainties,
        sample_count: series.len() as u64,
        bin_counts: Some(bins),
    }
}

/// Overlap `sum_m sqrt(p(m) q(m))`, summed up to the last index where either
/// pmf exceeds [`NEGLIGIBLE`]; the shorter pmf is zero-padded.
pub fn fidelity(p: &PhotonNumberDistribution, q: &PhotonNumberDistribution) -> f64 {
    let len = p.probs.len().max(q.probs.len());
    let cutoff = (0..len)
        .rev()
        .find(|&m| p.prob(m) > NEGLIGIBLE || q.prob(m) > NEGLIGIBLE);
    let Some(cutoff) = cutoff else {
        return 0.0;
    };
    let f: f64 = (0..=cutoff).map(|m| (p.prob(m) * q.prob(m)).sqrt()).sum();
    f.clamp(0.0, 1.0)
}

/// Fidelity of an empirical pmf against the Poisson pmf at its own mean.
pub fn fidelity_to_poisson(measured: &PhotonNumberDistribution) -> Result<f64> {
    let mean = measured.mean();
    let cutoff = poisson_cutoff(mean).max(measured.max_m());
    Ok(fidelity(measured, &poisson_pmf(mean, cutoff)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_pmf() {
        let p = poisson_pmf(0.0, 4).unwrap();
        assert_eq!(p.probs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn unit_mean_zero_bin() {
        let p = poisson_pmf(1.0, 3).unwrap();
        assert!((p.prob(0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((p.prob(0) - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn recurrence_ratio() {
        let p = poisson_pmf(5.85, 20).unwrap();
        assert!((p.prob(6) / p.prob(5) - 5.85 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn negative_mean_rejected() {
        assert!(matches!(poisson_pmf(-0.1, 3), Err(Error::NegativeMean(_))));
        assert!(matches!(
            poisson_pmf(f64::NAN, 3),
            Err(Error::NegativeMean(_))
        ));
    }

    #[test]
    fn no_overflow_far_in_tail() {
        let p = poisson_pmf(200.0, 400).unwrap();
        assert!(p.probs().iter().all(|x| x.is_finite()));
        assert!((p.total() - 1.0).abs() < 1e-9);
        // Mode of Poisson(200) sits at 199/200.
        assert!(p.prob(200) > 0.028 && p.prob(200) < 0.0283);
    }

    #[test]
    fn empirical_histograms() {
        let d = empirical_distribution(&ShotSeries::new(vec![0, 1, 0, 1]).unwrap());
        assert_eq!(d.probs(), &[0.5, 0.5]);
        assert_eq!(d.sample_count(), 4);
        let d = empirical_distribution(&ShotSeries::new(vec![2, 2, 2, 2]).unwrap());
        assert_eq!(d.probs(), &[0.0, 0.0, 1.0]);
        assert_eq!(d.uncertainties(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn fidelity_edge_cases() {
        let p = poisson_pmf(3.0, 30).unwrap();
        assert!((fidelity(&p, &p) - 1.0).abs() < 1e-12);
        let a = PhotonNumberDistribution::point_mass(0);
        let b = PhotonNumberDistribution::point_mass(1);
        assert_eq!(fidelity(&a, &b), 0.0);
    }

    #[test]
    fn fidelity_ignores_storage_length() {
        let short = poisson_pmf(2.0, 40).unwrap();
        let long = poisson_pmf(2.0, 400).unwrap();
        let q = poisson_pmf(2.5, 60).unwrap();
        assert!((fidelity(&short, &q) - fidelity(&long, &q)).abs() < 1e-12);
    }

    #[test]
    fn single_shot_fidelity_is_root_of_poisson_bin() {
        let d = empirical_distribution(&ShotSeries::new(vec![3]).unwrap());
        let f = fidelity_to_poisson(&d).unwrap();
        let expected = poisson_pmf(3.0, 3).unwrap().prob(3).sqrt();
        assert!((f - expected).abs() < 1e-14);
    }
}
