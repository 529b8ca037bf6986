//! Moment, correlation and Fano estimators over shot series.
//!
//! All estimators reduce a series to exact integer power sums first, so the
//! result does not depend on summation order.

use serde::Serialize;

use crate::bootstrap::{bootstrap_uncertainty, Statistic, DEFAULT_RESAMPLES};
use crate::error::{Error, Result};
use crate::series::{PairedShotSeries, ShotSeries};

/// Weighted power sums of a single count variable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct Moments {
    pub n: u64,
    pub s1: u128,
    pub s2: u128,
}

impl Moments {
    pub fn of(counts: &[u32]) -> Self {
        let mut m = Moments::default();
        for &c in counts {
            m.add(c, 1);
        }
        m
    }

    #[inline]
    pub fn add(&mut self, value: u32, weight: u64) {
        let v = value as u128;
        let w = weight as u128;
        self.n += weight;
        self.s1 += v * w;
        self.s2 += v * v * w;
    }

    pub fn mean(&self) -> f64 {
        self.s1 as f64 / self.n as f64
    }

    /// Unbiased (N - 1) variance; zero for a single shot.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as u128;
        // N * s2 >= s1^2 by Cauchy-Schwarz, so this never underflows.
        let centered = n * self.s2 - self.s1 * self.s1;
        centered as f64 / (n * (n - 1)) as f64
    }

    pub fn fano(&self) -> Result<f64> {
        if self.s1 == 0 {
            return Err(Error::ZeroMean);
        }
        Ok(self.variance() / self.mean())
    }

    pub fn g2_detected(&self) -> Result<f64> {
        if self.s1 == 0 {
            return Err(Error::ZeroMean);
        }
        // <m^2>/<m>^2 = N s2 / s1^2
        Ok((self.n as f64 * self.s2 as f64) / (self.s1 as f64 * self.s1 as f64))
    }

    pub fn g2_photon(&self) -> Result<f64> {
        Ok(self.g2_detected()? - 1.0 / self.mean())
    }
}

/// Power sums of two aligned count variables.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct PairMoments {
    pub first: Moments,
    pub second: Moments,
    pub cross: u128,
}

impl PairMoments {
    pub fn of(pair: &PairedShotSeries) -> Self {
        let mut m = PairMoments::default();
        for (&a, &b) in pair.arm1().counts().iter().zip(pair.arm2().counts()) {
            m.add(a, b, 1);
        }
        m
    }

    #[inline]
    pub fn add(&mut self, a: u32, b: u32, weight: u64) {
        self.first.add(a, weight);
        self.second.add(b, weight);
        self.cross += a as u128 * b as u128 * weight as u128;
    }

    pub fn g11(&self) -> Result<f64> {
        if self.first.s1 == 0 || self.second.s1 == 0 {
            return Err(Error::ZeroMean);
        }
        // <m1 m2> / (<m1><m2>) = N cross / (s1a s1b)
        Ok(
            self.first.n as f64 * self.cross as f64
                / (self.first.s1 as f64 * self.second.s1 as f64),
        )
    }
}

pub fn mean(series: &ShotSeries) -> f64 {
    Moments::of(series.counts()).mean()
}

/// Unbiased sample variance.
pub fn variance(series: &ShotSeries) -> f64 {
    Moments::of(series.counts()).variance()
}

/// Variance-to-mean ratio: 1 for Poisson light, above 1 when super-Poissonian.
pub fn fano(series: &ShotSeries) -> Result<f64> {
    Moments::of(series.counts()).fano()
}

/// Autocorrelation of detected counts, `<m^2>/<m>^2`, without shot-noise
/// subtraction. Poisson light gives `1 + 1/<m>`.
pub fn g2_detected(series: &ShotSeries) -> Result<f64> {
    Moments::of(series.counts()).g2_detected()
}

/// Normally-ordered autocorrelation `<n^2>/<n>^2 - 1/<n>`; exactly 1 for
/// Poisson light, 2 for single-mode thermal light, 0 for a one-photon state.
pub fn g2_photon(series: &ShotSeries) -> Result<f64> {
    Moments::of(series.counts()).g2_photon()
}

/// Shot-by-shot cross-correlation `<m1 m2>/(<m1><m2>)` between two arms.
pub fn g11_cross(pair: &PairedShotSeries) -> Result<f64> {
    PairMoments::of(pair).g11()
}

/// Point estimates with bootstrap (1 sigma) uncertainties.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub mean: f64,
    pub variance: f64,
    pub fano: f64,
    pub g2: f64,
    pub g2_uncertainty: f64,
    pub shot_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g11: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g11_uncertainty: Option<f64>,
    pub uncertainty_method: &'static str,
}

impl StatsReport {
    pub fn for_series(series: &ShotSeries, resamples: usize, seed: u64) -> Result<Self> {
        let m = Moments::of(series.counts());
        Ok(Self {
            mean: m.mean(),
            variance: m.variance(),
            fano: m.fano()?,
            g2: m.g2_detected()?,
            g2_uncertainty: bootstrap_uncertainty(
                series.into(),
                Statistic::G2Detected,
                resamples,
                seed,
            )?,
            shot_count: series.len(),
            g11: None,
            g11_uncertainty: None,
            uncertainty_method: UNCERTAINTY_METHOD,
        })
    }

    /// Statistics of `arm1` plus the cross-correlation of the pair.
    pub fn for_pair(pair: &PairedShotSeries, resamples: usize, seed: u64) -> Result<Self> {
        let mut report = Self::for_series(pair.arm1(), resamples, seed)?;
        report.g11 = Some(g11_cross(pair)?);
        report.g11_uncertainty = Some(bootstrap_uncertainty(
            pair.into(),
            Statistic::G11Cross,
            resamples,
            seed,
        )?);
        Ok(report)
    }

    pub fn with_defaults(series: &ShotSeries, seed: u64) -> Result<Self> {
        Self::for_series(series, DEFAULT_RESAMPLES, seed)
    }
}

pub const UNCERTAINTY_METHOD: &str = "bootstrap standard deviation (1 sigma)";
