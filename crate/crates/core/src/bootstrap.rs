//! Seeded bootstrap error bars.
//!
//! A resample-with-replacement of N shots only changes how often each
//! distinct count (or count pair) occurs, so each resample is drawn as a
//! multinomial over the distinct values via sequential binomials. This is
//! distribution-identical to index resampling and costs O(distinct values)
//! instead of O(N) per resample.

use std::collections::BTreeMap;

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Stage};
use crate::series::{PairedShotSeries, ShotSeries};
use crate::stats::{Moments, PairMoments};

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const MIN_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    Variance,
    Fano,
    G2Detected,
    G2Photon,
    G11Cross,
}

/// Input to the bootstrap. Single-arm statistics on a pair use `arm1`.
#[derive(Debug, Clone, Copy)]
pub enum Sample<'a> {
    Single(&'a ShotSeries),
    Paired(&'a PairedShotSeries),
}

impl<'a> From<&'a ShotSeries> for Sample<'a> {
    fn from(s: &'a ShotSeries) -> Self {
        Sample::Single(s)
    }
}

impl<'a> From<&'a PairedShotSeries> for Sample<'a> {
    fn from(p: &'a PairedShotSeries) -> Self {
        Sample::Paired(p)
    }
}

fn single(m: &Moments, stat: Statistic) -> Result<f64> {
    match stat {
        Statistic::Mean => Ok(m.mean()),
        Statistic::Variance => Ok(m.variance()),
        Statistic::Fano => m.fano(),
        Statistic::G2Detected => m.g2_detected(),
        Statistic::G2Photon => m.g2_photon(),
        Statistic::G11Cross => Err(Error::InvalidParameter(
            "g11_cross needs a paired series".into(),
        )),
    }
}

/// Distinct values with their multiplicities, in ascending order.
fn tally<K: Ord + Copy>(keys: impl Iterator<Item = K>) -> (Vec<K>, Vec<u64>) {
    let mut map = BTreeMap::new();
    for k in keys {
        *map.entry(k).or_insert(0u64) += 1;
    }
    map.into_iter().unzip()
}

/// Multinomial resample of `total` draws over categories with `weights`.
fn resample_weights<R: rand::Rng>(rng: &mut R, weights: &[u64], out: &mut Vec<u64>) {
    let total: u64 = weights.iter().sum();
    out.clear();
    let mut remaining_draws = total;
    let mut remaining_weight = total;
    for (i, &w) in weights.iter().enumerate() {
        let k = if i + 1 == weights.len() || remaining_draws == 0 {
            remaining_draws
        } else {
            let p = w as f64 / remaining_weight as f64;
            Binomial::new(remaining_draws, p.min(1.0))
                .expect("probability in [0, 1]")
                .sample(rng)
        };
        out.push(k);
        remaining_draws -= k;
        remaining_weight -= w;
    }
}

fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Standard deviation of `statistic` over `resamples` seeded bootstrap
/// resamples. Resample `r` always uses substream `(seed, r)`, so the result
/// is bit-identical for any thread count.
pub fn bootstrap_uncertainty(
    sample: Sample<'_>,
    statistic: Statistic,
    resamples: usize,
    seed: u64,
) -> Result<f64> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {resamples}"
        )));
    }
    let replicates: Vec<Result<f64>> = match (sample, statistic) {
        (Sample::Paired(pair), Statistic::G11Cross) => {
            let (keys, weights) = tally(
                pair.arm1()
                    .counts()
                    .iter()
                    .copied()
                    .zip(pair.arm2().counts().iter().copied()),
            );
            // The point estimate must exist for the bootstrap to make sense.
            PairMoments::of(pair).g11()?;
            exec::map_indexed(resamples, |r| {
                let mut rng = exec::substream(seed, Stage::Bootstrap, r as u64);
                let mut w = Vec::with_capacity(weights.len());
                resample_weights(&mut rng, &weights, &mut w);
                let mut m = PairMoments::default();
                for (&(a, b), &k) in keys.iter().zip(&w) {
                    m.add(a, b, k);
                }
                m.g11()
            })
        }
        (sample, stat) => {
            let series = match sample {
                Sample::Single(s) => s,
                Sample::Paired(p) => p.arm1(),
            };
            let (keys, weights) = tally(series.counts().iter().copied());
            single(&Moments::of(series.counts()), stat)?;
            exec::map_indexed(resamples, |r| {
                let mut rng = exec::substream(seed, Stage::Bootstrap, r as u64);
                let mut w = Vec::with_capacity(weights.len());
                resample_weights(&mut rng, &weights, &mut w);
                let mut m = Moments::default();
                for (&v, &k) in keys.iter().zip(&w) {
                    m.add(v, k);
                }
                single(&m, stat)
            })
        }
    };
    // A resample can lose every nonzero shot (tiny, sparse series); those
    // replicates carry no information and are skipped.
    let values: Vec<f64> = replicates.into_iter().filter_map(|r| r.ok()).collect();
    if values.len() < 2 {
        return Err(Error::ZeroMean);
    }
    Ok(std_dev(&values))
}
