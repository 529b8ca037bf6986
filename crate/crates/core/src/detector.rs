//! SiPM measurement chain: beam splitting, quantum-efficiency loss, finite
//! cell occupancy, dark counts, optical cross-talk and the analog
//! pulse-height stage. One call processes one gated acquisition per shot.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Stage};
use crate::series::{PairedShotSeries, ShotSeries};
use crate::source::poisson_draw;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    /// Per-photon detection probability.
    pub efficiency: f64,
    /// Mean dark-fired cells per gate.
    pub dark_mean: f64,
    /// Branching parameter of the cross-talk cascade; must stay below 1.
    pub crosstalk: f64,
    pub cell_count: u32,
    /// Analog units per fired cell.
    pub gain: f64,
    /// Standard deviation of the single-cell gain.
    pub gain_spread: f64,
    /// Standard deviation of the additive electronic noise.
    pub baseline_noise: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            efficiency: 0.4,
            dark_mean: 0.003,
            crosstalk: 0.0,
            cell_count: 667,
            gain: 100.0,
            gain_spread: 3.0,
            baseline_noise: 4.0,
        }
    }
}

impl DetectorConfig {
    /// Lossless, noiseless detector with effectively unlimited cells.
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_mean: 0.0,
            crosstalk: 0.0,
            cell_count: u32::MAX,
            gain: 100.0,
            gain_spread: 0.0,
            baseline_noise: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |what: &'static str, value: f64, low: f64, high: f64, ok: bool| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(Error::OutOfRange {
                    what,
                    value,
                    low,
                    high,
                })
            }
        };
        let e = self.efficiency;
        check("efficiency", e, 0.0, 1.0, (0.0..=1.0).contains(&e))?;
        check(
            "dark_mean",
            self.dark_mean,
            0.0,
            f64::INFINITY,
            self.dark_mean >= 0.0,
        )?;
        let c = self.crosstalk;
        check("crosstalk", c, 0.0, 1.0, (0.0..1.0).contains(&c))?;
        let cells = self.cell_count as f64;
        check(
            "cell_count",
            cells,
            1.0,
            u32::MAX as f64,
            self.cell_count >= 1,
        )?;
        check("gain", self.gain, 0.0, f64::INFINITY, self.gain > 0.0)?;
        let s = self.gain_spread;
        check("gain_spread", s, 0.0, f64::INFINITY, s >= 0.0)?;
        let n = self.baseline_noise;
        check("baseline_noise", n, 0.0, f64::INFINITY, n >= 0.0)
    }
}

/// Beam-splitter balance: probability that a photon leaves through arm 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitterConfig {
    pub transmittance: f64,
}

impl Default for SplitterConfig {
    fn default() -> Self {
        Self { transmittance: 0.5 }
    }
}

impl SplitterConfig {
    pub fn validate(&self) -> Result<()> {
        let t = self.transmittance;
        if (0.0..=1.0).contains(&t) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "transmittance",
                value: t,
                low: 0.0,
                high: 1.0,
            })
        }
    }
}

/// Integrated pulse heights, one per gate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalogShotSeries {
    values: Vec<f64>,
    config_echo: Option<DetectorConfig>,
}

impl AnalogShotSeries {
    pub fn new(values: Vec<f64>, config_echo: Option<DetectorConfig>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        Ok(Self {
            values,
            config_echo,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn config_echo(&self) -> Option<&DetectorConfig> {
        self.config_echo.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same series with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            config_echo: self.config_echo,
        }
    }
}

#[inline]
fn thin<R: Rng + ?Sized>(rng: &mut R, n: u32, p: f64) -> u32 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n as u64, p).expect("p in (0, 1)").sample(rng) as u32
    }
}

/// Routes each photon to arm 1 with probability `transmittance`, otherwise
/// to arm 2. Photon number is conserved shot by shot.
pub fn split_beam(
    photons: &ShotSeries,
    splitter: &SplitterConfig,
    seed: u64,
) -> Result<PairedShotSeries> {
    splitter.validate()?;
    let t = splitter.transmittance;
    let mut arm1 = vec![0u32; photons.len()];
    exec::for_each_block(
        seed,
        Stage::Split,
        photons.counts(),
        &mut arm1,
        |rng, inp, out| {
            for (o, &n) in out.iter_mut().zip(inp) {
                *o = thin(rng, n, t);
            }
        },
    );
    let arm2: Vec<u32> = photons
        .counts()
        .iter()
        .zip(&arm1)
        .map(|(n, a)| n - a)
        .collect();
    PairedShotSeries::new(
        ShotSeries::labeled(arm1, "arm1")?,
        ShotSeries::labeled(arm2, "arm2")?,
    )
}

/// Number of distinct cells hit when `hits` land uniformly at random on
/// `cells` cells that already have `occupied` fired.
#[inline]
fn occupy<R: Rng + ?Sized>(rng: &mut R, hits: u32, occupied: u32, cells: u32) -> u32 {
    let mut fired = occupied;
    for _ in 0..hits {
        if fired >= cells {
            break;
        }
        // A hit fires a new cell unless it lands on one already fired.
        if rng.random_range(0..cells) >= fired {
            fired += 1;
        }
    }
    fired
}

/// Borel cascade: every fired cell triggers Poisson(`lambda`) secondaries,
/// which trigger their own, until extinction or saturation.
#[inline]
fn cascade<R: Rng + ?Sized>(rng: &mut R, primaries: u32, lambda: f64, cells: u32) -> u32 {
    if lambda <= 0.0 {
        return primaries;
    }
    let mut total = primaries as u64;
    let mut pending = primaries as u64;
    while pending > 0 && total < cells as u64 {
        let born = poisson_draw(rng, lambda * pending as f64) as u64;
        total += born;
        pending = born;
    }
    total.min(cells as u64) as u32
}

/// Fired-cell count per gate for the given incident photon numbers.
///
/// Per shot: photons survive with probability `efficiency`; survivors land
/// on uniformly random cells, a cell firing at most once; Poisson dark
/// firings are added on free cells; every fired cell seeds a cross-talk
/// cascade; the total is capped at `cell_count`. Each stage draws from its
/// own substream, so changing one parameter leaves the other stages'
/// randomness untouched.
pub fn detect(photons: &ShotSeries, config: &DetectorConfig, seed: u64) -> Result<ShotSeries> {
    config.validate()?;
    let cfg = *config;
    let cells = cfg.cell_count;
    let mut fired = vec![0u32; photons.len()];
    exec::for_each_block_indexed(photons.counts(), &mut fired, |block, inp, out| {
        let mut loss_rng = exec::substream(seed, Stage::Loss, block);
        let mut dark_rng = exec::substream(seed, Stage::Dark, block);
        let mut ct_rng = exec::substream(seed, Stage::Crosstalk, block);
        for (o, &n) in out.iter_mut().zip(inp) {
            let survivors = thin(&mut loss_rng, n, cfg.efficiency);
            let lit = occupy(&mut loss_rng, survivors, 0, cells);
            let dark = poisson_draw(&mut dark_rng, cfg.dark_mean);
            let primaries = lit.saturating_add(dark).min(cells);
            *o = cascade(&mut ct_rng, primaries, cfg.crosstalk, cells);
        }
    });
    ShotSeries::labeled(fired, "fired")
}

/// Mean cascade size per primary fired cell, `1 / (1 - lambda)`.
pub fn crosstalk_cascade_mean(crosstalk: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&crosstalk) {
        return Err(Error::OutOfRange {
            what: "crosstalk",
            value: crosstalk,
            low: 0.0,
            high: 1.0,
        });
    }
    Ok(1.0 / (1.0 - crosstalk))
}

/// Integrated pulse height per gate: the sum of `fired` single-cell
/// amplitudes, each Normal(gain, gain_spread), plus Normal(0, baseline_noise).
/// The per-cell sum is drawn in closed form as Normal(k gain, sqrt(k) spread).
pub fn synthesize_pulse_heights(
    fired: &ShotSeries,
    config: &DetectorConfig,
    seed: u64,
) -> Result<AnalogShotSeries> {
    config.validate()?;
    let cfg = *config;
    let mut values = vec![0.0f64; fired.len()];
    exec::for_each_block(
        seed,
        Stage::Analog,
        fired.counts(),
        &mut values,
        |rng, inp, out| {
            for (v, &k) in out.iter_mut().zip(inp) {
                let cell: f64 = rng.sample(StandardNormal);
                let base: f64 = rng.sample(StandardNormal);
                let k = k as f64;
                *v = k * cfg.gain + k.sqrt() * cfg.gain_spread * cell + cfg.baseline_noise * base;
            }
        },
    );
    AnalogShotSeries::new(values, Some(cfg))
}
