//! Config-driven analysis campaigns: distribution reconstruction from pulse
//! heights, pump-energy sweeps and mean-photon-number sweeps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_uncertainty, Statistic, DEFAULT_RESAMPLES};
use crate::detector::{self, AnalogShotSeries, DetectorConfig, SplitterConfig};
use crate::distribution::{empirical_distribution, fidelity_to_poisson, PhotonNumberDistribution};
use crate::error::{Error, Result};
use crate::exec;
use crate::io::format_real;
use crate::phs::{self, Histogram, PhsCalibration, DEFAULT_BINS};
use crate::series::{PairedShotSeries, ShotSeries};
use crate::source::{self, PumpStabilityModel, SourceKind, SourceSpec};
use crate::stats::{self, StatsReport};

pub const DEFAULT_SHOTS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 1;

const ARM1: u64 = 1;
const ARM2: u64 = 2;
const ANALOG: u64 = 3;
const BOOT: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    /// Derive the calibration from the run's own pulse-height spectrum.
    Spectrum,
    /// Use the detector's nominal gain with the zero-photon peak at 0.
    Nominal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub shots: usize,
    pub seed: u64,
    pub bootstrap_resamples: usize,
    pub histogram_bins: usize,
    pub calibration: CalibrationMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            shots: DEFAULT_SHOTS,
            seed: DEFAULT_SEED,
            bootstrap_resamples: DEFAULT_RESAMPLES,
            histogram_bins: DEFAULT_BINS,
            calibration: CalibrationMode::Spectrum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Pump pulse energy in joules; source gain variance follows the
    /// stability table.
    PumpEnergy,
    /// Target mean detected photons in arm 1.
    MeanPhotons,
    /// Neutral-density transmittance applied to the configured source mean.
    NdTransmittance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub source: SourceSpec,
    pub detector1: DetectorConfig,
    pub detector2: DetectorConfig,
    pub splitter: SplitterConfig,
    pub run: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<PumpStabilityModel>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            source: SourceSpec::poisson(14.0),
            detector1: DetectorConfig::default(),
            detector2: DetectorConfig::default(),
            splitter: SplitterConfig::default(),
            run: RunConfig::default(),
            sweep: None,
            stability: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Command-line values take precedence over the file.
    pub fn with_overrides(mut self, seed: Option<u64>, shots: Option<usize>) -> Result<Self> {
        if let Some(seed) = seed {
            self.run.seed = seed;
        }
        if let Some(shots) = shots {
            self.run.shots = shots;
        }
        self.validate()?;
        Ok(self)
    }

    /// Range checks; all failures surface as config errors.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.source.validate().map_err(cfg_err)?;
        self.detector1.validate().map_err(cfg_err)?;
        self.detector2.validate().map_err(cfg_err)?;
        self.splitter.validate().map_err(cfg_err)?;
        if let Some(st) = &self.stability {
            st.validate().map_err(cfg_err)?;
        }
        if self.run.shots == 0 {
            return Err(Error::Config("run.shots must be >= 1".into()));
        }
        if self.run.bootstrap_resamples < crate::bootstrap::MIN_RESAMPLES {
            return Err(Error::Config(format!(
                "run.bootstrap_resamples must be >= {}",
                crate::bootstrap::MIN_RESAMPLES
            )));
        }
        if self.run.histogram_bins < phs::MIN_BINS {
            return Err(Error::Config(format!(
                "run.histogram_bins must be >= {}",
                phs::MIN_BINS
            )));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() || sweep.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(
                    "sweep.values must be non-empty and finite".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Photons split at the beam splitter and counted by both detectors.
#[derive(Debug, Clone)]
pub struct Acquisition {
    pub photons: ShotSeries,
    pub split: PairedShotSeries,
    pub detected: PairedShotSeries,
}

/// Source, splitter and both detectors for one configuration.
pub fn acquire(cfg: &ExperimentConfig) -> Result<Acquisition> {
    let seed = cfg.run.seed;
    let photons = source::draw_shots(&cfg.source, cfg.run.shots, seed)?;
    let split = detector::split_beam(&photons, &cfg.splitter, seed)?;
    let d1 = detector::detect(split.arm1(), &cfg.detector1, exec::derive_seed(seed, ARM1))?;
    let d2 = detector::detect(split.arm2(), &cfg.detector2, exec::derive_seed(seed, ARM2))?;
    let detected = PairedShotSeries::new(d1.with_label("arm1"), d2.with_label("arm2"))?;
    Ok(Acquisition {
        photons,
        split,
        detected,
    })
}

/// Arm-1 pulse heights for an acquisition.
pub fn analog_arm1(cfg: &ExperimentConfig, acq: &Acquisition) -> Result<AnalogShotSeries> {
    detector::synthesize_pulse_heights(
        acq.detected.arm1(),
        &cfg.detector1,
        exec::derive_seed(cfg.run.seed, ANALOG),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub source: CalibrationMode,
    #[serde(flatten)]
    pub calibration: PhsCalibration,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistributionReport {
    pub probs: Vec<f64>,
    pub uncertainties: Vec<f64>,
    pub sample_count: u64,
    pub poisson_reference: Vec<f64>,
}

impl DistributionReport {
    pub fn new(d: &PhotonNumberDistribution) -> Result<Self> {
        let reference = crate::distribution::poisson_pmf(d.mean(), d.max_m())?;
        Ok(Self {
            probs: d.probs().to_vec(),
            uncertainties: d.uncertainties().to_vec(),
            sample_count: d.sample_count(),
            poisson_reference: reference.probs().to_vec(),
        })
    }
}

/// Result of the pulse-height reconstruction pipeline.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub distribution: PhotonNumberDistribution,
    pub stats: StatsReport,
    pub fidelity: f64,
    pub calibration: PhsCalibration,
    pub calibration_mode: CalibrationMode,
    pub histogram: Option<Histogram>,
    pub reconstructed: ShotSeries,
    /// Fired-cell counts before the analog stage (simulation ground truth).
    pub truth: ShotSeries,
}

impl Reconstruction {
    /// Fraction of shots whose reconstructed count differs from the truth.
    pub fn misclassification_rate(&self) -> f64 {
        let wrong = self
            .reconstructed
            .counts()
            .iter()
            .zip(self.truth.counts())
            .filter(|(a, b)| a != b)
            .count();
        wrong as f64 / self.truth.len() as f64
    }
}

/// Calibrates `analog` from its own spectrum, or from the detector's nominal
/// gain when asked to or when the spectrum has a single distinct value.
pub fn calibrate_analog(
    analog: &AnalogShotSeries,
    detector: &DetectorConfig,
    bins: usize,
    mode: CalibrationMode,
) -> Result<(PhsCalibration, CalibrationMode, Option<Histogram>)> {
    let nominal = || {
        let top = analog.values().iter().copied().fold(0.0, f64::max);
        let thresholds = (top / detector.gain).ceil().max(0.0) as usize + 1;
        PhsCalibration::midpoint(0.0, detector.gain, thresholds)
    };
    if mode == CalibrationMode::Nominal {
        return Ok((nominal()?, CalibrationMode::Nominal, None));
    }
    match phs::build_histogram(analog, bins) {
        Ok(hist) => {
            let cal = phs::calibrate(&hist)?;
            Ok((cal, CalibrationMode::Spectrum, Some(hist)))
        }
        Err(Error::DegenerateRange(_)) => Ok((nominal()?, CalibrationMode::Nominal, None)),
        Err(e) => Err(e),
    }
}

/// Source -> split -> detect (arm 1) -> pulse heights -> calibrate ->
/// quantize -> pmf, with fidelity against Poisson at the measured mean.
pub fn run_reconstruction(cfg: &ExperimentConfig) -> Result<Reconstruction> {
    cfg.validate()?;
    let acq = acquire(cfg)?;
    let analog = analog_arm1(cfg, &acq)?;
    let (calibration, calibration_mode, histogram) = calibrate_analog(
        &analog,
        &cfg.detector1,
        cfg.run.histogram_bins,
        cfg.run.calibration,
    )?;
    let reconstructed = phs::quantize(&analog, &calibration);
    let distribution = empirical_distribution(&reconstructed);
    let stats = StatsReport::for_series(
        &reconstructed,
        cfg.run.bootstrap_resamples,
        exec::derive_seed(cfg.run.seed, BOOT),
    )?;
    let fidelity = fidelity_to_poisson(&distribution)?;
    Ok(Reconstruction {
        distribution,
        stats,
        fidelity,
        calibration,
        calibration_mode,
        histogram,
        reconstructed,
        truth: acq.detected.arm1().clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter_value: f64,
    pub mean1: f64,
    pub mean2: f64,
    pub g2_1: f64,
    pub g2_1_err: f64,
    pub g2_2: f64,
    pub g2_2_err: f64,
    pub g11: f64,
    pub g11_err: f64,
    pub fidelity_to_poisson: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_CSV_HEADER: &str =
    "parameter_value,mean1,mean2,g2_1,g2_1_err,g2_2,g2_2_err,g11,g11_err,fidelity_to_poisson";

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let fields = [
                r.parameter_value,
                r.mean1,
                r.mean2,
                r.g2_1,
                r.g2_1_err,
                r.g2_2,
                r.g2_2_err,
                r.g11,
                r.g11_err,
                r.fidelity_to_poisson,
            ];
            let line: Vec<String> = fields.iter().map(|&v| format_real(v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Counting statistics of both arms for one configuration (no analog stage).
pub fn run_point(cfg: &ExperimentConfig, parameter_value: f64) -> Result<SweepRow> {
    let acq = acquire(cfg)?;
    let (a1, a2) = (acq.detected.arm1(), acq.detected.arm2());
    let resamples = cfg.run.bootstrap_resamples;
    let boot_seed = exec::derive_seed(cfg.run.seed, BOOT);
    let err = |s: &ShotSeries| {
        bootstrap_uncertainty(s.into(), Statistic::G2Detected, resamples, boot_seed)
    };
    Ok(SweepRow {
        parameter_value,
        mean1: stats::mean(a1),
        mean2: stats::mean(a2),
        g2_1: stats::g2_detected(a1)?,
        g2_1_err: err(a1)?,
        g2_2: stats::g2_detected(a2)?,
        g2_2_err: err(a2)?,
        g11: stats::g11_cross(&acq.detected)?,
        g11_err: bootstrap_uncertainty(
            (&acq.detected).into(),
            Statistic::G11Cross,
            resamples,
            boot_seed,
        )?,
        fidelity_to_poisson: fidelity_to_poisson(&empirical_distribution(a1))?,
    })
}

fn sweep_values(cfg: &ExperimentConfig, expected: &[SweepParameter]) -> Result<SweepConfig> {
    cfg.validate()?;
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("missing sweep section".into()))?;
    if !expected.contains(&sweep.parameter) {
        return Err(Error::Config(format!(
            "sweep.parameter {:?} not valid here (expected one of {expected:?})",
            sweep.parameter
        )));
    }
    Ok(sweep)
}

fn run_rows(
    cfg: &ExperimentConfig,
    sweep: &SweepConfig,
    point: impl Fn(f64) -> Result<ExperimentConfig> + Sync + Send,
) -> Result<SweepResult> {
    // Every point reuses the run seed, so neighbouring points share their
    // random numbers and differences reflect the parameter only.
    let rows: Result<Vec<SweepRow>> = exec::map_indexed(sweep.values.len(), |i| {
        let v = sweep.values[i];
        run_point(&point(v)?, v)
    })
    .into_iter()
    .collect();
    let _ = cfg;
    Ok(SweepResult {
        parameter: sweep.parameter,
        rows: rows?,
    })
}

/// Statistics versus pump pulse energy. The source mean is held fixed, as a
/// neutral-density filter would after the nonlinear stages, so only the
/// gain fluctuations from the stability table change between points.
pub fn run_power_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let sweep = sweep_values(cfg, &[SweepParameter::PumpEnergy])?;
    let model = cfg
        .stability
        .clone()
        .ok_or_else(|| Error::Config("power sweep needs a stability section".into()))?;
    for &e in &sweep.values {
        source::stability_lookup(&model, e)?;
    }
    run_rows(cfg, &sweep, |energy| {
        let gain_variance = source::stability_lookup(&model, energy)?;
        let mut point = cfg.clone();
        point.source = SourceSpec::compound_poisson(cfg.source.mean_photons, gain_variance);
        point.sweep = None;
        Ok(point)
    })
}

/// Statistics versus brightness for a stable source.
pub fn run_mean_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let sweep = sweep_values(
        cfg,
        &[SweepParameter::MeanPhotons, SweepParameter::NdTransmittance],
    )?;
    if cfg.source.kind == SourceKind::CompoundPoisson && cfg.source.gain_variance > 0.0 {
        return Err(Error::Config(
            "mean sweep expects a stable source (gain_variance = 0)".into(),
        ));
    }
    for &v in &sweep.values {
        let ok = match sweep.parameter {
            SweepParameter::NdTransmittance => (0.0..=1.0).contains(&v),
            _ => v >= 0.0,
        };
        if !ok {
            return Err(Error::Config(format!("sweep value {v} out of range")));
        }
    }
    let per_photon = cfg.splitter.transmittance * cfg.detector1.efficiency;
    if sweep.parameter == SweepParameter::MeanPhotons && per_photon <= 0.0 {
        return Err(Error::Config(
            "mean_photons sweep needs nonzero transmittance and efficiency".into(),
        ));
    }
    run_rows(cfg, &sweep, |v| {
        let mut point = cfg.clone();
        point.source.mean_photons = match sweep.parameter {
            SweepParameter::MeanPhotons => v / per_photon,
            _ => cfg.source.mean_photons * v,
        };
        point.sweep = None;
        Ok(point)
    })
}

/// Dispatches on `sweep.parameter`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    match cfg.sweep.as_ref().map(|s| s.parameter) {
        Some(SweepParameter::PumpEnergy) => run_power_sweep(cfg),
        Some(_) => run_mean_sweep(cfg),
        None => Err(Error::Config("missing sweep section".into())),
    }
}

/// Single JSON document describing one run.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<StatsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(config: impl Serialize) -> Self {
        Self {
            config: serde_json::to_value(config).expect("config serializes"),
            stats: None,
            distribution: None,
            fidelity: None,
            calibration: None,
            sweep: None,
            notes: Vec::new(),
        }
    }

    pub fn for_reconstruction(cfg: &ExperimentConfig, r: &Reconstruction) -> Result<Self> {
        let mut report = Self::new(cfg);
        report.stats = Some(r.stats.clone());
        report.distribution = Some(DistributionReport::new(&r.distribution)?);
        report.fidelity = Some(r.fidelity);
        report.calibration = Some(CalibrationReport {
            source: r.calibration_mode,
            calibration: r.calibration.clone(),
        });
        report.notes.push(RAW_RECONSTRUCTION_NOTE.into());
        Ok(report)
    }

    pub fn for_sweep(cfg: &ExperimentConfig, sweep: SweepResult) -> Self {
        let mut report = Self::new(cfg);
        report.sweep = Some(sweep);
        report
            .notes
            .push(format!("errors: {}", stats::UNCERTAINTY_METHOD));
        report
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub const RAW_RECONSTRUCTION_NOTE: &str =
    "distribution is the raw reconstruction: no dark-count or cross-talk correction applied";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err =
            ExperimentConfig::from_json(r#"{"source": {"kind": "poisson", "mean_photon": 3}}"#);
        assert!(matches!(err, Err(Error::Config(_))));
        let err = ExperimentConfig::from_json(r#"{"detector1": {"efficiency": 0.5, "gian": 1}}"#);
        assert!(matches!(err, Err(Error::Config(_))));
        let err = ExperimentConfig::from_json(r#"{"extra": {}}"#);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn missing_sections_take_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"run": {"shots": 10}}"#).unwrap();
        assert_eq!(cfg.run.shots, 10);
        assert_eq!(cfg.detector1, DetectorConfig::default());
        assert_eq!(cfg.run.seed, DEFAULT_SEED);
    }

    #[test]
    fn overrides_take_precedence() {
        let cfg = ExperimentConfig::from_json(r#"{"run": {"shots": 10, "seed": 5}}"#)
            .unwrap()
            .with_overrides(Some(9), None)
            .unwrap();
        assert_eq!((cfg.run.seed, cfg.run.shots), (9, 10));
        assert!(ExperimentConfig::default()
            .with_overrides(None, Some(0))
            .is_err());
    }

    #[test]
    fn empty_or_nonfinite_sweep_rejected() {
        let e = ExperimentConfig::from_json(
            r#"{"sweep": {"parameter": "mean_photons", "values": []}}"#,
        );
        assert!(matches!(e, Err(Error::Config(_))));
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ExperimentConfig {
            stability: Some(PumpStabilityModel::default()),
            sweep: Some(SweepConfig {
                parameter: SweepParameter::PumpEnergy,
                values: vec![1.3e-6, 1.9e-6],
            }),
            ..ExperimentConfig::default()
        };
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn single_shot_reconstruction_is_point_mass() {
        let mut cfg = ExperimentConfig {
            source: SourceSpec::constant(3.0),
            detector1: DetectorConfig::ideal(),
            ..ExperimentConfig::default()
        };
        cfg.splitter.transmittance = 1.0;
        cfg.run.shots = 1;
        let r = run_reconstruction(&cfg).unwrap();
        assert_eq!(r.calibration_mode, CalibrationMode::Nominal);
        assert_eq!(r.distribution.probs(), &[0.0, 0.0, 0.0, 1.0]);
        let p3 = crate::distribution::poisson_pmf(3.0, 3).unwrap().prob(3);
        assert!((r.fidelity - p3.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn power_sweep_requires_stability_and_range() {
        let mut cfg = ExperimentConfig::default();
        cfg.run.shots = 1000;
        cfg.sweep = Some(SweepConfig {
            parameter: SweepParameter::PumpEnergy,
            values: vec![1.5e-6],
        });
        assert!(matches!(run_power_sweep(&cfg), Err(Error::Config(_))));
        cfg.stability = Some(PumpStabilityModel::default());
        cfg.sweep.as_mut().unwrap().values = vec![3.0e-6];
        assert!(matches!(
            run_power_sweep(&cfg),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn mean_sweep_rejects_unstable_source() {
        let cfg = ExperimentConfig {
            source: SourceSpec::compound_poisson(10.0, 0.1),
            sweep: Some(SweepConfig {
                parameter: SweepParameter::MeanPhotons,
                values: vec![1.0],
            }),
            ..ExperimentConfig::default()
        };
        assert!(matches!(run_mean_sweep(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn sweep_csv_has_one_line_per_row() {
        let mut cfg = ExperimentConfig::default();
        cfg.run.shots = 2000;
        cfg.run.bootstrap_resamples = 100;
        cfg.sweep = Some(SweepConfig {
            parameter: SweepParameter::NdTransmittance,
            values: vec![1.0, 0.5],
        });
        let res = run_sweep(&cfg).unwrap();
        let csv = res.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with(SWEEP_CSV_HEADER));
    }
}
