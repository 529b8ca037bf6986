//! `pnrstat` command-line front end.
//!
//! Precedence: command-line flags override config-file values, which
//! override built-in defaults.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pnrstat::distribution::{empirical_distribution, fidelity_to_poisson};
use pnrstat::experiment::{self, ExperimentConfig, Report, RAW_RECONSTRUCTION_NOTE};
use pnrstat::io::{self, format_real, ShotFile};
use pnrstat::{critical_energy, critical_power, Error, MaterialParams, Result, StatsReport};

#[derive(Parser)]
#[command(
    name = "pnrstat",
    version,
    about = "Photon-number statistics for PNR SiPM detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct Common {
    /// JSON config file (sections: source, detector1, detector2, splitter,
    /// run, sweep, stability).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides run.shots.
    #[arg(long)]
    shots: Option<usize>,
    /// Output directory; created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Format of what is printed to stdout.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a run and write per-shot CSVs.
    Simulate(Common),
    /// Statistics report for a count or paired-count CSV.
    Analyze {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Calibrate an analog pulse-height CSV and reconstruct the pmf.
    Reconstruct {
        input: PathBuf,
        /// Histogram bins (overrides run.histogram_bins).
        #[arg(long)]
        bins: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the sweep described by the config's sweep section.
    Sweep(Common),
    /// Self-focusing critical power and pulse energy of a medium.
    CriticalPower {
        #[arg(long, default_value_t = MaterialParams::YAG_1030.wavelength_m)]
        wavelength_m: f64,
        #[arg(long, default_value_t = MaterialParams::YAG_1030.linear_index)]
        linear_index: f64,
        #[arg(long, default_value_t = MaterialParams::YAG_1030.nonlinear_index_m2_per_w)]
        nonlinear_index: f64,
        #[arg(long, default_value_t = MaterialParams::YAG_1030.pulse_duration_s)]
        pulse_duration_s: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let cfg = match &common.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.with_overrides(common.seed, common.shots)
}

fn out_dir(common: &Common) -> Result<Option<&Path>> {
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
    }
    Ok(common.out.as_deref())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn pmf_csv(probs: &[f64], errs: &[f64]) -> String {
    let mut s = String::from("m,prob,uncertainty\n");
    for (m, (p, e)) in probs.iter().zip(errs).enumerate() {
        s.push_str(&format!("{m},{},{}\n", format_real(*p), format_real(*e)));
    }
    s
}

fn stats_csv(stats: &StatsReport) -> String {
    let mut s = String::from("statistic,value\n");
    let mut row = |k: &str, v: f64| s.push_str(&format!("{k},{}\n", format_real(v)));
    row("mean", stats.mean);
    row("variance", stats.variance);
    row("fano", stats.fano);
    row("g2", stats.g2);
    row("g2_uncertainty", stats.g2_uncertainty);
    row("shot_count", stats.shot_count as f64);
    if let (Some(g), Some(e)) = (stats.g11, stats.g11_uncertainty) {
        row("g11", g);
        row("g11_uncertainty", e);
    }
    s
}

fn simulate(common: &Common) -> Result<String> {
    let cfg = load_config(common)?;
    let acq = experiment::acquire(&cfg)?;
    let analog1 = experiment::analog_arm1(&cfg, &acq)?;
    let analog2 = pnrstat::synthesize_pulse_heights(
        acq.detected.arm2(),
        &cfg.detector2,
        pnrstat::exec::derive_seed(cfg.run.seed, 5),
    )?;
    let mut written = Vec::new();
    if let Some(dir) = out_dir(common)? {
        let files: [(&str, ShotFile); 4] = [
            ("photons.csv", acq.photons.clone().into()),
            ("detected.csv", acq.detected.clone().into()),
            ("analog_arm1.csv", analog1.into()),
            ("analog_arm2.csv", analog2.into()),
        ];
        for (name, data) in &files {
            io::write_shots(&dir.join(name), data)?;
            written.push(dir.join(name).display().to_string());
        }
        let cfg_path = dir.join("config.json");
        write_text(&cfg_path, &cfg.to_json())?;
        written.push(cfg_path.display().to_string());
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        config: &'a ExperimentConfig,
        shots: usize,
        mean_photons: f64,
        mean_detected_arm1: f64,
        mean_detected_arm2: f64,
        files: Vec<String>,
    }
    let summary = Summary {
        config: &cfg,
        shots: acq.photons.len(),
        mean_photons: pnrstat::mean(&acq.photons),
        mean_detected_arm1: pnrstat::mean(acq.detected.arm1()),
        mean_detected_arm2: pnrstat::mean(acq.detected.arm2()),
        files: written,
    };
    Ok(match common.format {
        Format::Json => serde_json::to_string_pretty(&summary).expect("serializes") + "\n",
        Format::Csv => {
            String::from(io::PAIRED_HEADER)
                + "\n"
                + &acq
                    .detected
                    .arm1()
                    .counts()
                    .iter()
                    .zip(acq.detected.arm2().counts())
                    .map(|(a, b)| format!("{a},{b}\n"))
                    .collect::<String>()
        }
    })
}

fn analyze(input: &Path, common: &Common) -> Result<String> {
    let cfg = load_config(common)?;
    let resamples = cfg.run.bootstrap_resamples;
    let seed = cfg.run.seed;
    let (stats, series) = match io::read_shots(input)? {
        ShotFile::Counts(s) => (StatsReport::for_series(&s, resamples, seed)?, s),
        ShotFile::Paired(p) => (
            StatsReport::for_pair(&p, resamples, seed)?,
            p.arm1().clone(),
        ),
        ShotFile::Analog(_) => {
            return Err(Error::InvalidParameter(
                "analog pulse heights need `reconstruct`, not `analyze`".into(),
            ))
        }
    };
    let dist = empirical_distribution(&series);
    let mut report = Report::new(serde_json::json!({
        "input": input.display().to_string(),
        "run": { "seed": seed, "bootstrap_resamples": resamples },
    }));
    report.fidelity = Some(fidelity_to_poisson(&dist)?);
    report.stats = Some(stats.clone());
    report.distribution = Some(experiment::DistributionReport::new(&dist)?);
    let json = report.to_json();
    if let Some(dir) = out_dir(common)? {
        write_text(&dir.join("report.json"), &json)?;
        write_text(
            &dir.join("pmf.csv"),
            &pmf_csv(dist.probs(), dist.uncertainties()),
        )?;
    }
    Ok(match common.format {
        Format::Json => json,
        Format::Csv => stats_csv(&stats),
    })
}

fn reconstruct(input: &Path, bins: Option<usize>, common: &Common) -> Result<String> {
    let mut cfg = load_config(common)?;
    if let Some(b) = bins {
        cfg.run.histogram_bins = b;
        cfg.validate()?;
    }
    let analog = match io::read_shots(input)? {
        ShotFile::Analog(a) => a,
        _ => {
            return Err(Error::InvalidParameter(
                "reconstruct expects an analog CSV with a `value` header".into(),
            ))
        }
    };
    let (cal, mode, hist) = experiment::calibrate_analog(
        &analog,
        &cfg.detector1,
        cfg.run.histogram_bins,
        cfg.run.calibration,
    )?;
    let counts = pnrstat::quantize(&analog, &cal);
    let dist = empirical_distribution(&counts);
    let stats = StatsReport::for_series(&counts, cfg.run.bootstrap_resamples, cfg.run.seed)?;
    let mut report = Report::new(serde_json::json!({
        "input": input.display().to_string(),
        "run": &cfg.run,
        "detector1": &cfg.detector1,
    }));
    report.stats = Some(stats);
    report.fidelity = Some(fidelity_to_poisson(&dist)?);
    report.distribution = Some(experiment::DistributionReport::new(&dist)?);
    report.calibration = Some(experiment::CalibrationReport {
        source: mode,
        calibration: cal,
    });
    report.notes.push(RAW_RECONSTRUCTION_NOTE.into());
    let json = report.to_json();
    if let Some(dir) = out_dir(common)? {
        write_text(&dir.join("report.json"), &json)?;
        write_text(
            &dir.join("pmf.csv"),
            &pmf_csv(dist.probs(), dist.uncertainties()),
        )?;
        io::write_shots(&dir.join("reconstructed.csv"), &counts.into())?;
        if let Some(h) = &hist {
            io::write_histogram(&dir.join("histogram.csv"), h)?;
        }
    }
    Ok(match common.format {
        Format::Json => json,
        Format::Csv => pmf_csv(dist.probs(), dist.uncertainties()),
    })
}

fn sweep(common: &Common) -> Result<String> {
    let cfg = load_config(common)?;
    let result = experiment::run_sweep(&cfg)?;
    let csv = result.to_csv();
    let json = Report::for_sweep(&cfg, result).to_json();
    if let Some(dir) = out_dir(common)? {
        write_text(&dir.join("sweep.csv"), &csv)?;
        write_text(&dir.join("report.json"), &json)?;
    }
    Ok(match common.format {
        Format::Json => json,
        Format::Csv => csv,
    })
}

#[derive(Serialize)]
struct CriticalPowerReport {
    material: MaterialParams,
    critical_power_w: f64,
    critical_energy_j: f64,
    note: &'static str,
}

fn critical(params: MaterialParams, format: Format) -> Result<String> {
    params.validate()?;
    let report = CriticalPowerReport {
        material: params,
        critical_power_w: critical_power(&params),
        critical_energy_j: critical_energy(&params),
        note: "energy = P_cr * pulse duration; for YAG at 1030 nm and 190 fs this is 0.27 uJ, \
               often quoted rounded as 0.3 uJ",
    };
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(&report).expect("serializes") + "\n",
        Format::Csv => format!(
            "critical_power_w,critical_energy_j\n{},{}\n",
            format_real(report.critical_power_w),
            format_real(report.critical_energy_j)
        ),
    })
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Simulate(common) => simulate(&common),
        Command::Analyze { input, common } => analyze(&input, &common),
        Command::Reconstruct {
            input,
            bins,
            common,
        } => reconstruct(&input, bins, &common),
        Command::Sweep(common) => sweep(&common),
        Command::CriticalPower {
            wavelength_m,
            linear_index,
            nonlinear_index,
            pulse_duration_s,
            format,
        } => critical(
            MaterialParams {
                wavelength_m,
                linear_index,
                nonlinear_index_m2_per_w: nonlinear_index,
                pulse_duration_s,
            },
            format,
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
