use pnrstat::experiment::{
    run_mean_sweep, run_point, run_power_sweep, run_reconstruction, ExperimentConfig, SweepConfig,
    SweepParameter,
};
use pnrstat::*;

fn ideal_config(shots: usize) -> ExperimentConfig {
    let det = DetectorConfig {
        dark_mean: 0.0,
        cell_count: u32::MAX,
        ..DetectorConfig::default()
    };
    let mut cfg = ExperimentConfig {
        detector1: det,
        detector2: det,
        ..ExperimentConfig::default()
    };
    cfg.run.shots = shots;
    cfg
}

fn sweep(parameter: SweepParameter, values: &[f64]) -> Option<SweepConfig> {
    Some(SweepConfig {
        parameter,
        values: values.to_vec(),
    })
}

#[test]
fn stable_pump_reconstruction_beats_unstable() {
    // detected mean 4.77 in arm 1: n = 4.77 / (0.5 * 0.4)
    let mut cfg = ExperimentConfig {
        source: SourceSpec::poisson(4.77 / 0.2),
        ..ExperimentConfig::default()
    };
    let stable = run_reconstruction(&cfg).unwrap();
    assert!(
        (stable.stats.mean - 4.77).abs() < 0.05,
        "{}",
        stable.stats.mean
    );
    assert!(stable.fidelity >= 0.999, "{}", stable.fidelity);

    cfg.source = SourceSpec::compound_poisson(4.77 / 0.2, 0.05);
    let unstable = run_reconstruction(&cfg).unwrap();
    assert!(
        unstable.fidelity < stable.fidelity - 5e-4,
        "{} vs {}",
        unstable.fidelity,
        stable.fidelity
    );
}

#[test]
fn power_sweep_in_poisson_regime() {
    let mut cfg = ideal_config(100_000);
    cfg.source = SourceSpec::poisson(28.0);
    cfg.stability = Some(PumpStabilityModel::default());
    cfg.sweep = sweep(
        SweepParameter::PumpEnergy,
        &[1.6e-6, 1.7e-6, 1.8e-6, 2.0e-6],
    );
    let res = run_power_sweep(&cfg).unwrap();
    assert_eq!(res.rows.len(), 4);
    for r in &res.rows {
        assert!((r.g2_1 - (1.0 + 1.0 / r.mean1)).abs() <= 3.0 * r.g2_1_err);
        assert!((r.g2_2 - (1.0 + 1.0 / r.mean2)).abs() <= 3.0 * r.g2_2_err);
        assert!((r.g11 - 1.0).abs() <= 3.0 * r.g11_err);
    }
}

#[test]
fn power_sweep_with_default_table() {
    let mut cfg = ideal_config(100_000);
    cfg.source = SourceSpec::poisson(28.0);
    cfg.stability = Some(PumpStabilityModel::default());
    let energies = [
        1.2e-6, 1.3e-6, 1.4e-6, 1.5e-6, 1.57e-6, 1.6e-6, 1.7e-6, 1.8e-6, 1.9e-6, 2.0e-6,
    ];
    cfg.sweep = sweep(SweepParameter::PumpEnergy, &energies);
    let res = run_power_sweep(&cfg).unwrap();
    for w in res.rows.windows(2) {
        assert!(w[1].g2_1 <= w[0].g2_1, "{:?}", w);
    }
    for r in &res.rows {
        if r.parameter_value < 1.58e-6 {
            assert!(r.g11 > 1.02, "{r:?}");
        } else {
            assert!((r.g11 - 1.0).abs() < 0.01, "{r:?}");
        }
        assert!(r.g2_1 >= 1.0 && r.g2_1_err >= 0.0 && r.g11_err >= 0.0);
    }
}

#[test]
fn single_point_sweep_equals_point_run() {
    let mut cfg = ideal_config(20_000);
    cfg.stability = Some(PumpStabilityModel::default());
    cfg.sweep = sweep(SweepParameter::PumpEnergy, &[1.45e-6]);
    let res = run_power_sweep(&cfg).unwrap();
    let mut point = cfg.clone();
    let var = stability_lookup(&PumpStabilityModel::default(), 1.45e-6).unwrap();
    point.source = SourceSpec::compound_poisson(cfg.source.mean_photons, var);
    point.sweep = None;
    assert_eq!(res.rows, vec![run_point(&point, 1.45e-6).unwrap()]);
}

#[test]
fn mean_sweep_tracks_poisson_expectations() {
    let mut cfg = ideal_config(100_000);
    cfg.sweep = sweep(SweepParameter::MeanPhotons, &[0.5, 1.0, 2.0, 4.0, 8.0]);
    let res = run_mean_sweep(&cfg).unwrap();
    let at_two = &res.rows[2];
    assert!((at_two.mean1 - 2.0).abs() < 0.02);
    assert!((at_two.g2_1 - 1.5).abs() < 0.02, "{at_two:?}");
    let worst = res
        .rows
        .iter()
        .map(|r| (r.g11 - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.015, "{worst}");
}

#[test]
fn nd_sweep_scales_means_linearly() {
    let mut cfg = ideal_config(100_000);
    cfg.source = SourceSpec::poisson(20.0);
    cfg.sweep = sweep(SweepParameter::NdTransmittance, &[1.0, 0.5, 0.25]);
    let res = run_mean_sweep(&cfg).unwrap();
    let full = res.rows[0].mean1;
    for r in &res.rows {
        let expected = full * r.parameter_value;
        let sd = (expected / 1e5).sqrt() + (full / 1e5).sqrt() * r.parameter_value;
        assert!((r.mean1 - expected).abs() < 3.0 * sd, "{r:?}");
    }
}

#[test]
fn mean_sweep_error_bars_cover_over_many_seeds() {
    let mut cfg = ideal_config(10_000);
    cfg.run.bootstrap_resamples = 200;
    cfg.sweep = sweep(SweepParameter::MeanPhotons, &[0.5, 1.0, 2.0, 4.0, 8.0]);
    let mut covered = 0;
    let mut total = 0;
    for seed in 0..100 {
        cfg.run.seed = seed;
        for r in run_mean_sweep(&cfg).unwrap().rows {
            total += 1;
            if (r.g2_1 - (1.0 + 1.0 / r.mean1)).abs() <= 3.0 * r.g2_1_err {
                covered += 1;
            }
        }
    }
    assert!(covered as f64 >= 0.95 * total as f64, "{covered}/{total}");
}

#[test]
fn reports_are_byte_identical_across_thread_counts() {
    let mut cfg = ExperimentConfig::default();
    cfg.run.shots = 30_000;
    cfg.stability = Some(PumpStabilityModel::default());
    cfg.sweep = sweep(SweepParameter::PumpEnergy, &[1.3e-6, 1.8e-6]);
    let render = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let rec = run_reconstruction(&cfg).unwrap();
                let a = Report::for_reconstruction(&cfg, &rec).unwrap().to_json();
                let b = Report::for_sweep(&cfg, run_power_sweep(&cfg).unwrap()).to_json();
                a + &b
            })
    };
    let one = render(1);
    assert_eq!(one, render(3));
    assert_eq!(one, render(8));
}
