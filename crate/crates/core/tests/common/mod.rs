//! Independent oracles for the statistical tests: brute-force sums and
//! quadrature that never touch the crate's estimators or samplers.

#![allow(dead_code)]

use pnrstat::{ShotSeries, SourceSpec};

/// Raw moments `(E[n], E[n^2])` of a pmf given as a slice.
pub fn pmf_moments(pmf: &[f64]) -> (f64, f64) {
    pmf.iter().enumerate().fold((0.0, 0.0), |(m1, m2), (n, p)| {
        let n = n as f64;
        (m1 + n * p, m2 + n * n * p)
    })
}

/// Single-mode thermal pmf `mu^n / (1 + mu)^(n+1)` by direct summation.
pub fn geometric_pmf(mu: f64, cutoff: usize) -> Vec<f64> {
    (0..=cutoff)
        .map(|n| (n as f64 * (mu / (1.0 + mu)).ln()).exp() / (1.0 + mu))
        .collect()
}

/// Poisson pmf from factorials computed as running products.
pub fn poisson_pmf_direct(mu: f64, cutoff: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(cutoff + 1);
    let mut term = (-mu).exp();
    for n in 0..=cutoff {
        if n > 0 {
            term *= mu / n as f64;
        }
        out.push(term);
    }
    out
}

/// Poisson pmf mixed over a unit-mean gamma gain of variance `var`,
/// integrated numerically with Simpson's rule.
pub fn compound_poisson_pmf(mu: f64, var: f64, cutoff: usize) -> Vec<f64> {
    let shape = 1.0 / var;
    let upper = 1.0 + 40.0 * var.sqrt();
    let steps = 20_000;
    let h = upper / steps as f64;
    let weight = |i: usize| {
        if i == 0 || i == steps {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let log_density = |g: f64| (shape - 1.0) * g.ln() - g * shape;
    let mut norm = 0.0;
    let mut pmf = vec![0.0; cutoff + 1];
    for i in 1..=steps {
        let g = i as f64 * h;
        let w = weight(i) * log_density(g).exp();
        norm += w;
        let rate = g * mu;
        let mut term = (-rate).exp();
        for (n, p) in pmf.iter_mut().enumerate() {
            if n > 0 {
                term *= rate / n as f64;
            }
            *p += w * term;
        }
    }
    pmf.iter_mut().for_each(|p| *p /= norm);
    pmf
}

pub fn draw(spec: SourceSpec, shots: usize, seed: u64) -> ShotSeries {
    pnrstat::draw_shots(&spec, shots, seed).unwrap()
}

/// Sample covariance of two aligned series.
pub fn covariance(a: &[u32], b: &[u32]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().map(|&x| x as f64).sum::<f64>() / n;
    let mb = b.iter().map(|&x| x as f64).sum::<f64>() / n;
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 - ma) * (y as f64 - mb))
        .sum::<f64>()
        / (n - 1.0)
}
