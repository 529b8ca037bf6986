//! Pulse-height spectrum analysis: histogramming, peak-comb calibration and
//! quantization of analog values back to photon numbers.

use std::cmp::Ordering;

use serde::Serialize;

use crate::detector::AnalogShotSeries;
use crate::error::{Error, Result};
use crate::series::ShotSeries;

pub const MIN_BINS: usize = 10;
pub const DEFAULT_BINS: usize = 1000;
/// Peaks must rise this fraction of the tallest smoothed bin above their
/// surrounding valleys.
pub const DEFAULT_PROMINENCE: f64 = 0.02;
/// Allowed relative deviation of any peak-to-peak distance from the median.
pub const SPACING_TOLERANCE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    bin_edges: Vec<f64>,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(bin_edges: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        if bin_edges.len() < 2 || counts.len() + 1 != bin_edges.len() {
            return Err(Error::InvalidParameter(format!(
                "histogram needs edges = counts + 1 >= 2 (edges {}, counts {})",
                bin_edges.len(),
                counts.len()
            )));
        }
        if bin_edges
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(Ordering::Greater))
        {
            return Err(Error::InvalidParameter(
                "histogram edges must be strictly increasing".into(),
            ));
        }
        Ok(Self { bin_edges, counts })
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn center(&self, bin: usize) -> f64 {
        0.5 * (self.bin_edges[bin] + self.bin_edges[bin + 1])
    }

    /// `(edge_low, edge_high, count)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.bin_edges
            .windows(2)
            .zip(&self.counts)
            .map(|(e, &c)| (e[0], e[1], c))
    }
}

/// Uniform-width histogram spanning `[min, max]` of the values; the maximum
/// falls in the last bin.
pub fn build_histogram(analog: &AnalogShotSeries, bin_count: usize) -> Result<Histogram> {
    if bin_count < MIN_BINS {
        return Err(Error::InvalidParameter(format!(
            "bin_count must be >= {MIN_BINS}, got {bin_count}"
        )));
    }
    let values = analog.values();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi.partial_cmp(&lo) != Some(Ordering::Greater) {
        return Err(Error::DegenerateRange(lo));
    }
    let width = (hi - lo) / bin_count as f64;
    let mut counts = vec![0u64; bin_count];
    for &v in values {
        let bin = (((v - lo) / width) as usize).min(bin_count - 1);
        counts[bin] += 1;
    }
    let mut edges: Vec<f64> = (0..bin_count).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    Histogram::new(edges, counts)
}

/// Affine map from pulse height to photon number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhsCalibration {
    /// Position of the zero-photon peak.
    pub offset: f64,
    /// Analog units per photon.
    pub peak_spacing: f64,
    /// Boundary between `k` and `k + 1` photons at index `k`. Beyond the
    /// list, boundaries continue at `offset + (k + 1/2) spacing`.
    pub threshold_list: Vec<f64>,
    /// Peak centres found in the spectrum (informational).
    pub peaks: Vec<f64>,
}

impl PhsCalibration {
    pub fn new(offset: f64, peak_spacing: f64, threshold_list: Vec<f64>) -> Result<Self> {
        let cal = Self {
            offset,
            peak_spacing,
            threshold_list,
            peaks: Vec::new(),
        };
        cal.validate()?;
        Ok(cal)
    }

    /// Calibration whose thresholds sit halfway between nominal peaks.
    pub fn midpoint(offset: f64, peak_spacing: f64, thresholds: usize) -> Result<Self> {
        let list = (0..thresholds)
            .map(|k| offset + (k as f64 + 0.5) * peak_spacing)
            .collect();
        Self::new(offset, peak_spacing, list)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_spacing > 0.0 && self.peak_spacing.is_finite()) || !self.offset.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "calibration needs finite offset and spacing > 0 (offset {}, spacing {})",
                self.offset, self.peak_spacing
            )));
        }
        for (k, &t) in self.threshold_list.iter().enumerate() {
            if !self.threshold_in_bounds(k, t) {
                return Err(Error::InvalidParameter(format!(
                    "threshold {k} = {t} outside its photon-number interval"
                )));
            }
        }
        Ok(())
    }

    fn threshold_in_bounds(&self, k: usize, t: f64) -> bool {
        let low = self.offset + k as f64 * self.peak_spacing;
        t > low && t < low + self.peak_spacing
    }

    /// Photon number for one pulse height: the number of thresholds below it.
    pub fn photon_number(&self, value: f64) -> u32 {
        let listed = self.threshold_list.partition_point(|&t| t < value);
        if listed < self.threshold_list.len() {
            return listed as u32;
        }
        // Arithmetic continuation past the last listed threshold.
        let x = (value - self.offset) / self.peak_spacing - 0.5;
        let arithmetic = if x > 0.0 { x.ceil() as usize } else { 0 };
        listed.max(arithmetic) as u32
    }
}

fn smooth(counts: &[u64], window: usize) -> Vec<f64> {
    let n = counts.len();
    let back = (window - 1) / 2;
    let ahead = window / 2;
    let mut prefix = vec![0u64; n + 1];
    for (i, &c) in counts.iter().enumerate() {
        prefix[i + 1] = prefix[i] + c;
    }
    (0..n)
        .map(|i| {
            let a = i.saturating_sub(back);
            let b = (i + ahead + 1).min(n);
            (prefix[b] - prefix[a]) as f64 / (b - a) as f64
        })
        .collect()
}

fn smoothing_window(bins: usize) -> usize {
    bins.div_ceil(50).max(3)
}

/// Indices of local maxima whose prominence reaches `floor`. A side with no
/// bins (histogram edge) does not constrain the prominence.
fn prominent_peaks(y: &[f64], floor: f64) -> Vec<usize> {
    let n = y.len();
    let mut peaks = Vec::new();
    for i in 0..n {
        let rises = i == 0 || y[i] > y[i - 1];
        let holds = i + 1 == n || y[i] >= y[i + 1];
        if !(rises && holds) || y[i] <= 0.0 {
            continue;
        }
        let left = (0..i)
            .rev()
            .take_while(|&j| y[j] <= y[i])
            .map(|j| y[j])
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
        let right = (i + 1..n)
            .take_while(|&j| y[j] <= y[i])
            .map(|j| y[j])
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
        let base = match (left, right) {
            (Some(l), Some(r)) => l.max(r),
            (Some(b), None) | (None, Some(b)) => b,
            (None, None) => 0.0,
        };
        if y[i] - base >= floor {
            peaks.push(i);
        }
    }
    peaks
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn median_spacing(peaks: &[f64]) -> Result<f64> {
    let gaps: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    let med = median(&mut gaps.clone());
    if let Some(&bad) = gaps
        .iter()
        .find(|&&d| (d - med).abs() > SPACING_TOLERANCE * med)
    {
        return Err(Error::IrregularSpacing {
            distance: bad,
            median: med,
        });
    }
    Ok(med)
}

/// Count-weighted centroid of the raw histogram within `half_width` of `x`.
fn centroid(hist: &Histogram, x: f64, half_width: f64) -> f64 {
    let (mut w, mut s) = (0.0, 0.0);
    for (bin, &c) in hist.counts().iter().enumerate() {
        let center = hist.center(bin);
        if (center - x).abs() <= half_width && c > 0 {
            w += c as f64;
            s += c as f64 * center;
        }
    }
    if w > 0.0 {
        s / w
    } else {
        x
    }
}

/// Centre of the run of minimal smoothed bins strictly between two peaks.
fn valley(hist: &Histogram, y: &[f64], from: f64, to: f64) -> Option<f64> {
    let inside: Vec<usize> = (0..y.len())
        .filter(|&b| {
            let c = hist.center(b);
            c > from && c < to
        })
        .collect();
    let min = inside.iter().map(|&b| y[b]).fold(f64::INFINITY, f64::min);
    let lowest: Vec<usize> = inside.into_iter().filter(|&b| y[b] == min).collect();
    let first = *lowest.first()?;
    let last = *lowest.last()?;
    Some(0.5 * (hist.center(first) + hist.center(last)))
}

pub fn calibrate(hist: &Histogram) -> Result<PhsCalibration> {
    calibrate_with(hist, DEFAULT_PROMINENCE)
}

/// Finds the comb of single-photon peaks and places photon-number thresholds.
///
/// Peaks are local maxima of a moving-average-smoothed spectrum (window
/// `bins / 50`, at least 3) with prominence above `prominence` times the
/// tallest smoothed bin. Unresolved peaks below the first one are restored
/// when the spectrum extends that far. Thresholds sit at the valley minima
/// between resolved peaks and at `offset + (k + 1/2) spacing` elsewhere.
pub fn calibrate_with(hist: &Histogram, prominence: f64) -> Result<PhsCalibration> {
    let y = smooth(hist.counts(), smoothing_window(hist.bin_count()));
    let tallest = y.iter().copied().fold(0.0, f64::max);
    let found = prominent_peaks(&y, prominence * tallest);
    if found.len() < 2 {
        return Err(Error::NoPeaks(found.len()));
    }
    let coarse: Vec<f64> = found.iter().map(|&b| hist.center(b)).collect();
    let spacing = median_spacing(&coarse)?;
    let mut peaks: Vec<f64> = coarse
        .iter()
        .map(|&x| centroid(hist, x, 0.25 * spacing))
        .collect();
    let spacing = median_spacing(&peaks)?;

    let low_edge = hist.bin_edges()[0];
    let resolved_from = {
        let mut restored = 0;
        while peaks[0] - spacing >= low_edge - 0.5 * spacing {
            peaks.insert(0, peaks[0] - spacing);
            restored += 1;
        }
        restored
    };
    let offset = peaks[0];
    let mut cal = PhsCalibration {
        offset,
        peak_spacing: spacing,
        threshold_list: Vec::new(),
        peaks: peaks.clone(),
    };

    for k in 0..peaks.len() - 1 {
        let midpoint = offset + (k as f64 + 0.5) * spacing;
        let t = if k >= resolved_from {
            valley(hist, &y, peaks[k], peaks[k + 1])
                .filter(|&t| cal.threshold_in_bounds(k, t))
                .unwrap_or(midpoint)
        } else {
            midpoint
        };
        cal.threshold_list.push(t);
    }
    let high_edge = hist.bin_edges()[hist.bin_count()];
    let mut k = cal.threshold_list.len();
    loop {
        let t = offset + (k as f64 + 0.5) * spacing;
        if t > high_edge + spacing {
            break;
        }
        cal.threshold_list.push(t);
        k += 1;
    }
    cal.validate()?;
    Ok(cal)
}

/// Photon number per shot under `cal`.
pub fn quantize(analog: &AnalogShotSeries, cal: &PhsCalibration) -> ShotSeries {
    let counts = analog
        .values()
        .iter()
        .map(|&v| cal.photon_number(v))
        .collect();
    ShotSeries::labeled(counts, "reconstructed").expect("analog series is non-empty")
}
