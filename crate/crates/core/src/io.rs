//! CSV shot files.
//!
//! Every file starts with a header row naming its kind:
//! `count` (one integer per line), `arm1,arm2` (paired integers),
//! `value` (pulse heights, 17 significant digits) or
//! `edge_low,edge_high,count` (histograms, write-only).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::detector::AnalogShotSeries;
use crate::error::{Error, Result};
use crate::phs::Histogram;
use crate::series::{PairedShotSeries, ShotSeries};

pub const COUNT_HEADER: &str = "count";
pub const PAIRED_HEADER: &str = "arm1,arm2";
pub const ANALOG_HEADER: &str = "value";
pub const HISTOGRAM_HEADER: &str = "edge_low,edge_high,count";

/// Contents of a shot CSV.
#[derive(Debug, Clone, PartialEq)]
pub enum ShotFile {
    Counts(ShotSeries),
    Paired(PairedShotSeries),
    Analog(AnalogShotSeries),
}

impl From<ShotSeries> for ShotFile {
    fn from(s: ShotSeries) -> Self {
        ShotFile::Counts(s)
    }
}

impl From<PairedShotSeries> for ShotFile {
    fn from(p: PairedShotSeries) -> Self {
        ShotFile::Paired(p)
    }
}

impl From<AnalogShotSeries> for ShotFile {
    fn from(a: AnalogShotSeries) -> Self {
        ShotFile::Analog(a)
    }
}

/// Formats a real with 17 significant digits, enough to round-trip any f64.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

pub fn write_shots(path: &Path, data: &ShotFile) -> Result<()> {
    let mut w = create(path)?;
    let result = (|| -> std::io::Result<()> {
        match data {
            ShotFile::Counts(s) => {
                writeln!(w, "{COUNT_HEADER}")?;
                for c in s.counts() {
                    writeln!(w, "{c}")?;
                }
            }
            ShotFile::Paired(p) => {
                writeln!(w, "{PAIRED_HEADER}")?;
                for (a, b) in p.arm1().counts().iter().zip(p.arm2().counts()) {
                    writeln!(w, "{a},{b}")?;
                }
            }
            ShotFile::Analog(a) => {
                writeln!(w, "{ANALOG_HEADER}")?;
                for &v in a.values() {
                    writeln!(w, "{}", format_real(v))?;
                }
            }
        }
        w.flush()
    })();
    result.map_err(io_err(path))
}

pub fn write_histogram(path: &Path, hist: &Histogram) -> Result<()> {
    let mut w = create(path)?;
    let result = (|| -> std::io::Result<()> {
        writeln!(w, "{HISTOGRAM_HEADER}")?;
        for (lo, hi, c) in hist.rows() {
            writeln!(w, "{},{},{c}", format_real(lo), format_real(hi))?;
        }
        w.flush()
    })();
    result.map_err(io_err(path))
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, field: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("cannot parse {field:?}"),
    })
}

/// Reads a shot CSV, choosing the series kind from its header row.
pub fn read_shots(path: &Path) -> Result<ShotFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let header = header.join(",");
    let width = match header.as_str() {
        COUNT_HEADER | ANALOG_HEADER => 1,
        PAIRED_HEADER => 2,
        other => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!(
                    "unknown header {other:?}; expected {COUNT_HEADER:?}, {PAIRED_HEADER:?} or {ANALOG_HEADER:?}"
                ),
            })
        }
    };

    let mut ints: Vec<(u32, u32)> = Vec::new();
    let mut reals: Vec<f64> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {width} field(s), found {}", record.len()),
            });
        }
        match header.as_str() {
            COUNT_HEADER => ints.push((parse_field(path, line, &record[0])?, 0)),
            PAIRED_HEADER => ints.push((
                parse_field(path, line, &record[0])?,
                parse_field(path, line, &record[1])?,
            )),
            _ => reals.push(parse_field(path, line, &record[0])?),
        }
    }
    let empty = || Error::Parse {
        path: path.to_path_buf(),
        line: 2,
        message: "file has no data rows".into(),
    };
    match header.as_str() {
        COUNT_HEADER => {
            let counts = ints.into_iter().map(|(a, _)| a).collect::<Vec<_>>();
            ShotSeries::new(counts)
                .map(ShotFile::Counts)
                .map_err(|_| empty())
        }
        PAIRED_HEADER => {
            let (a, b): (Vec<u32>, Vec<u32>) = ints.into_iter().unzip();
            let arm1 = ShotSeries::labeled(a, "arm1").map_err(|_| empty())?;
            let arm2 = ShotSeries::labeled(b, "arm2").map_err(|_| empty())?;
            Ok(ShotFile::Paired(PairedShotSeries::new(arm1, arm2)?))
        }
        _ => AnalogShotSeries::new(reals, None)
            .map(ShotFile::Analog)
            .map_err(|_| empty()),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let s = ShotSeries::new(vec![0, 1, 2]).unwrap();
        write_shots(&path, &s.clone().into()).unwrap();
        match read_shots(&path).unwrap() {
            ShotFile::Counts(r) => assert_eq!(r.counts(), s.counts()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_paired_line_names_line_two() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(&path, "arm1,arm2\n1,x\n").unwrap();
        match read_shots(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_field_count_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(&path, "arm1,arm2\n1,2\n3,4\n5\n").unwrap();
        assert!(matches!(
            read_shots(&path),
            Err(Error::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn unknown_header_and_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        std::fs::write(&path, "photons\n1\n").unwrap();
        assert!(matches!(
            read_shots(&path),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_shots(&dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn analog_reals_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let values = vec![
            0.1,
            -3.25e-7,
            1.0 / 3.0,
            12345.678901234567,
            f64::MIN_POSITIVE,
        ];
        let a = AnalogShotSeries::new(values.clone(), None).unwrap();
        write_shots(&path, &a.into()).unwrap();
        match read_shots(&path).unwrap() {
            ShotFile::Analog(r) => {
                for (x, y) in r.values().iter().zip(&values) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
            other => panic!("{other:?}"),
        }
    }
}
