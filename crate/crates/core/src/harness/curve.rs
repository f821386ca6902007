use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const CSV_HEADER: &str = "x,detector,theory_ber,mc_ber,mc_radius,trials,skipped";

/// One `(x, series)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub x: f64,
    /// Detector id, or a derived label such as `balanced:h0` or `outage`.
    pub detector: String,
    pub theory_ber: f64,
    pub mc_ber: f64,
    /// `4·√(p̂(1−p̂)/trials)`
    pub mc_radius: f64,
    /// Decisions (or draws) that entered `mc_ber`.
    pub trials: u64,
    pub skipped: u64,
}

impl CurveRow {
    /// Row from raw counts; `theory` is already averaged.
    pub fn from_counts(x: f64, detector: impl Into<String>, theory: f64, hits: u64, trials: u64, skipped: u64) -> Self {
        let (mc_ber, mc_radius) = if trials == 0 {
            (0.0, 0.0)
        } else {
            let p = hits as f64 / trials as f64;
            (p, 4.0 * (p * (1.0 - p) / trials as f64).sqrt())
        };
        Self {
            x,
            detector: detector.into(),
            theory_ber: theory,
            mc_ber,
            mc_radius,
            trials,
            skipped,
        }
    }
}

/// Sweep result, one row per `(x, series)` in sweep order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub rows: Vec<CurveRow>,
}

pub type BerCurve = Curve;
/// Rows `outage` (large-N BER above target) and `at` (error floor above target).
pub type OutageCurve = Curve;

impl Curve {
    pub fn series<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a CurveRow> + 'a {
        self.rows.iter().filter(move |r| r.detector == label)
    }

    pub fn get(&self, x: f64, label: &str) -> Option<&CurveRow> {
        self.rows.iter().find(|r| r.detector == label && r.x == x)
    }

    /// Exact CSV bytes: 17 significant digits, LF line endings.
    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 * (self.rows.len() + 1));
        writeln!(out, "{CSV_HEADER}").expect("write to Vec");
        for r in &self.rows {
            writeln!(
                out,
                "{:.16e},{},{:.16e},{:.16e},{:.16e},{},{}",
                r.x, r.detector, r.theory_ber, r.mc_ber, r.mc_radius, r.trials, r.skipped
            )
            .expect("write to Vec");
        }
        out
    }
}

pub fn write_csv(curve: &Curve, path: &Path) -> Result<()> {
    std::fs::write(path, curve.to_csv_bytes()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<Curve> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(Error::Config(format!(
            "{}: unexpected header `{header}`",
            path.display()
        )));
    }
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<CurveRow>, _>>()
        .map_err(csv_err)?;
    Ok(Curve { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_and_formatting() {
        let r = CurveRow::from_counts(1.0, "cg-optimal", 0.1, 10, 100, 0);
        assert_eq!(r.mc_ber, 0.1);
        assert!((r.mc_radius - 4.0 * (0.09f64 / 100.0).sqrt()).abs() < 1e-15);
        let bytes = Curve { rows: vec![r] }.to_csv_bytes();
        let text = String::from_utf8(bytes).unwrap();
        assert!(!text.contains('\r'));
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("1.0000000000000000e0,cg-optimal,"));
        assert_eq!(CurveRow::from_counts(0.0, "x", 0.5, 0, 0, 7).mc_radius, 0.0);
    }
}
