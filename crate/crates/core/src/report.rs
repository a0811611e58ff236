//! Result tables and their CSV encoding.
//!
//! Reals are written with 9 significant digits using Rust's own formatting,
//! which is locale-independent, so identical runs give identical bytes.

use crate::error::{Error, Result};
use crate::harness::{CfarCheck, InfluenceRow, OffsetErrorRow, PdCurve, ThresholdReport};

/// Formats `x` with 9 significant digits: fixed notation for decimal
/// exponents in `[-5, 9)`, otherwise `d.dddde±XX`. Trailing zeros are
/// dropped.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exponent) = sci.split_once('e').expect("exponent present");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-5..9).contains(&exponent) {
        let decimals = (8 - exponent).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}"))
    } else {
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exponent.abs())
    }
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Builds one table row from heterogeneous values.
#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => {
        vec![$($crate::report::Cell::from($v).render()),*]
    };
}

pub enum Cell {
    Text(String),
    Integer(i128),
    Real(f64),
}

impl Cell {
    pub fn render(self) -> String {
        match self {
            Cell::Text(s) => s,
            Cell::Integer(i) => i.to_string(),
            Cell::Real(x) => format_real(x),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Integer(i as i128)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Integer(i as i128)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv encoding failed: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("inputs are UTF-8"))
    }
}

pub fn thresholds_table(reports: &[ThresholdReport]) -> Table {
    let mut t = Table::new([
        "detector",
        "threshold",
        "n_trials",
        "target_pfa",
        "empirical_pfa",
        "regularization_events",
    ]);
    for r in reports {
        t.push(row![
            r.detector.name(),
            r.threshold,
            r.n_trials,
            r.target_pfa,
            r.empirical_pfa,
            r.regularization_events
        ]);
    }
    t
}

pub fn pd_table(curves: &[PdCurve]) -> Table {
    let mut t = Table::new(["detector", "scr_db", "pd", "n_trials", "ci_low", "ci_high", "threshold"]);
    for c in curves {
        for r in &c.rows {
            t.push(row![c.detector.name(), r.scr_db, r.pd, r.n_trials, r.ci_low, r.ci_high, c.threshold]);
        }
    }
    t
}

pub fn cfar_table(checks: &[CfarCheck]) -> Table {
    let mut t = Table::new([
        "detector",
        "threshold",
        "n_trials",
        "exceedances",
        "empirical_pfa",
        "target_pfa",
        "interval_low",
        "interval_high",
        "passed",
    ]);
    for c in checks {
        t.push(row![
            c.detector.name(),
            c.threshold,
            c.n_trials,
            c.exceedances,
            c.empirical_pfa,
            c.target_pfa,
            c.interval.0,
            c.interval.1,
            c.passed
        ]);
    }
    t
}

pub fn offset_table(rows: &[OffsetErrorRow]) -> Table {
    let mut t = Table::new(["mean", "k", "repeats", "offset_error", "standard_error"]);
    for r in rows {
        t.push(row![r.kind.name(), r.k, r.repeats, r.mean_error, r.standard_error]);
    }
    t
}

pub fn influence_table(rows: &[InfluenceRow]) -> Table {
    let mut t = Table::new(["mean", "outliers", "repeats", "influence", "standard_error"]);
    for r in rows {
        t.push(row![r.kind.name(), r.outliers, r.repeats, r.mean_influence, r.standard_error]);
    }
    t
}
