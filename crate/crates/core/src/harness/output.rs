//! CSV records and atomic file output.
//!
//! Floats are written with 17 significant digits so every row parses back
//! to the same bits. Optional numeric fields are left empty.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::{Error, Result};

pub const CURVE_HEADER: &str =
    "experiment,agent,env,param_n,epsilon,beta,sigma,prior_draw,seed,episode,regret,cum_regret";
pub const SUMMARY_HEADER: &str = "experiment,agent,env,param_n,metric,value,stderr,samples";

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn parse_float(field: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Config(format!("bad float `{field}`")))
}

fn parse_opt(field: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_float(field).map(Some)
    }
}

fn parse_int<T: std::str::FromStr>(field: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Config(format!("bad integer `{field}`")))
}

fn check_field(field: &str) -> &str {
    debug_assert!(!field.contains([',', '\n']), "CSV field `{field}`");
    field
}

fn split(line: &str, expected: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != expected {
        return Err(Error::Config(format!(
            "expected {expected} fields, found {} in `{line}`",
            fields.len()
        )));
    }
    Ok(fields)
}

/// One aggregated metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: String,
    pub agent: String,
    pub env: String,
    pub param_n: usize,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl SummaryRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            check_field(&self.experiment),
            check_field(&self.agent),
            check_field(&self.env),
            self.param_n,
            check_field(&self.metric),
            format_float(self.value),
            format_float(self.stderr),
            self.samples
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        let f = split(line, 8)?;
        Ok(Self {
            experiment: f[0].to_string(),
            agent: f[1].to_string(),
            env: f[2].to_string(),
            param_n: parse_int(f[3])?,
            metric: f[4].to_string(),
            value: parse_float(f[5])?,
            stderr: parse_float(f[6])?,
            samples: parse_int(f[7])?,
        })
    }
}

/// One episode of one regret curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub experiment: String,
    pub agent: String,
    pub env: String,
    pub param_n: usize,
    pub epsilon: Option<f64>,
    pub beta: Option<f64>,
    pub sigma: Option<f64>,
    pub prior_draw: usize,
    pub seed: usize,
    pub episode: usize,
    pub regret: f64,
    pub cum_regret: f64,
}

impl CurveRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            check_field(&self.experiment),
            check_field(&self.agent),
            check_field(&self.env),
            self.param_n,
            format_opt(self.epsilon),
            format_opt(self.beta),
            format_opt(self.sigma),
            self.prior_draw,
            self.seed,
            self.episode,
            format_float(self.regret),
            format_float(self.cum_regret)
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        let f = split(line, 12)?;
        Ok(Self {
            experiment: f[0].to_string(),
            agent: f[1].to_string(),
            env: f[2].to_string(),
            param_n: parse_int(f[3])?,
            epsilon: parse_opt(f[4])?,
            beta: parse_opt(f[5])?,
            sigma: parse_opt(f[6])?,
            prior_draw: parse_int(f[7])?,
            seed: parse_int(f[8])?,
            episode: parse_int(f[9])?,
            regret: parse_float(f[10])?,
            cum_regret: parse_float(f[11])?,
        })
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.to_csv());
    }
    out
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut out = String::with_capacity(96 * (rows.len() + 1));
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.to_csv());
    }
    out
}

/// Parses a summary CSV produced by [`summary_csv`].
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(Error::Config("missing summary header".into()));
    }
    lines.map(SummaryRow::parse).collect()
}

/// Parses a curve CSV produced by [`curve_csv`].
pub fn parse_curve_csv(text: &str) -> Result<Vec<CurveRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CURVE_HEADER) {
        return Err(Error::Config("missing curve header".into()));
    }
    lines.map(CurveRow::parse).collect()
}

/// Writes `contents` to a temporary file beside `path` and renames it into
/// place, so a failed run never leaves a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(3.0), "3.0000000000000000e0");
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn summary_round_trip() {
        let row = SummaryRow {
            experiment: "problem1".into(),
            agent: "thompson".into(),
            env: "problem1".into(),
            param_n: 10,
            metric: "bayes_regret".into(),
            value: 2.0 / 3.0,
            stderr: 1e-3,
            samples: 10_000,
        };
        let text = summary_csv(std::slice::from_ref(&row));
        assert_eq!(parse_summary_csv(&text).unwrap(), vec![row]);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "a\n").unwrap();
        write_atomic(&path, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "b\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
