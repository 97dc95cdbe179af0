//! Output formatting, grid specs and run manifests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZdError};

/// Fixed 17-significant-digit float, stable across runs. `-0` prints as `0`.
pub fn fmt_f64(v: f64) -> String {
    let v = v + 0.0;
    format!("{v:.16e}")
}

/// `n` equispaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Parses `lo:hi:n`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || ZdError::InvalidArgument(format!("grid spec must be lo:hi:n, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite()) || hi < lo || n == 0 {
        return Err(bad());
    }
    Ok(linspace(lo, hi, n))
}

/// Writes `header` and rows of floats as CSV.
pub fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut s = String::with_capacity(4096);
    s.push_str(header);
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Outcome of one verification check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

/// Record of one CLI invocation; lists every file it wrote.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datum: Option<serde_json::Value>,
    pub backends: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    pub tolerances: BTreeMap<String, f64>,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub outputs: Vec<String>,
    pub wall_clock_s: f64,
    pub threads: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckResult>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec() {
        assert_eq!(parse_grid("-1:1:3").unwrap(), vec![-1.0, 0.0, 1.0]);
        assert!(parse_grid("1:0:3").is_err());
        assert!(parse_grid("a:b").is_err());
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-0.0), fmt_f64(0.0));
    }
}
