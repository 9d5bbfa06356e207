//! Result files: `result.json`, `fields_<step>.csv`, `summary.csv`.

use std::fs;
use std::io;
use std::path::Path;

use serde_json::{json, Map, Value};

use super::runner::{Cell, Check, Outcome};
use crate::hydrodyn::from_wavefunction;
use crate::lattice::WaveFunction;

/// Shortest decimal string that reads back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn check_json(c: &Check) -> Value {
    json!({
        "value": c.value,
        "threshold": c.threshold,
        "relation": c.relation.symbol(),
        "pass": c.passed(),
    })
}

/// Assemble `result.json`. Keys come out sorted, so two runs differ only in
/// `timestamp`.
pub fn result_json(outcome: &Outcome, config: &Value, experiment: &str, seed: u64, timestamp: u64) -> Value {
    let checks: Map<String, Value> = outcome.checks.iter().map(|c| (c.name.clone(), check_json(c))).collect();
    let results: Map<String, Value> = outcome.results.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    json!({
        "experiment": experiment,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "timestamp": timestamp,
        "config": config,
        "results": results,
        "checks": checks,
        "pass": outcome.passed(),
    })
}

/// Columns `x, rho, S, re_psi, im_psi`. `S` is the unwrapped phase times
/// `ħ_eff` where unwrapping succeeds, otherwise the wrapped phase.
pub fn write_fields(path: &Path, psi: &WaveFunction, hbar_eff: f64) -> io::Result<()> {
    let grid = psi.grid();
    let s: Vec<f64> = match from_wavefunction(psi, hbar_eff) {
        Ok(state) => state.s().values().to_vec(),
        Err(_) => psi.values().iter().map(|z| hbar_eff * z.arg()).collect(),
    };
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "rho", "S", "re_psi", "im_psi"])?;
    for (j, z) in psi.values().iter().enumerate() {
        w.write_record([
            fmt_f64(grid.coord(j)),
            fmt_f64(z.norm_sqr()),
            fmt_f64(s[j]),
            fmt_f64(z.re),
            fmt_f64(z.im),
        ])?;
    }
    w.flush()
}

pub fn write_summary(path: &Path, header: &[String], rows: &[Vec<Cell>]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|c| match c {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(i) => i.to_string(),
            Cell::Text(t) => t.clone(),
            Cell::Flag(b) => b.to_string(),
        }))?;
    }
    w.flush()
}

/// Write every artifact of `outcome` into `dir`.
pub fn write_outcome(dir: &Path, outcome: &Outcome, result: &Value) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for snap in &outcome.snapshots {
        write_fields(&dir.join(format!("fields_{}.csv", snap.step)), &snap.psi, snap.hbar_eff)?;
    }
    if let Some(summary) = &outcome.summary {
        write_summary(&dir.join("summary.csv"), &summary.header, &summary.rows)?;
    }
    let mut text = serde_json::to_string_pretty(result).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(dir.join("result.json"), text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.0, 0.1, -2.5, 1e-300, 6.02e23, 1.0 / 3.0, 123456.789, 1e-5, 9.99e-6, f64::MIN_POSITIVE] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1e-300), "1e-300");
        assert_eq!(fmt_f64(2.0), "2");
    }
}
