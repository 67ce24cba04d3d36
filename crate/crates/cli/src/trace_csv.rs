//! Trace CSV format: one row per iterate, floats with 17 significant digits
//! so that parsing a file reproduces the recorded values exactly.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use dpgd::IterateTrace;
use serde::Deserialize;

pub const HEADER: [&str; 7] = ["iter", "f_val", "k_gap", "grad_norm", "L_inv", "grad_evals", "wall_ms"];

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub f_val: f64,
    pub k_gap: f64,
    pub grad_norm: f64,
    #[serde(rename = "L_inv")]
    pub l_inv: f64,
    pub grad_evals: u64,
    pub wall_ms: f64,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace<W: Write>(out: W, trace: &IterateTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.iter.to_string(),
            num(r.f_val),
            num(r.k_gap),
            num(r.grad_norm),
            num(r.step_inv),
            r.grad_evals.to_string(),
            num(r.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, trace: &IterateTrace) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_trace(file, trace)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != HEADER {
        anyhow::bail!("{}: unexpected header {:?}", path.display(), header);
    }
    r.deserialize().map(|row| Ok(row?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use dpgd::problems::power1d_problem;
    use dpgd::{solve, DVector, SolverConfig, StepRule};

    #[test]
    fn round_trip_is_exact() {
        let (f, k) = power1d_problem(0.3, 3.5).unwrap();
        let trace = solve(&f, &k, &DVector::from_element(1, 7.1), &SolverConfig::new(StepRule::Adaptive(5.0))).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, &buf).unwrap();
        let rows = read_trace(&path).unwrap();
        assert_eq!(rows.len(), trace.records.len());
        for (row, rec) in rows.iter().zip(&trace.records) {
            assert_eq!(row.iter, rec.iter);
            assert_eq!(row.f_val.to_bits(), rec.f_val.to_bits());
            assert_eq!(row.k_gap.to_bits(), rec.k_gap.to_bits());
            assert_eq!(row.grad_norm.to_bits(), rec.grad_norm.to_bits());
            assert_eq!(row.l_inv.to_bits(), rec.step_inv.to_bits());
            assert_eq!(row.grad_evals, rec.grad_evals);
            assert_eq!(row.wall_ms.to_bits(), rec.wall_ms.to_bits());
        }
    }

    #[test]
    fn header_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "iter,f\n0,1\n").unwrap();
        assert!(read_trace(&path).is_err());
    }
}
