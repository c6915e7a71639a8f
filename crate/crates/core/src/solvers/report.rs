use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Outcome of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: String,
    pub converged: bool,
    pub iterations: usize,
    pub n_sweep: usize,
    /// `||rho* - rho||_inf` per source iteration, or the relative residual
    /// estimate per GMRES step.
    pub change_history: Vec<f64>,
    /// `||(I - L) rho - b||_inf` of the returned density.
    pub final_residual: f64,
    pub wall_seconds: f64,
}

impl SolveReport {
    pub const HEADER: &'static str = "method\tconverged\titerations\tn_sweep\tfinal_residual\twall_seconds";

    /// Tab-separated record matching [`HEADER`](Self::HEADER).
    pub fn to_record(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{:e}\t{:e}",
            self.method, self.converged, self.iterations, self.n_sweep, self.final_residual, self.wall_seconds
        )
    }

    /// Parses a record; the history is not part of it.
    pub fn from_record(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim_end().split('\t').collect();
        if f.len() != 6 {
            return Err(Error::Format(format!("expected 6 fields, got {}", f.len())));
        }
        let bad = |what: &str| Error::Format(format!("bad {what} in `{line}`"));
        Ok(Self {
            method: f[0].to_string(),
            converged: f[1].parse().map_err(|_| bad("converged"))?,
            iterations: f[2].parse().map_err(|_| bad("iterations"))?,
            n_sweep: f[3].parse().map_err(|_| bad("n_sweep"))?,
            change_history: Vec::new(),
            final_residual: f[4].parse().map_err(|_| bad("final_residual"))?,
            wall_seconds: f[5].parse().map_err(|_| bad("wall_seconds"))?,
        })
    }

    /// Two-column text: iteration index and value.
    pub fn write_history<W: Write>(&self, mut w: W) -> Result<()> {
        for (l, v) in self.change_history.iter().enumerate() {
            writeln!(w, "{}\t{:.17e}", l + 1, v)?;
        }
        Ok(())
    }

    pub fn read_history<R: BufRead>(r: R) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v = line
                .split_whitespace()
                .nth(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Format(format!("bad history line `{line}`")))?;
            out.push(v);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_roundtrip() {
        let r = SolveReport {
            method: "SI-ROMSAD-3,3".into(),
            converged: true,
            iterations: 4,
            n_sweep: 5,
            change_history: vec![1e-2, 1e-5, 1e-9, 1e-13],
            final_residual: 3.25e-13,
            wall_seconds: 0.5,
        };
        let back = SolveReport::from_record(&r.to_record()).unwrap();
        assert_eq!(back.n_sweep, 5);
        assert_eq!(back.method, r.method);
        let mut buf = Vec::new();
        r.write_history(&mut buf).unwrap();
        let h = SolveReport::read_history(&buf[..]).unwrap();
        assert_eq!(h, r.change_history);
        assert!(SolveReport::from_record("a\tb").is_err());
    }
}
