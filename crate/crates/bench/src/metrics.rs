//! Per-method averages over the test set.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::methods::Method;
use crate::online::CaseRun;
use crate::{BenchError, BenchResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub case: String,
    pub method: String,
    pub eps_pod: Option<f64>,
    pub n_test: usize,
    pub n_converged: usize,
    /// Mean transport sweeps.
    pub n_sweep: f64,
    /// Mean `||(I - L) rho - b||_inf`.
    pub residual: f64,
    /// Mean wall time in percent of the SI-DSA mean.
    pub t_rel: f64,
    pub wall_seconds: f64,
}

/// Offline work in units of one mean SI-DSA online solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineRow {
    pub case: String,
    pub snapshots: f64,
    pub basis: f64,
    pub operators: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
    pub offline: Vec<OfflineRow>,
}

const COLUMNS: [&str; 9] =
    ["case", "method", "eps_pod", "n_test", "n_converged", "n_sweep", "residual", "t_rel", "wall_seconds"];
/// Columns that depend on timing and are excluded from reproducibility checks.
const TIMING_COLUMNS: usize = 2;

impl MetricsTable {
    pub fn from_run(run: &CaseRun) -> Self {
        let dsa_wall = run.find(Method::Dsa, None).map(|m| m.mean_wall()).unwrap_or(f64::NAN);
        let rows = run
            .methods
            .iter()
            .map(|m| {
                let wall = m.mean_wall();
                MetricsRow {
                    case: run.case.name().into(),
                    method: m.method.label(),
                    eps_pod: m.eps_pod,
                    n_test: m.reports.len(),
                    n_converged: m.n_converged(),
                    n_sweep: m.mean_n_sweep(),
                    residual: m.mean_residual(),
                    t_rel: 100.0 * wall / dsa_wall,
                    wall_seconds: wall,
                }
            })
            .collect();
        let offline = run
            .offline
            .iter()
            .map(|c| OfflineRow {
                case: run.case.name().into(),
                snapshots: c.snapshot_seconds / dsa_wall,
                basis: c.basis_seconds / dsa_wall,
                operators: c.operator_seconds / dsa_wall,
            })
            .collect();
        Self { rows, offline }
    }

    pub fn extend(&mut self, other: MetricsTable) {
        self.rows.extend(other.rows);
        self.offline.extend(other.offline);
    }

    pub fn row(&self, case: &str, method: &str, eps_pod: Option<f64>) -> Option<&MetricsRow> {
        self.rows
            .iter()
            .find(|r| r.case == case && r.method == method && (eps_pod.is_none() || r.eps_pod == eps_pod))
    }

    /// Tab-separated table with a header row. Without timing the output is
    /// reproducible bit for bit.
    pub fn to_tsv(&self, timing: bool) -> String {
        let ncol = if timing { COLUMNS.len() } else { COLUMNS.len() - TIMING_COLUMNS };
        let mut s = COLUMNS[..ncol].join("\t");
        s.push('\n');
        for r in &self.rows {
            let eps = r.eps_pod.map_or_else(|| "-".to_string(), |e| format!("{e:e}"));
            let _ = write!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.6e}",
                r.case, r.method, eps, r.n_test, r.n_converged, r.n_sweep, r.residual
            );
            if timing {
                let _ = write!(s, "\t{:.3}\t{:.6e}", r.t_rel, r.wall_seconds);
            }
            s.push('\n');
        }
        s
    }

    pub fn offline_tsv(&self) -> String {
        let mut s = String::from("case\tsnapshots\tbasis\toperators\n");
        for r in &self.offline {
            let _ = writeln!(s, "{}\t{:.3}\t{:.3}\t{:.3}", r.case, r.snapshots, r.basis, r.operators);
        }
        s
    }

    /// Parses [`to_tsv`](Self::to_tsv) output with or without timing.
    pub fn from_tsv(text: &str) -> BenchResult<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| BenchError::Format("empty table".into()))?.split('\t').collect();
        let timing = match header.len() {
            n if n == COLUMNS.len() => true,
            n if n == COLUMNS.len() - TIMING_COLUMNS => false,
            n => return Err(BenchError::Format(format!("header has {n} columns"))),
        };
        if header[..] != COLUMNS[..header.len()] {
            return Err(BenchError::Format(format!("unexpected header `{}`", header.join("\t"))));
        }
        let mut rows = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != header.len() {
                return Err(BenchError::Format(format!("row has {} fields: `{line}`", f.len())));
            }
            let bad = |c: &str| BenchError::Format(format!("bad {c} in `{line}`"));
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(COLUMNS[i]));
            let int = |i: usize| f[i].parse::<usize>().map_err(|_| bad(COLUMNS[i]));
            rows.push(MetricsRow {
                case: f[0].into(),
                method: f[1].into(),
                eps_pod: if f[2] == "-" { None } else { Some(num(2)?) },
                n_test: int(3)?,
                n_converged: int(4)?,
                n_sweep: num(5)?,
                residual: num(6)?,
                t_rel: if timing { num(7)? } else { f64::NAN },
                wall_seconds: if timing { num(8)? } else { f64::NAN },
            });
        }
        Ok(Self { rows, offline: Vec::new() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::CaseId;
    use crate::online::{CaseRun, MethodRuns};
    use rte_core::solvers::SolveReport;

    fn rep(n_sweep: usize, wall: f64) -> SolveReport {
        SolveReport {
            method: String::new(),
            converged: true,
            iterations: n_sweep - 1,
            n_sweep,
            change_history: vec![1.0, 1e-3],
            final_residual: 1e-12,
            wall_seconds: wall,
        }
    }

    pub(crate) fn sample_run() -> CaseRun {
        CaseRun {
            case: CaseId::PinCell,
            scale: 1.0,
            seed: 7,
            eps_sisa: 1e-11,
            test_set: vec![vec![0.1, 0.2], vec![0.3, 0.4]],
            methods: vec![
                MethodRuns { method: Method::Dsa, eps_pod: None, reports: vec![rep(30, 2.0), rep(40, 2.0)] },
                MethodRuns {
                    method: Method::Romsad { window: 3, theta: 5 },
                    eps_pod: Some(1e-9),
                    reports: vec![rep(4, 0.2), rep(5, 0.2)],
                },
            ],
            offline: None,
            ranks: None,
        }
    }

    #[test]
    fn golden_table() {
        let t = MetricsTable::from_run(&sample_run());
        let expect = "case\tmethod\teps_pod\tn_test\tn_converged\tn_sweep\tresidual\tt_rel\twall_seconds\n\
pin_cell\tDSA\t-\t2\t2\t35.0000\t1.000000e-12\t100.000\t2.000000e0\n\
pin_cell\tROMSAD-3,5\t1e-9\t2\t2\t4.5000\t1.000000e-12\t10.000\t2.000000e-1\n";
        assert_eq!(t.to_tsv(true), expect);
        assert!(!t.to_tsv(false).contains("t_rel"));
    }

    #[test]
    fn dsa_row_is_the_time_reference() {
        let t = MetricsTable::from_run(&sample_run());
        assert_eq!(t.row("pin_cell", "DSA", None).unwrap().t_rel, 100.0);
    }

    #[test]
    fn tsv_roundtrip() {
        let t = MetricsTable::from_run(&sample_run());
        for timing in [true, false] {
            let text = t.to_tsv(timing);
            let back = MetricsTable::from_tsv(&text).unwrap();
            assert_eq!(back.to_tsv(timing), text);
            assert_eq!(back.rows.len(), 2);
        }
        assert!(MetricsTable::from_tsv("nope\n").is_err());
    }
}
