//! Output layout:
//!
//! ```text
//! {out}/{case}/{method}/report.txt     one SolveReport record per test parameter
//! {out}/{case}/{method}/history_{i}.txt
//! {out}/{case}/metrics.tsv
//! {out}/{case}/offline.tsv
//! {out}/{case}/summary.json
//! ```
//!
//! Reduced-order methods of a case with several POD tolerances get one
//! directory per tolerance, e.g. `ROMSA-3_pod1e-9`.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rte_core::solvers::SolveReport;
use serde::{Deserialize, Serialize};

use crate::metrics::{MetricsRow, MetricsTable, OfflineRow};
use crate::online::{CaseRun, MethodRuns};
use crate::{BenchError, BenchResult};

pub const SUMMARY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub version: u32,
    pub case: String,
    pub scale: f64,
    pub seed: u64,
    pub eps_sisa: f64,
    pub test_set: Vec<Vec<f64>>,
    pub rows: Vec<MetricsRow>,
    pub offline: Vec<OfflineRow>,
    pub ranks: Option<String>,
}

impl CaseSummary {
    pub fn new(run: &CaseRun, table: &MetricsTable) -> Self {
        Self {
            version: SUMMARY_VERSION,
            case: run.case.name().into(),
            scale: run.scale,
            seed: run.seed,
            eps_sisa: run.eps_sisa,
            test_set: run.test_set.clone(),
            rows: table.rows.clone(),
            offline: table.offline.clone(),
            ranks: run.ranks.clone(),
        }
    }
}

pub fn method_dir(runs: &MethodRuns, several_eps: bool) -> String {
    match runs.eps_pod {
        Some(e) if several_eps => format!("{}_pod{e:e}", runs.method.dir_name()),
        _ => runs.method.dir_name(),
    }
}

pub const REPORT_HEADER_PREFIX: &str = "mu_index\tmu\t";

fn format_mu(mu: &[f64]) -> String {
    mu.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",")
}

/// `report.txt` contents: a comment line, the header, one record per run.
pub fn report_text(case: &str, runs: &MethodRuns, test_set: &[Vec<f64>]) -> String {
    let mut s = format!(
        "# case={case} method={}{}\n{REPORT_HEADER_PREFIX}{}\n",
        runs.method.long_label(),
        runs.eps_pod.map(|e| format!(" eps_pod={e:e}")).unwrap_or_default(),
        SolveReport::HEADER
    );
    for (i, (rep, mu)) in runs.reports.iter().zip(test_set).enumerate() {
        s.push_str(&format!("{i}\t{}\t{}\n", format_mu(mu), rep.to_record()));
    }
    s
}

/// Parses `report.txt` back into `(mu, report)` pairs; histories are
/// read separately.
pub fn parse_report(text: &str) -> BenchResult<Vec<(Vec<f64>, SolveReport)>> {
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        if line.starts_with(REPORT_HEADER_PREFIX) {
            continue;
        }
        let mut parts = line.splitn(3, '\t');
        let (Some(_), Some(mu), Some(rest)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(BenchError::Format(format!("short report line `{line}`")));
        };
        let mu = mu
            .split(',')
            .map(|v| v.parse::<f64>().map_err(|_| BenchError::Format(format!("bad mu in `{line}`"))))
            .collect::<BenchResult<Vec<_>>>()?;
        out.push((mu, SolveReport::from_record(rest)?));
    }
    Ok(out)
}

/// Writes the full layout for one case and returns the case directory.
pub fn write_case(out: &Path, run: &CaseRun, table: &MetricsTable) -> BenchResult<PathBuf> {
    let case_dir = out.join(run.case.name());
    fs::create_dir_all(&case_dir)?;
    let several_eps = run
        .methods
        .iter()
        .filter_map(|m| m.eps_pod)
        .any(|e| run.methods.iter().any(|o| o.eps_pod.is_some_and(|x| x != e)));
    for runs in &run.methods {
        let dir = case_dir.join(method_dir(runs, several_eps));
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("report.txt"), report_text(run.case.name(), runs, &run.test_set))?;
        for (i, rep) in runs.reports.iter().enumerate() {
            rep.write_history(BufWriter::new(fs::File::create(dir.join(format!("history_{i}.txt")))?))?;
        }
    }
    fs::write(case_dir.join("metrics.tsv"), table.to_tsv(true))?;
    fs::write(case_dir.join("offline.tsv"), table.offline_tsv())?;
    let summary = CaseSummary::new(run, table);
    let json = serde_json::to_string_pretty(&summary).map_err(|e| BenchError::Format(e.to_string()))?;
    fs::write(case_dir.join("summary.json"), json + "\n")?;
    Ok(case_dir)
}

pub fn read_summary(path: &Path) -> BenchResult<CaseSummary> {
    let text = fs::read_to_string(path)?;
    let s: CaseSummary = serde_json::from_str(&text).map_err(|e| BenchError::Format(e.to_string()))?;
    if s.version != SUMMARY_VERSION {
        return Err(BenchError::Format(format!("summary version {} is not supported", s.version)));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::CaseId;
    use crate::methods::Method;

    fn run() -> CaseRun {
        let rep = |n: usize| SolveReport {
            method: "SI-DSA".into(),
            converged: true,
            iterations: n - 1,
            n_sweep: n,
            change_history: vec![0.5, 2.5e-13],
            final_residual: 1.5e-13,
            wall_seconds: 0.25,
        };
        CaseRun {
            case: CaseId::CrossRegime,
            scale: 0.5,
            seed: 3,
            eps_sisa: 1e-11,
            test_set: vec![vec![12.5], vec![17.25]],
            methods: vec![
                MethodRuns { method: Method::Dsa, eps_pod: None, reports: vec![rep(3), rep(4)] },
                MethodRuns { method: Method::Romsa { window: 3 }, eps_pod: Some(1e-9), reports: vec![rep(2), rep(2)] },
                MethodRuns { method: Method::Romsa { window: 3 }, eps_pod: Some(1e-11), reports: vec![rep(2), rep(3)] },
            ],
            offline: None,
            ranks: None,
        }
    }

    #[test]
    fn golden_report_file() {
        let r = run();
        let text = report_text("cross_regime", &r.methods[0], &r.test_set);
        let expect = "# case=cross_regime method=SI-DSA\n\
mu_index\tmu\tmethod\tconverged\titerations\tn_sweep\tfinal_residual\twall_seconds\n\
0\t12.5\tSI-DSA\ttrue\t2\t3\t1.5e-13\t2.5e-1\n\
1\t17.25\tSI-DSA\ttrue\t3\t4\t1.5e-13\t2.5e-1\n";
        assert_eq!(text, expect);
        let back = parse_report(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].0, vec![17.25]);
        assert_eq!(back[1].1.n_sweep, 4);
    }

    #[test]
    fn golden_summary_and_layout() {
        let r = run();
        let table = MetricsTable::from_run(&r);
        let dir = tempfile::tempdir().unwrap();
        let case_dir = write_case(dir.path(), &r, &table).unwrap();
        for sub in ["DSA", "ROMSA-3_pod1e-9", "ROMSA-3_pod1e-11"] {
            assert!(case_dir.join(sub).join("report.txt").exists(), "{sub}");
            assert!(case_dir.join(sub).join("history_1.txt").exists(), "{sub}");
        }
        let h = fs::read_to_string(case_dir.join("DSA/history_0.txt")).unwrap();
        assert_eq!(h, "1\t5.00000000000000000e-1\n2\t2.49999999999999995e-13\n");
        let s = read_summary(&case_dir.join("summary.json")).unwrap();
        assert_eq!(s, CaseSummary::new(&r, &table));
        let json = fs::read_to_string(case_dir.join("summary.json")).unwrap();
        assert!(json.starts_with("{\n  \"version\": 1,\n  \"case\": \"cross_regime\",\n  \"scale\": 0.5,"));
        let tsv = fs::read_to_string(case_dir.join("metrics.tsv")).unwrap();
        assert_eq!(MetricsTable::from_tsv(&tsv).unwrap().rows.len(), 3);
    }
}
