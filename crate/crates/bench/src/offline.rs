//! Snapshot collection, POD and reduced operators for one case.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rte_core::rom::io::{load_model, save_model};
use rte_core::rom::*;
use rte_core::solvers::SolveConfig;
use rte_core::TransportSystem;

use crate::cases::BenchmarkCase;
use crate::{BenchError, BenchResult};

/// Reduced models for one POD tolerance.
#[derive(Debug, Clone)]
pub struct ModelSet {
    pub eps_pod: f64,
    pub solution: Option<Arc<ReducedModel<f64>>>,
    pub corrections: BTreeMap<usize, Arc<ReducedModel<f64>>>,
}

impl ModelSet {
    pub fn correction(&self, window: usize) -> BenchResult<Arc<ReducedModel<f64>>> {
        self.corrections
            .get(&window)
            .cloned()
            .ok_or_else(|| BenchError::Config(format!("no correction model with window {window} at eps_pod {:e}", self.eps_pod)))
    }
    pub fn solution(&self) -> BenchResult<Arc<ReducedModel<f64>>> {
        self.solution
            .clone()
            .ok_or_else(|| BenchError::Config(format!("no solution model at eps_pod {:e}", self.eps_pod)))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OfflineCost {
    pub n_train: usize,
    pub n_excluded: usize,
    pub mean_n_conv: f64,
    pub snapshot_seconds: f64,
    pub basis_seconds: f64,
    pub operator_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct OfflineArtifacts {
    pub models: Vec<ModelSet>,
    pub cost: OfflineCost,
}

impl OfflineArtifacts {
    pub fn for_eps(&self, eps_pod: f64) -> BenchResult<&ModelSet> {
        self.models
            .iter()
            .find(|m| m.eps_pod == eps_pod)
            .ok_or_else(|| BenchError::Config(format!("no models for eps_pod {eps_pod:e}")))
    }

    /// One line per model: kind, window, eps, rank.
    pub fn rank_table(&self) -> String {
        let mut s = String::from("kind\twindow\teps_pod\trank\n");
        for set in &self.models {
            if let Some(m) = &set.solution {
                let _ = writeln!(s, "solution\t0\t{:e}\t{}", set.eps_pod, m.rank);
            }
            for (w, m) in &set.corrections {
                let _ = writeln!(s, "correction\t{w}\t{:e}\t{}", set.eps_pod, m.rank);
            }
        }
        s
    }
}

/// Runs the training solves and builds every model the case's methods need.
pub fn run_offline(case: &BenchmarkCase) -> BenchResult<OfflineArtifacts> {
    let windows = case.windows();
    let cfg = SolveConfig::new(case.eps_sisa).with_max_iterations(case.max_iterations);
    let reference = TransportSystem::assemble(&case.problem, &case.mesh, &case.quadrature, &case.training[0])?;
    let n = reference.n_unknowns();
    let mut acc = PodAccumulator::new(n, &windows);
    let window = windows.iter().copied().max().unwrap_or(0);
    log::info!("{}: collecting {} training snapshots", case.id, case.training.len());
    let summary = collect_snapshots(&case.problem, &case.mesh, &case.quadrature, &case.training, &cfg, window, &mut acc)?;
    let mut cost = OfflineCost {
        n_train: case.training.len(),
        n_excluded: summary.excluded.len(),
        mean_n_conv: summary.n_conv.iter().sum::<usize>() as f64 / summary.n_conv.len().max(1) as f64,
        snapshot_seconds: summary.seconds,
        ..Default::default()
    };

    let mut models: Vec<ModelSet> = case
        .eps_pod
        .iter()
        .map(|&eps_pod| ModelSet { eps_pod, solution: None, corrections: BTreeMap::new() })
        .collect();

    let mut builders = Vec::new();
    if case.needs_solution_model() {
        builders.push((ModelKind::Solution, acc.solution));
    }
    for (w, b) in acc.corrections {
        builders.push((ModelKind::Correction { window: w }, b));
    }
    for (kind, builder) in builders {
        let t = Instant::now();
        let pod = builder.finish()?;
        let basis_seconds = t.elapsed().as_secs_f64();
        cost.basis_seconds += basis_seconds;
        for set in &mut models {
            let t = Instant::now();
            let basis = pod.truncate(set.eps_pod);
            let truncate_seconds = t.elapsed().as_secs_f64();
            let mut model = ReducedModel::build(basis, &reference, kind)?;
            model.drop_basis();
            model.timings.basis_seconds = basis_seconds + truncate_seconds;
            cost.basis_seconds += truncate_seconds;
            cost.operator_seconds += model.timings.operator_seconds;
            log::info!("{}: {:?} eps_pod {:e} rank {}", case.id, kind, set.eps_pod, model.rank);
            match kind {
                ModelKind::Solution => set.solution = Some(Arc::new(model)),
                ModelKind::Correction { window } => {
                    set.corrections.insert(window, Arc::new(model));
                }
            }
        }
    }
    Ok(OfflineArtifacts { models, cost })
}

fn model_path(dir: &Path, kind: ModelKind, eps_pod: f64) -> PathBuf {
    match kind {
        ModelKind::Solution => dir.join(format!("solution_{eps_pod:e}.rom")),
        ModelKind::Correction { window } => dir.join(format!("correction_w{window}_{eps_pod:e}.rom")),
    }
}

const COST_FILE: &str = "offline_cost.txt";

/// Writes all models and the cost record under `dir`.
pub fn save_artifacts(artifacts: &OfflineArtifacts, dir: &Path) -> BenchResult<()> {
    fs::create_dir_all(dir)?;
    for set in &artifacts.models {
        if let Some(m) = &set.solution {
            save_model(m.as_ref(), model_path(dir, m.kind, set.eps_pod))?;
        }
        for m in set.corrections.values() {
            save_model(m.as_ref(), model_path(dir, m.kind, set.eps_pod))?;
        }
    }
    let c = &artifacts.cost;
    let text = format!(
        "n_train\t{}\nn_excluded\t{}\nmean_n_conv\t{}\nsnapshot_seconds\t{:e}\nbasis_seconds\t{:e}\noperator_seconds\t{:e}\n",
        c.n_train, c.n_excluded, c.mean_n_conv, c.snapshot_seconds, c.basis_seconds, c.operator_seconds
    );
    fs::write(dir.join(COST_FILE), text)?;
    fs::write(dir.join("ranks.txt"), artifacts.rank_table())?;
    Ok(())
}

/// Loads the models `case` needs from `dir`, naming the first missing file.
pub fn load_artifacts(case: &BenchmarkCase, dir: &Path) -> BenchResult<OfflineArtifacts> {
    let load = |kind, eps| -> BenchResult<Arc<ReducedModel<f64>>> {
        let path = model_path(dir, kind, eps);
        if !path.exists() {
            return Err(BenchError::MissingArtifact(path));
        }
        Ok(Arc::new(load_model(&path)?))
    };
    let mut models = Vec::new();
    for &eps_pod in &case.eps_pod {
        let solution = if case.needs_solution_model() { Some(load(ModelKind::Solution, eps_pod)?) } else { None };
        let mut corrections = BTreeMap::new();
        for w in case.windows() {
            corrections.insert(w, load(ModelKind::Correction { window: w }, eps_pod)?);
        }
        models.push(ModelSet { eps_pod, solution, corrections });
    }
    let cost_path = dir.join(COST_FILE);
    let cost = match fs::read_to_string(&cost_path) {
        Ok(text) => parse_cost(&text)?,
        Err(_) => return Err(BenchError::MissingArtifact(cost_path)),
    };
    Ok(OfflineArtifacts { models, cost })
}

fn parse_cost(text: &str) -> BenchResult<OfflineCost> {
    let mut c = OfflineCost::default();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line.split_once('\t').ok_or_else(|| BenchError::Format(format!("bad cost line `{line}`")))?;
        let num: f64 = v.parse().map_err(|_| BenchError::Format(format!("bad value in `{line}`")))?;
        match k {
            "n_train" => c.n_train = num as usize,
            "n_excluded" => c.n_excluded = num as usize,
            "mean_n_conv" => c.mean_n_conv = num,
            "snapshot_seconds" => c.snapshot_seconds = num,
            "basis_seconds" => c.basis_seconds = num,
            "operator_seconds" => c.operator_seconds = num,
            _ => return Err(BenchError::Format(format!("unknown cost key `{k}`"))),
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::CaseId;

    #[test]
    fn artifacts_roundtrip_and_missing_file_is_named() {
        let mut case = BenchmarkCase::new(CaseId::CrossRegime, 0.05).unwrap();
        case.training = case.training.iter().step_by(10).cloned().collect();
        let art = run_offline(&case).unwrap();
        assert_eq!(art.models.len(), 3);
        assert_eq!(art.cost.n_train, 5);
        let dir = tempfile::tempdir().unwrap();
        save_artifacts(&art, dir.path()).unwrap();
        let back = load_artifacts(&case, dir.path()).unwrap();
        for (a, b) in art.models.iter().zip(&back.models) {
            assert_eq!(a.solution.as_ref().unwrap().rank, b.solution.as_ref().unwrap().rank);
            for (w, m) in &a.corrections {
                assert_eq!(m.u_rho, b.corrections[w].u_rho);
            }
        }
        assert_eq!(back.cost.n_train, 5);

        let victim = model_path(dir.path(), ModelKind::Correction { window: 3 }, 1e-10);
        fs::remove_file(&victim).unwrap();
        match load_artifacts(&case, dir.path()) {
            Err(BenchError::MissingArtifact(p)) => assert_eq!(p, victim),
            other => panic!("expected a missing-artifact error, got {other:?}"),
        }
    }
}
