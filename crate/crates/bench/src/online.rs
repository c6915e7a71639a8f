//! Test-set solves for every method of a case.

use std::time::Instant;

use rte_core::rom::{romig, RomsaCorrection, RomsadCorrection};
use rte_core::solvers::*;
use rte_core::TransportSystem;

use crate::cases::{BenchmarkCase, CaseId};
use crate::methods::Method;
use crate::offline::{ModelSet, OfflineArtifacts, OfflineCost};
use crate::{BenchError, BenchResult};

/// Reports of one method over the test set, in test-set order.
#[derive(Debug, Clone)]
pub struct MethodRuns {
    pub method: Method,
    /// POD tolerance of the models used, for reduced-order methods.
    pub eps_pod: Option<f64>,
    pub reports: Vec<SolveReport>,
}

impl MethodRuns {
    pub fn mean_n_sweep(&self) -> f64 {
        mean(self.reports.iter().map(|r| r.n_sweep as f64))
    }
    pub fn mean_residual(&self) -> f64 {
        mean(self.reports.iter().map(|r| r.final_residual))
    }
    pub fn mean_wall(&self) -> f64 {
        mean(self.reports.iter().map(|r| r.wall_seconds))
    }
    pub fn n_converged(&self) -> usize {
        self.reports.iter().filter(|r| r.converged).count()
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

#[derive(Debug, Clone)]
pub struct CaseRun {
    pub case: CaseId,
    pub scale: f64,
    pub seed: u64,
    pub eps_sisa: f64,
    pub test_set: Vec<Vec<f64>>,
    pub methods: Vec<MethodRuns>,
    pub offline: Option<OfflineCost>,
    pub ranks: Option<String>,
}

impl CaseRun {
    pub fn find(&self, method: Method, eps_pod: Option<f64>) -> Option<&MethodRuns> {
        self.methods.iter().find(|m| m.method == method && (eps_pod.is_none() || m.eps_pod == eps_pod))
    }
}

fn config(case: &BenchmarkCase) -> SolveConfig<f64> {
    SolveConfig::new(case.eps_sisa)
        .with_max_iterations(case.max_iterations)
        .with_gmres(case.gmres_restart, case.gmres_tol)
}

/// Solves `system` with `method`. `dsa` is reused across calls so the
/// symbolic factorization of the diffusion operator is shared.
pub fn run_method(
    case: &BenchmarkCase,
    system: &TransportSystem<f64>,
    method: Method,
    models: Option<&ModelSet>,
    dsa: &mut DsaCorrection<f64>,
) -> BenchResult<(Vec<f64>, SolveReport)> {
    let cfg = config(case);
    let need = |what: &str| BenchError::Config(format!("{} needs offline {what}", method.label()));
    let (rho, mut report) = match method {
        Method::Si => sisa_solve(system, &mut NoCorrection, &cfg, None)?,
        Method::Dsa => sisa_solve(system, dsa, &cfg, None)?,
        Method::Pgmres => gmres_solve(system, Some(dsa), &cfg, None)?,
        Method::Romig | Method::PgmresRomig => {
            let model = models.ok_or_else(|| need("models"))?.solution()?;
            let t = Instant::now();
            let guess = romig(&model, system)?;
            let rom_seconds = t.elapsed().as_secs_f64();
            let (rho, mut rep) = if method == Method::Romig {
                sisa_solve(system, dsa, &cfg, Some(&guess))?
            } else {
                gmres_solve(system, Some(dsa), &cfg, Some(&guess))?
            };
            rep.wall_seconds += rom_seconds;
            (rho, rep)
        }
        Method::Romsa { window } => {
            let model = models.ok_or_else(|| need("models"))?.correction(window)?;
            sisa_solve(system, &mut RomsaCorrection::new(model), &cfg, None)?
        }
        Method::Romsad { window, theta } => {
            let set = models.ok_or_else(|| need("models"))?;
            let eps_switch = RomsadCorrection::switch_tolerance(case.eta, case.eps_sisa, set.eps_pod);
            let mut lazy = DsaCorrection::lazy();
            if let Some(s) = dsa.symbolic() {
                lazy = lazy.with_symbolic(s.clone());
            }
            let mut s = RomsadCorrection::new(set.correction(window)?, theta, eps_switch).with_dsa(lazy);
            sisa_solve(system, &mut s, &cfg, None)?
        }
    };
    report.method = method.long_label();
    Ok((rho, report))
}

/// Runs `methods` on every test parameter. Reduced-order methods run once
/// per POD tolerance in `artifacts`.
pub fn run_case(
    case: &BenchmarkCase,
    artifacts: Option<&OfflineArtifacts>,
    methods: &[Method],
    test_set: &[Vec<f64>],
) -> BenchResult<CaseRun> {
    let mut slots: Vec<MethodRuns> = Vec::new();
    for &m in methods {
        if m.is_reduced() {
            let arts = artifacts.ok_or_else(|| BenchError::Config(format!("{} needs offline models", m.label())))?;
            for set in &arts.models {
                slots.push(MethodRuns { method: m, eps_pod: Some(set.eps_pod), reports: Vec::new() });
            }
        } else {
            slots.push(MethodRuns { method: m, eps_pod: None, reports: Vec::new() });
        }
    }
    let mut dsa = DsaCorrection::new();
    for (i, mu) in test_set.iter().enumerate() {
        let system = TransportSystem::assemble(&case.problem, &case.mesh, &case.quadrature, mu)?;
        for slot in &mut slots {
            let models = match (slot.eps_pod, artifacts) {
                (Some(eps), Some(a)) => Some(a.for_eps(eps)?),
                _ => None,
            };
            let (_, rep) = run_method(case, &system, slot.method, models, &mut dsa)?;
            log::info!(
                "{} mu[{i}] {}{}: n_sweep {} residual {:e} ({:.3} s)",
                case.id,
                rep.method,
                slot.eps_pod.map(|e| format!(" @{e:e}")).unwrap_or_default(),
                rep.n_sweep,
                rep.final_residual,
                rep.wall_seconds
            );
            if !rep.converged {
                log::warn!("{} mu[{i}] {} did not converge", case.id, rep.method);
            }
            slot.reports.push(rep);
        }
    }
    Ok(CaseRun {
        case: case.id,
        scale: case.scale,
        seed: case.seed,
        eps_sisa: case.eps_sisa,
        test_set: test_set.to_vec(),
        methods: slots,
        offline: artifacts.map(|a| a.cost.clone()),
        ranks: artifacts.map(|a| a.rank_table()),
    })
}
