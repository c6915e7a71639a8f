//! Source iteration with synthetic corrections, and preconditioned GMRES.
//!
//! Every solver counts transport sweeps: one sweep applies
//! `(D_j + Sigma_t)^{-1}` for all directions.

mod gmres;
mod report;

use std::time::Instant;

use faer::sparse::linalg::solvers::SymbolicLu;

pub use gmres::{restarted_gmres, GmresOutcome};
pub use report::SolveReport;

use crate::dsa::DsaOperator;
use crate::error::Result;
use crate::scalar::{axpy, norm_inf, Real};
use crate::system::TransportSystem;

#[derive(Debug, Clone, Copy)]
pub struct SolveConfig<T> {
    /// Stop when `||rho* - rho||_inf` drops below this.
    pub tolerance: T,
    pub max_iterations: usize,
    pub gmres_restart: usize,
    /// Relative preconditioned residual target for GMRES.
    pub gmres_tolerance: T,
}

impl<T: Real> SolveConfig<T> {
    pub fn new(tolerance: T) -> Self {
        Self { tolerance, max_iterations: 1000, gmres_restart: 25, gmres_tolerance: tolerance }
    }
    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }
    pub fn with_gmres(mut self, restart: usize, tolerance: T) -> Self {
        self.gmres_restart = restart;
        self.gmres_tolerance = tolerance;
        self
    }
}

/// Correction `delta rho^(l)` added after the sweep of iteration `l`.
pub trait CorrectionStrategy<T: Real> {
    fn label(&self) -> String;

    /// Parameter-specific setup before the first iteration.
    fn prepare(&mut self, _system: &TransportSystem<T>) -> Result<()> {
        Ok(())
    }

    fn correct(&mut self, system: &TransportSystem<T>, iteration: usize, delta: &[T]) -> Result<Vec<T>>;
}

/// Plain source iteration.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoCorrection;

impl<T: Real> CorrectionStrategy<T> for NoCorrection {
    fn label(&self) -> String {
        "SI".into()
    }
    fn correct(&mut self, system: &TransportSystem<T>, _: usize, _: &[T]) -> Result<Vec<T>> {
        Ok(vec![T::zero(); system.n_dof()])
    }
}

/// Diffusion correction; the operator is factored in `prepare`, or on first
/// use when built lazily.
#[derive(Debug, Default)]
pub struct DsaCorrection<T: Real> {
    op: Option<DsaOperator<T>>,
    symbolic: Option<SymbolicLu<usize>>,
    lazy: bool,
    tolerance: Option<T>,
}

impl<T: Real> DsaCorrection<T> {
    pub fn new() -> Self {
        Self { op: None, symbolic: None, lazy: false, tolerance: None }
    }
    /// Defers factorization until the first correction.
    pub fn lazy() -> Self {
        Self { lazy: true, ..Self::new() }
    }
    /// Shares a symbolic factorization across parameters.
    pub fn with_symbolic(mut self, symbolic: SymbolicLu<usize>) -> Self {
        self.symbolic = Some(symbolic);
        self
    }
    pub fn with_tolerance(mut self, tol: T) -> Self {
        self.tolerance = Some(tol);
        self
    }
    pub fn symbolic(&self) -> Option<&SymbolicLu<usize>> {
        self.op.as_ref().map(|o| o.symbolic()).or(self.symbolic.as_ref())
    }
    pub fn is_built(&self) -> bool {
        self.op.is_some()
    }

    fn ensure(&mut self, system: &TransportSystem<T>) -> Result<&DsaOperator<T>> {
        let stale = match &self.op {
            Some(op) => op.n_dof() != system.n_dof(),
            None => true,
        };
        if stale {
            let mut op = DsaOperator::build_with_symbolic(system, self.symbolic.as_ref())?;
            if let Some(t) = self.tolerance {
                op = op.with_tolerance(t);
            }
            if self.symbolic.is_none() {
                self.symbolic = Some(op.symbolic().clone());
            }
            self.op = Some(op);
        }
        Ok(self.op.as_ref().unwrap())
    }

    /// `(I + C Sigma_s) y`
    pub fn precondition(&mut self, system: &TransportSystem<T>, y: &[T]) -> Result<Vec<T>> {
        let mut out = self.ensure(system)?.correct(system, y)?;
        axpy(T::one(), y, &mut out);
        Ok(out)
    }
}

impl<T: Real> CorrectionStrategy<T> for DsaCorrection<T> {
    fn label(&self) -> String {
        "SI-DSA".into()
    }
    fn prepare(&mut self, system: &TransportSystem<T>) -> Result<()> {
        self.op = None;
        if !self.lazy {
            self.ensure(system)?;
        }
        Ok(())
    }
    fn correct(&mut self, system: &TransportSystem<T>, _: usize, delta: &[T]) -> Result<Vec<T>> {
        self.ensure(system)?.correct(system, delta)
    }
}

/// Source iteration `rho* = L rho + b`, `rho <- rho* + correction`.
///
/// Sweep count: one for `b` plus one per iteration.
pub fn sisa_solve<T: Real>(
    system: &TransportSystem<T>,
    strategy: &mut dyn CorrectionStrategy<T>,
    config: &SolveConfig<T>,
    initial: Option<&[T]>,
) -> Result<(Vec<T>, SolveReport)> {
    let start = Instant::now();
    let n = system.n_dof();
    strategy.prepare(system)?;
    let b = system.rhs_bar()?;
    let mut n_sweep = 1;
    let mut rho = initial.map_or_else(|| vec![T::zero(); n], <[T]>::to_vec);
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for l in 1..=config.max_iterations {
        iterations = l;
        let mut star = system.apply_l(&rho)?;
        n_sweep += 1;
        axpy(T::one(), &b, &mut star);
        let delta: Vec<T> = star.iter().zip(&rho).map(|(s, r)| *s - *r).collect();
        let change = norm_inf(&delta);
        history.push(change.to_f64_lossy());
        if change < config.tolerance {
            rho = star;
            converged = true;
            break;
        }
        let corr = strategy.correct(system, l, &delta)?;
        axpy(T::one(), &corr, &mut star);
        rho = star;
    }
    let wall = start.elapsed().as_secs_f64();
    let residual = system.residual_inf(&rho)?.to_f64_lossy();
    Ok((
        rho,
        SolveReport {
            method: strategy.label(),
            converged,
            iterations,
            n_sweep,
            change_history: history,
            final_residual: residual,
            wall_seconds: wall,
        },
    ))
}

/// Result of a source iteration that keeps angular fluxes.
#[derive(Debug, Clone)]
pub struct AngularSolution<T> {
    pub rho: Vec<T>,
    /// Final angular flux `f^(n_conv)`.
    pub angular: Vec<T>,
    /// Angular fluxes `f^(l)` for `l = 1..=min(n_conv, window)`.
    pub intermediates: Vec<Vec<T>>,
    pub report: SolveReport,
}

/// Source iteration on the angular flux: each iteration sweeps with source
/// `Sigma_s rho + G` and the inflow, so that `f^(l)` is available. Produces
/// the same density iterates as [`sisa_solve`].
pub fn sisa_solve_angular<T: Real>(
    system: &TransportSystem<T>,
    strategy: &mut dyn CorrectionStrategy<T>,
    config: &SolveConfig<T>,
    window: usize,
) -> Result<AngularSolution<T>> {
    let start = Instant::now();
    let n = system.n_dof();
    strategy.prepare(system)?;
    let mut rho = vec![T::zero(); n];
    let mut history = Vec::new();
    let mut intermediates = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut angular = Vec::new();
    for l in 1..=config.max_iterations {
        iterations = l;
        let mut q = system.apply_sigma_s(&rho);
        axpy(T::one(), system.source(), &mut q);
        let (mut star, f) = system.sweep_angular(&q, true)?;
        if l <= window {
            intermediates.push(f.clone());
        }
        angular = f;
        let delta: Vec<T> = star.iter().zip(&rho).map(|(s, r)| *s - *r).collect();
        let change = norm_inf(&delta);
        history.push(change.to_f64_lossy());
        if change < config.tolerance {
            rho = star;
            converged = true;
            break;
        }
        let corr = strategy.correct(system, l, &delta)?;
        axpy(T::one(), &corr, &mut star);
        rho = star;
    }
    let wall = start.elapsed().as_secs_f64();
    let residual = system.residual_inf(&rho)?.to_f64_lossy();
    Ok(AngularSolution {
        rho,
        angular,
        intermediates,
        report: SolveReport {
            method: strategy.label(),
            converged,
            iterations,
            n_sweep: iterations,
            change_history: history,
            final_residual: residual,
            wall_seconds: wall,
        },
    })
}

/// Restarted GMRES on `(I - L) rho = b`, left-preconditioned by
/// `I + C Sigma_s` when a diffusion correction is given.
///
/// Sweep count: one for `b` plus one per operator application (including
/// initial and restart residuals and the final true-residual check).
pub fn gmres_solve<T: Real>(
    system: &TransportSystem<T>,
    mut preconditioner: Option<&mut DsaCorrection<T>>,
    config: &SolveConfig<T>,
    initial: Option<&[T]>,
) -> Result<(Vec<T>, SolveReport)> {
    let start = Instant::now();
    let label = if preconditioner.is_some() { "PGMRES" } else { "GMRES" };
    if let Some(p) = preconditioner.as_deref_mut() {
        p.prepare(system)?;
    }
    let b = system.rhs_bar()?;
    let pb = match preconditioner.as_deref_mut() {
        Some(p) => p.precondition(system, &b)?,
        None => b,
    };
    let outcome = restarted_gmres(
        |x: &[T]| {
            let lx = system.apply_l(x)?;
            let y: Vec<T> = x.iter().zip(&lx).map(|(a, b)| *a - *b).collect();
            match preconditioner.as_deref_mut() {
                Some(p) => p.precondition(system, &y),
                None => Ok(y),
            }
        },
        &pb,
        initial,
        config.gmres_restart,
        config.gmres_tolerance,
        config.max_iterations,
    )?;
    let wall = start.elapsed().as_secs_f64();
    let residual = system.residual_inf(&outcome.x)?.to_f64_lossy();
    Ok((
        outcome.x,
        SolveReport {
            method: label.into(),
            converged: outcome.converged,
            iterations: outcome.iterations,
            n_sweep: 1 + outcome.applications,
            change_history: outcome.history.iter().map(|v| v.to_f64_lossy()).collect(),
            final_residual: residual,
            wall_seconds: wall,
        },
    ))
}
