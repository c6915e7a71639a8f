use std::time::Instant;

use crate::error::Result;
use crate::mesh::Mesh;
use crate::problem::ProblemDefinition;
use crate::quadrature::AngularQuadrature;
use crate::rom::pod::PodBuilder;
use crate::scalar::Real;
use crate::solvers::{sisa_solve_angular, DsaCorrection, SolveConfig};
use crate::system::TransportSystem;

/// Converged angular flux of one training parameter together with the
/// first iterates of the diffusion-accelerated source iteration.
#[derive(Debug, Clone)]
pub struct TrainingSnapshot<T> {
    pub mu: Vec<T>,
    pub converged: Vec<T>,
    /// `f^(l)` for `l = 1..=min(n_conv, window)`
    pub intermediates: Vec<Vec<T>>,
    pub n_conv: usize,
}

impl<T: Real> TrainingSnapshot<T> {
    /// Exact solutions `f - f^(l)` of the correction equations of the first
    /// `min(n_conv, window)` iterations.
    pub fn corrections(&self, window: usize) -> impl Iterator<Item = Vec<T>> + '_ {
        let w = window.min(self.n_conv).min(self.intermediates.len());
        self.intermediates[..w]
            .iter()
            .map(move |fl| self.converged.iter().zip(fl).map(|(a, b)| *a - *b).collect())
    }
}

pub trait SnapshotSink<T> {
    fn accept(&mut self, snapshot: TrainingSnapshot<T>) -> Result<()>;
}

/// Keeps all snapshots in memory.
#[derive(Debug, Clone, Default)]
pub struct SnapshotStore<T> {
    pub snapshots: Vec<TrainingSnapshot<T>>,
}

impl<T: Real> SnapshotSink<T> for SnapshotStore<T> {
    fn accept(&mut self, snapshot: TrainingSnapshot<T>) -> Result<()> {
        self.snapshots.push(snapshot);
        Ok(())
    }
}

/// Feeds snapshots straight into POD builders: converged fluxes into the
/// solution basis and windowed corrections into one builder per window.
#[derive(Debug, Clone)]
pub struct PodAccumulator<T> {
    pub solution: PodBuilder<T>,
    pub corrections: Vec<(usize, PodBuilder<T>)>,
}

impl<T: Real> PodAccumulator<T> {
    pub fn new(n_rows: usize, windows: &[usize]) -> Self {
        Self {
            solution: PodBuilder::new(n_rows),
            corrections: windows.iter().map(|&w| (w, PodBuilder::new(n_rows))).collect(),
        }
    }
}

impl<T: Real> SnapshotSink<T> for PodAccumulator<T> {
    fn accept(&mut self, snapshot: TrainingSnapshot<T>) -> Result<()> {
        for (w, builder) in &mut self.corrections {
            let cols: Vec<Vec<T>> = snapshot.corrections(*w).collect();
            let b = cols.len();
            if b > 0 {
                builder.push_block(cols.concat(), b)?;
            }
        }
        self.solution.push(&snapshot.converged)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CollectionSummary<T> {
    pub n_conv: Vec<usize>,
    /// Training parameters whose solve did not converge.
    pub excluded: Vec<Vec<T>>,
    pub seconds: f64,
}

/// Runs diffusion-accelerated source iteration for every training
/// parameter and hands the snapshots to `sink`. Non-converged runs are
/// logged and excluded.
pub fn collect_snapshots<T: Real>(
    problem: &ProblemDefinition<T>,
    mesh: &Mesh<T>,
    quad: &AngularQuadrature<T>,
    training: &[Vec<T>],
    config: &SolveConfig<T>,
    window: usize,
    sink: &mut dyn SnapshotSink<T>,
) -> Result<CollectionSummary<T>> {
    let start = Instant::now();
    let mut summary = CollectionSummary::default();
    let mut dsa = DsaCorrection::new();
    for mu in training {
        let system = TransportSystem::assemble(problem, mesh, quad, mu)?;
        let sol = sisa_solve_angular(&system, &mut dsa, config, window)?;
        if !sol.report.converged {
            log::warn!(
                "training solve at {:?} stopped after {} iterations (change {:e}); excluded",
                mu.iter().map(|m| m.to_f64_lossy()).collect::<Vec<_>>(),
                sol.report.iterations,
                sol.report.change_history.last().copied().unwrap_or(f64::NAN)
            );
            summary.excluded.push(mu.clone());
            continue;
        }
        summary.n_conv.push(sol.report.iterations);
        sink.accept(TrainingSnapshot {
            mu: mu.clone(),
            converged: sol.angular,
            intermediates: sol.intermediates,
            n_conv: sol.report.iterations,
        })?;
    }
    summary.seconds = start.elapsed().as_secs_f64();
    Ok(summary)
}
