use std::sync::Arc;

use crate::dense::LuFactors;
use crate::error::{Error, Result};
use crate::rom::model::{ModelKind, ReducedModel};
use crate::scalar::{norm_inf, Real};
use crate::solvers::{CorrectionStrategy, DsaCorrection};
use crate::system::TransportSystem;

/// Correction from the reduced kinetic correction equation:
/// `(dU^T A dU) dc = dU_iso^T Sigma_s Delta`, `delta rho = dU_rho dc`.
#[derive(Debug, Clone)]
pub struct RomsaCorrection<T: Real> {
    model: Arc<ReducedModel<T>>,
    lu: Option<LuFactors<T>>,
}

impl<T: Real> RomsaCorrection<T> {
    pub fn new(model: Arc<ReducedModel<T>>) -> Self {
        Self { model, lu: None }
    }
    fn window(&self) -> usize {
        match self.model.kind {
            ModelKind::Correction { window } => window,
            ModelKind::Solution => 0,
        }
    }
}

impl<T: Real> CorrectionStrategy<T> for RomsaCorrection<T> {
    fn label(&self) -> String {
        format!("SI-ROMSA-{}", self.window())
    }
    fn prepare(&mut self, system: &TransportSystem<T>) -> Result<()> {
        self.lu = None;
        self.model.check_compatible(system)?;
        let a = self.model.reduced_operator(&system.affine_coefficients())?;
        self.lu = Some(a.lu()?);
        Ok(())
    }
    fn correct(&mut self, system: &TransportSystem<T>, _: usize, delta: &[T]) -> Result<Vec<T>> {
        let lu = self.lu.as_ref().ok_or(Error::SingularReducedSystem { dim: self.model.rank })?;
        let rhs = self.model.project(&self.model.u_iso, &system.apply_sigma_s(delta));
        Ok(self.model.density(&lu.solve(&rhs)))
    }
}

/// Reduced correction for the first `theta` iterations while the change is
/// above `eps_switch`, diffusion afterwards. The switch is one-way. The
/// diffusion operator is only factored if it is needed.
#[derive(Debug)]
pub struct RomsadCorrection<T: Real> {
    romsa: RomsaCorrection<T>,
    dsa: DsaCorrection<T>,
    theta: usize,
    eps_switch: T,
    switched: bool,
    switched_at: Option<usize>,
}

impl<T: Real> RomsadCorrection<T> {
    pub fn new(model: Arc<ReducedModel<T>>, theta: usize, eps_switch: T) -> Self {
        Self {
            romsa: RomsaCorrection::new(model),
            dsa: DsaCorrection::lazy(),
            theta,
            eps_switch,
            switched: false,
            switched_at: None,
        }
    }
    /// `eps_switch = eta * max(eps_train, eps_pod)`
    pub fn switch_tolerance(eta: T, eps_train: T, eps_pod: T) -> T {
        eta * eps_train.max(eps_pod)
    }
    pub fn with_dsa(mut self, dsa: DsaCorrection<T>) -> Self {
        self.dsa = dsa;
        self
    }
    /// Iteration at which diffusion took over, if it did.
    pub fn switched_at(&self) -> Option<usize> {
        self.switched_at
    }
    pub fn dsa(&self) -> &DsaCorrection<T> {
        &self.dsa
    }
}

impl<T: Real> CorrectionStrategy<T> for RomsadCorrection<T> {
    fn label(&self) -> String {
        format!("SI-ROMSAD-{},{}", self.romsa.window(), self.theta)
    }
    fn prepare(&mut self, system: &TransportSystem<T>) -> Result<()> {
        self.switched = false;
        self.switched_at = None;
        match self.romsa.prepare(system) {
            Ok(()) => {}
            Err(Error::SingularReducedSystem { dim }) => {
                log::warn!("reduced correction operator of dimension {dim} is singular; using diffusion only");
                self.switched = true;
                self.switched_at = Some(0);
            }
            Err(e) => return Err(e),
        }
        self.dsa.prepare(system)
    }
    fn correct(&mut self, system: &TransportSystem<T>, iteration: usize, delta: &[T]) -> Result<Vec<T>> {
        if !self.switched && iteration <= self.theta && norm_inf(delta) >= self.eps_switch {
            return self.romsa.correct(system, iteration, delta);
        }
        if !self.switched {
            self.switched = true;
            self.switched_at = Some(iteration);
        }
        self.dsa.correct(system, iteration, delta)
    }
}
