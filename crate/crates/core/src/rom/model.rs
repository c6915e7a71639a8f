use std::time::Instant;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::mesh::Geometry;
use crate::rom::pod::PodBasis;
use crate::scalar::Real;
use crate::system::TransportSystem;

/// What the reduced space approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Angular flux of the parametric problem.
    Solution,
    /// Solutions of the kinetic correction equation, built with the given
    /// window of early iterations.
    Correction { window: usize },
}

impl ModelKind {
    pub fn tag(self) -> u32 {
        match self {
            ModelKind::Solution => 0,
            ModelKind::Correction { window } => window as u32,
        }
    }
    pub fn from_tag(tag: u32) -> Self {
        if tag == 0 { ModelKind::Solution } else { ModelKind::Correction { window: tag as usize } }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OfflineTimings {
    pub basis_seconds: f64,
    pub operator_seconds: f64,
}

/// Galerkin reduced model on a POD basis: reduced affine operators and the
/// angular aggregates of the basis needed online.
#[derive(Debug, Clone)]
pub struct ReducedModel<T> {
    pub kind: ModelKind,
    pub geometry: Geometry,
    pub n_dir: usize,
    pub n_dof: usize,
    pub rank: usize,
    pub eps_pod: T,
    pub singular_values: Vec<T>,
    pub discarded_fraction: T,
    /// `U_r^T A_k U_r`
    pub operators: Vec<DenseMatrix<T>>,
    /// `sum_j w_j U_{r,j}`, column-major `n_dof x rank`
    pub u_rho: Vec<T>,
    /// `sum_j U_{r,j}`, column-major `n_dof x rank`
    pub u_iso: Vec<T>,
    /// `sum_j U_{r,j}^T g_{j,t}` for every inflow term
    pub inflow: Vec<Vec<T>>,
    pub basis: Option<Vec<T>>,
    pub timings: OfflineTimings,
}

impl<T: Real> ReducedModel<T> {
    /// Projects the affine components of `system` (any parameter value of the
    /// same problem) onto `pod`.
    pub fn build(pod: PodBasis<T>, system: &TransportSystem<T>, kind: ModelKind) -> Result<Self> {
        let start = Instant::now();
        let n = system.n_unknowns();
        if pod.n_rows != n {
            return Err(Error::DimensionMismatch { expected: n, got: pod.n_rows });
        }
        let r = pod.rank;
        let nd = system.n_dof();
        let nv = system.n_dir();
        let u = MatRef::from_column_major_slice(&pod.basis, n, r);
        let chunk = 16;
        let mut operators = Vec::with_capacity(system.n_affine());
        let mut w = vec![T::zero(); n * chunk.min(r.max(1))];
        for k in 0..system.n_affine() {
            let mut op = Mat::<T>::zeros(r, r);
            let mut c0 = 0;
            while c0 < r {
                let nc = chunk.min(r - c0);
                for c in 0..nc {
                    let a = system.apply_affine_component(k, pod.column(c0 + c))?;
                    w[c * n..(c + 1) * n].copy_from_slice(&a);
                }
                let wm = MatRef::from_column_major_slice(&w[..n * nc], n, nc);
                matmul(op.as_mut().subcols_mut(c0, nc), Accum::Replace, u.transpose(), wm, T::one(), Par::Seq);
                c0 += nc;
            }
            operators.push(DenseMatrix::from_fn(r, r, |i, j| op[(i, j)]));
        }
        drop(w);
        let mut u_rho = vec![T::zero(); nd * r];
        let mut u_iso = vec![T::zero(); nd * r];
        for c in 0..r {
            let col = pod.column(c);
            for j in 0..nv {
                let wj = system.quadrature().weight(j);
                let blk = &col[j * nd..(j + 1) * nd];
                for i in 0..nd {
                    u_rho[c * nd + i] += wj * blk[i];
                    u_iso[c * nd + i] += blk[i];
                }
            }
        }
        let mut inflow = Vec::with_capacity(system.n_inflow_terms());
        for t in 0..system.n_inflow_terms() {
            let mut proj = vec![T::zero(); r];
            for j in 0..nv {
                let g = system.inflow_component_vector(t, j);
                let nz: Vec<usize> = (0..nd).filter(|&i| g[i] != T::zero()).collect();
                for (c, p) in proj.iter_mut().enumerate() {
                    let blk = &pod.column(c)[j * nd..(j + 1) * nd];
                    for &i in &nz {
                        *p += blk[i] * g[i];
                    }
                }
            }
            inflow.push(proj);
        }
        Ok(Self {
            kind,
            geometry: system.geometry(),
            n_dir: nv,
            n_dof: nd,
            rank: r,
            eps_pod: pod.eps_pod,
            singular_values: pod.singular_values,
            discarded_fraction: pod.discarded_fraction,
            operators,
            u_rho,
            u_iso,
            inflow,
            basis: Some(pod.basis),
            timings: OfflineTimings { basis_seconds: 0.0, operator_seconds: start.elapsed().as_secs_f64() },
        })
    }

    /// Releases the full basis; online methods only need the aggregates.
    pub fn drop_basis(&mut self) {
        self.basis = None;
    }

    pub fn n_affine(&self) -> usize {
        self.operators.len()
    }

    pub fn check_compatible(&self, system: &TransportSystem<T>) -> Result<()> {
        let mismatch = |what: &str, a: usize, b: usize| Error::ModelMismatch(format!("{what}: model {a}, system {b}"));
        if self.n_dof != system.n_dof() {
            return Err(mismatch("n_dof", self.n_dof, system.n_dof()));
        }
        if self.n_dir != system.n_dir() {
            return Err(mismatch("n_dir", self.n_dir, system.n_dir()));
        }
        if self.n_affine() != system.n_affine() {
            return Err(mismatch("affine terms", self.n_affine(), system.n_affine()));
        }
        if self.inflow.len() != system.n_inflow_terms() {
            return Err(mismatch("inflow terms", self.inflow.len(), system.n_inflow_terms()));
        }
        Ok(())
    }

    /// `A_{mu,r} = sum_k psi_k A_{k,r}`
    pub fn reduced_operator(&self, psi: &[T]) -> Result<DenseMatrix<T>> {
        if psi.len() != self.operators.len() {
            return Err(Error::DimensionMismatch { expected: self.operators.len(), got: psi.len() });
        }
        let mut a = DenseMatrix::zeros(self.rank, self.rank);
        for (p, op) in psi.iter().zip(&self.operators) {
            a.add_scaled(*p, op);
        }
        Ok(a)
    }

    /// `M^T x` for a column-major `n_dof x rank` aggregate.
    pub fn project(&self, aggregate: &[T], x: &[T]) -> Vec<T> {
        let m = MatRef::from_column_major_slice(aggregate, self.n_dof, self.rank);
        let xv = MatRef::from_column_major_slice(x, self.n_dof, 1);
        let mut out = Mat::<T>::zeros(self.rank, 1);
        matmul(out.as_mut(), Accum::Replace, m.transpose(), xv, T::one(), Par::Seq);
        (0..self.rank).map(|i| out[(i, 0)]).collect()
    }

    /// `U^rho c`
    pub fn density(&self, c: &[T]) -> Vec<T> {
        let m = MatRef::from_column_major_slice(&self.u_rho, self.n_dof, self.rank);
        let cv = MatRef::from_column_major_slice(c, self.rank, 1);
        let mut out = vec![T::zero(); self.n_dof];
        matmul(MatMut::from_column_major_slice_mut(&mut out, self.n_dof, 1), Accum::Replace, m, cv, T::one(), Par::Seq);
        out
    }

    /// Reduced right-hand side `U_r^T b_mu` of the parametric problem.
    pub fn reduced_rhs(&self, system: &TransportSystem<T>) -> Vec<T> {
        let mut rhs = self.project(&self.u_iso, system.source());
        for (theta, proj) in system.inflow_coefficients().iter().zip(&self.inflow) {
            for (a, b) in rhs.iter_mut().zip(proj) {
                *a += *theta * *b;
            }
        }
        rhs
    }

    /// Reduced coordinates of the Galerkin solution.
    pub fn solve_coefficients(&self, system: &TransportSystem<T>) -> Result<Vec<T>> {
        self.check_compatible(system)?;
        let a = self.reduced_operator(&system.affine_coefficients())?;
        Ok(a.lu()?.solve(&self.reduced_rhs(system)))
    }
}

/// Density of the reduced-order solution, used as an initial guess.
pub fn romig<T: Real>(model: &ReducedModel<T>, system: &TransportSystem<T>) -> Result<Vec<T>> {
    let c = model.solve_coefficients(system)?;
    Ok(model.density(&c))
}
