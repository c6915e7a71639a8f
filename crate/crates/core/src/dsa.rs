//! Consistent diffusion synthetic acceleration.
//!
//! The correction `delta_rho = C Sigma_s Delta` comes from the first two
//! angular moments of the discrete transport operator. With the streaming
//! operator split per axis as
//! `D_j = sum_a (v_a DC_a - |v_a| / 2 DJ_a)`, where
//! `DC_a = (D(+e_a) - D(-e_a)) / 2` and `DJ_a = -(D(+e_a) + D(-e_a))`,
//! closing the P1 expansion gives the mixed system in `(rho, J_1..J_d)`:
//!
//! ```text
//! (Sigma_a - 1/2 sum_a <|v_a|> DJ_a) rho + sum_a 3<v_a^2> DC_a J_a = S
//! <v_c^2> DC_c rho + (3<v_c^2> Sigma_t - 3/2 sum_a <v_c^2 |v_a|> DJ_a) J_c = 0
//! ```
//!
//! which is solved directly instead of forming its Schur complement.

use std::io::Write;

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::mesh::Geometry;
use crate::quadrature::AngularQuadrature;
use crate::scalar::{norm_inf, Real};
use crate::sparse::CsrMatrix;
use crate::system::TransportSystem;

/// Angular moments entering the diffusion operator.
#[derive(Debug, Clone, Copy)]
pub struct DiffusionMoments<T> {
    /// `<v_c^2>`
    pub v2: [T; 2],
    /// `<|v_a|>`
    pub abs_v: [T; 2],
    /// `<v_c^2 |v_a|>` indexed `[c][a]`
    pub v2_abs: [[T; 2]; 2],
}

impl<T: Real> DiffusionMoments<T> {
    pub fn from_quadrature(q: &AngularQuadrature<T>) -> Self {
        let mut m = Self { v2: [T::zero(); 2], abs_v: [T::zero(); 2], v2_abs: [[T::zero(); 2]; 2] };
        for c in 0..2 {
            m.v2[c] = q.average(|v| v[c] * v[c]);
            m.abs_v[c] = q.average(|v| v[c].abs());
            for a in 0..2 {
                m.v2_abs[c][a] = q.average(|v| v[c] * v[c] * v[a].abs());
            }
        }
        m
    }
}

pub struct DsaOperator<T: Real> {
    n_dof: usize,
    dim: usize,
    matrix: CsrMatrix<T>,
    symbolic: SymbolicLu<usize>,
    lu: Lu<usize, T>,
    tolerance: T,
    moments: DiffusionMoments<T>,
}

impl<T: Real> std::fmt::Debug for DsaOperator<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DsaOperator")
            .field("n_dof", &self.n_dof)
            .field("dim", &self.dim)
            .field("nnz", &self.matrix.nnz())
            .finish()
    }
}

/// Triplets of the mixed diffusion matrix.
pub fn diffusion_triplets<T: Real>(system: &TransportSystem<T>, m: &DiffusionMoments<T>) -> (usize, Vec<(usize, usize, T)>) {
    let n = system.n_dof();
    let d = system.geometry().dimension();
    let nl = system.space().local_dofs();
    let half = T::lit(0.5);
    let three = T::lit(3.0);
    let mut trips: Vec<(usize, usize, T)> = Vec::new();
    let st = system.sigma_t_blocks();
    let ss = system.sigma_s_blocks();
    for c in 0..system.space().n_cells() {
        for k in 0..nl {
            for l in 0..nl {
                let i = c * nl * nl + k * nl + l;
                let (r, col) = (c * nl + k, c * nl + l);
                let sa = st[i] - ss[i];
                if sa != T::zero() {
                    trips.push((r, col, sa));
                }
                if st[i] != T::zero() {
                    for cc in 0..d {
                        trips.push(((1 + cc) * n + r, (1 + cc) * n + col, three * m.v2[cc] * st[i]));
                    }
                }
            }
        }
    }
    for a in 0..d {
        let (ex, ey) = if a == 0 { (T::one(), T::zero()) } else { (T::zero(), T::one()) };
        let plus = system.streaming_triplets(ex, ey);
        let minus = system.streaming_triplets(-ex, -ey);
        // alpha DC_a + beta DJ_a placed in block (bi, bj)
        let mut emit = |bi: usize, bj: usize, alpha: T, beta: T| {
            let cp = half * alpha - beta;
            let cm = -half * alpha - beta;
            for &(r, c, v) in &plus {
                trips.push((bi * n + r, bj * n + c, cp * v));
            }
            for &(r, c, v) in &minus {
                trips.push((bi * n + r, bj * n + c, cm * v));
            }
        };
        emit(0, 0, T::zero(), -half * m.abs_v[a]);
        emit(0, 1 + a, three * m.v2[a], T::zero());
        emit(1 + a, 0, m.v2[a], T::zero());
        for cc in 0..d {
            emit(1 + cc, 1 + cc, T::zero(), -T::lit(1.5) * m.v2_abs[cc][a]);
        }
    }
    ((1 + d) * n, trips)
}

impl<T: Real> DsaOperator<T> {
    pub fn build(system: &TransportSystem<T>) -> Result<Self> {
        Self::build_with_symbolic(system, None)
    }

    /// Reuses a symbolic factorization from an operator with the same
    /// sparsity pattern (same mesh and quadrature).
    pub fn build_with_symbolic(system: &TransportSystem<T>, symbolic: Option<&SymbolicLu<usize>>) -> Result<Self> {
        let moments = DiffusionMoments::from_quadrature(system.quadrature());
        let (size, trips) = diffusion_triplets(system, &moments);
        let matrix = CsrMatrix::from_triplets(size, size, trips);
        let ftrips: Vec<Triplet<usize, usize, T>> = matrix.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        let sparse = SparseColMat::<usize, T>::try_new_from_triplets(size, size, &ftrips)
            .map_err(|e| Error::DsaFactorization(format!("{e:?}")))?;
        let symbolic = match symbolic {
            Some(s) => s.clone(),
            None => SymbolicLu::try_new(sparse.symbolic()).map_err(|e| Error::DsaFactorization(format!("{e:?}")))?,
        };
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), sparse.as_ref())
            .map_err(|e| Error::DsaFactorization(format!("{e:?}")))?;
        Ok(Self {
            n_dof: system.n_dof(),
            dim: system.geometry().dimension(),
            matrix,
            symbolic,
            lu,
            tolerance: T::epsilon() * T::lit(1e3),
            moments,
        })
    }

    /// Sets the admissible normwise backward error of each solve.
    pub fn with_tolerance(mut self, tol: T) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn symbolic(&self) -> &SymbolicLu<usize> {
        &self.symbolic
    }
    pub fn n_dof(&self) -> usize {
        self.n_dof
    }
    pub fn geometry(&self) -> Geometry {
        if self.dim == 1 { Geometry::Slab } else { Geometry::Xy }
    }
    pub fn moments(&self) -> &DiffusionMoments<T> {
        &self.moments
    }
    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    fn lu_solve(&self, rhs: &[T]) -> Vec<T> {
        let mut b = Mat::<T>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.lu.solve_in_place(b.as_mut());
        (0..rhs.len()).map(|i| b[(i, 0)]).collect()
    }

    /// Solves the mixed system with zeroth-moment source `s`; returns the
    /// density component.
    pub fn solve(&self, s: &[T]) -> Result<Vec<T>> {
        if s.len() != self.n_dof {
            return Err(Error::DimensionMismatch { expected: self.n_dof, got: s.len() });
        }
        let size = self.matrix.rows();
        let mut rhs = vec![T::zero(); size];
        rhs[..self.n_dof].copy_from_slice(s);
        let mut x = self.lu_solve(&rhs);
        let anorm = self.matrix.norm_inf();
        let bnorm = norm_inf(&rhs);
        let mut err = T::zero();
        for _ in 0..3 {
            let ax = self.matrix.matvec(&x);
            let r: Vec<T> = rhs.iter().zip(&ax).map(|(b, a)| *b - *a).collect();
            let denom = anorm * norm_inf(&x) + bnorm;
            err = if denom > T::zero() { norm_inf(&r) / denom } else { T::zero() };
            if err <= self.tolerance || !err.is_finite() {
                break;
            }
            let dx = self.lu_solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += *di;
            }
        }
        if !(err <= self.tolerance) {
            return Err(Error::DsaSolve { achieved: err.to_f64_lossy(), tolerance: self.tolerance.to_f64_lossy() });
        }
        x.truncate(self.n_dof);
        Ok(x)
    }

    /// `C Sigma_s delta`
    pub fn correct(&self, system: &TransportSystem<T>, delta: &[T]) -> Result<Vec<T>> {
        self.solve(&system.apply_sigma_s(delta))
    }

    pub fn write_triplets<W: Write>(&self, w: W) -> Result<()> {
        self.matrix.write_triplets(w, "diffusion")
    }
}
