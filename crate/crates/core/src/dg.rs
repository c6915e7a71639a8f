//! Discontinuous Galerkin space of piecewise-linear functions with an
//! orthonormal scaled-Legendre basis on each cell.
//!
//! In one dimension the basis on a cell of width `h` is
//! `1/sqrt(h)` and `sqrt(3/h) s`, with `s` the reference coordinate in
//! `[-1, 1]`. Rectangles use the tensor product with local index `a + 2 b`.

use crate::error::{Error, Result};
use crate::mesh::{Geometry, Mesh};
use crate::quadrature::gauss_legendre_rule;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct DgSpace {
    geometry: Geometry,
    n_cells: usize,
    local: usize,
}

/// 1D basis values at reference coordinate `s`.
#[inline]
pub fn basis_1d<T: Real>(s: T, h: T) -> [T; 2] {
    let r = h.sqrt().recip();
    [r, T::lit(3f64.sqrt()) * s * r]
}

/// Traces at the left and right end of a cell of width `h`.
#[inline]
pub fn traces<T: Real>(h: T) -> ([T; 2], [T; 2]) {
    let r = h.sqrt().recip();
    let s3 = T::lit(3f64.sqrt()) * r;
    ([r, -s3], [r, s3])
}

/// `int dp_1/dx p_0 dx`, the only nonzero entry of the derivative coupling.
#[inline]
pub fn derivative_coupling<T: Real>(h: T) -> T {
    T::lit(2.0 * 3f64.sqrt()) / h
}

/// Quadrature point inside a cell with all basis values.
#[derive(Debug, Clone, Copy)]
pub struct CellPoint<T> {
    pub x: T,
    pub y: T,
    pub weight: T,
    pub basis: [T; 4],
}

impl DgSpace {
    pub fn new<T: Real>(mesh: &Mesh<T>, degree: usize) -> Result<Self> {
        if degree != 1 {
            return Err(Error::UnsupportedDegree(degree));
        }
        let local = match mesh.geometry() {
            Geometry::Slab => 2,
            Geometry::Xy => 4,
        };
        Ok(Self {
            geometry: mesh.geometry(),
            n_cells: mesh.num_cells(),
            local,
        })
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }
    pub fn local_dofs(&self) -> usize {
        self.local
    }
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }
    pub fn n_dof(&self) -> usize {
        self.n_cells * self.local
    }
    #[inline]
    pub fn dof(&self, cell: usize, k: usize) -> usize {
        cell * self.local + k
    }

    /// Gauss points of a cell with `npts` points per axis.
    pub fn cell_points<T: Real>(&self, mesh: &Mesh<T>, cell: usize, npts: usize) -> Vec<CellPoint<T>> {
        let (s, w) = gauss_legendre_rule::<T>(npts);
        let (ix, iy) = mesh.cell_coords(cell);
        let half = T::lit(0.5);
        let hx = mesh.hx(ix);
        let x0 = mesh.x_faces()[ix];
        let mut out = Vec::new();
        match self.geometry {
            Geometry::Slab => {
                for (si, wi) in s.iter().zip(&w) {
                    let b = basis_1d(*si, hx);
                    out.push(CellPoint {
                        x: x0 + half * hx * (*si + T::one()),
                        y: T::zero(),
                        weight: half * hx * *wi,
                        basis: [b[0], b[1], T::zero(), T::zero()],
                    });
                }
            }
            Geometry::Xy => {
                let hy = mesh.hy(iy);
                let y0 = mesh.y_faces()[iy];
                for (ti, vi) in s.iter().zip(&w) {
                    let by = basis_1d(*ti, hy);
                    for (si, wi) in s.iter().zip(&w) {
                        let bx = basis_1d(*si, hx);
                        out.push(CellPoint {
                            x: x0 + half * hx * (*si + T::one()),
                            y: y0 + half * hy * (*ti + T::one()),
                            weight: half * hx * *wi * half * hy * *vi,
                            basis: [bx[0] * by[0], bx[1] * by[0], bx[0] * by[1], bx[1] * by[1]],
                        });
                    }
                }
            }
        }
        out
    }

    /// `L2` projection (the basis is orthonormal, so coefficients are moments).
    pub fn project<T: Real>(&self, mesh: &Mesh<T>, f: impl Fn(T, T) -> T, npts: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_dof()];
        for c in 0..self.n_cells {
            for p in self.cell_points(mesh, c, npts) {
                let v = f(p.x, p.y) * p.weight;
                for k in 0..self.local {
                    out[self.dof(c, k)] += v * p.basis[k];
                }
            }
        }
        out
    }

    /// Weighted local mass matrix `int sigma phi_k phi_l`, row-major.
    pub fn weighted_mass<T: Real>(&self, points: &[CellPoint<T>], sigma: &[T]) -> Vec<T> {
        let n = self.local;
        let mut m = vec![T::zero(); n * n];
        for (p, &s) in points.iter().zip(sigma) {
            let ws = p.weight * s;
            for k in 0..n {
                for l in 0..n {
                    m[k * n + l] += ws * p.basis[k] * p.basis[l];
                }
            }
        }
        m
    }

    /// Point evaluation of a DG function.
    pub fn evaluate<T: Real>(&self, mesh: &Mesh<T>, coeffs: &[T], x: T, y: T) -> Option<T> {
        let c = mesh.locate(x, y)?;
        let (ix, iy) = mesh.cell_coords(c);
        let two = T::lit(2.0);
        let hx = mesh.hx(ix);
        let sx = two * (x - mesh.x_faces()[ix]) / hx - T::one();
        let bx = basis_1d(sx, hx);
        let v = match self.geometry {
            Geometry::Slab => coeffs[self.dof(c, 0)] * bx[0] + coeffs[self.dof(c, 1)] * bx[1],
            Geometry::Xy => {
                let hy = mesh.hy(iy);
                let sy = two * (y - mesh.y_faces()[iy]) / hy - T::one();
                let by = basis_1d(sy, hy);
                coeffs[self.dof(c, 0)] * bx[0] * by[0]
                    + coeffs[self.dof(c, 1)] * bx[1] * by[0]
                    + coeffs[self.dof(c, 2)] * bx[0] * by[1]
                    + coeffs[self.dof(c, 3)] * bx[1] * by[1]
            }
        };
        Some(v)
    }

    /// Cell average of a DG function.
    pub fn cell_mean<T: Real>(&self, mesh: &Mesh<T>, coeffs: &[T], cell: usize) -> T {
        coeffs[self.dof(cell, 0)] / mesh.measure(cell).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_mass() {
        let mesh = Mesh::<f64>::uniform_grid((0.0, 1.0), (0.0, 2.0), 3, 2).unwrap();
        let sp = DgSpace::new(&mesh, 1).unwrap();
        let pts = sp.cell_points(&mesh, 4, 3);
        let m = sp.weighted_mass(&pts, &vec![1.0; pts.len()]);
        for k in 0..4 {
            for l in 0..4 {
                let e = if k == l { 1.0 } else { 0.0 };
                assert!((m[k * 4 + l] - e).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn projection_is_exact_for_bilinear() {
        let mesh = Mesh::<f64>::uniform_grid((0.0, 1.0), (0.0, 1.0), 3, 3).unwrap();
        let sp = DgSpace::new(&mesh, 1).unwrap();
        let f = |x: f64, y: f64| 1.0 + 2.0 * x - y + 3.0 * x * y;
        let c = sp.project(&mesh, f, 3);
        for (x, y) in [(0.1, 0.2), (0.5, 0.77), (0.95, 0.4)] {
            assert!((sp.evaluate(&mesh, &c, x, y).unwrap() - f(x, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn traces_and_derivative() {
        let h = 0.3f64;
        let (l, r) = traces(h);
        let b = basis_1d(-1.0, h);
        assert!((l[1] - b[1]).abs() < 1e-15 && (l[0] - b[0]).abs() < 1e-15);
        let b = basis_1d(1.0, h);
        assert!((r[1] - b[1]).abs() < 1e-15);
        // d/dx p1 = sqrt(3/h) * 2/h, integrated against p0 over width h
        let d = 3f64.sqrt() / h.sqrt() * 2.0 / h * h / h.sqrt();
        assert!((derivative_coupling(h) - d).abs() < 1e-12);
    }

    #[test]
    fn degree_other_than_one_rejected() {
        let mesh = Mesh::<f64>::uniform_slab(0.0, 1.0, 2).unwrap();
        assert!(matches!(DgSpace::new(&mesh, 2), Err(Error::UnsupportedDegree(2))));
    }
}
