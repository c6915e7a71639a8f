//! Discrete-ordinates angular quadratures.
//!
//! Weights are normalized so that they sum to one; the angular average of a
//! function is `sum_j w_j f(v_j)`.

use crate::error::{Error, Result};
use crate::mesh::Geometry;
use crate::scalar::Real;

/// Gauss–Legendre nodes (ascending) and weights on `[-1, 1]`; weights sum to 2.
pub fn gauss_legendre_rule<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let pi = T::lit(std::f64::consts::PI);
    let nt = T::of_usize(n);
    let tol = T::epsilon() * T::lit(4.0);
    for i in 0..(n + 1) / 2 {
        let mut z = (pi * (T::of_usize(i) + T::lit(0.75)) / (nt + T::lit(0.5))).cos();
        let mut dp = T::one();
        for it in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= tol * z.abs().max(T::one()) || it == 99 {
                dp = legendre_and_derivative(n, z).1;
                break;
            }
        }
        if 2 * i + 1 == n {
            z = T::zero();
            dp = legendre_and_derivative(n, z).1;
        }
        let w = T::lit(2.0) / ((T::one() - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_derivative<T: Real>(n: usize, z: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = z;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for k in 2..=n {
        let kt = T::of_usize(k);
        let p2 = ((T::lit(2.0) * kt - T::one()) * z * p1 - (kt - T::one()) * p0) / kt;
        p0 = p1;
        p1 = p2;
    }
    let nt = T::of_usize(n);
    let d = nt * (z * p1 - p0) / (z * z - T::one());
    (p1, d)
}

/// Ordered set of directions with positive weights summing to one.
#[derive(Debug, Clone)]
pub struct AngularQuadrature<T> {
    geometry: Geometry,
    directions: Vec<[T; 3]>,
    weights: Vec<T>,
    folded: bool,
    label: String,
}

impl<T: Real> AngularQuadrature<T> {
    /// Slab quadrature: Gauss–Legendre in the direction cosine.
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidQuadrature(format!(
                "Gauss-Legendre order must be even and at least 2, got {n}"
            )));
        }
        let (x, w) = gauss_legendre_rule::<T>(n);
        let half = T::lit(0.5);
        Ok(Self {
            geometry: Geometry::Slab,
            directions: x.iter().map(|&xi| [xi, T::zero(), T::zero()]).collect(),
            weights: w.iter().map(|&wi| wi * half).collect(),
            folded: false,
            label: format!("GL{n}"),
        })
    }

    /// Product quadrature on the sphere: `n_phi` equispaced azimuths times
    /// `n_vz` Gauss–Legendre polar cosines. Direction `j2 * n_phi + j1` uses
    /// azimuth `j1` and polar node `j2`.
    pub fn chebyshev_legendre(n_phi: usize, n_vz: usize) -> Result<Self> {
        Self::product(n_phi, n_vz, false)
    }

    /// Same directions restricted to `v_z > 0` with doubled weights. For
    /// planar problems the transport equation only depends on `(v_x, v_y)`,
    /// so the mirrored hemisphere carries an identical angular flux.
    pub fn chebyshev_legendre_folded(n_phi: usize, n_vz: usize) -> Result<Self> {
        Self::product(n_phi, n_vz, true)
    }

    fn product(n_phi: usize, n_vz: usize, folded: bool) -> Result<Self> {
        if n_phi < 2 || n_phi % 2 != 0 {
            return Err(Error::InvalidQuadrature(format!(
                "azimuthal count must be even and at least 2, got {n_phi}"
            )));
        }
        if n_vz < 2 || n_vz % 2 != 0 {
            return Err(Error::InvalidQuadrature(format!(
                "polar count must be even and at least 2, got {n_vz}"
            )));
        }
        let (z, wz) = gauss_legendre_rule::<T>(n_vz);
        let pi = T::lit(std::f64::consts::PI);
        let nphi = T::of_usize(n_phi);
        let snap = T::epsilon() * T::lit(16.0);
        // azimuths in the upper half; the lower half is the antipodal image
        let mut cs = Vec::with_capacity(n_phi);
        for j1 in 1..=n_phi / 2 {
            let phi = (T::lit(2.0) * T::of_usize(j1) - T::one()) * pi / nphi;
            let mut c = phi.cos();
            let mut s = phi.sin();
            if c.abs() < snap {
                c = T::zero();
            }
            if s.abs() < snap {
                s = T::zero();
            }
            cs.push((c, s));
        }
        for j1 in 0..n_phi / 2 {
            let (c, s) = cs[j1];
            cs.push((-c, -s));
        }
        let mut directions = Vec::new();
        let mut weights = Vec::new();
        let wphi = T::one() / nphi;
        for j2 in 0..n_vz {
            if folded && z[j2] < T::zero() {
                continue;
            }
            let mu = z[j2];
            let st = (T::one() - mu * mu).max(T::zero()).sqrt();
            let scale = if folded { T::one() } else { T::lit(0.5) };
            for &(c, s) in &cs {
                directions.push([st * c, st * s, mu]);
                weights.push(wz[j2] * scale * wphi);
            }
        }
        Ok(Self {
            geometry: Geometry::Xy,
            directions,
            weights,
            folded,
            label: if folded {
                format!("CL({n_phi},{n_vz})/z")
            } else {
                format!("CL({n_phi},{n_vz})")
            },
        })
    }

    /// Builds a quadrature from explicit data, normalizing nothing.
    pub fn from_parts(geometry: Geometry, directions: Vec<[T; 3]>, weights: Vec<T>) -> Result<Self> {
        if directions.len() != weights.len() || directions.is_empty() {
            return Err(Error::InvalidQuadrature("direction/weight count mismatch".into()));
        }
        Ok(Self {
            geometry,
            directions,
            weights,
            folded: false,
            label: "custom".into(),
        })
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn direction(&self, j: usize) -> [T; 3] {
        self.directions[j]
    }
    pub fn weight(&self, j: usize) -> T {
        self.weights[j]
    }
    pub fn weights(&self) -> &[T] {
        &self.weights
    }
    pub fn directions(&self) -> &[[T; 3]] {
        &self.directions
    }
    pub fn is_folded(&self) -> bool {
        self.folded
    }
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Quadrature average `sum_j w_j f(v_j)`.
    pub fn average(&self, f: impl Fn(&[T; 3]) -> T) -> T {
        self.directions
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (v, &w)| acc + w * f(v))
    }

    /// Verifies positivity, normalization, unit directions and vanishing
    /// first moments (in-plane only for folded sets).
    pub fn check_invariants(&self, tol: T) -> Result<()> {
        if self.weights.iter().any(|&w| w <= T::zero()) {
            return Err(Error::InvalidQuadrature("non-positive weight".into()));
        }
        let sum: T = self.weights.iter().copied().sum();
        if (sum - T::one()).abs() > tol {
            return Err(Error::InvalidQuadrature(format!("weights sum to {sum}")));
        }
        for v in &self.directions {
            let n = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            if (n - T::one()).abs() > tol {
                return Err(Error::InvalidQuadrature(format!("direction norm^2 {n}")));
            }
        }
        let axes = if self.folded { 2 } else { 3 };
        for axis in 0..axes {
            let m = self.average(|v| v[axis]);
            if m.abs() > tol {
                return Err(Error::InvalidQuadrature(format!(
                    "first moment along axis {axis} is {m}"
                )));
            }
        }
        Ok(())
    }
}
