//! Parametric problem definitions with an affine dependence on the
//! parameters.
//!
//! Cross sections are given as `sigma(x, mu) = sum_k theta_k(mu) sigma_k(x)`;
//! sources and isotropic inflow are affine in the same way.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Geometry;
use crate::scalar::Real;

pub type SpatialField<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;
pub type Coefficient<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type ParametricField<T> = Arc<dyn Fn(T, T, &[T]) -> T + Send + Sync>;

pub fn constant_coefficient<T: Real>(c: T) -> Coefficient<T> {
    Arc::new(move |_| c)
}

/// `theta(mu) = mu[index]`
pub fn parameter_coefficient<T: Real>(index: usize) -> Coefficient<T> {
    Arc::new(move |mu: &[T]| mu[index])
}

pub fn constant_field<T: Real>(c: T) -> SpatialField<T> {
    Arc::new(move |_, _| c)
}

pub fn field<T: Real>(f: impl Fn(T, T) -> T + Send + Sync + 'static) -> SpatialField<T> {
    Arc::new(f)
}

#[derive(Clone)]
pub struct CrossSectionTerm<T> {
    pub theta: Coefficient<T>,
    pub sigma_a: Option<SpatialField<T>>,
    pub sigma_s: Option<SpatialField<T>>,
}

impl<T: Real> CrossSectionTerm<T> {
    pub fn absorption(theta: Coefficient<T>, sigma_a: SpatialField<T>) -> Self {
        Self { theta, sigma_a: Some(sigma_a), sigma_s: None }
    }
    pub fn scattering(theta: Coefficient<T>, sigma_s: SpatialField<T>) -> Self {
        Self { theta, sigma_a: None, sigma_s: Some(sigma_s) }
    }
}

#[derive(Clone)]
pub struct SourceTerm<T> {
    pub theta: Coefficient<T>,
    pub field: SpatialField<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    XMin,
    XMax,
    YMin,
    YMax,
}

/// Isotropic incoming angular flux on one side of the domain.
#[derive(Clone)]
pub struct InflowTerm<T> {
    pub theta: Coefficient<T>,
    pub side: Side,
    pub profile: SpatialField<T>,
}

#[derive(Debug, Clone)]
pub struct ParameterRange<T> {
    pub name: String,
    pub lo: T,
    pub hi: T,
}

impl<T: Real> ParameterRange<T> {
    pub fn new(name: impl Into<String>, lo: T, hi: T) -> Self {
        Self { name: name.into(), lo, hi }
    }
}

/// Cross sections evaluated directly from `(x, y, mu)`. When present they
/// are used for assembly in place of the affine sum, and the affine terms
/// become a claim that has to be verified.
#[derive(Clone)]
pub struct DirectCrossSections<T> {
    pub sigma_a: ParametricField<T>,
    pub sigma_s: ParametricField<T>,
}

#[derive(Clone)]
pub struct ProblemDefinition<T> {
    pub name: String,
    pub geometry: Geometry,
    pub parameters: Vec<ParameterRange<T>>,
    pub cross_sections: Vec<CrossSectionTerm<T>>,
    pub sources: Vec<SourceTerm<T>>,
    pub inflows: Vec<InflowTerm<T>>,
    pub direct: Option<DirectCrossSections<T>>,
}

impl<T> fmt::Debug for ProblemDefinition<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDefinition")
            .field("name", &self.name)
            .field("geometry", &self.geometry)
            .field("affine_terms", &self.cross_sections.len())
            .field("sources", &self.sources.len())
            .field("inflows", &self.inflows.len())
            .finish()
    }
}

impl<T: Real> ProblemDefinition<T> {
    pub fn new(name: impl Into<String>, geometry: Geometry) -> Self {
        Self {
            name: name.into(),
            geometry,
            parameters: Vec::new(),
            cross_sections: Vec::new(),
            sources: Vec::new(),
            inflows: Vec::new(),
            direct: None,
        }
    }

    pub fn with_parameter(mut self, name: impl Into<String>, lo: T, hi: T) -> Self {
        self.parameters.push(ParameterRange::new(name, lo, hi));
        self
    }
    pub fn with_cross_section(mut self, term: CrossSectionTerm<T>) -> Self {
        self.cross_sections.push(term);
        self
    }
    pub fn with_source(mut self, theta: Coefficient<T>, field: SpatialField<T>) -> Self {
        self.sources.push(SourceTerm { theta, field });
        self
    }
    pub fn with_inflow(mut self, theta: Coefficient<T>, side: Side, profile: SpatialField<T>) -> Self {
        self.inflows.push(InflowTerm { theta, side, profile });
        self
    }

    /// Number of affine operator components, counting streaming.
    pub fn n_affine(&self) -> usize {
        1 + self.cross_sections.len()
    }

    pub fn check_parameters(&self, mu: &[T]) -> Result<()> {
        if mu.len() != self.parameters.len() {
            return Err(Error::ParameterCount { expected: self.parameters.len(), got: mu.len() });
        }
        let slack = T::lit(1e-12);
        for (p, &m) in self.parameters.iter().zip(mu) {
            let span = (p.hi - p.lo).abs().max(T::one());
            if !(m >= p.lo - slack * span && m <= p.hi + slack * span) {
                return Err(Error::ParameterOutOfRange {
                    name: p.name.clone(),
                    value: m.to_f64_lossy(),
                    lo: p.lo.to_f64_lossy(),
                    hi: p.hi.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }

    pub fn sigma_a(&self, x: T, y: T, mu: &[T]) -> T {
        if let Some(d) = &self.direct {
            return (d.sigma_a)(x, y, mu);
        }
        self.cross_sections
            .iter()
            .filter_map(|t| t.sigma_a.as_ref().map(|f| (t.theta)(mu) * f(x, y)))
            .sum()
    }

    pub fn sigma_s(&self, x: T, y: T, mu: &[T]) -> T {
        if let Some(d) = &self.direct {
            return (d.sigma_s)(x, y, mu);
        }
        self.cross_sections
            .iter()
            .filter_map(|t| t.sigma_s.as_ref().map(|f| (t.theta)(mu) * f(x, y)))
            .sum()
    }

    pub fn sigma_t(&self, x: T, y: T, mu: &[T]) -> T {
        self.sigma_a(x, y, mu) + self.sigma_s(x, y, mu)
    }

    pub fn source(&self, x: T, y: T, mu: &[T]) -> T {
        self.sources.iter().map(|s| (s.theta)(mu) * (s.field)(x, y)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> ProblemDefinition<f64> {
        ProblemDefinition::new("demo", Geometry::Slab)
            .with_parameter("mu_s", 10.0, 20.0)
            .with_cross_section(CrossSectionTerm::scattering(constant_coefficient(1.0), constant_field(0.1)))
            .with_cross_section(CrossSectionTerm::scattering(parameter_coefficient(0), field(|x, _| x)))
            .with_source(constant_coefficient(1.0), constant_field(0.01))
    }

    #[test]
    fn affine_evaluation() {
        let p = demo();
        assert!((p.sigma_s(2.0, 0.0, &[15.0]) - 30.1).abs() < 1e-12);
        assert_eq!(p.sigma_a(2.0, 0.0, &[15.0]), 0.0);
        assert_eq!(p.n_affine(), 3);
    }

    #[test]
    fn parameter_checks() {
        let p = demo();
        assert!(p.check_parameters(&[15.0]).is_ok());
        assert!(matches!(p.check_parameters(&[25.0]), Err(Error::ParameterOutOfRange { .. })));
        assert!(matches!(p.check_parameters(&[]), Err(Error::ParameterCount { .. })));
    }
}
