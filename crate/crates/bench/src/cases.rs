//! The benchmark problems, at full or reduced scale.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rte_core::problem::*;
use rte_core::*;

use crate::methods::Method;
use crate::{BenchError, BenchResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseId {
    CrossRegime,
    TwoMaterial,
    Homogeneous,
    Lattice,
    PinCell,
    VariableScattering,
}

impl CaseId {
    pub const ALL: [CaseId; 6] = [
        CaseId::CrossRegime,
        CaseId::TwoMaterial,
        CaseId::Homogeneous,
        CaseId::Lattice,
        CaseId::PinCell,
        CaseId::VariableScattering,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::CrossRegime => "cross_regime",
            CaseId::TwoMaterial => "two_material",
            CaseId::Homogeneous => "homogeneous",
            CaseId::Lattice => "lattice",
            CaseId::PinCell => "pin_cell",
            CaseId::VariableScattering => "variable_scattering",
        }
    }

    /// Long-running cases are skipped unless requested by name.
    pub fn opt_in(self) -> bool {
        self == CaseId::Lattice
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = BenchError;
    fn from_str(s: &str) -> BenchResult<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| BenchError::UnknownCase(s.to_string()))
    }
}

/// Fully instantiated benchmark: problem, discretization, tolerances,
/// training grid and test-set recipe.
#[derive(Debug, Clone)]
pub struct BenchmarkCase {
    pub id: CaseId,
    pub scale: f64,
    pub problem: Problem64,
    pub mesh: Mesh64,
    pub quadrature: Quadrature64,
    pub eps_sisa: f64,
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    pub max_iterations: usize,
    pub eps_pod: Vec<f64>,
    pub training: Vec<Vec<f64>>,
    pub n_test: usize,
    pub seed: u64,
    pub eta: f64,
    pub methods: Vec<Method>,
}

/// Smallest even integer not below `x`, at least 2.
fn even_ceil(x: f64) -> usize {
    let n = x.ceil().max(2.0) as usize;
    n + n % 2
}

fn cells(n: usize, scale: f64) -> usize {
    ((n as f64 * scale).round() as usize).max(1)
}

fn plane_quadrature(n_phi: usize, n_vz: usize, scale: f64) -> BenchResult<Quadrature64> {
    let (np, nz) = if scale == 1.0 { (n_phi, n_vz) } else { (even_ceil(n_phi as f64 * scale), even_ceil(n_vz as f64 * scale)) };
    Ok(AngularQuadrature::chebyshev_legendre_folded(np, nz)?)
}

fn slab_quadrature(n: usize, scale: f64) -> BenchResult<Quadrature64> {
    let n = if scale == 1.0 { n } else { even_ceil(n as f64 * scale) };
    Ok(AngularQuadrature::gauss_legendre(n)?)
}

fn grid1(lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1) as f64]).collect()
}

fn grid2(a: impl Fn(usize) -> f64, na: usize, b: impl Fn(usize) -> f64, nb: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(na * nb);
    for i in 0..na {
        for j in 0..nb {
            out.push(vec![a(i), b(j)]);
        }
    }
    out
}

/// Lattice layout on [0,5]^2 in blocks of 0.5: `A` absorber, `S` source
/// (scattering), `.` scattering.
pub const LATTICE_MAP: [&str; 10] = [
    "..........",
    ".A.A.A.A..",
    "..A.A.A.A.",
    ".A.A.A.A..",
    "..A.SSA.A.",
    ".A.ASS.A..",
    "..A.A.A.A.",
    ".A.A.A.A..",
    "..A.A.A.A.",
    "..........",
];

fn lattice_cell(x: f64, y: f64) -> u8 {
    let i = ((x / 0.5).floor() as usize).min(9);
    let j = ((y / 0.5).floor() as usize).min(9);
    // rows of the map run from the top of the domain
    LATTICE_MAP[9 - j].as_bytes()[i]
}

impl BenchmarkCase {
    pub fn new(id: CaseId, scale: f64) -> BenchResult<Self> {
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(BenchError::Config(format!("scale must lie in (0, 1], got {scale}")));
        }
        let one = || constant_coefficient(1.0);
        let case = match id {
            CaseId::CrossRegime => Self {
                id,
                scale,
                problem: ProblemDefinition::new(id.name(), Geometry::Slab)
                    .with_parameter("mu_s", 10.0, 20.0)
                    .with_cross_section(CrossSectionTerm::scattering(one(), constant_field(0.1)))
                    .with_cross_section(CrossSectionTerm::scattering(parameter_coefficient(0), field(|x: f64, _: f64| x)))
                    .with_source(one(), constant_field(0.01)),
                mesh: Mesh::uniform_slab(0.0, 10.0, cells(400, scale))?,
                quadrature: slab_quadrature(16, scale)?,
                eps_sisa: 1e-11,
                gmres_tol: 1e-11,
                gmres_restart: 25,
                max_iterations: 2000,
                eps_pod: vec![1e-9, 1e-10, 1e-11],
                training: grid1(10.0, 20.0, 41),
                n_test: 20,
                seed: 0x5eed_0001,
                eta: 0.1,
                methods: Method::parse_list("DSA,ROMIG,ROMSA-1,ROMSAD-1,3,ROMSA-3,ROMSAD-3,3")?,
            },
            CaseId::TwoMaterial => Self {
                id,
                scale,
                problem: ProblemDefinition::new(id.name(), Geometry::Slab)
                    .with_parameter("mu_a", 0.5, 1.5)
                    .with_parameter("mu_s", 10.0, 50.0)
                    .with_cross_section(CrossSectionTerm::absorption(
                        parameter_coefficient(0),
                        field(|x: f64, _: f64| if x <= 1.0 { 1.0 } else { 0.0 }),
                    ))
                    .with_cross_section(CrossSectionTerm::scattering(
                        parameter_coefficient(1),
                        field(|x: f64, _: f64| if x > 1.0 { 1.0 } else { 0.0 }),
                    ))
                    .with_inflow(one(), Side::XMin, constant_field(5.0)),
                mesh: Mesh::piecewise_uniform_slab(&[(0.0, 1.0, cells(100, scale)), (1.0, 11.0, cells(100, scale))])?,
                quadrature: slab_quadrature(16, scale)?,
                eps_sisa: 1e-12,
                gmres_tol: 1e-12,
                gmres_restart: 25,
                max_iterations: 2000,
                eps_pod: vec![1e-6, 1e-9, 1e-10],
                training: grid2(|m| 0.5 + 0.1 * m as f64, 11, |n| 10.0 + n as f64, 41),
                n_test: 20,
                seed: 0x5eed_0002,
                eta: 0.1,
                methods: Method::parse_list("DSA,ROMIG,ROMSAD-3,3,ROMSAD-5,3")?,
            },
            CaseId::Homogeneous => Self {
                id,
                scale,
                problem: ProblemDefinition::new(id.name(), Geometry::Xy)
                    .with_parameter("mu_s", 0.9, 1.1)
                    .with_cross_section(CrossSectionTerm::scattering(parameter_coefficient(0), constant_field(1.0)))
                    .with_source(one(), field(|x: f64, y: f64| (-100.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))).exp())),
                mesh: Mesh::uniform_grid((0.0, 1.0), (0.0, 1.0), cells(80, scale), cells(80, scale))?,
                quadrature: plane_quadrature(30, 6, scale)?,
                eps_sisa: 1e-12,
                gmres_tol: 1e-11,
                gmres_restart: 25,
                max_iterations: 2000,
                eps_pod: vec![1e-9],
                training: (0..=20).map(|m| vec![0.9 + m as f64 / 200.0]).collect(),
                n_test: 10,
                seed: 0x5eed_0003,
                eta: 0.1,
                methods: Method::parse_list("DSA,ROMIG,ROMSA-3,ROMSAD-3,3,PGMRES,PGMRES-ROMIG")?,
            },
            CaseId::Lattice => Self {
                id,
                scale,
                problem: ProblemDefinition::new(id.name(), Geometry::Xy)
                    .with_parameter("mu_a", 95.0, 105.0)
                    .with_parameter("mu_s", 0.5, 1.5)
                    .with_cross_section(CrossSectionTerm::absorption(
                        parameter_coefficient(0),
                        field(|x: f64, y: f64| if lattice_cell(x, y) == b'A' { 1.0 } else { 0.0 }),
                    ))
                    .with_cross_section(CrossSectionTerm::scattering(
                        parameter_coefficient(1),
                        field(|x: f64, y: f64| if lattice_cell(x, y) == b'A' { 0.0 } else { 1.0 }),
                    ))
                    .with_source(one(), field(|x: f64, y: f64| if lattice_cell(x, y) == b'S' { 1.0 } else { 0.0 })),
                mesh: Mesh::uniform_grid((0.0, 5.0), (0.0, 5.0), cells(50, scale), cells(50, scale))?,
                quadrature: plane_quadrature(40, 6, scale)?,
                eps_sisa: 1e-12,
                gmres_tol: 1e-12,
                gmres_restart: 25,
                max_iterations: 2000,
                eps_pod: vec![1e-9, 1e-10, 1e-11],
                training: grid2(|i| 95.0 + i as f64, 11, |j| 0.5 + 0.1 * j as f64, 11),
                n_test: 10,
                seed: 0x5eed_0004,
                eta: 0.1,
                methods: Method::parse_list("DSA,ROMIG,ROMSAD-3,5,PGMRES,PGMRES-ROMIG")?,
            },
            CaseId::PinCell => {
                let inner = |x: f64, y: f64| x.abs() <= 0.5 && y.abs() <= 0.5;
                Self {
                    id,
                    scale,
                    problem: ProblemDefinition::new(id.name(), Geometry::Xy)
                        .with_parameter("mu_a", 0.05, 0.5)
                        .with_parameter("mu_s", 0.05, 0.5)
                        .with_cross_section(CrossSectionTerm::absorption(
                            parameter_coefficient(0),
                            field(move |x: f64, y: f64| if inner(x, y) { 1.0 } else { 0.0 }),
                        ))
                        .with_cross_section(CrossSectionTerm::scattering(
                            parameter_coefficient(1),
                            field(move |x: f64, y: f64| if inner(x, y) { 1.0 } else { 0.0 }),
                        ))
                        .with_cross_section(CrossSectionTerm::scattering(
                            one(),
                            field(move |x: f64, y: f64| if inner(x, y) { 0.0 } else { 100.0 }),
                        ))
                        .with_source(one(), field(|x: f64, y: f64| (-100.0 * (x * x + y * y)).exp())),
                    mesh: Mesh::uniform_grid((-1.0, 1.0), (-1.0, 1.0), cells(80, scale), cells(80, scale))?,
                    quadrature: plane_quadrature(30, 6, scale)?,
                    eps_sisa: 1e-11,
                    gmres_tol: 2.5e-11,
                    gmres_restart: 25,
                    max_iterations: 2000,
                    eps_pod: vec![1e-9],
                    training: grid2(|i| 0.05 * (i + 1) as f64, 5, |j| 0.05 * (j + 1) as f64, 5),
                    n_test: 10,
                    seed: 0x5eed_0005,
                    eta: 0.1,
                    methods: Method::parse_list("DSA,ROMIG,ROMSAD-3,5,PGMRES,PGMRES-ROMIG")?,
                }
            }
            CaseId::VariableScattering => {
                let shape = |x: f64, y: f64| {
                    let r2 = x * x + y * y;
                    if r2 <= 1.0 {
                        r2 * r2 * (2.0 - r2).powi(2)
                    } else {
                        1.0
                    }
                };
                Self {
                    id,
                    scale,
                    problem: ProblemDefinition::new(id.name(), Geometry::Xy)
                        .with_parameter("mu_s", 49.9, 99.9)
                        .with_cross_section(CrossSectionTerm::scattering(parameter_coefficient(0), field(shape)))
                        .with_cross_section(CrossSectionTerm::scattering(one(), constant_field(0.1)))
                        .with_source(
                            one(),
                            field(|x: f64, y: f64| 10.0 / std::f64::consts::PI * (-100.0 * (x * x + y * y)).exp()),
                        ),
                    mesh: Mesh::uniform_grid((-1.0, 1.0), (-1.0, 1.0), cells(80, scale), cells(80, scale))?,
                    quadrature: plane_quadrature(30, 6, scale)?,
                    eps_sisa: 1e-12,
                    gmres_tol: 2.5e-11,
                    gmres_restart: 25,
                    max_iterations: 2000,
                    eps_pod: vec![1e-11],
                    training: grid1(49.9, 99.9, 50),
                    n_test: 10,
                    seed: 0x5eed_0006,
                    eta: 0.1,
                    methods: Method::parse_list("DSA,ROMIG,ROMSAD-3,5,PGMRES,PGMRES-ROMIG")?,
                }
            }
        };
        case.validate()?;
        Ok(case)
    }

    fn validate(&self) -> BenchResult<()> {
        for mu in &self.training {
            self.problem.check_parameters(mu)?;
        }
        Ok(())
    }

    pub fn n_unknowns(&self) -> usize {
        let local = if self.mesh.geometry() == Geometry::Slab { 2 } else { 4 };
        self.mesh.num_cells() * local * self.quadrature.len()
    }

    /// Uniform draws from the parameter box, redrawn on collision with the
    /// training grid.
    pub fn test_set(&self) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let ranges = &self.problem.parameters;
        let mut out = Vec::with_capacity(self.n_test);
        while out.len() < self.n_test {
            let mu: Vec<f64> = ranges.iter().map(|r| rng.gen_range(r.lo..=r.hi)).collect();
            let collides = self
                .training
                .iter()
                .any(|t| t.iter().zip(&mu).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0)));
            if !collides {
                out.push(mu);
            }
        }
        out
    }

    /// Windows of the correction models required by the method list.
    pub fn windows(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self.methods.iter().filter_map(|m| m.window()).collect();
        w.sort_unstable();
        w.dedup();
        w
    }

    pub fn needs_solution_model(&self) -> bool {
        self.methods.iter().any(|m| m.uses_initial_guess())
    }

    pub fn describe(&self) -> String {
        format!(
            "{} (scale {}): {} cells, {}, {} unknowns, {} training / {} test samples",
            self.id,
            self.scale,
            self.mesh.num_cells(),
            self.quadrature.label(),
            self.n_unknowns(),
            self.training.len(),
            self.n_test
        )
    }
}
