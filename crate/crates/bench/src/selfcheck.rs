//! Standalone invariant suites on small problems.

use std::time::Instant;

use rte_core::problem::*;
use rte_core::rom::*;
use rte_core::scalar::norm_inf;
use rte_core::solvers::*;
use rte_core::*;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed error.
    pub error: f64,
    pub tolerance: f64,
    pub seconds: f64,
}

type Check = fn() -> Result<(f64, f64)>;

pub const SUITES: [(&str, Check); 7] = [
    ("quadrature moments", quadrature_moments),
    ("sweep exactness", sweep_exactness),
    ("affine reconstruction", affine_reconstruction),
    ("POD orthonormality and truncation", pod_orthonormality),
    ("correction snapshot identity", snapshot_identity),
    ("Galerkin residual orthogonality", galerkin_orthogonality),
    ("preconditioner equivalence", preconditioner_equivalence),
];

pub fn run_all() -> Vec<CheckOutcome> {
    SUITES
        .iter()
        .map(|(name, check)| {
            let t = Instant::now();
            let (passed, error, tolerance) = match check() {
                Ok((e, tol)) => (e <= tol, e, tol),
                Err(err) => {
                    log::error!("{name}: {err}");
                    (false, f64::INFINITY, 0.0)
                }
            };
            CheckOutcome { name, passed, error, tolerance, seconds: t.elapsed().as_secs_f64() }
        })
        .collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn small_slab() -> (Problem64, Mesh64, Quadrature64) {
    let p = ProblemDefinition::new("check-slab", Geometry::Slab)
        .with_parameter("mu", 1.0, 4.0)
        .with_cross_section(CrossSectionTerm::absorption(constant_coefficient(1.0), constant_field(0.2)))
        .with_cross_section(CrossSectionTerm::scattering(parameter_coefficient(0), field(|x, _| 0.5 + x)))
        .with_source(constant_coefficient(1.0), field(|x, _| 1.0 + x * x))
        .with_inflow(parameter_coefficient(0), Side::XMin, constant_field(0.5));
    (p, Mesh::uniform_slab(0.0, 1.0, 6).unwrap(), AngularQuadrature::gauss_legendre(4).unwrap())
}

fn small_xy() -> (Problem64, Mesh64, Quadrature64) {
    let p = ProblemDefinition::new("check-xy", Geometry::Xy)
        .with_parameter("mu", 1.0, 4.0)
        .with_cross_section(CrossSectionTerm::absorption(constant_coefficient(1.0), constant_field(0.1)))
        .with_cross_section(CrossSectionTerm::scattering(parameter_coefficient(0), field(|x, y| 1.0 + x * y)))
        .with_source(constant_coefficient(1.0), field(|x, y| if x < 1.0 && y < 1.0 { 1.0 } else { 0.0 }))
        .with_inflow(constant_coefficient(1.0), Side::YMin, field(|x, _| x));
    (
        p,
        Mesh::uniform_grid((0.0, 1.5), (0.0, 1.5), 4, 4).unwrap(),
        AngularQuadrature::chebyshev_legendre_folded(8, 2).unwrap(),
    )
}

fn quadrature_moments() -> Result<(f64, f64)> {
    let mut err: f64 = 0.0;
    let gl = AngularQuadrature::<f64>::gauss_legendre(16)?;
    err = err.max((gl.average(|_| 1.0) - 1.0).abs());
    err = err.max(gl.average(|v| v[0]).abs());
    err = err.max((gl.average(|v| v[0] * v[0]) - 1.0 / 3.0).abs());
    for (np, nz) in [(16, 4), (30, 6), (40, 6)] {
        for q in [AngularQuadrature::<f64>::chebyshev_legendre(np, nz)?, AngularQuadrature::chebyshev_legendre_folded(np, nz)?] {
            q.check_invariants(1e-13)?;
            err = err.max((q.average(|_| 1.0) - 1.0).abs());
            err = err.max(q.average(|v| v[0]).abs().max(q.average(|v| v[1]).abs()));
            err = err.max((q.average(|v| v[0] * v[0]) - 1.0 / 3.0).abs());
            err = err.max(q.average(|v| v[0] * v[1]).abs());
        }
    }
    Ok((err, 1e-13))
}

fn sweep_exactness() -> Result<(f64, f64)> {
    let exact = |x: f64, y: f64| 1.0 + 0.5 * x + 2.0 * y;
    let mut p = ProblemDefinition::new("linear", Geometry::Xy)
        .with_cross_section(CrossSectionTerm::absorption(constant_coefficient(1.0), constant_field(0.7)));
    for side in [Side::XMin, Side::XMax, Side::YMin, Side::YMax] {
        p = p.with_inflow(constant_coefficient(1.0), side, field(exact));
    }
    let mesh = Mesh::grid(vec![0.0, 0.3, 0.5, 1.2], vec![-1.0, -0.2, 0.0, 0.4, 1.0])?;
    let q = AngularQuadrature::chebyshev_legendre(8, 2)?;
    let sys = TransportSystem::assemble(&p, &mesh, &q, &[])?;
    let target = sys.space().project(&mesh, exact, 4);
    let mut err: f64 = 0.0;
    for j in 0..q.len() {
        let v = q.direction(j);
        let rhs = sys.space().project(&mesh, |x, y| 0.5 * v[0] + 2.0 * v[1] + 0.7 * exact(x, y), 4);
        err = err.max(max_diff(&sys.sweep_with_inflow(j, &rhs)?, &target));
        if !sys.audit_sweep_order(j) {
            return Ok((f64::INFINITY, 1e-12));
        }
    }
    Ok((err, 1e-12))
}

fn affine_reconstruction() -> Result<(f64, f64)> {
    let mut err: f64 = 0.0;
    for (p, mesh, q) in [small_slab(), small_xy()] {
        for mu in [1.0, 2.2, 4.0] {
            let sys = TransportSystem::assemble(&p, &mesh, &q, &[mu])?;
            let probe: Vec<f64> = (0..sys.n_unknowns()).map(|i| ((i * 13 + 5) % 17) as f64 - 8.0).collect();
            err = err.max(sys.verify_affine(&probe)?);
        }
    }
    Ok((err, 1e-13))
}

fn pod_orthonormality() -> Result<(f64, f64)> {
    let mut b = PodBuilder::<f64>::new(300);
    for k in 0..40 {
        let col: Vec<f64> = (0..300)
            .map(|i| {
                let x = i as f64 / 299.0;
                (0..6).map(|m| 0.1f64.powi(m) * ((m + 1) as f64 * x + 0.01 * (k * m) as f64).sin()).sum()
            })
            .collect();
        b.push(&col)?;
    }
    let pod = b.finish()?;
    let sv = pod.singular_values().to_vec();
    let total: f64 = sv.iter().sum();
    let mut err: f64 = 0.0;
    for eps in [1e-2, 1e-4, 1e-6, 1e-9] {
        let basis = pod.truncate(eps);
        err = err.max(basis.orthonormality_error());
        let r = basis.rank;
        let kept: f64 = sv[..r].iter().sum();
        let minimal = r == 0 || sv[..r - 1].iter().sum::<f64>() / total < 1.0 - eps;
        if kept / total < 1.0 - eps || !minimal {
            return Ok((f64::INFINITY, 1e-12));
        }
    }
    Ok((err, 1e-12))
}

fn snapshot_identity() -> Result<(f64, f64)> {
    let mut err: f64 = 0.0;
    for (p, mesh, q) in [small_slab(), small_xy()] {
        let sys = TransportSystem::assemble(&p, &mesh, &q, &[2.7])?;
        let sol = sisa_solve_angular(&sys, &mut NoCorrection, &SolveConfig::new(1e-14).with_max_iterations(400), 3)?;
        let nd = sys.n_dof();
        let mut rho = vec![0.0; nd];
        for fl in &sol.intermediates {
            let mut src = sys.apply_sigma_s(&rho);
            for (a, b) in src.iter_mut().zip(sys.source()) {
                *a += b;
            }
            let (star, _) = sys.sweep_angular(&src, true)?;
            let delta: Vec<f64> = star.iter().zip(&rho).map(|(s, r)| s - r).collect();
            let df: Vec<f64> = sol.angular.iter().zip(fl).map(|(a, b)| a - b).collect();
            let lhs = sys.apply_a(&df)?;
            let rhs = sys.apply_sigma_s(&delta);
            let scale = norm_inf(&rhs).max(1.0);
            for j in 0..q.len() {
                err = err.max(max_diff(&lhs[j * nd..(j + 1) * nd], &rhs) / scale);
            }
            rho = star;
        }
    }
    Ok((err, 1e-10))
}

fn galerkin_orthogonality() -> Result<(f64, f64)> {
    let (p, mesh, q) = small_xy();
    let training: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0 + 0.7 * i as f64]).collect();
    let mut acc = PodAccumulator::new(mesh.num_cells() * 4 * q.len(), &[]);
    collect_snapshots(&p, &mesh, &q, &training, &SolveConfig::new(1e-12), 1, &mut acc)?;
    let sys0 = TransportSystem::assemble(&p, &mesh, &q, &[1.0])?;
    let model = ReducedModel::build(acc.solution.finish()?.into_truncated(1e-6), &sys0, ModelKind::Solution)?;
    let u = model.basis.as_ref().expect("basis kept");
    let n = sys0.n_unknowns();
    let mut err: f64 = 0.0;
    for mu in [1.4, 3.3] {
        let sys = TransportSystem::assemble(&p, &mesh, &q, &[mu])?;
        let c = model.solve_coefficients(&sys)?;
        let mut f = vec![0.0; n];
        for (k, ck) in c.iter().enumerate() {
            for i in 0..n {
                f[i] += ck * u[k * n + i];
            }
        }
        let af = sys.apply_a(&f)?;
        let b = sys.rhs_full();
        let scale = norm_inf(&b);
        for k in 0..model.rank {
            let proj: f64 = (0..n).map(|i| u[k * n + i] * (af[i] - b[i])).sum();
            err = err.max(proj.abs() / scale);
        }
    }
    Ok((err, 1e-12))
}

fn preconditioner_equivalence() -> Result<(f64, f64)> {
    let mut err: f64 = 0.0;
    for (p, mesh, q) in [small_slab(), small_xy()] {
        let sys = TransportSystem::assemble(&p, &mesh, &q, &[3.1])?;
        let nd = sys.n_dof();
        let rho: Vec<f64> = (0..nd).map(|i| 0.3 + (i as f64 * 0.41).sin()).collect();
        let mut dsa = DsaCorrection::new();
        dsa.prepare(&sys)?;
        let star = sys.si_map(&rho)?;
        let delta: Vec<f64> = star.iter().zip(&rho).map(|(a, b)| a - b).collect();
        let corr = dsa.correct(&sys, 1, &delta)?;
        let sisa: Vec<f64> = star.iter().zip(&corr).map(|(a, b)| a + b).collect();
        let b = sys.rhs_bar()?;
        let lrho = sys.apply_l(&rho)?;
        let res: Vec<f64> = (0..nd).map(|i| b[i] - (rho[i] - lrho[i])).collect();
        let pres = dsa.precondition(&sys, &res)?;
        let rich: Vec<f64> = rho.iter().zip(&pres).map(|(a, b)| a + b).collect();
        err = err.max(max_diff(&sisa, &rich));
    }
    Ok((err, 1e-12))
}
