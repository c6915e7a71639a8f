mod common;

use std::sync::Arc;

use common::*;
use rte_core::problem::*;
use rte_core::rom::*;
use rte_core::scalar::norm_inf;
use rte_core::solvers::*;
use rte_core::*;

#[test]
fn quadrature_moments() {
    let gl = AngularQuadrature::<f64>::gauss_legendre(16).unwrap();
    assert!((gl.average(|_| 1.0) - 1.0).abs() < 1e-14);
    assert!(gl.average(|v| v[0]).abs() < 1e-15);
    assert!((gl.average(|v| v[0] * v[0]) - 1.0 / 3.0).abs() < 1e-14);
    assert!((gl.average(|v| v[0].powi(4)) - 0.2).abs() < 1e-14);

    for (np, nz) in [(4, 2), (16, 4), (30, 6)] {
        for q in [
            AngularQuadrature::<f64>::chebyshev_legendre(np, nz).unwrap(),
            AngularQuadrature::<f64>::chebyshev_legendre_folded(np, nz).unwrap(),
        ] {
            q.check_invariants(1e-13).unwrap();
            assert!((q.average(|_| 1.0) - 1.0).abs() < 1e-14);
            assert!(q.average(|v| v[0]).abs() < 1e-15);
            assert!(q.average(|v| v[1]).abs() < 1e-15);
            assert!((q.average(|v| v[0] * v[0]) - 1.0 / 3.0).abs() < 1e-14);
            assert!((q.average(|v| v[1] * v[1]) - 1.0 / 3.0).abs() < 1e-14);
            assert!(q.average(|v| v[0] * v[1]).abs() < 1e-15);
        }
    }
    let cl = AngularQuadrature::<f64>::chebyshev_legendre(30, 6).unwrap();
    assert_eq!(cl.len(), 180);
    let cl4 = AngularQuadrature::<f64>::chebyshev_legendre(4, 2).unwrap();
    assert!(cl4.weights().iter().all(|w| (w - 0.125).abs() < 1e-15));
}

/// A continuous piecewise-linear flux with a consistent linear source is
/// reproduced exactly by the sweep.
#[test]
fn sweep_reproduces_linear_solutions() {
    let exact = |x: f64, y: f64| 1.0 + 0.5 * x + 2.0 * y;
    let p = ProblemDefinition::new("linear", Geometry::Xy)
        .with_cross_section(CrossSectionTerm::absorption(constant_coefficient(1.0), constant_field(0.7)))
        .with_inflow(constant_coefficient(1.0), Side::XMin, field(exact))
        .with_inflow(constant_coefficient(1.0), Side::XMax, field(exact))
        .with_inflow(constant_coefficient(1.0), Side::YMin, field(exact))
        .with_inflow(constant_coefficient(1.0), Side::YMax, field(exact));
    let mesh = Mesh::grid(vec![0.0, 0.3, 0.5, 1.2], vec![-1.0, -0.2, 0.0, 0.4, 1.0]).unwrap();
    let q = AngularQuadrature::chebyshev_legendre(8, 2).unwrap();
    let sys = TransportSystem::assemble(&p, &mesh, &q, &[]).unwrap();
    let space = sys.space().clone();
    let target = space.project(&mesh, exact, 4);
    for j in 0..q.len() {
        let v = q.direction(j);
        let rhs = space.project(&mesh, |x, y| 0.5 * v[0] + 2.0 * v[1] + 0.7 * exact(x, y), 4);
        let f = sys.sweep_with_inflow(j, &rhs).unwrap();
        let err = max_diff(&f, &target);
        assert!(err < 1e-12, "direction {j}: {err:e}");
        assert!(sys.audit_sweep_order(j));
    }

    let p1 = ProblemDefinition::new("linear-slab", Geometry::Slab)
        .with_cross_section(CrossSectionTerm::absorption(constant_coefficient(1.0), constant_field(2.0)))
        .with_inflow(constant_coefficient(1.0), Side::XMin, field(|x, _| 3.0 - x))
        .with_inflow(constant_coefficient(1.0), Side::XMax, field(|x, _| 3.0 - x));
    let mesh = Mesh::piecewise_uniform_slab(&[(0.0, 1.0, 3), (1.0, 2.5, 5)]).unwrap();
    let q = AngularQuadrature::gauss_legendre(8).unwrap();
    let sys = TransportSystem::assemble(&p1, &mesh, &q, &[]).unwrap();
    let space = sys.space().clone();
    let target = space.project(&mesh, |x, _| 3.0 - x, 4);
    for j in 0..q.len() {
        let v = q.direction(j)[0];
        let rhs = space.project(&mesh, |x, _| -v + 2.0 * (3.0 - x), 4);
        let f = sys.sweep_with_inflow(j, &rhs).unwrap();
        assert!(max_diff(&f, &target) < 1e-12);
    }
}

#[test]
fn zero_input_sweeps_to_zero() {
    let (p, mesh, q) = tiny_xy();
    let p = ProblemDefinition { inflows: Vec::new(), ..p };
    let sys = TransportSystem::assemble(&p, &mesh, &q, &[2.0]).unwrap();
    let zero = vec![0.0; sys.n_dof()];
    for j in 0..q.len() {
        assert!(sys.sweep_with_inflow(j, &zero).unwrap().iter().all(|v| *v == 0.0));
    }
}

#[test]
fn affine_reconstruction() {
    for (p, mesh, q) in [tiny_slab(), tiny_xy()] {
        let sys = TransportSystem::assemble(&p, &mesh, &q, &[2.2]).unwrap();
        assert_eq!(sys.n_affine(), 3);
        let probe: Vec<f64> = (0..sys.n_unknowns()).map(|i| ((i * 13 + 5) % 17) as f64 - 8.0).collect();
        let rel = sys.verify_affine(&probe).unwrap();
        assert!(rel < 1e-13, "{rel:e}");
    }
}

#[test]
fn affine_claim_mismatch_is_detected() {
    let (p, mesh, q) = tiny_slab();
    let mut honest = p.clone();
    honest.direct = Some(DirectCrossSections {
        sigma_a: Arc::new(|_, _, _| 0.2),
        sigma_s: Arc::new(|x, _, mu: &[f64]| mu[0] * (0.5 + x)),
    });
    let sys = TransportSystem::assemble(&honest, &mesh, &q, &[2.0]).unwrap();
    assert!(sys.uses_direct_cross_sections());
    // anisotropic, so that scattering and total terms do not cancel
    let probe: Vec<f64> = (0..sys.n_unknowns()).map(|i| if i < sys.n_dof() { 1.0 } else { -0.5 }).collect();
    assert!(sys.verify_affine(&probe).is_ok());

    let mut wrong = p;
    wrong.direct = Some(DirectCrossSections {
        sigma_a: Arc::new(|_, _, _| 0.2),
        sigma_s: Arc::new(|x, _, mu: &[f64]| mu[0] * mu[0] * (0.5 + x)),
    });
    let sys = TransportSystem::assemble(&wrong, &mesh, &q, &[2.0]).unwrap();
    assert!(matches!(sys.verify_affine(&probe), Err(Error::AffineMismatch(_))));
}

#[test]
fn streaming_triplets_match_matrix_free_operator() {
    for (p, mesh, q) in [tiny_slab(), tiny_xy()] {
        let sys = TransportSystem::assemble(&p, &mesh, &q, &[1.5]).unwrap();
        let nd = sys.n_dof();
        let f: Vec<f64> = (0..nd).map(|i| (i as f64 * 0.9).cos()).collect();
        for j in 0..q.len() {
            let v = q.direction(j);
            let m = sparse::CsrMatrix::from_triplets(nd, nd, sys.streaming_triplets(v[0], v[1]));
            let err = max_diff(&m.matvec(&f), &sys.apply_streaming(j, &f).unwrap());
            assert!(err < 1e-13, "direction {j}: {err:e}");
        }
    }
}

#[test]
fn pod_orthonormality_and_truncation() {
    let mut b = PodBuilder::<f64>::new(200);
    for k in 0..40 {
        let col: Vec<f64> = (0..200)
            .map(|i| {
                let x = i as f64 / 199.0;
                (0..6).map(|m| (0.1f64).powi(m) * ((m + 1) as f64 * x + 0.01 * k as f64 * m as f64).sin()).sum()
            })
            .collect();
        b.push(&col).unwrap();
    }
    let pod = b.finish().unwrap();
    let sv = pod.singular_values().to_vec();
    assert!(sv.windows(2).all(|w| w[0] >= w[1]));
    let total: f64 = sv.iter().sum();
    for eps in [1e-2, 1e-4, 1e-6, 1e-9] {
        let basis = pod.truncate(eps);
        assert!(basis.orthonormality_error() < 1e-12);
        let r = basis.rank;
        let kept: f64 = sv[..r].iter().sum();
        assert!(kept / total >= 1.0 - eps);
        if r > 1 {
            let fewer: f64 = sv[..r - 1].iter().sum();
            assert!(fewer / total < 1.0 - eps);
        }
        assert!((basis.discarded_fraction - (1.0 - kept / total)).abs() < 1e-12);
    }
    assert_eq!(truncation_rank(&[0.9, 0.09, 0.009, 0.001], 0.01), 2);
}

/// `A (f - f^(l,*)) = Sigma_s (rho^(l,*) - rho^(l-1))` on every direction.
#[test]
fn correction_snapshot_identity() {
    for (p, mesh, q) in [tiny_slab(), tiny_xy()] {
        let mu = [2.7];
        let sys = TransportSystem::assemble(&p, &mesh, &q, &mu).unwrap();
        let cfg = SolveConfig::new(1e-14);
        let mut dsa = DsaCorrection::new();
        let sol = sisa_solve_angular(&sys, &mut dsa, &cfg, 3).unwrap();
        assert!(sol.report.converged);
        assert_eq!(sol.intermediates.len(), sol.report.iterations.min(3));

        let mut dsa = DsaCorrection::new();
        dsa.prepare(&sys).unwrap();
        let nd = sys.n_dof();
        let mut rho = vec![0.0; nd];
        for (l, fl) in sol.intermediates.iter().enumerate() {
            let mut q_src = sys.apply_sigma_s(&rho);
            for (a, b) in q_src.iter_mut().zip(sys.source()) {
                *a += b;
            }
            let (star, f) = sys.sweep_angular(&q_src, true).unwrap();
            assert!(max_diff(&f, fl) < 1e-14);
            let delta: Vec<f64> = star.iter().zip(&rho).map(|(s, r)| s - r).collect();
            let df: Vec<f64> = sol.angular.iter().zip(fl).map(|(a, b)| a - b).collect();
            let lhs = sys.apply_a(&df).unwrap();
            let rhs = sys.apply_sigma_s(&delta);
            let scale = norm_inf(&rhs);
            for j in 0..q.len() {
                let e = max_diff(&lhs[j * nd..(j + 1) * nd], &rhs);
                assert!(e < 1e-10 * scale.max(1.0), "iteration {} direction {j}: {e:e}", l + 1);
            }
            let corr = dsa.correct(&sys, l + 1, &delta).unwrap();
            rho = star.iter().zip(&corr).map(|(a, b)| a + b).collect();
        }
    }
}

#[test]
fn galerkin_residual_is_orthogonal_to_basis() {
    let (p, mesh, q) = tiny_xy();
    let training: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0 + 0.7 * i as f64]).collect();
    let mut store = SnapshotStore::default();
    collect_snapshots(&p, &mesh, &q, &training, &SolveConfig::new(1e-12), 1, &mut store).unwrap();
    let sys0 = TransportSystem::assemble(&p, &mesh, &q, &[1.0]).unwrap();
    let mut b = PodBuilder::new(sys0.n_unknowns());
    for s in &store.snapshots {
        b.push(&s.converged).unwrap();
    }
    let basis = b.finish().unwrap().into_truncated(1e-6);
    let model = ReducedModel::build(basis, &sys0, ModelKind::Solution).unwrap();
    let u = model.basis.as_ref().unwrap();
    let n = sys0.n_unknowns();
    for mu in [1.4, 3.3] {
        let sys = TransportSystem::assemble(&p, &mesh, &q, &[mu]).unwrap();
        let c = model.solve_coefficients(&sys).unwrap();
        let mut f = vec![0.0; n];
        for (k, ck) in c.iter().enumerate() {
            for i in 0..n {
                f[i] += ck * u[k * n + i];
            }
        }
        let af = sys.apply_a(&f).unwrap();
        let b = sys.rhs_full();
        let r: Vec<f64> = af.iter().zip(&b).map(|(a, b)| a - b).collect();
        let scale = norm_inf(&b);
        for k in 0..model.rank {
            let proj: f64 = (0..n).map(|i| u[k * n + i] * r[i]).sum();
            assert!(proj.abs() < 1e-12 * scale, "mode {k}: {proj:e}");
        }
        let rho = romig(&model, &sys).unwrap();
        assert!(max_diff(&rho, &sys.density(&f)) < 1e-13);
    }
}

#[test]
fn romig_is_exact_on_training_parameters() {
    let (p, mesh, q) = tiny_slab();
    let training: Vec<Vec<f64>> = (0..4).map(|i| vec![1.0 + i as f64]).collect();
    let eps = 1e-12;
    let mut acc = PodAccumulator::new(q.len() * 8, &[]);
    collect_snapshots(&p, &mesh, &q, &training, &SolveConfig::new(eps), 1, &mut acc).unwrap();
    let pod = acc.solution.finish().unwrap().into_truncated(0.0);
    assert_eq!(pod.rank, 4);
    let sys0 = TransportSystem::assemble(&p, &mesh, &q, &[1.0]).unwrap();
    let model = ReducedModel::build(pod, &sys0, ModelKind::Solution).unwrap();
    for mu in &training {
        let sys = TransportSystem::assemble(&p, &mesh, &q, mu).unwrap();
        let reference = DenseOracle::new(&p, &mesh, &q, mu).solve_density();
        let rho = romig(&model, &sys).unwrap();
        assert!(max_diff(&rho, &reference) < 10.0 * eps);
    }
}

#[test]
fn preconditioner_equivalence() {
    for (p, mesh, q) in [tiny_slab(), tiny_xy()] {
        let sys = TransportSystem::assemble(&p, &mesh, &q, &[3.1]).unwrap();
        let nd = sys.n_dof();
        let rho: Vec<f64> = (0..nd).map(|i| 0.3 + (i as f64 * 0.41).sin()).collect();
        let mut dsa = DsaCorrection::new();
        dsa.prepare(&sys).unwrap();
        let star = sys.si_map(&rho).unwrap();
        let delta: Vec<f64> = star.iter().zip(&rho).map(|(a, b)| a - b).collect();
        let corr = dsa.correct(&sys, 1, &delta).unwrap();
        let sisa: Vec<f64> = star.iter().zip(&corr).map(|(a, b)| a + b).collect();

        let b = sys.rhs_bar().unwrap();
        let lrho = sys.apply_l(&rho).unwrap();
        let res: Vec<f64> = (0..nd).map(|i| b[i] - (rho[i] - lrho[i])).collect();
        let pres = dsa.precondition(&sys, &res).unwrap();
        let rich: Vec<f64> = rho.iter().zip(&pres).map(|(a, b)| a + b).collect();
        assert!(max_diff(&sisa, &rich) < 1e-12);
    }
}

#[test]
fn dsa_is_linear_and_vanishes_without_scattering() {
    let (p, mesh, q) = tiny_xy();
    let sys = TransportSystem::assemble(&p, &mesh, &q, &[2.0]).unwrap();
    let op = dsa::DsaOperator::build(&sys).unwrap();
    let nd = sys.n_dof();
    let d1: Vec<f64> = (0..nd).map(|i| (i as f64).sin()).collect();
    let d2: Vec<f64> = (0..nd).map(|i| (i as f64 * 0.3).cos()).collect();
    let (a, b) = (1.7, -0.4);
    let mix: Vec<f64> = d1.iter().zip(&d2).map(|(x, y)| a * x + b * y).collect();
    let c1 = op.correct(&sys, &d1).unwrap();
    let c2 = op.correct(&sys, &d2).unwrap();
    let cm = op.correct(&sys, &mix).unwrap();
    let lin: Vec<f64> = c1.iter().zip(&c2).map(|(x, y)| a * x + b * y).collect();
    assert!(max_diff(&cm, &lin) < 1e-12 * norm_inf(&lin).max(1.0));
    assert!(op.correct(&sys, &vec![0.0; nd]).unwrap().iter().all(|v| *v == 0.0));

    let absorber = ProblemDefinition::new("absorber", Geometry::Xy)
        .with_cross_section(CrossSectionTerm::absorption(constant_coefficient(1.0), constant_field(2.0)))
        .with_source(constant_coefficient(1.0), constant_field(1.0));
    let sys = TransportSystem::assemble(&absorber, &mesh, &q, &[]).unwrap();
    let op = dsa::DsaOperator::build(&sys).unwrap();
    assert!(op.correct(&sys, &d1).unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn pure_absorber_converges_immediately() {
    let p = ProblemDefinition::new("absorber", Geometry::Slab)
        .with_cross_section(CrossSectionTerm::absorption(constant_coefficient(1.0), constant_field(1.5)))
        .with_source(constant_coefficient(1.0), constant_field(1.0));
    let mesh = Mesh::uniform_slab(0.0, 2.0, 10).unwrap();
    let q = AngularQuadrature::gauss_legendre(8).unwrap();
    let sys = TransportSystem::assemble(&p, &mesh, &q, &[]).unwrap();
    let cfg = SolveConfig::new(1e-12);
    let (_, rep) = sisa_solve(&sys, &mut NoCorrection, &cfg, None).unwrap();
    assert!(rep.converged);
    assert_eq!(rep.iterations, 2);
    let (_, rep) = gmres_solve(&sys, None, &cfg.with_gmres(25, 1e-12), None).unwrap();
    assert!(rep.converged);
    assert!(rep.iterations <= 1, "{} inner iterations", rep.iterations);
}

/// Returns the exact correction while the change is large, and garbage once
/// it is below tolerance; the solver must stop before asking.
struct Poisoned(DenseOracle, f64);

impl CorrectionStrategy<f64> for Poisoned {
    fn label(&self) -> String {
        "poisoned".into()
    }
    fn correct(&mut self, _: &System64, _: usize, delta: &[f64]) -> Result<Vec<f64>> {
        if norm_inf(delta) < self.1 {
            return Ok(vec![1e6; delta.len()]);
        }
        Ok(self.0.correction(delta))
    }
}

#[test]
fn convergence_check_precedes_correction() {
    let (p, mesh, q) = tiny_slab();
    let mu = [2.0];
    let sys = TransportSystem::assemble(&p, &mesh, &q, &mu).unwrap();
    let eps = 1e-10;
    let mut s = Poisoned(DenseOracle::new(&p, &mesh, &q, &mu), eps);
    let (rho, rep) = sisa_solve(&sys, &mut s, &SolveConfig::new(eps), None).unwrap();
    assert!(rep.converged);
    assert!(*rep.change_history.last().unwrap() < eps);
    let reference = DenseOracle::new(&p, &mesh, &q, &mu).solve_density();
    assert!(max_diff(&rho, &reference) < 10.0 * eps);
}

#[test]
fn sweep_accounting() {
    let (p, mesh, q) = tiny_xy();
    let sys = TransportSystem::assemble(&p, &mesh, &q, &[2.0]).unwrap();
    let cfg = SolveConfig::new(1e-10).with_gmres(25, 1e-12);
    let (_, rep) = sisa_solve(&sys, &mut DsaCorrection::new(), &cfg, None).unwrap();
    assert_eq!(rep.n_sweep, rep.iterations + 1);
    assert_eq!(rep.change_history.len(), rep.iterations);
    let (_, rep) = gmres_solve(&sys, Some(&mut DsaCorrection::new()), &cfg, None).unwrap();
    assert!(rep.n_sweep >= rep.iterations && rep.n_sweep <= rep.iterations + 3);
}

#[test]
fn romsad_switches_to_dsa_after_theta() {
    let (p, mesh, q) = tiny_slab();
    let training: Vec<Vec<f64>> = vec![vec![1.0], vec![4.0]];
    let mut acc = PodAccumulator::new(q.len() * 8, &[1]);
    collect_snapshots(&p, &mesh, &q, &training, &SolveConfig::new(1e-12), 1, &mut acc).unwrap();
    let (_, b) = acc.corrections.pop().unwrap();
    let sys0 = TransportSystem::assemble(&p, &mesh, &q, &[1.0]).unwrap();
    let model = Arc::new(ReducedModel::build(b.finish().unwrap().into_truncated(1e-3), &sys0, ModelKind::Correction { window: 1 }).unwrap());
    let sys = TransportSystem::assemble(&p, &mesh, &q, &[2.5]).unwrap();
    let mut s = RomsadCorrection::new(model, 1, 1e-13);
    let (_, rep) = sisa_solve(&sys, &mut s, &SolveConfig::new(1e-12), None).unwrap();
    assert!(rep.converged);
    if rep.iterations > 2 {
        assert_eq!(s.switched_at(), Some(2));
    }
    assert!((RomsadCorrection::<f64>::switch_tolerance(0.1, 1e-11, 1e-9) - 1e-10).abs() < 1e-25);
}

#[test]
fn single_precision_pipeline() {
    let p = ProblemDefinition::<f32>::new("f32", Geometry::Slab)
        .with_parameter("mu", 0.5, 2.0)
        .with_cross_section(CrossSectionTerm::absorption(constant_coefficient(1.0), constant_field(0.1)))
        .with_cross_section(CrossSectionTerm::scattering(parameter_coefficient(0), constant_field(2.0)))
        .with_source(constant_coefficient(1.0), constant_field(1.0));
    let mesh = Mesh::uniform_slab(0.0f32, 2.0, 20).unwrap();
    let q = AngularQuadrature::<f32>::gauss_legendre(8).unwrap();
    let sys = TransportSystem::assemble(&p, &mesh, &q, &[1.0]).unwrap();
    let cfg = SolveConfig::new(1e-5f32);
    let (rho, rep) = sisa_solve(&sys, &mut DsaCorrection::new(), &cfg, None).unwrap();
    assert!(rep.converged);
    let (rho_g, rep_g) = gmres_solve(&sys, Some(&mut DsaCorrection::new()), &cfg.with_gmres(10, 1e-6), None).unwrap();
    assert!(rep_g.converged);
    let diff = rho.iter().zip(&rho_g).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
    assert!(diff < 1e-4, "{diff}");
}
