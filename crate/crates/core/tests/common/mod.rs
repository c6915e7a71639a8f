#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rte_core::problem::*;
use rte_core::*;

/// 4-point Gauss rule on [-1, 1].
const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

pub fn tiny_slab() -> (ProblemDefinition<f64>, Mesh64, Quadrature64) {
    let p = ProblemDefinition::new("tiny-slab", Geometry::Slab)
        .with_parameter("mu", 1.0, 4.0)
        .with_cross_section(CrossSectionTerm::absorption(constant_coefficient(1.0), constant_field(0.2)))
        .with_cross_section(CrossSectionTerm::scattering(parameter_coefficient(0), field(|x, _| 0.5 + x)))
        .with_source(constant_coefficient(1.0), field(|x, _| 1.0 + x * x))
        .with_inflow(parameter_coefficient(0), Side::XMin, constant_field(0.5));
    let mesh = Mesh::uniform_slab(0.0, 1.0, 4).unwrap();
    let q = AngularQuadrature::gauss_legendre(2).unwrap();
    (p, mesh, q)
}

pub fn tiny_xy() -> (ProblemDefinition<f64>, Mesh64, Quadrature64) {
    let p = ProblemDefinition::new("tiny-xy", Geometry::Xy)
        .with_parameter("mu", 1.0, 4.0)
        .with_cross_section(CrossSectionTerm::absorption(constant_coefficient(1.0), constant_field(0.1)))
        .with_cross_section(CrossSectionTerm::scattering(parameter_coefficient(0), field(|x, y| 1.0 + x * y)))
        .with_source(constant_coefficient(1.0), field(|x, y| if x < 1.0 && y < 1.0 { 1.0 } else { 0.0 }))
        .with_inflow(constant_coefficient(1.0), Side::YMin, field(|x, _| x));
    let mesh = Mesh::uniform_grid((0.0, 1.5), (0.0, 1.5), 3, 3).unwrap();
    let q = AngularQuadrature::chebyshev_legendre(4, 2).unwrap();
    (p, mesh, q)
}

fn legendre(s: f64, lo: f64, h: f64) -> ([f64; 2], [f64; 2]) {
    let t = 2.0 * (s - lo) / h - 1.0;
    let r = 1.0 / h.sqrt();
    ([r, 3f64.sqrt() * t * r], [0.0, 3f64.sqrt() * 2.0 / h * r])
}

struct Cell {
    x: (f64, f64),
    y: (f64, f64),
}

fn cell_of(mesh: &Mesh64, c: usize) -> Cell {
    let (ix, iy) = mesh.cell_coords(c);
    let xf = mesh.x_faces();
    let x = (xf[ix], xf[ix + 1]);
    let y = if mesh.geometry() == Geometry::Xy {
        let yf = mesh.y_faces();
        (yf[iy], yf[iy + 1])
    } else {
        (0.0, 1.0)
    };
    Cell { x, y }
}

/// Basis values and gradients at `(x, y)` in the given cell.
fn eval(geom: Geometry, cell: &Cell, x: f64, y: f64) -> Vec<(f64, f64, f64)> {
    let (px, dx) = legendre(x, cell.x.0, cell.x.1 - cell.x.0);
    match geom {
        Geometry::Slab => (0..2).map(|a| (px[a], dx[a], 0.0)).collect(),
        Geometry::Xy => {
            let (py, dy) = legendre(y, cell.y.0, cell.y.1 - cell.y.0);
            let mut out = Vec::new();
            for b in 0..2 {
                for a in 0..2 {
                    out.push((px[a] * py[b], dx[a] * py[b], px[a] * dy[b]));
                }
            }
            out
        }
    }
}

/// Volume quadrature points `(x, y, weight)` of a cell.
fn volume_points(geom: Geometry, cell: &Cell) -> Vec<(f64, f64, f64)> {
    let map = |(a, b): (f64, f64), s: f64| (0.5 * (a + b) + 0.5 * (b - a) * s, 0.5 * (b - a));
    let mut out = Vec::new();
    for &(sx, wx) in &GAUSS4 {
        let (x, jx) = map(cell.x, sx);
        match geom {
            Geometry::Slab => out.push((x, 0.0, wx * jx)),
            Geometry::Xy => {
                for &(sy, wy) in &GAUSS4 {
                    let (y, jy) = map(cell.y, sy);
                    out.push((x, y, wx * jx * wy * jy));
                }
            }
        }
    }
    out
}

/// Face of a cell: outward normal, quadrature points, neighbour cell.
struct Face {
    normal: (f64, f64),
    points: Vec<(f64, f64, f64)>,
    neighbour: Option<usize>,
}

fn faces(mesh: &Mesh64, c: usize) -> Vec<Face> {
    let geom = mesh.geometry();
    let cell = cell_of(mesh, c);
    let (ix, iy) = mesh.cell_coords(c);
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let along = |(a, b): (f64, f64)| -> Vec<(f64, f64)> {
        GAUSS4.iter().map(|&(s, w)| (0.5 * (a + b) + 0.5 * (b - a) * s, w * 0.5 * (b - a))).collect()
    };
    let mut out = Vec::new();
    let ypts: Vec<(f64, f64)> = if geom == Geometry::Slab { vec![(0.0, 1.0)] } else { along(cell.y) };
    out.push(Face {
        normal: (-1.0, 0.0),
        points: ypts.iter().map(|&(y, w)| (cell.x.0, y, w)).collect(),
        neighbour: (ix > 0).then(|| mesh.cell_index(ix - 1, iy)),
    });
    out.push(Face {
        normal: (1.0, 0.0),
        points: ypts.iter().map(|&(y, w)| (cell.x.1, y, w)).collect(),
        neighbour: (ix + 1 < nx).then(|| mesh.cell_index(ix + 1, iy)),
    });
    if geom == Geometry::Xy {
        let xpts = along(cell.x);
        out.push(Face {
            normal: (0.0, -1.0),
            points: xpts.iter().map(|&(x, w)| (x, cell.y.0, w)).collect(),
            neighbour: (iy > 0).then(|| mesh.cell_index(ix, iy - 1)),
        });
        out.push(Face {
            normal: (0.0, 1.0),
            points: xpts.iter().map(|&(x, w)| (x, cell.y.1, w)).collect(),
            neighbour: (iy + 1 < ny).then(|| mesh.cell_index(ix, iy + 1)),
        });
    }
    out
}

/// Dense coupled system `A f = b` of the upwind DG discretization, built
/// independently of the library's assembly from the problem definition.
pub struct DenseOracle {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Same operator with zero source and zero inflow.
    pub n_dof: usize,
    pub weights: Vec<f64>,
    pub sigma_s: DMatrix<f64>,
}

impl DenseOracle {
    pub fn new(p: &ProblemDefinition<f64>, mesh: &Mesh64, q: &Quadrature64, mu: &[f64]) -> Self {
        let geom = mesh.geometry();
        let nl = if geom == Geometry::Slab { 2 } else { 4 };
        let nc = mesh.num_cells();
        let nd = nc * nl;
        let nv = q.len();
        let n = nd * nv;
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = DVector::<f64>::zeros(n);
        let mut mt = DMatrix::<f64>::zeros(nd, nd);
        let mut ms = DMatrix::<f64>::zeros(nd, nd);
        let mut g = vec![0.0; nd];
        for c in 0..nc {
            let cell = cell_of(mesh, c);
            for (x, y, w) in volume_points(geom, &cell) {
                let phi = eval(geom, &cell, x, y);
                let st = p.sigma_t(x, y, mu);
                let ss = p.sigma_s(x, y, mu);
                let src = p.source(x, y, mu);
                for k in 0..nl {
                    g[c * nl + k] += w * src * phi[k].0;
                    for l in 0..nl {
                        mt[(c * nl + k, c * nl + l)] += w * st * phi[k].0 * phi[l].0;
                        ms[(c * nl + k, c * nl + l)] += w * ss * phi[k].0 * phi[l].0;
                    }
                }
            }
        }
        for j in 0..nv {
            let d = q.direction(j);
            let (vx, vy) = (d[0], if geom == Geometry::Xy { d[1] } else { 0.0 });
            let off = j * nd;
            for r in 0..nd {
                for s in 0..nd {
                    a[(off + r, off + s)] += mt[(r, s)];
                }
                b[off + r] += g[r];
            }
            for jj in 0..nv {
                let wj = q.weight(jj);
                for r in 0..nd {
                    for s in 0..nd {
                        a[(off + r, jj * nd + s)] -= wj * ms[(r, s)];
                    }
                }
            }
            for c in 0..nc {
                let cell = cell_of(mesh, c);
                for (x, y, w) in volume_points(geom, &cell) {
                    let phi = eval(geom, &cell, x, y);
                    for k in 0..nl {
                        let vgrad = vx * phi[k].1 + vy * phi[k].2;
                        for l in 0..nl {
                            a[(off + c * nl + k, off + c * nl + l)] -= w * phi[l].0 * vgrad;
                        }
                    }
                }
                for face in faces(mesh, c) {
                    let vn = vx * face.normal.0 + vy * face.normal.1;
                    if vn == 0.0 {
                        continue;
                    }
                    for &(x, y, w) in &face.points {
                        let phi = eval(geom, &cell, x, y);
                        if vn > 0.0 {
                            for k in 0..nl {
                                for l in 0..nl {
                                    a[(off + c * nl + k, off + c * nl + l)] += w * vn * phi[k].0 * phi[l].0;
                                }
                            }
                        } else if let Some(nb) = face.neighbour {
                            let nbc = cell_of(mesh, nb);
                            let psi = eval(geom, &nbc, x, y);
                            for k in 0..nl {
                                for l in 0..nl {
                                    a[(off + c * nl + k, off + nb * nl + l)] += w * vn * phi[k].0 * psi[l].0;
                                }
                            }
                        } else {
                            let side = match face.normal {
                                (n, _) if n < 0.0 => Side::XMin,
                                (n, _) if n > 0.0 => Side::XMax,
                                (_, n) if n < 0.0 => Side::YMin,
                                _ => Side::YMax,
                            };
                            let inflow: f64 = p
                                .inflows
                                .iter()
                                .filter(|t| t.side == side)
                                .map(|t| (t.theta)(mu) * (t.profile)(x, y))
                                .sum();
                            for k in 0..nl {
                                b[off + c * nl + k] -= w * vn * phi[k].0 * inflow;
                            }
                        }
                    }
                }
            }
        }
        Self { a, b, n_dof: nd, weights: q.weights().to_vec(), sigma_s: ms }
    }

    pub fn solve(&self) -> Vec<f64> {
        self.a.clone().lu().solve(&self.b).expect("oracle matrix is singular").as_slice().to_vec()
    }

    pub fn density(&self, f: &[f64]) -> Vec<f64> {
        let mut rho = vec![0.0; self.n_dof];
        for (j, w) in self.weights.iter().enumerate() {
            for i in 0..self.n_dof {
                rho[i] += w * f[j * self.n_dof + i];
            }
        }
        rho
    }

    pub fn solve_density(&self) -> Vec<f64> {
        self.density(&self.solve())
    }

    /// Density of the solution of `A df = Sigma_s delta` replicated over
    /// directions with zero inflow.
    pub fn correction(&self, delta: &[f64]) -> Vec<f64> {
        let nd = self.n_dof;
        let s = &self.sigma_s * DVector::from_column_slice(delta);
        let mut rhs = DVector::zeros(self.a.nrows());
        for j in 0..self.weights.len() {
            for i in 0..nd {
                rhs[j * nd + i] = s[i];
            }
        }
        let df = self.a.clone().lu().solve(&rhs).expect("oracle matrix is singular");
        self.density(df.as_slice())
    }
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
