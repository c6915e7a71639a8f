//! Assembled discrete transport system for one parameter value.
//!
//! Angular fluxes are stored direction-major: `f[j * n_dof + dof]`.
//! For direction `j` the cell-local operator is the upwind DG streaming
//! operator `D_j` plus the total cross-section mass matrix. Scattering
//! couples all directions through the density `rho = sum_j w_j f_j`.

use std::io::Write;

use crate::dense::{solve_small_in_place, DenseMatrix};
use crate::dg::{basis_1d, derivative_coupling, traces, DgSpace};
use crate::error::{Error, Result};
use crate::mesh::{Geometry, Mesh};
use crate::problem::{ProblemDefinition, Side};
use crate::quadrature::{gauss_legendre_rule, AngularQuadrature};
use crate::scalar::{axpy, norm_inf, Real};

#[derive(Debug, Clone, Copy)]
pub struct AssemblyOptions {
    /// Gauss points per axis used for cell and face integrals.
    pub quadrature_points: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { quadrature_points: 4 }
    }
}

/// Face moments `int g q_b` of an isotropic boundary flux on each side.
#[derive(Debug, Clone, Default)]
pub struct BoundaryData<T> {
    pub xmin: Vec<[T; 2]>,
    pub xmax: Vec<[T; 2]>,
    pub ymin: Vec<[T; 2]>,
    pub ymax: Vec<[T; 2]>,
}

impl<T: Real> BoundaryData<T> {
    fn zeros(nx: usize, ny: usize) -> Self {
        let z = [T::zero(); 2];
        Self { xmin: vec![z; ny], xmax: vec![z; ny], ymin: vec![z; nx], ymax: vec![z; nx] }
    }
    fn side(&self, side: Side) -> &[[T; 2]] {
        match side {
            Side::XMin => &self.xmin,
            Side::XMax => &self.xmax,
            Side::YMin => &self.ymin,
            Side::YMax => &self.ymax,
        }
    }
    fn side_mut(&mut self, side: Side) -> &mut Vec<[T; 2]> {
        match side {
            Side::XMin => &mut self.xmin,
            Side::XMax => &mut self.xmax,
            Side::YMin => &mut self.ymin,
            Side::YMax => &mut self.ymax,
        }
    }
    fn add_scaled(&mut self, alpha: T, other: &Self) {
        for side in [Side::XMin, Side::XMax, Side::YMin, Side::YMax] {
            for (a, b) in self.side_mut(side).iter_mut().zip(other.side(side)) {
                a[0] += alpha * b[0];
                a[1] += alpha * b[1];
            }
        }
    }
    pub fn is_zero(&self) -> bool {
        [&self.xmin, &self.xmax, &self.ymin, &self.ymax]
            .iter()
            .all(|s| s.iter().all(|m| m[0] == T::zero() && m[1] == T::zero()))
    }
}

#[derive(Debug, Clone, Copy)]
enum Upwind<T> {
    Cell(usize, [T; 2]),
    Boundary(Side, usize),
}

/// Inflow face of a cell: `rhs += speed * t_self (x) u` with `u` the upwind
/// trace moments.
#[derive(Debug, Clone, Copy)]
struct InflowFace<T> {
    axis: usize,
    speed: T,
    t_self: [T; 2],
    upwind: Upwind<T>,
}

#[derive(Debug, Clone)]
struct AffineParts<T> {
    theta: Vec<T>,
    total: Vec<Vec<T>>,
    scatter: Vec<Vec<T>>,
    inflow_theta: Vec<T>,
    inflow: Vec<BoundaryData<T>>,
}

#[derive(Debug, Clone)]
pub struct TransportSystem<T: Real> {
    name: String,
    mesh: Mesh<T>,
    space: DgSpace,
    quad: AngularQuadrature<T>,
    mu: Vec<T>,
    sigma_t: Vec<T>,
    sigma_s: Vec<T>,
    source: Vec<T>,
    boundary: BoundaryData<T>,
    affine: AffineParts<T>,
    direct: bool,
}

/// Threshold under which a velocity component is treated as exactly zero.
fn snap<T: Real>(v: T) -> T {
    if v.abs() <= T::epsilon() * T::lit(4.0) {
        T::zero()
    } else {
        v
    }
}

impl<T: Real> TransportSystem<T> {
    pub fn assemble(
        problem: &ProblemDefinition<T>,
        mesh: &Mesh<T>,
        quad: &AngularQuadrature<T>,
        mu: &[T],
    ) -> Result<Self> {
        Self::assemble_with(problem, mesh, quad, mu, AssemblyOptions::default())
    }

    pub fn assemble_with(
        problem: &ProblemDefinition<T>,
        mesh: &Mesh<T>,
        quad: &AngularQuadrature<T>,
        mu: &[T],
        options: AssemblyOptions,
    ) -> Result<Self> {
        if mesh.geometry() != problem.geometry || quad.geometry() != problem.geometry {
            return Err(Error::InvalidMesh(format!(
                "geometry mismatch: problem {:?}, mesh {:?}, quadrature {:?}",
                problem.geometry,
                mesh.geometry(),
                quad.geometry()
            )));
        }
        problem.check_parameters(mu)?;
        let space = DgSpace::new(mesh, 1)?;
        let nl = space.local_dofs();
        let nb = nl * nl;
        let n_cells = mesh.num_cells();
        let npts = options.quadrature_points.max(2);
        let n_terms = problem.cross_sections.len();

        let mut total = vec![vec![T::zero(); n_cells * nb]; n_terms];
        let mut scatter = vec![vec![T::zero(); n_cells * nb]; n_terms];
        let mut sigma_t = vec![T::zero(); n_cells * nb];
        let mut sigma_s = vec![T::zero(); n_cells * nb];
        let mut source = vec![T::zero(); space.n_dof()];
        let theta: Vec<T> = problem.cross_sections.iter().map(|t| (t.theta)(mu)).collect();
        let src_theta: Vec<T> = problem.sources.iter().map(|s| (s.theta)(mu)).collect();

        let mut buf_a = Vec::new();
        let mut buf_s = Vec::new();
        for c in 0..n_cells {
            let pts = space.cell_points(mesh, c, npts);
            let range = c * nb..(c + 1) * nb;
            for (k, term) in problem.cross_sections.iter().enumerate() {
                buf_a.clear();
                buf_s.clear();
                for p in &pts {
                    let sa = term.sigma_a.as_ref().map_or(T::zero(), |f| f(p.x, p.y));
                    let ss = term.sigma_s.as_ref().map_or(T::zero(), |f| f(p.x, p.y));
                    buf_a.push(sa + ss);
                    buf_s.push(ss);
                }
                total[k][range.clone()].copy_from_slice(&space.weighted_mass(&pts, &buf_a));
                scatter[k][range.clone()].copy_from_slice(&space.weighted_mass(&pts, &buf_s));
            }
            if problem.direct.is_some() {
                buf_a.clear();
                buf_s.clear();
                for p in &pts {
                    buf_a.push(problem.sigma_t(p.x, p.y, mu));
                    buf_s.push(problem.sigma_s(p.x, p.y, mu));
                }
                sigma_t[range.clone()].copy_from_slice(&space.weighted_mass(&pts, &buf_a));
                sigma_s[range.clone()].copy_from_slice(&space.weighted_mass(&pts, &buf_s));
            } else {
                for k in 0..n_terms {
                    for i in range.clone() {
                        sigma_t[i] += theta[k] * total[k][i];
                        sigma_s[i] += theta[k] * scatter[k][i];
                    }
                }
            }
            for p in &pts {
                let g: T = problem
                    .sources
                    .iter()
                    .zip(&src_theta)
                    .map(|(s, &th)| th * (s.field)(p.x, p.y))
                    .sum();
                if g != T::zero() {
                    for k in 0..nl {
                        source[space.dof(c, k)] += p.weight * g * p.basis[k];
                    }
                }
            }
        }

        let mut inflow = Vec::with_capacity(problem.inflows.len());
        let mut inflow_theta = Vec::with_capacity(problem.inflows.len());
        let mut boundary = BoundaryData::zeros(mesh.nx(), mesh.ny());
        for term in &problem.inflows {
            if mesh.geometry() == Geometry::Slab && matches!(term.side, Side::YMin | Side::YMax) {
                return Err(Error::InvalidMesh("slab problems only have x boundaries".into()));
            }
            let data = boundary_moments(mesh, term.side, |x, y| (term.profile)(x, y), npts);
            let th = (term.theta)(mu);
            boundary.add_scaled(th, &data);
            inflow_theta.push(th);
            inflow.push(data);
        }

        Ok(Self {
            name: problem.name.clone(),
            mesh: mesh.clone(),
            space,
            quad: quad.clone(),
            mu: mu.to_vec(),
            sigma_t,
            sigma_s,
            source,
            boundary,
            affine: AffineParts { theta, total, scatter, inflow_theta, inflow },
            direct: problem.direct.is_some(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }
    pub fn space(&self) -> &DgSpace {
        &self.space
    }
    pub fn quadrature(&self) -> &AngularQuadrature<T> {
        &self.quad
    }
    pub fn geometry(&self) -> Geometry {
        self.mesh.geometry()
    }
    pub fn mu(&self) -> &[T] {
        &self.mu
    }
    pub fn n_dof(&self) -> usize {
        self.space.n_dof()
    }
    pub fn n_dir(&self) -> usize {
        self.quad.len()
    }
    /// Length of an angular flux vector.
    pub fn n_unknowns(&self) -> usize {
        self.n_dir() * self.n_dof()
    }
    /// The assembled source `G`.
    pub fn source(&self) -> &[T] {
        &self.source
    }
    /// Per-cell row-major blocks of the total cross-section mass matrix.
    pub fn sigma_t_blocks(&self) -> &[T] {
        &self.sigma_t
    }
    pub fn sigma_s_blocks(&self) -> &[T] {
        &self.sigma_s
    }
    pub fn boundary(&self) -> &BoundaryData<T> {
        &self.boundary
    }

    fn apply_blocks(&self, blocks: &[T], x: &[T]) -> Vec<T> {
        let nl = self.space.local_dofs();
        let mut out = vec![T::zero(); x.len()];
        for c in 0..self.space.n_cells() {
            let b = &blocks[c * nl * nl..(c + 1) * nl * nl];
            for k in 0..nl {
                let mut s = T::zero();
                for l in 0..nl {
                    s += b[k * nl + l] * x[c * nl + l];
                }
                out[c * nl + k] = s;
            }
        }
        out
    }

    pub fn apply_sigma_s(&self, x: &[T]) -> Vec<T> {
        self.apply_blocks(&self.sigma_s, x)
    }
    pub fn apply_sigma_t(&self, x: &[T]) -> Vec<T> {
        self.apply_blocks(&self.sigma_t, x)
    }
    /// `(Sigma_t - Sigma_s) x`
    pub fn apply_sigma_a(&self, x: &[T]) -> Vec<T> {
        let mut t = self.apply_sigma_t(x);
        let s = self.apply_sigma_s(x);
        axpy(-T::one(), &s, &mut t);
        t
    }

    fn velocity(&self, j: usize) -> (T, T) {
        let v = self.quad.direction(j);
        match self.geometry() {
            Geometry::Slab => (snap(v[0]), T::zero()),
            Geometry::Xy => (snap(v[0]), snap(v[1])),
        }
    }

    /// Streaming block of cell `c` (volume and outflow terms, without the
    /// cross section) and its inflow faces.
    fn cell_streaming(&self, c: usize, vx: T, vy: T, block: &mut [T; 16]) -> [Option<InflowFace<T>>; 2] {
        let nl = self.space.local_dofs();
        block[..nl * nl].iter_mut().for_each(|b| *b = T::zero());
        let (ix, iy) = self.mesh.cell_coords(c);
        let nx = self.mesh.nx();
        let ny = self.mesh.ny();
        let mut faces = [None, None];
        let nb = if nl == 4 { 2 } else { 1 };
        if vx != T::zero() {
            let hx = self.mesh.hx(ix);
            let (lt, rt) = traces(hx);
            let g = derivative_coupling(hx);
            for b in 0..nb {
                block[(1 + 2 * b) * nl + 2 * b] -= vx * g;
            }
            let speed = vx.abs();
            let (out_t, in_t) = if vx > T::zero() { (rt, lt) } else { (lt, rt) };
            for b in 0..nb {
                for a in 0..2 {
                    for a2 in 0..2 {
                        block[(a + 2 * b) * nl + a2 + 2 * b] += speed * out_t[a] * out_t[a2];
                    }
                }
            }
            let upwind = if vx > T::zero() {
                if ix > 0 {
                    Upwind::Cell(c - 1, traces(self.mesh.hx(ix - 1)).1)
                } else {
                    Upwind::Boundary(Side::XMin, iy)
                }
            } else if ix + 1 < nx {
                Upwind::Cell(c + 1, traces(self.mesh.hx(ix + 1)).0)
            } else {
                Upwind::Boundary(Side::XMax, iy)
            };
            faces[0] = Some(InflowFace { axis: 0, speed, t_self: in_t, upwind });
        }
        if nl == 4 && vy != T::zero() {
            let hy = self.mesh.hy(iy);
            let (lt, rt) = traces(hy);
            let g = derivative_coupling(hy);
            for a in 0..2 {
                block[(a + 2) * nl + a] -= vy * g;
            }
            let speed = vy.abs();
            let (out_t, in_t) = if vy > T::zero() { (rt, lt) } else { (lt, rt) };
            for a in 0..2 {
                for b in 0..2 {
                    for b2 in 0..2 {
                        block[(a + 2 * b) * nl + a + 2 * b2] += speed * out_t[b] * out_t[b2];
                    }
                }
            }
            let upwind = if vy > T::zero() {
                if iy > 0 {
                    Upwind::Cell(c - nx, traces(self.mesh.hy(iy - 1)).1)
                } else {
                    Upwind::Boundary(Side::YMin, ix)
                }
            } else if iy + 1 < ny {
                Upwind::Cell(c + nx, traces(self.mesh.hy(iy + 1)).0)
            } else {
                Upwind::Boundary(Side::YMax, ix)
            };
            faces[1] = Some(InflowFace { axis: 1, speed, t_self: in_t, upwind });
        }
        faces
    }

    /// Adds `speed * t_self (x) u` for one inflow face to `rhs`. Boundary
    /// faces use `bnd`, if any.
    #[inline]
    fn add_inflow(&self, face: &InflowFace<T>, f: &[T], bnd: Option<&BoundaryData<T>>, rhs: &mut [T; 4]) {
        let nl = self.space.local_dofs();
        let u: [T; 2] = match face.upwind {
            Upwind::Cell(n, t) => {
                let fn_ = &f[n * nl..(n + 1) * nl];
                if nl == 2 {
                    [t[0] * fn_[0] + t[1] * fn_[1], T::zero()]
                } else if face.axis == 0 {
                    [t[0] * fn_[0] + t[1] * fn_[1], t[0] * fn_[2] + t[1] * fn_[3]]
                } else {
                    [t[0] * fn_[0] + t[1] * fn_[2], t[0] * fn_[1] + t[1] * fn_[3]]
                }
            }
            Upwind::Boundary(side, idx) => match bnd {
                Some(b) => b.side(side)[idx],
                None => return,
            },
        };
        let s = face.speed;
        if nl == 2 {
            rhs[0] += s * face.t_self[0] * u[0];
            rhs[1] += s * face.t_self[1] * u[0];
        } else if face.axis == 0 {
            for b in 0..2 {
                for a in 0..2 {
                    rhs[a + 2 * b] += s * face.t_self[a] * u[b];
                }
            }
        } else {
            for b in 0..2 {
                for a in 0..2 {
                    rhs[a + 2 * b] += s * face.t_self[b] * u[a];
                }
            }
        }
    }

    /// Cell visiting order for direction `j` (upwind first).
    pub fn sweep_order(&self, j: usize) -> Vec<usize> {
        let (vx, vy) = self.velocity(j);
        let nx = self.mesh.nx();
        let ny = self.mesh.ny();
        let xs: Vec<usize> = if vx >= T::zero() { (0..nx).collect() } else { (0..nx).rev().collect() };
        let ys: Vec<usize> = if vy >= T::zero() { (0..ny).collect() } else { (0..ny).rev().collect() };
        let mut order = Vec::with_capacity(nx * ny);
        for &iy in &ys {
            for &ix in &xs {
                order.push(self.mesh.cell_index(ix, iy));
            }
        }
        order
    }

    /// Checks that every upwind neighbour precedes its downwind cell in the
    /// sweep ordering of direction `j`.
    pub fn audit_sweep_order(&self, j: usize) -> bool {
        let (vx, vy) = self.velocity(j);
        let order = self.sweep_order(j);
        let mut pos = vec![0usize; order.len()];
        for (p, &c) in order.iter().enumerate() {
            pos[c] = p;
        }
        let mut block = [T::zero(); 16];
        order.iter().all(|&c| {
            self.cell_streaming(c, vx, vy, &mut block).iter().flatten().all(|f| match f.upwind {
                Upwind::Cell(n, _) => pos[n] < pos[c],
                Upwind::Boundary(..) => true,
            })
        })
    }

    fn sweep_into(&self, j: usize, q: &[T], bnd: Option<&BoundaryData<T>>, out: &mut [T]) -> Result<()> {
        let nl = self.space.local_dofs();
        let (vx, vy) = self.velocity(j);
        let mut block = [T::zero(); 16];
        let mut rhs = [T::zero(); 4];
        let nx = self.mesh.nx();
        let ny = self.mesh.ny();
        for sy in 0..ny {
            let iy = if vy >= T::zero() { sy } else { ny - 1 - sy };
            for sx in 0..nx {
                let ix = if vx >= T::zero() { sx } else { nx - 1 - sx };
                let c = iy * nx + ix;
                let faces = self.cell_streaming(c, vx, vy, &mut block);
                let st = &self.sigma_t[c * nl * nl..(c + 1) * nl * nl];
                for (b, s) in block.iter_mut().zip(st) {
                    *b += *s;
                }
                rhs[..nl].copy_from_slice(&q[c * nl..(c + 1) * nl]);
                for f in faces.iter().flatten() {
                    self.add_inflow(f, out, bnd, &mut rhs);
                }
                if !solve_small_in_place(nl, &mut block[..nl * nl], &mut rhs[..nl]) {
                    return Err(Error::SingularCellBlock { cell: c, direction: j });
                }
                out[c * nl..(c + 1) * nl].copy_from_slice(&rhs[..nl]);
            }
        }
        Ok(())
    }

    /// Solves `(D_j + Sigma_t) f_j = rhs` by one upwind sweep, with
    /// homogeneous inflow.
    pub fn sweep(&self, j: usize, rhs: &[T]) -> Result<Vec<T>> {
        self.check_len(rhs, self.n_dof())?;
        let mut out = vec![T::zero(); self.n_dof()];
        self.sweep_into(j, rhs, None, &mut out)?;
        Ok(out)
    }

    /// Same as [`sweep`](Self::sweep) with the problem's boundary inflow.
    pub fn sweep_with_inflow(&self, j: usize, rhs: &[T]) -> Result<Vec<T>> {
        self.check_len(rhs, self.n_dof())?;
        let mut out = vec![T::zero(); self.n_dof()];
        self.sweep_into(j, rhs, Some(&self.boundary), &mut out)?;
        Ok(out)
    }

    /// One transport sweep over all directions for an isotropic volume
    /// source `q`; returns the density `sum_j w_j f_j`.
    pub fn sweep_density(&self, q: &[T], with_inflow: bool) -> Result<Vec<T>> {
        self.check_len(q, self.n_dof())?;
        let n = self.n_dof();
        let mut rho = vec![T::zero(); n];
        let mut f = vec![T::zero(); n];
        let bnd = with_inflow.then_some(&self.boundary);
        for j in 0..self.n_dir() {
            self.sweep_into(j, q, bnd, &mut f)?;
            axpy(self.quad.weight(j), &f, &mut rho);
        }
        Ok(rho)
    }

    /// Like [`sweep_density`](Self::sweep_density) but also returns the
    /// full angular flux.
    pub fn sweep_angular(&self, q: &[T], with_inflow: bool) -> Result<(Vec<T>, Vec<T>)> {
        self.check_len(q, self.n_dof())?;
        let n = self.n_dof();
        let mut rho = vec![T::zero(); n];
        let mut f = vec![T::zero(); n * self.n_dir()];
        let bnd = with_inflow.then_some(&self.boundary);
        for j in 0..self.n_dir() {
            let fj = &mut f[j * n..(j + 1) * n];
            self.sweep_into(j, q, bnd, fj)?;
            axpy(self.quad.weight(j), fj, &mut rho);
        }
        Ok((rho, f))
    }

    /// `L rho = sum_j w_j (D_j + Sigma_t)^{-1} Sigma_s rho`; one sweep.
    pub fn apply_l(&self, rho: &[T]) -> Result<Vec<T>> {
        let q = self.apply_sigma_s(rho);
        self.sweep_density(&q, false)
    }

    /// `b = sum_j w_j (D_j + Sigma_t)^{-1} (G + g_j)`; one sweep.
    pub fn rhs_bar(&self) -> Result<Vec<T>> {
        self.sweep_density(&self.source, true)
    }

    /// Source iteration map `L rho + b`; one sweep.
    pub fn si_map(&self, rho: &[T]) -> Result<Vec<T>> {
        let mut q = self.apply_sigma_s(rho);
        axpy(T::one(), &self.source, &mut q);
        self.sweep_density(&q, true)
    }

    /// `|| (I - L) rho - b ||_inf`, costing one sweep.
    pub fn residual_inf(&self, rho: &[T]) -> Result<T> {
        let mut r = self.si_map(rho)?;
        axpy(-T::one(), rho, &mut r);
        Ok(norm_inf(&r))
    }

    fn check_len(&self, v: &[T], n: usize) -> Result<()> {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
        Ok(())
    }

    /// `out = D_j f_j` (streaming only).
    fn streaming_into(&self, j: usize, f: &[T], out: &mut [T]) {
        let nl = self.space.local_dofs();
        let (vx, vy) = self.velocity(j);
        let mut block = [T::zero(); 16];
        for c in 0..self.space.n_cells() {
            let faces = self.cell_streaming(c, vx, vy, &mut block);
            let mut cpl = [T::zero(); 4];
            for face in faces.iter().flatten() {
                self.add_inflow(face, f, None, &mut cpl);
            }
            for k in 0..nl {
                let mut s = -cpl[k];
                for l in 0..nl {
                    s += block[k * nl + l] * f[c * nl + l];
                }
                out[c * nl + k] = s;
            }
        }
    }

    /// `D_j f_j` for a single-direction vector.
    pub fn apply_streaming(&self, j: usize, f: &[T]) -> Result<Vec<T>> {
        self.check_len(f, self.n_dof())?;
        let mut out = vec![T::zero(); self.n_dof()];
        self.streaming_into(j, f, &mut out);
        Ok(out)
    }

    /// Density `sum_j w_j f_j` of an angular flux.
    pub fn density(&self, f: &[T]) -> Vec<T> {
        let n = self.n_dof();
        let mut rho = vec![T::zero(); n];
        for j in 0..self.n_dir() {
            axpy(self.quad.weight(j), &f[j * n..(j + 1) * n], &mut rho);
        }
        rho
    }

    /// Coupled operator `(A f)_j = (D_j + Sigma_t) f_j - Sigma_s rho(f)`.
    pub fn apply_a(&self, f: &[T]) -> Result<Vec<T>> {
        self.check_len(f, self.n_unknowns())?;
        let n = self.n_dof();
        let mut out = vec![T::zero(); f.len()];
        let srho = self.apply_sigma_s(&self.density(f));
        for j in 0..self.n_dir() {
            let fj = &f[j * n..(j + 1) * n];
            let oj = &mut out[j * n..(j + 1) * n];
            self.streaming_into(j, fj, oj);
            let t = self.apply_sigma_t(fj);
            for i in 0..n {
                oj[i] += t[i] - srho[i];
            }
        }
        Ok(out)
    }

    /// Boundary load of direction `j`: the right-hand side contribution of
    /// the inflow data `bnd`.
    fn boundary_vector(&self, j: usize, bnd: &BoundaryData<T>) -> Vec<T> {
        let nl = self.space.local_dofs();
        let (vx, vy) = self.velocity(j);
        let mut out = vec![T::zero(); self.n_dof()];
        let mut block = [T::zero(); 16];
        let zero = vec![T::zero(); self.n_dof()];
        for c in 0..self.space.n_cells() {
            let faces = self.cell_streaming(c, vx, vy, &mut block);
            let mut rhs = [T::zero(); 4];
            for face in faces.iter().flatten() {
                if matches!(face.upwind, Upwind::Boundary(..)) {
                    self.add_inflow(face, &zero, Some(bnd), &mut rhs);
                }
            }
            out[c * nl..(c + 1) * nl].copy_from_slice(&rhs[..nl]);
        }
        out
    }

    /// `g_j`, the inflow load for direction `j`.
    pub fn inflow_vector(&self, j: usize) -> Vec<T> {
        self.boundary_vector(j, &self.boundary)
    }

    /// Full right-hand side `b_j = G + g_j` of the coupled system.
    pub fn rhs_full(&self) -> Vec<T> {
        let n = self.n_dof();
        let mut b = vec![T::zero(); self.n_unknowns()];
        for j in 0..self.n_dir() {
            let g = self.inflow_vector(j);
            for i in 0..n {
                b[j * n + i] = self.source[i] + g[i];
            }
        }
        b
    }

    /// Number of operator components `A = sum_k psi_k A_k`; component 0 is
    /// streaming.
    pub fn n_affine(&self) -> usize {
        1 + self.affine.theta.len()
    }

    /// `psi_k(mu)` for every component.
    pub fn affine_coefficients(&self) -> Vec<T> {
        let mut v = vec![T::one()];
        v.extend_from_slice(&self.affine.theta);
        v
    }

    /// Applies the parameter-independent component `A_k`.
    pub fn apply_affine_component(&self, k: usize, f: &[T]) -> Result<Vec<T>> {
        self.check_len(f, self.n_unknowns())?;
        if k >= self.n_affine() {
            return Err(Error::DimensionMismatch { expected: self.n_affine(), got: k + 1 });
        }
        let n = self.n_dof();
        let mut out = vec![T::zero(); f.len()];
        if k == 0 {
            for j in 0..self.n_dir() {
                self.streaming_into(j, &f[j * n..(j + 1) * n], &mut out[j * n..(j + 1) * n]);
            }
            return Ok(out);
        }
        let tot = &self.affine.total[k - 1];
        let sca = &self.affine.scatter[k - 1];
        let srho = self.apply_blocks(sca, &self.density(f));
        for j in 0..self.n_dir() {
            let t = self.apply_blocks(tot, &f[j * n..(j + 1) * n]);
            for i in 0..n {
                out[j * n + i] = t[i] - srho[i];
            }
        }
        Ok(out)
    }

    pub fn n_inflow_terms(&self) -> usize {
        self.affine.inflow.len()
    }
    pub fn inflow_coefficients(&self) -> &[T] {
        &self.affine.inflow_theta
    }
    /// Inflow load of direction `j` for term `t` with unit coefficient.
    pub fn inflow_component_vector(&self, t: usize, j: usize) -> Vec<T> {
        self.boundary_vector(j, &self.affine.inflow[t])
    }

    /// Compares `A f` with `sum_k psi_k A_k f` on a probe vector and returns
    /// the relative mismatch, failing above `sqrt(eps) / 100`.
    pub fn verify_affine(&self, probe: &[T]) -> Result<T> {
        let full = self.apply_a(probe)?;
        let psi = self.affine_coefficients();
        let mut sum = vec![T::zero(); full.len()];
        for (k, &p) in psi.iter().enumerate() {
            axpy(p, &self.apply_affine_component(k, probe)?, &mut sum);
        }
        let scale = norm_inf(&full).max(T::min_positive_value());
        axpy(-T::one(), &full, &mut sum);
        let rel = norm_inf(&sum) / scale;
        if rel > T::epsilon().sqrt() * T::lit(0.01) {
            return Err(Error::AffineMismatch(rel.to_f64_lossy()));
        }
        Ok(rel)
    }

    /// Whether assembly used direct cross sections instead of the affine sum.
    pub fn uses_direct_cross_sections(&self) -> bool {
        self.direct
    }

    /// Sparse entries of `D` for a single velocity `(vx, vy)` (no cross
    /// section), as `(row, col, value)` over cell dofs.
    pub fn streaming_triplets(&self, vx: T, vy: T) -> Vec<(usize, usize, T)> {
        let nl = self.space.local_dofs();
        let vy = if self.geometry() == Geometry::Slab { T::zero() } else { vy };
        let mut out = Vec::new();
        let mut block = [T::zero(); 16];
        for c in 0..self.space.n_cells() {
            let faces = self.cell_streaming(c, snap(vx), snap(vy), &mut block);
            for k in 0..nl {
                for l in 0..nl {
                    let v = block[k * nl + l];
                    if v != T::zero() {
                        out.push((c * nl + k, c * nl + l, v));
                    }
                }
            }
            for face in faces.iter().flatten() {
                if let Upwind::Cell(n, t) = face.upwind {
                    let s = face.speed;
                    if nl == 2 {
                        for a in 0..2 {
                            for a2 in 0..2 {
                                out.push((c * 2 + a, n * 2 + a2, -s * face.t_self[a] * t[a2]));
                            }
                        }
                    } else {
                        for a in 0..2 {
                            for b in 0..2 {
                                for m in 0..2 {
                                    let (col, v) = if face.axis == 0 {
                                        (n * 4 + m + 2 * b, face.t_self[a] * t[m])
                                    } else {
                                        (n * 4 + a + 2 * m, face.t_self[b] * t[m])
                                    };
                                    out.push((c * 4 + a + 2 * b, col, -s * v));
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Dense copy of `A` (only for tiny instances).
    pub fn to_dense(&self) -> Result<DenseMatrix<T>> {
        let n = self.n_unknowns();
        let mut m = DenseMatrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for col in 0..n {
            e[col] = T::one();
            let a = self.apply_a(&e)?;
            for (row, v) in a.into_iter().enumerate() {
                if v != T::zero() {
                    m.set(row, col, v);
                }
            }
            e[col] = T::zero();
        }
        Ok(m)
    }

    /// Writes the nonzeros of `A` as `row col value` lines (0-based).
    pub fn write_triplets<W: Write>(&self, mut w: W) -> Result<()> {
        let m = self.to_dense()?;
        writeln!(w, "# {} {} rows={} cols={}", self.name, self.quad.label(), m.rows(), m.cols())?;
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let v = m.get(i, j);
                if v != T::zero() {
                    writeln!(w, "{} {} {:.17e}", i, j, v.to_f64_lossy())?;
                }
            }
        }
        Ok(())
    }
}

fn boundary_moments<T: Real>(
    mesh: &Mesh<T>,
    side: Side,
    g: impl Fn(T, T) -> T,
    npts: usize,
) -> BoundaryData<T> {
    let mut data = BoundaryData::zeros(mesh.nx(), mesh.ny());
    let x_lo = mesh.x_faces()[0];
    let x_hi = *mesh.x_faces().last().unwrap();
    if mesh.geometry() == Geometry::Slab {
        match side {
            Side::XMin => data.xmin[0] = [g(x_lo, T::zero()), T::zero()],
            Side::XMax => data.xmax[0] = [g(x_hi, T::zero()), T::zero()],
            _ => {}
        }
        return data;
    }
    let (s, w) = gauss_legendre_rule::<T>(npts);
    let half = T::lit(0.5);
    let face = |lo: T, h: T, eval: &dyn Fn(T) -> T| -> [T; 2] {
        let mut m = [T::zero(); 2];
        for (si, wi) in s.iter().zip(&w) {
            let b = basis_1d(*si, h);
            let v = eval(lo + half * h * (*si + T::one())) * half * h * *wi;
            m[0] += v * b[0];
            m[1] += v * b[1];
        }
        m
    };
    let y_lo = mesh.y_faces()[0];
    let y_hi = *mesh.y_faces().last().unwrap();
    match side {
        Side::XMin | Side::XMax => {
            let x = if side == Side::XMin { x_lo } else { x_hi };
            let target = data.side_mut(side);
            for iy in 0..mesh.ny() {
                target[iy] = face(mesh.y_faces()[iy], mesh.hy(iy), &|y| g(x, y));
            }
        }
        Side::YMin | Side::YMax => {
            let y = if side == Side::YMin { y_lo } else { y_hi };
            let target = data.side_mut(side);
            for ix in 0..mesh.nx() {
                target[ix] = face(mesh.x_faces()[ix], mesh.hx(ix), &|x| g(x, y));
            }
        }
    }
    data
}
