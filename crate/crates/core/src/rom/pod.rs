//! Proper orthogonal decomposition of snapshot columns.
//!
//! Snapshots are orthogonalized as they arrive (block classical
//! Gram–Schmidt with reorthogonalization), so only the orthonormal factor
//! `Q` and the small triangular factor `R` are kept. The SVD of `R` gives
//! the singular values of the snapshot matrix and `U = Q U_R`.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par};

use crate::error::{Error, Result};
use crate::scalar::{dot, norm2, Real};

/// Smallest `r` with `sum_{k<=r} s_k / sum_k s_k >= 1 - eps`.
pub fn truncation_rank<T: Real>(singular_values: &[T], eps: T) -> usize {
    let total: T = singular_values.iter().copied().sum();
    if !(total > T::zero()) {
        return 0;
    }
    let target = T::one() - eps;
    let mut acc = T::zero();
    for (i, &s) in singular_values.iter().enumerate() {
        acc += s;
        if acc / total >= target {
            return i + 1;
        }
    }
    singular_values.len()
}

#[derive(Debug, Clone)]
pub struct PodBuilder<T> {
    n_rows: usize,
    q: Vec<T>,
    k: usize,
    r_cols: Vec<Vec<T>>,
    drop_tol: T,
}

impl<T: Real> PodBuilder<T> {
    pub fn new(n_rows: usize) -> Self {
        Self { n_rows, q: Vec::new(), k: 0, r_cols: Vec::new(), drop_tol: T::epsilon() * T::lit(64.0) }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }
    pub fn n_snapshots(&self) -> usize {
        self.r_cols.len()
    }
    /// Number of orthonormal directions accepted so far.
    pub fn numerical_rank(&self) -> usize {
        self.k
    }

    pub fn push(&mut self, column: &[T]) -> Result<()> {
        self.push_block(column.to_vec(), 1)
    }

    /// Adds `b` snapshot columns stored column-major in `block`.
    pub fn push_block(&mut self, mut block: Vec<T>, b: usize) -> Result<()> {
        let n = self.n_rows;
        if block.len() != n * b {
            return Err(Error::DimensionMismatch { expected: n * b, got: block.len() });
        }
        if block.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite snapshot entry".into()));
        }
        let k0 = self.k;
        let norms0: Vec<T> = (0..b).map(|i| norm2(&block[i * n..(i + 1) * n])).collect();
        let mut coef = Mat::<T>::zeros(k0, b);
        if k0 > 0 {
            let mut prev = norms0.clone();
            for pass in 0..4 {
                let q = MatRef::from_column_major_slice(&self.q[..n * k0], n, k0);
                let mut h = Mat::<T>::zeros(k0, b);
                {
                    let v = MatRef::from_column_major_slice(&block, n, b);
                    matmul(h.as_mut(), Accum::Replace, q.transpose(), v, T::one(), Par::Seq);
                }
                {
                    let v = MatMut::from_column_major_slice_mut(&mut block, n, b);
                    matmul(v, Accum::Add, q, h.as_ref(), -T::one(), Par::Seq);
                }
                for i in 0..b {
                    for r in 0..k0 {
                        coef[(r, i)] += h[(r, i)];
                    }
                }
                let now: Vec<T> = (0..b).map(|i| norm2(&block[i * n..(i + 1) * n])).collect();
                let settled = now
                    .iter()
                    .zip(&prev)
                    .all(|(a, p)| *a >= T::lit(0.5) * *p || *a <= self.drop_tol * *p);
                prev = now;
                if pass >= 1 && settled {
                    break;
                }
            }
        }
        for i in 0..b {
            let mut v = block[i * n..(i + 1) * n].to_vec();
            let mut rcol: Vec<T> = (0..k0).map(|r| coef[(r, i)]).collect();
            rcol.resize(self.k, T::zero());
            // orthogonalize against columns accepted from this block, and
            // against everything again if that cancels heavily
            let mut before = norm2(&v);
            let mut lo = k0;
            for _ in 0..4 {
                for r in lo..self.k {
                    let qr = &self.q[r * n..(r + 1) * n];
                    let h = dot(qr, &v);
                    for (vi, qi) in v.iter_mut().zip(qr) {
                        *vi -= h * *qi;
                    }
                    rcol[r] += h;
                }
                let after = norm2(&v);
                if after >= T::lit(0.5) * before || after <= self.drop_tol * norms0[i] {
                    break;
                }
                before = after;
                lo = 0;
            }
            let nrm = norm2(&v);
            if nrm > self.drop_tol * norms0[i] && nrm > T::zero() {
                let inv = nrm.recip();
                self.q.extend(v.iter().map(|x| *x * inv));
                self.k += 1;
                rcol.push(nrm);
            }
            self.r_cols.push(rcol);
        }
        Ok(())
    }

    /// Full decomposition with all nonzero modes.
    pub fn finish(mut self) -> Result<PodDecomposition<T>> {
        let n = self.n_rows;
        let k = self.k;
        let m = self.r_cols.len();
        if k == 0 || m == 0 {
            return Err(Error::EmptySnapshots);
        }
        let mut r = Mat::<T>::zeros(k, m);
        for (j, col) in self.r_cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                r[(i, j)] = *v;
            }
        }
        let svd = r.thin_svd().map_err(|e| Error::Format(format!("svd failed: {e:?}")))?;
        let p = k.min(m);
        let s_diag = svd.S();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| s_diag[b].partial_cmp(&s_diag[a]).unwrap_or(std::cmp::Ordering::Equal));
        let singular_values: Vec<T> = order.iter().map(|&i| s_diag[i]).collect();
        let ur = Mat::<T>::from_fn(k, p, |i, j| svd.U()[(i, order[j])]);
        // U = Q U_R in place, one row chunk at a time
        let chunk = 512;
        let mut tmp = Mat::<T>::zeros(chunk, k);
        let mut out = Mat::<T>::zeros(chunk, p);
        {
            let mut q = MatMut::from_column_major_slice_mut(&mut self.q[..n * k], n, k);
            let mut r0 = 0;
            while r0 < n {
                let nr = chunk.min(n - r0);
                tmp.as_mut().subrows_mut(0, nr).copy_from(q.as_ref().subrows(r0, nr));
                matmul(
                    out.as_mut().subrows_mut(0, nr),
                    Accum::Replace,
                    tmp.as_ref().subrows(0, nr),
                    ur.as_ref(),
                    T::one(),
                    Par::Seq,
                );
                q.as_mut().subrows_mut(r0, nr).subcols_mut(0, p).copy_from(out.as_ref().subrows(0, nr));
                r0 += nr;
            }
        }
        self.q.truncate(n * p);
        self.q.shrink_to_fit();
        Ok(PodDecomposition { n_rows: n, n_snapshots: m, modes: self.q, singular_values })
    }
}

/// Left singular vectors (column-major) and singular values, descending.
#[derive(Debug, Clone)]
pub struct PodDecomposition<T> {
    n_rows: usize,
    n_snapshots: usize,
    modes: Vec<T>,
    singular_values: Vec<T>,
}

impl<T: Real> PodDecomposition<T> {
    pub fn singular_values(&self) -> &[T] {
        &self.singular_values
    }
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }
    pub fn n_snapshots(&self) -> usize {
        self.n_snapshots
    }
    pub fn n_modes(&self) -> usize {
        self.singular_values.len()
    }
    pub fn rank_for(&self, eps: T) -> usize {
        truncation_rank(&self.singular_values, eps)
    }
    pub fn mode(&self, i: usize) -> &[T] {
        &self.modes[i * self.n_rows..(i + 1) * self.n_rows]
    }

    /// Copies the leading modes selected by `eps`.
    pub fn truncate(&self, eps: T) -> PodBasis<T> {
        let r = self.rank_for(eps);
        self.basis_with(r, eps, self.modes[..r * self.n_rows].to_vec())
    }

    /// Like [`truncate`](Self::truncate) without copying.
    pub fn into_truncated(mut self, eps: T) -> PodBasis<T> {
        let r = self.rank_for(eps);
        let mut modes = std::mem::take(&mut self.modes);
        modes.truncate(r * self.n_rows);
        modes.shrink_to_fit();
        self.basis_with(r, eps, modes)
    }

    fn basis_with(&self, r: usize, eps: T, basis: Vec<T>) -> PodBasis<T> {
        let total: T = self.singular_values.iter().copied().sum();
        let kept: T = self.singular_values[..r].iter().copied().sum();
        PodBasis {
            n_rows: self.n_rows,
            rank: r,
            basis,
            singular_values: self.singular_values.clone(),
            eps_pod: eps,
            discarded_fraction: if total > T::zero() { T::one() - kept / total } else { T::zero() },
        }
    }
}

/// Truncated orthonormal basis `U_r`, column-major `n_rows x rank`.
#[derive(Debug, Clone)]
pub struct PodBasis<T> {
    pub n_rows: usize,
    pub rank: usize,
    pub basis: Vec<T>,
    /// All singular values of the snapshot matrix.
    pub singular_values: Vec<T>,
    pub eps_pod: T,
    pub discarded_fraction: T,
}

impl<T: Real> PodBasis<T> {
    pub fn column(&self, i: usize) -> &[T] {
        &self.basis[i * self.n_rows..(i + 1) * self.n_rows]
    }
    pub fn as_mat(&self) -> MatRef<'_, T> {
        MatRef::from_column_major_slice(&self.basis, self.n_rows, self.rank)
    }
    /// `max |U^T U - I|`
    pub fn orthonormality_error(&self) -> T {
        let u = self.as_mat();
        let mut g = Mat::<T>::zeros(self.rank, self.rank);
        matmul(g.as_mut(), Accum::Replace, u.transpose(), u, T::one(), Par::Seq);
        let mut e = T::zero();
        for i in 0..self.rank {
            for j in 0..self.rank {
                let t = if i == j { T::one() } else { T::zero() };
                e = e.max((g[(i, j)] - t).abs());
            }
        }
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_rule() {
        let s = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(truncation_rank(&s, 0.0), 4);
        assert_eq!(truncation_rank(&s, 0.1), 3);
        assert_eq!(truncation_rank(&s, 0.3), 2);
        assert_eq!(truncation_rank(&s, 0.31), 2);
        assert_eq!(truncation_rank(&s, 0.6), 1);
        assert_eq!(truncation_rank::<f64>(&[0.0, 0.0], 0.1), 0);
    }

    #[test]
    fn exact_low_rank() {
        let n = 50;
        let a: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.05).cos()).collect();
        let mut p = PodBuilder::new(n);
        for j in 0..7 {
            let c: Vec<f64> = (0..n).map(|i| a[i] * j as f64 + b[i] * (1.0 - 0.3 * j as f64)).collect();
            p.push(&c).unwrap();
        }
        assert_eq!(p.numerical_rank(), 2);
        let d = p.finish().unwrap();
        assert_eq!(d.n_modes(), 2);
        let basis = d.truncate(1e-14);
        assert_eq!(basis.rank, 2);
        assert!(basis.orthonormality_error() < 1e-13);
    }

    #[test]
    fn empty_is_error() {
        let mut p = PodBuilder::<f64>::new(3);
        p.push(&[0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(p.finish(), Err(Error::EmptySnapshots)));
    }
}
