use crate::error::Result;
use crate::scalar::{axpy, dot, norm2, Real};

#[derive(Debug, Clone)]
pub struct GmresOutcome<T> {
    pub x: Vec<T>,
    pub converged: bool,
    /// Arnoldi steps over all cycles.
    pub iterations: usize,
    /// Operator applications, including residual evaluations.
    pub applications: usize,
    /// Residual estimate `|g_{i+1}| / ||b||` after each Arnoldi step.
    pub history: Vec<T>,
    /// True relative residual of the returned iterate.
    pub relative_residual: T,
}

/// Restarted GMRES with modified Gram–Schmidt Arnoldi and Givens rotations.
///
/// Convergence is declared on the true residual `||b - A x|| / ||b||`,
/// recomputed at the end of every cycle; the recomputed residual seeds the
/// next cycle.
pub fn restarted_gmres<T: Real>(
    mut apply: impl FnMut(&[T]) -> Result<Vec<T>>,
    b: &[T],
    x0: Option<&[T]>,
    restart: usize,
    tol: T,
    max_iterations: usize,
) -> Result<GmresOutcome<T>> {
    let n = b.len();
    let restart = restart.max(1);
    let bnorm = norm2(b);
    if bnorm == T::zero() {
        return Ok(GmresOutcome {
            x: vec![T::zero(); n],
            converged: true,
            iterations: 0,
            applications: 0,
            history: Vec::new(),
            relative_residual: T::zero(),
        });
    }
    let mut x = x0.map_or_else(|| vec![T::zero(); n], <[T]>::to_vec);
    let residual = |ax: Vec<T>| -> Vec<T> { b.iter().zip(&ax).map(|(bi, ai)| *bi - *ai).collect() };
    let mut applications = 1;
    let mut r = residual(apply(&x)?);
    let mut iterations = 0;
    let mut history = Vec::new();
    loop {
        let beta = norm2(&r);
        let rel = beta / bnorm;
        if rel <= tol || iterations >= max_iterations || !rel.is_finite() {
            return Ok(GmresOutcome {
                x,
                converged: rel <= tol,
                iterations,
                applications,
                history,
                relative_residual: rel,
            });
        }
        let mut v: Vec<Vec<T>> = Vec::with_capacity(restart + 1);
        v.push(r.iter().map(|ri| *ri / beta).collect());
        let mut h = vec![vec![T::zero(); restart]; restart + 1];
        let mut cs = vec![T::zero(); restart];
        let mut sn = vec![T::zero(); restart];
        let mut g = vec![T::zero(); restart + 1];
        g[0] = beta;
        let mut k = 0;
        for i in 0..restart {
            if iterations >= max_iterations {
                break;
            }
            let mut w = apply(&v[i])?;
            applications += 1;
            iterations += 1;
            for (j, vj) in v.iter().enumerate() {
                let hij = dot(&w, vj);
                h[j][i] = hij;
                axpy(-hij, vj, &mut w);
            }
            let hn = norm2(&w);
            h[i + 1][i] = hn;
            for j in 0..i {
                let t = cs[j] * h[j][i] + sn[j] * h[j + 1][i];
                h[j + 1][i] = -sn[j] * h[j][i] + cs[j] * h[j + 1][i];
                h[j][i] = t;
            }
            let denom = (h[i][i] * h[i][i] + hn * hn).sqrt();
            if denom == T::zero() {
                cs[i] = T::one();
                sn[i] = T::zero();
            } else {
                cs[i] = h[i][i] / denom;
                sn[i] = hn / denom;
            }
            h[i][i] = denom;
            h[i + 1][i] = T::zero();
            g[i + 1] = -sn[i] * g[i];
            g[i] = cs[i] * g[i];
            k = i + 1;
            let est = g[i + 1].abs() / bnorm;
            history.push(est);
            if est <= tol || hn <= T::epsilon() * beta {
                break;
            }
            v.push(w.iter().map(|wi| *wi / hn).collect());
        }
        let mut y = vec![T::zero(); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &v[j], &mut x);
        }
        applications += 1;
        r = residual(apply(&x)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 40;
        let a = DenseMatrix::from_fn(n, n, |i, j| {
            if i == j {
                3.0
            } else if j == i + 1 {
                -1.2
            } else if i == j + 1 {
                -0.7
            } else {
                0.01 / (1.0 + (i as f64 - j as f64).abs())
            }
        });
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.matvec(&xs);
        let out = restarted_gmres(|v| Ok(a.matvec(v)), &b, None, 10, 1e-12, 500).unwrap();
        assert!(out.converged);
        assert!(out.relative_residual <= 1e-12);
        for i in 0..n {
            assert!((out.x[i] - xs[i]).abs() < 1e-10);
        }
        // one initial residual, one per step, one per cycle end
        let cycles = (out.iterations + 9) / 10;
        assert_eq!(out.applications, 1 + out.iterations + cycles);
    }

    #[test]
    fn exact_initial_guess_costs_one_application() {
        let a = DenseMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 0.5 });
        let x = [1.0, 2.0, 3.0];
        let b = a.matvec(&x);
        let out = restarted_gmres(|v| Ok(a.matvec(v)), &b, Some(&x), 5, 1e-12, 50).unwrap();
        assert!(out.converged);
        assert_eq!(out.applications, 1);
        assert_eq!(out.iterations, 0);
    }
}
