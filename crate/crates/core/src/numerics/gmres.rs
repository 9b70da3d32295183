//! Restarted, right-preconditioned GMRES on matrix-free operators.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub solution: DVector<f64>,
    /// Final residual norm relative to `|b|`.
    pub relative_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `A x = b` with `A` applied by `apply` and `M⁻¹` by `precond`,
/// starting from zero. Stops when `|b − A x| ≤ tol·|b|`.
pub fn gmres<A, P>(
    mut apply: A,
    mut precond: P,
    b: &DVector<f64>,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<GmresOutcome>
where
    A: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
    P: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = b.len();
    let bnorm = b.norm();
    let mut x = DVector::zeros(n);
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            solution: x,
            relative_residual: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let mut iterations = 0;
    let mut rel;
    while iterations < max_iter {
        let r = b - apply(&x)?;
        let beta = r.norm();
        rel = beta / bnorm;
        if rel <= tol {
            return Ok(GmresOutcome {
                solution: x,
                relative_residual: rel,
                iterations,
                converged: true,
            });
        }
        let m = restart.min(max_iter - iterations);
        let mut v: Vec<DVector<f64>> = vec![r / beta];
        let mut z: Vec<DVector<f64>> = Vec::with_capacity(m);
        let mut h = DMatrix::<f64>::zeros(m + 1, m);
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = DVector::<f64>::zeros(m + 1);
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let zk = precond(&v[k])?;
            let mut w = apply(&zk)?;
            z.push(zk);
            for (i, vi) in v.iter().enumerate() {
                let hik = w.dot(vi);
                h[(i, k)] = hik;
                w.axpy(-hik, vi, 1.0);
            }
            // second pass of Gram-Schmidt for stability
            for (i, vi) in v.iter().enumerate() {
                let c = w.dot(vi);
                h[(i, k)] += c;
                w.axpy(-c, vi, 1.0);
            }
            let wn = w.norm();
            h[(k + 1, k)] = wn;
            for i in 0..k {
                let t = cs[i] * h[(i, k)] + sn[i] * h[(i + 1, k)];
                h[(i + 1, k)] = -sn[i] * h[(i, k)] + cs[i] * h[(i + 1, k)];
                h[(i, k)] = t;
            }
            let denom = h[(k, k)].hypot(h[(k + 1, k)]);
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[(k, k)] / denom;
                sn[k] = h[(k + 1, k)] / denom;
            }
            h[(k, k)] = denom;
            h[(k + 1, k)] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k_used = k + 1;
            rel = g[k + 1].abs() / bnorm;
            if rel <= tol || wn == 0.0 {
                break;
            }
            v.push(w / wn);
        }
        let mut y = DVector::<f64>::zeros(k_used);
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[(i, j)] * y[j];
            }
            y[i] = if h[(i, i)] != 0.0 { s / h[(i, i)] } else { 0.0 };
        }
        for (j, zj) in z.iter().take(k_used).enumerate() {
            x.axpy(y[j], zj, 1.0);
        }
    }
    let r = b - apply(&x)?;
    rel = r.norm() / bnorm;
    Ok(GmresOutcome {
        solution: x,
        relative_residual: rel,
        iterations,
        converged: rel <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 40;
        let a = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0
            } else if j == i + 1 {
                -1.5
            } else if i == j + 1 {
                -0.5
            } else {
                0.0
            }
        });
        let b = DVector::from_fn(n, |i, _| (i as f64).sin());
        let out = gmres(|x| Ok(&a * x), |x| Ok(x.clone()), &b, 1e-12, 10, 400).unwrap();
        assert!(out.converged);
        assert!((&a * &out.solution - &b).norm() < 1e-10 * b.norm());
    }

    #[test]
    fn exact_preconditioner_converges_in_one_step() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 3.0, 1.0, 1.0, 0.0, 4.0]);
        let inv = a.clone().try_inverse().unwrap();
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let out = gmres(|x| Ok(&a * x), |x| Ok(&inv * x), &b, 1e-13, 5, 5).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 2);
    }
}
