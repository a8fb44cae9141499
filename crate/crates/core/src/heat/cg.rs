//! Jacobi-preconditioned conjugate gradients for symmetric positive definite systems.

use crate::error::{Error, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` starting from `x`, stopping at `|r| <= rel_tol |b|`. Returns the iteration count.
pub fn solve(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let target = rel_tol * b_norm;
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut r_norm = dot(&r, &r).sqrt();
    for it in 0..max_iter {
        if r_norm <= target {
            return Ok(it);
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver { iterations: it, residual: r_norm / b_norm });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        r_norm = dot(&r, &r).sqrt();
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if r_norm <= target {
        return Ok(max_iter);
    }
    Err(Error::Solver { iterations: max_iter, residual: r_norm / b_norm })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_system() {
        let n = 50;
        let apply = |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let left = if i > 0 { x[i - 1] } else { 0.0 };
                let right = if i + 1 < n { x[i + 1] } else { 0.0 };
                out[i] = (2.0 + i as f64) * x[i] - left - right;
            }
        };
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + i as f64).collect();
        let want: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        apply(&want, &mut b);
        let mut x = vec![0.0; n];
        solve(apply, &diag, &b, &mut x, 1e-12, 500).unwrap();
        for i in 0..n {
            assert!((x[i] - want[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let apply = |x: &[f64], out: &mut [f64]| {
            out[0] = x[0] + 0.9 * x[1];
            out[1] = 0.9 * x[0] + x[1];
        };
        let mut x = vec![0.0; 2];
        let err = solve(apply, &[1.0, 1.0], &[1.0, 0.0], &mut x, 1e-14, 1).unwrap_err();
        assert!(matches!(err, Error::Solver { iterations: 1, .. }));
    }
}
