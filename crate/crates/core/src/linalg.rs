//! Dense helpers shared by the solvers.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Mat, MatRef};
use num_complex::Complex64;

/// Solves with a larger 1-norm condition estimate are reported as degenerate.
pub const CONDITION_LIMIT: f64 = 1e14;

pub fn norm_one(a: MatRef<'_, Complex64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Hager-Higham estimate of `||A||_1 ||A^{-1}||_1` from an existing LU.
pub fn condition_estimate(a: MatRef<'_, Complex64>, lu: &PartialPivLu<Complex64>) -> f64 {
    let n = a.nrows();
    let anorm = norm_one(a);
    if anorm == 0.0 {
        return f64::INFINITY;
    }
    let column = |v: &[Complex64]| Mat::<Complex64>::from_fn(n, 1, |i, _| v[i]);
    let to_vec = |m: Mat<Complex64>| (0..n).map(|i| m[(i, 0)]).collect::<Vec<_>>();

    let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
    let mut estimate = 0.0f64;
    let mut last_index = usize::MAX;
    for iter in 0..5 {
        let y = to_vec(lu.solve(column(&x)));
        let ynorm: f64 = y.iter().map(|v| v.norm()).sum();
        if !ynorm.is_finite() {
            return f64::INFINITY;
        }
        if iter > 0 && ynorm <= estimate {
            break;
        }
        estimate = ynorm;
        let sign: Vec<Complex64> = y
            .iter()
            .map(|v| {
                if v.norm() > 0.0 {
                    v / v.norm()
                } else {
                    Complex64::new(1.0, 0.0)
                }
            })
            .collect();
        let z = to_vec(lu.solve_adjoint(column(&sign)));
        let (j, zmax) =
            z.iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold(
                    (0, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
        if iter > 0 && (zmax <= ztx || j == last_index) {
            break;
        }
        last_index = j;
        x = vec![Complex64::new(0.0, 0.0); n];
        x[j] = Complex64::new(1.0, 0.0);
    }

    // alternating probe guards against the estimator's known blind spots
    let denom = (n.max(2) - 1) as f64;
    let probe: Vec<Complex64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(s * (1.0 + i as f64 / denom), 0.0)
        })
        .collect();
    let y = to_vec(lu.solve(column(&probe)));
    let alt = 2.0 * y.iter().map(|v| v.norm()).sum::<f64>() / (3.0 * n as f64);
    anorm * estimate.max(alt)
}
