//! Channel-space evaluation of a separable continuum resonator with the
//! longitudinal mode sum done in closed form.
//!
//! When the closed resonator is a product of a Neumann segment of length `L`
//! and a transverse basis, Woodbury gives
//! `W^T (H_eff - E)^{-1} W = -(1 - G F)^{-1} G` with `G = W^T (E - H_B)^{-1} W`
//! and `F` the diagonal channel factors. The sum over longitudinal modes in
//! `G` is the 1D Neumann Green's function between the two end faces, so the
//! `1/n` tail of a truncated longitudinal basis disappears and only the
//! transverse truncation remains.

use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;

use crate::error::{CmtError, Result};
use crate::heff::{ChannelId, Energy, LeadId, SMatrix};
use crate::linalg::{condition_estimate, CONDITION_LIMIT};
use crate::rect::EVANESCENT_CUTOFF;

/// `sum_n psi_n(s) psi_n(s') / (q2 - (pi n / L)^2)` over the cosine modes of a
/// segment of length `len`, with `s = s'` on one end face (`same`) or on
/// opposite faces (`cross`).
pub(crate) fn neumann_green_ends(q2: f64, len: f64) -> (f64, f64) {
    if q2 > 0.0 {
        let q = q2.sqrt();
        let s = (q * len).sin();
        ((q * len).cos() / (q * s), 1.0 / (q * s))
    } else if q2 < 0.0 {
        let k = (-q2).sqrt();
        let x = k * len;
        let cross = if x > 700.0 {
            0.0
        } else {
            -1.0 / (k * x.sinh())
        };
        (-1.0 / (k * x.tanh()), cross)
    } else {
        (f64::INFINITY, f64::INFINITY)
    }
}

/// S-matrix over the open channels of two identical leads.
///
/// `transverse[m]` is the transverse eigenvalue of resonator mode `m`,
/// `overlap(p, m)` the interface overlap with channel `p`, and `k[p]` the
/// continuum channel wavenumber (real when open, `i kappa` when evanescent).
pub(crate) fn longitudinal_limit_smatrix(
    energy: Energy,
    length: f64,
    transverse: &[f64],
    overlap: impl Fn(usize, usize) -> f64,
    k: &[Complex64],
) -> Result<SMatrix> {
    let p = k.len();
    let nc = 2 * p;
    let e = energy.value();
    let mut g = Mat::<f64>::zeros(nc, nc);
    for (m, &eps) in transverse.iter().enumerate() {
        let (same, cross) = neumann_green_ends(e - eps, length);
        if !(same.is_finite() && cross.is_finite()) {
            return Err(CmtError::NumericalDegeneracy {
                energy: e,
                condition: f64::INFINITY,
            });
        }
        for a in 0..p {
            let va = overlap(a, m);
            if va == 0.0 {
                continue;
            }
            for b in 0..p {
                let vv = va * overlap(b, m);
                g[(a, b)] += vv * same;
                g[(a + p, b + p)] += vv * same;
                g[(a, b + p)] += vv * cross;
                g[(a + p, b)] += vv * cross;
            }
        }
    }

    let mut factor = vec![Complex64::new(0.0, 0.0); nc];
    let mut open = Vec::new();
    for c in 0..nc {
        let kc = k[c % p];
        if kc.im == 0.0 {
            factor[c] = Complex64::new(0.0, -kc.re);
            open.push((c, (4.0 * PI * kc.re).sqrt()));
        } else if kc.im <= EVANESCENT_CUTOFF {
            factor[c] = Complex64::new(kc.im, 0.0);
        }
    }
    if open.is_empty() {
        return Err(CmtError::NoOpenChannel { energy: e });
    }

    let mut a = Mat::<Complex64>::from_fn(nc, nc, |i, j| -g[(i, j)] * factor[j]);
    for i in 0..nc {
        a[(i, i)] += 1.0;
    }
    let rhs = Mat::<Complex64>::from_fn(nc, open.len(), |i, j| {
        Complex64::new(g[(i, open[j].0)], 0.0)
    });
    let lu = a.partial_piv_lu();
    let condition = condition_estimate(a.as_ref(), &lu);
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(CmtError::NumericalDegeneracy {
            energy: e,
            condition,
        });
    }
    let r = lu.solve(&rhs);
    let matrix = Mat::<Complex64>::from_fn(open.len(), open.len(), |i, j| {
        let (row, g_out) = open[i];
        let drive = Complex64::new(0.0, -open[j].1 / (2.0 * PI));
        let delta = if i == j { 1.0 } else { 0.0 };
        -g_out * r[(row, j)] * drive - delta
    });
    let id = |c: usize| ChannelId::new(if c < p { LeadId::LEFT } else { LeadId::RIGHT }, c % p);
    Ok(SMatrix {
        channels: open.iter().map(|&(c, _)| id(c)).collect(),
        matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rect::cosine_mode;

    #[test]
    fn green_function_matches_mode_sum() {
        let len = 1.3;
        for q2 in [7.0, -4.0, 30.0] {
            let (same, cross) = neumann_green_ends(q2, len);
            let (mut s_sum, mut c_sum) = (0.0, 0.0);
            for n in 0..200_000 {
                let term = cosine_mode(len, n, 0.0) / (q2 - (PI * n as f64 / len).powi(2));
                s_sum += term * cosine_mode(len, n, 0.0);
                c_sum += term * cosine_mode(len, n, len);
            }
            assert!((same - s_sum).abs() < 1e-5, "{q2}: {same} vs {s_sum}");
            assert!((cross - c_sum).abs() < 1e-9, "{q2}: {cross} vs {c_sum}");
        }
    }
}
