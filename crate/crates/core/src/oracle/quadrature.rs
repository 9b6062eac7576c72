//! Adaptive Gauss-Legendre quadrature.

use std::sync::OnceLock;

use crate::error::{CmtError, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
const ORDER: usize = 20;
const MAX_DEPTH: u32 = 60;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

fn fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (x, w) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(w)
        .map(|(xi, wi)| wi * f(mid + half * xi))
        .sum::<f64>()
        * half
}

/// Integrates `f` over `[a, b]`, bisecting until the estimated absolute
/// error is below `tolerance`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tolerance: f64) -> Result<f64> {
    let whole = fixed(&f, a, b);
    let mut worst = 0.0f64;
    let value = refine(&f, a, b, whole, tolerance, 0, &mut worst);
    if !value.is_finite() {
        return Err(CmtError::invalid(format!(
            "integrand not finite on [{a}, {b}]"
        )));
    }
    if worst > tolerance {
        return Err(CmtError::Accuracy {
            estimate: value,
            error: worst,
            tolerance,
        });
    }
    Ok(value)
}

fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tolerance: f64,
    depth: u32,
    worst: &mut f64,
) -> f64 {
    let mid = 0.5 * (a + b);
    let left = fixed(f, a, mid);
    let right = fixed(f, mid, b);
    let error = (left + right - whole).abs();
    if error <= tolerance || error <= 64.0 * f64::EPSILON * (left.abs() + right.abs()) {
        return left + right;
    }
    if depth >= MAX_DEPTH {
        *worst = worst.max(error);
        return left + right;
    }
    refine(f, a, mid, left, 0.5 * tolerance, depth + 1, worst)
        + refine(f, mid, b, right, 0.5 * tolerance, depth + 1, worst)
}

/// Composite Gauss-Legendre rule with `panels` equal panels of `order` points.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + h * p as f64;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(lo + 0.5 * h * (xi + 1.0));
                weights.push(0.5 * h * wi);
            }
        }
        CompositeRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(20);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 38 is within reach of a 20-point rule
        let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((got - 2.0 / 39.0).abs() < 1e-14);
    }

    #[test]
    fn constant_and_cosine() {
        assert!((integrate(|_| 1.0, 0.0, 1.0, DEFAULT_TOLERANCE).unwrap() - 1.0).abs() < 1e-15);
        let v = integrate(|y| (PI * y).cos(), -0.5, 0.5, DEFAULT_TOLERANCE).unwrap();
        assert!((v - 2.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn kinked_integrand_needs_bisection() {
        let v = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-12);
    }

    #[test]
    fn unreachable_tolerance_reports_best_estimate() {
        // x^-0.9 is integrable but the tail near 0 shrinks only like h^0.1
        let err = integrate(|x: f64| x.powf(-0.9), 0.0, 1.0, 1e-12).unwrap_err();
        match err {
            CmtError::Accuracy {
                estimate,
                error,
                tolerance,
            } => {
                assert!(error > tolerance);
                assert!((estimate - 10.0).abs() < 0.5, "estimate {estimate}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn step_is_resolved_by_bisection() {
        let v = integrate(
            |x: f64| if x < 1.0 / 3.0 { 0.0 } else { 1.0 },
            0.0,
            1.0,
            1e-12,
        )
        .unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn composite_rule_matches_adaptive() {
        let rule = CompositeRule::new(-0.5, 0.5, 4, 16);
        let values: Vec<f64> = rule.nodes.iter().map(|y| (3.0 * y).exp()).collect();
        let exact = ((1.5f64).exp() - (-1.5f64).exp()) / 3.0;
        assert!((rule.apply(&values) - exact).abs() < 1e-14);
    }
}
