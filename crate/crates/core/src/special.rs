//! Bessel functions of the first kind, orders 0 and 1, and the zeros of `J_1`.
//!
//! Small arguments use the power series, moderate ones Miller's backward
//! recurrence normalized by `J_0 + 2 sum J_2k = 1`, and large ones the
//! Hankel asymptotic expansion. Absolute accuracy is a few ulp of 1 across
//! the whole range.

use std::f64::consts::{FRAC_PI_4, PI};

const SERIES_LIMIT: f64 = 2.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SERIES_LIMIT {
        series(0, ax)
    } else if ax <= ASYMPTOTIC_LIMIT {
        miller(ax).0
    } else {
        hankel(0, ax)
    }
}

pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SERIES_LIMIT {
        series(1, ax)
    } else if ax <= ASYMPTOTIC_LIMIT {
        miller(ax).1
    } else {
        hankel(1, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// `J_order` for order 0 or 1.
pub fn bessel_j(order: u32, x: f64) -> f64 {
    match order {
        0 => bessel_j0(x),
        1 => bessel_j1(x),
        _ => panic!("only orders 0 and 1 are supported, got {order}"),
    }
}

fn series(order: u32, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    for k in 1..60 {
        let k = k as f64;
        term *= q / (k * (k + order as f64));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `(J_0(x), J_1(x))` by backward recurrence.
fn miller(x: f64) -> (f64, f64) {
    let start = 2 * ((x + 15.0 + (40.0 * x).sqrt()) as usize / 2 + 10);
    let (mut above, mut current) = (0.0f64, 1e-300f64);
    let mut even_sum = 0.0;
    let (mut j0, mut j1) = (0.0, 0.0);
    for n in (1..=start).rev() {
        let below = 2.0 * n as f64 / x * current - above;
        above = current;
        current = below;
        if current.abs() > 1e250 {
            above *= 1e-250;
            current *= 1e-250;
            even_sum *= 1e-250;
            j1 *= 1e-250;
        }
        let m = n - 1;
        if m == 1 {
            j1 = current;
        }
        if m == 0 {
            j0 = current;
        } else if m % 2 == 0 {
            even_sum += current;
        }
    }
    let norm = j0 + 2.0 * even_sum;
    (j0 / norm, j1 / norm)
}

fn hankel(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let eight_x = 8.0 * x;
    let (mut p, mut q) = (1.0, 0.0);
    let mut term = 1.0;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * eight_x);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        // a_k / x^k alternates between Q (odd k) and P (even k) with signs (-1)^(k/2)
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let phase = x - order as f64 * 0.5 * PI - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * phase.cos() - q * phase.sin())
}

/// Ascending roots of `J_1`, starting with the trivial root 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselRootTable {
    pub mu: Vec<f64>,
}

impl BesselRootTable {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.mu[i]
    }
}

/// First `count` roots of `J_1(mu) = 0`, including `mu_0 = 0`.
pub fn j1_zeros(count: usize) -> BesselRootTable {
    let mut mu = Vec::with_capacity(count);
    if count > 0 {
        mu.push(0.0);
    }
    for s in 1..count {
        // McMahon estimate, then bracket and bisect
        let beta = (s as f64 + 0.25) * PI;
        let guess = beta - 3.0 / (8.0 * beta);
        let (mut lo, mut hi) = (guess - 0.3, guess + 0.3);
        while bessel_j1(lo).signum() == bessel_j1(hi).signum() {
            lo -= 0.1;
            hi += 0.1;
        }
        let mut flo = bessel_j1(lo);
        while hi - lo > 1e-13 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            let fm = bessel_j1(mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        mu.push(0.5 * (lo + hi));
    }
    BesselRootTable { mu }
}

#[cfg(test)]
mod tests {
    use super::*;

    // x, J0(x), J1(x) from a 40-digit reference evaluation
    const REFERENCE: [(f64, f64, f64); 12] = [
        (0.1, 0.997_501_562_066_04, 0.049_937_526_036_242),
        (1.0, 0.765_197_686_557_966_6, 0.440_050_585_744_933_5),
        (2.5, -0.048_383_776_468_198, 0.497_094_102_464_274_05),
        (5.0, -0.177_596_771_314_338_3, -0.327_579_137_591_465_23),
        (7.9, 0.194_361_844_841_278_33, 0.219_179_399_921_751_14),
        (8.1, 0.147_517_454_044_377_58, 0.247_607_766_981_592_92),
        (12.3, 0.110_797_950_307_585_3, -0.194_258_848_040_591_5),
        (24.9, 0.083_245_968_353_015_68, -0.134_855_699_531_408_75),
        (25.1, 0.108_275_671_499_949_3, -0.114_634_784_134_422_73),
        (40.0, 0.007_366_890_584_237_29, 0.126_038_318_037_585),
        (100.5, 0.054_436_573_814_413_594, -0.057_791_123_996_932_02),
        (1234.5, -0.013_550_379_618_035_721, 0.018_217_508_337_392_5),
    ];

    #[test]
    fn matches_high_precision_reference() {
        for (x, j0, j1) in REFERENCE {
            // relative where the value is O(1e-2) or larger; the 1234.5 point
            // is limited by the phase reduction of a large argument
            let tol = if x > 1000.0 { 1e-12 } else { 1e-13 };
            assert!(
                (bessel_j0(x) - j0).abs() <= tol * j0.abs().max(1e-2),
                "J0({x}) = {} want {j0}",
                bessel_j0(x)
            );
            assert!(
                (bessel_j1(x) - j1).abs() <= tol * j1.abs().max(1e-2),
                "J1({x}) = {} want {j1}",
                bessel_j1(x)
            );
        }
    }

    #[test]
    fn values_at_origin_and_parity() {
        assert_eq!(bessel_j0(0.0), 1.0);
        assert_eq!(bessel_j1(0.0), 0.0);
        assert_eq!(bessel_j0(-3.3), bessel_j0(3.3));
        assert_eq!(bessel_j1(-3.3), -bessel_j1(3.3));
    }

    #[test]
    fn known_zeros() {
        assert!(bessel_j1(3.831_705_970_207_512_3).abs() < 1e-14);
        assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-14);
    }

    #[test]
    fn branch_boundaries_are_continuous() {
        for edge in [SERIES_LIMIT, ASYMPTOTIC_LIMIT] {
            let (a, b) = (edge * (1.0 - 1e-12), edge * (1.0 + 1e-12));
            // subtract the first-order change, J0' = -J1 and J1' = J0 - J1/x
            let h = b - a;
            let d0 = bessel_j0(b) - bessel_j0(a) + bessel_j1(edge) * h;
            let d1 = bessel_j1(b) - bessel_j1(a) - (bessel_j0(edge) - bessel_j1(edge) / edge) * h;
            assert!(d0.abs() < 1e-13, "J0 jump {d0} at {edge}");
            assert!(d1.abs() < 1e-13, "J1 jump {d1} at {edge}");
        }
    }

    #[test]
    fn root_table() {
        let t = j1_zeros(25);
        assert_eq!(t.get(0), 0.0);
        let want = [
            3.831_705_970_207_512_3,
            7.015_586_669_815_619,
            10.173_468_135_062_722,
            13.323_691_936_314_223,
        ];
        for (i, w) in want.iter().enumerate() {
            assert!(
                (t.get(i + 1) - w).abs() < 1e-12,
                "root {} = {}",
                i + 1,
                t.get(i + 1)
            );
        }
        for w in t.mu.windows(2) {
            assert!(w[1] > w[0]);
        }
        for &m in &t.mu {
            assert!(bessel_j1(m).abs() < 1e-12);
        }
        assert!((t.get(20) - t.get(19) - PI).abs() < 1e-3);
    }

    #[test]
    fn bisection_oracle_for_first_roots() {
        // independent bracketing on the series alone, which is exact enough on [3, 8] with extended terms
        let f = |x: f64| {
            let q = -0.25 * x * x;
            let (mut t, mut s) = (0.5 * x, 0.5 * x);
            for k in 1..80 {
                let k = k as f64;
                t *= q / (k * (k + 1.0));
                s += t;
            }
            s
        };
        let (mut lo, mut hi) = (3.5, 4.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == f(lo).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((j1_zeros(2).get(1) - lo).abs() < 1e-12);
    }
}
