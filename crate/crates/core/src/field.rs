use num_complex::Complex64;

/// One sample of the complex pressure field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub x: f64,
    pub y: f64,
    pub value: Complex64,
}

/// Field samples on a rectangular grid, restricted to points inside the
/// resonator or a lead stub. For the cylinder `x`/`y` hold `z`/`r`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub axes: [&'static str; 2],
    pub points: Vec<FieldPoint>,
}

impl FieldGrid {
    pub fn max_abs(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.value.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.value.re.is_finite() && p.value.im.is_finite())
    }
}

/// Sampling of the field map: `nx` by `ny` points, leads extended by `stub`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub stub: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            nx: 121,
            ny: 73,
            stub: 0.5,
        }
    }
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}
