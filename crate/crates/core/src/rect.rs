//! Continuum rectangular resonator `[0, Lx] x [-Ly/2, Ly/2]` with two
//! centered waveguides of width `d` attached at `x = 0` and `x = Lx`.
//!
//! All quantum numbers are 0-based, with 0 the constant mode:
//! `psi_n(x) = sqrt((2 - delta_n0)/Lx) cos(pi n x / Lx)`, and likewise for
//! the transverse resonator modes (measured from the lower wall) and the
//! channel profiles `phi_p` on `[-d/2, d/2]`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{CmtError, Result};
use crate::field::{linspace, FieldGrid, FieldPoint, GridSpec};
use crate::heff::{
    ChannelId, ChannelTerm, EffectiveHamiltonian, Energy, LeadId, SMatrix, ScatteringSolution,
};
use crate::longitudinal::longitudinal_limit_smatrix;
use crate::model::{ResonatorBasis, ScatteringModel};
use crate::oracle::{integrate, CompositeRule, DEFAULT_TOLERANCE};

/// Closed channels with `|k|` above this are left out of `H_eff`.
pub const EVANESCENT_CUTOFF: f64 = 1e4;

/// Closed-form denominators closer to zero than this fall back to quadrature.
const DEGENERATE: f64 = 1e-9;

/// Cosine mode of a Neumann segment of length `len`, argument measured from its start.
pub fn cosine_mode(len: f64, index: usize, s: f64) -> f64 {
    if index == 0 {
        (1.0 / len).sqrt()
    } else {
        (2.0 / len).sqrt() * (PI * index as f64 * s / len).cos()
    }
}

/// Wavenumber of channel `p` in a guide of width `d`: real and positive when
/// open, `i kappa` otherwise (including exactly at threshold).
pub fn channel_dispersion_cont(energy: Energy, p: usize, d: f64) -> Complex64 {
    let cut = PI * p as f64 / d;
    let q = energy.value() - cut * cut;
    if q > 0.0 {
        Complex64::new(q.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-q).sqrt())
    }
}

/// `int_{-d/2}^{d/2} psi_m(y) phi_p(y) dy` for a centered guide.
pub fn overlap_v(p: usize, m: usize, d: f64, ly: f64) -> f64 {
    if m == 0 {
        return if p == 0 { (d / ly).sqrt() } else { 0.0 };
    }
    if (m + p) % 2 == 1 {
        // opposite parity about the midline
        return 0.0;
    }
    let (mf, pf) = (m as f64, p as f64);
    let denom = mf * mf * d * d - pf * pf * ly * ly;
    if (mf * d - pf * ly).abs() < DEGENERATE {
        return overlap_v_quadrature(p, m, d, ly);
    }
    let a = (PI * mf * (ly + d) / (2.0 * ly)).sin();
    let b = (PI * mf * (ly - d) / (2.0 * ly)).sin();
    let sign = if p.is_multiple_of(2) { 1.0 } else { -1.0 };
    let norm = if p == 0 { 2f64.sqrt() } else { 2.0 } / (ly * d).sqrt();
    norm * (sign * a - b) * mf * ly * d * d / (PI * denom)
}

/// The same overlap by adaptive quadrature.
pub fn overlap_v_quadrature(p: usize, m: usize, d: f64, ly: f64) -> f64 {
    let f = |y: f64| cosine_mode(ly, m, y + 0.5 * ly) * cosine_mode(d, p, y + 0.5 * d);
    match integrate(f, -0.5 * d, 0.5 * d, DEFAULT_TOLERANCE) {
        Ok(v) => v,
        Err(CmtError::Accuracy {
            estimate, error, ..
        }) => {
            log::warn!("overlap V({p},{m}) converged only to {error:e}");
            estimate
        }
        Err(_) => f64::NAN,
    }
}

/// Couplings of an arbitrary straight interface of width `d`, computed from a
/// sampled trace of one resonator mode.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceCoupling {
    /// One entry per channel.
    pub values: Vec<f64>,
    /// Change of the values when the sampling is halved.
    pub error_estimate: f64,
}

/// Projects `trace(y)`, `y in [-d/2, d/2]`, onto the first `channels`
/// channel profiles with a composite Gauss rule of `panels` panels.
pub fn interface_coupling_general(
    d: f64,
    trace: impl Fn(f64) -> f64,
    channels: usize,
    panels: usize,
) -> InterfaceCoupling {
    const ORDER: usize = 16;
    let fine = CompositeRule::new(-0.5 * d, 0.5 * d, 2 * panels.max(1), ORDER);
    let coarse = CompositeRule::new(-0.5 * d, 0.5 * d, panels.max(1), ORDER);
    let project = |rule: &CompositeRule, samples: &[f64], p: usize| {
        let weighted: Vec<f64> = rule
            .nodes
            .iter()
            .zip(samples)
            .map(|(y, v)| v * cosine_mode(d, p, y + 0.5 * d))
            .collect();
        rule.apply(&weighted)
    };
    let fine_samples: Vec<f64> = fine.nodes.iter().map(|&y| trace(y)).collect();
    let coarse_samples: Vec<f64> = coarse.nodes.iter().map(|&y| trace(y)).collect();
    let mut values = Vec::with_capacity(channels);
    let mut error_estimate = 0.0f64;
    for p in 0..channels {
        let v = project(&fine, &fine_samples, p);
        error_estimate = error_estimate.max((v - project(&coarse, &coarse_samples, p)).abs());
        values.push(v);
    }
    if error_estimate > 1e-8 {
        log::warn!("interface trace undersampled: coupling error estimate {error_estimate:e}");
    }
    InterfaceCoupling {
        values,
        error_estimate,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RectModel {
    lx: f64,
    ly: f64,
    d: f64,
    n_modes: usize,
    m_modes: usize,
    channels: usize,
    basis: ResonatorBasis<(usize, usize)>,
    /// `v[p * m_modes + m]`
    v: Vec<f64>,
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

impl RectModel {
    /// Resonator with `n_modes x m_modes` cosine modes (quantum numbers
    /// `0..n_modes`, `0..m_modes`) and `channels` channels per waveguide.
    pub fn new(
        lx: f64,
        ly: f64,
        d: f64,
        n_modes: usize,
        m_modes: usize,
        channels: usize,
    ) -> Result<Self> {
        for (name, v) in [("Lx", lx), ("Ly", ly), ("d", d)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CmtError::invalid(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if d > ly {
            return Err(CmtError::invalid(format!(
                "waveguide width {d} exceeds resonator width {ly}"
            )));
        }
        if n_modes < 1 || m_modes < 1 || channels < 1 {
            return Err(CmtError::invalid(
                "mode and channel counts must be at least 1",
            ));
        }
        let basis = modes_rect(lx, ly, n_modes, m_modes);
        let mut v = vec![0.0; channels * m_modes];
        for p in 0..channels {
            for m in 0..m_modes {
                v[p * m_modes + m] = overlap_v(p, m, d, ly);
            }
        }
        let mut left = Vec::with_capacity(channels);
        let mut right = Vec::with_capacity(channels);
        for p in 0..channels {
            let mut wl = Vec::with_capacity(basis.len());
            let mut wr = Vec::with_capacity(basis.len());
            for &(n, m) in &basis.indices {
                let end = cosine_mode(lx, n, 0.0) * v[p * m_modes + m];
                wl.push(end);
                wr.push(if n % 2 == 0 { end } else { -end });
            }
            left.push(wl);
            right.push(wr);
        }
        Ok(RectModel {
            lx,
            ly,
            d,
            n_modes,
            m_modes,
            channels,
            basis,
            v,
            left,
            right,
        })
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn mode_counts(&self) -> (usize, usize) {
        (self.n_modes, self.m_modes)
    }

    pub fn basis(&self) -> &ResonatorBasis<(usize, usize)> {
        &self.basis
    }

    pub fn overlap(&self, p: usize, m: usize) -> f64 {
        self.v[p * self.m_modes + m]
    }

    /// Column `W~_{C,p}` over the resonator basis.
    pub fn coupling(&self, lead: LeadId, p: usize) -> &[f64] {
        if lead == LeadId::LEFT {
            &self.left[p]
        } else {
            &self.right[p]
        }
    }

    /// Interior expansion `sum chi_{n,m} psi_n(x) psi_m(y)`.
    pub fn interior_value(&self, chi: &[Complex64], x: f64, y: f64) -> Complex64 {
        let xs: Vec<f64> = (0..self.n_modes)
            .map(|n| cosine_mode(self.lx, n, x))
            .collect();
        let ys: Vec<f64> = (0..self.m_modes)
            .map(|m| cosine_mode(self.ly, m, y + 0.5 * self.ly))
            .collect();
        self.basis
            .indices
            .iter()
            .zip(chi)
            .map(|(&(n, m), c)| c * (xs[n] * ys[m]))
            .sum()
    }

    /// Lead expansion at distance `s >= 0` from the interface of `lead`,
    /// transverse position `y`.
    pub fn lead_value(
        &self,
        heff: &EffectiveHamiltonian,
        solution: &ScatteringSolution,
        lead: LeadId,
        s: f64,
        y: f64,
    ) -> Complex64 {
        let projections = heff.channel_projections(&solution.chi);
        self.lead_value_with(heff, solution, &projections, lead, s, y)
    }

    fn lead_value_with(
        &self,
        heff: &EffectiveHamiltonian,
        solution: &ScatteringSolution,
        projections: &[Complex64],
        lead: LeadId,
        s: f64,
        y: f64,
    ) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (term, proj) in heff.terms().iter().zip(projections) {
            if term.id.lead != lead {
                continue;
            }
            let out = (Complex64::i() * term.k * s).exp();
            let mut v = proj * out;
            if let Some(i) = solution.channels.iter().position(|c| *c == term.id) {
                let a = solution.incoming[i];
                if a != Complex64::new(0.0, 0.0) {
                    v += a * ((-Complex64::i() * term.k * s).exp() - out)
                        / (4.0 * PI * term.k.re).sqrt();
                }
            }
            total += v * cosine_mode(self.d, term.id.index, y + 0.5 * self.d);
        }
        total
    }

    /// Complex pressure on a grid over the resonator and `spec.stub` of each lead.
    pub fn field_map(
        &self,
        heff: &EffectiveHamiltonian,
        solution: &ScatteringSolution,
        spec: GridSpec,
    ) -> FieldGrid {
        let projections = heff.channel_projections(&solution.chi);
        let xs = linspace(-spec.stub, self.lx + spec.stub, spec.nx);
        let ys = linspace(-0.5 * self.ly, 0.5 * self.ly, spec.ny);
        let mut points = Vec::with_capacity(spec.nx * spec.ny);
        for &x in &xs {
            for &y in &ys {
                let value = if (0.0..=self.lx).contains(&x) {
                    self.interior_value(&solution.chi, x, y)
                } else if y.abs() <= 0.5 * self.d {
                    let (lead, s) = if x < 0.0 {
                        (LeadId::LEFT, -x)
                    } else {
                        (LeadId::RIGHT, x - self.lx)
                    };
                    self.lead_value_with(heff, solution, &projections, lead, s, y)
                } else {
                    continue;
                };
                points.push(FieldPoint { x, y, value });
            }
        }
        FieldGrid {
            axes: ["x", "y"],
            points,
        }
    }

    /// Relative L2 difference between the interior and lead expansions along
    /// the interface of `lead`.
    pub fn interface_mismatch(
        &self,
        heff: &EffectiveHamiltonian,
        solution: &ScatteringSolution,
        lead: LeadId,
    ) -> f64 {
        let projections = heff.channel_projections(&solution.chi);
        let x = if lead == LeadId::LEFT { 0.0 } else { self.lx };
        let rule = CompositeRule::new(-0.5 * self.d, 0.5 * self.d, 32, 16);
        let (mut diff, mut norm) = (Vec::new(), Vec::new());
        for &y in &rule.nodes {
            let inner = self.interior_value(&solution.chi, x, y);
            let outer = self.lead_value_with(heff, solution, &projections, lead, 0.0, y);
            diff.push((inner - outer).norm_sqr());
            norm.push(inner.norm_sqr());
        }
        (rule.apply(&diff) / rule.apply(&norm)).sqrt()
    }
}

impl RectModel {
    /// S-matrix of the same effective Hamiltonian with the longitudinal mode
    /// sum carried to infinity in closed form; only `m_modes` and the channel
    /// count remain as truncation parameters.
    pub fn smatrix_longitudinal_limit(&self, energy: Energy) -> Result<SMatrix> {
        let transverse: Vec<f64> = (0..self.m_modes)
            .map(|m| (PI * m as f64 / self.ly).powi(2))
            .collect();
        let k: Vec<Complex64> = (0..self.channels)
            .map(|p| channel_dispersion_cont(energy, p, self.d))
            .collect();
        longitudinal_limit_smatrix(energy, self.lx, &transverse, |p, m| self.overlap(p, m), &k)
    }
}

impl ScatteringModel for RectModel {
    fn heff(&self, energy: Energy) -> Result<EffectiveHamiltonian> {
        let mut terms = Vec::with_capacity(2 * self.channels);
        for lead in [LeadId::LEFT, LeadId::RIGHT] {
            for p in 0..self.channels {
                let k = channel_dispersion_cont(energy, p, self.d);
                let id = ChannelId::new(lead, p);
                let w = self.coupling(lead, p).to_vec();
                if k.im == 0.0 {
                    let g = (4.0 * PI * k.re).sqrt();
                    terms.push(ChannelTerm::propagating(
                        id,
                        w,
                        Complex64::new(0.0, -k.re),
                        g,
                        k.re,
                    ));
                } else if k.im <= EVANESCENT_CUTOFF {
                    terms.push(ChannelTerm::evanescent(id, w, k.im, k));
                }
            }
        }
        if !terms.iter().any(|t| t.open) {
            return Err(CmtError::NoOpenChannel {
                energy: energy.value(),
            });
        }
        EffectiveHamiltonian::assemble(self.basis.energies.clone(), terms)
    }

    fn thresholds(&self) -> Vec<f64> {
        (0..self.channels)
            .map(|p| (PI * p as f64 / self.d).powi(2))
            .collect()
    }
}

/// Product cosine modes `(n, m)` with `E = (pi n/Lx)^2 + (pi m/Ly)^2`, ascending.
pub fn modes_rect(
    lx: f64,
    ly: f64,
    n_modes: usize,
    m_modes: usize,
) -> ResonatorBasis<(usize, usize)> {
    let mut modes = Vec::with_capacity(n_modes * m_modes);
    for n in 0..n_modes {
        for m in 0..m_modes {
            let e = (PI * n as f64 / lx).powi(2) + (PI * m as f64 / ly).powi(2);
            modes.push(((n, m), e));
        }
    }
    ResonatorBasis::sorted(modes)
}
