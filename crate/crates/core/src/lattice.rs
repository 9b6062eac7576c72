//! Finite-difference resonator on an `N x M` grid of step `a0`, with two
//! centered lattice waveguides of `P` transverse sites.
//!
//! Sites sit at cell centers, so the closed box is the Kronecker sum of two
//! Neumann chains scaled by `1/a0^2` and its eigenmodes are products of
//! chain modes. Every one of the `P` transverse channels of each lead enters
//! `H_eff`; closed ones contribute the real shift `(1 - lambda)/a0` with
//! `lambda = e^{i k a0}` on its decaying branch.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::chain::{chain_energy, chain_mode};
use crate::error::{CmtError, Result};
use crate::field::{FieldGrid, FieldPoint};
use crate::heff::{
    ChannelId, ChannelTerm, EffectiveHamiltonian, Energy, LeadId, ScatteringSolution,
};
use crate::model::{ResonatorBasis, ScatteringModel};

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice2DModel {
    n: usize,
    m: usize,
    p: usize,
    a0: f64,
    basis: ResonatorBasis<(usize, usize)>,
    /// `overlap[mode * P + channel]`: transverse overlap of resonator row mode and channel.
    overlap: Vec<f64>,
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

/// Wavenumber data of one lattice channel at a given energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeChannel {
    /// `e^{i k a0}`; on the unit circle when open, real with `|lambda| <= 1` when closed.
    pub lambda: Complex64,
    pub k: Complex64,
    pub open: bool,
}

impl Lattice2DModel {
    pub fn new(n: usize, m: usize, p: usize, a0: f64) -> Result<Self> {
        if n < 1 || m < 1 || p < 1 {
            return Err(CmtError::invalid(format!(
                "lattice sizes must be positive, got N={n} M={m} P={p}"
            )));
        }
        if !(a0.is_finite() && a0 > 0.0) {
            return Err(CmtError::invalid(format!(
                "grid step must be positive, got {a0}"
            )));
        }
        if p > m {
            return Err(CmtError::invalid(format!(
                "waveguide width P={p} exceeds resonator width M={m}"
            )));
        }
        if !(m - p).is_multiple_of(2) {
            return Err(CmtError::invalid(format!(
                "M - P = {} is odd; a centered waveguide needs an even difference",
                m - p
            )));
        }
        let basis = box_eigenbasis_2d(n, m, a0)?;
        let offset = (m - p) / 2;
        let mut overlap = vec![0.0; m * p];
        for mode in 0..m {
            for ch in 0..p {
                overlap[mode * p + ch] = (0..p)
                    .map(|l| chain_mode(m, mode, (l + offset) as f64) * chain_mode(p, ch, l as f64))
                    .sum();
            }
        }
        let edge = 1.0 / a0.sqrt();
        let mut left = Vec::with_capacity(p);
        let mut right = Vec::with_capacity(p);
        for ch in 0..p {
            let (mut wl, mut wr) = (
                Vec::with_capacity(basis.len()),
                Vec::with_capacity(basis.len()),
            );
            for &(nx, my) in &basis.indices {
                let v = overlap[my * p + ch] * edge;
                wl.push(chain_mode(n, nx, 0.0) * v);
                wr.push(chain_mode(n, nx, (n - 1) as f64) * v);
            }
            left.push(wl);
            right.push(wr);
        }
        Ok(Lattice2DModel {
            n,
            m,
            p,
            a0,
            basis,
            overlap,
            left,
            right,
        })
    }

    /// Grid matching a continuum rectangle `lx x ly` with a waveguide of width `d`.
    pub fn from_geometry(lx: f64, ly: f64, d: f64, a0: f64) -> Result<Self> {
        let count = |len: f64, name: &str| -> Result<usize> {
            let c = len / a0;
            let r = c.round();
            if r < 1.0 || (c - r).abs() > 1e-9 * c.max(1.0) {
                return Err(CmtError::invalid(format!(
                    "{name} = {len} is not a multiple of a0 = {a0}"
                )));
            }
            Ok(r as usize)
        };
        Self::new(count(lx, "Lx")?, count(ly, "Ly")?, count(d, "d")?, a0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// First resonator row touched by the waveguides.
    pub fn offset(&self) -> usize {
        (self.m - self.p) / 2
    }

    pub fn basis(&self) -> &ResonatorBasis<(usize, usize)> {
        &self.basis
    }

    /// `sum_l psi_mode(l + offset) phi_channel(l)`.
    pub fn transverse_overlap(&self, mode: usize, channel: usize) -> f64 {
        self.overlap[mode * self.p + channel]
    }

    pub fn coupling(&self, lead: LeadId, channel: usize) -> &[f64] {
        if lead == LeadId::LEFT {
            &self.left[channel]
        } else {
            &self.right[channel]
        }
    }

    pub fn channel(&self, energy: Energy, channel: usize) -> LatticeChannel {
        lattice_dispersion(energy, channel, self.p, self.a0)
    }

    /// Flux normalization `a0 / sqrt(4 pi sin(k a0))` of an open lead wave.
    pub fn wave_norm(&self, energy: Energy, channel: usize) -> f64 {
        let s = self.channel(energy, channel).lambda.im;
        self.a0 / (4.0 * PI * s).sqrt()
    }

    /// Site-space value of a resonator state `chi` at grid column `j`, row `l`.
    pub fn interior_value(&self, chi: &[Complex64], j: usize, l: usize) -> Complex64 {
        let xs: Vec<f64> = (0..self.n)
            .map(|nx| chain_mode(self.n, nx, j as f64))
            .collect();
        let ys: Vec<f64> = (0..self.m)
            .map(|my| chain_mode(self.m, my, l as f64))
            .collect();
        self.basis
            .indices
            .iter()
            .zip(chi)
            .map(|(&(nx, my), c)| c * (xs[nx] * ys[my]))
            .sum()
    }

    /// Complex pressure at every site of the resonator and of `stub_columns`
    /// lead columns on each side. Sites are placed at cell centers with the
    /// left resonator wall at `x = 0` and the midline at `y = 0`; values are
    /// divided by `a0` so that they approximate the continuum field.
    pub fn field(
        &self,
        heff: &EffectiveHamiltonian,
        solution: &ScatteringSolution,
        stub_columns: usize,
    ) -> Result<FieldGrid> {
        let (n, m, p, a0) = (self.n, self.m, self.p, self.a0);
        let energy = solution.energy;
        let half = 0.5 * m as f64 * a0;
        let y_at = |l: usize, shift: usize| -half + ((l + shift) as f64 + 0.5) * a0;
        let mut points = Vec::with_capacity((n + 2 * stub_columns) * m);

        // mode values on the grid
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|nx| chain_mode(n, nx, j as f64)).collect())
            .collect();
        let ys: Vec<Vec<f64>> = (0..m)
            .map(|l| (0..m).map(|my| chain_mode(m, my, l as f64)).collect())
            .collect();
        for (j, xrow) in xs.iter().enumerate() {
            for (l, yrow) in ys.iter().enumerate() {
                let v: Complex64 = self
                    .basis
                    .indices
                    .iter()
                    .zip(&solution.chi)
                    .map(|(&(nx, my), c)| c * (xrow[nx] * yrow[my]))
                    .sum();
                points.push(FieldPoint {
                    x: (j as f64 + 0.5) * a0,
                    y: y_at(l, 0),
                    value: v / a0,
                });
            }
        }

        let projections = heff.channel_projections(&solution.chi);
        for lead in [LeadId::LEFT, LeadId::RIGHT] {
            // per channel: (lambda, incoming scale, boundary value)
            let mut modes = Vec::with_capacity(p);
            for ch in 0..p {
                let id = ChannelId::new(lead, ch);
                let info = self.channel(energy, ch);
                let pos = heff
                    .terms()
                    .iter()
                    .position(|t| t.id == id)
                    .expect("every lattice channel is present");
                let boundary = a0.sqrt() * projections[pos];
                let incoming = match solution.channels.iter().position(|c| *c == id) {
                    Some(i) if info.open => solution.incoming[i] * self.wave_norm(energy, ch),
                    _ => Complex64::new(0.0, 0.0),
                };
                modes.push((info.lambda, incoming, boundary));
            }
            for s in 1..=stub_columns {
                let x = if lead == LeadId::LEFT {
                    (0.5 - s as f64) * a0
                } else {
                    (n as f64 - 0.5 + s as f64) * a0
                };
                let s = s as i32;
                for l in 0..p {
                    let v: Complex64 = modes
                        .iter()
                        .enumerate()
                        .map(|(ch, &(lambda, incoming, boundary))| {
                            let out = lambda.powi(s);
                            let mut v = boundary * out;
                            if incoming != Complex64::new(0.0, 0.0) {
                                v += incoming * (lambda.powi(-s) - out);
                            }
                            v * chain_mode(p, ch, l as f64)
                        })
                        .sum();
                    points.push(FieldPoint {
                        x,
                        y: y_at(l, self.offset()),
                        value: v / a0,
                    });
                }
            }
        }
        Ok(FieldGrid {
            axes: ["x", "y"],
            points,
        })
    }
}

impl ScatteringModel for Lattice2DModel {
    fn heff(&self, energy: Energy) -> Result<EffectiveHamiltonian> {
        let mut terms = Vec::with_capacity(2 * self.p);
        for lead in [LeadId::LEFT, LeadId::RIGHT] {
            for ch in 0..self.p {
                let info = self.channel(energy, ch);
                let id = ChannelId::new(lead, ch);
                let w = self.coupling(lead, ch).to_vec();
                let factor = (1.0 - info.lambda) / self.a0;
                terms.push(if info.open {
                    let g = (4.0 * PI * info.lambda.im / self.a0).sqrt();
                    ChannelTerm::propagating(id, w, factor, g, info.k.re)
                } else {
                    ChannelTerm::evanescent(id, w, factor.re, info.k)
                });
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
        let a2 = self.a0 * self.a0;
        let mut t: Vec<f64> = (0..self.p)
            .flat_map(|ch| {
                let transverse = 2.0 - 2.0 * (PI * ch as f64 / self.p as f64).cos();
                [transverse / a2, (transverse + 4.0) / a2]
            })
            .collect();
        t.sort_by(f64::total_cmp);
        t
    }
}

/// Closed box modes `(n, m)` with energies `[(2 - 2cos(pi n/N)) + (2 - 2cos(pi m/M))]/a0^2`,
/// ascending.
pub fn box_eigenbasis_2d(n: usize, m: usize, a0: f64) -> Result<ResonatorBasis<(usize, usize)>> {
    if n < 1 || m < 1 {
        return Err(CmtError::invalid(
            "box needs at least one site in each direction",
        ));
    }
    let a2 = a0 * a0;
    let mut modes = Vec::with_capacity(n * m);
    for nx in 0..n {
        for my in 0..m {
            modes.push(((nx, my), (chain_energy(n, nx) + chain_energy(m, my)) / a2));
        }
    }
    Ok(ResonatorBasis::sorted(modes))
}

/// Solves `E = [4 - 2cos(k a0) - 2cos(pi p / P)] / a0^2` for channel `p` (0-based).
pub fn lattice_dispersion(energy: Energy, p: usize, pp: usize, a0: f64) -> LatticeChannel {
    discrete_channel(
        2.0 - (PI * p as f64 / pp as f64).cos() - 0.5 * a0 * a0 * energy.value(),
        a0,
    )
}

/// Lead channel with `cos(k a0) = c`, picking the decaying branch outside `|c| < 1`.
pub(crate) fn discrete_channel(c: f64, a0: f64) -> LatticeChannel {
    if c.abs() < 1.0 {
        let s = (1.0 - c * c).sqrt();
        let theta = s.atan2(c);
        LatticeChannel {
            lambda: Complex64::new(c, s),
            k: Complex64::new(theta / a0, 0.0),
            open: true,
        }
    } else if c >= 1.0 {
        let r = (c * c - 1.0).sqrt();
        LatticeChannel {
            lambda: Complex64::new(c - r, 0.0),
            k: Complex64::new(0.0, c.acosh() / a0),
            open: false,
        }
    } else {
        let r = (c * c - 1.0).sqrt();
        LatticeChannel {
            lambda: Complex64::new(c + r, 0.0),
            k: Complex64::new(PI / a0, (-c).acosh() / a0),
            open: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::integrate;

    fn reference_lattice() -> Lattice2DModel {
        Lattice2DModel::new(20, 36, 20, 0.05).unwrap()
    }

    #[test]
    fn rejects_misaligned_waveguide() {
        assert!(Lattice2DModel::new(4, 7, 2, 0.1).is_err());
        assert!(Lattice2DModel::new(4, 3, 5, 0.1).is_err());
        assert!(Lattice2DModel::new(4, 8, 2, 0.0).is_err());
        assert!(Lattice2DModel::new(4, 8, 2, 0.1).is_ok());
    }

    #[test]
    fn from_geometry_counts_sites() {
        let l = Lattice2DModel::from_geometry(1.0, 1.8, 1.0, 0.05).unwrap();
        assert_eq!((l.n(), l.m(), l.p()), (20, 36, 20));
        assert!(Lattice2DModel::from_geometry(1.0, 1.83, 1.0, 0.05).is_err());
    }

    #[test]
    fn dispersion_special_values() {
        let a0 = 0.05;
        let e0 = lattice_dispersion(Energy::new(0.0).unwrap(), 0, 20, a0);
        assert_eq!(e0.k, Complex64::new(0.0, 0.0));
        assert!(!e0.open);
        let mid = lattice_dispersion(Energy::new(2.0 / (a0 * a0)).unwrap(), 0, 20, a0);
        assert!(mid.open && (mid.k.re - PI / (2.0 * a0)).abs() < 1e-12);
        // every branch satisfies the dispersion relation
        for e in [-5.0, 30.0, 500.0, 3000.0, 3300.0] {
            for p in [0, 3, 19] {
                let ch = lattice_dispersion(Energy::new(e).unwrap(), p, 20, a0);
                let lhs = (4.0 - 2.0 * (ch.k * a0).cos() - 2.0 * (PI * p as f64 / 20.0).cos())
                    / (a0 * a0);
                assert!((lhs - e).norm() < 1e-9 * e.abs().max(1.0), "E={e} p={p}");
                assert!((ch.lambda - (Complex64::i() * ch.k * a0).exp()).norm() < 1e-12);
                assert!(ch.k.im >= 0.0);
            }
        }
    }

    #[test]
    fn dispersion_tends_to_continuum() {
        // a0 k = a0 sqrt(E) + (a0 sqrt E)^3 / 24 + 3 (a0 sqrt E)^5 / 640 + ...
        let a0 = 0.05;
        let omega = 1.5 * PI;
        let ch = lattice_dispersion(Energy::from_omega(omega).unwrap(), 0, 36, a0);
        let s = a0 * omega;
        let series = s + s.powi(3) / 24.0 + 3.0 * s.powi(5) / 640.0;
        assert!((ch.k.re * a0 - series).abs() < s.powi(7) * 0.01);
        assert!(((ch.k.re * a0 - s) / s).abs() < s * s / 6.0);
    }

    #[test]
    fn box_basis_values() {
        let b = box_eigenbasis_2d(20, 36, 0.05).unwrap();
        assert_eq!(b.len(), 720);
        assert_eq!(b.indices[0], (0, 0));
        assert_eq!(b.energies[0], 0.0);
        let e21 = (2.0 - 2.0 * (PI / 20.0).cos()) / 0.0025;
        assert!(((e21 - PI * PI) / (PI * PI)).abs() < 3e-3);
        let sq = box_eigenbasis_2d(6, 6, 0.1).unwrap();
        let find =
            |i: (usize, usize)| sq.energies[sq.indices.iter().position(|x| *x == i).unwrap()];
        assert_eq!(find((1, 3)), find((3, 1)));
    }

    #[test]
    fn channel_profiles_are_orthonormal() {
        for p in [1, 4, 20] {
            for a in 0..p {
                for b in 0..p {
                    let dot: f64 = (0..p)
                        .map(|l| chain_mode(p, a, l as f64) * chain_mode(p, b, l as f64))
                        .sum();
                    assert!((dot - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn overlap_identity_and_parity() {
        let same = Lattice2DModel::new(3, 6, 6, 0.1).unwrap();
        for m in 0..6 {
            for p in 0..6 {
                let want = if m == p { 1.0 } else { 0.0 };
                assert!((same.transverse_overlap(m, p) - want).abs() < 1e-12);
            }
        }
        let l = reference_lattice();
        for m in 0..36 {
            for p in 0..20 {
                if (m + p) % 2 == 1 {
                    assert!(l.transverse_overlap(m, p).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn overlap_is_midpoint_rule_of_continuum_integral() {
        // sum_l psi_2(l) phi_0(l) against the integral of the continuum profiles, O(a0^2)
        let l = reference_lattice();
        let a0 = l.a0();
        let (ly, d) = (1.8f64, 1.0f64);
        let cont = integrate(
            |y: f64| (2.0 / ly).sqrt() * (2.0 * PI * (y + 0.5 * ly) / ly).cos() * (1.0 / d).sqrt(),
            -0.5 * d,
            0.5 * d,
            1e-13,
        )
        .unwrap();
        let disc = l.transverse_overlap(2, 0);
        assert!((disc - cont).abs() < a0 * a0, "{disc} vs {cont}");
        assert!((disc - cont).abs() > 0.0);
    }

    #[test]
    fn lead_waves_satisfy_completeness() {
        // integral over the band of N(E)^2 e^{+-i k a0 (j - j')}, written in alpha = k a0
        let (p, pp, a0) = (3, 8, 0.1);
        let model = Lattice2DModel::new(2, 8, pp, a0).unwrap();
        let transverse = 2.0 - 2.0 * (PI * p as f64 / pp as f64).cos();
        let energy_of = |alpha: f64| (transverse + 2.0 - 2.0 * alpha.cos()) / (a0 * a0);
        for dj in 0..=3 {
            let integrand = |alpha: f64| {
                let e = Energy::new(energy_of(alpha)).unwrap();
                let norm = model.wave_norm(e, p);
                let de = 2.0 * alpha.sin() / (a0 * a0);
                // both directions contribute e^{+i alpha dj} + e^{-i alpha dj}
                norm * norm * de * 2.0 * (alpha * dj as f64).cos()
            };
            let v = integrate(integrand, 0.0, PI, 1e-12).unwrap();
            let want = if dj == 0 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-8, "dj={dj}: {v}");
        }
    }

    #[test]
    fn single_open_channel_conserves_flux() {
        let l = reference_lattice();
        let e = Energy::from_omega(1.5 * PI).unwrap();
        let h = l.heff(e).unwrap();
        assert_eq!(h.open_channels().len(), 4);
        let s = h.smatrix(e).unwrap();
        assert!(s.unitarity_defect() < 1e-10);
        assert!(s.reciprocity_defect() < 1e-10);
        for t in h.terms() {
            t.check_invariants().unwrap();
        }
    }

    #[test]
    fn below_threshold_is_an_error() {
        let l = Lattice2DModel::new(3, 4, 2, 0.1).unwrap();
        assert!(matches!(
            l.heff(Energy::new(-1.0).unwrap()),
            Err(CmtError::NoOpenChannel { .. })
        ));
    }

    #[test]
    fn thresholds_bracket_channel_openings() {
        let l = Lattice2DModel::new(3, 4, 2, 0.1).unwrap();
        let t = l.thresholds();
        assert_eq!(t.len(), 4);
        for w in t.windows(2) {
            let e = Energy::new(0.5 * (w[0] + w[1])).unwrap();
            let open = (0..2).filter(|&p| l.channel(e, p).open).count();
            assert!(open >= 1);
        }
    }

    #[test]
    fn field_mirror_symmetry() {
        let l = Lattice2DModel::new(6, 8, 4, 0.25).unwrap();
        let e = Energy::new(3.0).unwrap();
        for (ch, sign) in [(0, 1.0), (1, -1.0)] {
            let e = if ch == 0 {
                e
            } else {
                Energy::new(12.0).unwrap()
            };
            let (h, sol) = l
                .scatter(
                    e,
                    ChannelId::new(LeadId::LEFT, ch),
                    Complex64::new(1.0, 0.0),
                )
                .unwrap();
            let grid = l.field(&h, &sol, 3).unwrap();
            for a in &grid.points {
                let b = grid
                    .points
                    .iter()
                    .find(|b| (b.x - a.x).abs() < 1e-12 && (b.y + a.y).abs() < 1e-12)
                    .expect("mirror site exists");
                assert!((a.value - sign * b.value).norm() < 1e-10 * grid.max_abs());
            }
        }
    }
}
