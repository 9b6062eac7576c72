//! Axisymmetric cylindrical resonator of radius `R` and length `L` between two
//! coaxial circular waveguides of radius `a`, restricted to zero angular
//! momentum.
//!
//! Two axial treatments share the Bessel radial basis: a continuum cosine
//! expansion along `z`, and a mixed form in which `z` is replaced by `N`
//! finite-difference slices of width `a0 = L/N` (also inside the leads).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::chain::{chain_energy, chain_mode};
use crate::error::{CmtError, Result};
use crate::field::{linspace, FieldGrid, FieldPoint, GridSpec};
use crate::heff::{
    ChannelId, ChannelTerm, EffectiveHamiltonian, Energy, LeadId, SMatrix, ScatteringSolution,
};
use crate::lattice::{discrete_channel, LatticeChannel};
use crate::longitudinal::longitudinal_limit_smatrix;
use crate::model::{ResonatorBasis, ScatteringModel};
use crate::oracle::integrate;
use crate::rect::{cosine_mode, EVANESCENT_CUTOFF};
use crate::special::{bessel_j0, bessel_j1, j1_zeros, BesselRootTable};

/// Below this the closed-form overlap denominator is treated as degenerate.
const DEGENERATE_DENOMINATOR: f64 = 1e-9;

/// Axial representation of the resonator and the leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axial {
    /// Cosine modes `0..modes` along `z`.
    Continuum { modes: usize },
    /// `slices` finite-difference sites along `z`.
    Discrete { slices: usize },
}

/// Normalized radial mode `J0(mu r/radius) / (sqrt(pi) radius J0(mu))` of a
/// disk with a sound-hard rim; `mu` must be a root of `J1`.
pub fn radial_mode(radius: f64, mu: f64, r: f64) -> f64 {
    bessel_j0(mu * r / radius) / (PI.sqrt() * radius * bessel_j0(mu))
}

/// Overlap over the disk `r <= a` of the waveguide mode with root `mu_p` and
/// the resonator mode with root `mu_m`.
pub fn overlap_v_cyl(mu_p: f64, mu_m: f64, a: f64, radius: f64) -> f64 {
    if mu_m == 0.0 {
        // constant resonator mode: only the constant channel survives
        return if mu_p == 0.0 { a / radius } else { 0.0 };
    }
    let denom = (mu_m * a).powi(2) - (mu_p * radius).powi(2);
    if denom.abs() < DEGENERATE_DENOMINATOR {
        return overlap_v_cyl_quadrature(mu_p, mu_m, a, radius);
    }
    2.0 * a * a * mu_m * bessel_j1(mu_m * a / radius) / (bessel_j0(mu_m) * denom)
}

/// The same overlap by adaptive quadrature of the defining integral.
pub fn overlap_v_cyl_quadrature(mu_p: f64, mu_m: f64, a: f64, radius: f64) -> f64 {
    let integrand = |r: f64| 2.0 * PI * r * radial_mode(a, mu_p, r) * radial_mode(radius, mu_m, r);
    match integrate(integrand, 0.0, a, 1e-14) {
        Ok(v) => v,
        Err(CmtError::Accuracy { estimate, .. }) => estimate,
        Err(e) => unreachable!("quadrature only reports accuracy failures: {e}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderModel {
    radius: f64,
    length: f64,
    a: f64,
    axial: Axial,
    m_modes: usize,
    channels: usize,
    roots: BesselRootTable,
    /// Modes labelled `(axial n, radial m)`.
    basis: ResonatorBasis<(usize, usize)>,
    /// `v[p * m_modes + m]`
    v: Vec<f64>,
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

impl CylinderModel {
    /// Continuum axial expansion with `n_modes` axial and `m_modes` radial modes.
    pub fn continuum(
        radius: f64,
        length: f64,
        a: f64,
        n_modes: usize,
        m_modes: usize,
        channels: usize,
    ) -> Result<Self> {
        Self::build(
            radius,
            length,
            a,
            Axial::Continuum { modes: n_modes },
            m_modes,
            channels,
        )
    }

    /// Mixed representation with `slices` axial sites.
    pub fn mixed(
        radius: f64,
        length: f64,
        a: f64,
        slices: usize,
        m_modes: usize,
        channels: usize,
    ) -> Result<Self> {
        if slices < 2 {
            return Err(CmtError::invalid(format!(
                "mixed representation needs at least 2 slices, got {slices}"
            )));
        }
        Self::build(
            radius,
            length,
            a,
            Axial::Discrete { slices },
            m_modes,
            channels,
        )
    }

    fn build(
        radius: f64,
        length: f64,
        a: f64,
        axial: Axial,
        m_modes: usize,
        channels: usize,
    ) -> Result<Self> {
        for (name, v) in [("R", radius), ("L", length), ("a", a)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CmtError::invalid(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if a > radius {
            return Err(CmtError::invalid(format!(
                "waveguide radius {a} exceeds resonator radius {radius}"
            )));
        }
        let n_axial = match axial {
            Axial::Continuum { modes } => modes,
            Axial::Discrete { slices } => slices,
        };
        if n_axial < 1 || m_modes < 1 || channels < 1 {
            return Err(CmtError::invalid(
                "mode and channel counts must be at least 1",
            ));
        }
        let roots = j1_zeros(m_modes.max(channels));

        let mut modes = Vec::with_capacity(n_axial * m_modes);
        for n in 0..n_axial {
            let axial_energy = match axial {
                Axial::Continuum { .. } => (PI * n as f64 / length).powi(2),
                Axial::Discrete { slices } => {
                    chain_energy(slices, n) / (length / slices as f64).powi(2)
                }
            };
            for m in 0..m_modes {
                modes.push(((n, m), (roots.get(m) / radius).powi(2) + axial_energy));
            }
        }
        let basis = ResonatorBasis::sorted(modes);

        let mut v = vec![0.0; channels * m_modes];
        for p in 0..channels {
            for m in 0..m_modes {
                v[p * m_modes + m] = overlap_v_cyl(roots.get(p), roots.get(m), a, radius);
            }
        }
        let (left_end, right_end): (Vec<f64>, Vec<f64>) = (0..n_axial)
            .map(|n| match axial {
                Axial::Continuum { .. } => {
                    let end = cosine_mode(length, n, 0.0);
                    (end, if n % 2 == 0 { end } else { -end })
                }
                Axial::Discrete { slices } => {
                    let scale = (length / slices as f64).sqrt();
                    (
                        chain_mode(slices, n, 0.0) / scale,
                        chain_mode(slices, n, (slices - 1) as f64) / scale,
                    )
                }
            })
            .unzip();
        let column = |ends: &[f64], p: usize| -> Vec<f64> {
            basis
                .indices
                .iter()
                .map(|&(n, m)| ends[n] * v[p * m_modes + m])
                .collect()
        };
        let left = (0..channels).map(|p| column(&left_end, p)).collect();
        let right = (0..channels).map(|p| column(&right_end, p)).collect();

        Ok(CylinderModel {
            radius,
            length,
            a,
            axial,
            m_modes,
            channels,
            roots,
            basis,
            v,
            left,
            right,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn waveguide_radius(&self) -> f64 {
        self.a
    }

    pub fn axial(&self) -> Axial {
        self.axial
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn radial_modes(&self) -> usize {
        self.m_modes
    }

    /// Axial step of the mixed representation.
    pub fn a0(&self) -> Option<f64> {
        match self.axial {
            Axial::Continuum { .. } => None,
            Axial::Discrete { slices } => Some(self.length / slices as f64),
        }
    }

    pub fn roots(&self) -> &BesselRootTable {
        &self.roots
    }

    pub fn basis(&self) -> &ResonatorBasis<(usize, usize)> {
        &self.basis
    }

    pub fn overlap(&self, p: usize, m: usize) -> f64 {
        self.v[p * self.m_modes + m]
    }

    pub fn coupling(&self, lead: LeadId, p: usize) -> &[f64] {
        if lead == LeadId::LEFT {
            &self.left[p]
        } else {
            &self.right[p]
        }
    }

    /// Transverse cutoff energy `(mu_p / a)^2` of channel `p`.
    fn cutoff(&self, p: usize) -> f64 {
        (self.roots.get(p) / self.a).powi(2)
    }

    fn discrete_channel(&self, energy: Energy, p: usize, a0: f64) -> LatticeChannel {
        discrete_channel(1.0 - 0.5 * a0 * a0 * (energy.value() - self.cutoff(p)), a0)
    }

    fn axial_value(&self, n: usize, z: f64) -> f64 {
        match self.axial {
            Axial::Continuum { .. } => cosine_mode(self.length, n, z),
            Axial::Discrete { slices } => {
                let a0 = self.length / slices as f64;
                chain_mode(slices, n, z / a0 - 0.5) / a0.sqrt()
            }
        }
    }

    /// Interior field at axial position `z` and radius `r`. In the mixed
    /// representation `z` should sit on a slice center `(j + 1/2) a0`.
    pub fn interior_value(&self, chi: &[Complex64], z: f64, r: f64) -> Complex64 {
        let n_axial = match self.axial {
            Axial::Continuum { modes } => modes,
            Axial::Discrete { slices } => slices,
        };
        let zs: Vec<f64> = (0..n_axial).map(|n| self.axial_value(n, z)).collect();
        let rs: Vec<f64> = (0..self.m_modes)
            .map(|m| radial_mode(self.radius, self.roots.get(m), r))
            .collect();
        self.basis
            .indices
            .iter()
            .zip(chi)
            .map(|(&(n, m), c)| c * (zs[n] * rs[m]))
            .sum()
    }

    /// Lead field at distance `s` from the interface (continuum), or at lead
    /// column `s / a0` rounded to the nearest integer (mixed).
    fn lead_value(
        &self,
        heff: &EffectiveHamiltonian,
        solution: &ScatteringSolution,
        projections: &[Complex64],
        lead: LeadId,
        s: f64,
        r: f64,
    ) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (term, proj) in heff.terms().iter().zip(projections) {
            if term.id.lead != lead {
                continue;
            }
            let incoming = solution
                .channels
                .iter()
                .position(|c| *c == term.id)
                .map(|i| solution.incoming[i])
                .unwrap_or_default();
            let v = match self.a0() {
                None => {
                    let out = (Complex64::i() * term.k * s).exp();
                    let mut v = proj * out;
                    if incoming != Complex64::new(0.0, 0.0) {
                        v += incoming * ((-Complex64::i() * term.k * s).exp() - out)
                            / (4.0 * PI * term.k.re).sqrt();
                    }
                    v
                }
                Some(a0) => {
                    let lambda = self
                        .discrete_channel(solution.energy, term.id.index, a0)
                        .lambda;
                    let col = (s / a0).round() as i32;
                    let out = lambda.powi(col);
                    let mut v = proj * out;
                    if incoming != Complex64::new(0.0, 0.0) {
                        let norm = (a0 / (4.0 * PI * lambda.im)).sqrt();
                        v += incoming * norm * (lambda.powi(-col) - out);
                    }
                    v
                }
            };
            total += v * radial_mode(self.a, self.roots.get(term.id.index), r);
        }
        total
    }

    /// Field on the `(z, r)` half-plane: the resonator plus `spec.stub` of
    /// each lead, `spec.ny` radii in `[0, R]`. The continuum representation
    /// samples `spec.nx` axial positions; the mixed one uses slice centers.
    pub fn field_map(
        &self,
        heff: &EffectiveHamiltonian,
        solution: &ScatteringSolution,
        spec: GridSpec,
    ) -> FieldGrid {
        let projections = heff.channel_projections(&solution.chi);
        let zs = match self.a0() {
            None => linspace(-spec.stub, self.length + spec.stub, spec.nx),
            Some(a0) => {
                let stub = (spec.stub / a0).round() as i64;
                let slices = (self.length / a0).round() as i64;
                (-stub..slices + stub)
                    .map(|j| (j as f64 + 0.5) * a0)
                    .collect()
            }
        };
        let rs = linspace(0.0, self.radius, spec.ny.max(2));
        let mut points = Vec::with_capacity(zs.len() * rs.len());
        for &z in &zs {
            for &r in &rs {
                let value = if (0.0..=self.length).contains(&z) {
                    self.interior_value(&solution.chi, z, r)
                } else if r <= self.a {
                    // mixed leads: column s sits at distance (s - 1/2) a0 from the wall
                    let half = self.a0().map_or(0.0, |a0| 0.5 * a0);
                    let (lead, s) = if z < 0.0 {
                        (LeadId::LEFT, -z + half)
                    } else {
                        (LeadId::RIGHT, z - self.length + half)
                    };
                    self.lead_value(heff, solution, &projections, lead, s, r)
                } else {
                    continue;
                };
                points.push(FieldPoint { x: z, y: r, value });
            }
        }
        FieldGrid {
            axes: ["z", "r"],
            points,
        }
    }
}

impl CylinderModel {
    /// Continuum S-matrix with the axial mode sum done in closed form, so
    /// only the radial and channel truncations remain. Independent of the
    /// axial representation chosen at construction.
    pub fn smatrix_axial_limit(&self, energy: Energy) -> Result<SMatrix> {
        let transverse: Vec<f64> = (0..self.m_modes)
            .map(|m| (self.roots.get(m) / self.radius).powi(2))
            .collect();
        let k: Vec<Complex64> = (0..self.channels)
            .map(|p| {
                let k2 = energy.value() - self.cutoff(p);
                if k2 > 0.0 {
                    Complex64::new(k2.sqrt(), 0.0)
                } else {
                    Complex64::new(0.0, (-k2).sqrt())
                }
            })
            .collect();
        longitudinal_limit_smatrix(
            energy,
            self.length,
            &transverse,
            |p, m| self.overlap(p, m),
            &k,
        )
    }
}

impl ScatteringModel for CylinderModel {
    fn heff(&self, energy: Energy) -> Result<EffectiveHamiltonian> {
        let mut terms = Vec::with_capacity(2 * self.channels);
        for lead in [LeadId::LEFT, LeadId::RIGHT] {
            for p in 0..self.channels {
                let id = ChannelId::new(lead, p);
                let w = self.coupling(lead, p).to_vec();
                match self.a0() {
                    None => {
                        let k2 = energy.value() - self.cutoff(p);
                        if k2 > 0.0 {
                            let k = k2.sqrt();
                            terms.push(ChannelTerm::propagating(
                                id,
                                w,
                                Complex64::new(0.0, -k),
                                (4.0 * PI * k).sqrt(),
                                k,
                            ));
                        } else {
                            let kappa = (-k2).sqrt();
                            if kappa <= EVANESCENT_CUTOFF {
                                terms.push(ChannelTerm::evanescent(
                                    id,
                                    w,
                                    kappa,
                                    Complex64::new(0.0, kappa),
                                ));
                            }
                        }
                    }
                    Some(a0) => {
                        let info = self.discrete_channel(energy, p, a0);
                        let factor = (1.0 - info.lambda) / a0;
                        terms.push(if info.open {
                            let g = (4.0 * PI * info.lambda.im / a0).sqrt();
                            ChannelTerm::propagating(id, w, factor, g, info.k.re)
                        } else {
                            ChannelTerm::evanescent(id, w, factor.re, info.k)
                        });
                    }
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
        let mut t: Vec<f64> = (0..self.channels).map(|p| self.cutoff(p)).collect();
        if let Some(a0) = self.a0() {
            t.extend((0..self.channels).map(|p| self.cutoff(p) + 4.0 / (a0 * a0)));
            t.sort_by(f64::total_cmp);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heff::unitarity_defect;

    const OMEGA_FIELD: f64 = 6.6845;

    fn roots() -> BesselRootTable {
        j1_zeros(12)
    }

    fn transmission(model: &CylinderModel, omega: f64) -> f64 {
        let s = model.smatrix(Energy::from_omega(omega).unwrap()).unwrap();
        s.lead_probability(LeadId::RIGHT, ChannelId::new(LeadId::LEFT, 0))
    }

    #[test]
    fn radial_modes_are_orthonormal() {
        let mu = roots();
        for radius in [1.0, 1.5] {
            for i in 0..10 {
                for j in i..10 {
                    let f = |r: f64| {
                        2.0 * PI
                            * r
                            * radial_mode(radius, mu.get(i), r)
                            * radial_mode(radius, mu.get(j), r)
                    };
                    let v = integrate(f, 0.0, radius, 1e-14).unwrap();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-10, "({i},{j}) radius {radius}: {v}");
                }
            }
        }
    }

    #[test]
    fn overlap_examples() {
        let mu = roots();
        assert!((overlap_v_cyl(0.0, 0.0, 1.0, 1.5) - 1.0 / 1.5).abs() < 1e-15);
        for p in 1..6 {
            assert_eq!(overlap_v_cyl(mu.get(p), 0.0, 1.0, 1.5), 0.0);
            assert!(overlap_v_cyl_quadrature(mu.get(p), 0.0, 1.0, 1.5).abs() < 1e-12);
        }
        let v = overlap_v_cyl(0.0, mu.get(1), 1.0, 1.5);
        let expect = 2.0 / mu.get(1) * bessel_j1(mu.get(1) / 1.5) / bessel_j0(mu.get(1));
        assert!((v - expect).abs() < 1e-14);
        assert!((v - overlap_v_cyl_quadrature(0.0, mu.get(1), 1.0, 1.5)).abs() < 1e-12);
        assert!((v + 0.626_158_594_390_6).abs() < 1e-12, "{v}");
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let mu = roots();
        for radius in [1.5, 2.0] {
            for p in 0..=10 {
                for m in 0..=10 {
                    let c = overlap_v_cyl(mu.get(p), mu.get(m), 1.0, radius);
                    let q = overlap_v_cyl_quadrature(mu.get(p), mu.get(m), 1.0, radius);
                    assert!((c - q).abs() < 1e-10, "R={radius} p={p} m={m}: {c} vs {q}");
                }
            }
        }
    }

    #[test]
    fn degenerate_denominator_uses_quadrature() {
        let mu = roots();
        // mu_2 a = mu_1 R makes the closed form 0/0
        let radius = mu.get(2) / mu.get(1);
        let v = overlap_v_cyl(mu.get(1), mu.get(2), 1.0, radius);
        assert!(v.is_finite());
        assert!((v - overlap_v_cyl_quadrature(mu.get(1), mu.get(2), 1.0, radius)).abs() < 1e-12);
        // and the closed form is continuous across the degenerate point
        let near = overlap_v_cyl(mu.get(1), mu.get(2), 1.0, radius * (1.0 + 1e-6));
        assert!((v - near).abs() < 1e-5, "{v} vs {near}");
    }

    #[test]
    fn mode_energies() {
        let model = CylinderModel::continuum(1.5, 3.5, 1.0, 4, 4, 2).unwrap();
        assert_eq!(model.basis().energies[0], 0.0);
        let (pos, _) = model
            .basis()
            .iter()
            .enumerate()
            .find(|(_, (idx, _))| *idx == (0, 1))
            .unwrap();
        assert!((model.basis().energies[pos] - 6.525_320_3).abs() < 1e-6);
        let (pos, _) = model
            .basis()
            .iter()
            .enumerate()
            .find(|(_, (idx, _))| *idx == (1, 0))
            .unwrap();
        assert!((model.basis().energies[pos] - (PI / 3.5).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn discrete_axial_energies_converge_quadratically() {
        let mode = 3;
        let err = |slices: usize| {
            let a0 = 3.5 / slices as f64;
            chain_energy(slices, mode) / (a0 * a0) - (PI * mode as f64 / 3.5).powi(2)
        };
        let (e20, e40, e80) = (err(20), err(40), err(80));
        for ratio in [e20 / e40, e40 / e80] {
            assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
        }
    }

    #[test]
    fn unitary_and_reciprocal_in_both_representations() {
        for radius in [1.5, 2.0] {
            let models = [
                CylinderModel::continuum(radius, 3.5, 1.0, 12, 10, 6).unwrap(),
                CylinderModel::mixed(radius, 3.5, 1.0, 20, 10, 6).unwrap(),
            ];
            for model in &models {
                for omega in [1.0, 3.0, 5.0, OMEGA_FIELD, 8.0] {
                    let e = Energy::from_omega(omega).unwrap();
                    let h = model.heff(e).unwrap();
                    for t in h.terms() {
                        t.check_invariants().unwrap();
                    }
                    let s = h.smatrix(e).unwrap();
                    assert!(unitarity_defect(s.matrix.as_ref()) < 1e-10);
                    assert!(s.reciprocity_defect() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn single_channel_below_second_threshold() {
        let model = CylinderModel::continuum(1.5, 3.5, 1.0, 10, 8, 5).unwrap();
        let omega = 0.9 * roots().get(1);
        let s = model.smatrix(Energy::from_omega(omega).unwrap()).unwrap();
        assert_eq!(s.matrix.nrows(), 2);
        assert!(unitarity_defect(s.matrix.as_ref()) < 1e-10);
    }

    #[test]
    fn mixed_approaches_continuum_as_slices_grow() {
        let cont = CylinderModel::continuum(1.5, 3.5, 1.0, 20, 10, 6).unwrap();
        let omegas = [2.0, 3.0, 4.5, 5.5];
        let diff = |slices: usize| {
            let mixed = CylinderModel::mixed(1.5, 3.5, 1.0, slices, 10, 6).unwrap();
            omegas
                .iter()
                .map(|&w| (transmission(&mixed, w) - transmission(&cont, w)).abs())
                .fold(0.0, f64::max)
        };
        let (d10, d40) = (diff(10), diff(40));
        assert!(d40 < d10, "{d10} {d40}");
        assert!(d40 < 0.05, "{d40}");
    }

    #[test]
    fn field_is_finite_on_axis_and_vanishes_without_drive() {
        for model in [
            CylinderModel::continuum(1.5, 3.5, 1.0, 12, 10, 6).unwrap(),
            CylinderModel::mixed(1.5, 3.5, 1.0, 20, 10, 6).unwrap(),
        ] {
            let e = Energy::from_omega(OMEGA_FIELD).unwrap();
            let (h, sol) = model
                .scatter(e, ChannelId::new(LeadId::LEFT, 0), Complex64::new(1.0, 0.0))
                .unwrap();
            let spec = GridSpec {
                nx: 41,
                ny: 11,
                stub: 0.5,
            };
            let g = model.field_map(&h, &sol, spec);
            assert!(g.is_finite());
            assert!(g.points.iter().any(|p| p.y == 0.0));
            assert!(g.max_abs() > 0.0);
            let zero = vec![Complex64::new(0.0, 0.0); h.open_channels().len()];
            let sol = h.scatter(e, &zero).unwrap();
            assert_eq!(model.field_map(&h, &sol, spec).max_abs(), 0.0);
        }
    }

    #[test]
    fn lead_field_continues_interior_field() {
        // the interior expansion and the lead expansion meet at the interface
        let model = CylinderModel::continuum(1.5, 3.5, 1.0, 40, 12, 8).unwrap();
        let e = Energy::from_omega(3.0).unwrap();
        let (h, sol) = model
            .scatter(e, ChannelId::new(LeadId::LEFT, 0), Complex64::new(1.0, 0.0))
            .unwrap();
        let proj = h.channel_projections(&sol.chi);
        let (mut diff, mut norm) = (0.0, 0.0);
        for i in 0..20 {
            let r = (i as f64 + 0.5) / 20.0;
            let inner = model.interior_value(&sol.chi, 0.0, r);
            let outer = model.lead_value(&h, &sol, &proj, LeadId::LEFT, 0.0, r);
            diff += (inner - outer).norm_sqr() * r;
            norm += inner.norm_sqr() * r;
        }
        assert!((diff / norm).sqrt() < 0.1, "{}", (diff / norm).sqrt());
    }

    #[test]
    fn axial_limit_brackets_both_representations() {
        // continuum approaches from one side like 1/n, mixed like a0^2
        let omega = 5.964;
        let e = Energy::from_omega(omega).unwrap();
        let limit = {
            let m = CylinderModel::continuum(1.5, 3.5, 1.0, 1, 20, 10).unwrap();
            m.smatrix_axial_limit(e)
                .unwrap()
                .lead_probability(LeadId::RIGHT, ChannelId::new(LeadId::LEFT, 0))
        };
        let cont: Vec<f64> = [40, 80]
            .iter()
            .map(|&n| {
                transmission(
                    &CylinderModel::continuum(1.5, 3.5, 1.0, n, 20, 10).unwrap(),
                    omega,
                )
            })
            .collect();
        let mixed: Vec<f64> = [40, 80]
            .iter()
            .map(|&n| {
                transmission(
                    &CylinderModel::mixed(1.5, 3.5, 1.0, n, 20, 10).unwrap(),
                    omega,
                )
            })
            .collect();
        assert!(
            (2.0 * cont[1] - cont[0] - limit).abs() < 5e-3,
            "{cont:?} {limit}"
        );
        assert!(
            ((4.0 * mixed[1] - mixed[0]) / 3.0 - limit).abs() < 5e-3,
            "{mixed:?} {limit}"
        );
    }
}
