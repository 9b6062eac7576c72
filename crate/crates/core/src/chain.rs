//! Tight-binding chain resonator of `N` sites coupled by hopping `t` to one
//! or two semi-infinite uniform leads.
//!
//! The closed resonator carries Neumann ends, so its eigenmodes are
//! `psi_1(j) = 1/sqrt(N)` and `psi_m(j) = sqrt(2/N) cos(k_m (j + 1/2))` with
//! `k_m = pi (m - 1) / N` and `E_m = 2 - 2 cos k_m`. Each attached lead adds
//! `(1 - t^2 e^{ik}) w w^T` to `H_eff`, where `w` is the mode amplitude at
//! the interface site.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{CmtError, Result};
use crate::heff::{ChannelId, ChannelTerm, EffectiveHamiltonian, Energy, LeadId, SMatrix};
use crate::model::ScatteringModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainLeads {
    Left,
    Right,
    Both,
}

impl ChainLeads {
    pub fn has_left(self) -> bool {
        matches!(self, ChainLeads::Left | ChainLeads::Both)
    }

    pub fn has_right(self) -> bool {
        matches!(self, ChainLeads::Right | ChainLeads::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    sites: usize,
    hopping: f64,
    leads: ChainLeads,
    basis: ChainEigenbasis,
}

impl ChainModel {
    pub fn new(sites: usize, hopping: f64, leads: ChainLeads) -> Result<Self> {
        if sites < 1 {
            return Err(CmtError::invalid("chain needs at least one site"));
        }
        if !(hopping.is_finite() && hopping >= 0.0) {
            return Err(CmtError::invalid(format!(
                "hopping must be finite and non-negative, got {hopping}"
            )));
        }
        if hopping > 1.0 {
            log::warn!("lead hopping t = {hopping} exceeds the bulk hopping; outside the weak-coupling picture");
        }
        Ok(ChainModel {
            sites,
            hopping,
            leads,
            basis: chain_eigenbasis(sites)?,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    pub fn leads(&self) -> ChainLeads {
        self.leads
    }

    pub fn basis(&self) -> &ChainEigenbasis {
        &self.basis
    }

    /// Hamiltonian of the chain with the leads removed (`t = 0`): diagonal 2
    /// at lead-attached ends, 1 at free Neumann ends.
    pub fn closed_chain_matrix(&self) -> Mat<f64> {
        let n = self.sites;
        let mut h = neumann_matrix(n);
        if self.leads.has_left() {
            h[(0, 0)] += 1.0;
        }
        if self.leads.has_right() {
            h[(n - 1, n - 1)] += 1.0;
        }
        h
    }
}

/// The `N x N` chain Laplacian with Neumann corners (diagonal 1 at both ends).
pub fn neumann_matrix(n: usize) -> Mat<f64> {
    let mut h = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        h[(j, j)] = 2.0;
        if j + 1 < n {
            h[(j, j + 1)] = -1.0;
            h[(j + 1, j)] = -1.0;
        }
    }
    h[(0, 0)] -= 1.0;
    h[(n - 1, n - 1)] -= 1.0;
    h
}

/// Eigenmodes of the Neumann chain, 0-based (`mode = 0` is the constant mode).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainEigenbasis {
    sites: usize,
    pub momenta: Vec<f64>,
    pub energies: Vec<f64>,
}

impl ChainEigenbasis {
    pub fn len(&self) -> usize {
        self.sites
    }

    pub fn is_empty(&self) -> bool {
        self.sites == 0
    }

    pub fn psi(&self, mode: usize, site: usize) -> f64 {
        chain_mode(self.sites, mode, site as f64)
    }

    /// Amplitudes of every mode on one site.
    pub fn column(&self, site: usize) -> Vec<f64> {
        (0..self.sites).map(|m| self.psi(m, site)).collect()
    }
}

/// Neumann chain eigenfunction evaluated at (possibly fractional) site `j`.
pub(crate) fn chain_mode(n: usize, mode: usize, j: f64) -> f64 {
    let nf = n as f64;
    if mode == 0 {
        (1.0 / nf).sqrt()
    } else {
        (2.0 / nf).sqrt() * (PI * mode as f64 / nf * (j + 0.5)).cos()
    }
}

pub(crate) fn chain_energy(n: usize, mode: usize) -> f64 {
    2.0 - 2.0 * (PI * mode as f64 / n as f64).cos()
}

pub fn chain_eigenbasis(sites: usize) -> Result<ChainEigenbasis> {
    if sites < 1 {
        return Err(CmtError::invalid("chain needs at least one site"));
    }
    let momenta: Vec<f64> = (0..sites).map(|m| PI * m as f64 / sites as f64).collect();
    let energies = (0..sites).map(|m| chain_energy(sites, m)).collect();
    Ok(ChainEigenbasis {
        sites,
        momenta,
        energies,
    })
}

/// Root of `E = 2 - 2 cos k`: real `k` in `[0, pi]` inside the band, `Im k > 0`
/// outside it (`Re k = pi` above the band).
pub fn chain_dispersion(energy: Energy) -> Complex64 {
    let c = 1.0 - 0.5 * energy.value();
    if c.abs() <= 1.0 {
        Complex64::new(c.acos(), 0.0)
    } else if c > 1.0 {
        Complex64::new(0.0, c.acosh())
    } else {
        Complex64::new(PI, (-c).acosh())
    }
}

/// One [`ChannelTerm`] per attached lead.
pub fn chain_channel_terms(model: &ChainModel, energy: Energy) -> Result<Vec<ChannelTerm>> {
    let e = energy.value();
    if !(e > 0.0 && e < 4.0) {
        return Err(CmtError::NoOpenChannel { energy: e });
    }
    let k = chain_dispersion(energy).re;
    let t = model.hopping;
    let factor = 1.0 - t * t * Complex64::from_polar(1.0, k);
    let extraction = t * (4.0 * PI * k.sin()).sqrt();
    let mut terms = Vec::with_capacity(2);
    if model.leads.has_left() {
        terms.push(ChannelTerm::propagating(
            ChannelId::new(LeadId::LEFT, 0),
            model.basis.column(0),
            factor,
            extraction,
            k,
        ));
    }
    if model.leads.has_right() {
        terms.push(ChannelTerm::propagating(
            ChannelId::new(LeadId::RIGHT, 0),
            model.basis.column(model.sites - 1),
            factor,
            extraction,
            k,
        ));
    }
    Ok(terms)
}

impl ScatteringModel for ChainModel {
    fn heff(&self, energy: Energy) -> Result<EffectiveHamiltonian> {
        let terms = chain_channel_terms(self, energy)?;
        EffectiveHamiltonian::assemble(self.basis.energies.clone(), terms)
    }

    fn thresholds(&self) -> Vec<f64> {
        vec![0.0, 4.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainTransmission {
    pub transmission: f64,
    pub reflection: Complex64,
    pub transmission_amplitude: Complex64,
}

/// Transmission of a two-lead chain for a wave incident from the left.
pub fn chain_transmission(model: &ChainModel, energy: Energy) -> Result<ChainTransmission> {
    if model.leads != ChainLeads::Both {
        return Err(CmtError::invalid(
            "transmission needs a chain with two leads",
        ));
    }
    let s = model.smatrix(energy)?;
    let left = ChannelId::new(LeadId::LEFT, 0);
    let right = ChannelId::new(LeadId::RIGHT, 0);
    let t = s.amplitude(right, left);
    Ok(ChainTransmission {
        transmission: t.norm_sqr(),
        reflection: s.amplitude(left, left),
        transmission_amplitude: t,
    })
}

/// `H_eff` in site coordinates, `Psi H_eff Psi^T`.
pub fn coordinate_heff(model: &ChainModel, energy: Energy) -> Result<Mat<Complex64>> {
    let h = model.heff(energy)?;
    let n = model.sites;
    let psi = Mat::<Complex64>::from_fn(n, n, |j, m| Complex64::new(model.basis.psi(m, j), 0.0));
    Ok(&psi * h.matrix() * psi.transpose())
}

/// `H_D - t^2 e^{ik}` on the lead-attached end sites, written down directly.
pub fn dirichlet_heff(model: &ChainModel, energy: Energy) -> Result<Mat<Complex64>> {
    let e = energy.value();
    if !(e > 0.0 && e < 4.0) {
        return Err(CmtError::NoOpenChannel { energy: e });
    }
    let k = chain_dispersion(energy).re;
    let n = model.sites;
    let closed = model.closed_chain_matrix();
    let mut h = Mat::<Complex64>::from_fn(n, n, |i, j| Complex64::new(closed[(i, j)], 0.0));
    let shift = model.hopping * model.hopping * Complex64::from_polar(1.0, k);
    if model.leads.has_left() {
        h[(0, 0)] -= shift;
    }
    if model.leads.has_right() {
        h[(n - 1, n - 1)] -= shift;
    }
    Ok(h)
}

/// S-matrix from the site-coordinate form, with unit-vector couplings on the
/// end sites. Independent of the Neumann eigenbasis.
pub fn dirichlet_smatrix(model: &ChainModel, energy: Energy) -> Result<SMatrix> {
    let h = dirichlet_heff(model, energy)?;
    let n = model.sites;
    let k = chain_dispersion(energy).re;
    let g = model.hopping * (4.0 * PI * k.sin()).sqrt();
    let mut ends = Vec::new();
    if model.leads.has_left() {
        ends.push((ChannelId::new(LeadId::LEFT, 0), 0));
    }
    if model.leads.has_right() {
        ends.push((ChannelId::new(LeadId::RIGHT, 0), n - 1));
    }
    let mut a = h;
    for i in 0..n {
        a[(i, i)] -= e_of(energy);
    }
    let lu = a.partial_piv_lu();
    let rhs = Mat::<Complex64>::from_fn(n, ends.len(), |i, c| {
        if i == ends[c].1 {
            Complex64::new(0.0, -g / (2.0 * PI))
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let x = faer::linalg::solvers::Solve::solve(&lu, &rhs);
    let matrix = Mat::<Complex64>::from_fn(ends.len(), ends.len(), |r, c| {
        let delta = if r == c { 1.0 } else { 0.0 };
        g * x[(ends[r].1, c)] - delta
    });
    Ok(SMatrix {
        channels: ends.iter().map(|e| e.0).collect(),
        matrix,
    })
}

fn e_of(energy: Energy) -> f64 {
    energy.value()
}
