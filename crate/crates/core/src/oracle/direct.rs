use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;

use crate::chain::{ChainLeads, ChainModel};
use crate::error::{CmtError, Result};
use crate::heff::{ChannelId, Energy, LeadId, SMatrix};
use crate::lattice::Lattice2DModel;
use crate::linalg;

/// Result of a direct wave-matching solve.
#[derive(Debug, Clone)]
pub struct DirectSolution {
    pub energy: Energy,
    pub smatrix: SMatrix,
    /// Site amplitudes, one column per open incoming channel (ordered as
    /// `smatrix.channels`) for a unit flux-normalized incoming amplitude.
    /// Row `j * M + l` holds site `(j, l)`; for the chain row `j` is site `j`.
    pub sites: Mat<Complex64>,
}

impl DirectSolution {
    /// `(r, t)` for a wave incident from the left.
    pub fn reflection_transmission(&self) -> (Complex64, Option<Complex64>) {
        let left = ChannelId::new(LeadId::LEFT, 0);
        let col = self.smatrix.position(left).unwrap_or(0);
        let r = self.smatrix.matrix[(col, col)];
        let t = self
            .smatrix
            .position(ChannelId::new(LeadId::RIGHT, 0))
            .map(|row| self.smatrix.matrix[(row, col)]);
        (r, t)
    }
}

/// One lead channel attached to a set of interior rows.
struct Attachment {
    id: ChannelId,
    /// `(site index, transverse amplitude)` pairs on the interface column.
    profile: Vec<(usize, f64)>,
    /// Bond from the interface column into the lead.
    hopping: f64,
    lambda: Complex64,
    open: bool,
    /// Lead wave amplitude carrying unit flux.
    norm: f64,
}

/// Assembles and solves `(H - E) psi = lead terms` together with one matching
/// row per attachment. The lead field is `A lambda^{-s} + B lambda^{s}` at
/// distance `s` beyond the interface column, where `A` is incoming.
fn solve_matched(
    energy: Energy,
    sites: usize,
    stencil: impl Fn(&mut Mat<Complex64>),
    leads: Vec<Attachment>,
) -> Result<DirectSolution> {
    let open: Vec<usize> = (0..leads.len()).filter(|&i| leads[i].open).collect();
    if open.is_empty() {
        return Err(CmtError::NoOpenChannel {
            energy: energy.value(),
        });
    }
    let dim = sites + leads.len();
    let mut a = Mat::<Complex64>::zeros(dim, dim);
    stencil(&mut a);
    for i in 0..sites {
        a[(i, i)] -= energy.value();
    }
    for (c, lead) in leads.iter().enumerate() {
        let col = sites + c;
        for &(site, phi) in &lead.profile {
            // neighbor value -hopping * psi_lead(1) with psi_lead(1) = A / lambda + B lambda
            a[(site, col)] -= lead.hopping * phi * lead.lambda;
            // matching: hopping * <phi|psi_interface> - B = A
            a[(col, site)] += lead.hopping * phi;
        }
        a[(col, col)] = Complex64::new(-1.0, 0.0);
    }
    let lu = a.partial_piv_lu();
    let condition = linalg::condition_estimate(a.as_ref(), &lu);
    if !condition.is_finite() || condition > linalg::CONDITION_LIMIT {
        return Err(CmtError::NumericalDegeneracy {
            energy: energy.value(),
            condition,
        });
    }
    let mut rhs = Mat::<Complex64>::zeros(dim, open.len());
    for (k, &c) in open.iter().enumerate() {
        let lead = &leads[c];
        let amp = Complex64::new(lead.norm, 0.0);
        for &(site, phi) in &lead.profile {
            rhs[(site, k)] += lead.hopping * phi * amp / lead.lambda;
        }
        rhs[(sites + c, k)] = amp;
    }
    let x = lu.solve(&rhs);
    let matrix = Mat::<Complex64>::from_fn(open.len(), open.len(), |r, k| {
        x[(sites + open[r], k)] / leads[open[r]].norm
    });
    Ok(DirectSolution {
        energy,
        smatrix: SMatrix {
            channels: open.iter().map(|&c| leads[c].id).collect(),
            matrix,
        },
        sites: x.subrows(0, sites).to_owned(),
    })
}

/// Direct solution of the chain lattice equations with plane-wave leads.
pub fn direct_scattering_chain(model: &ChainModel, energy: Energy) -> Result<DirectSolution> {
    let e = energy.value();
    if !(e > 0.0 && e < 4.0) {
        return Err(CmtError::NoOpenChannel { energy: e });
    }
    let n = model.sites();
    let t = model.hopping();
    let cos_k = 1.0 - 0.5 * e;
    let lambda = Complex64::new(cos_k, (1.0 - cos_k * cos_k).sqrt());
    let norm = 1.0 / (4.0 * PI * lambda.im).sqrt();
    let leads = model.leads();
    let stencil = |a: &mut Mat<Complex64>| {
        for j in 0..n {
            let mut diag = 0.0;
            if j > 0 {
                a[(j, j - 1)] = Complex64::new(-1.0, 0.0);
                diag += 1.0;
            }
            if j + 1 < n {
                a[(j, j + 1)] = Complex64::new(-1.0, 0.0);
                diag += 1.0;
            }
            // a lead bond, however weak, replaces the free Neumann end
            if (j == 0 && leads.has_left()) || (j == n - 1 && leads.has_right()) {
                diag += if n == 1 && leads == ChainLeads::Both {
                    2.0
                } else {
                    1.0
                };
            }
            a[(j, j)] = Complex64::new(diag, 0.0);
        }
    };
    let mut attachments = Vec::new();
    for (lead, site, present) in [
        (LeadId::LEFT, 0, leads.has_left()),
        (LeadId::RIGHT, n - 1, leads.has_right()),
    ] {
        if present {
            attachments.push(Attachment {
                id: ChannelId::new(lead, 0),
                profile: vec![(site, 1.0)],
                hopping: t,
                lambda,
                open: true,
                norm,
            });
        }
    }
    solve_matched(energy, n, stencil, attachments)
}

/// Direct solution of the 2D finite-difference equations, with every
/// transverse channel of both leads matched exactly (evanescent ones on
/// their decaying branch).
pub fn direct_scattering_lattice2d(
    model: &Lattice2DModel,
    energy: Energy,
) -> Result<DirectSolution> {
    let (n, m, p, a0) = (model.n(), model.m(), model.p(), model.a0());
    let offset = model.offset();
    let a2 = a0 * a0;
    let idx = |j: usize, l: usize| j * m + l;
    let scaled = Energy::new(energy.value() * a2)?;
    let attached = |l: usize| l >= offset && l < offset + p;

    let stencil = |a: &mut Mat<Complex64>| {
        for j in 0..n {
            for l in 0..m {
                let i = idx(j, l);
                let mut diag = 0.0;
                let mut link = |a: &mut Mat<Complex64>, other: usize| {
                    a[(i, other)] = Complex64::new(-1.0, 0.0);
                    diag += 1.0;
                };
                if j > 0 {
                    link(a, idx(j - 1, l));
                }
                if j + 1 < n {
                    link(a, idx(j + 1, l));
                }
                if l > 0 {
                    link(a, idx(j, l - 1));
                }
                if l + 1 < m {
                    link(a, idx(j, l + 1));
                }
                if attached(l) {
                    if j == 0 {
                        diag += 1.0;
                    }
                    if j == n - 1 {
                        diag += 1.0;
                    }
                }
                a[(i, i)] = Complex64::new(diag, 0.0);
            }
        }
    };

    let mut attachments = Vec::with_capacity(2 * p);
    for (lead, column) in [(LeadId::LEFT, 0), (LeadId::RIGHT, n - 1)] {
        for ch in 0..p {
            // cos(k a0) = 2 - cos(pi p / P) - a0^2 E / 2
            let c = 2.0 - (PI * ch as f64 / p as f64).cos() - 0.5 * scaled.value();
            let (lambda, open) = if c.abs() < 1.0 {
                (Complex64::new(c, (1.0 - c * c).sqrt()), true)
            } else if c >= 1.0 {
                (Complex64::new(c - (c * c - 1.0).sqrt(), 0.0), false)
            } else {
                (Complex64::new(c + (c * c - 1.0).sqrt(), 0.0), false)
            };
            let profile = (0..p)
                .map(|l| {
                    let phi = if ch == 0 {
                        (1.0 / p as f64).sqrt()
                    } else {
                        (2.0 / p as f64).sqrt()
                            * (PI * ch as f64 * (l as f64 + 0.5) / p as f64).cos()
                    };
                    (idx(column, l + offset), phi)
                })
                .collect();
            let norm = if open {
                a0 / (4.0 * PI * lambda.im).sqrt()
            } else {
                1.0
            };
            attachments.push(Attachment {
                id: ChannelId::new(lead, ch),
                profile,
                hopping: 1.0,
                lambda,
                open,
                norm,
            });
        }
    }
    match solve_matched(scaled, n * m, stencil, attachments) {
        Ok(mut s) => {
            s.energy = energy;
            Ok(s)
        }
        Err(CmtError::NoOpenChannel { .. }) => Err(CmtError::NoOpenChannel {
            energy: energy.value(),
        }),
        Err(CmtError::NumericalDegeneracy { condition, .. }) => {
            Err(CmtError::NumericalDegeneracy {
                energy: energy.value(),
                condition,
            })
        }
        Err(other) => Err(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::chain_transmission;
    use crate::model::ScatteringModel;

    fn energy(e: f64) -> Energy {
        Energy::new(e).unwrap()
    }

    #[test]
    fn uniform_chain_is_transparent() {
        for n in [1, 2, 6] {
            let model = ChainModel::new(n, 1.0, ChainLeads::Both).unwrap();
            for e in [0.1, 1.0, 2.5, 3.9] {
                let (_, t) = direct_scattering_chain(&model, energy(e))
                    .unwrap()
                    .reflection_transmission();
                assert!((t.unwrap().norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decoupled_chain_reflects() {
        let model = ChainModel::new(4, 0.0, ChainLeads::Both).unwrap();
        let s = direct_scattering_chain(&model, energy(1.3)).unwrap();
        let (r, t) = s.reflection_transmission();
        assert!((r.norm() - 1.0).abs() < 1e-12);
        assert_eq!(t.unwrap().norm(), 0.0);
    }

    #[test]
    fn flux_conservation_independent_of_cmt() {
        for n in [1, 3, 5, 7] {
            for t in [0.1, 0.4, 0.8] {
                let model = ChainModel::new(n, t, ChainLeads::Both).unwrap();
                for i in 1..20 {
                    let s = direct_scattering_chain(&model, energy(0.2 * i as f64)).unwrap();
                    assert!(s.smatrix.unitarity_defect() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn chain_matches_effective_hamiltonian_including_phase() {
        for leads in [ChainLeads::Both, ChainLeads::Left, ChainLeads::Right] {
            let model = ChainModel::new(5, 0.4, leads).unwrap();
            for e in [0.3, 1.0, 2.2, 3.7] {
                let direct = direct_scattering_chain(&model, energy(e)).unwrap().smatrix;
                let cmt = model.smatrix(energy(e)).unwrap();
                assert_eq!(direct.channels, cmt.channels);
                for r in 0..cmt.dim() {
                    for c in 0..cmt.dim() {
                        assert!((direct.matrix[(r, c)] - cmt.matrix[(r, c)]).norm() < 1e-10);
                    }
                }
            }
        }
        let model = ChainModel::new(5, 0.4, ChainLeads::Both).unwrap();
        let t_direct = direct_scattering_chain(&model, energy(1.0))
            .unwrap()
            .reflection_transmission()
            .1
            .unwrap();
        let t_cmt = chain_transmission(&model, energy(1.0))
            .unwrap()
            .transmission;
        assert!((t_direct.norm_sqr() - t_cmt).abs() < 1e-10);
    }

    #[test]
    fn lattice_matches_effective_hamiltonian() {
        let model = Lattice2DModel::new(5, 8, 4, 0.2).unwrap();
        for e in [5.0, 30.0, 70.0, 140.0] {
            let direct = direct_scattering_lattice2d(&model, energy(e)).unwrap();
            let cmt = model.smatrix(energy(e)).unwrap();
            assert_eq!(direct.smatrix.channels, cmt.channels);
            assert!(direct.smatrix.unitarity_defect() < 1e-12);
            for r in 0..cmt.dim() {
                for c in 0..cmt.dim() {
                    assert!(
                        (direct.smatrix.matrix[(r, c)] - cmt.matrix[(r, c)]).norm() < 1e-10,
                        "E={e} ({r},{c})"
                    );
                }
            }
        }
    }

    #[test]
    fn lattice_sites_match_interior_expansion() {
        let model = Lattice2DModel::new(4, 6, 2, 0.25).unwrap();
        let e = energy(20.0);
        let direct = direct_scattering_lattice2d(&model, e).unwrap();
        let (_, sol) = model
            .scatter(e, ChannelId::new(LeadId::LEFT, 0), Complex64::new(1.0, 0.0))
            .unwrap();
        for j in 0..4 {
            for l in 0..6 {
                let v = model.interior_value(&sol.chi, j, l);
                assert!((v - direct.sites[(j * 6 + l, 0)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn unit_width_lattice_is_uniform_chain() {
        let lattice = Lattice2DModel::new(5, 1, 1, 1.0).unwrap();
        let chain = ChainModel::new(5, 1.0, ChainLeads::Both).unwrap();
        for e in [0.4, 1.7, 3.1] {
            let a = direct_scattering_lattice2d(&lattice, energy(e))
                .unwrap()
                .smatrix;
            let b = direct_scattering_chain(&chain, energy(e)).unwrap().smatrix;
            for r in 0..2 {
                for c in 0..2 {
                    assert!((a.matrix[(r, c)] - b.matrix[(r, c)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn below_threshold_has_no_open_channel() {
        let model = Lattice2DModel::new(3, 4, 2, 0.1).unwrap();
        assert!(matches!(
            direct_scattering_lattice2d(&model, energy(-2.0)),
            Err(CmtError::NoOpenChannel { .. })
        ));
        let chain = ChainModel::new(3, 0.5, ChainLeads::Both).unwrap();
        assert!(direct_scattering_chain(&chain, energy(4.5)).is_err());
    }
}
