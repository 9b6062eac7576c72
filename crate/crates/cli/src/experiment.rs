//! Turns a validated configuration into a concrete scattering model.

use cmt_core::chain::{ChainLeads, ChainModel};
use cmt_core::cylinder::CylinderModel;
use cmt_core::lattice::Lattice2DModel;
use cmt_core::rect::RectModel;
use cmt_core::{
    ChannelId, CmtError, Complex64, EffectiveHamiltonian, Energy, FieldGrid, FieldPoint, GridSpec,
    LeadId, Result, SMatrix, ScatteringModel, ScatteringSolution,
};

use crate::config::{Evaluation, ModelSpec};

#[derive(Debug, Clone)]
pub enum Model {
    Chain(ChainModel),
    Lattice(Lattice2DModel),
    Continuum {
        model: RectModel,
        evaluation: Evaluation,
    },
    Cylinder {
        model: CylinderModel,
        evaluation: Evaluation,
    },
}

impl Model {
    pub fn build(spec: &ModelSpec) -> Result<Self> {
        Ok(match *spec {
            ModelSpec::Chain {
                sites,
                hopping,
                leads,
            } => Model::Chain(ChainModel::new(sites, hopping, leads)?),
            ModelSpec::Lattice { n, m, p, a0 } => Model::Lattice(Lattice2DModel::new(n, m, p, a0)?),
            ModelSpec::Continuum {
                lx,
                ly,
                d,
                n_max,
                m_max,
                p_max,
                evaluation,
            } => Model::Continuum {
                model: RectModel::new(lx, ly, d, n_max, m_max, p_max)?,
                evaluation,
            },
            ModelSpec::Cylinder {
                radius,
                length,
                a,
                n_max,
                m_max,
                p_max,
                evaluation,
            } => Model::Cylinder {
                model: CylinderModel::continuum(radius, length, a, n_max, m_max, p_max)?,
                evaluation,
            },
            ModelSpec::CylinderMixed {
                radius,
                length,
                a,
                slices,
                m_max,
                p_max,
            } => Model::Cylinder {
                model: CylinderModel::mixed(radius, length, a, slices, m_max, p_max)?,
                evaluation: Evaluation::Modes,
            },
        })
    }

    fn as_scattering(&self) -> &dyn ScatteringModel {
        match self {
            Model::Chain(m) => m,
            Model::Lattice(m) => m,
            Model::Continuum { model, .. } => model,
            Model::Cylinder { model, .. } => model,
        }
    }

    fn closed_form(&self) -> bool {
        matches!(
            self,
            Model::Continuum {
                evaluation: Evaluation::ClosedForm,
                ..
            } | Model::Cylinder {
                evaluation: Evaluation::ClosedForm,
                ..
            }
        )
    }

    /// The lead waves enter from: left, unless a chain only has a right lead.
    pub fn source_lead(&self) -> LeadId {
        match self {
            Model::Chain(c) if c.leads() == ChainLeads::Right => LeadId::RIGHT,
            _ => LeadId::LEFT,
        }
    }

    /// The opposite lead, if the model has one.
    pub fn drain_lead(&self) -> Option<LeadId> {
        match self {
            Model::Chain(c) if c.leads() != ChainLeads::Both => None,
            _ => Some(if self.source_lead() == LeadId::LEFT {
                LeadId::RIGHT
            } else {
                LeadId::LEFT
            }),
        }
    }

    /// Number of transverse channels per lead kept in the model.
    pub fn channel_count(&self) -> usize {
        match self {
            Model::Chain(_) => 1,
            Model::Lattice(m) => m.p(),
            Model::Continuum { model, .. } => model.channels(),
            Model::Cylinder { model, .. } => model.channels(),
        }
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.as_scattering().thresholds()
    }

    pub fn heff(&self, energy: Energy) -> Result<EffectiveHamiltonian> {
        if self.closed_form() {
            return Err(CmtError::InvalidInput(
                "closed-form evaluation has no explicit effective Hamiltonian; use `evaluation = modes`".into(),
            ));
        }
        self.as_scattering().heff(energy)
    }

    pub fn smatrix(&self, energy: Energy) -> Result<SMatrix> {
        match self {
            Model::Continuum {
                model,
                evaluation: Evaluation::ClosedForm,
            } => model.smatrix_longitudinal_limit(energy),
            Model::Cylinder {
                model,
                evaluation: Evaluation::ClosedForm,
            } => model.smatrix_axial_limit(energy),
            _ => self.as_scattering().smatrix(energy),
        }
    }

    /// Scattering state for `amplitude` in channel `index` of the source lead.
    pub fn scatter(
        &self,
        energy: Energy,
        index: usize,
        amplitude: f64,
    ) -> Result<(EffectiveHamiltonian, ScatteringSolution)> {
        let heff = self.heff(energy)?;
        let channel = ChannelId::new(self.source_lead(), index);
        let open = heff.open_channels();
        let pos = open.iter().position(|c| *c == channel).ok_or_else(|| {
            CmtError::InvalidInput(format!(
                "incoming channel {channel} is not open at E = {energy}"
            ))
        })?;
        let mut incoming = vec![Complex64::new(0.0, 0.0); open.len()];
        incoming[pos] = Complex64::new(amplitude, 0.0);
        let solution = heff.scatter(energy, &incoming)?;
        Ok((heff, solution))
    }

    /// Complex pressure map for a wave entering through channel `index`.
    pub fn field(
        &self,
        energy: Energy,
        index: usize,
        amplitude: f64,
        grid: GridSpec,
    ) -> Result<FieldGrid> {
        let (heff, solution) = self.scatter(energy, index, amplitude)?;
        Ok(match self {
            Model::Chain(chain) => {
                let basis = chain.basis();
                let points = (0..chain.sites())
                    .map(|j| FieldPoint {
                        x: j as f64,
                        y: 0.0,
                        value: solution
                            .chi
                            .iter()
                            .enumerate()
                            .map(|(m, c)| c * basis.psi(m, j))
                            .sum(),
                    })
                    .collect();
                FieldGrid {
                    axes: ["x", "y"],
                    points,
                }
            }
            Model::Lattice(lattice) => {
                let stub = (grid.stub / lattice.a0()).round() as usize;
                lattice.field(&heff, &solution, stub)?
            }
            Model::Continuum { model, .. } => model.field_map(&heff, &solution, grid),
            Model::Cylinder { model, .. } => model.field_map(&heff, &solution, grid),
        })
    }
}
