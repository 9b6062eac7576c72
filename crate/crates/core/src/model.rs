use num_complex::Complex64;

use crate::error::{CmtError, Result};
use crate::heff::{ChannelId, EffectiveHamiltonian, Energy, SMatrix, ScatteringSolution};

/// Closed-resonator eigenvalues with the quantum numbers that label them.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonatorBasis<I> {
    pub indices: Vec<I>,
    pub energies: Vec<f64>,
}

impl<I: Copy> ResonatorBasis<I> {
    /// Orders modes by ascending eigenvalue, ties kept in generation order.
    pub fn sorted(mut modes: Vec<(I, f64)>) -> Self {
        modes.sort_by(|a, b| a.1.total_cmp(&b.1));
        ResonatorBasis {
            indices: modes.iter().map(|m| m.0).collect(),
            energies: modes.iter().map(|m| m.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (I, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.energies.iter().copied())
    }
}

/// A geometry that can produce its effective Hamiltonian at any energy.
pub trait ScatteringModel: Send + Sync {
    fn heff(&self, energy: Energy) -> Result<EffectiveHamiltonian>;

    /// Energies at which the number of open channels changes, ascending.
    fn thresholds(&self) -> Vec<f64>;

    fn smatrix(&self, energy: Energy) -> Result<SMatrix> {
        self.heff(energy)?.smatrix(energy)
    }

    /// Unit-amplitude excitation of a single open channel.
    fn scatter(
        &self,
        energy: Energy,
        channel: ChannelId,
        amplitude: Complex64,
    ) -> Result<(EffectiveHamiltonian, ScatteringSolution)> {
        let heff = self.heff(energy)?;
        let incoming = unit_incoming(&heff, channel, amplitude)?;
        let solution = heff.scatter(energy, &incoming)?;
        Ok((heff, solution))
    }
}

/// Incoming vector over the open channels of `heff` with `amplitude` in `channel`.
pub fn unit_incoming(
    heff: &EffectiveHamiltonian,
    channel: ChannelId,
    amplitude: Complex64,
) -> Result<Vec<Complex64>> {
    let open = heff.open_channels();
    if open.is_empty() {
        return Err(CmtError::NoOpenChannel { energy: f64::NAN });
    }
    let pos = open
        .iter()
        .position(|c| *c == channel)
        .ok_or_else(|| CmtError::invalid(format!("channel {channel} is not open")))?;
    let mut v = vec![Complex64::new(0.0, 0.0); open.len()];
    v[pos] = amplitude;
    Ok(v)
}
