//! Scattering through open resonator-waveguide systems with sound-hard
//! (Neumann) walls via the effective non-Hermitian Hamiltonian.
//!
//! The closed resonator is expanded over its Neumann eigenmodes, and each
//! waveguide channel contributes a rank-one term to
//! [`EffectiveHamiltonian`]. Four geometries are provided:
//!
//! - [`chain`]: tight-binding chain with one or two leads,
//! - [`lattice`]: finite-difference 2D resonator with lattice waveguides,
//! - [`rect`]: continuum rectangular resonator with two waveguides,
//! - [`cylinder`]: axisymmetric cylinder, continuum and axially discretized.
//!
//! [`oracle`] holds independent direct wave-matching solvers for the
//! discrete geometries and the adaptive quadrature used to cross-check the
//! closed-form coupling integrals.

pub mod chain;
pub mod cylinder;
pub mod error;
pub mod field;
pub mod heff;
pub mod lattice;
pub mod linalg;
pub mod longitudinal;
pub mod model;
pub mod oracle;
pub mod rect;
pub mod special;

pub use error::{CmtError, Result};
pub use field::{FieldGrid, FieldPoint, GridSpec};
pub use heff::{
    reciprocity_defect, unitarity_defect, ChannelId, ChannelTerm, EffectiveHamiltonian, Energy,
    InteriorSolver, LeadId, Resonance, SMatrix, ScatteringSolution,
};
pub use model::{ResonatorBasis, ScatteringModel};

pub use num_complex::Complex64;
