//! Independent reference solvers.
//!
//! The direct solvers substitute the lead wave ansatz straight into the
//! lattice equations and solve for the interior site amplitudes together with
//! the reflection and transmission amplitudes. They never touch the closed
//! resonator eigenbasis, so agreement with the effective-Hamiltonian route
//! is a genuine cross-check.

mod direct;
pub mod quadrature;

pub use direct::{direct_scattering_chain, direct_scattering_lattice2d, DirectSolution};
pub use quadrature::{integrate, CompositeRule, DEFAULT_TOLERANCE};
