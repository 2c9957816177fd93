//! Numerical laboratory for contact Hamiltonian dynamics, partial contact
//! quasi-states and contact quasi-measures on explicit model contact manifolds.
//!
//! The numerical kernels are generic over the scalar type ([`Real`], either
//! `f32` or `f64`); the aliases at the crate root fix the scalar to `f64`,
//! which is what the experiments and the CLI use.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod generators;
pub mod hamiltonian;
pub mod linalg;
pub mod lp;
pub mod manifold;
pub mod ode;
pub mod quasimeasure;
pub mod quasistate;
pub mod scalar;
pub mod sets;
pub mod spectral;
pub mod translated;

pub use error::{LabError, Result};
pub use scalar::Real;

pub type ChartPoint = manifold::ChartPoint<f64>;
pub type ContactModel = manifold::ContactModel<f64>;
pub type Hamiltonian = hamiltonian::DynHamiltonian<f64>;
pub type ContactMap = dynamics::DynMap<f64>;
pub type IsotopySpec = dynamics::IsotopySpec<f64>;
pub type FlowResult = dynamics::FlowResult<f64>;
pub type TranslatedPoint = translated::TranslatedPoint<f64>;
pub type ShiftSet = translated::ShiftSet<f64>;
pub type ClosedSetSpec = sets::ClosedSetSpec<f64>;
pub type InvolutiveMap = quasimeasure::InvolutiveMap<f64>;
pub type TauResult = quasimeasure::TauResult<f64>;
pub type HomogenizationResult = spectral::HomogenizationResult<f64>;
