//! Discrete-to-continuum analysis of one-dimensional Lennard-Jones chains
//! with finite-range interactions.
//!
//! The modules follow the chain of constructions: the potential family and
//! its landmarks ([`potentials`]), effective densities and their convex
//! envelopes ([`effective_density`], [`envelope`]), the homogenization cell
//! problem ([`cell_formula`]), the rescaled fracture energy of a periodic
//! chain ([`chain`]) and the surface boundary layer that sets the fracture
//! toughness ([`boundary_layer`]). [`audit`] checks the structural
//! hypotheses numerically, and [`optim`] holds the shared minimizers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod boundary_layer;
pub mod cell_formula;
pub mod chain;
pub mod effective_density;
pub mod envelope;
pub mod error;
pub mod optim;
pub mod potentials;

pub use effective_density::EffectiveModel;
pub use error::{Error, Result};
pub use potentials::PotentialFamily;
