//! A periodic pseudospectral laboratory for the modified Hunter-Saxton
//! family `u_t + u^p u_x = (p/2) antiderivative(u^(p-1) u_x^2)` on the unit
//! circle.
//!
//! Three routes to the same solution are provided and cross-checked:
//! the Eulerian nonlocal PDE ([`eulerian`]), the Lagrangian flow-map ODE on
//! circle diffeomorphisms ([`lagrangian`]) and a time-Taylor recursion
//! ([`taylor`]). [`scale`] measures solutions in Sobolev and analytic scale
//! norms.

pub mod corpus;
pub mod error;
pub mod eulerian;
pub mod initcond;
pub mod lagrangian;
pub mod record;
pub mod scale;
pub mod spectral;
pub mod taylor;
pub mod verify;

pub use error::{Error, Result};
pub use spectral::{Diffeo, ModelParams, SpectralField};
