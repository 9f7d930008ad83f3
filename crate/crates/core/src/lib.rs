//! Numerical laboratory for the curvature reaction ODE `dR/dt = R² + R#` on
//! algebraic curvature operators.
//!
//! Layers, bottom up: [`bivector`] (Λ²ℝⁿ ≅ so(n)), [`curvature`] (operators,
//! decomposition, the sharp product and Q), [`models`] (named operators),
//! [`flow`] (raw and normalized integration), [`stability`] (Jacobians,
//! zero classifications, reduced systems) and [`holonomy`].

pub mod bivector;
pub mod curvature;
pub mod flow;
pub mod holonomy;
pub mod io;
mod error;
pub mod models;
pub mod stability;
mod policy;

pub use error::{Error, Result};
pub use policy::NumericPolicy;
