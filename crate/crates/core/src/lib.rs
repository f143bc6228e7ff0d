//! Numerical laboratory for systolic inequalities on weighted surfaces and
//! for the mass inequality of asymptotically hyperbolic toroidal ends.

pub mod asymptotics;
pub mod cli;
pub mod comparison;
pub mod error;
pub mod levelset;
pub mod ode;
pub mod quadrature;
pub mod stability;
pub mod surfaces;
pub mod systole;

pub use error::{Error, Result};
