//! Numerical toolkit for the diffusive Lotka-Volterra competition system in
//! the weak-competition regime: traveling fronts, their tail asymptotics,
//! coupled super-/sub-solution pairs, and PDE simulations that approximate
//! entire solutions.

pub mod cli;
pub mod error;
pub mod front;
pub mod linalg;
pub mod model;
pub mod odefree;
pub mod pde;
pub mod spectral;
pub mod supersub;

pub use error::{LvError, Result};
pub use model::ModelParams;
