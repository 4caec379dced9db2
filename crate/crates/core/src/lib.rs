//! Polynomial-screen particle-mesh solver for electrostatic potentials of
//! point charges in a periodic cube.
//!
//! Each charge is split into a smooth screen, solved for on a finite element
//! mesh, and a short-range remainder evaluated from precomputed tables:
//! `Phi = Phi_smooth + Phi_short`.

pub mod charges;
pub mod cli;
pub mod direct;
pub mod dirichlet;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod reference;
pub mod screens;
pub mod shortrange;
pub mod tensor;

pub use charges::ChargeSystem;
pub use error::{Error, Result};
pub use mesh::{locate_charge, Mesh, Vec3};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
