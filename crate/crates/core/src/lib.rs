//! Classical and Bohr-Sommerfeld analysis of the spherical pendulum.
//!
//! Units are fixed by unit mass, length and gravitational acceleration, so
//! the Hamiltonian on the tangent bundle of the unit sphere is
//! `H = |p|^2 / 2 + q_3` and the angular momentum about the vertical is
//! `L = q_1 p_2 - q_2 p_1`.

pub mod action;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod monodromy;
pub mod operators;
pub mod quadrature;
pub mod spectrum;

pub use action::{ActionBundle, ActionEngine, ActionJacobian, BranchedTheta, RotationNumber};
pub use error::{Error, Result};
pub use geometry::{BoundaryPoint, EnergyMomentum, Stratum, TurningPoints};
