//! Demand-driven hydraulic analysis of water distribution networks.
//!
//! The crate models a pipe network (junctions with known demands, fixed-head
//! nodes, pipes with Hazen-Williams or Darcy-Weisbach friction), reads a
//! subset of the EPANET INP format, and solves the steady-state flow and head
//! equations with four Newton-type methods:
//!
//! * `GGA`: the Schur-complement (global gradient) iteration on nodal heads;
//! * `NSM1`: an exact Newton iteration on loop flows in the null space of the
//!   continuity equations;
//! * `NSM2`: the same iteration with partial headloss updates restricted to
//!   flows that are still moving (an inexact Newton method);
//! * `NSM3`: additionally delays head computations until the iteration is
//!   near convergence.
//!
//! All linear algebra runs on the crate's own compressed sparse column
//! kernel: minimum-degree ordering and a symbolic/numeric Cholesky split so
//! one symbolic factorization serves every Newton step and time step.

#![allow(clippy::needless_range_loop)] // index loops mirror the matrix math
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0)` rejects NaN in validations

pub mod error;
pub mod headloss;
pub mod net;
pub mod nullbasis;
pub mod solver;
pub mod sparse;
pub mod synth;

pub use error::{Error, Result};
