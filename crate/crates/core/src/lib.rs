//! Discrete Husimi Q-functions of N-qubit states, their projection onto the
//! space of symmetric collective measurements, and large-N Gaussian analysis.
//!
//! Qubit `j + 1` is bit `j` of every packed word; as text the leftmost
//! character is qubit 1. Measurement-space coordinates are
//! (x, y, z) = (m, k, n)/N with m = h(α), n = h(β), k = h(α + β), tied to the
//! collective spin components S_x, S_y, S_z.

#![allow(clippy::needless_range_loop)]

pub mod bitstring;
pub mod error;
pub mod gaussian;
pub mod moments;
pub mod phase_space;
pub mod projection;
pub mod series;
pub mod states;

pub use bitstring::BitString;
pub use error::{Error, Result};
pub use phase_space::{Axis, PhasePoint, QGrid};
pub use projection::{Census, MeasLattice, ProjectedQ, Triple};
pub use states::{build_state, Family, MixedEnsemble, Prepared, StateSpec, StateVector};
