//! Elastic flow of planar curve networks.
//!
//! A network is a set of curves joined at triple junctions, pinned at fixed
//! endpoints or closed up periodically. The flow moves every curve with
//! normal velocity `-(2 k_ss + k^3 - mu k)` and decreases the energy
//! `∫ (k^2 + mu) ds`.

// negated comparisons are how NaN gets rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admissibility;
pub mod error;
pub mod export;
pub mod geometry;
pub mod model;
pub mod monitors;
pub mod primitives;
pub mod quadrature;
pub mod scene;
pub mod solver;
pub mod stencil;
pub mod theta;
pub mod vec2;

pub use error::{Error, Result};
pub use model::{build_state, CurveEnd, EndTag, FixedEndpoint, FlowParams, Junction, NetworkState, NetworkTopology, Tolerances};
pub use primitives::Primitive;
pub use vec2::Vec2;
