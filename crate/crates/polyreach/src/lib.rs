//! Reachability analysis and safety verification for discrete-time
//! piecewise linear systems in closed loop with ReLU network controllers.
//!
//! The pipeline: split the controller into affine pieces over polytopic
//! input regions ([`nn`]), push reach sets through the closed-loop dynamics
//! one step at a time, exactly or with a per-step convex hull
//! ([`sysreach`]), then decide safety by intersection emptiness against
//! unsafe regions ([`verify`]). Everything rests on a small dense LP solver
//! ([`lp`]) and polytope algebra ([`geometry`]).

// Index-based loops over matrix rows/columns are clearer than iterator
// chains in the dense numeric kernels.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod geometry;
pub mod jsonio;
pub mod lp;
pub mod matrix;
pub mod model;
pub mod nn;
pub mod plot;
pub mod sysreach;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{convex_hull, hull_of_union, PolyUnion, Polytope};
pub use lp::{lp_feasible, lp_optimize, LpOutcome, Sense};
pub use matrix::{Matrix, Vector};
pub use model::ModelBundle;
pub use nn::{AffinePiece, Layer, ReluNetwork};
pub use sysreach::{PwlSystem, ReachMode, ReachResult, StepSemantics, SwitchingSignal};
pub use verify::{SafetySpec, SafetyVerdict};
