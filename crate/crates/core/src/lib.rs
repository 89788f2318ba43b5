//! Negation as half-space constraints on classifier-free guidance.
//!
//! The crate parses negated prompts into constraint programs, projects the
//! guidance increment onto the feasible set at every denoising step, and
//! evaluates the result on an analytic Gaussian-mixture world whose score is
//! known in closed form.

pub mod bench;
pub mod compiler;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod rng;
pub mod scheduler;
pub mod toyworld;
pub mod vector;

pub use error::{Error, Result};
pub use vector::GuidanceVec;
