//! Unsupervised learning of intrinsic structure points from 3D point clouds.
//!
//! A point-cloud encoder (multi-scale set abstraction) feeds a point
//! integration module that emits an ordered set of structure points as
//! convex combinations of encoder sample points. Training needs no labels:
//! the loss is the Chamfer distance between the structure points and the
//! input cloud, optionally with a PCA axis-swap consistency term. Downstream
//! analyses (correspondence transfer, label transfer, stability, a PCA
//! morphable model) build on the ordered output.

pub mod analysis;
pub mod autodiff;
pub mod encoder;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod io;
pub mod model;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
