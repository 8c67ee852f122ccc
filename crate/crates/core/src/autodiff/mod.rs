//! Minimal reverse-mode automatic differentiation.
//!
//! The engine provides exactly the differentiable operators the network
//! needs: affine layers, ReLU, row softmax, per-group max aggregation,
//! channel concatenation, dropout, MSE, Chamfer distance and a handful of
//! glue ops (matmul, transpose, reshape, add, scale, sum). Operations are
//! recorded on a tape in topological order; [`Graph::backward`] replays it
//! in reverse exactly once. The element type is generic so gradient checks
//! run in double precision while training runs in single precision.

mod adam;
mod graph;
pub mod gradcheck;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use graph::{Graph, Mode, Var};
pub use tensor::{Real, Tensor};
