//! File formats: XYZ and PLY point clouds, dataset directories with
//! landmark manifests, the named-tensor checkpoint container, and index
//! colors for ordered structure points.

mod color;
mod container;
mod dataset;
mod ply;
mod xyz;

pub use color::index_color;
pub use container::{Container, NamedTensor, CONTAINER_VERSION};
pub use dataset::{read_dataset, write_dataset, DatasetEntry};
pub use ply::{read_ply, write_ply, PlyPayload};
pub use xyz::{read_xyz, write_xyz};
