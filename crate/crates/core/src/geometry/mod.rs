//! Non-differentiable point-cloud kernels: sampling, grouping,
//! normalization, principal axes, augmentation and synthetic shapes.

mod axes;
mod cloud;
mod sampling;
mod synthetic;
pub mod vec3;

pub use axes::{
    axis_swap_augment, consistency_rotation, principal_axes, AxisFrame, Permutation,
};
pub use cloud::{normalize_unit_sphere, Landmark, PointCloud};
pub use sampling::{
    ball_query, farthest_point_sample, nonuniform_resample, upsample_repeat, Group,
    ResampleConfig,
};
pub use synthetic::{generate_family, ShapeFamily};
