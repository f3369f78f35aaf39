//! Immersions, ambient metrics and pointwise geometry.

mod chart;
mod frame;
mod immersion;
pub mod surfaces;
mod tensor4;

pub use chart::MetricChart;
pub use frame::{
    frame_at, induced_metric_jets, intrinsic_curvature_direct, riemann_from_metric_jets, PointFrame,
    RANK_TOLERANCE,
};
pub use immersion::{AmbientMetric, Immersion, Interval, SurfaceSpec};
pub use tensor4::Tensor4;
