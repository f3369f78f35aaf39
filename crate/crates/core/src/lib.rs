//! Conformal invariants of immersed submanifolds.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]
pub mod conformal;
pub mod energy;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod jet;
pub mod quadrature;
pub mod tensor;

pub use conformal::{InvarianceReport, MobiusMap, MobiusPrimitive};
pub use energy::{CEstimate, EnergyReport, EnergySpec, ZSpec};
pub use error::{Error, Result};
pub use expr::{parse_expression, Expression};
pub use geometry::{AmbientMetric, Immersion, PointFrame, SurfaceSpec};
pub use quadrature::QuadratureGrid;
pub use tensor::{ContractionSum, ContractionTerm};
