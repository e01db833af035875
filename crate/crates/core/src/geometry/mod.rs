//! Homogeneous model geometries with algebraic curvature.

pub mod curvature;
pub mod frame;
pub mod measure;
pub mod metric;
pub mod model;
pub mod sampling;

pub use curvature::{curvature, curvature_with, ricci_in_basis, CurvatureData, Rank4, SectionalSampling};
pub use frame::{orthonormalize, OrthonormalFrame};
pub use measure::{diameter, volume, Diameter};
pub use metric::{MetricData, MetricState};
pub use model::{build_model, Bracket, Factor, ModelGeometry, ModelKind, ModelSpec, SpaceForm, StructureConstants};
