//! Ricci flow laboratory on homogeneous model geometries.
//!
//! On Lie group quotients and products of space forms the curvature of an
//! invariant metric is an algebraic function of finitely many parameters, so
//! the Ricci flow `dg/dt = -2 Ric` reduces to an ODE. The crate computes the
//! curvature and Sobolev quantities that enter integral-pinching estimates
//! for the flow, evaluates the explicit constant chains behind those
//! estimates, and checks the resulting inequalities along trajectories.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod constants;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod sobolev;
pub mod scalar;

pub use error::{LabError, Result};
pub use scalar::Real;

pub type ModelGeometry = geometry::ModelGeometry<f64>;
pub type MetricState = geometry::MetricState<f64>;
pub type CurvatureData = geometry::CurvatureData<f64>;
pub type ConstantPrimitives = constants::ConstantPrimitives<f64>;
pub type ConstantChain = constants::ConstantChain<f64>;
pub type MoserSchedule = constants::MoserSchedule<f64>;
pub type Trajectory = flow::Trajectory<f64>;
pub type FlowConfig = flow::FlowConfig<f64>;
pub type CheckReport = checks::CheckReport<f64>;
