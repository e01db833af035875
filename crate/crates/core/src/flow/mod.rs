//! Ricci flow as an ODE on the metric parameters.

mod dopri;
mod io;
mod trajectory;

pub use io::{csv_header, read_csv, write_csv, CONSISTENCY_TOL};
pub use trajectory::{
    derive_record, integrate, normalize_to_unit_volume, parabolic_rescale, ricci_rhs,
    state_params, DerivedRecord, FlowConfig, FlowContext, FlowMeta, Termination, Trajectory,
};
