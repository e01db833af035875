//! Identity, inequality and hypothesis checks along trajectories and on
//! single metrics.
//!
//! Statements with explicit constants yield `pass`/`fail`. Statements whose
//! constants are only known to exist yield a fitted constant
//! (`ratio-extracted`).

mod derivative;
mod flow_checks;
mod holder;
mod report;
mod static_checks;

pub use derivative::time_derivatives;
pub use flow_checks::{
    check_c0_bound, check_lp_evolution, check_moser_bound, check_n2_bound, check_ratio_stability,
    check_scalar_identity, check_sobolev_along_flow, check_t_star_scan, check_volume_identity,
    ratio_stability, IDENTITY_TOL, INEQUALITY_SLACK, STABILITY_TOL, VACUOUS_RATIO,
};
pub use holder::{
    check_holder, epsilon_grid, holder_suite, interpolation_young, moser_split, optimal_young,
    power_split, random_measure, HolderKind, HOLDER_SLACK, NEAR_EQUALITY,
};
pub use report::{sort_reports, CheckReport, Detail, Status, Verdict, MAX_DETAILS};
pub use static_checks::{
    check_diameter_bound, check_moser_sums, check_sobolev_consistency, diameter_rhs,
    hypothesis_report, HypothesisInvariants, IntegralRicciSettings, WITNESS_SLACK,
};
