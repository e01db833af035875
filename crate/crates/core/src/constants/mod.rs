//! Explicit constants, thresholds, and the Moser schedule.

mod chain;
mod moser;
mod primitives;
mod root;

pub use chain::{constant_chain, exponent_budget, horizon_t0, ChainInputs, ConstantChain};
pub use moser::{
    exact_moser_sums, limit_sums, moser_final_bound, moser_schedule, partial_sums, tails,
    ExactMoserSums, MoserSchedule,
};
pub use primitives::{delta0, ConstantPrimitives};
pub use root::{lhs, log_lhs, solve_c_n_gamma, solve_c_n_gamma_detailed, RootReport};
