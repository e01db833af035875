use serde::Serialize;

use ricci_lab::constants::{
    constant_chain, exact_moser_sums, exponent_budget, moser_schedule, solve_c_n_gamma_detailed, ChainInputs,
    ConstantChain, ConstantPrimitives, MoserSchedule, RootReport,
};

use crate::config::{output_dir, Setup};
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, write_json};
use crate::Global;

#[derive(Debug, Serialize)]
struct ExactSums {
    limits: [String; 3],
    holds: bool,
}

#[derive(Debug, Serialize)]
struct ConstantsOutput {
    primitives: ConstantPrimitives<f64>,
    /// Where the chain inputs came from.
    inputs_source: String,
    inputs: ChainInputs<f64>,
    root: RootReport<f64>,
    chain: ConstantChain<f64>,
    /// `T1 (C_S^-2 + n(n-1) ||Rm||_{n/2})` against `gamma + n(n-1) c(n, gamma)`.
    exponent_budget: [f64; 2],
    moser: MoserSchedule<f64>,
    moser_exact: ExactSums,
}

pub fn run(g: &Global) -> CliResult<i32> {
    let loaded = g.load()?;
    let cfg = &loaded.config;
    let section = cfg
        .constants
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [constants] block".into()))?;
    let primitives = cfg.primitives()?;
    let (inputs, inputs_source) = if cfg.model.is_some() {
        let setup = Setup::build(cfg)?;
        let cs0 = setup.cs0(cfg)?;
        (setup.chain_inputs(cfg, cs0.value), format!("initial metric of [model]; C_S(0) {}", cs0.source))
    } else {
        let n = section
            .n
            .ok_or_else(|| CliError::Config("[constants]: `n` is required without a [model] block".into()))?;
        let cs0 = cfg.sobolev.cs0.unwrap_or(1.0);
        let mut inputs = ChainInputs::new(n, cfg.flow.gamma, 1.0, cs0, 0.0);
        inputs.kappa = section.kappa;
        (inputs, "no model: unit volume, zero curvature, C_S(0) from sobolev.cs0 or 1".into())
    };
    let n = inputs.n;
    let root = solve_c_n_gamma_detailed(primitives.c_n, n, inputs.gamma)?;
    let chain = constant_chain(&primitives, &inputs)?;
    let (lhs, rhs) = exponent_budget(&chain, &inputs);
    let moser = moser_schedule(n, section.moser_t_prime, section.moser_k)?;
    let exact = exact_moser_sums(n, section.moser_k)?;
    let out = ConstantsOutput {
        primitives,
        inputs_source,
        inputs,
        root,
        chain,
        exponent_budget: [lhs, rhs],
        moser,
        moser_exact: ExactSums {
            limits: exact.limits.clone().map(|l| l.to_string()),
            holds: exact.holds,
        },
    };
    let dir = output_dir(g.out.as_deref(), cfg);
    ensure_dir(&dir)?;
    let path = write_json(&dir.join("constants.json"), &out)?;
    println!(
        "wrote {} (n = {n}, c(n, gamma) = {}, eps_n = {}, T0 = {})",
        path.display(),
        chain.c_n_gamma,
        chain.eps_n_main,
        chain.t0
    );
    Ok(0)
}
