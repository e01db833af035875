use serde::Serialize;

use ricci_lab::constants::{constant_chain, ConstantChain, ConstantPrimitives};
use ricci_lab::flow::{integrate, write_csv, FlowConfig, FlowContext, FlowMeta, Termination};
use ricci_lab::geometry::ModelGeometry;

use crate::config::{output_dir, Cs0, Format, Setup};
use crate::error::{CliError, CliResult};
use crate::output::{create, ensure_dir, write_json};
use crate::Global;

/// Run metadata written next to the trajectory.
#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    seed: u64,
    model: &'a ModelGeometry<f64>,
    initial_metric: Vec<f64>,
    cs0: Cs0,
    context: FlowContext<f64>,
    delta0: f64,
    primitives: ConstantPrimitives<f64>,
    flow: FlowConfig<f64>,
    chain: ConstantChain<f64>,
    termination: Option<Termination>,
    integrator: Option<&'a FlowMeta<f64>>,
    states: usize,
}

pub fn run(g: &Global) -> CliResult<i32> {
    let loaded = g.load()?;
    let cfg = &loaded.config;
    let setup = Setup::build(cfg)?;
    let cs0 = setup.cs0(cfg)?;
    let fcfg = cfg.flow_config()?;
    let ctx = FlowContext { cs0: cs0.value, c_n: setup.primitives.c_n };
    let chain = constant_chain(&setup.primitives, &setup.chain_inputs(cfg, cs0.value))?;
    let traj = integrate(&setup.model, &setup.g0, &fcfg, &ctx)?;

    let dir = output_dir(g.out.as_deref(), cfg);
    ensure_dir(&dir)?;
    let stem = &cfg.output.name;
    let format = g.format.or(cfg.output.format).unwrap_or(Format::Csv);
    let path = match format {
        Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            let mut w = create(&path)?;
            write_csv(&traj, &mut w)?;
            std::io::Write::flush(&mut w)?;
            path
        }
        Format::Json => write_json(&dir.join(format!("{stem}.json")), &traj)?,
    };
    let sidecar = Sidecar {
        seed: cfg.seed,
        model: &setup.model,
        initial_metric: setup.g0.to_params(),
        cs0,
        context: ctx,
        delta0: traj.delta0,
        primitives: setup.primitives,
        flow: fcfg,
        chain,
        termination: traj.termination(),
        integrator: traj.meta.as_ref(),
        states: traj.len(),
    };
    write_json(&dir.join(format!("{stem}.meta.json")), &sidecar)?;
    let reason = traj
        .termination()
        .map(|t| t.to_string())
        .ok_or_else(|| CliError::Config("integrator returned no termination".into()))?;
    println!(
        "wrote {} ({} states, t = {}, {reason})",
        path.display(),
        traj.len(),
        traj.states.last().map(|s| s.time).unwrap_or(0.0)
    );
    Ok(0)
}
