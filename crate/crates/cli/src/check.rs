use std::path::Path;

use rayon::prelude::*;
use ricci_lab::checks::*;
use ricci_lab::constants::{constant_chain, ChainInputs};
use ricci_lab::flow::{integrate, read_csv, FlowConfig, FlowContext, Trajectory};
use ricci_lab::geometry::{curvature, diameter};
use ricci_lab::sobolev::profiles::{profile_norms, Profile};
use ricci_lab::sobolev::{scalar_negative_part_norm, witness_norms, ProfileDomain, WitnessFamily};
use ricci_lab::Result as LabResult;

use crate::config::{output_dir, RunConfig, Setup};
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, write_json};
use crate::Global;

type Report = CheckReport<f64>;

struct Job<'a> {
    names: Vec<String>,
    run: Box<dyn Fn() -> LabResult<Vec<Report>> + Send + Sync + 'a>,
}

fn job<'a>(names: &[String], run: impl Fn() -> LabResult<Vec<Report>> + Send + Sync + 'a) -> Job<'a> {
    Job { names: names.to_vec(), run: Box::new(run) }
}

fn one<'a>(name: &str, run: impl Fn() -> LabResult<Report> + Send + Sync + 'a) -> Job<'a> {
    job(&[name.to_string()], move || run().map(|r| vec![r]))
}

fn lp_name(p: f64) -> String {
    format!("lp_evolution_p{p}")
}

/// Halved-tolerance rerun on the same output grid.
fn refined(traj: &Trajectory<f64>, cfg: &RunConfig) -> LabResult<Trajectory<f64>> {
    let t_end = traj.states.last().map(|s| s.time).unwrap_or(0.0);
    let mut fcfg = FlowConfig::until(t_end).with_tolerances(cfg.flow.rel_tol / 2.0, cfg.flow.abs_tol / 2.0);
    fcfg.gamma = cfg.flow.gamma;
    fcfg.record_every = cfg.output.record_every;
    fcfg.max_rm = cfg.flow.max_rm;
    fcfg.max_steps = cfg.flow.max_steps;
    integrate(&traj.model, &traj.states[0], &fcfg, &traj.context)
}

fn jobs<'a>(traj: &'a Trajectory<f64>, cfg: &'a RunConfig, setup: &'a Setup) -> Vec<Job<'a>> {
    let primitives = setup.primitives;
    let cs0 = traj.context.cs0;
    let n = traj.dim();
    let chain_inputs = move || -> LabResult<ChainInputs<f64>> {
        let d0 = &traj.derived[0];
        let curv = curvature(&traj.model, &traj.states[0])?;
        let mut inputs = ChainInputs::new(n, cfg.flow.gamma, d0.vol, cs0, d0.rm_n2);
        inputs.scalar_neg_n2_0 = scalar_negative_part_norm(&curv, d0.vol);
        inputs.kappa = cfg.constants.as_ref().and_then(|c| c.kappa);
        Ok(inputs)
    };
    let family: WitnessFamily = cfg.sobolev.family.into();
    let grid = cfg.sobolev.grid;
    let mut out = vec![
        one("volume_identity", move || check_volume_identity(traj)),
        one("scalar_identity", move || check_scalar_identity(traj)),
        one("n2_bound", move || check_n2_bound(traj, &constant_chain(&primitives, &chain_inputs()?)?)),
        one("c0_bound", move || check_c0_bound(traj, cs0, cfg.checks.c0_t_max)),
        one("sobolev_along_flow", move || check_sobolev_along_flow(traj, &primitives, family, grid)),
        one("t_star_scan", move || check_t_star_scan(traj, &constant_chain(&primitives, &chain_inputs()?)?)),
        one("moser_bound", move || check_moser_bound(traj)),
        one("moser_sums", move || check_moser_sums(3..=8, cfg.checks.moser_k)),
        one("sobolev_consistency", move || Ok(check_sobolev_consistency(&setup.estimate))),
        one("hypotheses", move || {
            let ir = cfg.integral_ricci();
            let inv = HypothesisInvariants::from_metric(
                &traj.model,
                &traj.states[0],
                setup.estimate.upper.or(cfg.sobolev.cs0),
                cfg.model.as_ref().and_then(|m| m.diam_bound),
                ir.as_ref(),
            )?;
            let chain = constant_chain(&primitives, &chain_inputs()?)?;
            Ok(hypothesis_report(&inv, &chain, &primitives, ir.as_ref()))
        }),
        one("diameter_bound", move || {
            let g = &traj.states[0];
            let bound = cfg.model.as_ref().and_then(|m| m.diam_bound);
            let (diam, supplied) = match (diameter(&traj.model, g)?.value(), bound) {
                (Some(d), _) => (d, false),
                (None, Some(b)) => (b, true),
                (None, None) => {
                    return Ok(CheckReport::new("diameter_bound", Status::Unavailable)
                        .note("diameter unavailable for this model and no model.diam_bound"))
                }
            };
            let domain = ProfileDomain::select(&traj.model, g)?;
            let mut w = witness_norms(&domain, family, grid)?;
            w.push(profile_norms(&domain, &Profile::Constant, grid)?);
            let rep = check_diameter_bound(cfg.checks.diameter_a, cfg.checks.diameter_b, n, diam, traj.derived[0].vol, &w)?;
            Ok(if supplied { rep.note(format!("diam replaced by the supplied bound {diam}")) } else { rep })
        }),
    ];
    let holder_names: Vec<String> = HolderKind::ALL.iter().map(|k| k.name().to_string()).collect();
    out.push(job(&holder_names, move || Ok(holder_suite(cfg.seed, cfg.checks.holder_measures))));
    for &p in &cfg.checks.lp_p {
        out.push(one(&lp_name(p), move || check_lp_evolution(traj, p)));
    }
    if cfg.checks.stability {
        let mut names = vec!["c0_bound_stability".to_string()];
        names.extend(cfg.checks.lp_p.iter().map(|&p| format!("{}_stability", lp_name(p))));
        out.push(job(&names, move || {
            let fine = refined(traj, cfg)?;
            let mut reps = vec![check_ratio_stability(
                &check_c0_bound(traj, cs0, cfg.checks.c0_t_max)?,
                &check_c0_bound(&fine, cs0, cfg.checks.c0_t_max)?,
            )];
            for &p in &cfg.checks.lp_p {
                reps.push(check_ratio_stability(&check_lp_evolution(traj, p)?, &check_lp_evolution(&fine, p)?));
            }
            Ok(reps)
        }));
    }
    out
}

pub fn run(g: &Global, trajectory: &Path, filter: &[String]) -> CliResult<i32> {
    let loaded = g.load()?;
    let cfg = &loaded.config;
    let setup = Setup::build(cfg)?;
    let cs0 = setup.cs0(cfg)?;
    let ctx = FlowContext { cs0: cs0.value, c_n: setup.primitives.c_n };
    let file = std::fs::File::open(trajectory)
        .map_err(|e| CliError::Io(format!("cannot read trajectory {}: {e}", trajectory.display())))?;
    let traj = read_csv(&setup.model, std::io::BufReader::new(file), ctx)?;

    let all = jobs(&traj, cfg, &setup);
    let known: Vec<&String> = all.iter().flat_map(|j| &j.names).collect();
    if let Some(bad) = filter.iter().find(|f| !known.contains(f)) {
        let mut names: Vec<&str> = known.iter().map(|s| s.as_str()).collect();
        names.sort_unstable();
        return Err(CliError::Config(format!("unknown check `{bad}`; available: {}", names.join(", "))));
    }
    let selected: Vec<&Job> = all
        .iter()
        .filter(|j| filter.is_empty() || j.names.iter().any(|n| filter.contains(n)))
        .collect();
    let results: Vec<LabResult<Vec<Report>>> = selected.par_iter().map(|j| (j.run)()).collect();
    let mut reports = Vec::new();
    for r in results {
        reports.extend(r?);
    }
    if !filter.is_empty() {
        reports.retain(|r| filter.contains(&r.name));
    }
    sort_reports(&mut reports);

    let dir = output_dir(g.out.as_deref(), cfg);
    ensure_dir(&dir)?;
    let path = write_json(&dir.join("report.json"), &reports)?;
    let failed = reports.iter().filter(|r| r.failed()).count();
    for r in &reports {
        println!("{:<36} {}", r.name, r.status);
    }
    println!("wrote {} ({} reports, {failed} failed)", path.display(), reports.len());
    Ok(if failed > 0 { 1 } else { 0 })
}
