use rayon::prelude::*;
use serde::Serialize;

use ricci_lab::checks::{hypothesis_report, HypothesisInvariants, Verdict};
use ricci_lab::constants::constant_chain;
use ricci_lab::geometry::{curvature, diameter};

use crate::config::{from_table, output_dir, set_path, Format, Loaded, RunConfig, Setup};
use crate::error::{CliError, CliResult};
use crate::output::{create, ensure_dir, write_json};
use crate::Global;

/// One grid point: static invariants of the initial metric and the
/// hypothesis margins.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub value: f64,
    pub n: usize,
    pub vol: f64,
    pub diam: Option<f64>,
    pub rm_norm: f64,
    pub rm_n2: f64,
    pub scalar_r: f64,
    pub ric_min: f64,
    pub ric_max: f64,
    pub cs_upper: Option<f64>,
    pub cs_lower: Option<f64>,
    /// `||Rm||_{n/2} (diam / vol^{1/n})^2`.
    pub diameter_energy: Option<f64>,
    pub eps_n: f64,
    pub margin_sobolev: Option<f64>,
    pub holds_sobolev: Option<bool>,
    pub margin_diameter: Option<f64>,
    pub holds_diameter: Option<bool>,
    pub margin_integral_ricci: Option<f64>,
    pub holds_integral_ricci: Option<bool>,
}

fn row(cfg: &RunConfig, value: f64) -> CliResult<Row> {
    let setup = Setup::build(cfg)?;
    let (model, g) = (&setup.model, &setup.g0);
    let curv = curvature(model, g)?;
    let n = model.dim();
    let diam = diameter(model, g)?.value();
    let ir = cfg.integral_ricci();
    let inv = HypothesisInvariants::from_metric(
        model,
        g,
        setup.estimate.upper.or(cfg.sobolev.cs0),
        cfg.model.as_ref().and_then(|m| m.diam_bound),
        ir.as_ref(),
    )?;
    let cs0 = setup.cs0(cfg).map(|c| c.value).unwrap_or(1.0);
    let chain = constant_chain(&setup.primitives, &setup.chain_inputs(cfg, cs0))?;
    let rep = hypothesis_report(&inv, &chain, &setup.primitives, ir.as_ref());
    let pick = |v: &Verdict<f64>| (v.margin, v.holds);
    let (margin_sobolev, holds_sobolev) = pick(&rep.verdicts[0]);
    let (margin_diameter, holds_diameter) = pick(&rep.verdicts[1]);
    let (margin_integral_ricci, holds_integral_ricci) = pick(&rep.verdicts[2]);
    Ok(Row {
        value,
        n,
        vol: setup.vol0,
        diam,
        rm_norm: curv.rm_norm,
        rm_n2: setup.rm_n2_0,
        scalar_r: curv.scalar,
        ric_min: curv.ric_min(),
        ric_max: curv.ric_max(),
        cs_upper: setup.estimate.upper,
        cs_lower: setup.estimate.lower,
        diameter_energy: inv
            .diam
            .map(|d| setup.rm_n2_0 * (d / setup.vol0.powf(1.0 / n as f64)).powi(2)),
        eps_n: chain.eps_n_main,
        margin_sobolev,
        holds_sobolev,
        margin_diameter,
        holds_diameter,
        margin_integral_ricci,
        holds_integral_ricci,
    })
}

pub fn rows(loaded: &Loaded) -> CliResult<Vec<Row>> {
    let sweep = loaded
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [sweep] block".into()))?;
    let grid = sweep.grid()?;
    let param = sweep.parameter.as_str();
    let configs = grid
        .iter()
        .map(|&v| {
            let mut t = loaded.table.clone();
            set_path(&mut t, param, toml::Value::Float(v))?;
            from_table(&t, &[format!("{param}={v}")])
        })
        .collect::<CliResult<Vec<_>>>()?;
    // indexed collect keeps grid order regardless of scheduling
    configs
        .par_iter()
        .zip(grid.par_iter())
        .map(|(c, &v)| row(c, v))
        .collect()
}

pub fn run(g: &Global) -> CliResult<i32> {
    let loaded = g.load()?;
    let rows = rows(&loaded)?;
    let cfg = &loaded.config;
    let dir = output_dir(g.out.as_deref(), cfg);
    ensure_dir(&dir)?;
    let path = match g.format.or(cfg.output.format).unwrap_or(Format::Csv) {
        Format::Csv => {
            let path = dir.join("sweep.csv");
            let mut w = csv::Writer::from_writer(create(&path)?);
            for r in &rows {
                w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
            }
            w.flush()?;
            path
        }
        Format::Json => write_json(&dir.join("sweep.json"), &rows)?,
    };
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(0)
}
