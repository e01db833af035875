//! Run configuration: a sectioned TOML file with typed, closed key sets.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use ricci_lab::constants::{ChainInputs, ConstantPrimitives};
use ricci_lab::geometry::{
    build_model, curvature, volume, Bracket, Factor, MetricState, ModelGeometry, ModelSpec, SpaceForm,
};
use ricci_lab::sobolev::{
    rm_critical_norm, scalar_negative_part_norm, sobolev_estimate, GallotStrategy, SobolevEstimate,
    WitnessFamily,
};
use ricci_lab::{checks::IntegralRicciSettings, flow::FlowConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const OUT_ENV: &str = "RICCI_LAB_OUT";

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub model: Option<ModelSection>,
    #[serde(default)]
    pub flow: FlowSection,
    pub constants: Option<ConstantsSection>,
    #[serde(default)]
    pub sobolev: SobolevSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub checks: ChecksSection,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Heisenberg,
    FlatTorus,
    RoundSphere,
    SphereTimesCircle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKindName {
    LieGroupQuotient,
    ProductOfSpaceForms,
}

/// `[e_i, e_j] = coeff e_k`, indices from 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub coeff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorEntry {
    pub form: SpaceForm,
    #[serde(default = "one_usize")]
    pub dim: usize,
    #[serde(default = "one")]
    pub radius: f64,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub preset: Option<Preset>,
    pub kind: Option<ModelKindName>,
    pub dim: Option<usize>,
    pub radius: Option<f64>,
    /// Circle radius of `sphere-times-circle`.
    pub eps: Option<f64>,
    pub covolume: Option<f64>,
    pub brackets: Option<Vec<BracketEntry>>,
    pub factors: Option<Vec<FactorEntry>>,
    /// Full initial metric in the Lie basis.
    pub metric: Option<Vec<Vec<f64>>>,
    pub metric_diagonal: Option<Vec<f64>>,
    /// Squared factor radii of a product.
    pub scales: Option<Vec<f64>>,
    pub metric_scale: Option<f64>,
    /// Diameter bound for models without a computable diameter.
    pub diam_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub gamma: f64,
    pub t_end: Option<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_rm: Option<f64>,
    pub max_steps: usize,
    /// Rescale the initial metric to unit volume.
    pub normalize_volume: bool,
}

impl Default for FlowSection {
    fn default() -> Self {
        let d = FlowConfig::<f64>::default();
        Self {
            gamma: d.gamma,
            t_end: None,
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            max_rm: None,
            max_steps: d.max_steps,
            normalize_volume: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralRicciSection {
    pub p: f64,
    pub kappa: f64,
    pub diam_bound: f64,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsSection {
    pub c_n: f64,
    pub a_n: f64,
    pub c3: f64,
    pub gromov_ruh_eps: f64,
    pub gallot_base: Option<f64>,
    pub gallot_fixed: Option<f64>,
    /// Dimension when no model is configured.
    pub n: Option<usize>,
    pub kappa: Option<f64>,
    pub moser_k: usize,
    pub moser_t_prime: f64,
    pub integral_ricci: Option<IntegralRicciSection>,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        Self {
            c_n: 1.0,
            a_n: 1.0,
            c3: 1.0,
            gromov_ruh_eps: 1.0,
            gallot_base: None,
            gallot_fixed: None,
            n: None,
            kappa: None,
            moser_k: 20,
            moser_t_prime: 1.0,
            integral_ricci: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    Eigenfunction,
    Bump,
    Cap,
    All,
}

impl From<FamilyName> for WitnessFamily {
    fn from(f: FamilyName) -> Self {
        match f {
            FamilyName::Eigenfunction => WitnessFamily::Eigenfunction,
            FamilyName::Bump => WitnessFamily::Bump,
            FamilyName::Cap => WitnessFamily::Cap,
            FamilyName::All => WitnessFamily::All,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SobolevSection {
    /// Explicit `C_S(0)`; otherwise the upper bound is used.
    pub cs0: Option<f64>,
    pub family: FamilyName,
    pub grid: usize,
    pub kappa: Option<f64>,
}

impl Default for SobolevSection {
    fn default() -> Self {
        Self {
            cs0: None,
            family: FamilyName::All,
            grid: 256,
            kappa: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub record_every: Option<f64>,
    pub name: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            format: None,
            record_every: None,
            name: "trajectory".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSection {
    pub lp_p: Vec<f64>,
    pub holder_measures: usize,
    pub diameter_a: f64,
    pub diameter_b: f64,
    /// Rerun with halved tolerances and compare fitted constants.
    pub stability: bool,
    pub c0_t_max: Option<f64>,
    pub moser_k: usize,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self {
            lp_p: vec![2.0],
            holder_measures: 1000,
            diameter_a: 1.0,
            diameter_b: 1.0,
            stability: true,
            c0_t_max: None,
            moser_k: 40,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricGrid {
    pub start: f64,
    pub ratio: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Dotted key of a scalar config entry, e.g. `model.eps`.
    pub parameter: String,
    #[serde(default)]
    pub values: Vec<f64>,
    pub geometric: Option<GeometricGrid>,
}

impl SweepSection {
    pub fn grid(&self) -> CliResult<Vec<f64>> {
        let values = match (&self.geometric, self.values.is_empty()) {
            (Some(_), false) => {
                return Err(CliError::Config(
                    "[sweep]: give either `values` or `geometric`, not both".into(),
                ))
            }
            (Some(g), true) => (0..g.count).map(|k| g.start * g.ratio.powi(k as i32)).collect(),
            (None, _) => self.values.clone(),
        };
        if values.is_empty() {
            return Err(CliError::Config("[sweep]: empty parameter grid".into()));
        }
        Ok(values)
    }
}

/// Parsed configuration plus its raw table, kept for sweep substitution.
pub struct Loaded {
    pub config: RunConfig,
    pub table: toml::Table,
}

pub fn load(path: &Path, overrides: &[String], seed: Option<u64>) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str::<RunConfig>(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut table: toml::Table = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    for o in overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{o}` is not key=value")))?;
        set_path(&mut table, key.trim(), parse_value(value.trim()))?;
    }
    if let Some(s) = seed {
        table.insert("seed".into(), toml::Value::Integer(s as i64));
    }
    let config = from_table(&table, overrides)?;
    Ok(Loaded { config, table })
}

pub fn from_table(table: &toml::Table, overrides: &[String]) -> CliResult<RunConfig> {
    RunConfig::deserialize(toml::Value::Table(table.clone())).map_err(|e| {
        CliError::Config(format!(
            "config after overrides [{}]: {}",
            overrides.join(", "),
            e.message()
        ))
    })
}

pub fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets a dotted key; numeric components index arrays.
pub fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> CliResult<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("invalid key `{key}`")));
    }
    let mut cur = table
        .entry(parts[0].to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    if parts.len() == 1 {
        *cur = value;
        return Ok(());
    }
    for (depth, part) in parts.iter().enumerate().skip(1) {
        let last = depth + 1 == parts.len();
        cur = match cur {
            toml::Value::Table(t) => {
                if last {
                    t.insert(part.to_string(), value);
                    return Ok(());
                }
                t.entry(part.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            }
            toml::Value::Array(a) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| CliError::Config(format!("`{key}`: `{part}` is not an array index")))?;
                let len = a.len();
                let slot = a.get_mut(idx).ok_or_else(|| {
                    CliError::Config(format!("`{key}`: index {idx} out of range (length {len})"))
                })?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::Config(format!("`{key}`: `{part}` is not inside a table"))),
        };
    }
    unreachable!("loop returns on the last component")
}

pub fn output_dir(cli_out: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    if let Some(p) = cli_out {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.output.dir {
        return p.clone();
    }
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

impl RunConfig {
    pub fn model_section(&self) -> CliResult<&ModelSection> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [model] block".into()))
    }

    pub fn primitives(&self) -> CliResult<ConstantPrimitives<f64>> {
        let c = self.constants.clone().unwrap_or_default();
        let gallot = match (c.gallot_base, c.gallot_fixed) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "[constants]: give at most one of gallot_base and gallot_fixed".into(),
                ))
            }
            (None, Some(value)) => GallotStrategy::Fixed { value },
            (base, None) => GallotStrategy::Default { base: base.unwrap_or(1.0) },
        };
        let p = ConstantPrimitives {
            c_n: c.c_n,
            a_n: c.a_n,
            c3: c.c3,
            gallot,
            gromov_ruh_eps: c.gromov_ruh_eps,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn flow_config(&self) -> CliResult<FlowConfig<f64>> {
        let f = &self.flow;
        let cfg = FlowConfig {
            gamma: f.gamma,
            t_end: f.t_end,
            rel_tol: f.rel_tol,
            abs_tol: f.abs_tol,
            max_rm: f.max_rm,
            record_every: self.output.record_every,
            max_steps: f.max_steps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn integral_ricci(&self) -> Option<IntegralRicciSettings<f64>> {
        let s = self.constants.as_ref()?.integral_ricci.as_ref()?;
        Some(IntegralRicciSettings {
            p: s.p,
            kappa: s.kappa,
            diam_bound: s.diam_bound,
            epsilon: s.epsilon,
        })
    }

    pub fn validate_numeric(&self) -> CliResult<()> {
        if self.sobolev.grid < 8 {
            return Err(CliError::Config(format!("sobolev.grid must be >= 8, got {}", self.sobolev.grid)));
        }
        if let Some(cs) = self.sobolev.cs0 {
            if !(cs > 0.0 && cs.is_finite()) {
                return Err(CliError::Config(format!("sobolev.cs0 must be positive, got {cs}")));
            }
        }
        if self.checks.lp_p.iter().any(|p| !(*p >= 1.0)) {
            return Err(CliError::Config("checks.lp_p entries must be >= 1".into()));
        }
        if !(self.checks.diameter_a > 0.0 && self.checks.diameter_b > 0.0) {
            return Err(CliError::Config("checks.diameter_a and diameter_b must be positive".into()));
        }
        if self.output.name.is_empty() || self.output.name.contains(['/', '\\']) {
            return Err(CliError::Config(format!("output.name `{}` is not a file stem", self.output.name)));
        }
        Ok(())
    }
}

fn need<T: Copy>(v: Option<T>, what: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Config(format!("[model]: `{what}` is required for this model")))
}

pub fn build_geometry(m: &ModelSection) -> CliResult<(ModelGeometry<f64>, MetricState<f64>)> {
    let model = match (m.preset, m.kind) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config("[model]: give either `preset` or `kind`, not both".into()))
        }
        (None, None) => return Err(CliError::Config("[model]: `preset` or `kind` is required".into())),
        (Some(Preset::Heisenberg), None) => {
            if m.dim.is_some_and(|d| d != 3) {
                return Err(CliError::Config("[model]: the Heisenberg preset has dim 3".into()));
            }
            ModelGeometry::heisenberg()
        }
        (Some(Preset::FlatTorus), None) => {
            ModelGeometry::flat_torus(m.dim.unwrap_or(3), m.covolume.unwrap_or(1.0))?
        }
        (Some(Preset::RoundSphere), None) => {
            ModelGeometry::round_sphere(m.dim.unwrap_or(3), m.radius.unwrap_or(1.0))?
        }
        (Some(Preset::SphereTimesCircle), None) => {
            ModelGeometry::sphere_times_circle(m.dim.unwrap_or(3), need(m.eps, "eps")?)?
        }
        (None, Some(ModelKindName::LieGroupQuotient)) => {
            let brackets = m
                .brackets
                .iter()
                .flatten()
                .map(|b| {
                    if b.i == 0 || b.j == 0 || b.k == 0 {
                        return Err(CliError::Config("[model]: bracket indices start at 1".into()));
                    }
                    Ok(Bracket { i: b.i - 1, j: b.j - 1, k: b.k - 1, coeff: b.coeff })
                })
                .collect::<CliResult<Vec<_>>>()?;
            build_model(&ModelSpec::LieGroupQuotient {
                dim: need(m.dim, "dim")?,
                brackets,
                covolume: m.covolume.unwrap_or(1.0),
            })?
        }
        (None, Some(ModelKindName::ProductOfSpaceForms)) => {
            let factors = m
                .factors
                .as_ref()
                .ok_or_else(|| CliError::Config("[model]: `factors` is required for a product".into()))?
                .iter()
                .map(|f| Factor { form: f.form, dim: f.dim, radius: f.radius })
                .collect();
            build_model(&ModelSpec::ProductOfSpaceForms { factors })?
        }
    };
    let mut g = match (&m.metric, &m.metric_diagonal, &m.scales) {
        (None, None, None) => MetricState::reference(&model),
        (Some(rows), None, None) => {
            let n = model.dim();
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(CliError::Config(format!("[model]: `metric` must be {n} x {n}")));
            }
            MetricState::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]), 0.0)?
        }
        (None, Some(d), None) => {
            if d.len() != model.dim() {
                return Err(CliError::Config(format!(
                    "[model]: `metric_diagonal` needs {} entries",
                    model.dim()
                )));
            }
            MetricState::from_matrix(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d.clone())), 0.0)?
        }
        (None, None, Some(s)) => MetricState::from_scales(s.clone(), 0.0)?,
        _ => {
            return Err(CliError::Config(
                "[model]: give at most one of `metric`, `metric_diagonal`, `scales`".into(),
            ))
        }
    };
    g.check_against(&model)?;
    if let Some(s) = m.metric_scale {
        if !(s > 0.0) {
            return Err(CliError::Config(format!("[model]: metric_scale must be positive, got {s}")));
        }
        g = g.scaled(s);
    }
    if let Some(d) = m.diam_bound {
        if !(d > 0.0) {
            return Err(CliError::Config(format!("[model]: diam_bound must be positive, got {d}")));
        }
    }
    Ok((model, g))
}

/// Model, initial metric and the static quantities every command needs.
pub struct Setup {
    pub model: ModelGeometry<f64>,
    pub g0: MetricState<f64>,
    pub primitives: ConstantPrimitives<f64>,
    pub estimate: SobolevEstimate<f64>,
    pub vol0: f64,
    pub rm_n2_0: f64,
    pub scalar_neg_0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Cs0 {
    pub value: f64,
    pub source: String,
}

impl Setup {
    pub fn build(cfg: &RunConfig) -> CliResult<Self> {
        cfg.validate_numeric()?;
        let m = cfg.model_section()?;
        let (model, mut g0) = build_geometry(m)?;
        if cfg.flow.normalize_volume {
            g0 = ricci_lab::flow::normalize_to_unit_volume(&g0, &model)?;
        }
        let primitives = cfg.primitives()?;
        let estimate = sobolev_estimate(
            &model,
            &g0,
            cfg.sobolev.family.into(),
            cfg.sobolev.grid,
            &primitives.gallot,
            cfg.sobolev.kappa,
            m.diam_bound,
        )?;
        let curv = curvature(&model, &g0)?;
        let vol0 = volume(&model, &g0)?;
        Ok(Self {
            rm_n2_0: rm_critical_norm(&curv, vol0),
            scalar_neg_0: scalar_negative_part_norm(&curv, vol0),
            vol0,
            model,
            g0,
            primitives,
            estimate,
        })
    }

    /// Configured value first, then the upper bound.
    pub fn cs0(&self, cfg: &RunConfig) -> CliResult<Cs0> {
        if let Some(v) = cfg.sobolev.cs0 {
            return Ok(Cs0 { value: v, source: "configured".into() });
        }
        match self.estimate.upper {
            Some(v) => Ok(Cs0 {
                value: v,
                source: format!(
                    "upper bound c(n, kappa) diam / vol^(1/n), kappa = {}, {}",
                    self.estimate.kappa, self.estimate.strategy
                ),
            }),
            None => Err(CliError::Config(
                "C_S(0) unavailable: set sobolev.cs0, or model.diam_bound for a model without a computable diameter"
                    .into(),
            )),
        }
    }

    pub fn chain_inputs(&self, cfg: &RunConfig, cs0: f64) -> ChainInputs<f64> {
        let mut inputs = ChainInputs::new(self.model.dim(), cfg.flow.gamma, self.vol0, cs0, self.rm_n2_0);
        inputs.scalar_neg_n2_0 = self.scalar_neg_0;
        inputs.kappa = cfg.constants.as_ref().and_then(|c| c.kappa);
        inputs
    }
}
