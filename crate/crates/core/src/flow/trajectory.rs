use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dopri::{step_factor, try_step};
use crate::constants::horizon_t0;
use crate::error::{LabError, Result};
use crate::geometry::{
    curvature_with, ricci_in_basis, volume, MetricData, MetricState, ModelGeometry, ModelKind,
    SectionalSampling, SpaceForm,
};
use crate::scalar::Real;
use crate::sobolev::{rm_critical_norm, scalar_negative_part_norm};

/// `dg/dt = -2 Ric(g)` in the model's fixed basis.
pub fn ricci_rhs<T: Real>(model: &ModelGeometry<T>, g: &MetricState<T>) -> Result<DMatrix<T>> {
    Ok(ricci_in_basis(model, g)? * T::lit(-2.0))
}

/// Right-hand side on the flat parameter vector of [`MetricState::to_params`].
fn rhs_params<T: Real>(model: &ModelGeometry<T>, params: &[T], t: T) -> Result<Vec<T>> {
    match model.kind() {
        ModelKind::LieGroupQuotient { .. } => {
            let g = MetricState::from_params(model, params, t);
            Ok(crate::geometry::metric::upper_triangle(&ricci_rhs(model, &g)?))
        }
        ModelKind::ProductOfSpaceForms { factors } => Ok(factors
            .iter()
            .map(|f| match f.form {
                SpaceForm::Sphere => T::from_count(2 * (f.dim - 1)).neg(),
                _ => T::zero(),
            })
            .collect()),
    }
}

fn params_admissible<T: Real>(model: &ModelGeometry<T>, params: &[T]) -> bool {
    if params.iter().any(|x| !x.is_finite()) {
        return false;
    }
    MetricState::from_params(model, params, T::zero()).min_eigenvalue() > T::zero()
}

/// When the flow stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    HorizonReached,
    CurvatureBlowup,
    StepUnderflow,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::HorizonReached => "horizon-reached",
            Termination::CurvatureBlowup => "curvature-blowup",
            Termination::StepUnderflow => "step-underflow",
        })
    }
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FlowConfig<T> {
    pub gamma: T,
    /// `None` runs to the horizon `T0 = gamma vol0^{2/n} C_S(0)^2`.
    pub t_end: Option<T>,
    pub rel_tol: T,
    pub abs_tol: T,
    /// `None` means `1e6` times the initial `|Rm|`.
    pub max_rm: Option<T>,
    /// Output time stride; `None` records every accepted step.
    pub record_every: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> Default for FlowConfig<T> {
    fn default() -> Self {
        Self {
            gamma: T::one(),
            t_end: None,
            rel_tol: T::lit(1e-9),
            abs_tol: T::lit(1e-12),
            max_rm: None,
            record_every: None,
            max_steps: 1_000_000,
        }
    }
}

impl<T: Real> FlowConfig<T> {
    pub fn until(t_end: T) -> Self {
        Self {
            t_end: Some(t_end),
            ..Self::default()
        }
    }

    pub fn with_stride(mut self, dt: T) -> Self {
        self.record_every = Some(dt);
        self
    }

    pub fn with_tolerances(mut self, rel_tol: T, abs_tol: T) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: T| {
            if v > T::zero() && v < T::one() {
                Ok(())
            } else {
                Err(LabError::Config(format!("flow.{name} must lie in (0, 1), got {v}")))
            }
        };
        unit("rel_tol", self.rel_tol)?;
        unit("abs_tol", self.abs_tol)?;
        if !(self.gamma > T::zero()) {
            return Err(LabError::Config(format!("flow.gamma must be positive, got {}", self.gamma)));
        }
        if let Some(t) = self.t_end {
            if !(t > T::zero()) {
                return Err(LabError::Config(format!("flow.t_end must be positive, got {t}")));
            }
        }
        if let Some(dt) = self.record_every {
            if !(dt > T::zero()) {
                return Err(LabError::Config(format!(
                    "flow.record_every must be positive, got {dt}"
                )));
            }
        }
        if self.max_steps == 0 {
            return Err(LabError::Config("flow.max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Inputs of the derived functionals `theta` and `chi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FlowContext<T> {
    /// `C_S(0)`.
    pub cs0: T,
    /// The constant `c(n)` in `chi`.
    pub c_n: T,
}

impl<T: Real> Default for FlowContext<T> {
    fn default() -> Self {
        Self {
            cs0: T::one(),
            c_n: T::one(),
        }
    }
}

/// Invariants recomputed from one recorded state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DerivedRecord<T> {
    pub t: T,
    pub vol: T,
    pub rm_norm: T,
    pub scalar: T,
    pub ric_eigenvalues: Vec<T>,
    pub ric_norm_sq: T,
    pub rm_n2: T,
    pub j: T,
    pub theta: T,
    pub chi: T,
    pub ric_min: T,
    pub ric_max: T,
}

pub fn derive_record<T: Real>(
    model: &ModelGeometry<T>,
    g: &MetricState<T>,
    ctx: &FlowContext<T>,
    delta0: T,
) -> Result<DerivedRecord<T>> {
    let curv = curvature_with(model, g, SectionalSampling::coordinate_only())?;
    let vol = volume(model, g)?;
    let n = T::from_count(model.dim());
    let rm_n2 = rm_critical_norm(&curv, vol);
    let eig = curv.ric_eigenvalues();
    Ok(DerivedRecord {
        t: g.time,
        vol,
        rm_norm: curv.rm_norm,
        scalar: curv.scalar,
        ric_norm_sq: curv.ric_norm_squared(),
        rm_n2,
        j: curv.rm_norm.powf(n * T::lit(0.5)) * vol,
        theta: rm_n2 * ctx.cs0 * ctx.cs0,
        chi: ctx.c_n * (T::lit(8.0) * g.time * delta0 / n).exp() * rm_n2,
        ric_min: eig[0],
        ric_max: eig[eig.len() - 1],
        ric_eigenvalues: eig,
    })
}

/// Integrator statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FlowMeta<T> {
    pub gamma: T,
    pub t_end: T,
    pub t0_horizon: T,
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_rm: T,
    pub record_every: Option<T>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub spd_rejections: usize,
    pub rhs_evaluations: usize,
    pub termination: Termination,
    pub note: Option<String>,
}

/// A recorded flow with derived invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Trajectory<T: Real> {
    pub model: ModelGeometry<T>,
    pub states: Vec<MetricState<T>>,
    pub derived: Vec<DerivedRecord<T>>,
    pub context: FlowContext<T>,
    /// `C_S(0)^{-2} + ||R^-||_{n/2}(0)`.
    pub delta0: T,
    /// Absent for trajectories loaded from disk.
    pub meta: Option<FlowMeta<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn times(&self) -> Vec<T> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn termination(&self) -> Option<Termination> {
        self.meta.as_ref().map(|m| m.termination)
    }

    /// Builds a trajectory from states, recomputing every derived record.
    pub fn from_states(
        model: ModelGeometry<T>,
        states: Vec<MetricState<T>>,
        context: FlowContext<T>,
    ) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| LabError::Argument("trajectory has no states".into()))?;
        let delta0 = initial_delta0(&model, first, context.cs0)?;
        let derived = states
            .iter()
            .map(|s| derive_record(&model, s, &context, delta0))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model,
            states,
            derived,
            context,
            delta0,
            meta: None,
        })
    }
}

fn initial_delta0<T: Real>(model: &ModelGeometry<T>, g0: &MetricState<T>, cs0: T) -> Result<T> {
    let curv = curvature_with(model, g0, SectionalSampling::coordinate_only())?;
    let vol = volume(model, g0)?;
    Ok(T::one() / (cs0 * cs0) + scalar_negative_part_norm(&curv, vol))
}

/// Adaptive Dormand-Prince integration of `dg/dt = -2 Ric`.
pub fn integrate<T: Real>(
    model: &ModelGeometry<T>,
    g0: &MetricState<T>,
    cfg: &FlowConfig<T>,
    ctx: &FlowContext<T>,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    if !(ctx.cs0 > T::zero() && ctx.c_n > T::zero()) {
        return Err(LabError::Config("C_S(0) and c(n) must be positive".into()));
    }
    g0.check_against(model)?;
    let lmin = g0.min_eigenvalue();
    if !(lmin > T::zero()) {
        return Err(LabError::NotPositiveDefinite {
            min_eigenvalue: lmin.as_f64(),
        });
    }
    let g0 = g0.clone().with_time(T::zero());
    let n = model.dim();
    let vol0 = volume(model, &g0)?;
    let t0_horizon = horizon_t0(cfg.gamma, vol0, ctx.cs0, n);
    let t_end = cfg.t_end.unwrap_or(t0_horizon);
    let delta0 = initial_delta0(model, &g0, ctx.cs0)?;
    let first = derive_record(model, &g0, ctx, delta0)?;
    let max_rm = match cfg.max_rm {
        Some(m) => m,
        None if first.rm_norm > T::zero() => first.rm_norm * T::lit(1e6),
        None => T::max_value().expect("bounded scalar"),
    };
    if !(max_rm > first.rm_norm) {
        return Err(LabError::Config(format!(
            "flow.max_rm = {max_rm} does not exceed the initial |Rm| = {}",
            first.rm_norm
        )));
    }

    let mut evals = 0usize;
    let mut f = |t: T, y: &[T]| -> Result<Vec<T>> {
        evals += 1;
        rhs_params(model, y, t)
    };

    let mut states = vec![g0.clone()];
    let mut derived = vec![first];
    let mut y = g0.to_params();
    let mut t = T::zero();
    let mut f0 = f(t, &y)?;

    let scale = |v: &[T]| {
        let s = v.iter().map(|x| *x * *x).fold(T::zero(), |a, b| a + b);
        (s / T::from_count(v.len().max(1))).sqrt()
    };
    let d0 = scale(&y);
    let d1 = scale(&f0);
    let mut h = if d1 > T::zero() {
        T::lit(0.01) * d0 / d1
    } else {
        T::lit(1e-3) * t_end
    };
    h = h.min(t_end);

    let mut out_index = 1usize;
    let next_output = |k: usize| match cfg.record_every {
        Some(dt) => (dt * T::from_count(k)).min(t_end),
        None => t_end,
    };
    let mut target = next_output(out_index);

    let (mut accepted, mut rejected, mut spd_rejections) = (0usize, 0usize, 0usize);
    let mut note = None;
    let underflow = T::lit(1e-14);

    let termination = loop {
        if t >= t_end {
            break Termination::HorizonReached;
        }
        if accepted + rejected >= cfg.max_steps {
            note = Some(format!("step budget of {} exhausted", cfg.max_steps));
            break Termination::StepUnderflow;
        }
        if h < underflow * t.abs().max(T::one()) {
            break Termination::StepUnderflow;
        }
        let h_free = h;
        let clamped = h >= target - t;
        if clamped {
            h = target - t;
        }
        let trial = match try_step(&mut f, t, &y, &f0, h, cfg.rel_tol, cfg.abs_tol) {
            Ok(tr) => tr,
            Err(LabError::NotPositiveDefinite { .. }) => {
                spd_rejections += 1;
                rejected += 1;
                h *= T::lit(0.5);
                continue;
            }
            Err(e) => return Err(e),
        };
        if !params_admissible(model, &trial.y) {
            spd_rejections += 1;
            rejected += 1;
            h *= T::lit(0.5);
            continue;
        }
        let factor = step_factor(trial.error);
        if trial.error > T::one() {
            rejected += 1;
            h *= factor.min(T::one());
            continue;
        }
        accepted += 1;
        t = if clamped { target } else { t + h };
        y = trial.y;
        f0 = trial.f_new;
        let state = MetricState::from_params(model, &y, t);
        let rec = derive_record(model, &state, ctx, delta0)?;
        let blowup = !(rec.rm_norm <= max_rm);
        if blowup || cfg.record_every.is_none() || clamped {
            states.push(state);
            derived.push(rec);
        }
        if blowup {
            break Termination::CurvatureBlowup;
        }
        if clamped {
            out_index += 1;
            target = next_output(out_index);
        }
        h *= factor;
        if clamped {
            h = h.max(h_free);
        }
    };

    Ok(Trajectory {
        model: model.clone(),
        states,
        derived,
        context: *ctx,
        delta0,
        meta: Some(FlowMeta {
            gamma: cfg.gamma,
            t_end,
            t0_horizon,
            rel_tol: cfg.rel_tol,
            abs_tol: cfg.abs_tol,
            max_rm,
            record_every: cfg.record_every,
            accepted_steps: accepted,
            rejected_steps: rejected,
            spd_rejections,
            rhs_evaluations: evals,
            termination,
            note,
        }),
    })
}

/// `g~(t) = lambda^2 g(t / lambda^2)`.
pub fn parabolic_rescale<T: Real>(traj: &Trajectory<T>, lambda: T) -> Result<Trajectory<T>> {
    if !(lambda > T::zero()) {
        return Err(LabError::Domain(format!("rescaling factor must be positive, got {lambda}")));
    }
    let l2 = lambda * lambda;
    let states = traj
        .states
        .iter()
        .map(|s| s.scaled(l2).with_time(s.time * l2))
        .collect::<Vec<_>>();
    let derived = states
        .iter()
        .map(|s| derive_record(&traj.model, s, &traj.context, traj.delta0))
        .collect::<Result<Vec<_>>>()?;
    let meta = traj.meta.clone().map(|m| FlowMeta {
        t_end: m.t_end * l2,
        t0_horizon: m.t0_horizon * l2,
        max_rm: m.max_rm / l2,
        record_every: m.record_every.map(|dt| dt * l2),
        ..m
    });
    Ok(Trajectory {
        model: traj.model.clone(),
        states,
        derived,
        context: traj.context,
        delta0: traj.delta0,
        meta,
    })
}

/// `lambda^2 g0` with unit volume.
pub fn normalize_to_unit_volume<T: Real>(
    g0: &MetricState<T>,
    model: &ModelGeometry<T>,
) -> Result<MetricState<T>> {
    let vol = volume(model, g0)?;
    let factor = vol.powf(-T::lit(2.0) / T::from_count(model.dim()));
    Ok(g0.scaled(factor))
}

/// The metric's flat parameters, for comparisons.
pub fn state_params<T: Real>(g: &MetricState<T>) -> Vec<T> {
    match &g.data {
        MetricData::Matrix(m) => crate::geometry::metric::upper_triangle(m),
        MetricData::Scales(s) => s.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_model, ModelSpec};

    fn sphere() -> ModelGeometry<f64> {
        ModelGeometry::round_sphere(3, 1.0).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let torus = ModelGeometry::flat_torus(3, 1.0).unwrap();
        let g = MetricState::reference(&torus);
        assert_eq!(ricci_rhs(&torus, &g).unwrap(), DMatrix::zeros(3, 3));

        let s = sphere();
        let rhs = ricci_rhs(&s, &MetricState::reference(&s)).unwrap();
        assert_eq!(rhs, DMatrix::identity(3, 3) * -4.0);

        let h = ModelGeometry::<f64>::heisenberg();
        let rhs = ricci_rhs(&h, &MetricState::reference(&h)).unwrap();
        let mut ev: Vec<f64> = rhs.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip([-1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn shrinking_sphere_matches_closed_form() {
        let s = sphere();
        let cfg = FlowConfig::until(0.2).with_stride(0.01);
        let tr = integrate(&s, &MetricState::reference(&s), &cfg, &FlowContext::default()).unwrap();
        assert_eq!(tr.termination(), Some(Termination::HorizonReached));
        assert_eq!(tr.len(), 21);
        for st in &tr.states {
            let MetricData::Scales(v) = &st.data else { panic!() };
            let exact: f64 = 1.0 - 4.0 * st.time;
            assert!(((v[0] - exact) / exact).abs() < 1e-8);
        }
    }

    #[test]
    fn lie_sphere_matches_closed_form() {
        // su(2) with [e_i, e_j] = 2 e_k is the unit round three-sphere
        let spec = ModelSpec::LieGroupQuotient {
            dim: 3,
            brackets: vec![
                crate::geometry::Bracket { i: 0, j: 1, k: 2, coeff: 2.0 },
                crate::geometry::Bracket { i: 1, j: 2, k: 0, coeff: 2.0 },
                crate::geometry::Bracket { i: 2, j: 0, k: 1, coeff: 2.0 },
            ],
            covolume: 1.0,
        };
        let m = build_model(&spec).unwrap();
        let cfg = FlowConfig::until(0.2).with_stride(0.05);
        let tr = integrate(&m, &MetricState::reference(&m), &cfg, &FlowContext::default()).unwrap();
        for st in &tr.states {
            let MetricData::Matrix(g) = &st.data else { panic!() };
            let exact: f64 = 1.0 - 4.0 * st.time;
            assert!(((g[(0, 0)] - exact) / exact).abs() < 1e-8);
            assert!(g[(0, 1)].abs() < 1e-12);
        }
    }

    #[test]
    fn torus_is_fixed() {
        let t = ModelGeometry::flat_torus(3, 1.0).unwrap();
        let g0 = MetricState::reference(&t);
        let tr = integrate(&t, &g0, &FlowConfig::until(1.0), &FlowContext::default()).unwrap();
        for st in &tr.states {
            assert_eq!(st.data, g0.data);
        }
        assert_eq!(tr.states.last().unwrap().time, 1.0);
    }

    #[test]
    fn sphere_blows_up_before_extinction() {
        let s = sphere();
        let tr = integrate(&s, &MetricState::reference(&s), &FlowConfig::until(0.3), &FlowContext::default())
            .unwrap();
        assert_eq!(tr.termination(), Some(Termination::CurvatureBlowup));
        let last = tr.states.last().unwrap().time;
        assert!(last < 0.25 && last > 0.249);
        assert!(tr.states.iter().all(|s| s.min_eigenvalue() > 0.0));
    }

    #[test]
    fn rescale_identity_and_extinction() {
        let s = sphere();
        let tr = integrate(&s, &MetricState::reference(&s), &FlowConfig::until(0.3), &FlowContext::default())
            .unwrap();
        let same = parabolic_rescale(&tr, 1.0).unwrap();
        assert_eq!(same, tr);
        let big = parabolic_rescale(&tr, 2.0).unwrap();
        let t_last = big.states.last().unwrap().time;
        assert!(t_last < 1.0 && t_last > 0.996);
        for (a, b) in tr.derived.iter().zip(&big.derived) {
            assert!((a.rm_n2 - b.rm_n2).abs() <= 1e-12 * a.rm_n2);
        }
        assert!(parabolic_rescale(&tr, 0.0).is_err());
    }

    #[test]
    fn unit_volume_normalization() {
        let s = sphere();
        let g = normalize_to_unit_volume(&MetricState::reference(&s), &s).unwrap();
        let MetricData::Scales(v) = &g.data else { panic!() };
        let expect = (2.0 * std::f64::consts::PI.powi(2)).powf(-2.0 / 3.0);
        assert!((v[0] - expect).abs() < 1e-15);
        assert!((volume(&s, &g).unwrap() - 1.0).abs() < 1e-12);

        let t = ModelGeometry::<f64>::flat_torus(3, 8.0).unwrap();
        let g = normalize_to_unit_volume(&MetricState::reference(&t), &t).unwrap();
        let MetricData::Matrix(m) = &g.data else { panic!() };
        assert!((m[(0, 0)] - 0.25).abs() < 1e-15);

        let unit = ModelGeometry::flat_torus(3, 1.0).unwrap();
        let g0 = MetricState::reference(&unit);
        assert_eq!(normalize_to_unit_volume(&g0, &unit).unwrap(), g0);
    }

    #[test]
    fn config_validation() {
        let mut c = FlowConfig::<f64>::until(1.0);
        c.rel_tol = 1.5;
        assert!(c.validate().is_err());
        let s = sphere();
        let mut c = FlowConfig::until(0.1);
        c.max_rm = Some(1.0);
        assert!(matches!(
            integrate(&s, &MetricState::reference(&s), &c, &FlowContext::default()),
            Err(LabError::Config(_))
        ));
    }
}
