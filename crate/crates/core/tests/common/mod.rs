#![allow(dead_code)]

use nalgebra::DMatrix;
use ricci_lab::constants::{constant_chain, ChainInputs, ConstantChain, ConstantPrimitives};
use ricci_lab::flow::{integrate, FlowConfig, FlowContext, Trajectory};
use ricci_lab::geometry::{curvature, volume, MetricState, ModelGeometry};
use ricci_lab::sobolev::{
    admissible_kappa, gallot_upper, rm_critical_norm, scalar_negative_part_norm, GallotStrategy,
};

/// Output stride fine enough for Richardson-checked time derivatives.
pub const STRIDE: f64 = 2.5e-4;
pub const REL_TOL: f64 = 1e-12;
pub const ABS_TOL: f64 = 1e-14;
pub const MIN_ADAPTIVE_STATES: usize = 5;

pub struct Fixture {
    pub name: &'static str,
    pub model: ModelGeometry<f64>,
    pub g0: MetricState<f64>,
    pub t_end: f64,
}

impl Fixture {
    pub fn run(&self, rel_tol: f64, abs_tol: f64) -> Trajectory<f64> {
        let cfg = FlowConfig::until(self.t_end)
            .with_stride(STRIDE)
            .with_tolerances(rel_tol, abs_tol);
        integrate(&self.model, &self.g0, &cfg, &FlowContext::default()).unwrap()
    }

    /// Records every accepted step, so the grid follows the tolerances.
    /// Runs the integrator solves exactly in a few steps fall back to a
    /// coarse stride.
    pub fn run_adaptive(&self, rel_tol: f64, abs_tol: f64) -> Trajectory<f64> {
        let cfg = FlowConfig::until(self.t_end).with_tolerances(rel_tol, abs_tol);
        let traj = integrate(&self.model, &self.g0, &cfg, &FlowContext::default()).unwrap();
        if traj.len() >= MIN_ADAPTIVE_STATES {
            return traj;
        }
        let cfg = cfg.with_stride(self.t_end / 100.0);
        integrate(&self.model, &self.g0, &cfg, &FlowContext::default()).unwrap()
    }

    pub fn trajectory(&self) -> Trajectory<f64> {
        self.run(REL_TOL, ABS_TOL)
    }
}

/// Unit S^3, flat T^3, Heisenberg from the identity, and S^3 x S^1(1/2).
pub fn identity_fixtures() -> Vec<Fixture> {
    let sphere = ModelGeometry::round_sphere(3, 1.0).unwrap();
    let torus = ModelGeometry::flat_torus(3, 1.0).unwrap();
    let heis = ModelGeometry::heisenberg();
    let product = ModelGeometry::sphere_times_circle(3, 0.5).unwrap();
    vec![
        Fixture { name: "sphere", g0: MetricState::reference(&sphere), model: sphere, t_end: 0.2 },
        Fixture { name: "torus", g0: MetricState::reference(&torus), model: torus, t_end: 0.5 },
        Fixture { name: "heisenberg", g0: MetricState::reference(&heis), model: heis, t_end: 0.5 },
        Fixture { name: "product", g0: MetricState::reference(&product), model: product, t_end: 0.1 },
    ]
}

/// Heisenberg metric `diag(1, 1, eta^2)` with `C_S(0)` from the Gallot-type
/// bound under a user-supplied diameter bound.
pub struct AlmostFlat {
    pub model: ModelGeometry<f64>,
    pub g0: MetricState<f64>,
    pub cs0: f64,
    pub primitives: ConstantPrimitives<f64>,
    pub chain: ConstantChain<f64>,
    pub inputs: ChainInputs<f64>,
}

pub const ETA: f64 = 0.01;
pub const DIAM_BOUND: f64 = 3.0;

pub fn almost_flat_heisenberg() -> AlmostFlat {
    let model = ModelGeometry::heisenberg();
    let g0 = MetricState::from_matrix(DMatrix::from_diagonal(&nalgebra::dvector![1.0, 1.0, ETA * ETA]), 0.0)
        .unwrap();
    let curv = curvature(&model, &g0).unwrap();
    let vol = volume(&model, &g0).unwrap();
    let kappa = admissible_kappa(DIAM_BOUND, curv.ric_min());
    let primitives = ConstantPrimitives::default();
    let cs0 = gallot_upper(3, kappa, DIAM_BOUND, vol, &GallotStrategy::default()).unwrap();
    let mut inputs = ChainInputs::new(3, 1.0, vol, cs0, rm_critical_norm(&curv, vol));
    inputs.scalar_neg_n2_0 = scalar_negative_part_norm(&curv, vol);
    let chain = constant_chain(&primitives, &inputs).unwrap();
    AlmostFlat { model, g0, cs0, primitives, chain, inputs }
}

impl AlmostFlat {
    pub fn run(&self, rel_tol: f64, abs_tol: f64) -> Trajectory<f64> {
        self.run_with(FlowConfig::default().with_stride(self.chain.t0 / 200.0), rel_tol, abs_tol)
    }

    pub fn run_adaptive(&self, rel_tol: f64, abs_tol: f64) -> Trajectory<f64> {
        let traj = self.run_with(FlowConfig::default(), rel_tol, abs_tol);
        if traj.len() >= MIN_ADAPTIVE_STATES {
            return traj;
        }
        self.run(rel_tol, abs_tol)
    }

    fn run_with(&self, cfg: FlowConfig<f64>, rel_tol: f64, abs_tol: f64) -> Trajectory<f64> {
        let cfg = cfg.with_tolerances(rel_tol, abs_tol);
        let ctx = FlowContext { cs0: self.cs0, c_n: self.primitives.c_n };
        integrate(&self.model, &self.g0, &cfg, &ctx).unwrap()
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 { 0.0 } else { (a - b).abs() / s }
}
