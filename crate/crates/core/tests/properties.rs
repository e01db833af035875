use nalgebra::DMatrix;
use proptest::prelude::*;
use ricci_lab::checks::{hypothesis_report, HypothesisInvariants};
use ricci_lab::constants::{constant_chain, ChainInputs, ConstantPrimitives};
use ricci_lab::geometry::{build_model, curvature, volume, Bracket, MetricState, ModelGeometry, ModelSpec};
use ricci_lab::sobolev::{rm_critical_norm, GallotStrategy};

fn lie(dim: usize, brackets: &[(usize, usize, usize, f64)]) -> ModelGeometry<f64> {
    build_model(&ModelSpec::LieGroupQuotient {
        dim,
        brackets: brackets
            .iter()
            .map(|&(i, j, k, coeff)| Bracket { i, j, k, coeff })
            .collect(),
        covolume: 1.0,
    })
    .unwrap()
}

fn algebras() -> Vec<ModelGeometry<f64>> {
    vec![
        ModelGeometry::heisenberg(),
        lie(3, &[(1, 2, 0, 1.0), (2, 0, 1, 1.0), (0, 1, 2, 1.0)]),
        lie(3, &[(2, 0, 0, 1.0), (2, 1, 1, -1.0)]),
        lie(4, &[(0, 1, 2, 1.0), (0, 2, 3, 1.0)]),
    ]
}

fn spd(dim: usize) -> impl Strategy<Value = MetricState<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim * dim).prop_map(move |v| {
        let a = DMatrix::from_vec(dim, dim, v);
        let g = &a * a.transpose() + DMatrix::identity(dim, dim) * 0.2;
        MetricState::from_matrix(g, 0.0).unwrap()
    })
}

fn model_and_metric() -> impl Strategy<Value = (ModelGeometry<f64>, MetricState<f64>)> {
    (0..algebras().len()).prop_flat_map(|k| {
        let m = algebras().swap_remove(k);
        let d = m.dim();
        (Just(m), spd(d))
    })
}

fn close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn riemann_symmetries_and_bianchi((m, g) in model_and_metric()) {
        let c = curvature(&m, &g).unwrap();
        let n = m.dim();
        let s = c.rm.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for i in 0..n { for j in 0..n { for k in 0..n { for l in 0..n {
            let r = c.rm.get(i, j, k, l);
            prop_assert!(close(r, -c.rm.get(j, i, k, l), s, 1e-10));
            prop_assert!(close(r, -c.rm.get(i, j, l, k), s, 1e-10));
            prop_assert!(close(r, c.rm.get(k, l, i, j), s, 1e-10));
            let b = r + c.rm.get(j, k, i, l) + c.rm.get(k, i, j, l);
            prop_assert!(b.abs() <= 1e-10 * s.max(1.0));
        }}}}
    }

    #[test]
    fn traces_and_norm_bounds((m, g) in model_and_metric()) {
        let c = curvature(&m, &g).unwrap();
        let n = m.dim();
        let nf = n as f64;
        let scale = c.rm_norm * c.rm_norm;
        for j in 0..n { for l in 0..n {
            let tr: f64 = (0..n).map(|i| c.rm.get(i, j, i, l)).sum();
            prop_assert!(close(tr, c.ric[(j, l)], c.rm_norm, 1e-10));
        }}
        prop_assert!(close(c.ric.trace(), c.scalar, c.rm_norm, 1e-10));
        prop_assert!((c.rm.norm_squared() - scale).abs() <= 1e-10 * scale.max(1.0));
        let ric2 = c.ric_norm_squared();
        prop_assert!(c.scalar * c.scalar <= nf * ric2 * (1.0 + 1e-10) + 1e-12);
        prop_assert!(c.scalar * c.scalar <= nf * (nf - 1.0) / 2.0 * scale * (1.0 + 1e-10) + 1e-12);
        prop_assert!(c.sec_min <= c.sec_max);
    }

    #[test]
    fn scaling_covariance((m, g) in model_and_metric(), k in 0usize..3) {
        let lam = [0.1, 1.0, 10.0][k];
        let c = curvature(&m, &g).unwrap();
        let v = volume(&m, &g).unwrap();
        let gs = g.scaled(lam * lam);
        let cs = curvature(&m, &gs).unwrap();
        let vs = volume(&m, &gs).unwrap();
        let nf = m.dim() as f64;
        let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
        prop_assert!(rel(vs, v * lam.powf(nf)) < 1e-10);
        prop_assert!(rel(cs.rm_norm, c.rm_norm / (lam * lam)) < 1e-10);
        prop_assert!(rel(cs.scalar, c.scalar / (lam * lam)) < 1e-9 || (cs.scalar.abs() < 1e-12 * cs.rm_norm));
        prop_assert!(rel(rm_critical_norm(&cs, vs), rm_critical_norm(&c, v)) < 1e-10);
    }

    #[test]
    fn hypothesis_verdicts_are_monotone(
        rm_n2 in 0.0f64..0.05,
        cs in 0.1f64..3.0,
        diam in 0.5f64..4.0,
        vol in 0.1f64..10.0,
        ric_min in -0.05f64..0.05,
        gr_eps in 0.01f64..1.0,
        widen in 1.0f64..10.0,
        base in 0.5f64..2.0,
        shrink in 0.1f64..1.0,
    ) {
        let inv = HypothesisInvariants {
            n: 3,
            rm_n2,
            rm_average: rm_n2,
            cs_upper: Some(cs),
            diam: Some(diam),
            vol,
            ric_min,
            ricci_deficit: None,
            sphere_circle_product: false,
        };
        let tight = ConstantPrimitives {
            gromov_ruh_eps: gr_eps,
            gallot: GallotStrategy::Default { base },
            ..ConstantPrimitives::default()
        };
        let loose = ConstantPrimitives {
            gromov_ruh_eps: (gr_eps * widen).min(1.0),
            gallot: GallotStrategy::Default { base: base * shrink },
            ..ConstantPrimitives::default()
        };
        let inputs = ChainInputs::new(3, 1.0, vol, cs, rm_n2);
        let a = hypothesis_report(&inv, &constant_chain(&tight, &inputs).unwrap(), &tight, None);
        let b = hypothesis_report(&inv, &constant_chain(&loose, &inputs).unwrap(), &loose, None);
        for (x, y) in a.verdicts.iter().zip(&b.verdicts) {
            if x.holds == Some(true) {
                prop_assert_eq!(y.holds, Some(true), "{}", x.criterion);
            }
            if let (Some(tx), Some(ty)) = (x.threshold, y.threshold) {
                prop_assert!(ty >= tx * (1.0 - 1e-12));
            }
        }
    }
}
