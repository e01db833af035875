use serde::{Deserialize, Serialize};

use super::primitives::{delta0, ConstantPrimitives};
use super::root::solve_c_n_gamma;
use crate::error::{LabError, Result};
use crate::scalar::Real;
use crate::sobolev::GallotConstant;

/// Initial data entering the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ChainInputs<T> {
    pub n: usize,
    pub gamma: T,
    pub vol0: T,
    pub cs0: T,
    /// `||Rm||_{n/2}(0)`, may be zero.
    pub rm_n2_0: T,
    /// `||R^-||_{n/2}(0)` for `delta_0`.
    pub scalar_neg_n2_0: T,
    /// When set, `eps(n, kappa) = c(n, kappa)^{-2} eps_n` is evaluated too.
    pub kappa: Option<T>,
}

impl<T: Real> ChainInputs<T> {
    pub fn new(n: usize, gamma: T, vol0: T, cs0: T, rm_n2_0: T) -> Self {
        Self {
            n,
            gamma,
            vol0,
            cs0,
            rm_n2_0,
            scalar_neg_n2_0: T::zero(),
            kappa: None,
        }
    }
}

/// All derived thresholds and horizons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ConstantChain<T> {
    pub n: usize,
    pub gamma: T,
    pub delta0: T,
    /// Root `c(n, gamma)`.
    pub c_n_gamma: T,
    /// Root at `gamma = 1`, used by `eps_n`.
    pub c_n_one: T,
    pub b_n_gamma: T,
    /// The three branches `(n-2)/(n c(n))`, `1/(n(n-1))`, `b(n, gamma)`.
    pub eps_branches: [T; 3],
    pub eps_n_gamma: T,
    pub eps1_n_gamma: T,
    /// `eps(n, 1)`.
    pub eps_n_one: T,
    pub eps_n_main: T,
    pub t0: T,
    pub t1: T,
    /// `||Rm||_{n/2}(0) C_S(0)^2`.
    pub theta0: T,
    /// `eps(n, gamma) - theta0`; nonnegative iff the small-energy hypothesis holds.
    pub hypothesis_margin: T,
    /// Under the hypothesis: `c(n,gamma)/||Rm||_{n/2}(0) >= gamma C_S^2` and `T1 = T0`.
    pub closing_step_verified: Option<bool>,
    pub kappa: Option<T>,
    pub eps_n_kappa: Option<T>,
}

fn eps_n_gamma<T: Real>(p: &ConstantPrimitives<T>, n: usize, gamma: T, root: T) -> (T, [T; 3], T) {
    let nf = T::from_count(n);
    let nn1 = nf * (nf - T::one());
    let b = ((-T::lit(8.0) / nf * (gamma + nn1 * root)).exp() / (T::lit(2.0) * nn1 * p.c_n))
        .min(root / gamma);
    let branches = [(nf - T::lit(2.0)) / (nf * p.c_n), T::one() / nn1, b];
    let eps = branches[0].min(branches[1]).min(branches[2]);
    (b, branches, eps)
}

/// Horizon `T0 = gamma vol0^{2/n} C_S(0)^2`.
pub fn horizon_t0<T: Real>(gamma: T, vol0: T, cs0: T, n: usize) -> T {
    gamma * vol0.powf(T::lit(2.0) / T::from_count(n)) * cs0 * cs0
}

pub fn constant_chain<T: Real>(
    primitives: &ConstantPrimitives<T>,
    inputs: &ChainInputs<T>,
) -> Result<ConstantChain<T>> {
    primitives.validate()?;
    let ChainInputs {
        n,
        gamma,
        vol0,
        cs0,
        rm_n2_0,
        scalar_neg_n2_0,
        kappa,
    } = *inputs;
    if !(vol0 > T::zero() && cs0 > T::zero()) || rm_n2_0 < T::zero() || scalar_neg_n2_0 < T::zero() {
        return Err(LabError::Domain(format!(
            "chain inputs must be positive (vol0 = {vol0}, cs0 = {cs0}, rm = {rm_n2_0})"
        )));
    }
    let root = solve_c_n_gamma(primitives.c_n, n, gamma)?;
    let root_one = solve_c_n_gamma(primitives.c_n, n, T::one())?;
    let (b, branches, eps) = eps_n_gamma(primitives, n, gamma, root);
    let (_, _, eps_one) = eps_n_gamma(primitives, n, T::one(), root_one);
    let eps1 = eps.min(T::one() / primitives.c3);
    let eps_main = eps_one.min(primitives.gromov_ruh_eps / (root_one * primitives.c_n));

    let two_over_n = T::lit(2.0) / T::from_count(n);
    let vol_factor = vol0.powf(two_over_n);
    let t0 = horizon_t0(gamma, vol0, cs0, n);
    let t1 = if rm_n2_0 > T::zero() {
        vol_factor * (gamma * cs0 * cs0).min(root / rm_n2_0)
    } else {
        t0
    };
    let theta0 = rm_n2_0 * cs0 * cs0;
    let closing_step_verified = if theta0 <= eps {
        let ok_ratio = rm_n2_0 == T::zero() || root / rm_n2_0 >= gamma * cs0 * cs0;
        Some(ok_ratio && t1 == t0)
    } else {
        None
    };
    let eps_n_kappa = kappa.map(|k| {
        let c = primitives.gallot.constant(n, k);
        eps_main / (c * c)
    });

    Ok(ConstantChain {
        n,
        gamma,
        delta0: delta0(cs0, scalar_neg_n2_0),
        c_n_gamma: root,
        c_n_one: root_one,
        b_n_gamma: b,
        eps_branches: branches,
        eps_n_gamma: eps,
        eps1_n_gamma: eps1,
        eps_n_one: eps_one,
        eps_n_main: eps_main,
        t0,
        t1,
        theta0,
        hypothesis_margin: eps - theta0,
        closing_step_verified,
        kappa,
        eps_n_kappa,
    })
}

/// Both sides of the exponent budget at `t = T1` on unit initial volume:
/// `T1 (C_S^{-2} + n(n-1)||Rm||)` and `gamma + n(n-1) c(n, gamma)`.
pub fn exponent_budget<T: Real>(chain: &ConstantChain<T>, inputs: &ChainInputs<T>) -> (T, T) {
    let nf = T::from_count(chain.n);
    let nn1 = nf * (nf - T::one());
    let t1 = chain.t1 / inputs.vol0.powf(T::lit(2.0) / nf);
    let lhs = t1 * (T::one() / (inputs.cs0 * inputs.cs0) + nn1 * inputs.rm_n2_0);
    (lhs, chain.gamma + nn1 * chain.c_n_gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_examples() {
        assert_eq!(horizon_t0(1.0, 1.0, 2.0, 3), 4.0);
        assert_eq!(horizon_t0(1.0, 1.0, 1.0, 3), 1.0);
        assert!((horizon_t0(2.0, 8.0, 1.0, 3) - 8.0f64).abs() < 1e-14);
    }

    #[test]
    fn zero_curvature_uses_gamma_branch() {
        let p = ConstantPrimitives::<f64>::default();
        let c = constant_chain(&p, &ChainInputs::new(3, 1.0, 2.0, 1.5, 0.0)).unwrap();
        assert_eq!(c.t1, c.t0);
        assert!((c.t0 - 2f64.powf(2.0 / 3.0) * 2.25).abs() < 1e-14);
        assert_eq!(c.closing_step_verified, Some(true));
    }

    #[test]
    fn three_one_branches() {
        let p = ConstantPrimitives::<f64>::default();
        let c = constant_chain(&p, &ChainInputs::new(3, 1.0f64, 1.0, 1.0, 1.0)).unwrap();
        let x = c.c_n_gamma;
        // hand evaluation of the three branches
        assert!((c.eps_branches[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.eps_branches[1] - 1.0 / 6.0).abs() < 1e-15);
        let b = ((-8.0 / 3.0 * (1.0 + 6.0 * x)).exp() / 12.0).min(x);
        assert!((c.b_n_gamma - b).abs() < 1e-15);
        assert_eq!(c.eps_n_gamma, b.min(1.0 / 6.0));
        assert!(c.eps_n_gamma <= 1.0 / 6.0);
        assert!(c.eps1_n_gamma <= c.eps_n_gamma);
        assert!(c.eps_n_main <= c.eps_n_one);
        assert!(c.t1 <= c.t0);
        // theta0 = 1 is far above eps
        assert!(c.hypothesis_margin < 0.0);
        assert_eq!(c.closing_step_verified, None);
    }

    #[test]
    fn small_energy_closes_chain() {
        let p = ConstantPrimitives::<f64>::default();
        let probe = constant_chain(&p, &ChainInputs::new(4, 1.0, 1.0, 1.0, 0.0)).unwrap();
        let rm = 0.5 * probe.eps_n_gamma;
        let c = constant_chain(&p, &ChainInputs::new(4, 1.0, 1.0, 1.0, rm)).unwrap();
        assert!(c.hypothesis_margin >= 0.0);
        assert_eq!(c.closing_step_verified, Some(true));
        assert_eq!(c.t1, c.t0);
    }

    #[test]
    fn exponent_budget_under_hypothesis() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(319);
        let mut drawn = 0;
        while drawn < 100 {
            let n = rng.random_range(3..=8usize);
            let gamma = 10f64.powf(rng.random_range(-1.0..1.0));
            let p = ConstantPrimitives {
                c_n: 10f64.powf(rng.random_range(-1.0..1.0)),
                ..ConstantPrimitives::default()
            };
            let cs0 = 10f64.powf(rng.random_range(-1.0..1.0));
            let probe = constant_chain(&p, &ChainInputs::new(n, gamma, 1.0, cs0, 0.0)).unwrap();
            let rm = rng.random_range(0.0..1.0) * probe.eps_n_gamma / (cs0 * cs0);
            let nn1 = (n * (n - 1)) as f64;
            let mut inp = ChainInputs::new(n, gamma, 1.0, cs0, rm);
            inp.scalar_neg_n2_0 = rng.random_range(0.0..1.0) * nn1 * rm;
            let c = constant_chain(&p, &inp).unwrap();
            assert!(c.hypothesis_margin >= 0.0);
            let (lhs, rhs) = exponent_budget(&c, &inp);
            // t delta0 at t = T1 sits below the first bound
            assert!(c.t1 * c.delta0 <= lhs * (1.0 + 1e-12));
            assert!(lhs <= rhs * (1.0 + 1e-12), "n={n} gamma={gamma}: {lhs} > {rhs}");
            drawn += 1;
        }
    }

    #[test]
    fn diameter_form_threshold() {
        let p = ConstantPrimitives::<f64>::default();
        let mut inp = ChainInputs::new(3, 1.0, 1.0, 1.0, 0.0);
        inp.kappa = Some(0.0);
        let c = constant_chain(&p, &inp).unwrap();
        assert_eq!(c.eps_n_kappa, Some(c.eps_n_main));
    }
}
