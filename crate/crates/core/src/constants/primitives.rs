use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scalar::Real;
use crate::sobolev::GallotStrategy;

/// The universal constants whose existence the estimates rely on but whose
/// values are not known. They are explicit configuration and are echoed
/// into every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ConstantPrimitives<T> {
    /// The recurring dimensional constant `c(n)`.
    pub c_n: T,
    /// `a_n >= 1` from the flow-time Sobolev condition.
    pub a_n: T,
    /// `c_3(n, gamma)` of the `L^{p0/2}` bootstrap.
    pub c3: T,
    /// Provider of `c(n, kappa)` in the upper Sobolev bound.
    pub gallot: GallotStrategy<T>,
    /// Gromov-Ruh threshold, `0 < eps <= 1`.
    pub gromov_ruh_eps: T,
}

impl<T: Real> Default for ConstantPrimitives<T> {
    fn default() -> Self {
        Self {
            c_n: T::one(),
            a_n: T::one(),
            c3: T::one(),
            gallot: GallotStrategy::default(),
            gromov_ruh_eps: T::one(),
        }
    }
}

impl<T: Real> ConstantPrimitives<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(LabError::Config(format!("constants.{name} must be positive, got {v}")))
            }
        };
        positive("c_n", self.c_n)?;
        positive("a_n", self.a_n)?;
        positive("c3", self.c3)?;
        positive("gromov_ruh_eps", self.gromov_ruh_eps)?;
        if self.a_n < T::one() {
            return Err(LabError::Config(format!("constants.a_n must be >= 1, got {}", self.a_n)));
        }
        if self.gromov_ruh_eps > T::one() {
            return Err(LabError::Config(format!(
                "constants.gromov_ruh_eps must be <= 1, got {}",
                self.gromov_ruh_eps
            )));
        }
        match self.gallot {
            GallotStrategy::Default { base } => positive("gallot base", base)?,
            GallotStrategy::Fixed { value } => positive("gallot", value)?,
        }
        Ok(())
    }
}

/// `delta_0 = C_S(0)^{-2} + ||R^-||_{n/2}(0)`.
pub fn delta0<T: Real>(cs0: T, neg_part_norm: T) -> T {
    T::one() / (cs0 * cs0) + neg_part_norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta0_examples() {
        assert!((delta0(2.0, 0.1) - 0.35f64).abs() < 1e-15);
        assert_eq!(delta0(1.0, 0.0), 1.0);
        assert_eq!(delta0(0.5f64, 0.0), 4.0);
    }

    #[test]
    fn validation() {
        ConstantPrimitives::<f64>::default().validate().unwrap();
        let p = ConstantPrimitives::<f64> { a_n: 0.5, ..Default::default() };
        assert!(p.validate().is_err());
        let p = ConstantPrimitives::<f64> { gromov_ruh_eps: 1.5, ..Default::default() };
        assert!(p.validate().is_err());
        let p = ConstantPrimitives::<f64> { c_n: -1.0, ..Default::default() };
        assert!(p.validate().is_err());
    }
}
