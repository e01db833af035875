use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::CurvatureData;
use crate::scalar::Real;

/// `(int |Rm|^p)^{1/p}` for a homogeneous metric, i.e. `|Rm| vol^{1/p}`.
///
/// At `p = n/2` this is the scale-invariant `(int |Rm|^{n/2})^{2/n}`.
pub fn rm_lp_norm<T: Real>(curv: &CurvatureData<T>, vol: T, p: T) -> Result<T> {
    if !(p >= T::one()) {
        return Err(LabError::Domain(format!("L^p norm needs p >= 1, got {p}")));
    }
    Ok(curv.rm_norm * vol.powf(T::one() / p))
}

/// `||Rm||_{n/2}`.
pub fn rm_critical_norm<T: Real>(curv: &CurvatureData<T>, vol: T) -> T {
    let n = T::from_count(curv.dim());
    curv.rm_norm * vol.powf(T::lit(2.0) / n)
}

/// `||R^-||_{n/2}`, the critical norm of the negative part of scalar curvature.
pub fn scalar_negative_part_norm<T: Real>(curv: &CurvatureData<T>, vol: T) -> T {
    let n = T::from_count(curv.dim());
    (-curv.scalar).max(T::zero()) * vol.powf(T::lit(2.0) / n)
}

/// `((1/vol) int (Ric - kappa)_-^p)^{1/p}` with `(Ric - kappa)_-` the negative
/// part of the lowest Ricci eigenvalue minus `kappa`.
pub fn integral_ricci_deficit<T: Real>(curv: &CurvatureData<T>, p: T, kappa: T) -> Result<T> {
    let half_n = T::from_count(curv.dim()) * T::lit(0.5);
    if !(p > half_n) {
        return Err(LabError::Domain(format!(
            "Ricci deficit needs p > n/2 = {half_n}, got {p}"
        )));
    }
    // constant integrand: the normalized L^p norm is the pointwise value
    Ok((kappa - curv.ric_min()).max(T::zero()))
}

/// Source of the constant `c(n, kappa)` in the upper Sobolev bound
/// `C_S <= c(n, kappa) diam / vol^{1/n}` valid under `diam^2 Ric >= -kappa`.
pub trait GallotConstant<T> {
    fn constant(&self, n: usize, kappa: T) -> T;
    fn describe(&self) -> String;
}

/// Built-in strategies. `Default` is `base * exp(sqrt(kappa))`: equal to
/// `base` (1 unless configured) at `kappa = 0` and increasing in `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", tag = "strategy", rename_all = "kebab-case")]
pub enum GallotStrategy<T> {
    Default { base: T },
    Fixed { value: T },
}

impl<T: Real> Default for GallotStrategy<T> {
    fn default() -> Self {
        GallotStrategy::Default { base: T::one() }
    }
}

impl<T: Real> GallotConstant<T> for GallotStrategy<T> {
    fn constant(&self, _n: usize, kappa: T) -> T {
        match *self {
            GallotStrategy::Default { base } => base * kappa.max(T::zero()).sqrt().exp(),
            GallotStrategy::Fixed { value } => value,
        }
    }

    fn describe(&self) -> String {
        match self {
            GallotStrategy::Default { base } => format!("default: {base} * exp(sqrt(kappa))"),
            GallotStrategy::Fixed { value } => format!("fixed: {value}"),
        }
    }
}

/// `c(n, kappa) diam / vol^{1/n}`.
pub fn gallot_upper<T: Real>(
    n: usize,
    kappa: T,
    diam: T,
    vol: T,
    strategy: &dyn GallotConstant<T>,
) -> Result<T> {
    if !(diam > T::zero() && vol > T::zero()) {
        return Err(LabError::Domain(format!(
            "diam and vol must be positive (diam = {diam}, vol = {vol})"
        )));
    }
    if kappa < T::zero() {
        return Err(LabError::Domain(format!("kappa must be >= 0, got {kappa}")));
    }
    let c = strategy.constant(n, kappa);
    if !(c > T::zero()) || !c.is_finite() {
        return Err(LabError::Config(format!(
            "Sobolev constant strategy `{}` returned {c} for n = {n}, kappa = {kappa}",
            strategy.describe()
        )));
    }
    Ok(c * diam / vol.powf(T::one() / T::from_count(n)))
}

/// Smallest `kappa >= 0` with `diam^2 Ric >= -kappa`.
pub fn admissible_kappa<T: Real>(diam: T, ric_min: T) -> T {
    (-(diam * diam) * ric_min).max(T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{curvature, volume, MetricState, ModelGeometry};
    use std::f64::consts::PI;

    fn data(m: &ModelGeometry<f64>) -> (CurvatureData<f64>, f64) {
        let g = MetricState::reference(m);
        (curvature(m, &g).unwrap(), volume(m, &g).unwrap())
    }

    #[test]
    fn lp_norm_examples() {
        let t = ModelGeometry::<f64>::flat_torus(3, 1.0).unwrap();
        let (c, v) = data(&t);
        assert_eq!(rm_lp_norm(&c, v, 1.5).unwrap(), 0.0);

        let s3 = ModelGeometry::<f64>::round_sphere(3, 1.0).unwrap();
        let (c, v) = data(&s3);
        let x = rm_lp_norm(&c, v, 1.5).unwrap();
        let expect = 12f64.sqrt() * (2.0 * PI * PI).powf(2.0 / 3.0);
        assert!((x - expect).abs() < 1e-12 * expect);
        assert!((x - 25.3014).abs() < 1e-4);
        assert!((rm_critical_norm(&c, v) - x).abs() < 1e-12);

        let eps = 0.125;
        let p = ModelGeometry::<f64>::sphere_times_circle(3, eps).unwrap();
        let (c, v) = data(&p);
        let expect = 12f64.sqrt() * (4.0 * PI.powi(3)).sqrt() * eps.sqrt();
        assert!((rm_lp_norm(&c, v, 2.0).unwrap() - expect).abs() < 1e-12 * expect);
        assert!(rm_lp_norm(&c, v, 0.5).is_err());
    }

    #[test]
    fn gallot_examples() {
        let s = GallotStrategy::<f64>::default();
        let a = gallot_upper(3, 0.0, 2.0, 5.0, &s).unwrap();
        let b = gallot_upper(3, 1.0, 2.0, 5.0, &s).unwrap();
        assert!(a <= b);
        let x = gallot_upper(3, 0.0, PI, 2.0 * PI * PI, &GallotStrategy::Fixed { value: 1.0 }).unwrap();
        assert!((x - PI / (2.0 * PI * PI).cbrt()).abs() < 1e-14);
        assert!((x - 1.1624).abs() < 1e-3);
        // scale-free: diam -> l diam, vol -> l^3 vol
        let y = gallot_upper(3, 0.0, 10.0 * PI, 1000.0 * 2.0 * PI * PI, &s).unwrap();
        assert!((x - y).abs() < 1e-14);
        assert!(matches!(
            gallot_upper(3, 0.0, 1.0, 1.0, &GallotStrategy::Fixed { value: 0.0 }),
            Err(LabError::Config(_))
        ));
    }

    #[test]
    fn ricci_deficit_examples() {
        let s3 = ModelGeometry::<f64>::round_sphere(3, 1.0).unwrap();
        let (c, _) = data(&s3);
        assert_eq!(integral_ricci_deficit(&c, 2.0, 1.0).unwrap(), 0.0);
        let h = ModelGeometry::<f64>::heisenberg();
        let (c, _) = data(&h);
        assert!((integral_ricci_deficit(&c, 2.0, 0.0).unwrap() - 0.5).abs() < 1e-14);
        let t = ModelGeometry::<f64>::flat_torus(3, 1.0).unwrap();
        let (c, _) = data(&t);
        assert_eq!(integral_ricci_deficit(&c, 2.0, 0.0).unwrap(), 0.0);
        assert!(integral_ricci_deficit(&c, 1.5, 0.0).is_err());
    }
}
