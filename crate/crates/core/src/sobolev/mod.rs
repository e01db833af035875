//! Integral curvature norms and two-sided Sobolev-constant estimates.
//!
//! The Sobolev constant `C_S` is the smallest `C` with
//! `||u||_{2n/(n-2)} <= C ||grad u||_2 + vol^{-1/n} ||u||_2`. Any single test
//! function bounds it from below; the Gallot-type bound
//! `c(n, kappa) diam / vol^{1/n}` bounds it from above.

pub mod norms;
pub mod profiles;

use serde::{Deserialize, Serialize};

pub use norms::{
    admissible_kappa, gallot_upper, integral_ricci_deficit, rm_critical_norm, rm_lp_norm,
    scalar_negative_part_norm, GallotConstant, GallotStrategy,
};
pub use profiles::{witness_norms, ProfileDomain, WitnessFamily, WitnessNorms};

use crate::error::{LabError, Result};
use crate::geometry::{curvature_with, diameter, MetricState, ModelGeometry, SectionalSampling};
use crate::scalar::Real;

/// Lower bound produced by a witness family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SobolevLower<T> {
    pub value: T,
    /// Best raw ratio was negative and has been clamped to zero.
    pub clamped: bool,
    pub witness: String,
    pub domain: String,
    /// Witnesses with vanishing gradient that were skipped.
    pub skipped: Vec<String>,
}

/// Sobolev ratio of one witness, `None` when the gradient vanishes.
pub fn witness_ratio<T: Real>(w: &WitnessNorms<T>, vol: T, n: usize) -> Option<T> {
    if !(w.grad_l2 > T::zero()) {
        return None;
    }
    let scale = vol.powf(-T::one() / T::from_count(n));
    Some((w.critical - scale * w.l2) / w.grad_l2)
}

/// `max_u (||u||_{2n/(n-2)} - vol^{-1/n} ||u||_2) / ||grad u||_2` over a
/// witness family, clamped at zero.
pub fn sobolev_lower<T: Real>(
    model: &ModelGeometry<T>,
    g: &MetricState<T>,
    family: WitnessFamily,
    grid: usize,
) -> Result<SobolevLower<T>> {
    let domain = ProfileDomain::select(model, g)?;
    let norms = witness_norms(&domain, family, grid)?;
    lower_from_norms(&domain, &norms)
}

pub fn lower_from_norms<T: Real>(
    domain: &ProfileDomain<T>,
    norms: &[WitnessNorms<T>],
) -> Result<SobolevLower<T>> {
    if norms.is_empty() {
        return Err(LabError::Argument("empty witness family".into()));
    }
    let mut best: Option<(T, &str)> = None;
    let mut skipped = Vec::new();
    for w in norms {
        match witness_ratio(w, domain.total_volume, domain.n) {
            None => skipped.push(w.label.clone()),
            Some(r) => {
                if best.is_none_or(|(b, _)| r > b) {
                    best = Some((r, &w.label));
                }
            }
        }
    }
    let (raw, label) = best.ok_or_else(|| {
        LabError::Argument("every witness in the family has zero gradient".into())
    })?;
    Ok(SobolevLower {
        value: raw.max(T::zero()),
        clamped: raw < T::zero(),
        witness: label.to_string(),
        domain: domain.description.clone(),
        skipped,
    })
}

/// Both-sided estimate of `C_S` for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SobolevEstimate<T> {
    pub upper: Option<T>,
    pub lower: Option<T>,
    pub kappa: T,
    pub witness: Option<String>,
    pub strategy: String,
    /// `lower <= upper` when both are present; a `false` here flags an
    /// aggressive configured constant rather than an error.
    pub consistent: Option<bool>,
}

/// Combines the witness lower bound with the upper bound. The upper bound
/// uses the exact diameter when available, else `diam_bound`, with the
/// smallest admissible `kappa` unless one is given.
pub fn sobolev_estimate<T: Real>(
    model: &ModelGeometry<T>,
    g: &MetricState<T>,
    family: WitnessFamily,
    grid: usize,
    strategy: &dyn GallotConstant<T>,
    kappa: Option<T>,
    diam_bound: Option<T>,
) -> Result<SobolevEstimate<T>> {
    let vol = crate::geometry::volume(model, g)?;
    let curv = curvature_with(model, g, SectionalSampling::coordinate_only())?;
    let diam = diameter(model, g)?.value().or(diam_bound);
    let kappa = match (kappa, diam) {
        (Some(k), _) => k,
        (None, Some(d)) => admissible_kappa(d, curv.ric_min()),
        (None, None) => T::zero(),
    };
    let upper = match diam {
        Some(d) => Some(gallot_upper(model.dim(), kappa, d, vol, strategy)?),
        None => None,
    };
    let lower = match sobolev_lower(model, g, family, grid) {
        Ok(l) => Some(l),
        Err(LabError::Argument(_)) => None,
        Err(e) => return Err(e),
    };
    let consistent = match (&lower, upper) {
        (Some(l), Some(u)) => Some(l.value <= u),
        _ => None,
    };
    Ok(SobolevEstimate {
        upper,
        lower: lower.as_ref().map(|l| l.value),
        kappa,
        witness: lower.map(|l| l.witness),
        strategy: strategy.describe(),
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricState;
    use std::f64::consts::PI;

    #[test]
    fn constant_is_null_witness() {
        let m = ModelGeometry::<f64>::round_sphere(3, 1.0).unwrap();
        let g = MetricState::reference(&m);
        let d = ProfileDomain::select(&m, &g).unwrap();
        let c = profiles::profile_norms(&d, &profiles::Profile::Constant, 512).unwrap();
        // ||1||_6 = vol^{1/6} = vol^{-1/3} ||1||_2
        assert!((c.critical - d.total_volume.powf(-1.0 / 3.0) * c.l2).abs() < 1e-12);
        assert!(witness_ratio(&c, d.total_volume, 3).is_none());
    }

    #[test]
    fn unit_sphere_eigenfunction_lower_bound() {
        let m = ModelGeometry::<f64>::round_sphere(3, 1.0).unwrap();
        let g = MetricState::reference(&m);
        let lo = sobolev_lower(&m, &g, WitnessFamily::Eigenfunction, 512).unwrap();
        assert!(lo.value > 0.0 && !lo.clamped);
        // hand oracle for u = cos(phi): Wallis integrals
        let oracle = ((5.0 * PI * PI / 32.0).powf(1.0 / 6.0)
            - (2.0 * PI * PI).powf(-1.0 / 3.0) * (PI * PI / 2.0).sqrt())
            / (1.5 * PI * PI).sqrt();
        assert!(lo.value >= oracle - 1e-6);
    }

    #[test]
    fn lower_bound_is_scale_invariant() {
        let m = ModelGeometry::<f64>::sphere_times_circle(3, 0.5).unwrap();
        let g = MetricState::reference(&m);
        let a = sobolev_lower(&m, &g, WitnessFamily::All, 512).unwrap();
        let b = sobolev_lower(&m, &g.scaled(9.0), WitnessFamily::All, 512).unwrap();
        assert!((a.value - b.value).abs() <= 1e-6 * a.value);
        assert_eq!(a.witness, b.witness);
    }

    #[test]
    fn estimate_orders_bounds() {
        let m = ModelGeometry::<f64>::round_sphere(3, 1.0).unwrap();
        let g = MetricState::reference(&m);
        let est = sobolev_estimate(&m, &g, WitnessFamily::All, 512, &GallotStrategy::default(), None, None).unwrap();
        assert_eq!(est.kappa, 0.0);
        assert_eq!(est.consistent, Some(true));
        let h = ModelGeometry::<f64>::heisenberg();
        let est = sobolev_estimate(&h, &MetricState::reference(&h), WitnessFamily::All, 512, &GallotStrategy::default(), None, None).unwrap();
        assert!(est.upper.is_none() && est.lower.is_some());
    }
}
