use serde::{Deserialize, Serialize};

use super::metric::{MetricData, MetricState};
use super::model::{Factor, ModelGeometry, ModelKind, SpaceForm};
use crate::error::Result;
use crate::scalar::Real;

/// Volume of the unit round sphere `S^d`, via `|S^d| = 2 pi |S^{d-2}| / (d - 1)`.
pub fn unit_sphere_volume<T: Real>(d: usize) -> T {
    match d {
        0 => T::lit(2.0),
        1 => T::two_pi(),
        _ => T::two_pi() * unit_sphere_volume::<T>(d - 2) / T::from_count(d - 1),
    }
}

/// Volume of a factor whose metric is `scale` times the unit reference.
pub fn factor_volume<T: Real>(f: &Factor<T>, scale: T) -> T {
    let r = scale.sqrt();
    match f.form {
        SpaceForm::Sphere => unit_sphere_volume::<T>(f.dim) * r.powi(f.dim as i32),
        SpaceForm::Circle => T::two_pi() * r,
        SpaceForm::FlatTorus => r.powi(f.dim as i32),
    }
}

pub fn factor_diameter<T: Real>(f: &Factor<T>, scale: T) -> T {
    let r = scale.sqrt();
    match f.form {
        SpaceForm::Sphere | SpaceForm::Circle => T::pi() * r,
        SpaceForm::FlatTorus => T::from_count(f.dim).sqrt() * r * T::lit(0.5),
    }
}

/// `sqrt(det g) * covolume`, or the product of factor volumes.
pub fn volume<T: Real>(model: &ModelGeometry<T>, g: &MetricState<T>) -> Result<T> {
    g.check_against(model)?;
    Ok(match (model.kind(), &g.data) {
        (ModelKind::LieGroupQuotient { covolume, .. }, MetricData::Matrix(m)) => {
            m.clone().determinant().sqrt() * *covolume
        }
        (ModelKind::ProductOfSpaceForms { factors }, MetricData::Scales(s)) => factors
            .iter()
            .zip(s)
            .fold(T::one(), |acc, (f, sc)| acc * factor_volume(f, *sc)),
        _ => unreachable!("checked against model"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", tag = "status", content = "value", rename_all = "kebab-case")]
pub enum Diameter<T> {
    Exact(T),
    /// No exact formula is available; callers must supply an upper bound.
    Unavailable,
}

impl<T: Real> Diameter<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            Diameter::Exact(d) => Some(*d),
            Diameter::Unavailable => None,
        }
    }
}

/// Exact product diameter `sqrt(sum diam_i^2)`; unavailable for quotients.
pub fn diameter<T: Real>(model: &ModelGeometry<T>, g: &MetricState<T>) -> Result<Diameter<T>> {
    g.check_against(model)?;
    Ok(match (model.kind(), &g.data) {
        (ModelKind::ProductOfSpaceForms { factors }, MetricData::Scales(s)) => {
            let sq = factors.iter().zip(s).fold(T::zero(), |acc, (f, sc)| {
                let d = factor_diameter(f, *sc);
                acc + d * d
            });
            Diameter::Exact(sq.sqrt())
        }
        _ => Diameter::Unavailable,
    })
}
