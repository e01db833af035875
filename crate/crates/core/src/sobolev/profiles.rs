//! One-variable test functions used as Sobolev witnesses.
//!
//! Every witness is a function of the polar angle `phi` in `[0, pi]` on a
//! round `S^d` factor of radius `r` (a circle is `S^1` with `r = length/2pi`),
//! extended constantly over the remaining directions. Norms are computed by
//! piecewise trapezoidal quadrature against `r^d |S^{d-1}| sin^{d-1}(phi)`,
//! refined until two resolutions agree.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::measure::unit_sphere_volume;
use crate::geometry::metric::MetricData;
use crate::geometry::{volume, MetricState, ModelGeometry, ModelKind, SpaceForm};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessFamily {
    /// `c + cos(phi)` for a few offsets `c`.
    Eigenfunction,
    /// `((1 + cos phi) / 2)^m`.
    Bump,
    /// Linear caps `max(0, 1 - phi / a)`.
    Cap,
    /// Union of the three.
    All,
}

impl std::str::FromStr for WitnessFamily {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eigenfunction" => Ok(Self::Eigenfunction),
            "bump" => Ok(Self::Bump),
            "cap" => Ok(Self::Cap),
            "all" => Ok(Self::All),
            other => Err(LabError::Config(format!(
                "unknown witness family `{other}` (expected eigenfunction, bump, cap or all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile<T> {
    Constant,
    Eigen { offset: T },
    Bump { power: i32 },
    Cap { width: T },
}

impl<T: Real> Profile<T> {
    pub fn label(&self) -> String {
        match self {
            Profile::Constant => "constant".into(),
            Profile::Eigen { offset } => format!("eigenfunction(offset={offset})"),
            Profile::Bump { power } => format!("bump(m={power})"),
            Profile::Cap { width } => format!("cap(a={:.6})", width.as_f64()),
        }
    }

    fn breakpoints(&self) -> Vec<T> {
        match self {
            Profile::Cap { width } if *width < T::pi() => vec![*width],
            _ => Vec::new(),
        }
    }

    /// Value and `d/dphi` at `phi`; `hint` is a point in the same smooth piece.
    fn eval(&self, phi: T, hint: T) -> (T, T) {
        match *self {
            Profile::Constant => (T::one(), T::zero()),
            Profile::Eigen { offset } => (offset + phi.cos(), -phi.sin()),
            Profile::Bump { power } => {
                let half = T::lit(0.5);
                let base = (T::one() + phi.cos()) * half;
                let du = T::from_count(power as usize) * base.powi(power - 1) * (-phi.sin() * half);
                (base.powi(power), du)
            }
            Profile::Cap { width } => {
                if hint < width {
                    ((T::one() - phi / width).max(T::zero()), -T::one() / width)
                } else {
                    (T::zero(), T::zero())
                }
            }
        }
    }

    pub fn family(family: WitnessFamily) -> Vec<Profile<T>> {
        let eig = [0.0, 0.5, 1.0, 2.0].map(|c| Profile::Eigen { offset: T::lit(c) });
        let bump = [1, 2, 3, 4, 6].map(|m| Profile::Bump { power: m });
        let cap = [0.125, 0.25, 0.5, 0.75, 1.0].map(|a| Profile::Cap {
            width: T::pi() * T::lit(a),
        });
        match family {
            WitnessFamily::Eigenfunction => eig.to_vec(),
            WitnessFamily::Bump => bump.to_vec(),
            WitnessFamily::Cap => cap.to_vec(),
            WitnessFamily::All => eig.into_iter().chain(bump).chain(cap).collect(),
        }
    }
}

/// The factor carrying the witness profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ProfileDomain<T> {
    pub n: usize,
    /// Dimension `d` of the round factor (1 for a circle).
    pub axis_dim: usize,
    pub radius: T,
    /// Volume of the complementary directions.
    pub other_volume: T,
    pub total_volume: T,
    pub description: String,
}

impl<T: Real> ProfileDomain<T> {
    /// Picks the witness axis: the first sphere factor, else the first circle
    /// or torus direction of a product; for a quotient, the first basis
    /// direction `e_a` whose dual form is closed (`c^a_ij = 0`), assumed to
    /// have unit period in the lattice.
    pub fn select(model: &ModelGeometry<T>, g: &MetricState<T>) -> Result<Self> {
        let total = volume(model, g)?;
        let n = model.dim();
        let (axis_dim, radius, description) = match (model.kind(), &g.data) {
            (ModelKind::ProductOfSpaceForms { factors }, MetricData::Scales(s)) => {
                let pick = factors
                    .iter()
                    .zip(s)
                    .enumerate()
                    .find(|(_, (f, _))| f.form == SpaceForm::Sphere)
                    .or_else(|| factors.iter().zip(s).enumerate().next())
                    .expect("product has factors");
                let (idx, (f, scale)) = pick;
                let r = scale.sqrt();
                match f.form {
                    SpaceForm::Sphere => (f.dim, r, format!("factor {} (S^{})", idx + 1, f.dim)),
                    SpaceForm::Circle => (1, r, format!("factor {} (circle)", idx + 1)),
                    SpaceForm::FlatTorus => (
                        1,
                        r / T::two_pi(),
                        format!("factor {} (torus coordinate circle)", idx + 1),
                    ),
                }
            }
            (ModelKind::LieGroupQuotient { constants, .. }, MetricData::Matrix(gm)) => {
                let a = (0..n)
                    .find(|&a| (0..n).all(|i| (0..n).all(|j| constants.get(a, i, j) == T::zero())))
                    .ok_or_else(|| {
                        LabError::Argument(
                            "no basis direction with closed dual form for witness profiles".into(),
                        )
                    })?;
                let ginv = gm
                    .clone()
                    .try_inverse()
                    .ok_or(LabError::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
                let length = T::one() / ginv[(a, a)].sqrt();
                (1, length / T::two_pi(), format!("basis direction e{}", a + 1))
            }
            _ => {
                return Err(LabError::MetricShape(
                    "metric representation does not match model kind".into(),
                ))
            }
        };
        let axis_volume = unit_sphere_volume::<T>(axis_dim) * radius.powi(axis_dim as i32);
        Ok(Self {
            n,
            axis_dim,
            radius,
            other_volume: total / axis_volume,
            total_volume: total,
            description,
        })
    }

    /// Critical Sobolev exponent `2n / (n - 2)`.
    pub fn critical_exponent(&self) -> T {
        let n = T::from_count(self.n);
        T::lit(2.0) * n / (n - T::lit(2.0))
    }

    fn weight(&self, phi: T) -> T {
        let d = self.axis_dim;
        unit_sphere_volume::<T>(d - 1) * self.radius.powi(d as i32) * phi.sin().powi(d as i32 - 1)
    }

    /// Raw integrals `(int |u|^q, int u^2, int |grad u|^2)` over the whole
    /// model with `intervals` trapezoid panels.
    fn integrals(&self, profile: &Profile<T>, intervals: usize) -> (T, T, T) {
        let q = self.critical_exponent();
        let mut edges = vec![T::zero()];
        edges.extend(profile.breakpoints());
        edges.push(T::pi());
        let inv_r2 = T::one() / (self.radius * self.radius);
        let (mut iq, mut i2, mut ig) = (T::zero(), T::zero(), T::zero());
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let frac = ((b - a) / T::pi()).as_f64();
            let m = ((intervals as f64 * frac).ceil() as usize).max(2);
            let h = (b - a) / T::from_count(m);
            let hint = (a + b) * T::lit(0.5);
            for k in 0..=m {
                let phi = if k == m { b } else { a + h * T::from_count(k) };
                let coef = if k == 0 || k == m { T::lit(0.5) } else { T::one() };
                let (u, du) = profile.eval(phi, hint);
                let wt = self.weight(phi) * coef * h;
                iq += u.abs().powf(q) * wt;
                i2 += u * u * wt;
                ig += du * du * inv_r2 * wt;
            }
        }
        (iq * self.other_volume, i2 * self.other_volume, ig * self.other_volume)
    }
}

/// Norms of one witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct WitnessNorms<T> {
    pub label: String,
    /// `||u||_{2n/(n-2)}`.
    pub critical: T,
    pub l2: T,
    pub grad_l2: T,
    pub intervals: usize,
}

pub const MIN_GRID: usize = 512;
const MAX_GRID: usize = 1 << 20;
const REFINE_TOL: f64 = 1e-7;

pub fn profile_norms<T: Real>(
    domain: &ProfileDomain<T>,
    profile: &Profile<T>,
    grid: usize,
) -> Result<WitnessNorms<T>> {
    let q = domain.critical_exponent();
    let to_norms = |(iq, i2, ig): (T, T, T)| (iq.powf(T::one() / q), i2.sqrt(), ig.sqrt());
    let mut m = grid.max(MIN_GRID);
    let mut coarse = to_norms(domain.integrals(profile, m));
    loop {
        let fine = to_norms(domain.integrals(profile, 2 * m));
        let tol = T::lit(REFINE_TOL);
        let agree = |a: T, b: T| (a - b).abs() <= tol * a.abs().max(b.abs()).max(T::lit(1e-300));
        if agree(coarse.0, fine.0) && agree(coarse.1, fine.1) && agree(coarse.2, fine.2) {
            return Ok(WitnessNorms {
                label: profile.label(),
                critical: fine.0,
                l2: fine.1,
                grad_l2: fine.2,
                intervals: 2 * m,
            });
        }
        if 2 * m >= MAX_GRID {
            return Err(LabError::Argument(format!(
                "quadrature for {} did not settle by {} panels",
                profile.label(),
                2 * m
            )));
        }
        coarse = fine;
        m *= 2;
    }
}

pub fn witness_norms<T: Real>(
    domain: &ProfileDomain<T>,
    family: WitnessFamily,
    grid: usize,
) -> Result<Vec<WitnessNorms<T>>> {
    Profile::family(family)
        .iter()
        .map(|p| profile_norms(domain, p, grid))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_form_norms_on_unit_three_sphere() {
        let m = ModelGeometry::<f64>::round_sphere(3, 1.0).unwrap();
        let g = MetricState::reference(&m);
        let d = ProfileDomain::select(&m, &g).unwrap();
        let w = profile_norms(&d, &Profile::Eigen { offset: 0.0 }, 512).unwrap();
        // Wallis integrals: int cos^2 = pi^2/2, int cos^6 = 5 pi^2/32, int sin^2 = 3 pi^2/2
        assert!((w.l2 - (PI * PI / 2.0).sqrt()).abs() < 1e-7);
        assert!((w.critical - (5.0 * PI * PI / 32.0).powf(1.0 / 6.0)).abs() < 1e-7);
        assert!((w.grad_l2 - (1.5 * PI * PI).sqrt()).abs() < 1e-7);
        let c = profile_norms(&d, &Profile::Constant, 512).unwrap();
        assert!((c.l2 - (2.0 * PI * PI).sqrt()).abs() < 1e-9);
        assert_eq!(c.grad_l2, 0.0);
    }

    #[test]
    fn circle_axis_matches_flat_integrals() {
        // S^1 of length L: int cos^2(2 pi x / L) = L / 2
        let m = ModelGeometry::<f64>::flat_torus(3, 1.0).unwrap();
        let g = MetricState::reference(&m);
        let d = ProfileDomain::select(&m, &g).unwrap();
        assert_eq!(d.axis_dim, 1);
        let w = profile_norms(&d, &Profile::Eigen { offset: 0.0 }, 512).unwrap();
        assert!((w.l2 - 0.5f64.sqrt()).abs() < 1e-7);
        // |u'| = 2 pi |sin|, int = 4 pi^2 / 2
        assert!((w.grad_l2 - (2.0 * PI * PI).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn heisenberg_uses_closed_direction() {
        let m = ModelGeometry::<f64>::heisenberg();
        let g = MetricState::reference(&m);
        let d = ProfileDomain::select(&m, &g).unwrap();
        assert_eq!(d.description, "basis direction e1");
        assert!((d.other_volume * 2.0 * PI * d.radius - 1.0).abs() < 1e-14);
    }
}
