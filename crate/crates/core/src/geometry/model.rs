use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scalar::Real;

/// Lie-algebra structure constants `c^k_ij` in a fixed basis, so that
/// `[e_i, e_j] = sum_k c^k_ij e_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct StructureConstants<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> StructureConstants<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim * dim],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `c^k_ij`.
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> T {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, value: T) {
        let n = self.dim;
        self.data[(k * n + i) * n + j] = value;
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| *c == T::zero())
    }

    /// Checks `c^k_ij = -c^k_ji` exactly (up to `tol`) and the Jacobi identity.
    pub fn validate(&self, tol: T) -> Result<()> {
        let n = self.dim;
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let cij = self.get(k, i, j);
                    let cji = self.get(k, j, i);
                    if (cij + cji).abs() > tol {
                        return Err(LabError::Antisymmetry {
                            i: i + 1,
                            j: j + 1,
                            k: k + 1,
                            cij: cij.as_f64(),
                            cji: cji.as_f64(),
                        });
                    }
                }
            }
        }
        let scale = T::one().max(self.max_abs() * self.max_abs());
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = T::zero();
                        for m in 0..n {
                            s += self.get(m, i, j) * self.get(l, m, k)
                                + self.get(m, j, k) * self.get(l, m, i)
                                + self.get(m, k, i) * self.get(l, m, j);
                        }
                        if s.abs() > tol * scale {
                            return Err(LabError::Jacobi {
                                i: i + 1,
                                j: j + 1,
                                k: k + 1,
                                l: l + 1,
                                residual: s.as_f64(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// One bracket entry `c^k_ij = coeff` with zero-based indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket<T> {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub coeff: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceForm {
    Sphere,
    Circle,
    FlatTorus,
}

/// A constant-curvature factor. The reference metric is the round sphere of
/// the given radius, the circle of that radius, or the square torus
/// `R^d / (radius Z)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Factor<T> {
    pub form: SpaceForm,
    pub dim: usize,
    pub radius: T,
}

impl<T: Real> Factor<T> {
    pub fn sphere(dim: usize, radius: T) -> Self {
        Self {
            form: SpaceForm::Sphere,
            dim,
            radius,
        }
    }

    pub fn circle(radius: T) -> Self {
        Self {
            form: SpaceForm::Circle,
            dim: 1,
            radius,
        }
    }

    pub fn flat_torus(dim: usize, side: T) -> Self {
        Self {
            form: SpaceForm::FlatTorus,
            dim,
            radius: side,
        }
    }
}

/// User-facing model description, before validation.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec<T> {
    LieGroupQuotient {
        dim: usize,
        brackets: Vec<Bracket<T>>,
        covolume: T,
    },
    ProductOfSpaceForms {
        factors: Vec<Factor<T>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", tag = "kind", rename_all = "kebab-case")]
pub enum ModelKind<T> {
    LieGroupQuotient {
        constants: StructureConstants<T>,
        covolume: T,
    },
    ProductOfSpaceForms {
        factors: Vec<Factor<T>>,
    },
}

/// A homogeneous model space on which curvature is an algebraic function of
/// finitely many metric parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ModelGeometry<T> {
    dim: usize,
    kind: ModelKind<T>,
}

const JACOBI_TOL: f64 = 1e-12;

/// Validates a model description.
///
/// Each bracket entry sets `c^k_ij`; the mirrored entry `c^k_ji` defaults to
/// the negated coefficient unless it is given explicitly, in which case the
/// two must be antisymmetric.
pub fn build_model<T: Real>(spec: &ModelSpec<T>) -> Result<ModelGeometry<T>> {
    match spec {
        ModelSpec::LieGroupQuotient {
            dim,
            brackets,
            covolume,
        } => {
            let n = *dim;
            if n < 3 {
                return Err(LabError::Dimension(format!(
                    "Lie group quotients need dim >= 3, got {n}"
                )));
            }
            if !(*covolume > T::zero()) {
                return Err(LabError::Argument(format!(
                    "covolume must be positive, got {covolume}"
                )));
            }
            let mut explicit: BTreeMap<(usize, usize, usize), T> = BTreeMap::new();
            for b in brackets {
                if b.i >= n || b.j >= n || b.k >= n {
                    return Err(LabError::Argument(format!(
                        "bracket index ({}, {}, {}) out of range for dim {n}",
                        b.i + 1,
                        b.j + 1,
                        b.k + 1
                    )));
                }
                if let Some(prev) = explicit.insert((b.k, b.i, b.j), b.coeff) {
                    if prev != b.coeff {
                        return Err(LabError::Argument(format!(
                            "bracket c^{}_{}{} given twice with different values",
                            b.k + 1,
                            b.i + 1,
                            b.j + 1
                        )));
                    }
                }
            }
            let mut c = StructureConstants::zeros(n);
            for (&(k, i, j), &v) in &explicit {
                if i == j && v != T::zero() {
                    return Err(LabError::Antisymmetry {
                        i: i + 1,
                        j: j + 1,
                        k: k + 1,
                        cij: v.as_f64(),
                        cji: v.as_f64(),
                    });
                }
                c.set(k, i, j, v);
                if !explicit.contains_key(&(k, j, i)) {
                    c.set(k, j, i, -v);
                }
            }
            c.validate(T::lit(JACOBI_TOL))?;
            Ok(ModelGeometry {
                dim: n,
                kind: ModelKind::LieGroupQuotient {
                    constants: c,
                    covolume: *covolume,
                },
            })
        }
        ModelSpec::ProductOfSpaceForms { factors } => {
            if factors.is_empty() {
                return Err(LabError::Argument("product model has no factors".into()));
            }
            for f in factors {
                let ok_dim = match f.form {
                    SpaceForm::Sphere => f.dim >= 2,
                    SpaceForm::Circle => f.dim == 1,
                    SpaceForm::FlatTorus => f.dim >= 1,
                };
                if !ok_dim {
                    return Err(LabError::Dimension(format!(
                        "{:?} factor cannot have dimension {}",
                        f.form, f.dim
                    )));
                }
                if !(f.radius > T::zero()) {
                    return Err(LabError::Argument(format!(
                        "factor radius must be positive, got {}",
                        f.radius
                    )));
                }
            }
            let n: usize = factors.iter().map(|f| f.dim).sum();
            if n < 3 {
                return Err(LabError::Dimension(format!(
                    "product dimension must be >= 3, got {n}"
                )));
            }
            Ok(ModelGeometry {
                dim: n,
                kind: ModelKind::ProductOfSpaceForms {
                    factors: factors.clone(),
                },
            })
        }
    }
}

impl<T: Real> ModelGeometry<T> {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn kind(&self) -> &ModelKind<T> {
        &self.kind
    }

    pub fn is_product(&self) -> bool {
        matches!(self.kind, ModelKind::ProductOfSpaceForms { .. })
    }

    pub fn structure_constants(&self) -> Option<&StructureConstants<T>> {
        match &self.kind {
            ModelKind::LieGroupQuotient { constants, .. } => Some(constants),
            _ => None,
        }
    }

    pub fn factors(&self) -> Option<&[Factor<T>]> {
        match &self.kind {
            ModelKind::ProductOfSpaceForms { factors } => Some(factors),
            _ => None,
        }
    }

    /// Number of free metric parameters (matrix entries or factor scales).
    pub fn parameter_count(&self) -> usize {
        match &self.kind {
            ModelKind::LieGroupQuotient { .. } => self.dim * (self.dim + 1) / 2,
            ModelKind::ProductOfSpaceForms { factors } => factors.len(),
        }
    }

    /// The three-dimensional Heisenberg nilmanifold, `[e1, e2] = e3`.
    pub fn heisenberg() -> Self {
        build_model(&ModelSpec::LieGroupQuotient {
            dim: 3,
            brackets: vec![Bracket {
                i: 0,
                j: 1,
                k: 2,
                coeff: T::one(),
            }],
            covolume: T::one(),
        })
        .expect("Heisenberg algebra is valid")
    }

    /// Flat torus `R^n / Z^n` as an abelian quotient.
    pub fn flat_torus(n: usize, covolume: T) -> Result<Self> {
        build_model(&ModelSpec::LieGroupQuotient {
            dim: n,
            brackets: Vec::new(),
            covolume,
        })
    }

    pub fn round_sphere(dim: usize, radius: T) -> Result<Self> {
        build_model(&ModelSpec::ProductOfSpaceForms {
            factors: vec![Factor::sphere(dim, radius)],
        })
    }

    /// `S^d x S^1` with unit sphere and circle radius `eps`.
    pub fn sphere_times_circle(sphere_dim: usize, eps: T) -> Result<Self> {
        build_model(&ModelSpec::ProductOfSpaceForms {
            factors: vec![Factor::sphere(sphere_dim, T::one()), Factor::circle(eps)],
        })
    }

    /// Frame index ranges of the product factors.
    pub fn factor_blocks(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        if let Some(fs) = self.factors() {
            let mut start = 0;
            for f in fs {
                out.push(start..start + f.dim);
                start += f.dim;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lie(dim: usize, brackets: Vec<(usize, usize, usize, f64)>) -> ModelSpec<f64> {
        ModelSpec::LieGroupQuotient {
            dim,
            brackets: brackets
                .into_iter()
                .map(|(i, j, k, coeff)| Bracket {
                    i: i - 1,
                    j: j - 1,
                    k: k - 1,
                    coeff,
                })
                .collect(),
            covolume: 1.0,
        }
    }

    #[test]
    fn heisenberg_is_valid() {
        let m = build_model(&lie(3, vec![(1, 2, 3, 1.0)])).unwrap();
        let c = m.structure_constants().unwrap();
        assert_eq!(c.get(2, 0, 1), 1.0);
        assert_eq!(c.get(2, 1, 0), -1.0);
        assert_eq!(c.get(0, 0, 1), 0.0);
        assert_eq!(m.dim(), 3);
    }

    #[test]
    fn abelian_is_flat_torus() {
        let m = build_model(&lie(3, vec![])).unwrap();
        assert!(m.structure_constants().unwrap().is_zero());
    }

    #[test]
    fn symmetric_pair_is_rejected() {
        let err = build_model(&lie(3, vec![(1, 2, 3, 1.0), (2, 1, 3, 1.0)])).unwrap_err();
        match err {
            LabError::Antisymmetry { i, j, k, .. } => assert_eq!((i, j, k), (1, 2, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jacobi_violation_names_indices() {
        // [e1,e2]=e3, [e2,e3]=e1, [e3,e1]=e1 does not satisfy Jacobi.
        let err = build_model(&lie(3, vec![(1, 2, 3, 1.0), (2, 3, 1, 1.0), (3, 1, 1, 1.0)]))
            .unwrap_err();
        assert!(matches!(err, LabError::Jacobi { .. }), "{err:?}");
    }

    #[test]
    fn so3_satisfies_jacobi() {
        build_model(&lie(3, vec![(1, 2, 3, 1.0), (2, 3, 1, 1.0), (3, 1, 2, 1.0)])).unwrap();
    }

    #[test]
    fn low_dimension_rejected() {
        assert!(matches!(
            build_model(&lie(2, vec![])),
            Err(LabError::Dimension(_))
        ));
        assert!(matches!(
            ModelGeometry::<f64>::round_sphere(2, 1.0),
            Err(LabError::Dimension(_))
        ));
        // S^2 x S^1 reaches n = 3
        ModelGeometry::<f64>::sphere_times_circle(2, 0.5).unwrap();
    }

    #[test]
    fn bad_factor_rejected() {
        let spec = ModelSpec::ProductOfSpaceForms {
            factors: vec![Factor {
                form: SpaceForm::Circle,
                dim: 2,
                radius: 1.0,
            }],
        };
        assert!(build_model(&spec).is_err());
        let spec = ModelSpec::ProductOfSpaceForms {
            factors: vec![Factor::sphere(3, -1.0)],
        };
        assert!(build_model(&spec).is_err());
    }
}
