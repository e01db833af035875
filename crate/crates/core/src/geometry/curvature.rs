use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::frame::orthonormalize;
use super::metric::{MetricData, MetricState};
use super::model::{ModelGeometry, ModelKind, SpaceForm, StructureConstants};
use super::sampling::random_orthonormal_pair;
use crate::error::Result;
use crate::scalar::Real;

/// Dense rank-4 tensor `R_ijkl` in an orthonormal frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Rank4<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> Rank4<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim.pow(4)],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.dim + j) * self.dim + k) * self.dim + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        self.data[self.idx(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: T) {
        let x = self.idx(i, j, k, l);
        self.data[x] = v;
    }

    pub fn norm_squared(&self) -> T {
        self.data.iter().fold(T::zero(), |s, x| s + *x * *x)
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    /// `R(u, v, u, v)` for an orthonormal pair, i.e. the sectional curvature
    /// of their span.
    pub fn sectional(&self, u: &[T], v: &[T]) -> T {
        let n = self.dim;
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                let uv = u[i] * v[j];
                if uv == T::zero() {
                    continue;
                }
                for (k, &uk) in u.iter().enumerate().take(n) {
                    for (l, &vl) in v.iter().enumerate().take(n) {
                        s += self.get(i, j, k, l) * uv * uk * vl;
                    }
                }
            }
        }
        s
    }
}

/// Curvature of a homogeneous metric in an orthonormal frame.
///
/// Sign convention: `R_ijkl = <R(e_i, e_j) e_l, e_k>`, so that `R_ijij` is the
/// sectional curvature of the `(e_i, e_j)` plane and `Ric_jl = sum_i R_ijil`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CurvatureData<T: Real> {
    pub rm: Rank4<T>,
    pub ric: DMatrix<T>,
    pub scalar: T,
    pub rm_norm: T,
    pub sec_min: T,
    pub sec_max: T,
}

impl<T: Real> CurvatureData<T> {
    pub fn dim(&self) -> usize {
        self.rm.dim()
    }

    /// Ricci eigenvalues in ascending order.
    pub fn ric_eigenvalues(&self) -> Vec<T> {
        let mut ev: Vec<T> = self.ric.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }

    pub fn ric_min(&self) -> T {
        self.ric_eigenvalues()[0]
    }

    pub fn ric_max(&self) -> T {
        *self.ric_eigenvalues().last().unwrap()
    }

    /// `|Ric|^2 = sum Ric_ij^2`.
    pub fn ric_norm_squared(&self) -> T {
        self.ric.iter().fold(T::zero(), |s, x| s + *x * *x)
    }
}

/// How sectional-curvature extremes are searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectionalSampling {
    /// Random planes tried in addition to the coordinate planes.
    pub planes: usize,
    pub seed: u64,
}

impl SectionalSampling {
    pub const DEFAULT_PLANES: usize = 10_000;
    pub const DEFAULT_SEED: u64 = 0x5EC7_10A1;

    pub fn coordinate_only() -> Self {
        Self {
            planes: 0,
            seed: Self::DEFAULT_SEED,
        }
    }
}

impl Default for SectionalSampling {
    fn default() -> Self {
        Self {
            planes: Self::DEFAULT_PLANES,
            seed: Self::DEFAULT_SEED,
        }
    }
}

/// Levi-Civita coefficients `Gamma^k_ij` with `nabla_{e_i} e_j = sum_k Gamma^k_ij e_k`
/// for an orthonormal left-invariant frame, stored at `[(i*n + j)*n + k]`.
fn connection<T: Real>(c: &StructureConstants<T>) -> Vec<T> {
    let n = c.dim();
    let half = T::lit(0.5);
    let mut gamma = vec![T::zero(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                gamma[(i * n + j) * n + k] = half * (c.get(k, i, j) - c.get(i, j, k) + c.get(j, k, i));
            }
        }
    }
    gamma
}

/// Riemann tensor of a left-invariant metric from orthonormal-frame structure
/// constants.
pub fn lie_riemann<T: Real>(c: &StructureConstants<T>) -> Rank4<T> {
    let n = c.dim();
    let gamma = connection(c);
    let g = |i: usize, j: usize, k: usize| gamma[(i * n + j) * n + k];
    let mut rm = Rank4::zeros(n);
    // R(e_i,e_j)e_l = nabla_i nabla_j e_l - nabla_j nabla_i e_l - nabla_[e_i,e_j] e_l
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = T::zero();
                    for m in 0..n {
                        s += g(j, l, m) * g(i, m, k) - g(i, l, m) * g(j, m, k) - c.get(m, i, j) * g(m, l, k);
                    }
                    rm.set(i, j, k, l, s);
                }
            }
        }
    }
    rm
}

fn product_riemann<T: Real>(model: &ModelGeometry<T>, scales: &[T]) -> Rank4<T> {
    let n = model.dim();
    let mut rm = Rank4::zeros(n);
    let factors = model.factors().expect("product model");
    for ((f, block), s) in factors.iter().zip(model.factor_blocks()).zip(scales) {
        if f.form != SpaceForm::Sphere {
            continue;
        }
        let k = T::one() / *s;
        for i in block.clone() {
            for j in block.clone() {
                if i == j {
                    continue;
                }
                rm.set(i, j, i, j, k);
                rm.set(i, j, j, i, -k);
            }
        }
    }
    rm
}

fn assemble<T: Real>(rm: Rank4<T>, sampling: SectionalSampling) -> CurvatureData<T> {
    let n = rm.dim();
    let mut ric = DMatrix::zeros(n, n);
    for j in 0..n {
        for l in 0..n {
            let mut s = T::zero();
            for i in 0..n {
                s += rm.get(i, j, i, l);
            }
            ric[(j, l)] = s;
        }
    }
    let ric = (&ric + ric.transpose()) * T::lit(0.5);
    let scalar = ric.trace();
    let rm_norm = rm.norm_squared().sqrt();

    let mut sec_min = T::max_value().unwrap();
    let mut sec_max = T::min_value().unwrap();
    for i in 0..n {
        for j in (i + 1)..n {
            let k = rm.get(i, j, i, j);
            sec_min = sec_min.min(k);
            sec_max = sec_max.max(k);
        }
    }
    if sampling.planes > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
        for _ in 0..sampling.planes {
            let (u, v) = random_orthonormal_pair(&mut rng, n);
            let u: Vec<T> = u.into_iter().map(T::lit).collect();
            let v: Vec<T> = v.into_iter().map(T::lit).collect();
            let k = rm.sectional(&u, &v);
            sec_min = sec_min.min(k);
            sec_max = sec_max.max(k);
        }
    }
    CurvatureData {
        rm,
        ric,
        scalar,
        rm_norm,
        sec_min,
        sec_max,
    }
}

/// Full curvature data with the default sectional sampling.
pub fn curvature<T: Real>(model: &ModelGeometry<T>, g: &MetricState<T>) -> Result<CurvatureData<T>> {
    curvature_with(model, g, SectionalSampling::default())
}

pub fn curvature_with<T: Real>(
    model: &ModelGeometry<T>,
    g: &MetricState<T>,
    sampling: SectionalSampling,
) -> Result<CurvatureData<T>> {
    g.check_against(model)?;
    let rm = match (model.kind(), &g.data) {
        (ModelKind::LieGroupQuotient { .. }, _) => {
            let frame = orthonormalize(model, g)?;
            lie_riemann(&frame.constants)
        }
        (ModelKind::ProductOfSpaceForms { .. }, MetricData::Scales(s)) => {
            if let Some(bad) = s.iter().find(|x| !(**x > T::zero())) {
                return Err(crate::error::LabError::NotPositiveDefinite {
                    min_eigenvalue: bad.as_f64(),
                });
            }
            product_riemann(model, s)
        }
        _ => unreachable!("checked against model"),
    };
    Ok(assemble(rm, sampling))
}

/// Ricci tensor expressed back in the model's fixed basis (or the product
/// coordinate basis), `Ric_basis = L^{-T} Ric_frame L^{-1}`.
pub fn ricci_in_basis<T: Real>(
    model: &ModelGeometry<T>,
    g: &MetricState<T>,
) -> Result<DMatrix<T>> {
    g.check_against(model)?;
    match model.kind() {
        ModelKind::LieGroupQuotient { .. } => {
            let frame = orthonormalize(model, g)?;
            let rm = lie_riemann(&frame.constants);
            let curv = assemble(rm, SectionalSampling::coordinate_only());
            let li = &frame.change_inverse;
            let out = li.transpose() * curv.ric * li;
            Ok((&out + out.transpose()) * T::lit(0.5))
        }
        ModelKind::ProductOfSpaceForms { factors } => {
            let MetricData::Scales(_) = &g.data else {
                unreachable!()
            };
            // Ric of a round sphere of any radius is (d-1) times the unit metric.
            let n = model.dim();
            let mut ric = DMatrix::zeros(n, n);
            for (f, block) in factors.iter().zip(model.factor_blocks()) {
                if f.form == SpaceForm::Sphere {
                    for i in block {
                        ric[(i, i)] = T::from_count(f.dim - 1);
                    }
                }
            }
            Ok(ric)
        }
    }
}
