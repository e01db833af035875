use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::model::{ModelGeometry, ModelKind};
use crate::error::{LabError, Result};
use crate::scalar::Real;

/// Metric parameters: a matrix in the fixed Lie-algebra basis, or one
/// squared radius per product factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", rename_all = "kebab-case")]
pub enum MetricData<T: Real> {
    Matrix(DMatrix<T>),
    Scales(Vec<T>),
}

/// A metric at one flow time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MetricState<T: Real> {
    pub data: MetricData<T>,
    pub time: T,
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue<T: Real>(m: &DMatrix<T>) -> T {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(T::max_value().unwrap(), |a, &b| a.min(b))
}

fn check_symmetric<T: Real>(m: &DMatrix<T>) -> Result<()> {
    if !m.is_square() {
        return Err(LabError::MetricShape(format!(
            "metric matrix is {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.iter().fold(T::one(), |a, b| a.max(b.abs()));
    let tol = T::lit(1e-12) * scale;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return Err(LabError::MetricShape(format!(
                    "metric not symmetric at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

impl<T: Real> MetricState<T> {
    /// Validated SPD matrix metric.
    pub fn from_matrix(g: DMatrix<T>, time: T) -> Result<Self> {
        check_symmetric(&g)?;
        let g = (&g + g.transpose()) * T::lit(0.5);
        let lmin = min_eigenvalue(&g);
        if !(lmin > T::zero()) {
            return Err(LabError::NotPositiveDefinite {
                min_eigenvalue: lmin.as_f64(),
            });
        }
        Ok(Self {
            data: MetricData::Matrix(g),
            time,
        })
    }

    pub fn from_scales(scales: Vec<T>, time: T) -> Result<Self> {
        if let Some(bad) = scales.iter().find(|s| !(**s > T::zero())) {
            return Err(LabError::NotPositiveDefinite {
                min_eigenvalue: bad.as_f64(),
            });
        }
        Ok(Self {
            data: MetricData::Scales(scales),
            time,
        })
    }

    /// The model's reference metric at time zero: identity in the Lie basis
    /// or squared reference radii for products.
    pub fn reference(model: &ModelGeometry<T>) -> Self {
        let data = match model.kind() {
            ModelKind::LieGroupQuotient { .. } => {
                MetricData::Matrix(DMatrix::identity(model.dim(), model.dim()))
            }
            ModelKind::ProductOfSpaceForms { factors } => {
                MetricData::Scales(factors.iter().map(|f| f.radius * f.radius).collect())
            }
        };
        Self {
            data,
            time: T::zero(),
        }
    }

    /// Checks that the metric kind and size match the model.
    pub fn check_against(&self, model: &ModelGeometry<T>) -> Result<()> {
        match (&self.data, model.kind()) {
            (MetricData::Matrix(g), ModelKind::LieGroupQuotient { .. }) => {
                if g.nrows() != model.dim() || g.ncols() != model.dim() {
                    return Err(LabError::MetricShape(format!(
                        "expected {n}x{n} matrix, got {}x{}",
                        g.nrows(),
                        g.ncols(),
                        n = model.dim()
                    )));
                }
                Ok(())
            }
            (MetricData::Scales(s), ModelKind::ProductOfSpaceForms { factors }) => {
                if s.len() != factors.len() {
                    return Err(LabError::MetricShape(format!(
                        "expected {} factor scales, got {}",
                        factors.len(),
                        s.len()
                    )));
                }
                Ok(())
            }
            _ => Err(LabError::MetricShape(
                "metric representation does not match model kind".into(),
            )),
        }
    }

    /// `g -> factor * g` (factor = lambda^2).
    pub fn scaled(&self, factor: T) -> Self {
        let data = match &self.data {
            MetricData::Matrix(g) => MetricData::Matrix(g * factor),
            MetricData::Scales(s) => MetricData::Scales(s.iter().map(|x| *x * factor).collect()),
        };
        Self {
            data,
            time: self.time,
        }
    }

    pub fn with_time(mut self, time: T) -> Self {
        self.time = time;
        self
    }

    /// Full matrix in the model's coordinate basis. For products this is the
    /// block-diagonal matrix whose blocks are `scale * I` in a frame that is
    /// orthonormal for the unit reference factor.
    pub fn as_matrix(&self, model: &ModelGeometry<T>) -> DMatrix<T> {
        match &self.data {
            MetricData::Matrix(g) => g.clone(),
            MetricData::Scales(s) => {
                let n = model.dim();
                let mut g = DMatrix::zeros(n, n);
                for (block, scale) in model.factor_blocks().into_iter().zip(s) {
                    for i in block {
                        g[(i, i)] = *scale;
                    }
                }
                g
            }
        }
    }

    pub fn min_eigenvalue(&self) -> T {
        match &self.data {
            MetricData::Matrix(g) => min_eigenvalue(g),
            MetricData::Scales(s) => s.iter().fold(T::max_value().unwrap(), |a, &b| a.min(b)),
        }
    }

    /// Flat parameter vector used by the integrator.
    pub fn to_params(&self) -> Vec<T> {
        match &self.data {
            MetricData::Matrix(g) => upper_triangle(g),
            MetricData::Scales(s) => s.clone(),
        }
    }

    /// Inverse of [`to_params`](Self::to_params); no validation.
    pub fn from_params(model: &ModelGeometry<T>, params: &[T], time: T) -> Self {
        let data = match model.kind() {
            ModelKind::LieGroupQuotient { .. } => {
                MetricData::Matrix(from_upper_triangle(model.dim(), params))
            }
            ModelKind::ProductOfSpaceForms { .. } => MetricData::Scales(params.to_vec()),
        };
        Self { data, time }
    }
}

/// Row-major upper triangle including the diagonal.
pub fn upper_triangle<T: Real>(g: &DMatrix<T>) -> Vec<T> {
    let n = g.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push(g[(i, j)]);
        }
    }
    out
}

pub fn from_upper_triangle<T: Real>(n: usize, v: &[T]) -> DMatrix<T> {
    let mut g = DMatrix::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        for j in i..n {
            g[(i, j)] = v[idx];
            g[(j, i)] = v[idx];
            idx += 1;
        }
    }
    g
}
