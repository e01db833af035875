use nalgebra::DMatrix;

use super::metric::{MetricData, MetricState};
use super::model::{ModelGeometry, StructureConstants};
use crate::error::{LabError, Result};
use crate::scalar::Real;

/// An orthonormal left-invariant frame `e'_a = sum_i L_ia e_i` together with
/// the structure constants expressed in it.
#[derive(Debug, Clone)]
pub struct OrthonormalFrame<T: Real> {
    /// Frame change `L` with `L^T g L = I`.
    pub change: DMatrix<T>,
    pub change_inverse: DMatrix<T>,
    pub constants: StructureConstants<T>,
}

/// Symmetric inverse square root `g^{-1/2}` and its inverse `g^{1/2}`.
/// Diagonal metrics are handled exactly.
fn inverse_sqrt<T: Real>(g: &DMatrix<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let n = g.nrows();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || g[(i, j)] == T::zero()));
    if diagonal {
        let mut l = DMatrix::zeros(n, n);
        let mut li = DMatrix::zeros(n, n);
        for i in 0..n {
            let d = g[(i, i)];
            if !(d > T::zero()) {
                return Err(LabError::NotPositiveDefinite {
                    min_eigenvalue: d.as_f64(),
                });
            }
            let s = d.sqrt();
            l[(i, i)] = T::one() / s;
            li[(i, i)] = s;
        }
        return Ok((l, li));
    }
    let eig = g.clone().symmetric_eigen();
    let lmin = eig.eigenvalues.iter().fold(T::max_value().unwrap(), |a, &b| a.min(b));
    if !(lmin > T::zero()) {
        return Err(LabError::NotPositiveDefinite {
            min_eigenvalue: lmin.as_f64(),
        });
    }
    let q = &eig.eigenvectors;
    let d_inv = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| T::one() / x.sqrt()));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| x.sqrt()));
    Ok((q * d_inv * q.transpose(), q * d * q.transpose()))
}

/// Conjugates structure constants into the frame `e'_a = sum_i L_ia e_i`:
/// `c'^c_ab = sum_k (L^{-1})_ck sum_ij c^k_ij L_ia L_jb`.
pub fn transform_constants<T: Real>(
    c: &StructureConstants<T>,
    change: &DMatrix<T>,
    change_inverse: &DMatrix<T>,
) -> StructureConstants<T> {
    let n = c.dim();
    // tmp[k][a][b] = sum_ij c^k_ij L_ia L_jb
    let mut tmp = vec![T::zero(); n * n * n];
    for k in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut s = T::zero();
                for i in 0..n {
                    let lia = change[(i, a)];
                    if lia == T::zero() {
                        continue;
                    }
                    for j in 0..n {
                        s += c.get(k, i, j) * lia * change[(j, b)];
                    }
                }
                tmp[(k * n + a) * n + b] = s;
            }
        }
    }
    let mut out = StructureConstants::zeros(n);
    for cc in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut s = T::zero();
                for k in 0..n {
                    s += change_inverse[(cc, k)] * tmp[(k * n + a) * n + b];
                }
                out.set(cc, a, b, s);
            }
        }
    }
    out
}

/// Reduces a left-invariant metric to the identity by a change of frame.
pub fn orthonormalize<T: Real>(
    model: &ModelGeometry<T>,
    g: &MetricState<T>,
) -> Result<OrthonormalFrame<T>> {
    g.check_against(model)?;
    let c = model.structure_constants().ok_or_else(|| {
        LabError::Argument("orthonormalize applies to Lie group quotients".into())
    })?;
    let MetricData::Matrix(gm) = &g.data else {
        unreachable!("checked against model")
    };
    let (change, change_inverse) = inverse_sqrt(gm)?;
    let constants = transform_constants(c, &change, &change_inverse);
    Ok(OrthonormalFrame {
        change,
        change_inverse,
        constants,
    })
}
