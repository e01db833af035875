//! Seeded random draws over metric and plane spaces.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::scalar::Real;

/// Random SPD matrix `A A^T + 0.1 I` with Gaussian `A`.
pub fn random_spd<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<T> {
    let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let g = &a * a.transpose() + DMatrix::identity(n, n) * 0.1;
    g.map(T::lit)
}

/// Random orthonormal pair in `R^n` by Gram-Schmidt on Gaussian vectors.
pub fn random_orthonormal_pair<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (Vec<f64>, Vec<f64>) {
    loop {
        let u: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nu < 1e-8 {
            continue;
        }
        let u: Vec<f64> = u.iter().map(|x| x / nu).collect();
        let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        for (vi, ui) in v.iter_mut().zip(&u) {
            *vi -= d * ui;
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv < 1e-8 {
            continue;
        }
        let v = v.iter().map(|x| x / nv).collect();
        return (u, v);
    }
}
