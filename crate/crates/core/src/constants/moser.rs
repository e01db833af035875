use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scalar::Real;

/// Exponent and time ladders of the Moser iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MoserSchedule<T> {
    pub n: usize,
    pub p0: T,
    pub q0: T,
    pub mu: T,
    pub t_prime: T,
    pub q: Vec<T>,
    pub tau: Vec<T>,
    /// Row `K` holds `(sum 1/q_{k+1}, sum 1/q_k, sum k/q_k)` over `k = 0..=K`.
    pub partial_sums: Vec<[T; 3]>,
    /// Geometric tails of the three series past each truncation.
    pub tails: Vec<[T; 3]>,
    pub limit_sums: [T; 3],
    /// Exponents `(n-2)/n`, `1 - 4/n^2`, `1 - 4/n^2` on `C_S^2/t`, `4(n-2)/n^2` on `1/C_S`.
    pub limit_exponents: [T; 4],
}

fn int<F: FromPrimitive>(k: usize) -> F {
    F::from_usize(k).expect("integer fits the number type")
}

/// `(1/q0, r)` with `r = 1/mu = n/(n+2)`.
fn ladder<F: Num + FromPrimitive>(n: usize) -> (F, F) {
    let inv_q0 = int::<F>(2 * (n - 2)) / int::<F>(n * n);
    let r = int::<F>(n) / int::<F>(n + 2);
    (inv_q0, r)
}

/// Truncated sums through index `k_max`, accumulated term by term.
pub fn partial_sums<F: Num + Clone + FromPrimitive>(n: usize, k_max: usize) -> Vec<[F; 3]> {
    let (inv_q0, r) = ladder::<F>(n);
    let mut inv_q = inv_q0;
    let mut acc = [F::zero(), F::zero(), F::zero()];
    let mut rows = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let next = inv_q.clone() * r.clone();
        acc[0] = acc[0].clone() + next.clone();
        acc[1] = acc[1].clone() + inv_q.clone();
        acc[2] = acc[2].clone() + int::<F>(k) * inv_q.clone();
        rows.push(acc.clone());
        inv_q = next;
    }
    rows
}

/// Closed-form geometric limits of the three series.
pub fn limit_sums<F: Num + Clone + FromPrimitive>(n: usize) -> [F; 3] {
    let (inv_q0, r) = ladder::<F>(n);
    let one_minus = F::one() - r.clone();
    let s2 = inv_q0.clone() / one_minus.clone();
    [
        r.clone() * s2.clone(),
        s2,
        inv_q0 * r / (one_minus.clone() * one_minus),
    ]
}

/// Remainders of the three series after `k = 0..=k_max`.
pub fn tails<F: Num + Clone + FromPrimitive>(n: usize, k_max: usize) -> [F; 3] {
    let (inv_q0, r) = ladder::<F>(n);
    let one_minus = F::one() - r.clone();
    let mut rk1 = F::one();
    for _ in 0..=k_max {
        rk1 = rk1 * r.clone();
    }
    let k = int::<F>(k_max);
    let third = inv_q0.clone() * rk1.clone() * (k.clone() + F::one() - k * r.clone())
        / (one_minus.clone() * one_minus.clone());
    [
        inv_q0.clone() * rk1.clone() * r / one_minus.clone(),
        inv_q0 * rk1 / one_minus,
        third,
    ]
}

/// Exact rational verification of the limits.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMoserSums {
    pub n: usize,
    pub limits: [BigRational; 3],
    /// `(n-2)/n`, `1 - 4/n^2`, `(n-2)(n+2)/(2n)`.
    pub expected: [BigRational; 3],
    /// Largest `K` for which partial sum plus tail reproduced the limit.
    pub checked_through: usize,
    pub holds: bool,
}

pub fn exact_moser_sums(n: usize, k_max: usize) -> Result<ExactMoserSums> {
    if n < 3 {
        return Err(LabError::Dimension(format!("Moser schedule needs n >= 3, got {n}")));
    }
    let rat = |a: i64, b: i64| BigRational::new(BigInt::from(a), BigInt::from(b));
    let ni = n as i64;
    let expected = [
        rat(ni - 2, ni),
        BigRational::one() - rat(4, ni * ni),
        rat((ni - 2) * (ni + 2), 2 * ni),
    ];
    let limits = limit_sums::<BigRational>(n);
    let mut holds = limits == expected;
    let rows = partial_sums::<BigRational>(n, k_max);
    for (k, row) in rows.iter().enumerate() {
        let tail = tails::<BigRational>(n, k);
        for i in 0..3 {
            if &row[i] + &tail[i] != limits[i] || tail[i] <= BigRational::zero() {
                holds = false;
            }
        }
    }
    Ok(ExactMoserSums {
        n,
        limits,
        expected,
        checked_through: k_max,
        holds,
    })
}

pub fn moser_schedule<T: Real>(n: usize, t_prime: T, k_max: usize) -> Result<MoserSchedule<T>> {
    if n < 3 {
        return Err(LabError::Dimension(format!("Moser schedule needs n >= 3, got {n}")));
    }
    if k_max < 1 {
        return Err(LabError::Domain(format!("truncation index must be >= 1, got {k_max}")));
    }
    if !(t_prime > T::zero()) {
        return Err(LabError::Domain(format!("T' must be positive, got {t_prime}")));
    }
    let nf = T::from_count(n);
    let two = T::lit(2.0);
    let p0 = nf * nf / (nf - two);
    let q0 = p0 / two;
    let mu = T::one() + two / nf;
    let mut q = Vec::with_capacity(k_max + 1);
    let mut tau = Vec::with_capacity(k_max + 1);
    let mut mu_k = T::one();
    for _ in 0..=k_max {
        q.push(q0 * mu_k);
        mu_k *= mu;
        tau.push((T::one() - T::one() / mu_k) * t_prime);
    }
    let partial = partial_sums::<T>(n, k_max);
    let tail_rows = (0..=k_max).map(|k| tails::<T>(n, k)).collect();
    let one_minus = T::one() - T::lit(4.0) / (nf * nf);
    Ok(MoserSchedule {
        n,
        p0,
        q0,
        mu,
        t_prime,
        q,
        tau,
        partial_sums: partial,
        tails: tail_rows,
        limit_sums: limit_sums::<T>(n),
        limit_exponents: [
            (nf - two) / nf,
            one_minus,
            one_minus,
            T::lit(4.0) * (nf - two) / (nf * nf),
        ],
    })
}

/// `c C_S^{-4(n-2)/n^2} (C_S^2/t)^{1-4/n^2} window^{2/p0}`.
pub fn moser_final_bound<T: Real>(n: usize, cs: T, t: T, window: T, c_fit: T) -> Result<T> {
    if n < 3 {
        return Err(LabError::Dimension(format!("Moser bound needs n >= 3, got {n}")));
    }
    if !(cs > T::zero() && t > T::zero() && c_fit > T::zero()) || window < T::zero() {
        return Err(LabError::Domain(format!(
            "Moser bound inputs out of range (cs = {cs}, t = {t}, window = {window}, c = {c_fit})"
        )));
    }
    let nf = T::from_count(n);
    let two = T::lit(2.0);
    let e_cs = T::lit(4.0) * (nf - two) / (nf * nf);
    let e_ratio = T::one() - T::lit(4.0) / (nf * nf);
    let e_window = two * (nf - two) / (nf * nf);
    Ok(c_fit * cs.powf(-e_cs) * (cs * cs / t).powf(e_ratio) * window.powf(e_window))
}
