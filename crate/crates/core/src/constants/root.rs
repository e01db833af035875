//! Root of `exp(2 c(n) e^{(8/n)(gamma + n(n-1) x)} x) = 2^n`.
//!
//! The left side is doubly exponential, so everything is done on the
//! logarithm `phi(x) = 2 c(n) x e^{(8/n)(gamma + n(n-1) x)}`, which is
//! strictly increasing on `x > 0` and vanishes at zero.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RootReport<T> {
    pub root: T,
    /// `|LHS(root) - 2^n| / 2^n`.
    pub relative_residual: T,
    pub bracket: (T, T),
    pub iterations: usize,
    /// LHS strictly increasing on a uniform scan of the bracket.
    pub monotone: bool,
}

pub const SCAN_POINTS: usize = 1000;

/// `log LHS`.
pub fn log_lhs<T: Real>(c_n: T, n: usize, gamma: T, x: T) -> T {
    let nf = T::from_count(n);
    let expo = T::lit(8.0) / nf * (gamma + nf * (nf - T::one()) * x);
    T::lit(2.0) * c_n * expo.exp() * x
}

/// `LHS(x)` itself; may overflow for large arguments.
pub fn lhs<T: Real>(c_n: T, n: usize, gamma: T, x: T) -> T {
    log_lhs(c_n, n, gamma, x).exp()
}

pub fn solve_c_n_gamma<T: Real>(c_n: T, n: usize, gamma: T) -> Result<T> {
    solve_c_n_gamma_detailed(c_n, n, gamma).map(|r| r.root)
}

/// Bracketing bisection on `(0, x_hi]`, doubling `x_hi` until the left side
/// exceeds `2^n`.
pub fn solve_c_n_gamma_detailed<T: Real>(c_n: T, n: usize, gamma: T) -> Result<RootReport<T>> {
    if n < 3 {
        return Err(LabError::Domain(format!("n must be >= 3, got {n}")));
    }
    if !(gamma > T::zero()) {
        return Err(LabError::Domain(format!("gamma must be positive, got {gamma}")));
    }
    if !(c_n > T::zero()) {
        return Err(LabError::Domain(format!("c_n must be positive, got {c_n}")));
    }
    let target = T::from_count(n) * T::lit(2.0).ln();
    let phi = |x: T| log_lhs(c_n, n, gamma, x);

    let mut lo = T::zero();
    let mut hi = T::one() / T::from_count(n * (n - 1));
    loop {
        let v = phi(hi);
        if !v.is_finite() {
            return Err(LabError::Overflow {
                lo: lo.as_f64(),
                hi: hi.as_f64(),
                value: v.as_f64(),
            });
        }
        if v > target {
            break;
        }
        lo = hi;
        hi *= T::lit(2.0);
    }
    let bracket = (T::zero(), hi);

    let mut iterations = 0;
    while iterations < 400 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    // pick the endpoint with the smaller residual
    let res = |x: T| (phi(x) - target).exp() - T::one();
    let root = if res(lo).abs() <= res(hi).abs() { lo } else { hi };

    let monotone = {
        let step = bracket.1 / T::from_count(SCAN_POINTS);
        let mut prev = phi(T::zero());
        let mut ok = true;
        for k in 1..=SCAN_POINTS {
            let v = phi(step * T::from_count(k));
            ok &= v > prev;
            prev = v;
        }
        ok
    };

    Ok(RootReport {
        root,
        relative_residual: res(root).abs(),
        bracket,
        iterations,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent fine scan: first grid point where the left side crosses 2^n.
    fn scan_root(c_n: f64, n: usize, gamma: f64, step: f64) -> f64 {
        let target = 2f64.powi(n as i32);
        let mut x = 0.0;
        loop {
            if lhs(c_n, n, gamma, x + step) > target {
                // linear interpolation inside the last cell
                let (a, b) = (lhs(c_n, n, gamma, x), lhs(c_n, n, gamma, x + step));
                return x + step * (target - a) / (b - a);
            }
            x += step;
        }
    }

    #[test]
    fn three_one_one() {
        let r = solve_c_n_gamma_detailed(1.0, 3, 1.0).unwrap();
        assert!(r.root > 0.03 && r.root < 0.05, "{}", r.root);
        assert!(r.relative_residual <= 1e-12);
        assert!(r.monotone);
        let oracle = scan_root(1.0, 3, 1.0, 1e-5);
        assert!((r.root - oracle).abs() < 1e-6, "{} vs {oracle}", r.root);
    }

    #[test]
    fn lhs_at_zero_is_one() {
        for n in 3..9 {
            assert_eq!(lhs(1.0, n, 2.5, 0.0), 1.0);
        }
    }

    #[test]
    fn larger_c_n_gives_smaller_root() {
        let mut prev = f64::INFINITY;
        for c in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let x = solve_c_n_gamma(c, 4, 1.0).unwrap();
            assert!(x < prev);
            prev = x;
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(solve_c_n_gamma(1.0, 3, 0.0), Err(LabError::Domain(_))));
        assert!(matches!(solve_c_n_gamma(1.0, 2, 1.0), Err(LabError::Domain(_))));
        assert!(matches!(
            solve_c_n_gamma(1.0, 3, 1e300),
            Err(LabError::Overflow { .. })
        ));
    }

    #[test]
    fn single_precision_root() {
        let r = solve_c_n_gamma(1.0f32, 3, 1.0).unwrap();
        let d = solve_c_n_gamma(1.0f64, 3, 1.0).unwrap();
        assert!((r as f64 - d).abs() < 1e-5);
    }
}
