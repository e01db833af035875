//! Dormand-Prince 5(4) embedded pair.

use crate::scalar::Real;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Result of one trial step.
pub struct Trial<T> {
    pub y: Vec<T>,
    /// Derivative at the new point (first stage of the next step).
    pub f_new: Vec<T>,
    /// Scaled RMS error estimate; the step is acceptable when `<= 1`.
    pub error: T,
}

/// Attempts one step of size `h` from `(t, y)` with `f0 = f(t, y)`.
///
/// `f` may fail (for instance when a stage leaves the admissible set); the
/// failure is passed through so the caller can shrink the step.
pub fn try_step<T: Real, E, F>(
    f: &mut F,
    t: T,
    y: &[T],
    f0: &[T],
    h: T,
    rel_tol: T,
    abs_tol: T,
) -> Result<Trial<T>, E>
where
    F: FnMut(T, &[T]) -> Result<Vec<T>, E>,
{
    let m = y.len();
    let mut k: Vec<Vec<T>> = Vec::with_capacity(7);
    k.push(f0.to_vec());
    let mut stage = vec![T::zero(); m];
    for s in 1..7 {
        for i in 0..m {
            let mut acc = T::zero();
            for (j, kj) in k.iter().enumerate() {
                let a = A[s][j];
                if a != 0.0 {
                    acc += T::lit(a) * kj[i];
                }
            }
            stage[i] = y[i] + h * acc;
        }
        k.push(f(t + h * T::lit(C[s]), &stage)?);
    }
    // the seventh stage was evaluated at the fifth-order solution
    let y_new = stage;
    let mut sum = T::zero();
    for i in 0..m {
        let mut err = T::zero();
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                err += T::lit(E[j]) * kj[i];
            }
        }
        err *= h;
        let sc = abs_tol + rel_tol * y[i].abs().max(y_new[i].abs());
        let r = err / sc;
        sum += r * r;
    }
    let error = if m == 0 {
        T::zero()
    } else {
        (sum / T::from_count(m)).sqrt()
    };
    let f_new = k.pop().expect("seven stages");
    Ok(Trial {
        y: y_new,
        f_new,
        error,
    })
}

/// Step-size factor from an error estimate, clamped to `[0.2, 5]`.
pub fn step_factor<T: Real>(error: T) -> T {
    if error == T::zero() {
        return T::lit(5.0);
    }
    (T::lit(0.9) * error.powf(T::lit(-0.2))).clamp(T::lit(0.2), T::lit(5.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(h: f64, steps: usize) -> f64 {
        let mut f = |_t: f64, y: &[f64]| -> Result<Vec<f64>, ()> { Ok(vec![-y[0]]) };
        let mut y = vec![1.0];
        let mut t = 0.0;
        let mut f0 = vec![-1.0];
        for _ in 0..steps {
            let tr = try_step(&mut f, t, &y, &f0, h, 1e-9, 1e-12).unwrap();
            y = tr.y;
            f0 = tr.f_new;
            t += h;
        }
        y[0]
    }

    #[test]
    fn fifth_order_convergence() {
        let e1 = (integrate(0.1, 10) - (-1f64).exp()).abs();
        let e2 = (integrate(0.05, 20) - (-1f64).exp()).abs();
        let order = (e1 / e2).log2();
        assert!(order > 4.7 && order < 5.5, "observed order {order}");
    }

    #[test]
    fn polynomial_is_exact() {
        let mut f = |t: f64, _y: &[f64]| -> Result<Vec<f64>, ()> { Ok(vec![4.0 * t * t * t]) };
        let tr = try_step(&mut f, 0.0, &[0.0], &[0.0], 1.0, 1e-9, 1e-12).unwrap();
        assert!((tr.y[0] - 1.0).abs() < 1e-14);
    }
}
