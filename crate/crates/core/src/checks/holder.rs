//! Discrete Hölder-type inequalities on weighted atomic measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::report::{CheckReport, Detail, Status};
use crate::error::{LabError, Result};
use crate::scalar::Real;

/// Relative slack of every Hölder comparison.
pub const HOLDER_SLACK: f64 = 1e-12;
/// Relative gap below which the optimized Young bound counts as equality.
pub const NEAR_EQUALITY: f64 = 1e-8;

/// `epsilon` grid `10^-3 .. 10^3` in half decades.
pub fn epsilon_grid<T: Real>() -> Vec<T> {
    (-6..=6).map(|k| T::lit(10f64.powf(k as f64 / 2.0))).collect()
}

/// The inequalities of the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HolderKind {
    /// `int f^{p+1} <= (int f^{n/2})^{2/n} (int f^{pn/(n-2)})^{(n-2)/n}`.
    CurvaturePower,
    /// The same at `p = n/2`.
    CriticalPower,
    /// Interpolation followed by weighted Young with parameter `epsilon`,
    /// `p0 = n^2/(n-2)`.
    InterpolationYoung,
    /// `int u^{p+1} <= (int u^{p0/2})^{2/p0} (int u^{p p0/(p0-2)})^{(p0-2)/p0}`.
    MoserSplit,
}

impl HolderKind {
    pub const ALL: [HolderKind; 4] = [
        HolderKind::CurvaturePower,
        HolderKind::CriticalPower,
        HolderKind::InterpolationYoung,
        HolderKind::MoserSplit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HolderKind::CurvaturePower => "holder_curvature_power",
            HolderKind::CriticalPower => "holder_critical_power",
            HolderKind::InterpolationYoung => "holder_interpolation_young",
            HolderKind::MoserSplit => "holder_moser_split",
        }
    }
}

/// `sum w_i f_i^q`.
fn integral<T: Real>(samples: &[(T, T)], q: T) -> T {
    samples
        .iter()
        .map(|&(f, w)| if f == T::zero() { T::zero() } else { w * f.powf(q) })
        .fold(T::zero(), |a, b| a + b)
}

fn validate<T: Real>(samples: &[(T, T)], n: usize) -> Result<()> {
    if samples.is_empty() {
        return Err(LabError::Argument("Hölder check needs at least one atom".into()));
    }
    if n < 3 {
        return Err(LabError::Dimension(format!("Hölder suite needs n >= 3, got {n}")));
    }
    for &(f, w) in samples {
        if !(f >= T::zero()) || !(w > T::zero()) {
            return Err(LabError::Domain(format!(
                "atoms need nonnegative values and positive weights, got ({f}, {w})"
            )));
        }
    }
    Ok(())
}

/// `(lhs, rhs)` of the inequality with power `p`.
pub fn power_split<T: Real>(samples: &[(T, T)], p: T, n: usize) -> (T, T) {
    let nf = T::from_count(n);
    let two = T::lit(2.0);
    let lhs = integral(samples, p + T::one());
    let rhs = integral(samples, nf / two).powf(two / nf)
        * integral(samples, p * nf / (nf - two)).powf((nf - two) / nf);
    (lhs, rhs)
}

/// `(lhs, interpolation product, Young bound at epsilon)`.
pub fn interpolation_young<T: Real>(samples: &[(T, T)], n: usize, eps: T) -> (T, T, T) {
    let nf = T::from_count(n);
    let two = T::lit(2.0);
    let p0 = nf * nf / (nf - two);
    let a = integral(samples, nf / (nf - two));
    let b = integral(samples, T::one());
    let lhs = integral(samples, p0 / (p0 - two)).powf((p0 - two) / p0);
    let middle = a.powf((nf - two) / p0) * b.powf((p0 - nf) / p0);
    let r = (nf - two) / nf;
    let young = two / nf * eps.powf(-r * r) * b
        + r * eps.powf(two * (nf - two) / (nf * nf)) * a.powf(r);
    (lhs, middle, young)
}

/// Minimizes the Young bound over `ln epsilon` by golden-section search.
pub fn optimal_young<T: Real>(samples: &[(T, T)], n: usize) -> (T, T) {
    let f = |x: T| interpolation_young(samples, n, x.exp()).2;
    let (mut lo, mut hi) = (T::lit(-60.0), T::lit(60.0));
    let g = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = (lo + hi) / T::lit(2.0);
    (x.exp(), f(x))
}

/// `(lhs, rhs)` of the split with `p0/2` and its conjugate.
pub fn moser_split<T: Real>(samples: &[(T, T)], p: T, n: usize) -> (T, T) {
    let nf = T::from_count(n);
    let two = T::lit(2.0);
    let p0 = nf * nf / (nf - two);
    let lhs = integral(samples, p + T::one());
    let rhs = integral(samples, p0 / two).powf(two / p0)
        * integral(samples, p * p0 / (p0 - two)).powf((p0 - two) / p0);
    (lhs, rhs)
}

fn within<T: Real>(lhs: T, rhs: T) -> bool {
    lhs <= rhs + T::lit(HOLDER_SLACK) * rhs
}

/// Evaluates the four inequalities on one measure.
pub fn check_holder<T: Real>(samples: &[(T, T)], p: T, n: usize, epsilon: T) -> Result<CheckReport<T>> {
    validate(samples, n)?;
    if !(p >= T::one()) || !(epsilon > T::zero()) {
        return Err(LabError::Domain(format!("need p >= 1 and epsilon > 0, got {p}, {epsilon}")));
    }
    let nf = T::from_count(n);
    let rows = [
        ("curvature_power", power_split(samples, p, n)),
        ("critical_power", power_split(samples, nf / T::lit(2.0), n)),
        ("interpolation", {
            let (l, m, _) = interpolation_young(samples, n, epsilon);
            (l, m)
        }),
        ("young", {
            let (l, _, y) = interpolation_young(samples, n, epsilon);
            (l, y)
        }),
        ("moser_split", moser_split(samples, p, n)),
    ];
    let mut ok = true;
    let mut details = Vec::new();
    for (label, (lhs, rhs)) in rows {
        ok &= within(lhs, rhs);
        let margin = if rhs > T::zero() { (rhs - lhs) / rhs } else { T::zero() };
        details.push(Detail::labeled(label, lhs, rhs, -margin));
    }
    let mut rep = CheckReport::new("holder", if ok { Status::Pass } else { Status::Fail });
    rep.samples = rows.len();
    rep.details = details;
    rep.vacuous = samples.iter().all(|&(f, _)| f == T::zero());
    Ok(rep)
}

/// Seeded random atomic measure.
pub fn random_measure(rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let atoms = rng.random_range(1..=12);
    let values = Normal::<f64>::new(0.0, 1.5).expect("valid normal");
    let weights = Normal::<f64>::new(0.0, 1.0).expect("valid normal");
    (0..atoms)
        .map(|_| {
            let f = if rng.random_bool(0.1) { 0.0 } else { values.sample(rng).exp() };
            (f, weights.sample(rng).exp())
        })
        .collect()
}

/// Runs every inequality over `measures` seeded measures; the interpolation
/// inequality is evaluated on the whole epsilon grid and at the optimized
/// epsilon, where near-equality with the interpolation product is expected.
pub fn holder_suite<T: Real>(seed: u64, measures: usize) -> Vec<CheckReport<T>> {
    let grid = epsilon_grid::<T>();
    HolderKind::ALL
        .iter()
        .enumerate()
        .map(|(idx, &kind)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
            let mut violations = Vec::new();
            let mut evaluations = 0usize;
            let mut worst = T::lit(-1.0);
            let mut near_equal = 0usize;
            let mut worst_gap = T::zero();
            for m in 0..measures {
                let raw = random_measure(&mut rng);
                let samples: Vec<(T, T)> = raw.iter().map(|&(f, w)| (T::lit(f), T::lit(w))).collect();
                let n = rng.random_range(3..=8usize);
                let p = T::lit(rng.random_range(1.0..6.0));
                let mut record = |lhs: T, rhs: T, label: String| {
                    evaluations += 1;
                    let rel = if rhs > T::zero() { (lhs - rhs) / rhs } else { lhs };
                    worst = worst.max(rel);
                    if !within(lhs, rhs) {
                        violations.push(Detail::labeled(label, lhs, rhs, rel));
                    }
                };
                match kind {
                    HolderKind::CurvaturePower => {
                        let (l, r) = power_split(&samples, p, n);
                        record(l, r, format!("measure {m}, n = {n}, p = {p}"));
                    }
                    HolderKind::CriticalPower => {
                        let (l, r) = power_split(&samples, T::from_count(n) / T::lit(2.0), n);
                        record(l, r, format!("measure {m}, n = {n}"));
                    }
                    HolderKind::InterpolationYoung => {
                        for &eps in &grid {
                            let (l, mid, y) = interpolation_young(&samples, n, eps);
                            record(l, mid, format!("measure {m}, n = {n}, interpolation"));
                            record(l, y, format!("measure {m}, n = {n}, epsilon = {eps}"));
                        }
                        let (l, mid, _) = interpolation_young(&samples, n, T::one());
                        let (eps, best) = optimal_young(&samples, n);
                        record(l, best, format!("measure {m}, n = {n}, optimal epsilon = {eps}"));
                        if mid > T::zero() {
                            let gap = (best - mid).abs() / mid;
                            worst_gap = worst_gap.max(gap);
                            if gap <= T::lit(NEAR_EQUALITY) {
                                near_equal += 1;
                            }
                        } else {
                            near_equal += 1;
                        }
                    }
                    HolderKind::MoserSplit => {
                        let (l, r) = moser_split(&samples, p, n);
                        record(l, r, format!("measure {m}, n = {n}, p = {p}"));
                    }
                }
            }
            let status = if violations.is_empty() { Status::Pass } else { Status::Fail };
            let mut rep = CheckReport::new(kind.name(), status);
            rep.samples = evaluations;
            rep.sup_ratio = Some(worst);
            rep.set_details(violations);
            rep.notes.push(format!(
                "{measures} seeded measures (seed {seed}), relative slack {HOLDER_SLACK:e}; sup (lhs - rhs)/rhs = {worst:e}"
            ));
            if kind == HolderKind::InterpolationYoung {
                rep.notes.push(format!(
                    "optimized epsilon reaches the interpolation product within {NEAR_EQUALITY:e} on {near_equal}/{measures} measures (worst gap {worst_gap:e})"
                ));
                if near_equal != measures {
                    rep.status = Status::Fail;
                }
            }
            rep
        })
        .collect()
}
