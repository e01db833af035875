use super::derivative::time_derivatives;
use super::report::{CheckReport, Detail, Status};
use crate::constants::{moser_final_bound, ConstantChain, ConstantPrimitives};
use crate::error::{LabError, Result};
use crate::flow::{parabolic_rescale, Trajectory};
use crate::scalar::Real;
use crate::sobolev::{witness_norms, ProfileDomain, WitnessFamily};

/// Normalized residual allowed in the derivative identities.
pub const IDENTITY_TOL: f64 = 1e-7;
/// Relative slack of explicit inequalities evaluated on recorded data.
pub const INEQUALITY_SLACK: f64 = 1e-10;
/// Ratios at or below this are treated as a vanishing numerator.
pub const VACUOUS_RATIO: f64 = 1e-9;
/// Largest relative change of a fitted constant under tolerance refinement.
pub const STABILITY_TOL: f64 = 0.05;

fn require_states<T: Real>(traj: &Trajectory<T>, min: usize, name: &str) -> Result<()> {
    if traj.len() < min {
        return Err(LabError::Argument(format!(
            "{name} needs at least {min} recorded states, got {}",
            traj.len()
        )));
    }
    Ok(())
}

fn column<T: Real>(traj: &Trajectory<T>, f: impl Fn(&crate::flow::DerivedRecord<T>) -> T) -> Vec<T> {
    traj.derived.iter().map(f).collect()
}

/// Rescales so the initial volume is one; returns the factor `lambda^2`.
fn unit_volume<T: Real>(traj: &Trajectory<T>) -> Result<(Trajectory<T>, T)> {
    let n = T::from_count(traj.dim());
    let l2 = traj.derived[0].vol.powf(-T::lit(2.0) / n);
    if (l2 - T::one()).abs() <= T::lit(1e-14) {
        return Ok((traj.clone(), T::one()));
    }
    Ok((parabolic_rescale(traj, l2.sqrt())?, l2))
}

/// `dvol/dt = -R vol`, its critical-norm bound, and the curvature ratio
/// `|R| / |Rm|` against the algebraic bound `sqrt(n(n-1)/2)`.
pub fn check_volume_identity<T: Real>(traj: &Trajectory<T>) -> Result<CheckReport<T>> {
    require_states(traj, 3, "volume identity")?;
    let n = traj.dim();
    let nf = T::from_count(n);
    let t = traj.times();
    let vol = column(traj, |d| d.vol);
    let mut details = Vec::new();
    let mut worst = T::zero();
    let derivs = time_derivatives(&t, &vol);
    for &(i, d) in &derivs {
        let r = traj.derived[i].scalar;
        let rhs = -r * vol[i];
        let res = (d - rhs).abs() / (r.abs() * vol[i] + T::one());
        worst = worst.max(res);
        details.push(Detail::at(t[i], d, rhs, res));
    }
    let identity_ok = worst <= T::lit(IDENTITY_TOL);

    let mut norm_ok = true;
    let mut c_fit = T::zero();
    let mut vacuous = true;
    for rec in &traj.derived {
        let lhs = rec.scalar.abs() * rec.vol;
        let r_norm = (rec.scalar.abs().powf(nf / T::lit(2.0)) * rec.vol).powf(T::lit(2.0) / nf);
        let rhs = r_norm * rec.vol.powf((nf - T::lit(2.0)) / nf);
        if lhs > rhs * (T::one() + T::lit(INEQUALITY_SLACK)) + T::lit(1e-300) {
            norm_ok = false;
            details.push(Detail::at(rec.t, lhs, rhs, T::one()));
        }
        if rec.rm_norm > T::zero() {
            vacuous = false;
            c_fit = c_fit.max(rec.scalar.abs() / rec.rm_norm);
        }
    }
    let bound = (nf * (nf - T::one()) / T::lit(2.0)).sqrt();
    let algebraic_ok = c_fit <= bound * (T::one() + T::lit(1e-12));

    let ok = identity_ok && norm_ok && algebraic_ok;
    let mut rep = CheckReport::new("volume_identity", if ok { Status::Pass } else { Status::Fail });
    rep.samples = derivs.len();
    rep.sup_ratio = Some(c_fit);
    rep.fitted_constant = Some(c_fit);
    rep.vacuous = vacuous;
    rep.set_details(details);
    rep.notes.push(format!(
        "max normalized residual |dvol/dt + R vol| / (|R| vol + 1) = {worst:e} (tolerance {IDENTITY_TOL:e})"
    ));
    rep.notes.push("equality at homogeneity for the R-norm variant".into());
    rep.notes.push(format!(
        "Rm-norm variant |R| <= c |Rm|: fitted c = {c_fit}, algebraic bound sqrt(n(n-1)/2) = {bound}"
    ));
    if c_fit > T::one() {
        rep.notes.push(format!(
            "|dvol/dt| <= ||Rm||_(n/2) vol^((n-2)/n) without a constant is exceeded by the factor {c_fit}"
        ));
    }
    Ok(rep)
}

/// `dR/dt = 2 |Ric|^2` for spatially constant scalar curvature.
pub fn check_scalar_identity<T: Real>(traj: &Trajectory<T>) -> Result<CheckReport<T>> {
    require_states(traj, 3, "scalar identity")?;
    let t = traj.times();
    let r = column(traj, |d| d.scalar);
    let mut details = Vec::new();
    let mut worst = T::zero();
    let derivs = time_derivatives(&t, &r);
    let mut vacuous = true;
    for &(i, d) in &derivs {
        let rhs = T::lit(2.0) * traj.derived[i].ric_norm_sq;
        if rhs > T::zero() {
            vacuous = false;
        }
        let res = (d - rhs).abs() / (rhs + T::one());
        worst = worst.max(res);
        details.push(Detail::at(t[i], d, rhs, res));
    }
    let ok = worst <= T::lit(IDENTITY_TOL);
    let mut rep = CheckReport::new("scalar_identity", if ok { Status::Pass } else { Status::Fail });
    rep.samples = derivs.len();
    rep.sup_ratio = Some(worst);
    rep.vacuous = vacuous;
    rep.set_details(details);
    rep.notes.push(format!(
        "max normalized residual |dR/dt - 2|Ric|^2| / (2|Ric|^2 + 1) = {worst:e} (tolerance {IDENTITY_TOL:e})"
    ));
    Ok(rep)
}

/// `||Rm||_{n/2}(t) <= 2 ||Rm||_{n/2}(0)` on `[0, T0]` under the small-energy hypothesis.
pub fn check_n2_bound<T: Real>(traj: &Trajectory<T>, chain: &ConstantChain<T>) -> Result<CheckReport<T>> {
    require_states(traj, 1, "n/2 bound")?;
    let cs0 = traj.context.cs0;
    let n2_0 = traj.derived[0].rm_n2;
    let theta0 = n2_0 * cs0 * cs0;
    let margin = chain.eps_n_gamma - theta0;
    let mut rep = CheckReport::new("n2_bound", Status::Pass);
    if (theta0 - chain.theta0).abs() > T::lit(1e-9) * theta0.max(chain.theta0) {
        rep.notes.push(format!(
            "constant chain was built for theta0 = {}, trajectory has {theta0}",
            chain.theta0
        ));
    }
    rep.notes.push(format!(
        "hypothesis ||Rm||_(n/2)(0) C_S(0)^2 = {theta0} <= eps(n, gamma) = {}: margin {margin}",
        chain.eps_n_gamma
    ));
    if margin < T::zero() {
        rep.status = Status::HypothesisNotMet;
        rep.details = vec![Detail::at(T::zero(), theta0, chain.eps_n_gamma, -margin)];
        return Ok(rep);
    }
    if (traj.derived[0].vol - T::one()).abs() > T::lit(1e-12) {
        rep.notes.push(format!(
            "initial volume {} differs from 1; the bound is scale invariant and applied as is",
            traj.derived[0].vol
        ));
    }
    let cap = chain.t0 * (T::one() + T::lit(1e-12));
    let mut details = Vec::new();
    let mut sup = T::zero();
    let mut failed = false;
    let mut count = 0;
    for rec in traj.derived.iter().filter(|d| d.t <= cap) {
        count += 1;
        if n2_0 == T::zero() {
            if rec.rm_n2 > T::zero() {
                failed = true;
                details.push(Detail::at(rec.t, rec.rm_n2, T::zero(), rec.rm_n2));
            }
            continue;
        }
        let ratio = rec.rm_n2 / n2_0;
        sup = sup.max(ratio);
        if ratio > T::lit(2.0) * (T::one() + T::lit(1e-12)) {
            failed = true;
        }
        details.push(Detail::at(rec.t, rec.rm_n2, T::lit(2.0) * n2_0, ratio));
    }
    let t_last = traj.derived.last().map(|d| d.t).unwrap_or(T::zero());
    if t_last < chain.t0 {
        rep.notes.push(format!("trajectory ends at t = {t_last}, before T0 = {}", chain.t0));
    }
    rep.status = if failed { Status::Fail } else { Status::Pass };
    rep.samples = count;
    rep.sup_ratio = Some(sup);
    rep.vacuous = n2_0 == T::zero() && !failed;
    rep.set_details(details);
    Ok(rep)
}

/// Fits `c` in `|Rm|(t) <= c C_S(0)^2 ||Rm||_{n/2}(0) / t` over `(0, t_max]`;
/// `t_max` defaults to the trajectory's horizon `T0`.
pub fn check_c0_bound<T: Real>(traj: &Trajectory<T>, cs0: T, t_max: Option<T>) -> Result<CheckReport<T>> {
    require_states(traj, 2, "C0 bound")?;
    let cap = t_max
        .or_else(|| traj.meta.as_ref().map(|m| m.t0_horizon))
        .unwrap_or(T::max_value().expect("bounded scalar"));
    let n2_0 = traj.derived[0].rm_n2;
    let mut rep = CheckReport::new("c0_bound", Status::RatioExtracted);
    let window: Vec<_> = traj
        .derived
        .iter()
        .filter(|d| d.t > T::zero() && d.t <= cap)
        .collect();
    rep.samples = window.len();
    if n2_0 == T::zero() {
        let bad: Vec<_> = window.iter().filter(|d| d.rm_norm > T::zero()).collect();
        if bad.is_empty() {
            rep.sup_ratio = Some(T::zero());
            rep.fitted_constant = Some(T::zero());
            rep.vacuous = true;
            return Ok(rep.note("zero curvature throughout"));
        }
        rep.status = Status::Fail;
        rep.set_details(
            bad.iter()
                .map(|d| Detail::at(d.t, d.rm_norm, T::zero(), d.rm_norm))
                .collect(),
        );
        return Ok(rep.note("curvature appears from a flat initial metric: integrator defect"));
    }
    let mut sup = T::zero();
    let mut details = Vec::new();
    for d in &window {
        let ratio = d.rm_norm * d.t / (cs0 * cs0 * n2_0);
        sup = sup.max(ratio);
        details.push(Detail::at(d.t, d.rm_norm, cs0 * cs0 * n2_0 / d.t, ratio));
    }
    if !sup.is_finite() {
        rep.status = Status::Fail;
        rep.notes.push("fitted constant is not finite".into());
    }
    rep.sup_ratio = Some(sup);
    rep.fitted_constant = Some(sup);
    rep.set_details(details);
    rep.notes.push(format!("window (0, {cap}]"));
    Ok(rep)
}

/// Fits `c` in `d/dt int |Rm|^p <= c p int |Rm|^{p+1}` (the gradient term
/// vanishes on homogeneous models).
pub fn check_lp_evolution<T: Real>(traj: &Trajectory<T>, p: T) -> Result<CheckReport<T>> {
    if !(p >= T::one()) {
        return Err(LabError::Domain(format!("L^p evolution needs p >= 1, got {p}")));
    }
    require_states(traj, 3, "L^p evolution")?;
    let t = traj.times();
    let integral = column(traj, |d| d.rm_norm.powf(p) * d.vol);
    let mut sup: Option<T> = None;
    let mut details = Vec::new();
    let derivs = time_derivatives(&t, &integral);
    for &(i, d) in &derivs {
        let rec = &traj.derived[i];
        let den = p * rec.rm_norm.powf(p + T::one()) * rec.vol;
        if !(den > T::zero()) {
            continue;
        }
        let ratio = d / den;
        sup = Some(sup.map_or(ratio, |s: T| s.max(ratio)));
        details.push(Detail::at(t[i], d, den, ratio));
    }
    let mut rep = CheckReport::new(format!("lp_evolution_p{p}"), Status::RatioExtracted);
    rep.samples = derivs.len();
    let sup = sup.unwrap_or(T::zero());
    let positive = sup > T::lit(VACUOUS_RATIO);
    rep.sup_ratio = Some(sup);
    rep.fitted_constant = Some(if positive { sup } else { T::zero() });
    rep.vacuous = !positive;
    rep.set_details(details);
    rep.notes.push("gradient term vanishes identically on homogeneous models".into());
    if !positive {
        rep.notes.push("numerator never positive: the inequality is vacuous on this trajectory".into());
    }
    if !sup.is_finite() {
        rep.status = Status::Fail;
    }
    Ok(rep)
}

/// Relative change between two fitted constants, and whether it is below
/// [`STABILITY_TOL`]. Two values at or below `floor` count as stable.
pub fn ratio_stability<T: Real>(coarse: T, fine: T, floor: T) -> (T, bool) {
    let scale = coarse.abs().max(fine.abs());
    if scale <= floor {
        return (T::zero(), true);
    }
    let rel = (coarse - fine).abs() / scale;
    (rel, rel < T::lit(STABILITY_TOL))
}

/// Compares the fitted constants of the same check on a run and its
/// refined-tolerance rerun.
pub fn check_ratio_stability<T: Real>(coarse: &CheckReport<T>, fine: &CheckReport<T>) -> CheckReport<T> {
    let name = format!("{}_stability", coarse.name);
    match (coarse.fitted_constant, fine.fitted_constant) {
        (Some(a), Some(b)) => {
            let (rel, ok) = ratio_stability(a, b, T::lit(VACUOUS_RATIO));
            let mut rep = CheckReport::new(name, if ok { Status::Pass } else { Status::Fail });
            rep.samples = 2;
            rep.sup_ratio = Some(rel);
            rep.details = vec![Detail::labeled("coarse vs refined", a, b, rel)];
            rep.vacuous = coarse.vacuous && fine.vacuous;
            rep.note(format!("relative change {rel:e}, limit {STABILITY_TOL}"))
        }
        _ => CheckReport::new(name, Status::Unavailable).note("a fitted constant is missing"),
    }
}

/// Traces `a_n ||Rm||_{n/2}(t) C_S(0)^2 e^{8 delta0 t/n} <= 1/(n(n-1))` and,
/// while it holds, fits `c` in
/// `||u||_{2n/(n-2)}^2 <= c e^{8 delta0 t/n} (C_S(0)^2 ||grad u||^2 + ||u||^2)`.
pub fn check_sobolev_along_flow<T: Real>(
    traj: &Trajectory<T>,
    primitives: &ConstantPrimitives<T>,
    family: WitnessFamily,
    grid: usize,
) -> Result<CheckReport<T>> {
    require_states(traj, 1, "Sobolev along the flow")?;
    let (unit, l2) = unit_volume(traj)?;
    let n = unit.dim();
    let nf = T::from_count(n);
    let cs0 = unit.context.cs0;
    let delta0 = unit.delta0;
    let limit = T::one() / (nf * (nf - T::one()));
    let mut rep = CheckReport::new("sobolev_along_flow", Status::RatioExtracted).with_primitives(primitives);
    if l2 != T::one() {
        rep.notes.push(format!("evaluated on the unit-volume rescaling (g -> {l2} g)"));
    }
    let theta0 = unit.derived[0].rm_n2 * cs0 * cs0;
    if theta0 > limit {
        rep.status = Status::HypothesisNotMet;
        rep.details = vec![Detail::at(T::zero(), theta0, limit, theta0 / limit)];
        return Ok(rep.note(format!(
            "initial condition ||Rm||_(n/2) C_S^2 = {theta0} exceeds 1/(n(n-1)) = {limit}; first violation time 0"
        )));
    }
    let mut first_violation = None;
    let mut sup = T::zero();
    let mut details = Vec::new();
    let mut samples = 0;
    for (state, rec) in unit.states.iter().zip(&unit.derived) {
        let weight = (T::lit(8.0) * delta0 * rec.t / nf).exp();
        let cond = primitives.a_n * rec.rm_n2 * cs0 * cs0 * weight;
        if cond > limit {
            first_violation = Some(rec.t / l2);
            break;
        }
        let domain = ProfileDomain::select(&unit.model, state)?;
        for w in witness_norms(&domain, family, grid)? {
            let lhs = w.critical * w.critical;
            let rhs = weight * (cs0 * cs0 * w.grad_l2 * w.grad_l2 + w.l2 * w.l2);
            let ratio = lhs / rhs;
            sup = sup.max(ratio);
            samples += 1;
            details.push(Detail {
                t: Some(rec.t / l2),
                label: Some(w.label),
                lhs,
                rhs,
                score: ratio,
            });
        }
    }
    rep.samples = samples;
    rep.sup_ratio = Some(sup);
    rep.fitted_constant = Some(sup);
    rep.set_details(details);
    match first_violation {
        Some(t) => rep.notes.push(format!("condition first violated at t = {t}")),
        None => rep.notes.push("condition holds at every recorded time".into()),
    }
    if !sup.is_finite() {
        rep.status = Status::Fail;
    }
    Ok(rep)
}

/// For each recorded `t <= T0`, the smallest `||Rm||_{p0/2}` over samples in
/// `[t/3, t/2]` against `||Rm||_{n/2}(0) (C_S^2/t + 1)^{2/n}`. Reported only.
pub fn check_t_star_scan<T: Real>(traj: &Trajectory<T>, chain: &ConstantChain<T>) -> Result<CheckReport<T>> {
    require_states(traj, 2, "t* scan")?;
    let (unit, l2) = unit_volume(traj)?;
    let nf = T::from_count(unit.dim());
    let p0 = nf * nf / (nf - T::lit(2.0));
    let cs2 = unit.context.cs0 * unit.context.cs0;
    let n2_0 = unit.derived[0].rm_n2;
    let t0 = chain.t0 * l2;
    let norm = |d: &crate::flow::DerivedRecord<T>| d.rm_norm * d.vol.powf(T::lit(2.0) / p0);
    let mut rep = CheckReport::new("t_star_scan", Status::RatioExtracted);
    rep.notes.push("at homogeneity the gradient integral vanishes; reported, not asserted".into());
    if n2_0 == T::zero() {
        rep.sup_ratio = Some(T::zero());
        rep.fitted_constant = Some(T::zero());
        rep.vacuous = true;
        return Ok(rep);
    }
    let mut sup = T::zero();
    let mut details = Vec::new();
    for d in unit.derived.iter().filter(|d| d.t > T::zero() && d.t <= t0 * (T::one() + T::lit(1e-12))) {
        let lo = d.t / T::lit(3.0);
        let hi = d.t / T::lit(2.0);
        let best = unit
            .derived
            .iter()
            .filter(|s| s.t >= lo && s.t <= hi)
            .map(norm)
            .fold(None, |a: Option<T>, b| Some(a.map_or(b, |x| x.min(b))));
        if let Some(m) = best {
            let rhs = n2_0 * (cs2 / d.t + T::one()).powf(T::lit(2.0) / nf);
            let ratio = m / rhs;
            sup = sup.max(ratio);
            details.push(Detail::at(d.t / l2, m, rhs, ratio));
        }
    }
    rep.samples = details.len();
    rep.sup_ratio = Some(sup);
    rep.fitted_constant = Some(sup);
    rep.set_details(details);
    Ok(rep)
}

/// Fits the constant of the final Moser bound: `sup |Rm|` over
/// `[(1 - 1/mu) t, t]` against
/// `C_S^{-4(n-2)/n^2} (C_S^2/t)^{1-4/n^2} (int int |Rm|^{p0/2})^{2/p0}`.
pub fn check_moser_bound<T: Real>(traj: &Trajectory<T>) -> Result<CheckReport<T>> {
    require_states(traj, 3, "Moser bound")?;
    let (unit, l2) = unit_volume(traj)?;
    let n = unit.dim();
    let nf = T::from_count(n);
    let p0 = nf * nf / (nf - T::lit(2.0));
    let start = T::one() - nf / (nf + T::lit(2.0));
    let cs = unit.context.cs0;
    let mut rep = CheckReport::new("moser_bound", Status::RatioExtracted);
    let mut sup = T::zero();
    let mut details = Vec::new();
    let mut any = false;
    for d in unit.derived.iter().filter(|d| d.t > T::zero()) {
        let lo = start * d.t;
        let win: Vec<_> = unit.derived.iter().filter(|s| s.t >= lo && s.t <= d.t).collect();
        if win.len() < 2 {
            continue;
        }
        let mut integral = T::zero();
        for w in win.windows(2) {
            let f = |r: &crate::flow::DerivedRecord<T>| r.rm_norm.powf(p0 / T::lit(2.0)) * r.vol;
            integral += (w[1].t - w[0].t) * (f(w[0]) + f(w[1])) / T::lit(2.0);
        }
        let peak = win.iter().map(|r| r.rm_norm).fold(T::zero(), |a, b| a.max(b));
        if peak > T::zero() {
            any = true;
        }
        let bound = moser_final_bound(n, cs, d.t, integral, T::one())?;
        if bound > T::zero() {
            let ratio = peak / bound;
            sup = sup.max(ratio);
            details.push(Detail::at(d.t / l2, peak, bound, ratio));
        }
    }
    rep.samples = details.len();
    rep.sup_ratio = Some(sup);
    rep.fitted_constant = Some(sup);
    rep.vacuous = !any;
    rep.set_details(details);
    rep.notes.push("window integral by the trapezoid rule over recorded samples".into());
    Ok(rep)
}
