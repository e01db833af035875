use serde::{Deserialize, Serialize};

use super::report::{CheckReport, Detail, Status, Verdict};
use crate::constants::{exact_moser_sums, ConstantChain, ConstantPrimitives};
use crate::error::{LabError, Result};
use crate::geometry::{
    curvature_with, diameter, volume, MetricState, ModelGeometry, SectionalSampling, SpaceForm,
};
use crate::scalar::Real;
use crate::sobolev::{
    admissible_kappa, integral_ricci_deficit, rm_critical_norm, GallotConstant, SobolevEstimate,
    WitnessNorms,
};

/// Relative slack when validating the Sobolev inequality on witnesses
/// (covers quadrature error on exact-equality witnesses such as constants).
pub const WITNESS_SLACK: f64 = 1e-9;

/// `2^{n/2+1} (2^{n/2} B^{n/2} + 1) sqrt(A/B)`.
pub fn diameter_rhs<T: Real>(a: T, b: T, n: usize) -> T {
    let half = T::from_count(n) / T::lit(2.0);
    let two = T::lit(2.0);
    two.powf(half + T::one()) * (two.powf(half) * b.powf(half) + T::one()) * (a / b).sqrt()
}

/// Validates `||u||_{2n/(n-2)}^2 <= A ||grad u||^2 + B vol^{-2/n} ||u||^2` on
/// every witness, then checks `diam / vol^{1/n}` against [`diameter_rhs`].
pub fn check_diameter_bound<T: Real>(
    a: T,
    b: T,
    n: usize,
    diam: T,
    vol: T,
    witnesses: &[WitnessNorms<T>],
) -> Result<CheckReport<T>> {
    if !(a > T::zero() && b > T::zero() && diam > T::zero() && vol > T::zero()) {
        return Err(LabError::Domain(format!(
            "diameter bound needs positive A, B, diam, vol (got {a}, {b}, {diam}, {vol})"
        )));
    }
    if witnesses.is_empty() {
        return Err(LabError::Argument("diameter bound needs a witness family".into()));
    }
    let nf = T::from_count(n);
    let vol_w = vol.powf(-T::lit(2.0) / nf);
    let mut details = Vec::new();
    let mut worst = T::lit(-1.0);
    let mut offender = None;
    for w in witnesses {
        let lhs = w.critical * w.critical;
        let rhs = a * w.grad_l2 * w.grad_l2 + b * vol_w * w.l2 * w.l2;
        let rel = (lhs - rhs) / rhs;
        if rel > worst {
            worst = rel;
        }
        if rel > T::lit(WITNESS_SLACK) && offender.is_none() {
            offender = Some(w.label.clone());
        }
        details.push(Detail::labeled(w.label.clone(), lhs, rhs, rel));
    }
    let mut rep = CheckReport::new("diameter_bound", Status::Pass);
    rep.samples = witnesses.len();
    rep.notes.push(format!(
        "worst witness margin (lhs - rhs)/rhs of the Sobolev inequality with (A, B) = ({a}, {b}): {worst:e}"
    ));
    if let Some(label) = offender {
        rep.status = Status::HypothesisNotMet;
        rep.set_details(details);
        return Ok(rep.note(format!("witness `{label}` violates the Sobolev inequality")));
    }
    let lhs = diam / vol.powf(T::one() / nf);
    let rhs = diameter_rhs(a, b, n);
    rep.status = if lhs <= rhs { Status::Pass } else { Status::Fail };
    rep.sup_ratio = Some(lhs / rhs);
    rep.details = vec![Detail::labeled("diam / vol^(1/n)", lhs, rhs, lhs / rhs)];
    Ok(rep)
}

/// Exact rational limits of the Moser exponent sums for each `n`.
pub fn check_moser_sums<T: Real>(dims: std::ops::RangeInclusive<usize>, k_max: usize) -> Result<CheckReport<T>> {
    let mut ok = true;
    let mut notes = Vec::new();
    let mut count = 0;
    for n in dims {
        let e = exact_moser_sums(n, k_max)?;
        ok &= e.holds;
        count += 1;
        notes.push(format!(
            "n = {n}: sum 1/q_(k+1) = {}, sum 1/q_k = {}, sum k/q_k = {}{}",
            e.limits[0],
            e.limits[1],
            e.limits[2],
            if e.holds { "" } else { " (mismatch)" }
        ));
    }
    let mut rep = CheckReport::new("moser_sums", if ok { Status::Pass } else { Status::Fail });
    rep.samples = count;
    rep.notes = notes;
    Ok(rep)
}

/// Lower witness bound against the configured upper bound. A violation is
/// flagged, not failed: it indicates an over-aggressive `c(n, kappa)`.
pub fn check_sobolev_consistency<T: Real>(est: &SobolevEstimate<T>) -> CheckReport<T> {
    let mut rep = CheckReport::new("sobolev_consistency", Status::Unavailable);
    rep.notes.push(format!("upper-bound strategy: {}", est.strategy));
    if let (Some(lo), Some(up)) = (est.lower, est.upper) {
        rep.samples = 1;
        rep.sup_ratio = Some(if up > T::zero() { lo / up } else { T::zero() });
        rep.details = vec![Detail::labeled(
            est.witness.clone().unwrap_or_default(),
            lo,
            up,
            lo - up,
        )];
        if lo <= up {
            rep.status = Status::Pass;
        } else {
            rep.status = Status::HypothesisNotMet;
            rep.notes.push("witness lower bound exceeds the configured upper bound".into());
        }
    }
    rep
}

/// Settings for the integral-Ricci variant, whose threshold has no value
/// unless configured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct IntegralRicciSettings<T> {
    pub p: T,
    pub kappa: T,
    pub diam_bound: T,
    pub epsilon: Option<T>,
}

/// Single-metric invariants entering the hypothesis report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct HypothesisInvariants<T> {
    pub n: usize,
    pub rm_n2: T,
    /// `(vol^{-1} int |Rm|^{n/2})^{2/n}`, the pointwise `|Rm|` here.
    pub rm_average: T,
    pub cs_upper: Option<T>,
    pub diam: Option<T>,
    pub vol: T,
    pub ric_min: T,
    pub ricci_deficit: Option<T>,
    /// The model is a sphere times a circle.
    pub sphere_circle_product: bool,
}

impl<T: Real> HypothesisInvariants<T> {
    pub fn from_metric(
        model: &ModelGeometry<T>,
        g: &MetricState<T>,
        cs_upper: Option<T>,
        diam_bound: Option<T>,
        integral_ricci: Option<&IntegralRicciSettings<T>>,
    ) -> Result<Self> {
        let curv = curvature_with(model, g, SectionalSampling::coordinate_only())?;
        let vol = volume(model, g)?;
        let deficit = match integral_ricci {
            Some(s) => Some(integral_ricci_deficit(&curv, s.p, s.kappa)?),
            None => None,
        };
        let sphere_circle_product = model.factors().is_some_and(|fs| {
            fs.iter().any(|f| f.form == SpaceForm::Sphere)
                && fs.iter().any(|f| f.form == SpaceForm::Circle)
        });
        Ok(Self {
            n: model.dim(),
            rm_n2: rm_critical_norm(&curv, vol),
            rm_average: curv.rm_norm,
            cs_upper,
            diam: diameter(model, g)?.value().or(diam_bound),
            vol,
            ric_min: curv.ric_min(),
            ricci_deficit: deficit,
            sphere_circle_product,
        })
    }
}

const INFRANIL: &str = "M is diffeomorphic to an infranil manifold (asserted implication, not computed)";

fn verdict<T: Real>(criterion: &str, quantity: T, threshold: T) -> Verdict<T> {
    Verdict {
        criterion: criterion.into(),
        holds: Some(quantity <= threshold),
        quantity: Some(quantity),
        threshold: Some(threshold),
        margin: Some(threshold - quantity),
        conclusion: INFRANIL.into(),
        notes: Vec::new(),
    }
}

fn unavailable<T>(criterion: &str, why: String) -> Verdict<T> {
    Verdict {
        criterion: criterion.into(),
        holds: None,
        quantity: None,
        threshold: None,
        margin: None,
        conclusion: INFRANIL.into(),
        notes: vec![why],
    }
}

/// Evaluates the hypotheses of the three infranil criteria: the Sobolev
/// form `||Rm||_{n/2} C_S^2 <= eps_n`, the diameter form
/// `||Rm||_{n/2} (diam/vol^{1/n})^2 <= c(n,kappa)^{-2} eps_n` with
/// `diam^2 Ric >= -kappa`, and the integral-Ricci form.
pub fn hypothesis_report<T: Real>(
    inv: &HypothesisInvariants<T>,
    chain: &ConstantChain<T>,
    primitives: &ConstantPrimitives<T>,
    integral_ricci: Option<&IntegralRicciSettings<T>>,
) -> CheckReport<T> {
    let n = inv.n;
    let mut verdicts = Vec::new();

    verdicts.push(match inv.cs_upper {
        Some(cs) => {
            let mut v = verdict("infranil_via_sobolev", inv.rm_n2 * cs * cs, chain.eps_n_main);
            v.notes.push("C_S enters through an upper bound, so a holding verdict is sound".into());
            v
        }
        None => unavailable("infranil_via_sobolev", "no upper bound for C_S".into()),
    });

    verdicts.push(match inv.diam {
        Some(d) => {
            let needed = admissible_kappa(d, inv.ric_min);
            let kappa = chain.kappa.unwrap_or(needed);
            let c = primitives.gallot.constant(n, kappa);
            let threshold = chain.eps_n_main / (c * c);
            let scale = d / inv.vol.powf(T::one() / T::from_count(n));
            let mut v = verdict("infranil_via_diameter", inv.rm_n2 * scale * scale, threshold);
            v.notes.push(format!("kappa = {kappa}, c(n, kappa) = {c} ({})", primitives.gallot.describe()));
            if kappa < needed {
                v.holds = Some(false);
                v.notes.push(format!("diam^2 Ric >= -kappa fails: needs kappa >= {needed}"));
            }
            v
        }
        None => unavailable("infranil_via_diameter", "diameter unavailable and no bound supplied".into()),
    });

    verdicts.push(match (integral_ricci, inv.ricci_deficit) {
        (Some(s), Some(deficit)) => {
            let quantity = deficit.max(inv.rm_average);
            let mut v = match s.epsilon {
                Some(eps) => verdict("infranil_via_integral_ricci", quantity, eps),
                None => {
                    let mut v = unavailable(
                        "infranil_via_integral_ricci",
                        "threshold eps(n, p, kappa, D) has no configured value".into(),
                    );
                    v.quantity = Some(quantity);
                    v
                }
            };
            v.notes.push(format!(
                "Ricci deficit (p = {}, kappa = {}) = {deficit}, normalized |Rm| average = {}",
                s.p, s.kappa, inv.rm_average
            ));
            match inv.diam {
                Some(d) if d > s.diam_bound => {
                    v.holds = v.holds.map(|_| false);
                    v.notes.push(format!("diam = {d} exceeds D = {}", s.diam_bound));
                }
                Some(_) => {}
                None => v.notes.push(format!("diam <= D = {} taken as given", s.diam_bound)),
            }
            v
        }
        _ => unavailable(
            "infranil_via_integral_ricci",
            "integral Ricci settings not configured".into(),
        ),
    });

    let any_true = verdicts.iter().any(|v| v.holds == Some(true));
    let any_known = verdicts.iter().any(|v| v.holds.is_some());
    let status = if any_true {
        Status::Pass
    } else if any_known {
        Status::HypothesisNotMet
    } else {
        Status::Unavailable
    };
    let mut rep = CheckReport::new("hypotheses", status).with_primitives(primitives);
    rep.samples = verdicts.len();
    rep.vacuous = inv.rm_n2 == T::zero();
    if inv.sphere_circle_product {
        rep.notes.push(
            "sphere x circle: the universal cover is not diffeomorphic to R^n, so this family is not infranil; \
             ||Rm||_(n/2) -> 0 as the circle shrinks while C_S grows"
                .into(),
        );
    }
    rep.verdicts = verdicts;
    rep
}
