//! Checkable predicates for the Hardy-type inequalities. Each check returns
//! a [`BoundReport`] (scalar inequalities) or an [`ImageReport`] (atom-image
//! statements).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::atoms::{sum_quasinorm_upper, validate_atom, Atom, AtomSpec, AtomValidationReport, AtomicSum, WeightSpec};
use crate::constants;
use crate::error::{Error, Result};
use crate::funcrep::{GeneralizedPiecewiseFunction, Interval, Term};
use crate::norms::{auxiliary_inequality_check, lp_integral, power_tail_integral, Exponent};
use crate::operators::{self, OperatorImage};
use crate::quad::QuadResult;

/// Floating-point slack added to every quadrature error budget, relative
/// to `|lhs|`.
const ROUNDING_REL: f64 = 16.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Direction of the inequality: `lhs < bound` or `lhs > bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Upper,
    Lower,
}

/// Strict mode certifies `lhs < bound` only with a margin exceeding the
/// error budget; non-strict mode accepts anything within the budget.
pub fn decide(lhs: f64, bound: f64, quad_error: f64, strict: bool, sense: Sense) -> Verdict {
    // Orient everything as an upper bound.
    let (lhs, bound) = match sense {
        Sense::Upper => (lhs, bound),
        Sense::Lower => (-lhs, -bound),
    };
    if lhs.is_nan() || bound.is_nan() {
        return Verdict::Inconclusive;
    }
    if strict {
        if lhs < bound - quad_error {
            Verdict::Pass
        } else if lhs >= bound + quad_error {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    } else if lhs <= bound + quad_error {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub check_id: String,
    pub lhs: f64,
    pub bound: f64,
    pub ratio: f64,
    pub strict: bool,
    pub quad_error: f64,
    pub verdict: Verdict,
    pub sense: Sense,
    pub metadata: BTreeMap<String, Value>,
}

impl BoundReport {
    pub fn new(check_id: &str, lhs: f64, bound: f64, quad_error: f64, strict: bool, sense: Sense) -> Self {
        let quad_error = quad_error + ROUNDING_REL * lhs.abs();
        BoundReport {
            check_id: check_id.to_string(),
            lhs,
            bound,
            ratio: lhs / bound,
            strict,
            quad_error,
            verdict: decide(lhs, bound, quad_error, strict, sense),
            sense,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: Value) -> Self {
        self.metadata.insert(key.to_string(), value);
        self
    }

    /// Margin in the direction of the inequality; positive when satisfied.
    pub fn margin(&self) -> f64 {
        match self.sense {
            Sense::Upper => self.bound - self.lhs,
            Sense::Lower => self.lhs - self.bound,
        }
    }
}

/// Atom-image statement: a scaled operator image validated as an atom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageReport {
    pub check_id: String,
    pub scale: f64,
    pub target_spec: AtomSpec,
    pub validation: AtomValidationReport,
    pub verdict: Verdict,
    pub metadata: BTreeMap<String, Value>,
}

fn spec_meta(spec: &AtomSpec) -> Value {
    serde_json::to_value(spec).unwrap_or(Value::Null)
}

/// `∫|T f|^p` over `(0, ∞)` for an operator image, including the closed-form
/// remainder of the `c/x` tail beyond its horizon.
fn image_lp(image: &OperatorImage, p: f64, rel_tol: f64) -> Result<QuadResult> {
    let mut r = lp_integral(&image.function, p, WeightSpec::Unit, rel_tol)?;
    if let Some(tail) = image.tail {
        r.value += power_tail_integral(tail.coeff, -1.0, tail.horizon, p, WeightSpec::Unit)?;
    }
    Ok(r)
}

fn require_rel_tol(rel_tol: f64) -> Result<()> {
    crate::norms::check_rel_tol(rel_tol)
}

/// `∫|Ha|^p < 1/(1 − p/q)` for unweighted `(p,q,0)`-atoms; strict iff `x0 > 0`.
pub fn check_prop1(a: &Atom, rel_tol: f64) -> Result<BoundReport> {
    require_rel_tol(rel_tol)?;
    let spec = a.spec;
    if spec.weight != WeightSpec::Unit {
        return Err(Error::SpecMismatch("prop1 needs an unweighted atom".to_string()));
    }
    let bound = constants::prop1_bound(spec.p, spec.q).map_err(|e| Error::SpecMismatch(e.to_string()))?;
    let image = operators::hardy(&a.function)?;
    let lhs = image_lp(&image, spec.p, rel_tol)?;
    let strict = spec.interval.lo > 0.0;
    Ok(BoundReport::new("prop1", lhs.value, bound, lhs.abs_error_estimate, strict, Sense::Upper)
        .with_meta("spec", spec_meta(&spec))
        .with_meta("operator", json!("H")))
}

/// `∫|H*a|^p` against the three-case bound for `(p,q,0)_{x^p}`-atoms.
pub fn check_prop4(a: &Atom, rel_tol: f64) -> Result<BoundReport> {
    require_rel_tol(rel_tol)?;
    let spec = a.spec;
    let bound = constants::prop4_bound(spec.p, spec.q)?;
    if spec.weight != WeightSpec::power(spec.p) {
        return Err(Error::SpecMismatch(format!("prop4 needs the weight x^p = x^{}", spec.p)));
    }
    let image = operators::dual_hardy(&a.function)?;
    let lhs = image_lp(&image, spec.p, rel_tol)?;
    let strict = spec.interval.lo > 0.0;
    Ok(BoundReport::new("prop4", lhs.value, bound, lhs.abs_error_estimate, strict, Sense::Upper)
        .with_meta("spec", spec_meta(&spec))
        .with_meta("operator", json!("H*"))
        .with_meta("rederived_bound", json!(constants::prop4_bound_rederived(spec.p, spec.q)?)))
}

/// `I^{1/p}` with the quadrature error propagated.
fn pth_root(r: QuadResult, p: f64) -> (f64, f64) {
    let v = r.value.powf(1.0 / p);
    let err = if r.value > 0.0 { v / (p * r.value) * r.abs_error_estimate } else { 0.0 };
    (v, err)
}

fn sum_report(
    id: &str,
    sum: &AtomicSum,
    image: &OperatorImage,
    constant: f64,
    operator: &str,
    rel_tol: f64,
) -> Result<BoundReport> {
    let p = sum.p;
    let (lhs, err) = pth_root(image_lp(image, p, rel_tol)?, p);
    let quasinorm = sum_quasinorm_upper(sum);
    let strict = sum.strictly_positive_support();
    Ok(BoundReport::new(id, lhs, constant * quasinorm, err, strict, Sense::Upper)
        .with_meta("spec", spec_meta(sum.spec()))
        .with_meta("constant", json!(constant))
        .with_meta("quasinorm_upper", json!(quasinorm))
        .with_meta("atoms", json!(sum.entries.len()))
        .with_meta("operator", json!(operator)))
}

/// `‖H Σλa‖_p < (1−p/q)^{−1/p}·(Σ|λ|^p)^{1/p}` over unweighted `(p,q,0)`-atoms.
pub fn check_thm1(sum: &AtomicSum, rel_tol: f64) -> Result<BoundReport> {
    require_rel_tol(rel_tol)?;
    let spec = *sum.spec();
    if spec.weight != WeightSpec::Unit {
        return Err(Error::SpecMismatch("thm1 needs unweighted atoms".to_string()));
    }
    let c = constants::thm1_constant(spec.p, spec.q).map_err(|e| Error::SpecMismatch(e.to_string()))?;
    let image = operators::hardy(&sum.function())?;
    sum_report("thm1", sum, &image, c, "H", rel_tol)
}

fn thm2_common(sum: &AtomicSum) -> Result<f64> {
    let spec = *sum.spec();
    let c = constants::thm2_constant(spec.p, spec.q)?;
    if spec.weight != WeightSpec::power(spec.p) {
        return Err(Error::SpecMismatch(format!("thm2 needs the weight x^p = x^{}", spec.p)));
    }
    Ok(c)
}

/// `‖H* Σλa‖_p` against `c₂(p,q)·(Σ|λ|^p)^{1/p}` over `(p,q,0)_{x^p}`-atoms.
pub fn check_thm2(sum: &AtomicSum, rel_tol: f64) -> Result<BoundReport> {
    require_rel_tol(rel_tol)?;
    let c = thm2_common(sum)?;
    let image = operators::dual_hardy(&sum.function())?;
    Ok(sum_report("thm2", sum, &image, c, "H*", rel_tol)?.with_meta(
        "note",
        json!("operator taken as H*, matching the estimate the constant is derived from"),
    ))
}

/// As [`check_thm2`] with `H` in place of `H*`, for comparison.
pub fn check_thm2_literal(sum: &AtomicSum, rel_tol: f64) -> Result<BoundReport> {
    require_rel_tol(rel_tol)?;
    let c = thm2_common(sum)?;
    let image = operators::hardy(&sum.function())?;
    Ok(sum_report("thm2-literal", sum, &image, c, "H", rel_tol)?
        .with_meta("note", json!("literal statement with H; informational")))
}

fn image_report(
    id: &str,
    candidate: operators::ImageCandidate,
    tol: f64,
    meta: BTreeMap<String, Value>,
) -> ImageReport {
    let mut validation = validate_atom(&candidate.function, &candidate.target_spec, tol);
    validation.size_strict = Some(validation.norm < validation.budget - validation.norm_error);
    let verdict = if validation.passed() { Verdict::Pass } else { Verdict::Fail };
    ImageReport {
        check_id: id.to_string(),
        scale: candidate.scale,
        target_spec: candidate.target_spec,
        validation,
        verdict,
        metadata: meta,
    }
}

/// `(1/q')Ha` is a `(p,q,s)`-atom for every L-`(p,q,s)`-atom `a`.
pub fn check_thm3(a: &Atom, tol: f64) -> Result<ImageReport> {
    let candidate = operators::hardy_image_atom_candidate(a)?;
    let mut meta = BTreeMap::new();
    meta.insert("source_spec".to_string(), spec_meta(&a.spec));
    Ok(image_report("thm3", candidate, tol, meta))
}

/// The scaled `H*a` is a `(p,q,s−1)`-atom for every `(p,q,s)_{x^p}`-atom `a`
/// with `s ≥ 1`.
pub fn check_thm4(a: &Atom, tol: f64) -> Result<ImageReport> {
    constants::check_dual_domain(a.spec.p, a.spec.q).map_err(|e| Error::Precondition(e.to_string()))?;
    let candidate = operators::dual_image_atom_candidate(a)?;
    let mut meta = BTreeMap::new();
    meta.insert("source_spec".to_string(), spec_meta(&a.spec));
    meta.insert("domain".to_string(), json!("s >= 1 (moments up to s-1 are all that is used)"));
    Ok(image_report("thm4", candidate, tol, meta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Hardy,
    Dual,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hardy" => Ok(Direction::Hardy),
            "dual" => Ok(Direction::Dual),
            _ => Err(Error::InvalidSpec(format!("direction must be hardy or dual, got {s}"))),
        }
    }
}

/// Ratio of the classical inequality on the near-extremizer family
/// `x^{−1/p}` (Hardy) or `x^{−1−1/p}` (dual) restricted to `(1, A)`.
///
/// For `p > 1` the ratio must stay below `|p'|^p` (resp. `p^p`); for
/// `p < 1` it must exceed it. When the left side diverges, the integral up to
/// the tail horizon is reported as a lower bound.
pub fn check_classical(p: f64, a_param: f64, direction: Direction, rel_tol: f64) -> Result<BoundReport> {
    require_rel_tol(rel_tol)?;
    if !(p > 0.0 && p != 1.0 && p.is_finite()) {
        return Err(Error::ParameterDomain(format!("classical checks need p > 0, p != 1, got {p}")));
    }
    if !(a_param > 1.0 && a_param.is_finite()) {
        return Err(Error::ParameterDomain(format!("family parameter A = {a_param} must exceed 1")));
    }
    let iv = Interval::new(1.0, a_param)?;
    let (f, image, constant, weight) = match direction {
        Direction::Hardy => {
            let f = GeneralizedPiecewiseFunction::single(iv, vec![Term::monomial(1.0, -1.0 / p)])?;
            let image = operators::hardy(&f)?;
            (f, image, constants::classical_hardy_constant(p), WeightSpec::Unit)
        }
        Direction::Dual => {
            let f = GeneralizedPiecewiseFunction::single(iv, vec![Term::monomial(1.0, -1.0 - 1.0 / p)])?;
            let image = operators::dual_hardy(&f)?;
            (f, image, constants::classical_dual_constant(p), WeightSpec::power(p))
        }
    };
    let rhs = lp_integral(&f, p, weight, rel_tol)?;
    let mut num = lp_integral(&image.function, p, WeightSpec::Unit, rel_tol)?;
    let mut truncated_at = None;
    if let Some(tail) = image.tail {
        match power_tail_integral(tail.coeff, -1.0, tail.horizon, p, WeightSpec::Unit) {
            Ok(rest) => num.value += rest,
            Err(Error::Divergent(_)) => truncated_at = Some(tail.horizon),
            Err(e) => return Err(e),
        }
    }
    let sense = if p > 1.0 { Sense::Upper } else { Sense::Lower };
    if truncated_at.is_some() && sense == Sense::Upper {
        return Err(Error::Divergent("left side diverges for an upper-bound check".to_string()));
    }
    let lhs = num.value / rhs.value;
    let err = num.abs_error_estimate / rhs.value + lhs * rhs.abs_error_estimate / rhs.value;
    let id = match direction {
        Direction::Hardy => "classical-hardy",
        Direction::Dual => "classical-dual",
    };
    let mut report = BoundReport::new(id, lhs, constant, err, true, sense)
        .with_meta("p", json!(p))
        .with_meta("A", json!(a_param))
        .with_meta("numerator", json!(num.value))
        .with_meta("denominator", json!(rhs.value));
    if p < 1.0 {
        report = report.with_meta(
            "interpretation",
            json!(match direction {
                Direction::Hardy => "constant evaluated as |p'|^p with p' = p/(p-1) < 0",
                Direction::Dual => "constant evaluated as p^p",
            }),
        );
    }
    if let Some(h) = truncated_at {
        report = report
            .with_meta("lhs_truncated_at", json!(h))
            .with_meta("note", json!("left side diverges; the value up to the horizon is a lower bound"));
    }
    Ok(report)
}

/// `∫|Ha| ≤ ln 2` for `(1,∞,0)`-atoms; strict iff `x0 > 0`.
pub fn check_log2(a: &Atom) -> Result<BoundReport> {
    let spec = a.spec;
    if spec.p != 1.0 || spec.q != Exponent::Infinite || spec.weight != WeightSpec::Unit {
        return Err(Error::SpecMismatch("log2 needs an unweighted (1,inf,0)-atom".to_string()));
    }
    let image = operators::hardy(&a.function)?;
    let lhs = image_lp(&image, 1.0, 1e-12)?;
    let strict = spec.interval.lo > 0.0;
    Ok(BoundReport::new("log2", lhs.value, constants::LOG2_BOUND, lhs.abs_error_estimate, strict, Sense::Upper)
        .with_meta("spec", spec_meta(&spec)))
}

/// The two elementary power inequalities at `(x0, x1, p)`.
pub fn check_aux(x0: f64, x1: f64, p: f64) -> Result<BoundReport> {
    let aux = auxiliary_inequality_check(x0, x1, p)?;
    let mut r = BoundReport::new("aux", aux.lhs_upper, aux.rhs_upper, 0.0, true, Sense::Upper);
    r.verdict = if aux.pass { Verdict::Pass } else { Verdict::Fail };
    Ok(r.with_meta("x0", json!(x0))
        .with_meta("x1", json!(x1))
        .with_meta("p", json!(p))
        .with_meta("lhs_lower", json!(aux.lhs_lower))
        .with_meta("rhs_lower", json!(aux.rhs_lower)))
}

/// Slack in the image scale of an L-atom: the largest `ε` with
/// `‖Ha‖_q ≤ (q' − ε)·budget`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonReport {
    pub q_conjugate: f64,
    pub image_norm_ratio: f64,
    pub epsilon: f64,
}

pub fn image_scale_slack(a: &Atom) -> Result<EpsilonReport> {
    let spec = a.spec;
    let scale = constants::hardy_image_scale(spec.q)?;
    let image = operators::hardy(&a.function)?;
    let norm = crate::norms::lq_norm(&image.function, spec.q, WeightSpec::Unit, 1e-12)?;
    let ratio = norm / spec.norm_budget();
    let q_conjugate = 1.0 / scale;
    Ok(EpsilonReport { q_conjugate, image_norm_ratio: ratio, epsilon: q_conjugate - ratio })
}
