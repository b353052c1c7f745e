//! Weighted `L^q` norms, `L^p` quasi-norm integrals and sup norms of
//! [`GeneralizedPiecewiseFunction`]s.
//!
//! `∫|f|^p w` is split at piece boundaries and at the sign changes of `f`,
//! so that on each segment `|f|^p = (±f)^p` is smooth in the interior and
//! only endpoint singularities remain for the quadrature.

use crate::atoms::WeightSpec;
use crate::error::{Error, Result};
use crate::funcrep::{eval_terms, eval_terms_closed, sign_changes_in, GeneralizedPiecewiseFunction, Term};
use crate::quad;
pub use crate::quad::QuadResult;

pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Relative rounding error of a term sum, per unit of `Σ|term|`.
const EVAL_NOISE: f64 = 4.0 * f64::EPSILON;

/// `q ∈ [1, ∞]` (also used for `p`-like exponents where `∞` is admissible).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Exponent::Finite(q) => Some(q),
            Exponent::Infinite => None,
        }
    }

    /// `1/q`, with `1/∞ = 0`.
    pub fn recip(self) -> f64 {
        match self {
            Exponent::Finite(q) => 1.0 / q,
            Exponent::Infinite => 0.0,
        }
    }

    /// Conjugate exponent `q' = q/(q−1)`, with `1' = ∞` and `∞' = 1`.
    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::Infinite => Exponent::Finite(1.0),
            Exponent::Finite(q) if q == 1.0 => Exponent::Infinite,
            Exponent::Finite(q) => Exponent::Finite(q / (q - 1.0)),
        }
    }

    /// Strict comparison `x < q`.
    pub fn exceeds(self, x: f64) -> bool {
        match self {
            Exponent::Finite(q) => x < q,
            Exponent::Infinite => true,
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(q) => write!(f, "{q}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinite),
            t => t
                .parse::<f64>()
                .map_err(|e| format!("bad exponent {s:?}: {e}"))
                .and_then(|v| {
                    if v.is_infinite() && v > 0.0 {
                        Ok(Exponent::Infinite)
                    } else if v.is_finite() {
                        Ok(Exponent::Finite(v))
                    } else {
                        Err(format!("bad exponent {s:?}"))
                    }
                }),
        }
    }
}

impl serde::Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(q) => s.serialize_f64(*q),
            Exponent::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> serde::Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Exponent::Finite(v)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

pub fn check_rel_tol(rel_tol: f64) -> Result<()> {
    if rel_tol > 1e-13 && rel_tol < 1e-2 {
        Ok(())
    } else {
        Err(Error::ParameterDomain(format!("rel_tol {rel_tol} outside (1e-13, 1e-2)")))
    }
}

/// Sign-homogeneous segments of a piece: the piece endpoints plus the
/// interior sign changes.
fn segments(terms: &[Term], lo: f64, hi: f64) -> Vec<f64> {
    let mut cuts = vec![lo];
    let tol = 4.0 * f64::EPSILON * hi;
    sign_changes_in(terms, lo, hi, tol, &mut cuts);
    cuts.push(hi);
    cuts.dedup();
    cuts
}

/// `∫ |f|^p · w dx` over the support of `f`.
pub fn lp_integral(
    f: &GeneralizedPiecewiseFunction,
    p: f64,
    weight: WeightSpec,
    rel_tol: f64,
) -> Result<QuadResult> {
    check_rel_tol(rel_tol)?;
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::ParameterDomain(format!("exponent p = {p} must be positive and finite")));
    }
    let mut total = QuadResult::default();
    for piece in f.pieces() {
        if piece.terms.is_empty() {
            continue;
        }
        let terms = piece.terms.as_slice();
        let pow = |v: f64| if p == 1.0 { v } else if p == 2.0 { v * v } else { v.powf(p) };
        // Cancellation between large terms bounds the attainable accuracy.
        let integrand = |x: f64| {
            let (mut v, mut mag) = (0.0, 0.0);
            for t in terms {
                let e = t.eval(x);
                v += e;
                mag += e.abs();
            }
            let v = v.abs();
            let delta = EVAL_NOISE * mag;
            let w = weight.eval(x);
            let noise = 0.5 * (pow(v + delta) - pow((v - delta).max(0.0)));
            (pow(v) * w, noise * w)
        };
        let cuts = segments(terms, piece.lo, piece.hi);
        for w in cuts.windows(2) {
            total = total + quad::integrate_noisy(integrand, w[0], w[1], rel_tol, 0.0);
        }
    }
    if !total.value.is_finite() {
        return Err(Error::Divergent(format!("∫|f|^{p}·w is not finite")));
    }
    Ok(total)
}

/// `∫_start^∞ |c·x^power|^p · w dx` in closed form.
pub fn power_tail_integral(coeff: f64, power: f64, start: f64, p: f64, weight: WeightSpec) -> Result<f64> {
    if coeff == 0.0 {
        return Ok(0.0);
    }
    let e = p * power + weight.alpha();
    if e >= -1.0 {
        return Err(Error::Divergent(format!(
            "tail |x^{power}|^{p}·w decays like x^{e}, not integrable at infinity"
        )));
    }
    Ok(coeff.abs().powf(p) * start.powf(e + 1.0) / -(e + 1.0))
}

/// Weighted `L^q` norm; the weight is ignored at `q = ∞`.
pub fn lq_norm(f: &GeneralizedPiecewiseFunction, q: Exponent, weight: WeightSpec, rel_tol: f64) -> Result<f64> {
    lq_norm_estimate(f, q, weight, rel_tol).map(|r| r.value)
}

/// As [`lq_norm`], with the quadrature error propagated through `I^{1/q}`.
pub fn lq_norm_estimate(
    f: &GeneralizedPiecewiseFunction,
    q: Exponent,
    weight: WeightSpec,
    rel_tol: f64,
) -> Result<QuadResult> {
    match q {
        Exponent::Infinite => {
            check_rel_tol(rel_tol)?;
            sup_norm_estimate(f)
        }
        Exponent::Finite(q) => {
            let r = lp_integral(f, q, weight, rel_tol)?;
            let value = r.value.powf(1.0 / q);
            let err = if r.value > 0.0 { value / (q * r.value) * r.abs_error_estimate } else { 0.0 };
            Ok(QuadResult { value, abs_error_estimate: err, subdivisions: r.subdivisions })
        }
    }
}

/// `sup |f|` from piece endpoints and the sign changes of `f'`.
pub fn sup_norm(f: &GeneralizedPiecewiseFunction) -> Result<f64> {
    sup_norm_estimate(f).map(|r| r.value)
}

/// Supremum with the evaluation roundoff at the maximizer as its error.
pub fn sup_norm_estimate(f: &GeneralizedPiecewiseFunction) -> Result<QuadResult> {
    let df = f.derivative();
    let mut best = (0.0f64, 0.0f64);
    fn consider(best: &mut (f64, f64), terms: &[Term], x: f64, v: f64) {
        if v.abs() > best.0 {
            let mag: f64 = terms.iter().map(|t| t.eval(x).abs()).sum();
            *best = (v.abs(), EVAL_NOISE * mag);
        }
    }
    for (piece, dpiece) in f.pieces().iter().zip(df.pieces()) {
        if piece.terms.is_empty() {
            continue;
        }
        let left = match eval_terms_closed(&piece.terms, piece.lo) {
            Ok(v) => v,
            Err(_) => return Ok(QuadResult::exact(f64::INFINITY)),
        };
        if piece.lo > 0.0 {
            consider(&mut best, &piece.terms, piece.lo, left);
        } else {
            best.0 = best.0.max(left.abs());
        }
        consider(&mut best, &piece.terms, piece.hi, eval_terms(&piece.terms, piece.hi));
        let mut crit = Vec::new();
        let tol = 4.0 * f64::EPSILON * piece.hi;
        sign_changes_in(&dpiece.terms, piece.lo, piece.hi, tol, &mut crit);
        for x in crit {
            consider(&mut best, &piece.terms, x, eval_terms(&piece.terms, x));
        }
    }
    Ok(QuadResult { value: best.0, abs_error_estimate: best.1, subdivisions: 0 })
}

/// Outcome of the two elementary power inequalities used throughout the
/// atom estimates:
/// `(x1−x0)^{p+1} < x1^{p+1} − x0^{p+1}` for `p > 0`, and
/// `(x1−x0)^{1−p} > x1^{1−p} − x0^{1−p}` for `0 < p < 1`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AuxCheck {
    pub lhs_upper: f64,
    pub rhs_upper: f64,
    pub lhs_lower: Option<f64>,
    pub rhs_lower: Option<f64>,
    pub pass: bool,
}

pub fn auxiliary_inequality_check(x0: f64, x1: f64, p: f64) -> Result<AuxCheck> {
    if !(x0 > 0.0 && x0 < x1 && x1.is_finite() && p > 0.0 && p.is_finite()) {
        return Err(Error::ParameterDomain(format!(
            "need 0 < x0 < x1 < inf and p > 0, got x0 = {x0}, x1 = {x1}, p = {p}"
        )));
    }
    let d = x1 - x0;
    let lhs_upper = d.powf(p + 1.0);
    let rhs_upper = x1.powf(p + 1.0) - x0.powf(p + 1.0);
    let mut pass = lhs_upper < rhs_upper;
    let (lhs_lower, rhs_lower) = if p < 1.0 {
        let l = d.powf(1.0 - p);
        let r = x1.powf(1.0 - p) - x0.powf(1.0 - p);
        pass &= l > r;
        (Some(l), Some(r))
    } else {
        (None, None)
    };
    Ok(AuxCheck { lhs_upper, rhs_upper, lhs_lower, rhs_lower, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcrep::{normalize_terms, Interval};

    fn poly(lo: f64, hi: f64, coeffs: &[f64]) -> GeneralizedPiecewiseFunction {
        let terms = coeffs.iter().enumerate().map(|(k, &c)| Term::monomial(c, k as f64)).collect();
        GeneralizedPiecewiseFunction::single(Interval::new(lo, hi).unwrap(), normalize_terms(terms)).unwrap()
    }

    #[test]
    fn lp_integral_examples() {
        let one = poly(0.0, 1.0, &[1.0]);
        let r = lp_integral(&one, 2.0, WeightSpec::Unit, 1e-10).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);

        let f = GeneralizedPiecewiseFunction::single(
            Interval::new(1.0, 4.0).unwrap(),
            vec![Term::monomial(1.0, -0.5)],
        )
        .unwrap();
        let r = lp_integral(&f, 2.0, WeightSpec::Unit, 1e-10).unwrap();
        assert!((r.value - 4f64.ln()).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn lq_norm_examples() {
        let one = poly(1.0, 2.0, &[1.0]);
        assert_eq!(lq_norm(&one, Exponent::Infinite, WeightSpec::Unit, 1e-10).unwrap(), 1.0);

        let q = poly(0.0, 1.0, &[1.0, -6.0, 6.0]);
        let n = lq_norm(&q, Exponent::Finite(2.0), WeightSpec::Unit, 1e-10).unwrap();
        assert!((n - 0.2f64.sqrt()).abs() < 1e-12, "{n}");

        let one = poly(0.0, 1.0, &[1.0]);
        let n = lq_norm(&one, Exponent::Finite(2.0), WeightSpec::power(1.0), 1e-10).unwrap();
        assert!((n - 0.5f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn sup_norm_finds_interior_extremum() {
        // 6x² − 6x + 1 on [0,1): |f| peaks at the endpoints (1) and at 1/2 (−1/2)
        let q = poly(0.0, 1.0, &[1.0, -6.0, 6.0]);
        assert!((sup_norm(&q).unwrap() - 1.0).abs() < 1e-15);
        // x(1−x) on [0,1): interior max 1/4
        let b = poly(0.0, 1.0, &[0.0, 1.0, -1.0]);
        assert!((sup_norm(&b).unwrap() - 0.25).abs() < 1e-15);
        let sing = GeneralizedPiecewiseFunction::single(
            Interval::new(0.0, 1.0).unwrap(),
            vec![Term::monomial(1.0, -0.5)],
        )
        .unwrap();
        assert_eq!(sup_norm(&sing).unwrap(), f64::INFINITY);
    }

    #[test]
    fn rel_tol_domain() {
        let one = poly(0.0, 1.0, &[1.0]);
        assert!(lp_integral(&one, 1.0, WeightSpec::Unit, 1e-14).is_err());
        assert!(lp_integral(&one, 1.0, WeightSpec::Unit, 0.1).is_err());
        assert!(lp_integral(&one, 0.0, WeightSpec::Unit, 1e-10).is_err());
    }

    #[test]
    fn tail_integral() {
        // ∫_2^∞ (3/x)^2 dx = 9/2
        let v = power_tail_integral(3.0, -1.0, 2.0, 2.0, WeightSpec::Unit).unwrap();
        assert!((v - 4.5).abs() < 1e-14);
        assert!(power_tail_integral(3.0, -1.0, 2.0, 1.0, WeightSpec::Unit).is_err());
        assert_eq!(power_tail_integral(0.0, -1.0, 2.0, 0.5, WeightSpec::Unit).unwrap(), 0.0);
    }

    #[test]
    fn auxiliary_examples() {
        let r = auxiliary_inequality_check(1.0, 2.0, 1.0).unwrap();
        assert_eq!((r.lhs_upper, r.rhs_upper), (1.0, 3.0));
        assert!(r.pass && r.lhs_lower.is_none());
        let r = auxiliary_inequality_check(1.0, 2.0, 0.5).unwrap();
        assert_eq!(r.lhs_lower, Some(1.0));
        assert!((r.rhs_lower.unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!(r.pass);
        assert!(auxiliary_inequality_check(2.0, 2.0, 0.5).is_err());
        assert!(auxiliary_inequality_check(0.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn exponent_conventions() {
        assert_eq!(Exponent::Infinite.conjugate(), Exponent::Finite(1.0));
        assert_eq!(Exponent::Finite(1.0).conjugate(), Exponent::Infinite);
        assert_eq!(Exponent::Finite(2.0).conjugate(), Exponent::Finite(2.0));
        assert_eq!(Exponent::Infinite.recip(), 0.0);
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinite);
        assert_eq!("4".parse::<Exponent>().unwrap(), Exponent::Finite(4.0));
        let s = serde_json::to_string(&[Exponent::Infinite, Exponent::Finite(2.5)]).unwrap();
        assert_eq!(s, r#"["inf",2.5]"#);
        let back: Vec<Exponent> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![Exponent::Infinite, Exponent::Finite(2.5)]);
    }
}
