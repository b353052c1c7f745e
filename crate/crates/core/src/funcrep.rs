//! Exact representation of finite sums of `c·x^k·(ln x)^m` on disjoint
//! half-open intervals of the positive half-line.
//!
//! The class is closed under scaling, addition, dilation, multiplication by
//! `x^β` and `ln x`, and under the Hardy operators (see
//! [`crate::operators`]). Antiderivatives and definite integrals are
//! evaluated in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible exponent of `x` in a [`Term`].
pub const MIN_POWER: f64 = -3.0;
/// Largest admissible exponent of `ln x` in a [`Term`].
pub const MAX_LOG_EXP: u8 = 2;

const SIGN_SAMPLES: usize = 1024;

/// `coeff · x^power · (ln x)^log_exp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub power: f64,
    pub log_exp: u8,
}

impl Term {
    pub fn new(coeff: f64, power: f64, log_exp: u8) -> Result<Self> {
        let t = Term { coeff, power, log_exp };
        t.validate()?;
        Ok(t)
    }

    pub fn monomial(coeff: f64, power: f64) -> Self {
        Term { coeff, power, log_exp: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.coeff.is_finite() {
            return Err(Error::InvalidTerm(format!("non-finite coefficient {}", self.coeff)));
        }
        if !self.power.is_finite() || self.power < MIN_POWER {
            return Err(Error::InvalidTerm(format!(
                "power {} outside [{MIN_POWER}, inf)",
                self.power
            )));
        }
        if self.log_exp > MAX_LOG_EXP {
            return Err(Error::InvalidTerm(format!(
                "log exponent {} exceeds {MAX_LOG_EXP}",
                self.log_exp
            )));
        }
        Ok(())
    }

    /// Pointwise value; `x` must be positive.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let mut v = self.coeff * pow(x, self.power);
        if self.log_exp > 0 {
            v *= x.ln().powi(self.log_exp as i32);
        }
        v
    }

    /// Limit as `x → 0+`, when it exists and is finite.
    fn limit_at_zero(&self) -> Option<f64> {
        if self.coeff == 0.0 || self.power > 0.0 {
            Some(0.0)
        } else if self.power == 0.0 && self.log_exp == 0 {
            Some(self.coeff)
        } else {
            None
        }
    }

    fn derivative(&self) -> impl Iterator<Item = Term> {
        let Term { coeff, power, log_exp } = *self;
        let a = (power != 0.0).then(|| Term {
            coeff: coeff * power,
            power: power - 1.0,
            log_exp,
        });
        let b = (log_exp > 0).then(|| Term {
            coeff: coeff * log_exp as f64,
            power: power - 1.0,
            log_exp: log_exp - 1,
        });
        a.into_iter().chain(b)
    }
}

#[inline]
fn pow(x: f64, k: f64) -> f64 {
    if k == 0.0 {
        1.0
    } else if k.fract() == 0.0 && k.abs() <= 64.0 {
        x.powi(k as i32)
    } else {
        x.powf(k)
    }
}

/// Sum of `terms` at `x > 0`.
#[inline]
pub fn eval_terms(terms: &[Term], x: f64) -> f64 {
    terms.iter().map(|t| t.eval(x)).sum()
}

/// Value of `terms` at `x ≥ 0`, using the one-sided limit at zero.
pub fn eval_terms_closed(terms: &[Term], x: f64) -> Result<f64> {
    if x > 0.0 {
        return Ok(eval_terms(terms, x));
    }
    terms.iter().try_fold(0.0, |acc, t| {
        t.limit_at_zero()
            .map(|v| acc + v)
            .ok_or_else(|| Error::SingularAtZero(format!("{t:?}")))
    })
}

/// Sorts terms by `(power, log_exp)`, merges equal keys and drops zero
/// coefficients.
pub fn normalize_terms(mut terms: Vec<Term>) -> Vec<Term> {
    terms.sort_by(|a, b| a.power.total_cmp(&b.power).then(a.log_exp.cmp(&b.log_exp)));
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    for t in terms {
        match out.last_mut() {
            Some(last) if last.power == t.power && last.log_exp == t.log_exp => {
                last.coeff += t.coeff
            }
            _ => out.push(t),
        }
    }
    out.retain(|t| t.coeff != 0.0);
    out
}

/// Term-by-term closed-form antiderivative.
///
/// Fails with [`Error::UnsupportedTerm`] for `x^{-1}(ln x)^2`, whose
/// antiderivative needs `(ln x)^3`.
pub fn antiderivative(terms: &[Term]) -> Result<Vec<Term>> {
    let mut out = Vec::with_capacity(terms.len() * 2);
    for &Term { coeff, power, log_exp } in terms {
        if coeff == 0.0 {
            continue;
        }
        if power == -1.0 {
            if log_exp >= MAX_LOG_EXP {
                return Err(Error::UnsupportedTerm { power, log_exp });
            }
            let m = log_exp + 1;
            out.push(Term { coeff: coeff / m as f64, power: 0.0, log_exp: m });
            continue;
        }
        let k1 = power + 1.0;
        match log_exp {
            0 => out.push(Term { coeff: coeff / k1, power: k1, log_exp: 0 }),
            1 => {
                out.push(Term { coeff: coeff / k1, power: k1, log_exp: 1 });
                out.push(Term { coeff: -coeff / (k1 * k1), power: k1, log_exp: 0 });
            }
            2 => {
                out.push(Term { coeff: coeff / k1, power: k1, log_exp: 2 });
                out.push(Term { coeff: -2.0 * coeff / (k1 * k1), power: k1, log_exp: 1 });
                out.push(Term { coeff: 2.0 * coeff / (k1 * k1 * k1), power: k1, log_exp: 0 });
            }
            _ => return Err(Error::UnsupportedTerm { power, log_exp }),
        }
    }
    Ok(normalize_terms(out))
}

/// `∫_a^b Σ terms` for `0 ≤ a ≤ b`, in closed form.
pub fn integrate_terms(terms: &[Term], a: f64, b: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let anti = antiderivative(terms)?;
    Ok(eval_terms_closed(&anti, b)? - eval_terms_closed(&anti, a)?)
}

/// Half-open interval `[lo, hi)` with `0 ≤ lo < hi < ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// One piece: the terms live on `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub terms: Vec<Term>,
}

impl Piece {
    pub fn interval(&self) -> Interval {
        Interval { lo: self.lo, hi: self.hi }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        eval_terms(&self.terms, x)
    }

    pub fn integral(&self) -> Result<f64> {
        integrate_terms(&self.terms, self.lo, self.hi)
    }
}

#[derive(Deserialize)]
struct RawFunction {
    pieces: Vec<Piece>,
}

impl TryFrom<RawFunction> for GeneralizedPiecewiseFunction {
    type Error = Error;

    fn try_from(raw: RawFunction) -> Result<Self> {
        GeneralizedPiecewiseFunction::new(raw.pieces)
    }
}

/// Finite sum of `c·x^k·(ln x)^m` terms on sorted, pairwise disjoint
/// half-open pieces; zero outside every piece.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawFunction")]
pub struct GeneralizedPiecewiseFunction {
    pieces: Vec<Piece>,
}

impl GeneralizedPiecewiseFunction {
    /// Validates terms and intervals; pieces are sorted by left endpoint.
    pub fn new(mut pieces: Vec<Piece>) -> Result<Self> {
        for piece in &pieces {
            Interval::new(piece.lo, piece.hi)?;
            for t in &piece.terms {
                t.validate()?;
            }
        }
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in pieces.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(Error::InvalidFunction(format!(
                    "pieces [{}, {}) and [{}, {}) overlap",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        Ok(GeneralizedPiecewiseFunction { pieces })
    }

    /// Skips validation; used for derivatives, whose powers may drop
    /// below [`MIN_POWER`].
    pub(crate) fn from_sorted_pieces(pieces: Vec<Piece>) -> Self {
        GeneralizedPiecewiseFunction { pieces }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(interval: Interval, terms: Vec<Term>) -> Result<Self> {
        Self::new(vec![Piece { lo: interval.lo, hi: interval.hi, terms }])
    }

    pub fn constant(interval: Interval, c: f64) -> Self {
        Self::from_sorted_pieces(vec![Piece {
            lo: interval.lo,
            hi: interval.hi,
            terms: normalize_terms(vec![Term::monomial(c, 0.0)]),
        }])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn into_pieces(self) -> Vec<Piece> {
        self.pieces
    }

    /// Hull of all pieces carrying at least one term.
    pub fn support(&self) -> Option<Interval> {
        let mut live = self.pieces.iter().filter(|p| !p.terms.is_empty());
        let first = live.next()?;
        let hi = live.last().map_or(first.hi, |p| p.hi);
        Some(Interval { lo: first.lo, hi })
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.terms.iter().all(|t| t.coeff == 0.0))
    }

    /// Index of the piece owning `x` under the half-open convention.
    pub fn piece_index(&self, x: f64) -> Option<usize> {
        let i = self.pieces.partition_point(|p| p.hi <= x);
        (i < self.pieces.len() && self.pieces[i].lo <= x).then_some(i)
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(x));
        }
        Ok(self.value_at(x))
    }

    /// Pointwise value for `x > 0` without the domain check.
    #[inline]
    pub fn value_at(&self, x: f64) -> f64 {
        self.piece_index(x).map_or(0.0, |i| self.pieces[i].eval(x))
    }

    /// Exact `∫_a^b f`, summed over the pieces meeting `[a, b]`.
    pub fn definite_integral(&self, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0 && a <= b) {
            return Err(Error::InvalidInterval { lo: a, hi: b });
        }
        let mut total = 0.0;
        for p in &self.pieces {
            let lo = p.lo.max(a);
            let hi = p.hi.min(b);
            if lo < hi {
                total += integrate_terms(&p.terms, lo, hi)?;
            }
        }
        Ok(total)
    }

    /// `∫_0^∞ f`.
    pub fn integral(&self) -> Result<f64> {
        self.pieces.iter().map(Piece::integral).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map_terms(|t| Term { coeff: c * t.coeff, ..t })
    }

    /// `x ↦ x^beta · f(x)`.
    pub fn mul_power(&self, beta: f64) -> Self {
        self.map_terms(|t| Term { power: t.power + beta, ..t })
    }

    /// `x ↦ ln x · f(x)`.
    pub fn mul_log(&self) -> Result<Self> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let terms = p
                    .terms
                    .iter()
                    .map(|t| Term::new(t.coeff, t.power, t.log_exp + 1))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Piece { terms, ..p.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_sorted_pieces(pieces))
    }

    /// `x ↦ f(lambda·x)` for `lambda > 0`.
    pub fn dilate(&self, lambda: f64) -> Self {
        assert!(lambda > 0.0, "dilation factor must be positive");
        let ll = lambda.ln();
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let mut terms = Vec::with_capacity(p.terms.len() * 2);
                for t in &p.terms {
                    // (ln λ + ln x)^m expanded binomially
                    let base = t.coeff * pow(lambda, t.power);
                    for j in 0..=t.log_exp {
                        let binom = match (t.log_exp, j) {
                            (2, 1) => 2.0,
                            _ => 1.0,
                        };
                        let c = base * binom * ll.powi((t.log_exp - j) as i32);
                        terms.push(Term { coeff: c, power: t.power, log_exp: j });
                    }
                }
                Piece {
                    lo: p.lo / lambda,
                    hi: p.hi / lambda,
                    terms: normalize_terms(terms),
                }
            })
            .collect();
        Self::from_sorted_pieces(pieces)
    }

    /// Pointwise derivative inside each piece (jumps at boundaries ignored).
    pub fn derivative(&self) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                terms: normalize_terms(p.terms.iter().flat_map(Term::derivative).collect()),
                ..p.clone()
            })
            .collect();
        Self::from_sorted_pieces(pieces)
    }

    fn map_terms(&self, f: impl Fn(Term) -> Term) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                terms: normalize_terms(p.terms.iter().copied().map(&f).collect()),
                ..p.clone()
            })
            .collect();
        Self::from_sorted_pieces(pieces)
    }

    /// Points inside pieces where `f` changes sign, each within `tol`.
    ///
    /// Each piece is sampled at [`SIGN_SAMPLES`] + 1 points and bracketed
    /// sign changes are bisected. Zeros without a sign change (tangential
    /// roots) are not reported.
    pub fn sign_change_points(&self, tol: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for p in &self.pieces {
            if p.terms.is_empty() {
                continue;
            }
            sign_changes_in(&p.terms, p.lo, p.hi, tol, &mut out);
        }
        out
    }
}

/// Appends to `out` the sign changes of `Σ terms` inside `(lo, hi)`.
pub(crate) fn sign_changes_in(terms: &[Term], lo: f64, hi: f64, tol: f64, out: &mut Vec<f64>) {
    let w = hi - lo;
    let start = if lo > 0.0 { lo } else { lo + w * 1e-9 };
    let f = |x: f64| eval_terms(terms, x);
    let mut last: Option<(f64, f64)> = None;
    for i in 0..=SIGN_SAMPLES {
        let x = if i == 0 {
            start
        } else if i == SIGN_SAMPLES {
            hi
        } else {
            lo + w * i as f64 / SIGN_SAMPLES as f64
        };
        let v = f(x);
        if v == 0.0 || !v.is_finite() {
            continue;
        }
        if let Some((xa, va)) = last {
            if va.signum() != v.signum() {
                out.push(bisect(&f, xa, va, x, tol));
            }
        }
        last = Some((x, v));
    }
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, fa: f64, mut b: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// `Σ c_i · f_i`; the result's piece boundaries are the union of the inputs'.
pub fn linear_combine(fs: &[(f64, &GeneralizedPiecewiseFunction)]) -> GeneralizedPiecewiseFunction {
    let mut breaks: Vec<f64> = fs
        .iter()
        .flat_map(|(_, f)| f.pieces.iter().flat_map(|p| [p.lo, p.hi]))
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut pieces: Vec<Piece> = Vec::new();
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        let mut terms = Vec::new();
        for &(c, f) in fs {
            if let Some(i) = f.piece_index(mid) {
                terms.extend(f.pieces[i].terms.iter().map(|t| Term { coeff: c * t.coeff, ..*t }));
            }
        }
        let terms = normalize_terms(terms);
        if terms.is_empty() {
            continue;
        }
        match pieces.last_mut() {
            Some(last) if last.hi == lo && last.terms == terms => last.hi = hi,
            _ => pieces.push(Piece { lo, hi, terms }),
        }
    }
    GeneralizedPiecewiseFunction::from_sorted_pieces(pieces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn one_on(lo: f64, hi: f64) -> GeneralizedPiecewiseFunction {
        GeneralizedPiecewiseFunction::constant(Interval::new(lo, hi).unwrap(), 1.0)
    }

    fn poly(lo: f64, hi: f64, coeffs: &[f64]) -> GeneralizedPiecewiseFunction {
        let terms = coeffs.iter().enumerate().map(|(k, &c)| Term::monomial(c, k as f64)).collect();
        GeneralizedPiecewiseFunction::single(Interval::new(lo, hi).unwrap(), normalize_terms(terms))
            .unwrap()
    }

    #[test]
    fn evaluate_constant_piece() {
        let f = one_on(0.0, 1.0);
        assert_eq!(f.evaluate(0.5).unwrap(), 1.0);
        assert_eq!(f.evaluate(2.0).unwrap(), 0.0);
        assert_eq!(f.evaluate(1.0).unwrap(), 0.0, "right endpoint is excluded");
        assert!(matches!(f.evaluate(0.0), Err(Error::Domain(_))));
        assert!(matches!(f.evaluate(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn evaluate_log_piece_near_boundary() {
        let f = GeneralizedPiecewiseFunction::single(
            Interval::new(1.0, E).unwrap(),
            vec![Term::new(1.0, -1.0, 1).unwrap()],
        )
        .unwrap();
        // e itself belongs to no piece
        assert_eq!(f.evaluate(E).unwrap(), 0.0);
        let x = E - 1e-9;
        let direct = x.ln() / x;
        assert!((f.evaluate(x).unwrap() - direct).abs() < 1e-15);
        assert!((f.evaluate(x).unwrap() - 1.0 / E).abs() < 1e-9);
    }

    #[test]
    fn antiderivative_examples() {
        let a = antiderivative(&[Term::monomial(1.0, 1.0)]).unwrap();
        assert_eq!(a, vec![Term::monomial(0.5, 2.0)]);

        let a = antiderivative(&[Term::monomial(1.0, -1.0)]).unwrap();
        assert_eq!(a, vec![Term { coeff: 1.0, power: 0.0, log_exp: 1 }]);

        let a = antiderivative(&[Term { coeff: 1.0, power: 0.0, log_exp: 1 }]).unwrap();
        assert_eq!(
            a,
            vec![Term::monomial(-1.0, 1.0), Term { coeff: 1.0, power: 1.0, log_exp: 1 }]
        );

        let a = antiderivative(&[Term { coeff: 1.0, power: -1.0, log_exp: 1 }]).unwrap();
        assert_eq!(a, vec![Term { coeff: 0.5, power: 0.0, log_exp: 2 }]);
    }

    #[test]
    fn antiderivative_rejects_cubic_log() {
        let err = antiderivative(&[Term { coeff: 1.0, power: -1.0, log_exp: 2 }]).unwrap_err();
        assert!(matches!(err, Error::UnsupportedTerm { .. }));
    }

    #[test]
    fn definite_integral_examples() {
        assert_eq!(one_on(0.0, 1.0).definite_integral(0.0, 1.0).unwrap(), 1.0);
        assert!((poly(1.0, 2.0, &[0.0, 1.0]).definite_integral(1.0, 2.0).unwrap() - 1.5).abs() < 1e-15);
        let ln = GeneralizedPiecewiseFunction::single(
            Interval::new(1.0, E).unwrap(),
            vec![Term { coeff: 1.0, power: 0.0, log_exp: 1 }],
        )
        .unwrap();
        assert!((ln.definite_integral(1.0, E).unwrap() - 1.0).abs() < 1e-15);
        // partial overlap and outside support
        assert!((one_on(0.0, 1.0).definite_integral(0.5, 3.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(one_on(0.0, 1.0).definite_integral(1.0, 0.5).is_err());
    }

    #[test]
    fn integral_diverges_at_zero() {
        let f = GeneralizedPiecewiseFunction::single(
            Interval::new(0.0, 1.0).unwrap(),
            vec![Term::monomial(1.0, -1.0)],
        )
        .unwrap();
        assert!(matches!(f.integral(), Err(Error::SingularAtZero(_))));
        // x^{-1/2} is integrable at zero
        let g = GeneralizedPiecewiseFunction::single(
            Interval::new(0.0, 4.0).unwrap(),
            vec![Term::monomial(1.0, -0.5)],
        )
        .unwrap();
        assert!((g.integral().unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn linear_combine_examples() {
        let f = one_on(0.0, 1.0);
        let g = linear_combine(&[(2.0, &f)]);
        assert_eq!(g.pieces().len(), 1);
        assert_eq!(g.value_at(0.5), 2.0);

        let z = linear_combine(&[(1.0, &f), (-1.0, &f)]);
        assert!(z.is_zero());
        assert!(z.support().is_none());

        let h = one_on(0.5, 2.0);
        let s = linear_combine(&[(1.0, &f), (1.0, &h)]);
        let bounds: Vec<(f64, f64)> = s.pieces().iter().map(|p| (p.lo, p.hi)).collect();
        assert_eq!(bounds, vec![(0.0, 0.5), (0.5, 1.0), (1.0, 2.0)]);
        for (x, want) in [(0.25, 1.0), (0.75, 2.0), (1.5, 1.0), (2.5, 0.0)] {
            assert_eq!(s.value_at(x), f.value_at(x) + h.value_at(x));
            assert_eq!(s.value_at(x), want);
        }
    }

    #[test]
    fn sign_change_examples() {
        let f = poly(1.0, 2.0, &[-1.5, 1.0]);
        let z = f.sign_change_points(1e-14);
        assert_eq!(z.len(), 1);
        assert!((z[0] - 1.5).abs() < 1e-13);

        assert!(one_on(0.0, 1.0).sign_change_points(1e-12).is_empty());

        let q = poly(0.0, 1.0, &[1.0, -6.0, 6.0]);
        let z = q.sign_change_points(1e-14);
        let s3 = 3f64.sqrt();
        assert_eq!(z.len(), 2);
        assert!((z[0] - (3.0 - s3) / 6.0).abs() < 1e-13);
        assert!((z[1] - (3.0 + s3) / 6.0).abs() < 1e-13);
    }

    #[test]
    fn dilation_matches_pointwise() {
        let f = GeneralizedPiecewiseFunction::single(
            Interval::new(0.5, 3.0).unwrap(),
            vec![
                Term::monomial(2.0, 1.0),
                Term { coeff: -1.0, power: -1.0, log_exp: 1 },
                Term { coeff: 0.5, power: 0.0, log_exp: 2 },
            ],
        )
        .unwrap();
        for lambda in [0.3, 2.0, 7.5] {
            let g = f.dilate(lambda);
            for x in [0.2, 0.4, 0.9, 1.3] {
                let want = f.value_at(lambda * x);
                let got = g.value_at(x);
                assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{lambda} {x}");
            }
        }
    }

    #[test]
    fn new_rejects_overlap_and_bad_terms() {
        let p = |lo, hi| Piece { lo, hi, terms: vec![Term::monomial(1.0, 0.0)] };
        assert!(GeneralizedPiecewiseFunction::new(vec![p(0.0, 1.0), p(0.5, 2.0)]).is_err());
        assert!(GeneralizedPiecewiseFunction::new(vec![p(1.0, 1.0)]).is_err());
        assert!(Term::new(1.0, -4.0, 0).is_err());
        assert!(Term::new(1.0, 0.0, 3).is_err());
        assert!(Term::new(f64::NAN, 0.0, 0).is_err());
        let ok = GeneralizedPiecewiseFunction::new(vec![p(1.0, 2.0), p(0.0, 1.0)]).unwrap();
        assert_eq!(ok.pieces()[0].lo, 0.0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let f = GeneralizedPiecewiseFunction::new(vec![
            Piece {
                lo: 0.1,
                hi: 1.0 / 3.0,
                terms: vec![Term::monomial(std::f64::consts::PI, 2.0), Term { coeff: 1e-300, power: -1.0, log_exp: 1 }],
            },
            Piece { lo: 0.5, hi: 2.0, terms: vec![Term::monomial(-0.1, -0.5)] },
        ])
        .unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.starts_with("{\"pieces\":[{\"lo\":"));
        let g: GeneralizedPiecewiseFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
        let bad = r#"{"pieces":[{"lo":2.0,"hi":1.0,"terms":[]}]}"#;
        assert!(serde_json::from_str::<GeneralizedPiecewiseFunction>(bad).is_err());
    }
}
