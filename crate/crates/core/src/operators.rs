//! Closed-form Hardy operator `Hf(x) = (1/x)∫_0^x f` and dual
//! `H*f(x) = ∫_x^∞ f` on [`GeneralizedPiecewiseFunction`]s.

use serde::Serialize;

use crate::atoms::{Atom, AtomSpec, WeightSpec};
use crate::constants;
use crate::error::{Error, Result};
use crate::funcrep::{antiderivative, eval_terms, eval_terms_closed, normalize_terms, GeneralizedPiecewiseFunction, Piece, Term};
use crate::norms::Exponent;

/// Default horizon of an unbounded `c/x` tail, as a multiple of the right
/// end of the input's support.
pub const DEFAULT_HORIZON_FACTOR: f64 = 1e6;

/// Total masses below this fraction of `Σ|∫ term|` count as zero.
const MASS_REL_TOL: f64 = 1e-12;

/// The `c/x` tail of `Hf` beyond the support of a nonzero-mean `f`. The
/// image function carries it on `[start, horizon)`; the remainder beyond
/// `horizon` is left to the caller (see [`crate::norms::power_tail_integral`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tail {
    pub coeff: f64,
    pub start: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorImage {
    #[serde(rename = "fn")]
    pub function: GeneralizedPiecewiseFunction,
    /// The image vanishes outside the input's support hull.
    pub compact_support: bool,
    pub tail: Option<Tail>,
}

fn term_mass_scale(terms: &[Term], lo: f64, hi: f64) -> f64 {
    terms
        .iter()
        .map(|t| crate::funcrep::integrate_terms(std::slice::from_ref(t), lo, hi).map_or(0.0, f64::abs))
        .sum()
}

/// `Hf` with the default tail horizon.
pub fn hardy(f: &GeneralizedPiecewiseFunction) -> Result<OperatorImage> {
    hardy_with_horizon(f, DEFAULT_HORIZON_FACTOR)
}

pub fn hardy_with_horizon(f: &GeneralizedPiecewiseFunction, horizon_factor: f64) -> Result<OperatorImage> {
    let mut out: Vec<Piece> = Vec::with_capacity(f.pieces().len() + 1);
    let mut acc = 0.0;
    let mut scale = 0.0;
    let mut prev_hi: Option<f64> = None;
    for piece in f.pieces().iter().filter(|p| !p.terms.is_empty()) {
        if let Some(h) = prev_hi {
            if h < piece.lo && acc != 0.0 {
                out.push(Piece { lo: h, hi: piece.lo, terms: vec![Term::monomial(acc, -1.0)] });
            }
        }
        let anti = antiderivative(&piece.terms)?;
        let at_lo = eval_terms_closed(&anti, piece.lo)?;
        let mut terms: Vec<Term> = anti.iter().map(|t| Term { power: t.power - 1.0, ..*t }).collect();
        terms.push(Term::monomial(acc - at_lo, -1.0));
        out.push(Piece { lo: piece.lo, hi: piece.hi, terms: normalize_terms(terms) });
        acc += eval_terms(&anti, piece.hi) - at_lo;
        scale += term_mass_scale(&piece.terms, piece.lo, piece.hi);
        prev_hi = Some(piece.hi);
    }
    let mut tail = None;
    let compact_support = acc.abs() <= MASS_REL_TOL * scale;
    if let (Some(hi), false) = (prev_hi, compact_support) {
        let horizon = hi * horizon_factor;
        out.push(Piece { lo: hi, hi: horizon, terms: vec![Term::monomial(acc, -1.0)] });
        tail = Some(Tail { coeff: acc, start: hi, horizon });
    }
    Ok(OperatorImage {
        function: GeneralizedPiecewiseFunction::from_sorted_pieces(out),
        compact_support,
        tail,
    })
}

/// `H*f`; constant `∫f` to the left of the support unless the mean vanishes.
pub fn dual_hardy(f: &GeneralizedPiecewiseFunction) -> Result<OperatorImage> {
    let mut out: Vec<Piece> = Vec::with_capacity(f.pieces().len() + 1);
    let mut right_mass = 0.0;
    let mut scale = 0.0;
    let mut next_lo: Option<f64> = None;
    for piece in f.pieces().iter().rev().filter(|p| !p.terms.is_empty()) {
        if let Some(l) = next_lo {
            if piece.hi < l && right_mass != 0.0 {
                out.push(Piece { lo: piece.hi, hi: l, terms: vec![Term::monomial(right_mass, 0.0)] });
            }
        }
        let anti = antiderivative(&piece.terms)?;
        let at_hi = eval_terms(&anti, piece.hi);
        let at_lo = eval_terms_closed(&anti, piece.lo)?;
        let mut terms: Vec<Term> = anti.iter().map(|t| Term { coeff: -t.coeff, ..*t }).collect();
        terms.push(Term::monomial(right_mass + at_hi, 0.0));
        out.push(Piece { lo: piece.lo, hi: piece.hi, terms: normalize_terms(terms) });
        right_mass += at_hi - at_lo;
        scale += term_mass_scale(&piece.terms, piece.lo, piece.hi);
        next_lo = Some(piece.lo);
    }
    let compact_support = right_mass.abs() <= MASS_REL_TOL * scale;
    if let (Some(lo), false) = (next_lo, compact_support) {
        if lo > 0.0 {
            out.push(Piece { lo: 0.0, hi: lo, terms: vec![Term::monomial(right_mass, 0.0)] });
        }
    }
    out.reverse();
    Ok(OperatorImage {
        function: GeneralizedPiecewiseFunction::from_sorted_pieces(out),
        compact_support,
        tail: None,
    })
}

/// A scaled operator image proposed as an atom of `target_spec`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageCandidate {
    pub scale: f64,
    #[serde(rename = "fn")]
    pub function: GeneralizedPiecewiseFunction,
    pub target_spec: AtomSpec,
}

/// `(1/q')·Ha` for an L-`(p,q,s)`-atom, proposed as a `(p,q,s)`-atom.
pub fn hardy_image_atom_candidate(a: &Atom) -> Result<ImageCandidate> {
    let spec = a.spec;
    if !spec.log_moment {
        return Err(Error::Precondition("the Hardy image needs an L-atom (log_moment = true)".to_string()));
    }
    if spec.q == Exponent::Finite(1.0) {
        return Err(Error::Precondition("the Hardy image candidate needs q > 1".to_string()));
    }
    if spec.weight != WeightSpec::Unit {
        return Err(Error::Precondition("the Hardy image candidate needs an unweighted atom".to_string()));
    }
    let scale = constants::hardy_image_scale(spec.q)?;
    let image = hardy(&a.function)?;
    Ok(ImageCandidate {
        scale,
        function: image.function.scaled(scale),
        target_spec: AtomSpec { log_moment: false, ..spec },
    })
}

/// The scaled `H*a` for a `(p,q,s)_{x^p}`-atom, proposed as an unweighted
/// `(p,q,s−1)`-atom.
pub fn dual_image_atom_candidate(a: &Atom) -> Result<ImageCandidate> {
    let spec = a.spec;
    if spec.s == 0 {
        return Err(Error::Precondition("the dual image candidate needs s >= 1".to_string()));
    }
    if spec.weight != WeightSpec::power(spec.p) {
        return Err(Error::Precondition(format!(
            "the dual image candidate needs the weight x^p = x^{}",
            spec.p
        )));
    }
    let scale = constants::dual_image_scale(spec.p, spec.q)?;
    let image = dual_hardy(&a.function)?;
    Ok(ImageCandidate {
        scale,
        function: image.function.scaled(scale),
        target_spec: AtomSpec { s: spec.s - 1, weight: WeightSpec::Unit, log_moment: false, ..spec },
    })
}
