//! Synthesis and validation of `(p,q,s)_w`-atoms and `L-(p,q,s)_w`-atoms on
//! the positive half-line, and finite atomic sums.
//!
//! An atom is supported in `(x0, x1)`, has weighted `L^q` norm at most
//! `(∫_{x0}^{x1} w)^{1/q − 1/p}`, and satisfies `∫ a(x) x^β dx = 0` for
//! `β = 0..=s`; an L-atom also satisfies `∫ a(x) ln x dx = 0`.
//!
//! Atoms are built from the null space of the moment matrix of a finite
//! family (polynomials of fixed degree, or step functions on `n` equal
//! cells), expressed in the variable `u ∈ [−1, 1]` with
//! `x = c + h·u`, and rescaled so the size condition holds with equality.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcrep::{linear_combine, normalize_terms, GeneralizedPiecewiseFunction, Interval, Piece, Term};
use crate::norms::{lp_integral, lq_norm_estimate, Exponent};
use crate::quad;

/// Relative residual below which a constraint row counts as dependent.
const RANK_TOL: f64 = 1e-8;
/// Quadrature tolerance used when saturating the size condition.
const SATURATION_REL_TOL: f64 = 1e-11;
/// Only sets a tolerance scale, so a modest accuracy suffices.
const MOMENT_SCALE_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightSpec {
    Unit,
    /// `w(x) = x^alpha`, `alpha > −1`.
    Power { alpha: f64 },
}

impl WeightSpec {
    pub fn power(alpha: f64) -> Self {
        WeightSpec::Power { alpha }
    }

    pub fn alpha(self) -> f64 {
        match self {
            WeightSpec::Unit => 0.0,
            WeightSpec::Power { alpha } => alpha,
        }
    }

    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            WeightSpec::Unit => 1.0,
            WeightSpec::Power { alpha } => x.powf(alpha),
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            WeightSpec::Power { alpha } if !(alpha > -1.0 && alpha.is_finite()) => {
                Err(Error::InvalidSpec(format!("power weight needs alpha > -1, got {alpha}")))
            }
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for WeightSpec {
    type Err = String;

    /// `unit`, `power:<alpha>`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("unit") {
            return Ok(WeightSpec::Unit);
        }
        s.strip_prefix("power:")
            .ok_or_else(|| format!("weight must be `unit` or `power:<alpha>`, got {s:?}"))?
            .parse::<f64>()
            .map(WeightSpec::power)
            .map_err(|e| format!("bad weight exponent in {s:?}: {e}"))
    }
}

/// `∫_{x0}^{x1} w`.
pub fn weight_mass(weight: WeightSpec, interval: Interval) -> f64 {
    match weight {
        WeightSpec::Unit => interval.width(),
        WeightSpec::Power { alpha } => {
            let a1 = alpha + 1.0;
            (interval.hi.powf(a1) - interval.lo.powf(a1)) / a1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub p: f64,
    pub q: Exponent,
    pub s: u32,
    pub weight: WeightSpec,
    pub interval: Interval,
    /// Require `∫ a ln x dx = 0` (an L-atom).
    #[serde(default)]
    pub log_moment: bool,
    /// Admit `x0 = 0`.
    #[serde(default)]
    pub allow_zero_left: bool,
}

impl AtomSpec {
    pub fn new(p: f64, q: Exponent, s: u32, interval: Interval) -> Self {
        AtomSpec {
            p,
            q,
            s,
            weight: WeightSpec::Unit,
            interval,
            log_moment: false,
            allow_zero_left: interval.lo == 0.0,
        }
    }

    pub fn with_weight(self, weight: WeightSpec) -> Self {
        AtomSpec { weight, ..self }
    }

    pub fn with_log_moment(self, log_moment: bool) -> Self {
        AtomSpec { log_moment, ..self }
    }

    pub fn with_interval(self, interval: Interval) -> Self {
        AtomSpec { interval, allow_zero_left: self.allow_zero_left || interval.lo == 0.0, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidSpec(format!("p = {} outside (0, 1]", self.p)));
        }
        if let Exponent::Finite(q) = self.q {
            if !(q >= 1.0 && q.is_finite()) {
                return Err(Error::InvalidSpec(format!("q = {q} outside [1, inf]")));
            }
            if !(self.p < q) {
                return Err(Error::InvalidSpec(format!("need p < q, got p = {}, q = {q}", self.p)));
            }
        }
        self.weight.validate()?;
        Interval::new(self.interval.lo, self.interval.hi)?;
        if !self.allow_zero_left && self.interval.lo <= 0.0 {
            return Err(Error::InvalidSpec(
                "x0 = 0 requires allow_zero_left".to_string(),
            ));
        }
        Ok(())
    }

    /// `(∫_I w)^{1/q − 1/p}`.
    pub fn norm_budget(&self) -> f64 {
        weight_mass(self.weight, self.interval).powf(self.q.recip() - 1.0 / self.p)
    }

    /// Number of vanishing-moment constraints.
    pub fn constraint_count(&self) -> usize {
        self.s as usize + 1 + usize::from(self.log_moment)
    }

    /// True when the two specs describe the same atom class up to the
    /// interval.
    pub fn same_class(&self, other: &AtomSpec) -> bool {
        self.p == other.p
            && self.q == other.q
            && self.s == other.s
            && self.weight == other.weight
            && self.log_moment == other.log_moment
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub spec: AtomSpec,
    #[serde(rename = "fn")]
    pub function: GeneralizedPiecewiseFunction,
    pub norm_budget: f64,
}

impl Atom {
    /// `x ↦ λ^{(1+α)/p} a(λx)` on `I/λ`; stays in the same class with the
    /// same saturation.
    pub fn dilated(&self, lambda: f64) -> Atom {
        let gamma = (1.0 + self.spec.weight.alpha()) / self.spec.p;
        let interval = Interval { lo: self.spec.interval.lo / lambda, hi: self.spec.interval.hi / lambda };
        let spec = AtomSpec { interval, ..self.spec };
        Atom {
            function: self.function.dilate(lambda).scaled(lambda.powf(gamma)),
            norm_budget: spec.norm_budget(),
            spec,
        }
    }

    pub fn validate(&self, tol: f64) -> AtomValidationReport {
        validate_atom(&self.function, &self.spec, tol)
    }
}

/// `∫ f(x) x^beta dx`.
pub fn moment(f: &GeneralizedPiecewiseFunction, beta: u32) -> Result<f64> {
    f.mul_power(beta as f64).integral()
}

/// `∫ |f(x)| x^beta dx`. Moments are held against this rather than a
/// size-budget scale, which keeps the test dilation-invariant for every
/// `beta` and `q`.
pub fn absolute_moment(f: &GeneralizedPiecewiseFunction, beta: u32) -> Result<f64> {
    Ok(lp_integral(f, 1.0, WeightSpec::power(beta as f64), MOMENT_SCALE_REL_TOL)?.value)
}

/// `∫ |f(x) ln x| dx`.
pub fn absolute_log_moment(f: &GeneralizedPiecewiseFunction) -> Result<f64> {
    Ok(lp_integral(&f.mul_log()?, 1.0, WeightSpec::Unit, MOMENT_SCALE_REL_TOL)?.value)
}

/// `∫ f(x) ln x dx`.
pub fn log_moment(f: &GeneralizedPiecewiseFunction) -> Result<f64> {
    f.mul_log()?.integral()
}

/// Finite families in which atoms are constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum AtomFamily {
    /// One polynomial piece of degree at most `degree`.
    Polynomial { degree: usize },
    /// `n` constant steps on equal cells.
    Steps { n: usize },
}

/// Orthonormal basis (in the family's coefficient space) of the functions
/// satisfying all moment constraints of a spec.
#[derive(Debug, Clone, PartialEq)]
pub struct NullBasis {
    pub family: AtomFamily,
    pub vectors: Vec<Vec<f64>>,
}

impl NullBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// `Σ z_i v_i`.
    pub fn combine(&self, z: &[f64]) -> Vec<f64> {
        let n = self.vectors.first().map_or(0, Vec::len);
        let mut c = vec![0.0; n];
        for (zi, v) in z.iter().zip(&self.vectors) {
            for (cj, vj) in c.iter_mut().zip(v) {
                *cj += zi * vj;
            }
        }
        c
    }
}

/// `∫ u^k ln(1 + ρu) du` over `[u0, u1] ⊆ [−1, 1]`, with `ρ = h/c ∈ (0, 1]`.
fn log_row_entry(k: i32, rho: f64, u0: f64, u1: f64) -> f64 {
    let g = |u: f64| u.powi(k) * (rho * u).ln_1p();
    quad::integrate(g, u0, u1, 1e-15, 1e-300).value
}

impl AtomFamily {
    pub fn unknowns(&self) -> usize {
        match *self {
            AtomFamily::Polynomial { degree } => degree + 1,
            AtomFamily::Steps { n } => n,
        }
    }

    fn step_breaks(n: usize) -> Vec<f64> {
        (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect()
    }

    /// Moment rows in the `u` variable. The polynomial rows `∫ a u^β du`
    /// span the same constraints as `∫ a x^β dx`; the log row drops the
    /// `ln c` multiple of the `β = 0` row.
    fn constraint_rows(&self, spec: &AtomSpec) -> Vec<Vec<f64>> {
        let n = self.unknowns();
        let mut rows = Vec::with_capacity(spec.constraint_count());
        for beta in 0..=spec.s as i32 {
            let row = match *self {
                AtomFamily::Polynomial { .. } => (0..n as i32)
                    .map(|j| if (j + beta) % 2 == 0 { 2.0 / (j + beta + 1) as f64 } else { 0.0 })
                    .collect(),
                AtomFamily::Steps { n } => {
                    let b = Self::step_breaks(n);
                    let e = (beta + 1) as f64;
                    b.windows(2).map(|w| (w[1].powi(beta + 1) - w[0].powi(beta + 1)) / e).collect()
                }
            };
            rows.push(row);
        }
        if spec.log_moment {
            let iv = spec.interval;
            let rho = iv.width() / (iv.lo + iv.hi);
            let row = match *self {
                AtomFamily::Polynomial { .. } => {
                    (0..n as i32).map(|j| log_row_entry(j, rho, -1.0, 1.0)).collect()
                }
                AtomFamily::Steps { n } => Self::step_breaks(n)
                    .windows(2)
                    .map(|w| log_row_entry(0, rho, w[0], w[1]))
                    .collect(),
            };
            rows.push(row);
        }
        rows
    }

    /// Orthonormal null-space basis of the moment matrix, by modified
    /// Gram-Schmidt (two passes) on the rows and then on the unit vectors.
    pub fn null_basis(&self, spec: &AtomSpec) -> Result<NullBasis> {
        spec.validate()?;
        let n = self.unknowns();
        let m = spec.constraint_count();
        if n <= m || n == 0 {
            return Err(Error::Infeasible { constraints: m, unknowns: n });
        }
        let rows = self.constraint_rows(spec);
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
        for (i, r) in rows.iter().enumerate() {
            let norm0 = dot(r, r).sqrt();
            let v = orthogonalize(r.clone(), &q);
            let norm = dot(&v, &v).sqrt();
            let residual = if norm0 > 0.0 { norm / norm0 } else { 0.0 };
            if residual < RANK_TOL {
                return Err(Error::NumericalRank { row: i, residual });
            }
            q.push(v.into_iter().map(|x| x / norm).collect());
        }
        let mut null = Vec::with_capacity(n - m);
        for k in 0..n {
            if q.len() == n {
                break;
            }
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let v = orthogonalize(e, &q);
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-6 {
                let v: Vec<f64> = v.into_iter().map(|x| x / norm).collect();
                q.push(v.clone());
                null.push(v);
            }
        }
        debug_assert_eq!(null.len(), n - m);
        Ok(NullBasis { family: *self, vectors: null })
    }

    /// The function with family coefficients `coeffs`, before saturation.
    fn function(&self, spec: &AtomSpec, coeffs: &[f64]) -> Result<GeneralizedPiecewiseFunction> {
        let iv = spec.interval;
        let c = iv.midpoint();
        let h = 0.5 * iv.width();
        match *self {
            AtomFamily::Polynomial { .. } => {
                // Σ_j c_j ((x − c)/h)^j expanded in powers of x
                let deg = coeffs.len();
                let mut mono = vec![0.0; deg];
                for (j, &cj) in coeffs.iter().enumerate() {
                    let scale = cj / h.powi(j as i32);
                    let mut binom = 1.0;
                    for i in (0..=j).rev() {
                        // C(j, i)·(−c)^{j−i}
                        mono[i] += scale * binom * (-c).powi((j - i) as i32);
                        binom = binom * i as f64 / (j - i + 1) as f64;
                    }
                }
                let terms = mono.iter().enumerate().map(|(k, &v)| Term::monomial(v, k as f64)).collect();
                GeneralizedPiecewiseFunction::single(iv, normalize_terms(terms))
            }
            AtomFamily::Steps { n } => {
                let pieces = (0..n)
                    .map(|i| {
                        let lo = if i == 0 { iv.lo } else { iv.lo + iv.width() * i as f64 / n as f64 };
                        let hi = if i + 1 == n { iv.hi } else { iv.lo + iv.width() * (i + 1) as f64 / n as f64 };
                        Piece { lo, hi, terms: normalize_terms(vec![Term::monomial(coeffs[i], 0.0)]) }
                    })
                    .collect();
                GeneralizedPiecewiseFunction::new(pieces)
            }
        }
    }

    /// The saturated atom `Σ z_i v_i`, rescaled so its weighted `L^q` norm
    /// equals the budget.
    pub fn realize(&self, spec: &AtomSpec, basis: &NullBasis, z: &[f64]) -> Result<Atom> {
        if basis.family != *self || z.len() != basis.dim() {
            return Err(Error::Precondition(format!(
                "coefficient vector of length {} does not match a {}-dimensional null basis",
                z.len(),
                basis.dim()
            )));
        }
        let coeffs = basis.combine(z);
        let raw = self.function(spec, &coeffs)?;
        let norm = lq_norm_estimate(&raw, spec.q, spec.weight, SATURATION_REL_TOL)?.value;
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Precondition("null-space combination has zero norm".to_string()));
        }
        let budget = spec.norm_budget();
        Ok(Atom { spec: *spec, function: raw.scaled(budget / norm), norm_budget: budget })
    }

    /// A saturated atom from a seeded random unit direction of the null space.
    pub fn build(&self, spec: &AtomSpec, seed: u64) -> Result<Atom> {
        let basis = self.null_basis(spec)?;
        let z = random_unit_vector(basis.dim(), seed);
        self.realize(spec, &basis, &z)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthogonalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Vec<f64> {
    for _ in 0..2 {
        for q in basis {
            let c = dot(&v, q);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
        }
    }
    v
}

/// Gaussian direction from a seeded ChaCha stream, normalized.
pub fn random_unit_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut z: Vec<f64> = (0..dim)
            .map(|_| {
                let u1: f64 = rng.random();
                let u2: f64 = rng.random();
                (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let n = dot(&z, &z).sqrt();
        if n > 1e-12 {
            z.iter_mut().for_each(|x| *x /= n);
            return z;
        }
    }
}

/// A saturated single-piece polynomial atom of degree at most `degree`.
pub fn build_atom(spec: &AtomSpec, degree: usize, seed: u64) -> Result<Atom> {
    AtomFamily::Polynomial { degree }.build(spec, seed)
}

/// The `±budget` two-step atom (`+` on the left half), for `s = 0` specs
/// without the log moment.
pub fn square_wave_atom(spec: &AtomSpec) -> Result<Atom> {
    if spec.s != 0 || spec.log_moment {
        return Err(Error::Precondition("the square wave only has a vanishing mean".to_string()));
    }
    spec.validate()?;
    if spec.weight != WeightSpec::Unit {
        return Err(Error::Precondition("the square wave is only defined for the unit weight".to_string()));
    }
    let b = spec.norm_budget();
    let Interval { lo, hi } = spec.interval;
    let mid = spec.interval.midpoint();
    let function = GeneralizedPiecewiseFunction::new(vec![
        Piece { lo, hi: mid, terms: vec![Term::monomial(b, 0.0)] },
        Piece { lo: mid, hi, terms: vec![Term::monomial(-b, 0.0)] },
    ])?;
    Ok(Atom { spec: *spec, function, norm_budget: b })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomValidationReport {
    pub support_ok: bool,
    pub norm_ok: bool,
    pub moments_ok: bool,
    pub log_moment_ok: bool,
    /// Strict size condition `norm < budget − error`, when requested.
    pub size_strict: Option<bool>,
    pub support: Option<Interval>,
    pub norm: f64,
    pub norm_error: f64,
    pub budget: f64,
    pub moments: Vec<f64>,
    /// `∫|f| x^β`, the scale each moment must cancel against.
    pub moment_scales: Vec<f64>,
    pub log_moment: Option<f64>,
    pub log_moment_scale: Option<f64>,
    pub tol: f64,
    /// The function is identically zero.
    pub trivial: bool,
}

impl AtomValidationReport {
    pub fn passed(&self) -> bool {
        self.support_ok
            && self.norm_ok
            && self.moments_ok
            && self.log_moment_ok
            && self.size_strict.unwrap_or(true)
    }

    pub fn max_moment_ratio(&self) -> f64 {
        self.moments
            .iter()
            .zip(&self.moment_scales)
            .fold(0.0f64, |m, (v, s)| if *s > 0.0 { m.max(v.abs() / s) } else { m })
    }
}

/// Checks the four atom conditions for `f` against `spec`. Failures are
/// reported, never raised.
pub fn validate_atom(f: &GeneralizedPiecewiseFunction, spec: &AtomSpec, tol: f64) -> AtomValidationReport {
    let iv = spec.interval;
    let support = f.support();
    let slack = 1e-12 * iv.hi;
    let support_ok = support.is_none_or(|s| s.lo >= iv.lo - slack && s.hi <= iv.hi + slack);

    let budget = spec.norm_budget();
    let (norm, norm_error) = match lq_norm_estimate(f, spec.q, spec.weight, SATURATION_REL_TOL) {
        Ok(r) => (r.value, r.abs_error_estimate),
        Err(_) => (f64::INFINITY, f64::INFINITY),
    };
    let norm_ok = norm <= budget * (1.0 + tol);

    let moments: Vec<f64> = (0..=spec.s).map(|b| moment(f, b).unwrap_or(f64::NAN)).collect();
    let moment_scales: Vec<f64> = (0..=spec.s).map(|b| absolute_moment(f, b).unwrap_or(f64::NAN)).collect();
    let moments_ok = moments.iter().zip(&moment_scales).all(|(m, s)| m.abs() <= tol * s);
    let log_moment = spec.log_moment.then(|| log_moment(f).unwrap_or(f64::NAN));
    let log_moment_scale = spec.log_moment.then(|| absolute_log_moment(f).unwrap_or(f64::NAN));
    let log_moment_ok = log_moment.zip(log_moment_scale).is_none_or(|(m, s)| m.abs() <= tol * s);

    AtomValidationReport {
        support_ok,
        norm_ok,
        moments_ok,
        log_moment_ok,
        size_strict: None,
        support,
        norm,
        norm_error,
        budget,
        moments,
        moment_scales,
        log_moment,
        log_moment_scale,
        tol,
        trivial: f.is_zero(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumEntry {
    pub lambda: f64,
    pub atom: Atom,
}

/// `Σ λ_k a_k` over finitely many atoms of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicSum {
    pub p: f64,
    pub entries: Vec<SumEntry>,
}

impl AtomicSum {
    pub fn new(entries: Vec<(f64, Atom)>) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::Precondition("an atomic sum needs at least one atom".to_string()))?;
        let spec = first.1.spec;
        for (lambda, atom) in &entries {
            if !lambda.is_finite() {
                return Err(Error::Precondition(format!("coefficient {lambda} is not finite")));
            }
            if !atom.spec.same_class(&spec) {
                return Err(Error::SpecMismatch(
                    "all atoms of a sum must share p, q, s, weight and log_moment".to_string(),
                ));
            }
        }
        Ok(AtomicSum {
            p: spec.p,
            entries: entries.into_iter().map(|(lambda, atom)| SumEntry { lambda, atom }).collect(),
        })
    }

    pub fn spec(&self) -> &AtomSpec {
        &self.entries[0].atom.spec
    }

    pub fn function(&self) -> GeneralizedPiecewiseFunction {
        let fs: Vec<(f64, &GeneralizedPiecewiseFunction)> =
            self.entries.iter().map(|e| (e.lambda, &e.atom.function)).collect();
        linear_combine(&fs)
    }

    /// True when every atom has `x0 > 0`.
    pub fn strictly_positive_support(&self) -> bool {
        self.entries.iter().all(|e| e.atom.spec.interval.lo > 0.0)
    }
}

/// `count` saturated atoms of `spec`'s class on seeded random subintervals
/// of `spec.interval` (each at least a tenth of it), with standard normal
/// coefficients.
pub fn random_sum(spec: &AtomSpec, family: AtomFamily, count: usize, seed: u64) -> Result<AtomicSum> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Interval { lo, hi } = spec.interval;
    let width = hi - lo;
    let mut entries = Vec::with_capacity(count);
    for k in 0..count {
        let w = width * rng.random_range(0.1..=1.0);
        let start = lo + (width - w) * rng.random::<f64>();
        let sub = Interval::new(start, (start + w).min(hi))?;
        let sub_spec = AtomSpec { interval: sub, allow_zero_left: spec.allow_zero_left && sub.lo == 0.0, ..*spec };
        let atom = family.build(&sub_spec, seed.wrapping_add(k as u64))?;
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let lambda = (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        entries.push((lambda, atom));
    }
    AtomicSum::new(entries)
}

/// `(Σ |λ_k|^p)^{1/p}`, an upper bound for the atomic quasinorm.
pub fn sum_quasinorm_upper(sum: &AtomicSum) -> f64 {
    let p = sum.p;
    sum.entries.iter().map(|e| e.lambda.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn steps(values: &[(f64, f64, f64)]) -> GeneralizedPiecewiseFunction {
        GeneralizedPiecewiseFunction::new(
            values
                .iter()
                .map(|&(lo, hi, c)| Piece { lo, hi, terms: vec![Term::monomial(c, 0.0)] })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn weight_mass_examples() {
        assert_eq!(weight_mass(WeightSpec::Unit, iv(1.0, 2.0)), 1.0);
        assert_eq!(weight_mass(WeightSpec::power(1.0), iv(0.0, 1.0)), 0.5);
        let m = weight_mass(WeightSpec::power(0.5), iv(1.0, 4.0));
        let oracle = quad::integrate(|x: f64| x.sqrt(), 1.0, 4.0, 1e-14, 0.0).value;
        assert!((m - 14.0 / 3.0).abs() < 1e-14);
        assert!((m - oracle).abs() < 1e-12);
    }

    #[test]
    fn moment_examples() {
        assert_eq!(moment(&steps(&[(0.0, 1.0, 1.0)]), 0).unwrap(), 1.0);
        let sq = steps(&[(1.0, 1.5, 1.0), (1.5, 2.0, -1.0)]);
        assert_eq!(moment(&sq, 0).unwrap(), 0.0);
        let q = GeneralizedPiecewiseFunction::single(
            iv(0.0, 1.0),
            vec![Term::monomial(1.0, 0.0), Term::monomial(-6.0, 1.0), Term::monomial(6.0, 2.0)],
        )
        .unwrap();
        assert!(moment(&q, 1).unwrap().abs() < 1e-15);
    }

    #[test]
    fn log_moment_examples() {
        assert!((log_moment(&steps(&[(1.0, E, 1.0)])).unwrap() - 1.0).abs() < 1e-15);
        let sq = steps(&[(1.0 / E, 1.0, 1.0), (1.0, E, -1.0)]);
        // oracle: ∫_{1/e}^1 ln x − ∫_1^e ln x = 2/e − 2, and by quadrature
        let oracle = quad::integrate(|x: f64| x.ln(), 1.0 / E, 1.0, 1e-14, 0.0).value
            - quad::integrate(|x: f64| x.ln(), 1.0, E, 1e-14, 0.0).value;
        let v = log_moment(&sq).unwrap();
        assert!((v - (2.0 / E - 2.0)).abs() < 1e-14);
        assert!((v - oracle).abs() < 1e-12);
        assert_eq!(log_moment(&GeneralizedPiecewiseFunction::zero()).unwrap(), 0.0);
    }

    #[test]
    fn build_linear_atom_q_inf() {
        let spec = AtomSpec::new(1.0, Exponent::Infinite, 0, iv(1.0, 2.0));
        for seed in 0..5 {
            let a = build_atom(&spec, 1, seed).unwrap();
            let r = a.validate(1e-9);
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn build_quadratic_atom_matches_hand_solution() {
        let spec = AtomSpec::new(0.5, Exponent::Finite(2.0), 1, iv(0.0, 1.0));
        assert_eq!(spec.norm_budget(), 1.0);
        let a = build_atom(&spec, 2, 3).unwrap();
        // ±√5 (6x² − 6x + 1)
        let want = |x: f64| 5f64.sqrt() * (6.0 * x * x - 6.0 * x + 1.0);
        let sign = a.function.value_at(0.01).signum() * want(0.01).signum();
        for x in [0.05, 0.3, 0.5, 0.77, 0.99] {
            assert!((a.function.value_at(x) - sign * want(x)).abs() < 1e-12, "x = {x}");
        }
        let r = a.validate(1e-9);
        assert!(r.passed(), "{r:?}");
        assert!((r.norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn log_moment_needs_extra_degree() {
        let spec = AtomSpec::new(1.0, Exponent::Infinite, 0, iv(1.0, 2.0)).with_log_moment(true);
        assert!(matches!(build_atom(&spec, 1, 0), Err(Error::Infeasible { constraints: 2, unknowns: 2 })));
        let a = build_atom(&spec, 2, 0).unwrap();
        let r = a.validate(1e-9);
        assert!(r.passed(), "{r:?}");
        assert!(r.log_moment.unwrap().abs() < 1e-12);
    }

    #[test]
    fn nearly_degenerate_interval_is_rank_deficient() {
        let spec = AtomSpec::new(1.0, Exponent::Infinite, 2, iv(1000.0, 1000.001)).with_log_moment(true);
        assert!(matches!(build_atom(&spec, 5, 0), Err(Error::NumericalRank { row: 3, .. })));
    }

    #[test]
    fn validate_square_wave() {
        let sq = steps(&[(1.0, 1.5, 1.0), (1.5, 2.0, -1.0)]);
        let spec = AtomSpec::new(1.0, Exponent::Infinite, 0, iv(1.0, 2.0));
        let r = validate_atom(&sq, &spec, 1e-9);
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.norm, 1.0);
        assert_eq!(r.budget, 1.0);

        let spec1 = AtomSpec { s: 1, ..spec };
        let r = validate_atom(&sq, &spec1, 1e-9);
        assert!(!r.moments_ok);
        assert!(r.support_ok && r.norm_ok);
        assert!((r.moments[1] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn validate_zero_function_is_trivial() {
        let spec = AtomSpec::new(0.5, Exponent::Finite(2.0), 1, iv(1.0, 2.0));
        let r = validate_atom(&GeneralizedPiecewiseFunction::zero(), &spec, 1e-9);
        assert!(r.passed());
        assert!(r.trivial);
    }

    #[test]
    fn validate_flags_support_and_size() {
        let spec = AtomSpec::new(1.0, Exponent::Infinite, 0, iv(1.0, 2.0));
        let wide = steps(&[(0.5, 1.25, 1.0), (1.25, 2.0, -1.0)]);
        assert!(!validate_atom(&wide, &spec, 1e-9).support_ok);
        let big = steps(&[(1.0, 1.5, 2.0), (1.5, 2.0, -2.0)]);
        let r = validate_atom(&big, &spec, 1e-9);
        assert!(!r.norm_ok && r.moments_ok);
    }

    #[test]
    fn square_wave_helper() {
        let spec = AtomSpec::new(1.0, Exponent::Infinite, 0, iv(0.0, 1.0));
        let a = square_wave_atom(&spec).unwrap();
        assert_eq!(a.function.value_at(0.25), 1.0);
        assert_eq!(a.function.value_at(0.75), -1.0);
        let spec = AtomSpec::new(1.0, Exponent::Infinite, 0, iv(2.0, 6.0));
        let a = square_wave_atom(&spec).unwrap();
        assert!((a.function.value_at(3.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn step_family_with_moments() {
        let spec = AtomSpec::new(0.8, Exponent::Finite(4.0), 1, iv(0.3, 1.7))
            .with_weight(WeightSpec::power(0.8))
            .with_log_moment(true);
        let a = AtomFamily::Steps { n: 6 }.build(&spec, 11).unwrap();
        let r = a.validate(1e-9);
        assert!(r.passed(), "{r:?}");
        assert!((r.norm / r.budget - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spec_validation() {
        let ok = AtomSpec::new(0.5, Exponent::Finite(2.0), 0, iv(1.0, 2.0));
        assert!(ok.validate().is_ok());
        assert!(AtomSpec { p: 1.5, ..ok }.validate().is_err());
        assert!(AtomSpec { p: 1.0, q: Exponent::Finite(1.0), ..ok }.validate().is_err());
        assert!(AtomSpec { weight: WeightSpec::power(-1.0), ..ok }.validate().is_err());
        let zero_left = AtomSpec { interval: iv(0.0, 1.0), allow_zero_left: false, ..ok };
        assert!(zero_left.validate().is_err());
        assert!(AtomSpec { allow_zero_left: true, ..zero_left }.validate().is_ok());
    }

    #[test]
    fn quasinorm_examples() {
        let spec = AtomSpec::new(0.5, Exponent::Finite(2.0), 0, iv(1.0, 2.0));
        let a = build_atom(&spec, 1, 0).unwrap();
        let one = AtomicSum::new(vec![(1.0, a.clone())]).unwrap();
        assert_eq!(sum_quasinorm_upper(&one), 1.0);
        let two = AtomicSum::new(vec![(1.0, a.clone()), (1.0, a.clone())]).unwrap();
        assert_eq!(sum_quasinorm_upper(&two), 4.0);
        let spec1 = AtomSpec { p: 1.0, ..spec };
        let b = build_atom(&spec1, 1, 0).unwrap();
        let s = AtomicSum::new(vec![(3.0, b.clone()), (-4.0, b)]).unwrap();
        assert!((sum_quasinorm_upper(&s) - 7.0).abs() < 1e-15);
        assert!(AtomicSum::new(vec![]).is_err());
        let mixed = AtomicSum::new(vec![(1.0, a), (1.0, build_atom(&spec1, 1, 0).unwrap())]);
        assert!(matches!(mixed, Err(Error::SpecMismatch(_))));
    }

    #[test]
    fn atom_json_round_trip() {
        let spec = AtomSpec::new(0.5, Exponent::Infinite, 1, iv(1.0, 2.0)).with_weight(WeightSpec::power(0.5));
        let a = build_atom(&spec, 3, 9).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"fn\":{\"pieces\""));
        assert!(s.contains("\"q\":\"inf\""));
        assert!(s.contains("\"kind\":\"power\""));
        let back: Atom = serde_json::from_str(&s).unwrap();
        assert_eq!(a, back);
    }
}
