//! Derivative-free search for atoms that come closest to the atom-level
//! bounds.
//!
//! By dilation invariance the interval is `(r, 1)` with `r = e^{−θ}`. The
//! search variables are `θ` and the coordinates `z` of the null-space
//! combination, which is normalized to the unit sphere before each
//! evaluation.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atoms::{Atom, AtomFamily, AtomSpec, WeightSpec};
use crate::constants;
use crate::error::{Error, Result};
use crate::funcrep::Interval;
use crate::norms::{Exponent, DEFAULT_REL_TOL};
use crate::verify::{check_log2, check_prop1, check_prop4, BoundReport, Verdict};

/// Range of `θ = −ln r`.
pub const THETA_MIN: f64 = 0.01;
pub const THETA_MAX: f64 = 25.0;
const THETA_STEP: f64 = 1.0;
const Z_STEP: f64 = 0.5;
/// Steps below this are re-expanded so every iteration keeps polling.
const MIN_STEP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Prop1,
    Prop4,
    Log2,
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prop1" => Ok(Objective::Prop1),
            "prop4" => Ok(Objective::Prop4),
            "log2" => Ok(Objective::Log2),
            _ => Err(Error::InvalidSpec(format!("objective must be prop1, prop4 or log2, got {s}"))),
        }
    }
}

impl Objective {
    /// Checks that the spec's parameters suit the objective.
    pub fn admissible(self, spec: &AtomSpec) -> Result<()> {
        match self {
            Objective::Prop1 => {
                constants::prop1_bound(spec.p, spec.q)?;
                if spec.weight != WeightSpec::Unit {
                    return Err(Error::SpecMismatch("prop1 searches unweighted atoms".to_string()));
                }
            }
            Objective::Prop4 => {
                constants::prop4_bound(spec.p, spec.q)?;
                if spec.weight != WeightSpec::power(spec.p) {
                    return Err(Error::SpecMismatch("prop4 searches atoms with weight x^p".to_string()));
                }
            }
            Objective::Log2 => {
                if spec.p != 1.0 || spec.q != Exponent::Infinite || spec.weight != WeightSpec::Unit {
                    return Err(Error::SpecMismatch("log2 searches unweighted (1,inf,0)-atoms".to_string()));
                }
            }
        }
        Ok(())
    }

    /// The weight an objective expects at exponent `p`.
    pub fn weight_for(self, p: f64) -> WeightSpec {
        match self {
            Objective::Prop4 => WeightSpec::power(p),
            _ => WeightSpec::Unit,
        }
    }

    fn report(self, atom: &Atom) -> Result<BoundReport> {
        match self {
            Objective::Prop1 => check_prop1(atom, DEFAULT_REL_TOL),
            Objective::Prop4 => check_prop4(atom, DEFAULT_REL_TOL),
            Objective::Log2 => check_log2(atom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    /// Exponents, weight and moment order; the interval is searched over.
    pub spec: AtomSpec,
    pub family: AtomFamily,
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub objective: Objective,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidSpec("restarts and max_iters must be at least 1".to_string()));
        }
        self.objective.admissible(&self.spec)?;
        let spec = self.spec_at(1.0);
        spec.validate()?;
        let (m, n) = (spec.constraint_count(), self.family.unknowns());
        if n <= m {
            return Err(Error::Infeasible { constraints: m, unknowns: n });
        }
        Ok(())
    }

    fn spec_at(&self, theta: f64) -> AtomSpec {
        let interval = Interval { lo: (-theta).exp(), hi: 1.0 };
        AtomSpec { interval, allow_zero_left: false, ..self.spec }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalResult {
    pub best_atom: Atom,
    pub best_value: f64,
    pub bound: f64,
    pub tightness: f64,
    /// `x0/x1` of the best atom.
    pub r: f64,
    /// `(iteration, best value so far)` of the winning restart.
    pub trajectory: Vec<(usize, f64)>,
    /// Index of the winning restart.
    pub restart: usize,
    pub candidates: usize,
    /// Candidates whose check returned FAIL.
    pub violations: usize,
    /// Candidates that could not be built or measured.
    pub failed_evaluations: usize,
    pub iters: usize,
}

struct Evaluated {
    value: f64,
    atom: Atom,
    bound: f64,
}

struct Restart {
    best: Option<(Evaluated, f64)>,
    trajectory: Vec<(usize, f64)>,
    candidates: usize,
    violations: usize,
    failed: usize,
}

impl Restart {
    fn evaluate(&mut self, config: &SearchConfig, x: &[f64]) -> Option<Evaluated> {
        self.candidates += 1;
        let theta = x[0];
        let spec = config.spec_at(theta);
        let z = &x[1..];
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            self.failed += 1;
            return None;
        }
        let z: Vec<f64> = z.iter().map(|v| v / norm).collect();
        let outcome = config
            .family
            .null_basis(&spec)
            .and_then(|basis| config.family.realize(&spec, &basis, &z))
            .and_then(|atom| config.objective.report(&atom).map(|r| (atom, r)));
        match outcome {
            Ok((atom, report)) => {
                if report.verdict == Verdict::Fail {
                    self.violations += 1;
                }
                Some(Evaluated { value: report.lhs, atom, bound: report.bound })
            }
            Err(_) => {
                self.failed += 1;
                None
            }
        }
    }
}

fn clamp_theta(x: &mut [f64]) {
    x[0] = x[0].clamp(THETA_MIN, THETA_MAX);
}

/// Compass search from a seeded random start: poll `±step` along each
/// coordinate, move to the best improving point, otherwise halve the steps.
fn run_restart(config: &SearchConfig, dim: usize, index: usize) -> Restart {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let mut x = Vec::with_capacity(dim + 1);
    x.push(rng.random_range(0.5..8.0));
    for _ in 0..dim {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        x.push((-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos());
    }
    let mut state = Restart { best: None, trajectory: Vec::new(), candidates: 0, violations: 0, failed: 0 };
    let mut current = state.evaluate(config, &x).map_or(f64::NEG_INFINITY, |e| {
        let v = e.value;
        state.best = Some((e, x[0]));
        v
    });
    let mut steps: Vec<f64> = std::iter::once(THETA_STEP).chain(std::iter::repeat_n(Z_STEP, dim)).collect();
    for iter in 0..config.max_iters {
        let mut improved: Option<(Vec<f64>, Evaluated)> = None;
        for k in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[k] += sign * steps[k];
                clamp_theta(&mut y);
                if y[k] == x[k] {
                    continue;
                }
                if let Some(e) = state.evaluate(config, &y) {
                    let beats = improved.as_ref().map_or(current, |(_, b)| b.value);
                    if e.value > beats {
                        improved = Some((y, e));
                    }
                }
            }
        }
        match improved {
            Some((y, e)) => {
                x = y;
                current = e.value;
                state.best = Some((e, x[0]));
            }
            None => {
                steps.iter_mut().for_each(|s| *s *= 0.5);
                if steps.iter().all(|&s| s < MIN_STEP) {
                    steps = std::iter::once(THETA_STEP).chain(std::iter::repeat_n(Z_STEP, dim)).collect();
                }
            }
        }
        state.trajectory.push((iter, current));
    }
    state
}

/// Maximizes the objective over `r` and the null-space sphere with
/// `config.restarts` independent compass searches. Restarts run in parallel;
/// the merge takes the largest value, ties going to the lower restart index.
pub fn extremize(config: &SearchConfig) -> Result<ExtremalResult> {
    config.validate()?;
    let dim = config.family.null_basis(&config.spec_at(1.0))?.dim();
    let runs: Vec<Restart> = (0..config.restarts).into_par_iter().map(|k| run_restart(config, dim, k)).collect();
    let candidates = runs.iter().map(|r| r.candidates).sum();
    let violations = runs.iter().map(|r| r.violations).sum();
    let failed_evaluations = runs.iter().map(|r| r.failed).sum();
    let mut winner: Option<(usize, Restart)> = None;
    for (k, run) in runs.into_iter().enumerate() {
        let v = run.best.as_ref().map_or(f64::NEG_INFINITY, |(e, _)| e.value);
        let w = winner
            .as_ref()
            .and_then(|(_, r)| r.best.as_ref())
            .map_or(f64::NEG_INFINITY, |(e, _)| e.value);
        if winner.is_none() || v > w {
            winner = Some((k, run));
        }
    }
    let (restart, run) = winner.expect("at least one restart");
    let (best, theta) = run.best.ok_or_else(|| {
        Error::Infeasible { constraints: config.spec.constraint_count(), unknowns: config.family.unknowns() }
    })?;
    Ok(ExtremalResult {
        tightness: best.value / best.bound,
        best_value: best.value,
        bound: best.bound,
        r: (-theta).exp(),
        best_atom: best.atom,
        trajectory: run.trajectory,
        restart,
        candidates,
        violations,
        failed_evaluations,
        iters: config.max_iters,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub q: Exponent,
    pub s: u32,
    pub r: f64,
    pub tightness: f64,
    pub best_value: f64,
    pub bound: f64,
    pub seed: u64,
    pub iters: usize,
    pub candidates: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub p: f64,
    pub q: Exponent,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<SkippedPoint>,
}

pub const SWEEP_CSV_HEADER: &str = "p,q,s,r,tightness,best_value,bound,seed,iters";

impl SweepResult {
    pub fn candidates(&self) -> usize {
        self.rows.iter().map(|r| r.candidates).sum()
    }

    pub fn violations(&self) -> usize {
        self.rows.iter().map(|r| r.violations).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.p, r.q, r.s, r.r, r.tightness, r.best_value, r.bound, r.seed, r.iters
            ));
        }
        out
    }

    /// Two-column `p tightness` data per `q`, for plotting.
    pub fn plot_columns(&self) -> String {
        let mut out = String::from("# p q tightness bound best_value\n");
        for r in &self.rows {
            out.push_str(&format!("{} {} {} {} {}\n", r.p, r.q, r.tightness, r.bound, r.best_value));
        }
        out
    }
}

/// Runs [`extremize`] at every admissible `(p, q)` of the grid with the
/// template's family, budget and seed. Inadmissible points are skipped.
pub fn tightness_sweep(grid: &[(f64, Exponent)], template: &SearchConfig) -> SweepResult {
    let outcomes: Vec<std::result::Result<SweepRow, SkippedPoint>> = grid
        .par_iter()
        .map(|&(p, q)| {
            let spec = AtomSpec { p, q, weight: template.objective.weight_for(p), ..template.spec };
            let config = SearchConfig { spec, ..*template };
            extremize(&config)
                .map(|res| SweepRow {
                    p,
                    q,
                    s: spec.s,
                    r: res.r,
                    tightness: res.tightness,
                    best_value: res.best_value,
                    bound: res.bound,
                    seed: template.seed,
                    iters: res.iters,
                    candidates: res.candidates,
                    violations: res.violations,
                })
                .map_err(|e| SkippedPoint { p, q, reason: e.to_string() })
        })
        .collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => rows.push(r),
            Err(s) => skipped.push(s),
        }
    }
    SweepResult { rows, skipped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn template(p: f64, q: Exponent, family: AtomFamily, restarts: usize, iters: usize) -> SearchConfig {
        SearchConfig {
            spec: AtomSpec::new(p, q, 0, Interval { lo: 0.5, hi: 1.0 }),
            family,
            restarts,
            max_iters: iters,
            seed: 11,
            objective: Objective::Prop1,
        }
    }

    #[test]
    fn square_wave_family_approaches_ln2() {
        let c = template(1.0, Exponent::Infinite, AtomFamily::Steps { n: 2 }, 2, 40);
        let r = extremize(&c).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.tightness > 0.69 && r.tightness < LN_2 + 1e-9, "{}", r.tightness);
        assert!(r.r < 1e-4);
    }

    #[test]
    fn trajectory_is_monotone() {
        let c = template(0.5, Exponent::Finite(2.0), AtomFamily::Polynomial { degree: 4 }, 1, 30);
        let r = extremize(&c).unwrap();
        assert!(r.trajectory.windows(2).all(|w| w[1].1 >= w[0].1));
        assert!(r.tightness < 1.0);
    }

    #[test]
    fn more_restarts_never_worse() {
        let one = extremize(&template(0.5, Exponent::Finite(2.0), AtomFamily::Steps { n: 4 }, 1, 15)).unwrap();
        let eight = extremize(&template(0.5, Exponent::Finite(2.0), AtomFamily::Steps { n: 4 }, 8, 15)).unwrap();
        assert!(eight.best_value >= one.best_value);
    }

    #[test]
    fn deterministic() {
        let c = template(0.8, Exponent::Finite(4.0), AtomFamily::Steps { n: 4 }, 3, 10);
        let a = extremize(&c).unwrap();
        let b = extremize(&c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn best_atom_value_is_dilation_invariant() {
        let c = template(0.5, Exponent::Finite(4.0), AtomFamily::Steps { n: 4 }, 1, 20);
        let r = extremize(&c).unwrap();
        for lambda in [0.5, 2.0, 10.0] {
            let v = check_prop1(&r.best_atom.dilated(lambda), DEFAULT_REL_TOL).unwrap().lhs;
            assert!((v - r.best_value).abs() <= 1e-8 * r.best_value, "{lambda}: {v} vs {}", r.best_value);
        }
    }

    #[test]
    fn sweep_skips_inadmissible_points() {
        let t = template(1.0, Exponent::Infinite, AtomFamily::Steps { n: 2 }, 1, 5);
        let res = tightness_sweep(&[(1.0, Exponent::Infinite), (1.0, Exponent::Finite(1.0))], &t);
        assert_eq!(res.rows.len(), 1);
        assert_eq!(res.skipped.len(), 1);
        assert!(res.to_csv().starts_with(SWEEP_CSV_HEADER));
    }

    #[test]
    fn config_validation() {
        let mut c = template(1.0, Exponent::Infinite, AtomFamily::Steps { n: 1 }, 1, 5);
        assert!(matches!(extremize(&c), Err(Error::Infeasible { .. })));
        c.family = AtomFamily::Steps { n: 2 };
        c.restarts = 0;
        assert!(extremize(&c).is_err());
    }
}
