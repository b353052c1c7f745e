//! Command execution.

use std::fs;

use serde_json::json;

use hardy_core::atoms::{build_atom, random_sum, square_wave_atom, Atom, AtomFamily, AtomSpec, WeightSpec};
use hardy_core::constants;
use hardy_core::extremal::{extremize, SearchConfig};
use hardy_core::funcrep::GeneralizedPiecewiseFunction;
use hardy_core::verify::{self, Verdict};

use crate::config::{Command, RunConfig, Shape};
use crate::report::Envelope;
use crate::{sweep, CliError};

/// What a command produced: per-check envelopes plus optional extra
/// artifacts written next to the main output.
#[derive(Debug, Default)]
pub struct Outcome {
    pub envelopes: Vec<Envelope>,
    /// Replaces the envelope CSV for table-shaped commands.
    pub csv: Option<String>,
    pub plot: Option<String>,
    /// Extra summary lines (sweep counts).
    pub notes: Vec<String>,
}

impl Outcome {
    fn single(e: Envelope) -> Self {
        Outcome { envelopes: vec![e], ..Outcome::default() }
    }

    pub fn verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.envelopes.iter().filter_map(|e| e.verdict.as_ref())
    }
}

fn build(cfg: &RunConfig, spec: &AtomSpec) -> Result<Atom, CliError> {
    Ok(match cfg.shape()? {
        Shape::Polynomial => build_atom(spec, cfg.degree(spec)?, cfg.seed())?,
        Shape::SquareWave => square_wave_atom(spec)?,
        Shape::Steps(n) => AtomFamily::Steps { n }.build(spec, cfg.seed())?,
    })
}

fn family(cfg: &RunConfig, spec: &AtomSpec) -> Result<AtomFamily, CliError> {
    Ok(match cfg.shape()? {
        Shape::Steps(n) => AtomFamily::Steps { n },
        _ => AtomFamily::Polynomial { degree: cfg.degree(spec)? },
    })
}

fn require_weight(spec: &AtomSpec, want: WeightSpec, cmd: &str) -> Result<(), CliError> {
    if spec.weight != want {
        let w = match want {
            WeightSpec::Unit => "unit".to_string(),
            WeightSpec::Power { alpha } => format!("power:{alpha}"),
        };
        return Err(CliError::Usage(format!("{cmd} requires --weight {w}")));
    }
    Ok(())
}

fn dual_domain(cfg: &RunConfig) -> Result<(), CliError> {
    constants::check_dual_domain(cfg.p(), cfg.q()).map_err(|e| CliError::Usage(e.to_string()))
}

/// Runs one resolved command without touching the output path.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let cmd = cfg.command;
    let params = &cfg.params;
    match cmd {
        Command::Atom => {
            let spec = cfg.spec()?;
            let atom = build(cfg, &spec)?;
            let validation = atom.validate(1e-9);
            let verdict = if validation.passed() { Verdict::Pass } else { Verdict::Fail };
            let report = json!({ "atom": atom, "validation": validation });
            Ok(Outcome::single(Envelope::new(cmd, params, "atom", Some(verdict), report)))
        }
        Command::Validate => {
            let spec = cfg.spec()?;
            let f = match &params.input {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
                    serde_json::from_str::<GeneralizedPiecewiseFunction>(&text)
                        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
                }
                None => build(cfg, &spec)?.function,
            };
            let validation = hardy_core::atoms::validate_atom(&f, &spec, cfg.tol()?);
            let verdict = if validation.passed() { Verdict::Pass } else { Verdict::Fail };
            let report = json!({ "validation": validation });
            Ok(Outcome::single(Envelope::new(cmd, params, "validate", Some(verdict), report)))
        }
        Command::Prop1 => {
            let spec = cfg.spec()?;
            require_weight(&spec, WeightSpec::Unit, "prop1")?;
            let r = verify::check_prop1(&build(cfg, &spec)?, cfg.rel_tol()?)?;
            Ok(Outcome::single(Envelope::bound(cmd, params, &r)))
        }
        Command::Prop4 => {
            dual_domain(cfg)?;
            let spec = cfg.spec()?;
            require_weight(&spec, WeightSpec::power(spec.p), "prop4")?;
            let r = verify::check_prop4(&build(cfg, &spec)?, cfg.rel_tol()?)?;
            Ok(Outcome::single(Envelope::bound(cmd, params, &r)))
        }
        Command::Thm1 => {
            let spec = cfg.spec()?;
            require_weight(&spec, WeightSpec::Unit, "thm1")?;
            let sum = random_sum(&spec, family(cfg, &spec)?, params.atoms.unwrap_or(5).max(1), cfg.seed())?;
            let r = verify::check_thm1(&sum, cfg.rel_tol()?)?;
            Ok(Outcome::single(Envelope::bound(cmd, params, &r)))
        }
        Command::Thm2 => {
            dual_domain(cfg)?;
            let spec = cfg.spec()?;
            require_weight(&spec, WeightSpec::power(spec.p), "thm2")?;
            let sum = random_sum(&spec, family(cfg, &spec)?, params.atoms.unwrap_or(5).max(1), cfg.seed())?;
            let rel_tol = cfg.rel_tol()?;
            let mut out = Outcome::single(Envelope::bound(cmd, params, &verify::check_thm2(&sum, rel_tol)?));
            if params.thm2_literal.unwrap_or(false) {
                out.envelopes.push(Envelope::bound(cmd, params, &verify::check_thm2_literal(&sum, rel_tol)?));
            }
            Ok(out)
        }
        Command::Thm3 => {
            let spec = cfg.spec()?;
            if !spec.log_moment {
                return Err(CliError::Usage("thm3 requires --log-moment".to_string()));
            }
            let r = verify::check_thm3(&build(cfg, &spec)?, cfg.tol()?)?;
            Ok(Outcome::single(Envelope::image(cmd, params, &r)))
        }
        Command::Thm4 => {
            dual_domain(cfg)?;
            let spec = cfg.spec()?;
            if spec.s == 0 {
                return Err(CliError::Usage("thm4 requires --s >= 1".to_string()));
            }
            require_weight(&spec, WeightSpec::power(spec.p), "thm4")?;
            let r = verify::check_thm4(&build(cfg, &spec)?, cfg.tol()?)?;
            Ok(Outcome::single(Envelope::image(cmd, params, &r)))
        }
        Command::Classical => {
            let p = cfg.p();
            if !(p > 0.0 && p != 1.0 && p.is_finite()) {
                return Err(CliError::Usage(format!("classical requires p > 0 and p != 1, got {p}")));
            }
            let values = params.a.clone().unwrap_or_default();
            if let Some(bad) = values.iter().find(|&&a| !(a > 1.0 && a.is_finite())) {
                return Err(CliError::Usage(format!("--a values must exceed 1, got {bad}")));
            }
            let rel_tol = cfg.rel_tol()?;
            let mut out = Outcome::default();
            let mut plot = String::new();
            for d in cfg.directions()? {
                let name = format!("{d:?}").to_lowercase();
                plot.push_str(&format!("# {name}: A ratio bound\n"));
                for &a in &values {
                    let r = verify::check_classical(p, a, d, rel_tol)?;
                    plot.push_str(&format!("{a} {} {}\n", r.lhs, r.bound));
                    out.envelopes.push(Envelope::bound(cmd, params, &r));
                }
                plot.push_str("\n\n");
            }
            out.plot = Some(plot);
            Ok(out)
        }
        Command::Log2 => {
            let spec = cfg.spec()?;
            let r = verify::check_log2(&build(cfg, &spec)?)?;
            Ok(Outcome::single(Envelope::bound(cmd, params, &r)))
        }
        Command::Aux => {
            let (x0, x1) = (params.x0.unwrap_or(1.0), params.x1.unwrap_or(2.0));
            let r = verify::check_aux(x0, x1, cfg.p()).map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(Outcome::single(Envelope::bound(cmd, params, &r)))
        }
        Command::Sweep => sweep::run_sweep(cfg),
        Command::Extremize => {
            if params.grid.is_some() {
                return sweep::run_tightness_sweep(cfg);
            }
            let objective = cfg.objective()?;
            let mut spec = cfg.spec()?;
            spec.weight = objective.weight_for(spec.p);
            let config = SearchConfig {
                spec,
                family: cfg.family()?,
                restarts: params.restarts.unwrap_or(4),
                max_iters: params.max_iters.unwrap_or(200),
                seed: cfg.seed(),
                objective,
            };
            config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let res = extremize(&config)?;
            let verdict = if res.violations == 0 { Verdict::Pass } else { Verdict::Fail };
            let plot: String = res.trajectory.iter().map(|(i, v)| format!("{i} {v}\n")).collect();
            let report = serde_json::to_value(&res).expect("result serializes");
            let mut out = Outcome::single(Envelope::new(cmd, params, "extremize", Some(verdict), report));
            out.plot = Some(format!("# iter best_value\n{plot}"));
            out.notes.push(format!(
                "tightness={} r={} candidates={} violations={}",
                res.tightness, res.r, res.candidates, res.violations
            ));
            Ok(out)
        }
    }
}
