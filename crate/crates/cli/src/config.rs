//! Run configuration: flags, optional JSON config file, defaults, and
//! validation into typed values.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use hardy_core::atoms::{AtomFamily, AtomSpec, WeightSpec};
use hardy_core::extremal::Objective;
use hardy_core::funcrep::Interval;
use hardy_core::norms::Exponent;
use hardy_core::verify::Direction;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Atom,
    Validate,
    Prop1,
    Prop4,
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    Classical,
    Log2,
    Aux,
    Sweep,
    Extremize,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Atom => "atom",
            Command::Validate => "validate",
            Command::Prop1 => "prop1",
            Command::Prop4 => "prop4",
            Command::Thm1 => "thm1",
            Command::Thm2 => "thm2",
            Command::Thm3 => "thm3",
            Command::Thm4 => "thm4",
            Command::Classical => "classical",
            Command::Log2 => "log2",
            Command::Aux => "aux",
            Command::Sweep => "sweep",
            Command::Extremize => "extremize",
        }
    }

    /// Commands that can run once per grid row.
    pub fn sweepable(self) -> bool {
        !matches!(self, Command::Sweep | Command::Extremize | Command::Atom | Command::Validate)
    }
}

impl std::str::FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        <Command as ValueEnum>::from_str(s, false).map_err(|_| CliError::Usage(format!("unknown command {s:?}")))
    }
}

/// Every tunable parameter. Unset values fall back to file values, then to
/// command defaults. Keys in a config file use the flag spellings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Params {
    /// Exponent p in (0, 1] (classical checks: any p > 0, p != 1)
    #[arg(long)]
    pub p: Option<f64>,
    /// Exponent q in [1, inf]; "inf" for infinity
    #[arg(long)]
    pub q: Option<Exponent>,
    /// Highest vanishing moment order
    #[arg(long)]
    pub s: Option<u32>,
    /// Left end of the atom's interval
    #[arg(long)]
    pub x0: Option<f64>,
    /// Right end of the atom's interval
    #[arg(long)]
    pub x1: Option<f64>,
    /// "unit" or "power:<alpha>"
    #[arg(long)]
    pub weight: Option<String>,
    /// Polynomial degree of built atoms
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative quadrature tolerance
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Atom validation tolerance (relative to the size budget and moment scale)
    #[arg(long)]
    pub tol: Option<f64>,
    /// Permit x0 = 0
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub allow_zero_left: Option<bool>,
    /// Also run thm2 with H in place of H*
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub thm2_literal: Option<bool>,
    /// Impose the logarithmic moment
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub log_moment: Option<bool>,
    /// Atom shape: polynomial, squarewave or steps:<n>
    #[arg(long)]
    pub shape: Option<String>,
    /// Number of atoms in thm1/thm2 sums
    #[arg(long)]
    pub atoms: Option<usize>,
    /// Family parameters A for classical checks (comma separated)
    #[arg(long = "a", value_delimiter = ',')]
    pub a: Option<Vec<f64>>,
    /// hardy, dual or both
    #[arg(long)]
    pub direction: Option<String>,
    /// CSV grid with a header row (sweep, extremize)
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Command run per grid row by sweep
    #[arg(long)]
    pub check: Option<Command>,
    /// JSON function file for validate
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// json or csv
    #[arg(long)]
    pub format: Option<String>,
    /// Plot-ready data file
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Worker threads for sweeps (default: available parallelism)
    #[arg(long)]
    pub jobs: Option<usize>,
    /// prop1, prop4 or log2
    #[arg(long)]
    pub objective: Option<String>,
    /// Search family: steps:<n> or polynomial:<degree>
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

impl Params {
    /// Field-wise `over` where set, else `self`.
    pub fn overlay(&self, over: &Params) -> Params {
        let mut base = serde_json::to_value(self).expect("params serialize");
        let top = serde_json::to_value(over).expect("params serialize");
        if let (Some(b), Some(t)) = (base.as_object_mut(), top.as_object()) {
            for (k, v) in t {
                if !v.is_null() {
                    b.insert(k.clone(), v.clone());
                }
            }
        }
        serde_json::from_value(base).expect("overlay of valid params")
    }

    pub fn from_json(text: &str) -> Result<Params, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config file: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Polynomial,
    SquareWave,
    Steps(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub params: Params,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub const DEFAULT_A: [f64; 4] = [5.0, 10.0, 15.0, 20.0];

impl RunConfig {
    /// Fills every parameter the command reads with its default, so the
    /// embedded config is complete.
    pub fn resolved(&self) -> Result<RunConfig, CliError> {
        let c = self.command;
        let mut p = self.params.clone();
        if c == Command::Sweep {
            // Row parameters are resolved per row against the checked command.
            p.check.get_or_insert(Command::Prop1);
            p.format.get_or_insert("json".to_string());
            let r = RunConfig { command: c, params: p };
            r.format()?;
            return Ok(r);
        }
        p.p.get_or_insert(1.0);
        if c != Command::Aux && c != Command::Classical {
            p.q.get_or_insert(Exponent::Infinite);
            let s_default = u32::from(c == Command::Thm4);
            p.s.get_or_insert(s_default);
            let default_weight = match c {
                Command::Prop4 | Command::Thm2 | Command::Thm4 => format!("power:{}", p.p.unwrap_or(1.0)),
                _ => "unit".to_string(),
            };
            p.weight.get_or_insert(default_weight);
            p.log_moment.get_or_insert(c == Command::Thm3);
            p.allow_zero_left.get_or_insert(false);
            p.shape.get_or_insert("polynomial".to_string());
        }
        p.x0.get_or_insert(1.0);
        p.x1.get_or_insert(2.0);
        p.seed.get_or_insert(0);
        p.rel_tol.get_or_insert(hardy_core::norms::DEFAULT_REL_TOL);
        p.format.get_or_insert("json".to_string());
        match c {
            Command::Thm1 | Command::Thm2 => {
                p.atoms.get_or_insert(5);
                if c == Command::Thm2 {
                    p.thm2_literal.get_or_insert(false);
                }
            }
            Command::Thm3 | Command::Thm4 | Command::Validate => {
                p.tol.get_or_insert(1e-9);
            }
            Command::Classical => {
                p.p.replace(self.params.p.unwrap_or(2.0));
                p.a.get_or_insert(DEFAULT_A.iter().map(|t| t.exp()).collect());
                p.direction.get_or_insert("both".to_string());
            }
            Command::Extremize => {
                p.objective.get_or_insert("prop1".to_string());
                p.family.get_or_insert("steps:2".to_string());
                p.restarts.get_or_insert(4);
                p.max_iters.get_or_insert(200);
            }
            _ => {}
        }
        let r = RunConfig { command: c, params: p };
        r.format()?;
        Ok(r)
    }

    pub fn format(&self) -> Result<Format, CliError> {
        match self.params.format.as_deref().unwrap_or("json") {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(usage(format!("--format must be json or csv, got {other:?}"))),
        }
    }

    pub fn p(&self) -> f64 {
        self.params.p.unwrap_or(1.0)
    }

    pub fn q(&self) -> Exponent {
        self.params.q.unwrap_or(Exponent::Infinite)
    }

    pub fn seed(&self) -> u64 {
        self.params.seed.unwrap_or(0)
    }

    pub fn rel_tol(&self) -> Result<f64, CliError> {
        let t = self.params.rel_tol.unwrap_or(hardy_core::norms::DEFAULT_REL_TOL);
        if t > 1e-13 && t < 1e-2 {
            Ok(t)
        } else {
            Err(usage(format!("--rel-tol must lie in (1e-13, 1e-2), got {t}")))
        }
    }

    pub fn tol(&self) -> Result<f64, CliError> {
        let t = self.params.tol.unwrap_or(1e-9);
        if t > 0.0 && t < 1.0 {
            Ok(t)
        } else {
            Err(usage(format!("--tol must lie in (0, 1), got {t}")))
        }
    }

    pub fn weight(&self) -> Result<WeightSpec, CliError> {
        let w = self.params.weight.as_deref().unwrap_or("unit");
        w.parse().map_err(|_| usage(format!("--weight must be unit or power:<alpha> with alpha > -1, got {w:?}")))
    }

    pub fn shape(&self) -> Result<Shape, CliError> {
        let s = self.params.shape.as_deref().unwrap_or("polynomial");
        match s {
            "polynomial" => Ok(Shape::Polynomial),
            "squarewave" | "square-wave" => Ok(Shape::SquareWave),
            _ => s
                .strip_prefix("steps:")
                .and_then(|n| n.parse().ok())
                .filter(|&n: &usize| (1..=64).contains(&n))
                .map(Shape::Steps)
                .ok_or_else(|| usage(format!("--shape must be polynomial, squarewave or steps:<n>, got {s:?}"))),
        }
    }

    pub fn interval(&self) -> Result<Interval, CliError> {
        let (x0, x1) = (self.params.x0.unwrap_or(1.0), self.params.x1.unwrap_or(2.0));
        if !(x0 >= 0.0 && x0 < x1 && x1.is_finite()) {
            return Err(usage(format!("need 0 <= x0 < x1 < inf, got x0 = {x0}, x1 = {x1}")));
        }
        if x0 == 0.0 && !self.params.allow_zero_left.unwrap_or(false) {
            return Err(usage("x0 = 0 requires --allow-zero-left"));
        }
        Ok(Interval { lo: x0, hi: x1 })
    }

    /// The atom spec described by the parameters, validated.
    pub fn spec(&self) -> Result<AtomSpec, CliError> {
        let p = self.p();
        if !(p > 0.0 && p <= 1.0) {
            return Err(usage(format!("--p must lie in (0, 1], got {p}")));
        }
        let q = self.q();
        if let Exponent::Finite(qv) = q {
            if !(qv >= 1.0) {
                return Err(usage(format!("--q must lie in [1, inf], got {qv}")));
            }
            if p >= qv {
                return Err(usage(format!("atoms require p < q, got p = {p}, q = {qv}")));
            }
        }
        let spec = AtomSpec::new(p, q, self.params.s.unwrap_or(0), self.interval()?)
            .with_weight(self.weight()?)
            .with_log_moment(self.params.log_moment.unwrap_or(false));
        spec.validate().map_err(|e| usage(e.to_string()))?;
        Ok(spec)
    }

    /// Degree for polynomial atoms: `--degree`, or two above the number of
    /// constraints.
    pub fn degree(&self, spec: &AtomSpec) -> Result<usize, CliError> {
        let d = self.params.degree.unwrap_or(spec.constraint_count() + 2);
        if d < spec.constraint_count() {
            return Err(usage(format!(
                "--degree {d} leaves no free coefficients for {} moment constraints; use at least {}",
                spec.constraint_count(),
                spec.constraint_count()
            )));
        }
        Ok(d)
    }

    pub fn directions(&self) -> Result<Vec<Direction>, CliError> {
        match self.params.direction.as_deref().unwrap_or("both") {
            "both" => Ok(vec![Direction::Hardy, Direction::Dual]),
            d => d
                .parse()
                .map(|d| vec![d])
                .map_err(|_| usage(format!("--direction must be hardy, dual or both, got {d:?}"))),
        }
    }

    pub fn objective(&self) -> Result<Objective, CliError> {
        let o = self.params.objective.as_deref().unwrap_or("prop1");
        o.parse().map_err(|_| usage(format!("--objective must be prop1, prop4 or log2, got {o:?}")))
    }

    pub fn family(&self) -> Result<AtomFamily, CliError> {
        let f = self.params.family.as_deref().unwrap_or("steps:2");
        let parsed = if let Some(n) = f.strip_prefix("steps:") {
            n.parse().ok().filter(|&n: &usize| (1..=8).contains(&n)).map(|n| AtomFamily::Steps { n })
        } else if let Some(d) = f.strip_prefix("polynomial:") {
            d.parse().ok().filter(|&d: &usize| d <= 12).map(|degree| AtomFamily::Polynomial { degree })
        } else {
            None
        };
        parsed.ok_or_else(|| usage(format!("--family must be steps:<1..8> or polynomial:<0..12>, got {f:?}")))
    }

    pub fn jobs(&self) -> usize {
        self.params
            .jobs
            .filter(|&j| j > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_prefers_flags() {
        let file = Params { p: Some(0.5), q: Some(Exponent::Finite(2.0)), seed: Some(3), ..Params::default() };
        let flags = Params { seed: Some(9), ..Params::default() };
        let m = file.overlay(&flags);
        assert_eq!(m.p, Some(0.5));
        assert_eq!(m.seed, Some(9));
        assert_eq!(m.q, Some(Exponent::Finite(2.0)));
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        assert!(Params::from_json(r#"{"p": 0.5, "q": "inf", "rel-tol": 1e-9}"#).is_ok());
        assert!(matches!(Params::from_json(r#"{"p": 0.5, "bogus": 1}"#), Err(CliError::Usage(_))));
    }

    #[test]
    fn defaults_per_command() {
        let r = RunConfig { command: Command::Prop4, params: Params { p: Some(0.5), ..Params::default() } }
            .resolved()
            .unwrap();
        assert_eq!(r.weight().unwrap(), WeightSpec::power(0.5));
        let r = RunConfig { command: Command::Thm3, params: Params::default() }.resolved().unwrap();
        assert_eq!(r.params.log_moment, Some(true));
        let r = RunConfig { command: Command::Thm4, params: Params::default() }.resolved().unwrap();
        assert_eq!(r.params.s, Some(1));
    }

    #[test]
    fn zero_left_needs_flag() {
        let params = Params { x0: Some(0.0), x1: Some(1.0), ..Params::default() };
        let r = RunConfig { command: Command::Log2, params }.resolved().unwrap();
        assert!(matches!(r.interval(), Err(CliError::Usage(_))));
    }

    #[test]
    fn parses_shapes_and_families() {
        let mut r = RunConfig { command: Command::Extremize, params: Params::default() }.resolved().unwrap();
        assert_eq!(r.family().unwrap(), AtomFamily::Steps { n: 2 });
        r.params.family = Some("polynomial:4".into());
        assert_eq!(r.family().unwrap(), AtomFamily::Polynomial { degree: 4 });
        r.params.shape = Some("steps:6".into());
        assert_eq!(r.shape().unwrap(), Shape::Steps(6));
        r.params.shape = Some("triangle".into());
        assert!(r.shape().is_err());
    }
}
