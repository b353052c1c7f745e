//! Grid-driven runs. Rows execute concurrently on a bounded pool; output is
//! sorted afterwards, so reruns are byte-identical.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde_json::json;

use hardy_core::atoms::AtomSpec;
use hardy_core::extremal::{tightness_sweep, SearchConfig, SweepResult};
use hardy_core::funcrep::Interval;
use hardy_core::norms::Exponent;
use hardy_core::verify::Verdict;

use crate::config::{Command, Params, RunConfig};
use crate::report::{to_csv, CsvRow, Envelope};
use crate::run::{execute, Outcome};
use crate::CliError;

const GRID_COLUMNS: [&str; 8] = ["p", "q", "s", "x0", "x1", "seed", "weight", "degree"];

/// Parses a grid CSV (header row required) into per-row parameter sets.
pub fn parse_grid(text: &str, allowed: &[&str]) -> Result<Vec<Params>, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CliError::Usage(format!("grid header: {e}")))?.clone();
    for h in &headers {
        if !allowed.contains(&h) {
            return Err(CliError::Usage(format!("grid column {h:?} not among {}", allowed.join(", "))));
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Usage(format!("grid row {}: {e}", i + 1)))?;
        let mut obj = serde_json::Map::new();
        for (h, v) in headers.iter().zip(rec.iter()) {
            if v.is_empty() {
                continue;
            }
            let value = match h {
                "q" | "weight" => json!(v),
                "s" | "seed" | "degree" => {
                    let n: u64 =
                        v.parse().map_err(|_| CliError::Usage(format!("grid row {}: {h} = {v:?}", i + 1)))?;
                    json!(n)
                }
                _ => {
                    let n: f64 =
                        v.parse().map_err(|_| CliError::Usage(format!("grid row {}: {h} = {v:?}", i + 1)))?;
                    json!(n)
                }
            };
            obj.insert(h.to_string(), value);
        }
        let params: Params = serde_json::from_value(serde_json::Value::Object(obj))
            .map_err(|e| CliError::Usage(format!("grid row {}: {e}", i + 1)))?;
        rows.push(params);
    }
    Ok(rows)
}

fn read_grid(path: &Path, allowed: &[&str]) -> Result<Vec<Params>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    parse_grid(&text, allowed)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))
}

fn q_key(q: Option<Exponent>) -> f64 {
    match q {
        Some(Exponent::Finite(v)) => v,
        Some(Exponent::Infinite) => f64::INFINITY,
        None => f64::NAN,
    }
}

fn sort_key(p: &Params) -> [f64; 6] {
    [
        p.p.unwrap_or(f64::NAN),
        q_key(p.q),
        p.s.map_or(f64::NAN, f64::from),
        p.x0.unwrap_or(f64::NAN),
        p.x1.unwrap_or(f64::NAN),
        p.seed.map_or(f64::NAN, |s| s as f64),
    ]
}

fn cmp_keys(a: &[f64; 6], b: &[f64; 6]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Runs `--check` once per grid row. Rows that cannot run are recorded as
/// SKIP with the reason; the sweep itself never aborts on a row.
pub fn run_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let check = cfg.params.check.unwrap_or(Command::Prop1);
    if !check.sweepable() {
        return Err(CliError::Usage(format!("--check {} cannot run per grid row", check.name())));
    }
    let path = cfg.params.grid.as_ref().ok_or_else(|| CliError::Usage("sweep requires --grid".to_string()))?;
    let rows = read_grid(path, &GRID_COLUMNS)?;
    let mut base = cfg.params.clone();
    // Per-row configs carry only what the check reads.
    base.grid = None;
    base.check = None;
    base.output = None;
    base.plot = None;
    base.jobs = None;
    let results: Vec<(Params, Result<Outcome, CliError>)> = pool(cfg.jobs())?.install(|| {
        rows.par_iter()
            .map(|row| {
                let merged = base.overlay(row);
                let rc = RunConfig { command: check, params: merged.clone() };
                match rc.resolved() {
                    Ok(rc) => {
                        let out = execute(&rc);
                        (rc.params, out)
                    }
                    Err(e) => (merged, Err(e)),
                }
            })
            .collect()
    });
    let mut keyed: Vec<([f64; 6], usize, Vec<Envelope>, Vec<CsvRow>)> = Vec::with_capacity(results.len());
    let (mut pass, mut fail, mut inconclusive, mut skip) = (0usize, 0usize, 0usize, 0usize);
    for (i, (params, res)) in results.into_iter().enumerate() {
        let key = sort_key(&params);
        match res {
            Ok(out) => {
                for v in out.verdicts() {
                    match v {
                        Verdict::Pass => pass += 1,
                        Verdict::Fail => fail += 1,
                        Verdict::Inconclusive => inconclusive += 1,
                    }
                }
                let csv_rows = out.envelopes.iter().map(Envelope::csv_row).collect();
                keyed.push((key, i, out.envelopes, csv_rows));
            }
            Err(e) => {
                skip += 1;
                let reason = e.to_string();
                let env = Envelope::new(check, &params, check.name(), None, json!({ "skipped": reason }));
                let mut row = env.csv_row();
                row.verdict = "SKIP".to_string();
                row.reason = Some(reason);
                keyed.push((key, i, vec![env], vec![row]));
            }
        }
    }
    keyed.sort_by(|a, b| cmp_keys(&a.0, &b.0).then(a.1.cmp(&b.1)));
    let mut envelopes = Vec::new();
    let mut csv_rows = Vec::new();
    for (_, _, e, r) in keyed {
        envelopes.extend(e);
        csv_rows.extend(r);
    }
    Ok(Outcome {
        envelopes,
        csv: Some(to_csv(&csv_rows)),
        plot: None,
        notes: vec![format!("PASS={pass} FAIL={fail} INCONCLUSIVE={inconclusive} SKIP={skip}")],
    })
}

/// `extremize --grid`: one search per `(p, q)` row.
pub fn run_tightness_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let path = cfg.params.grid.as_ref().expect("caller checked --grid");
    let rows = read_grid(path, &["p", "q"])?;
    let mut grid = Vec::with_capacity(rows.len());
    for r in &rows {
        let (Some(p), Some(q)) = (r.p, r.q) else {
            return Err(CliError::Usage("extremize grids need p and q in every row".to_string()));
        };
        grid.push((p, q));
    }
    let template = SearchConfig {
        spec: AtomSpec::new(1.0, Exponent::Infinite, cfg.params.s.unwrap_or(0), Interval { lo: 0.5, hi: 1.0 }),
        family: cfg.family()?,
        restarts: cfg.params.restarts.unwrap_or(4).max(1),
        max_iters: cfg.params.max_iters.unwrap_or(200).max(1),
        seed: cfg.seed(),
        objective: cfg.objective()?,
    };
    let mut result: SweepResult = pool(cfg.jobs())?.install(|| tightness_sweep(&grid, &template));
    result.rows.sort_by(|a, b| a.p.total_cmp(&b.p).then(q_key(Some(a.q)).total_cmp(&q_key(Some(b.q)))));
    let mut envelopes = Vec::new();
    for row in &result.rows {
        let verdict = if row.violations == 0 { Verdict::Pass } else { Verdict::Fail };
        let params = Params { p: Some(row.p), q: Some(row.q), ..cfg.params.clone() };
        let report = serde_json::to_value(row).expect("row serializes");
        envelopes.push(Envelope::new(Command::Extremize, &params, "extremize", Some(verdict), report));
    }
    for s in &result.skipped {
        let params = Params { p: Some(s.p), q: Some(s.q), ..cfg.params.clone() };
        envelopes.push(Envelope::new(Command::Extremize, &params, "extremize", None, json!({ "skipped": s.reason })));
    }
    Ok(Outcome {
        envelopes,
        csv: Some(result.to_csv()),
        plot: Some(result.plot_columns()),
        notes: vec![format!(
            "rows={} skipped={} candidates={} violations={}",
            result.rows.len(),
            result.skipped.len(),
            result.candidates(),
            result.violations()
        )],
    })
}
