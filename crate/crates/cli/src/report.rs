//! Report envelopes, flat CSV rows, summary lines and the exit-code
//! contract.

use serde::Serialize;
use serde_json::Value;

use hardy_core::verify::{BoundReport, ImageReport, Verdict};

use crate::config::{Command, Params};

/// One check's result together with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    pub version: &'static str,
    pub command: Command,
    pub check_id: String,
    pub verdict: Option<Verdict>,
    pub config: Params,
    pub report: Value,
}

impl Envelope {
    pub fn new(command: Command, config: &Params, check_id: &str, verdict: Option<Verdict>, report: Value) -> Self {
        Envelope {
            version: hardy_core::VERSION,
            command,
            check_id: check_id.to_string(),
            verdict,
            config: config.clone(),
            report,
        }
    }

    pub fn bound(command: Command, config: &Params, r: &BoundReport) -> Self {
        let v = serde_json::to_value(r).expect("report serializes");
        Self::new(command, config, &r.check_id, Some(r.verdict), v)
    }

    pub fn image(command: Command, config: &Params, r: &ImageReport) -> Self {
        let v = serde_json::to_value(r).expect("report serializes");
        Self::new(command, config, &r.check_id, Some(r.verdict), v)
    }

    fn field(&self, key: &str) -> Option<f64> {
        self.report.get(key).and_then(Value::as_f64)
    }

    /// `(lhs, bound)`: the measured side and the bound it is held against.
    /// Image reports use the image norm and the size budget.
    pub fn lhs_bound(&self) -> (Option<f64>, Option<f64>) {
        if let Some(v) = self.report.get("validation") {
            return (v.get("norm").and_then(Value::as_f64), v.get("budget").and_then(Value::as_f64));
        }
        (self.field("lhs"), self.field("bound"))
    }

    pub fn summary(&self) -> String {
        if let Some(reason) = self.report.get("skipped").and_then(Value::as_str) {
            return format!("{} SKIP {reason}", self.check_id);
        }
        let verdict = self.verdict.map_or("-".to_string(), |v| v.to_string());
        let (lhs, bound) = self.lhs_bound();
        match (lhs, bound) {
            (Some(l), Some(b)) => format!("{} {verdict} lhs={l} bound={b} ratio={}", self.check_id, l / b),
            _ => format!("{} {verdict}", self.check_id),
        }
    }

    pub fn csv_row(&self) -> CsvRow {
        let c = &self.config;
        let (lhs, bound) = self.lhs_bound();
        CsvRow {
            check_id: self.check_id.clone(),
            verdict: self.verdict.map_or(String::new(), |v| v.to_string()),
            p: c.p,
            q: c.q.map(|q| q.to_string()),
            s: c.s,
            x0: c.x0,
            x1: c.x1,
            seed: c.seed,
            lhs,
            bound,
            ratio: lhs.zip(bound).map(|(l, b)| l / b),
            strict: self.report.get("strict").and_then(Value::as_bool),
            quad_error: self.field("quad_error").or_else(|| {
                self.report.get("validation").and_then(|v| v.get("norm_error")).and_then(Value::as_f64)
            }),
            reason: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub check_id: String,
    pub verdict: String,
    pub p: Option<f64>,
    pub q: Option<String>,
    pub s: Option<u32>,
    pub x0: Option<f64>,
    pub x1: Option<f64>,
    pub seed: Option<u64>,
    pub lhs: Option<f64>,
    pub bound: Option<f64>,
    pub ratio: Option<f64>,
    pub strict: Option<bool>,
    pub quad_error: Option<f64>,
    pub reason: Option<String>,
}

pub fn to_csv(rows: &[CsvRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("csv row serializes");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf-8")
}

/// 0 when everything passed (or nothing was judged), 2 on any FAIL, 3 when
/// the only non-passes are INCONCLUSIVE.
pub fn exit_code<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> i32 {
    let mut inconclusive = false;
    for v in verdicts {
        match v {
            Verdict::Fail => return 2,
            Verdict::Inconclusive => inconclusive = true,
            Verdict::Pass => {}
        }
    }
    if inconclusive {
        3
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hardy_core::verify::Sense;

    #[test]
    fn exit_codes() {
        use Verdict::*;
        assert_eq!(exit_code(&[]), 0);
        assert_eq!(exit_code(&[Pass, Pass]), 0);
        assert_eq!(exit_code(&[Pass, Inconclusive]), 3);
        assert_eq!(exit_code(&[Inconclusive, Fail, Pass]), 2);
    }

    #[test]
    fn csv_has_header_and_row() {
        let r = BoundReport::new("prop1", 0.5, 1.0, 1e-12, true, Sense::Upper);
        let params = Params { p: Some(1.0), q: Some(hardy_core::norms::Exponent::Infinite), ..Params::default() };
        let e = Envelope::bound(Command::Prop1, &params, &r);
        let text = to_csv(&[e.csv_row()]);
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("check_id,verdict,p,q,s,x0,x1,seed,lhs,bound,ratio,strict,quad_error,reason")
        );
        assert!(lines.next().unwrap().starts_with("prop1,PASS,1.0,inf,"));
        assert!(e.summary().starts_with("prop1 PASS lhs=0.5 bound=1"));
    }
}
