//! Tabular reports emitted by the verification harness, with lossless CSV
//! and JSON round-trips.
//!
//! CSV layout: optional `# key: value` metadata comment lines, then a header
//! row, then data rows. Floats are written in shortest round-trip form, so
//! parsing an emitted file reproduces the report bit for bit. The `inf`
//! sentinel marks ratios whose bound is not positive.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// One measurement row: a configuration, the measured quantity, the bound it
/// is compared against, and their ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: u32,
    pub k: u32,
    pub p: u32,
    pub x: f64,
    pub function_id: String,
    pub measured: f64,
    pub bound: f64,
    /// `inf` sentinel when the bound is not positive; needs special JSON
    /// handling since JSON has no infinities.
    #[serde(with = "maybe_inf")]
    pub ratio: f64,
}

/// JSON cannot represent infinities; the sentinel travels as the string
/// "inf" instead.
mod maybe_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Raw::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad ratio '{t}'"))),
        }
    }
}

impl ReportRow {
    /// Builds a row, deriving `ratio = measured/bound`, with an `inf`
    /// sentinel when the bound is not positive.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: u32,
        k: u32,
        p: u32,
        x: f64,
        function_id: impl Into<String>,
        measured: f64,
        bound: f64,
    ) -> Self {
        let ratio = if bound > 0.0 {
            measured / bound
        } else {
            f64::INFINITY
        };
        ReportRow {
            n,
            k,
            p,
            x,
            function_id: function_id.into(),
            measured,
            bound,
            ratio,
        }
    }
}

/// Report metadata: suite name, tolerances, grid, derived quantities
/// (slopes, fitted constants, verdicts), and an optional timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReportMeta {
    pub suite: String,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub x_max: Option<f64>,
    pub grid_points: Option<usize>,
    /// Unix seconds; omitted entirely under `--no-meta`.
    pub timestamp: Option<u64>,
    /// Free-form derived values, ordered for deterministic output.
    pub notes: BTreeMap<String, String>,
}

/// A complete experiment report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub meta: ReportMeta,
    pub rows: Vec<ReportRow>,
}

/// Errors from parsing a serialized report.
#[derive(Debug)]
pub enum ReportError {
    Malformed(String),
    Json(serde_json::Error),
}

impl fmt::Display for ReportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportError::Malformed(msg) => write!(f, "malformed report: {msg}"),
            ReportError::Json(e) => write!(f, "malformed JSON report: {e}"),
        }
    }
}

impl std::error::Error for ReportError {}

impl From<serde_json::Error> for ReportError {
    fn from(e: serde_json::Error) -> Self {
        ReportError::Json(e)
    }
}

const HEADER: &str = "n,k,p,x,function_id,measured,bound,ratio";

fn write_float(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

fn parse_float(s: &str) -> Result<f64, ReportError> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse::<f64>()
            .map_err(|e| ReportError::Malformed(format!("bad float '{s}': {e}"))),
    }
}

impl ExperimentReport {
    pub fn new(suite: impl Into<String>) -> Self {
        ExperimentReport {
            meta: ReportMeta {
                suite: suite.into(),
                ..ReportMeta::default()
            },
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.meta.notes.insert(key.into(), value.to_string());
    }

    /// Serializes to CSV. With `include_meta` the metadata rides along as
    /// leading `# key: value` comment lines (including a timestamp);
    /// without it, the output is a pure, deterministic table.
    pub fn to_csv(&self, include_meta: bool) -> String {
        let mut out = String::new();
        if include_meta {
            out.push_str(&format!("# suite: {}\n", self.meta.suite));
            if let Some(v) = self.meta.rel_tol {
                out.push_str(&format!("# rel_tol: {}\n", write_float(v)));
            }
            if let Some(v) = self.meta.abs_tol {
                out.push_str(&format!("# abs_tol: {}\n", write_float(v)));
            }
            if let Some(v) = self.meta.x_max {
                out.push_str(&format!("# x_max: {}\n", write_float(v)));
            }
            if let Some(v) = self.meta.grid_points {
                out.push_str(&format!("# grid_points: {v}\n"));
            }
            if let Some(v) = self.meta.timestamp {
                out.push_str(&format!("# timestamp: {v}\n"));
            }
            for (key, value) in &self.meta.notes {
                out.push_str(&format!("# {key}: {value}\n"));
            }
        }
        out.push_str(HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.n,
                r.k,
                r.p,
                write_float(r.x),
                r.function_id,
                write_float(r.measured),
                write_float(r.bound),
                write_float(r.ratio),
            ));
        }
        out
    }

    /// Parses the CSV form, metadata comments included.
    pub fn from_csv(text: &str) -> Result<Self, ReportError> {
        let mut report = ExperimentReport::new("");
        let mut saw_header = false;
        for line in text.lines() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let (key, value) = meta
                    .split_once(':')
                    .ok_or_else(|| ReportError::Malformed(format!("bad metadata line '{line}'")))?;
                let key = key.trim();
                let value = value.trim();
                match key {
                    "suite" => report.meta.suite = value.to_string(),
                    "rel_tol" => report.meta.rel_tol = Some(parse_float(value)?),
                    "abs_tol" => report.meta.abs_tol = Some(parse_float(value)?),
                    "x_max" => report.meta.x_max = Some(parse_float(value)?),
                    "grid_points" => {
                        report.meta.grid_points = Some(value.parse().map_err(|e| {
                            ReportError::Malformed(format!("bad grid_points '{value}': {e}"))
                        })?)
                    }
                    "timestamp" => {
                        report.meta.timestamp = Some(value.parse().map_err(|e| {
                            ReportError::Malformed(format!("bad timestamp '{value}': {e}"))
                        })?)
                    }
                    _ => {
                        report.meta.notes.insert(key.to_string(), value.to_string());
                    }
                }
                continue;
            }
            if !saw_header {
                if line != HEADER {
                    return Err(ReportError::Malformed(format!(
                        "unexpected header '{line}', expected '{HEADER}'"
                    )));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 8 {
                return Err(ReportError::Malformed(format!(
                    "expected 8 fields, got {} in '{line}'",
                    fields.len()
                )));
            }
            let parse_int = |s: &str| -> Result<u32, ReportError> {
                s.parse()
                    .map_err(|e| ReportError::Malformed(format!("bad integer '{s}': {e}")))
            };
            report.rows.push(ReportRow {
                n: parse_int(fields[0])?,
                k: parse_int(fields[1])?,
                p: parse_int(fields[2])?,
                x: parse_float(fields[3])?,
                function_id: fields[4].to_string(),
                measured: parse_float(fields[5])?,
                bound: parse_float(fields[6])?,
                ratio: parse_float(fields[7])?,
            });
        }
        if !saw_header {
            return Err(ReportError::Malformed("missing header row".into()));
        }
        Ok(report)
    }

    pub fn to_json(&self, include_meta: bool) -> String {
        if include_meta {
            serde_json::to_string_pretty(self).expect("report serializes")
        } else {
            let stripped = ExperimentReport {
                meta: ReportMeta {
                    suite: self.meta.suite.clone(),
                    timestamp: None,
                    ..self.meta.clone()
                },
                rows: self.rows.clone(),
            };
            serde_json::to_string_pretty(&stripped).expect("report serializes")
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A table of exact moment coefficients for one `(n, k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub n: u32,
    pub k: u32,
    pub rows: Vec<MomentRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub m: u32,
    pub kind: MomentKind,
    /// Exact numerator, decimal string (arbitrary precision).
    pub numerator: String,
    /// Exact positive denominator, decimal string.
    pub denominator: String,
    pub float_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentKind {
    Raw,
    Central,
}

impl fmt::Display for MomentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentKind::Raw => write!(f, "raw"),
            MomentKind::Central => write!(f, "central"),
        }
    }
}

const MOMENT_HEADER: &str = "n,k,m,kind,numerator,denominator,float_value";

impl MomentTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(MOMENT_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.n,
                self.k,
                r.m,
                r.kind,
                r.numerator,
                r.denominator,
                write_float(r.float_value),
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, ReportError> {
        let mut lines = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some(h) if h.trim_end() == MOMENT_HEADER => {}
            other => {
                return Err(ReportError::Malformed(format!(
                    "bad moment-table header: {other:?}"
                )))
            }
        }
        let mut table = MomentTable {
            n: 0,
            k: 0,
            rows: Vec::new(),
        };
        for line in lines {
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != 7 {
                return Err(ReportError::Malformed(format!(
                    "expected 7 fields in '{line}'"
                )));
            }
            table.n = fields[0]
                .parse()
                .map_err(|e| ReportError::Malformed(format!("bad n: {e}")))?;
            table.k = fields[1]
                .parse()
                .map_err(|e| ReportError::Malformed(format!("bad k: {e}")))?;
            let kind = match fields[3] {
                "raw" => MomentKind::Raw,
                "central" => MomentKind::Central,
                other => return Err(ReportError::Malformed(format!("bad moment kind '{other}'"))),
            };
            table.rows.push(MomentRow {
                m: fields[2]
                    .parse()
                    .map_err(|e| ReportError::Malformed(format!("bad m: {e}")))?,
                kind,
                numerator: fields[4].to_string(),
                denominator: fields[5].to_string(),
                float_value: parse_float(fields[6])?,
            });
        }
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("moment table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        Ok(serde_json::from_str(text)?)
    }
}
