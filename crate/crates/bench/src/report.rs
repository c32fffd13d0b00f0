//! Experiment reports and their CSV and JSON forms.

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::matrix_io::format_float;
use crate::problem::{ProblemKind, ProblemSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Sampling,
    Projection,
    /// Row sampling with conjugate gradients on the sketched system.
    Cgnr,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Sampling => "sampling",
            Method::Projection => "projection",
            Method::Cgnr => "cgnr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Exact, Self::Sampling, Self::Projection, Self::Cgnr].into_iter().find(|m| m.as_str() == s)
    }
}

/// Sketch sizes that were actually used; unused ones are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowParams {
    pub epsilon: Option<f64>,
    pub r: Option<usize>,
    pub k: Option<usize>,
    pub q: Option<f64>,
    pub theory: bool,
    pub best_of: usize,
}

/// Outcome of the structural conditions and the three error bounds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundChecks {
    pub embedding_ok: Option<bool>,
    pub cross_term_ok: Option<bool>,
    /// `residual <= (1 + eps) Z`
    pub residual_ok: Option<bool>,
    /// `||x_opt - x~|| <= sqrt(eps) Z / sigma_min(A)`
    pub forward_ok: Option<bool>,
}

/// Phase wall times in seconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WallTimes {
    pub transform: f64,
    pub sketch_apply: f64,
    pub small_solve: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// `None` for problems read from files.
    pub spec: Option<ProblemSpec>,
    pub n: usize,
    pub d: usize,
    pub method: Method,
    pub params: RowParams,
    pub seed: u64,
    pub residual: f64,
    pub z_exact: f64,
    /// `residual / z_exact`; `None` when `z_exact` is zero.
    pub rel_error: Option<f64>,
    pub forward_error: f64,
    pub bound_checks: BoundChecks,
    pub retries: u32,
    pub wall_times: WallTimes,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub const CSV_HEADER: [&str; 29] = [
    "kind",
    "kappa_target",
    "gamma_target",
    "spec_seed",
    "n",
    "d",
    "method",
    "epsilon",
    "r",
    "k",
    "q",
    "theory",
    "best_of",
    "seed",
    "residual",
    "z_exact",
    "rel_error",
    "forward_error",
    "embedding_ok",
    "cross_term_ok",
    "residual_ok",
    "forward_ok",
    "retries",
    "t_transform",
    "t_sketch_apply",
    "t_small_solve",
    "t_total",
    "schema_version",
    "source",
];

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

impl ReportRow {
    fn to_record(&self) -> Vec<String> {
        let spec = self.spec.as_ref();
        vec![
            opt(spec, |s| s.kind.as_str().to_string()),
            opt(spec, |s| format_float(s.kappa_target)),
            opt(spec, |s| format_float(s.gamma_target)),
            opt(spec, |s| s.seed.to_string()),
            self.n.to_string(),
            self.d.to_string(),
            self.method.as_str().to_string(),
            opt(self.params.epsilon, format_float),
            opt(self.params.r, |v| v.to_string()),
            opt(self.params.k, |v| v.to_string()),
            opt(self.params.q, format_float),
            self.params.theory.to_string(),
            self.params.best_of.to_string(),
            self.seed.to_string(),
            format_float(self.residual),
            format_float(self.z_exact),
            opt(self.rel_error, format_float),
            format_float(self.forward_error),
            opt(self.bound_checks.embedding_ok, |b| b.to_string()),
            opt(self.bound_checks.cross_term_ok, |b| b.to_string()),
            opt(self.bound_checks.residual_ok, |b| b.to_string()),
            opt(self.bound_checks.forward_ok, |b| b.to_string()),
            self.retries.to_string(),
            format_float(self.wall_times.transform),
            format_float(self.wall_times.sketch_apply),
            format_float(self.wall_times.small_solve),
            format_float(self.wall_times.total),
            SCHEMA_VERSION.to_string(),
            if self.spec.is_some() { "generated" } else { "file" }.to_string(),
        ]
    }

    fn from_record(line: usize, rec: &csv::StringRecord) -> Result<Self> {
        if rec.len() != CSV_HEADER.len() {
            return Err(BenchError::RaggedRows { row: line, expected: CSV_HEADER.len(), found: rec.len() });
        }
        let field = |i: usize| &rec[i];
        let bad = |i: usize| BenchError::Parse { row: line, col: i + 1, text: rec[i].to_string() };
        fn parse<T: std::str::FromStr>(s: &str) -> Option<T> {
            s.parse().ok()
        }
        let req = |i: usize| -> Result<&str> {
            if field(i).is_empty() {
                Err(bad(i))
            } else {
                Ok(field(i))
            }
        };
        let float = |i: usize| req(i).and_then(|s| parse::<f64>(s).ok_or_else(|| bad(i)));
        let uint = |i: usize| req(i).and_then(|s| parse::<u64>(s).ok_or_else(|| bad(i)));
        let opt_float = |i: usize| if field(i).is_empty() { Ok(None) } else { float(i).map(Some) };
        let opt_uint = |i: usize| if field(i).is_empty() { Ok(None) } else { uint(i).map(Some) };
        let opt_bool = |i: usize| {
            if field(i).is_empty() {
                Ok(None)
            } else {
                parse::<bool>(field(i)).map(Some).ok_or_else(|| bad(i))
            }
        };

        let spec = if field(0).is_empty() {
            None
        } else {
            Some(ProblemSpec {
                kind: ProblemKind::parse(field(0)).ok_or_else(|| bad(0))?,
                kappa_target: float(1)?,
                gamma_target: float(2)?,
                seed: uint(3)?,
                n: uint(4)? as usize,
                d: uint(5)? as usize,
            })
        };
        if field(27) != SCHEMA_VERSION.to_string() {
            return Err(bad(27));
        }
        Ok(ReportRow {
            spec,
            n: uint(4)? as usize,
            d: uint(5)? as usize,
            method: Method::parse(field(6)).ok_or_else(|| bad(6))?,
            params: RowParams {
                epsilon: opt_float(7)?,
                r: opt_uint(8)?.map(|v| v as usize),
                k: opt_uint(9)?.map(|v| v as usize),
                q: opt_float(10)?,
                theory: parse::<bool>(field(11)).ok_or_else(|| bad(11))?,
                best_of: uint(12)? as usize,
            },
            seed: uint(13)?,
            residual: float(14)?,
            z_exact: float(15)?,
            rel_error: opt_float(16)?,
            forward_error: float(17)?,
            bound_checks: BoundChecks {
                embedding_ok: opt_bool(18)?,
                cross_term_ok: opt_bool(19)?,
                residual_ok: opt_bool(20)?,
                forward_ok: opt_bool(21)?,
            },
            retries: uint(22)? as u32,
            wall_times: WallTimes {
                transform: float(23)?,
                sketch_apply: float(24)?,
                small_solve: float(25)?,
                total: float(26)?,
            },
        })
    }
}

#[derive(Serialize, Deserialize)]
struct JsonReport {
    schema_version: u32,
    rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// Zeroes every wall time, leaving only the seeded content.
    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        for row in &mut out.rows {
            row.wall_times = WallTimes::default();
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.write_record(row.to_record())?;
        }
        let bytes = w.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(BenchError::Report("unexpected CSV header".into()));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            rows.push(ReportRow::from_record(line, &rec)?);
        }
        Ok(ExperimentReport { rows })
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = JsonReport { schema_version: SCHEMA_VERSION, rows: self.rows.clone() };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: JsonReport = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(BenchError::Report(format!("unsupported schema_version {}", doc.schema_version)));
        }
        Ok(ExperimentReport { rows: doc.rows })
    }

    pub fn emit(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn parse(text: &str, format: Format) -> Result<Self> {
        match format {
            Format::Csv => Self::from_csv(text),
            Format::Json => Self::from_json(text),
        }
    }

    pub fn write(&self, path: impl AsRef<std::path::Path>, format: Format) -> Result<()> {
        std::fs::write(path, self.emit(format)?)?;
        Ok(())
    }
}
