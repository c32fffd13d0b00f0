//! Config-driven sweeps over problems, methods and seeds.

use std::path::Path;
use std::time::{Duration, Instant};

use lsketch::linalg::{condition_number, gram_singular_values, norm2};
use lsketch::sketch::SketchParams;
use lsketch::solver::{
    best_of, sketch_solve_projection, sketch_solve_sampling, InnerSolver, LsProblem, SketchOutcome, SolveOptions,
};
use serde::Deserialize;

use crate::error::{ConfigError, Result};
use crate::problem::{gen_problem, ProblemSpec};
use crate::report::{BoundChecks, ExperimentReport, Method, ReportRow, RowParams, WallTimes};

/// Settings shared by every cell of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    /// Seeds per (problem, method) cell: `seed, seed + 1, ...`.
    pub seeds: u64,
    pub seed: u64,
    pub epsilon: f64,
    pub r: Option<usize>,
    pub k: Option<usize>,
    pub q: Option<f64>,
    /// Worst-case size formulas instead of the practical defaults.
    pub theory: bool,
    pub best_of: usize,
    /// Record the structural conditions and error bounds (costs `O(n d^2)`).
    pub diagnostics: bool,
}

fn one() -> u64 {
    1
}

fn one_usize() -> usize {
    1
}

fn half() -> f64 {
    0.5
}

fn yes() -> bool {
    true
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            seeds: 1,
            seed: 0,
            epsilon: 0.5,
            r: None,
            k: None,
            q: None,
            theory: false,
            best_of: 1,
            diagnostics: true,
        }
    }
}

impl RunSettings {
    fn sketch_params(&self, n: usize, d: usize) -> Result<SketchParams> {
        let mut p = if self.theory {
            SketchParams::theory(n, d, self.epsilon, 1.0, 1.0)?
        } else {
            SketchParams::practical(n, d, self.epsilon)?
        };
        if let Some(r) = self.r {
            p = p.with_r(r);
        }
        if let Some(k) = self.k {
            p = p.with_k(k);
        }
        if let Some(q) = self.q {
            p = p.with_q(q);
        }
        Ok(p)
    }
}

/// A sweep: every spec is run with every method for `seeds` seeds.
///
/// ```json
/// {
///   "specs": [{"kind": "gaussian_incoherent", "n": 1024, "d": 8,
///              "kappa_target": 10, "gamma_target": 0.9, "seed": 1}],
///   "methods": ["exact", "sampling", "projection"],
///   "seeds": 20,
///   "epsilon": 0.5
/// }
/// ```
///
/// Optional keys: `seed`, `r`, `k`, `q`, `theory`, `best_of`, `diagnostics`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub specs: Vec<ProblemSpec>,
    pub methods: Vec<Method>,
    pub settings: RunSettings,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    specs: Vec<ProblemSpec>,
    methods: Vec<Method>,
    #[serde(default = "one")]
    seeds: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "half")]
    epsilon: f64,
    #[serde(default)]
    r: Option<usize>,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    q: Option<f64>,
    #[serde(default)]
    theory: bool,
    #[serde(default = "one_usize")]
    best_of: usize,
    #[serde(default = "yes")]
    diagnostics: bool,
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError {
            line: Some(e.line()),
            field: None,
            message: e.to_string(),
        })?;
        let invalid = |field: String, key: &str, message: String| ConfigError {
            line: line_of(text, key),
            field: Some(field),
            message,
        };
        if raw.specs.is_empty() {
            return Err(invalid("specs".into(), "specs", "at least one spec is required".into()));
        }
        if raw.methods.is_empty() {
            return Err(invalid("methods".into(), "methods", "at least one method is required".into()));
        }
        for (i, spec) in raw.specs.iter().enumerate() {
            if let Err(e) = spec.validate() {
                return Err(invalid(format!("specs[{i}]"), "specs", e.to_string()));
            }
        }
        if raw.seeds == 0 {
            return Err(invalid("seeds".into(), "seeds", "must be at least 1".into()));
        }
        if raw.best_of == 0 {
            return Err(invalid("best_of".into(), "best_of", "must be at least 1".into()));
        }
        if !(raw.epsilon > 0.0 && raw.epsilon < 1.0) {
            return Err(invalid("epsilon".into(), "epsilon", format!("{} outside (0, 1)", raw.epsilon)));
        }
        if let Some(q) = raw.q {
            if !(q > 0.0 && q <= 1.0) {
                return Err(invalid("q".into(), "q", format!("{q} outside (0, 1]")));
            }
        }
        Ok(ExperimentConfig {
            specs: raw.specs,
            methods: raw.methods,
            settings: RunSettings {
                seeds: raw.seeds,
                seed: raw.seed,
                epsilon: raw.epsilon,
                r: raw.r,
                k: raw.k,
                q: raw.q,
                theory: raw.theory,
                best_of: raw.best_of,
                diagnostics: raw.diagnostics,
            },
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::parse(&text)?)
    }
}

/// Quantities of the exact solution shared by all cells of one problem.
struct Reference {
    x: Vec<f64>,
    z: f64,
    sigma_min: Option<f64>,
    solve_time: Duration,
}

fn reference(p: &LsProblem, diagnostics: bool) -> Result<Reference> {
    let t = Instant::now();
    let exact = p.exact()?;
    let solve_time = t.elapsed();
    let sigma_min = if diagnostics {
        condition_number(p.a())?;
        gram_singular_values(p.a())?.last().copied()
    } else {
        None
    };
    Ok(Reference { x: exact.x.clone(), z: exact.residual, sigma_min, solve_time })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&diff)
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn rel_error(residual: f64, z: f64) -> Option<f64> {
    (z > 0.0).then(|| residual / z)
}

fn sketch_cell(
    p: &LsProblem,
    method: Method,
    settings: &RunSettings,
    params: &SketchParams,
    seed: u64,
) -> Result<SketchOutcome> {
    let mut opts = if settings.diagnostics { SolveOptions::with_diagnostics() } else { SolveOptions::default() };
    if method == Method::Cgnr {
        opts.inner = InnerSolver::Cgnr { tol: 1e-12, max_iter: 1000 };
    }
    let out = best_of(settings.best_of, seed, |s| match method {
        Method::Projection => sketch_solve_projection(p, params, s, &opts),
        _ => sketch_solve_sampling(p, params, s, &opts),
    })?;
    Ok(out)
}

/// All cells for one problem. Rows come out ordered by method, then seed.
pub fn run_problem(
    p: &LsProblem,
    spec: Option<&ProblemSpec>,
    methods: &[Method],
    settings: &RunSettings,
) -> Result<Vec<ReportRow>> {
    let reference = reference(p, settings.diagnostics)?;
    let params = settings.sketch_params(p.n(), p.d())?;
    let eps = settings.epsilon;
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();

    let mut rows = Vec::new();
    for &method in &methods {
        for i in 0..settings.seeds {
            let seed = settings.seed.wrapping_add(i);
            let base = ReportRow {
                spec: spec.cloned(),
                n: p.n(),
                d: p.d(),
                method,
                params: RowParams { epsilon: None, r: None, k: None, q: None, theory: settings.theory, best_of: 1 },
                seed,
                residual: reference.z,
                z_exact: reference.z,
                rel_error: rel_error(reference.z, reference.z),
                forward_error: 0.0,
                bound_checks: BoundChecks::default(),
                retries: 0,
                wall_times: WallTimes { total: secs(reference.solve_time), ..WallTimes::default() },
            };
            if method == Method::Exact {
                rows.push(base);
                continue;
            }
            let out = sketch_cell(p, method, settings, &params, seed)?;
            let forward_error = distance(&reference.x, &out.x_tilde);
            let mut checks = BoundChecks::default();
            if let (Some(diag), Some(sigma_min)) = (&out.diagnostics, reference.sigma_min) {
                checks = BoundChecks {
                    embedding_ok: Some(diag.embedding_ok),
                    cross_term_ok: Some(diag.cross_term_ok),
                    residual_ok: Some(out.residual <= (1.0 + eps) * reference.z),
                    forward_ok: Some(forward_error <= eps.sqrt() * reference.z / sigma_min),
                };
            }
            let (r, k, q) = match method {
                Method::Projection => (None, Some(params.k), Some(params.q)),
                _ => (Some(params.r), None, None),
            };
            rows.push(ReportRow {
                params: RowParams { epsilon: Some(eps), r, k, q, theory: settings.theory, best_of: settings.best_of },
                residual: out.residual,
                rel_error: rel_error(out.residual, reference.z),
                forward_error,
                bound_checks: checks,
                retries: out.retries,
                wall_times: WallTimes {
                    transform: secs(out.timings.transform),
                    sketch_apply: secs(out.timings.sketch_apply),
                    small_solve: secs(out.timings.small_solve),
                    total: secs(out.timings.total),
                },
                ..base
            });
        }
    }
    Ok(rows)
}

/// Runs every (spec, method, seed) cell. The exact solve is done once per
/// spec. Rows are ordered by spec (config order), then method, then seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut rows = Vec::new();
    for spec in &config.specs {
        let p = gen_problem(spec)?;
        rows.extend(run_problem(&p, Some(spec), &config.methods, &config.settings)?);
    }
    Ok(ExperimentReport { rows })
}

pub fn run_experiment_file(path: impl AsRef<Path>) -> Result<ExperimentReport> {
    run_experiment(&ExperimentConfig::load(path)?)
}
