//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Criterion 11 is a wall-clock comparison and only runs when asked for,
//! with `cargo test --test acceptance -- --perf` or `LSKETCH_PERF=1`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lsketch::hadamard::{apply_rht, fwht_normalized, partial_rht_rows, sample_signs};
use lsketch::linalg::{gaussian_matrix, gram_singular_values, norm2, orthonormal_basis, solve_exact_ls, spectral_norm_sym};
use lsketch::matmul::{
    c_lower_bound, check_bound_hypotheses, exactly_c, gram_error, rescale_to_unit_spectral_norm, sampled_gram,
    ColumnSampler,
};
use lsketch::rng;
use lsketch::sketch::{
    apply_sparse_projection, draw_sampling_plan, draw_sparse_projection, practical_q, project_vector, SketchParams,
};
use lsketch::solver::{best_of, sketch_solve_projection, sketch_solve_sampling, SketchOutcome, SolveOptions};
use lsketch::DenseMatrix;
use lsketch_bench::verify::perf_check;
use lsketch_bench::{gen_problem, run_experiment, ExperimentConfig, ProblemKind, ProblemSpec};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (t < limit, format!("{:.2}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

fn fwht_correctness() -> Outcome {
    let start = Instant::now();
    let (mut worst_inv, mut worst_iso) = (0.0f64, 0.0f64);
    for log_n in 1..=12 {
        let n = 1usize << log_n;
        for s in 0..100 {
            let x = gaussian_matrix(n, 1, 1000 * log_n as u64 + s).into_vec();
            let y = fwht_normalized(&x).unwrap();
            let z = fwht_normalized(&y).unwrap();
            let inv = x.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst_inv = worst_inv.max(inv);
            worst_iso = worst_iso.max((norm2(&y) - norm2(&x)).abs() / norm2(&x));
        }
    }
    let (fast, time) = within(Duration::from_secs(5), start);
    outcome(
        worst_inv <= 1e-12 && worst_iso <= 1e-12 && fast,
        format!("max involution error {worst_inv:.1e}, max relative norm change {worst_iso:.1e}, {time}"),
    )
}

fn partial_consistency() -> Outcome {
    let n = 1024;
    let mut g = rng::stream(2, "acceptance-rows", 0);
    let mut mismatches = 0;
    for case in 0..50u64 {
        let a = gaussian_matrix(n, 4, case);
        let signs = sample_signs(n, case);
        let count = [1, 16, 256][case as usize % 3];
        let rows: Vec<usize> = (0..count).map(|_| g.random_range(0..n)).collect();
        let full = apply_rht(&a, &signs).unwrap();
        let part = partial_rht_rows(&a, &signs, &rows).unwrap();
        let exact = rows
            .iter()
            .enumerate()
            .all(|(t, &i)| (0..4).all(|j| part[(t, j)].to_bits() == full[(i, j)].to_bits()));
        if !exact {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} of 50 cases differ from the full transform"))
}

/// `(A^T A)^{-1} A^T b` by Gaussian elimination with partial pivoting.
fn normal_equations_oracle(a: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let d = a.cols();
    let mut m: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut row: Vec<f64> = (0..d).map(|j| (0..a.rows()).map(|k| a[(k, i)] * a[(k, j)]).sum()).collect();
            row.push((0..a.rows()).map(|k| a[(k, i)] * b[k]).sum());
            row
        })
        .collect();
    for c in 0..d {
        let p = (c..d).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        let (top, rest) = m.split_at_mut(c + 1);
        let pivot = &top[c];
        for row in rest {
            let f = row[c] / pivot[c];
            for (x, p) in row[c..].iter_mut().zip(&pivot[c..]) {
                *x -= f * p;
            }
        }
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let s: f64 = (i + 1..d).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][d] - s) / m[i][i];
    }
    x
}

fn exact_solver_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for s in 0..100 {
        let a = gaussian_matrix(60, 6, 500 + s);
        let b = gaussian_matrix(60, 1, 900 + s).into_vec();
        let x = solve_exact_ls(&a, &b).unwrap();
        let want = normal_equations_oracle(&a, &b);
        let diff: Vec<f64> = x.iter().zip(&want).map(|(p, q)| p - q).collect();
        worst = worst.max(norm2(&diff) / norm2(&want));
    }
    outcome(worst <= 1e-7, format!("max relative difference {worst:.1e}"))
}

fn fixed_basis() -> DenseMatrix {
    orthonormal_basis(&gaussian_matrix(1024, 8, 4242)).unwrap()
}

fn energy_spreading() -> Outcome {
    let start = Instant::now();
    let (n, d) = (1024, 8);
    let u = fixed_basis();
    let cap = 2.0 * d as f64 * (40.0 * n as f64 * d as f64).ln() / n as f64;
    let hits = (0..200)
        .filter(|&s| {
            let hdu = apply_rht(&u, &sample_signs(n, s)).unwrap();
            (0..n).all(|i| hdu.row(i).iter().map(|x| x * x).sum::<f64>() <= cap)
        })
        .count();
    let (fast, time) = within(Duration::from_secs(30), start);
    outcome(hits >= 190 && fast, format!("{hits}/200 seeds under {cap:.4} (need 190), {time}"))
}

fn min_sigma_sq(m: &DenseMatrix) -> f64 {
    gram_singular_values(m).unwrap().last().unwrap().powi(2)
}

fn embedding_ensemble() -> Outcome {
    let n = 1024;
    let u = fixed_basis();
    let floor = std::f64::consts::FRAC_1_SQRT_2;
    let sampled = (0..100)
        .filter(|&s| {
            let plan = draw_sampling_plan(n, 256, s).unwrap();
            let xu = partial_rht_rows(&u, &sample_signs(n, s), plan.indices()).unwrap().scaled(plan.scale());
            min_sigma_sq(&xu) >= floor
        })
        .count();
    let q = practical_q(n, 8);
    let projected = (0..100)
        .filter(|&s| {
            let t = draw_sparse_projection(256, n, q, s).unwrap();
            let xu = apply_sparse_projection(&t, &apply_rht(&u, &sample_signs(n, s)).unwrap()).unwrap();
            min_sigma_sq(&xu) >= floor
        })
        .count();
    outcome(
        sampled >= 90 && projected >= 90,
        format!("sampling r = 256: {sampled}/100, projection k = 256, q = {q}: {projected}/100 (need 90 each)"),
    )
}

struct EndToEnd {
    success: [usize; 2],
    residual_bound_violations: [usize; 2],
    forward_bound_violations: [usize; 2],
    both_conditions: [usize; 2],
    elapsed: Duration,
}

fn end_to_end_ensemble() -> EndToEnd {
    let start = Instant::now();
    let eps = 0.5;
    let params = SketchParams::practical(1024, 8, eps).unwrap().with_r(256).with_k(128);
    let opts = SolveOptions::with_diagnostics();
    let mut e = EndToEnd {
        success: [0; 2],
        residual_bound_violations: [0; 2],
        forward_bound_violations: [0; 2],
        both_conditions: [0; 2],
        elapsed: Duration::ZERO,
    };
    for s in 0..100 {
        let spec = ProblemSpec {
            kind: ProblemKind::GaussianIncoherent,
            n: 1024,
            d: 8,
            kappa_target: 10.0,
            gamma_target: 0.9,
            seed: s,
        };
        let p = gen_problem(&spec).unwrap();
        let exact = p.exact().unwrap().clone();
        let runs = [
            sketch_solve_sampling(&p, &params, s, &opts).unwrap(),
            sketch_solve_projection(&p, &params, s, &opts).unwrap(),
        ];
        for (m, out) in runs.iter().enumerate() {
            let z = exact.residual;
            if out.residual <= (1.0 + eps) * z {
                e.success[m] += 1;
            }
            let diag = out.diagnostics.as_ref().unwrap();
            if !(diag.embedding_ok && diag.cross_term_ok) {
                continue;
            }
            e.both_conditions[m] += 1;
            let dx: Vec<f64> = exact.x.iter().zip(&out.x_tilde).map(|(a, b)| a - b).collect();
            let dx = norm2(&dx);
            if out.residual > (1.0 + eps) * z || dx > eps.sqrt() * z / diag.sigma_min {
                e.residual_bound_violations[m] += 1;
            }
            let tangent = (1.0 / (diag.gamma * diag.gamma) - 1.0).sqrt();
            if dx > eps.sqrt() * diag.kappa * tangent * norm2(&exact.x) {
                e.forward_bound_violations[m] += 1;
            }
        }
    }
    e.elapsed = start.elapsed();
    e
}

fn end_to_end(e: &EndToEnd) -> Outcome {
    let fast = e.elapsed < Duration::from_secs(120);
    outcome(
        e.success.iter().all(|&s| s >= 80) && e.residual_bound_violations == [0, 0] && fast,
        format!(
            "residual <= 1.5 Z: sampling {}/100, projection {}/100 (need 80); bound violations with both conditions: {}/{} and {}/{}; {:.2}s of 120s",
            e.success[0],
            e.success[1],
            e.residual_bound_violations[0],
            e.both_conditions[0],
            e.residual_bound_violations[1],
            e.both_conditions[1],
            e.elapsed.as_secs_f64()
        ),
    )
}

fn forward_bound(e: &EndToEnd) -> Outcome {
    outcome(
        e.forward_bound_violations == [0, 0],
        format!(
            "violations with both conditions: sampling {}/{}, projection {}/{}",
            e.forward_bound_violations[0], e.both_conditions[0], e.forward_bound_violations[1], e.both_conditions[1]
        ),
    )
}

fn column_sampling() -> Outcome {
    let start = Instant::now();
    let (a, _) = rescale_to_unit_spectral_norm(&gaussian_matrix(8, 100, 77)).unwrap();
    if let Err(e) = check_bound_hypotheses(&a) {
        return outcome(false, format!("hypotheses rejected: {e}"));
    }
    let frob_sq = a.frobenius_norm().powi(2);
    let c = c_lower_bound(frob_sq, 1.0, 0.5, 0.1).unwrap();
    let sampler = ColumnSampler::norm_squared(&a, c).unwrap();
    let hits = (0..50).filter(|&s| gram_error(&a, &sampled_gram(&a, &sampler, s).unwrap()).unwrap() <= 0.5).count();
    let (fast, time) = within(Duration::from_secs(60), start);
    outcome(hits >= 45 && fast, format!("||A||_F^2 = {frob_sq:.3}, c = {c}: {hits}/50 seeds within 0.5 (need 45), {time}"))
}

fn moment_bound() -> Outcome {
    let start = Instant::now();
    let (n, k, q) = (64usize, 16usize, 0.25f64);
    let unit = |v: Vec<f64>| {
        let s = norm2(&v);
        v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
    };
    let flat = vec![1.0 / 8.0; n];
    let alternating: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.125 } else { -0.125 }).collect();
    let wave = unit((0..n).map(|i| 1.0 + 0.5 * (i as f64 * 0.3).cos()).collect());
    let peaked = unit((0..n).map(|i| if i < 4 { 3.0 } else { 1.0 }).collect());
    let pairs = [(flat.clone(), flat), (wave.clone(), alternating), (peaked, wave)];
    let sqrt_q = q.sqrt();
    assert!(pairs.iter().all(|(x, _)| x.iter().all(|v| v.abs() <= sqrt_q)));

    let mut sums = [0.0; 3];
    let seeds = 20_000;
    for s in 0..seeds {
        let t = draw_sparse_projection(k, n, q, s).unwrap();
        for (m, (x, y)) in pairs.iter().enumerate() {
            let tx = project_vector(&t, x).unwrap();
            let ty = project_vector(&t, y).unwrap();
            let delta: f64 = tx.iter().zip(&ty).map(|(a, b)| a * b).sum::<f64>()
                - x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
            sums[m] += delta * delta;
        }
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for (m, (x, y)) in pairs.iter().enumerate() {
        let nx: f64 = x.iter().map(|v| v * v).sum();
        let ny: f64 = y.iter().map(|v| v * v).sum();
        let cross: f64 = x.iter().zip(y).map(|(a, b)| a * a * b * b).sum();
        let bound = 2.0 / k as f64 * nx * ny + cross / (k as f64 * q);
        let est = sums[m] / seeds as f64;
        pass &= est <= 1.1 * bound;
        parts.push(format!("{:.3}", est / bound));
    }
    let (fast, time) = within(Duration::from_secs(60), start);
    outcome(pass && fast, format!("estimate / bound = [{}] (need <= 1.1), {time}", parts.join(", ")))
}

fn bits(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

fn outcome_bits(o: &SketchOutcome) -> Vec<u64> {
    let mut v = bits(&o.x_tilde);
    v.push(o.residual.to_bits());
    v.push(o.effective_seed);
    if let Some(d) = &o.diagnostics {
        v.extend(bits(&d.sigma_xu));
        v.push(d.cross_term.to_bits());
    }
    v
}

/// Every randomized output, as raw bits, for one seed and size.
fn randomized_outputs(seed: u64, n: usize, d: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let padded = n.next_power_of_two();
    let signs = sample_signs(padded, seed);
    out.push(signs.signs().iter().map(|&s| s as u64).collect());
    let plan = draw_sampling_plan(padded, n / 2, seed).unwrap();
    out.push(plan.indices().iter().map(|&i| i as u64).collect());
    for q in [0.01, 0.3] {
        let t = draw_sparse_projection(16, n, q, seed).unwrap();
        out.push(t.entries().iter().map(|e| ((e.row as u64) << 33) | ((e.col as u64) << 1) | e.negative as u64).collect());
    }
    let a = gaussian_matrix(padded, d, seed);
    out.push(bits(a.as_slice()));
    out.push(bits(partial_rht_rows(&a, &signs, plan.indices()).unwrap().as_slice()));

    let spec = ProblemSpec { kind: ProblemKind::CoherentSpiked, n, d, kappa_target: 50.0, gamma_target: 0.7, seed };
    let p = gen_problem(&spec).unwrap();
    out.push(bits(p.a().as_slice()));
    out.push(bits(p.b()));
    let params = SketchParams::practical(n, d, 0.5).unwrap();
    let opts = SolveOptions::with_diagnostics();
    out.push(outcome_bits(&sketch_solve_sampling(&p, &params, seed, &opts).unwrap()));
    out.push(outcome_bits(&sketch_solve_projection(&p, &params, seed, &opts).unwrap()));
    let best = best_of(3, seed, |s| sketch_solve_sampling(&p, &params, s, &SolveOptions::default())).unwrap();
    out.push(outcome_bits(&best));

    let (m, _) = rescale_to_unit_spectral_norm(&gaussian_matrix(d, 3 * d, seed)).unwrap();
    let sampler = ColumnSampler::norm_squared(&m, 50).unwrap();
    out.push(bits(exactly_c(&m, &sampler, seed).unwrap().as_slice()));
    let gram = sampled_gram(&m, &sampler, seed).unwrap();
    out.push(bits(gram.as_slice()));
    out.push(vec![spectral_norm_sym(&gram).unwrap().to_bits()]);
    out
}

fn report_text(seed: u64) -> String {
    let text = format!(
        r#"{{"specs": [{{"kind": "gaussian_incoherent", "n": 300, "d": 5, "kappa_target": 20, "gamma_target": 0.8, "seed": {seed}}},
                      {{"kind": "ill_conditioned", "n": 128, "d": 3, "kappa_target": 1000, "gamma_target": 0.95, "seed": {seed}}}],
            "methods": ["exact", "sampling", "projection", "cgnr"], "seeds": 3, "seed": {seed}, "best_of": 2}}"#
    );
    let report = run_experiment(&ExperimentConfig::parse(&text).unwrap()).unwrap().without_timings();
    report.to_csv().unwrap() + &report.to_json().unwrap()
}

fn determinism() -> Outcome {
    let mut cases = 0;
    let mut differing = 0;
    for seed in [0, 1, 17, u64::MAX] {
        for (n, d) in [(64, 2), (300, 5), (1024, 8)] {
            cases += 1;
            if randomized_outputs(seed, n, d) != randomized_outputs(seed, n, d) {
                differing += 1;
            }
        }
        cases += 1;
        if report_text(seed) != report_text(seed) {
            differing += 1;
        }
    }
    outcome(differing == 0, format!("{differing} of {cases} seed/size cases differ between runs"))
}

fn perf(enabled: bool) -> Option<Outcome> {
    if !enabled {
        return None;
    }
    let r = perf_check(1 << 17, 30, 5, 11).unwrap();
    Some(outcome(
        r.ok(),
        format!("median sampling pipeline {:.3}s vs exact QR {:.3}s", r.sketch.as_secs_f64(), r.exact.as_secs_f64()),
    ))
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let perf_enabled = args.iter().any(|a| a == "--perf") || std::env::var_os("LSKETCH_PERF").is_some();

    let mut failed = 0;
    let mut report = |id: u32, name: &str, o: Option<Outcome>| match o {
        Some(o) => {
            println!("criterion {id:>2} {:<40} {}  {}", name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
            if !o.pass {
                failed += 1;
            }
        }
        None => println!("criterion {id:>2} {name:<40} SKIP  opt-in; run with --perf or LSKETCH_PERF=1"),
    };
    report(1, "FWHT involution and isometry", Some(fwht_correctness()));
    report(2, "partial transform bit-exact", Some(partial_consistency()));
    report(3, "exact solver vs normal equations", Some(exact_solver_oracle()));
    report(4, "energy spreading ensemble", Some(energy_spreading()));
    report(5, "subspace embedding ensemble", Some(embedding_ensemble()));
    let e = end_to_end_ensemble();
    report(6, "end-to-end residual and error bounds", Some(end_to_end(&e)));
    report(7, "forward error bound", Some(forward_bound(&e)));
    report(8, "column sampling spectral error", Some(column_sampling()));
    report(9, "sparse projection moment bound", Some(moment_bound()));
    report(10, "determinism", Some(determinism()));
    report(11, "sampling faster than exact QR", perf(perf_enabled));

    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
