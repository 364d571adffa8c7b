//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when the set of failing criteria differs from `KNOWN_FAILURES`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use idprior::config::ConjugateToy;
use idprior::experiments::conjugate_problem;
use idprior_core::distributions::{GpqParams, JumpLaw, ScalarIdTriplet};
use idprior_core::grid::GridField2D;
use idprior_core::levy_process::{level_set_perimeter, sample_bv_field_2d, sample_cpp_path, GpSampler2D, GpSpec, JumpPath};
use idprior_core::metrics::distance_estimate;
use idprior_core::rng::{RngState, SimRng};
use rand::Rng;
use serde_json::Value;
use statrs::function::gamma::{gamma_lr, ln_gamma};

/// Criteria that fail on a finite grid; see the decisions ledger.
const KNOWN_FAILURES: &[u32] = &[4];

const EXPERIMENTS: [&str; 7] = [
    "sample_prior",
    "deconv_gpq",
    "deconv_bv",
    "quadratic",
    "stability_suite",
    "consistency_suite",
    "map_bench",
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn rng(seed: u64, stream: u64) -> SimRng {
    RngState::new(seed, stream).rng()
}

fn half_line(f: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi, h) = (-200.0, 60.0, 2e-3);
    let n = ((hi - lo) / h) as usize;
    let mut s = 0.0;
    for i in 0..=n {
        let x = lo + i as f64 * h;
        let t = x.exp();
        let v = f(t) * t;
        if v.is_finite() {
            s += if i == 0 || i == n { 0.5 * v } else { v };
        }
    }
    s * h
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

fn ks(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let s = sorted(sample);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let c = cdf(x);
        d.max((c - i as f64 / n).abs()).max(((i + 1) as f64 / n - c).abs())
    })
}

fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Scale making `G_{p,q}` unit-variance.
fn gpq_alpha(p: f64, q: f64) -> f64 {
    (0.5 * (ln_gamma(q / p) - ln_gamma((q + 2.0) / p))).exp()
}

/// `|T/α|^p ~ Gamma(q/p)` for `T ~ G_{p,q}`.
fn gpq_cdf(p: f64, q: f64, t: f64) -> f64 {
    let a = gpq_alpha(p, q);
    0.5 + 0.5 * t.signum() * gamma_lr(q / p, (t.abs() / a).powf(p))
}

fn criterion_1() -> Outcome {
    let grid = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0];
    let (mut norm_err, mut var_err, mut worst_ks) = (0.0f64, 0.0f64, 0.0f64);
    for (i, &p) in grid.iter().enumerate() {
        for (j, &q) in grid.iter().enumerate() {
            let g = GpqParams::new(p, q).unwrap();
            let mass = 2.0 * half_line(|t| g.pdf(t));
            let var = 2.0 * half_line(|t| t * t * g.pdf(t));
            norm_err = norm_err.max((mass - 1.0).abs());
            var_err = var_err.max((var - 1.0).abs());
            let xs = g.sample(100_000, &mut rng(1, (6 * i + j) as u64));
            worst_ks = worst_ks.max(ks(&xs, |t| gpq_cdf(p, q, t)));
        }
    }
    Outcome {
        pass: norm_err <= 1e-6 && var_err <= 1e-6 && worst_ks < 0.01,
        detail: format!(
            "G_pq laws on a 6x6 grid: max |mass-1| = {norm_err:.1e}, max |var-1| = {var_err:.1e} (limit 1e-6), max KS = {worst_ks:.4} (limit 0.01)"
        ),
    }
}

/// Characteristic function of `m + σZ + Σ_{k≤K} J_k`, `K ~ Poisson(c)`, for
/// normal or Laplace jumps.
fn id_char_fn(m: f64, sigma2: f64, c: f64, law: &JumpLaw, s: f64) -> (f64, f64) {
    let (jr, ji) = match *law {
        JumpLaw::Normal { mean, std } => {
            let a = (-0.5 * std * std * s * s).exp();
            (a * (mean * s).cos(), a * (mean * s).sin())
        }
        JumpLaw::Laplace { scale } => (1.0 / (1.0 + scale * scale * s * s), 0.0),
        _ => unreachable!(),
    };
    let log_mod = -0.5 * sigma2 * s * s + c * (jr - 1.0);
    let arg = m * s + c * ji;
    (log_mod.exp() * arg.cos(), log_mod.exp() * arg.sin())
}

fn criterion_2() -> Outcome {
    let laws = [
        (0.0, 0.25, 2.0, JumpLaw::standard_normal()),
        (0.3, 0.0, 1.0, JumpLaw::standard_laplace()),
        (-0.2, 0.1, 3.0, JumpLaw::Normal { mean: 0.5, std: 0.3 }),
    ];
    let n = 100_000;
    let mut ecf_err = 0.0f64;
    for (i, (m, s2, c, law)) in laws.iter().enumerate() {
        let t = ScalarIdTriplet::new(*m, *s2, *c, *law).unwrap();
        let xs = t.sample(n, &mut rng(2, i as u64));
        for k in 0..101 {
            let s = -5.0 + 0.1 * k as f64;
            let (cr, ci) = xs.iter().fold((0.0, 0.0), |(a, b), x| (a + (s * x).cos(), b + (s * x).sin()));
            let (wr, wi) = id_char_fn(*m, *s2, *c, law, s);
            ecf_err = ecf_err.max((cr / n as f64 - wr).hypot(ci / n as f64 - wi));
        }
    }
    let t = ScalarIdTriplet::new(1.0, 0.5, 3.0, JumpLaw::Normal { mean: 0.5, std: 1.0 }).unwrap();
    let mut worst_ks = 0.0f64;
    for (j, parts) in [2u32, 4, 8].into_iter().enumerate() {
        let root = t.root(parts);
        let mut r = rng(2, 10 + j as u64);
        let sums: Vec<f64> = (0..n).map(|_| (0..parts).map(|_| root.draw(&mut r)).sum()).collect();
        let direct = t.sample(n, &mut rng(2, 20 + j as u64));
        worst_ks = worst_ks.max(two_sample_ks(&sums, &direct));
    }
    let limit = 4.0 / (n as f64).sqrt();
    Outcome {
        pass: ecf_err < limit && worst_ks < 0.02,
        detail: format!(
            "ID laws: max ECF error = {ecf_err:.4} (limit {limit:.4}), n-fold root sum KS = {worst_ks:.4} (limit 0.02)"
        ),
    }
}

fn partition_sum(p: &JumpPath, pts: &[f64]) -> f64 {
    pts.windows(2).map(|w| (p.eval(w[1]) - p.eval(w[0])).abs()).sum()
}

/// Best variation over random partitions plus one that separates all jumps.
fn partition_supremum(p: &JumpPath, r: &mut SimRng) -> f64 {
    let mut best = 0.0f64;
    for _ in 0..2000 {
        let k = r.random_range(1..400);
        let mut pts: Vec<f64> = (0..k).map(|_| r.random::<f64>()).collect();
        pts.extend([0.0, 1.0]);
        pts.sort_by(|a, b| a.total_cmp(b));
        best = best.max(partition_sum(p, &pts));
    }
    let mut pts = vec![0.0];
    pts.extend_from_slice(p.times());
    pts.push(1.0);
    best.max(partition_sum(p, &pts))
}

fn criterion_3() -> Outcome {
    let law = JumpLaw::standard_normal();
    let mut r = rng(3, 0);
    let tv: Vec<f64> = (0..100_000).map(|_| sample_cpp_path(3.0, &law, &mut r).unwrap().tv()).collect();
    let (m, se) = mean_se(&tv);
    let want = 3.0 * (2.0 / PI).sqrt();
    let mut r = rng(3, 1);
    let mut exact = 0;
    let tested = 50;
    for _ in 0..tested {
        let p = sample_cpp_path(4.0, &law, &mut r).unwrap();
        let sup = partition_supremum(&p, &mut r);
        exact += ((sup - p.tv()).abs() <= 1e-12 * (1.0 + p.tv())) as usize;
    }
    Outcome {
        pass: (m - want).abs() < 4.0 * se && exact == tested,
        detail: format!(
            "jump paths: E[TV] = {m:.4} +- {se:.4} vs {want:.4} (within 4 SE), TV = partition supremum on {exact}/{tested} paths"
        ),
    }
}

/// Number of distinct counts of arrivals below `g⁺` over grid nodes.
fn resolved_levels(gp: &[f64], arrivals: &[f64]) -> usize {
    let mut counts: Vec<usize> = gp.iter().map(|g| arrivals.iter().filter(|a| **a <= g.max(0.0)).count()).collect();
    counts.sort_unstable();
    counts.dedup();
    counts.len()
}

fn criterion_4() -> Outcome {
    let gp = GpSampler2D::new(GpSpec::new(10.0, 32)).unwrap();
    let law = JumpLaw::standard_normal();
    let mut r = rng(4, 0);
    let draws = 500;
    let (mut literal, mut resolved) = (0, 0);
    for _ in 0..draws {
        let d = sample_bv_field_2d(&gp, 2.0, &law, &mut r).unwrap();
        literal += (d.distinct_value_count() == d.arrival_count() + 1) as usize;
        resolved += (d.distinct_value_count() == resolved_levels(d.gp.values(), &d.arrivals)) as usize;
    }
    let disk = GridField2D::from_fn(64, |x, y| 0.25 - ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt());
    let rel = (level_set_perimeter(&disk, 0.0) / (2.0 * PI * 0.25) - 1.0).abs();
    Outcome {
        pass: literal == draws && rel < 0.05,
        detail: format!(
            "2D BV field: distinct = arrivals + 1 on {literal}/{draws} draws (required: all), grid-resolved level count on {resolved}/{draws}, circle perimeter error {:.2}% (limit 5%)",
            100.0 * rel
        ),
    }
}

fn gauss_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

fn criterion_5() -> Outcome {
    let mut r = rng(5, 0);
    let (mut hits, mut bounds) = (0, 0);
    let configs = 20u64;
    for i in 0..configs {
        let toy = ConjugateToy {
            gamma: r.random_range(0.5..2.0),
            sigma: r.random_range(0.3..1.0),
            y: r.random_range(-1.0..1.0),
        };
        let v = 1.0 / (1.0 / (toy.gamma * toy.gamma) + 1.0 / (toy.sigma * toy.sigma));
        let m1 = v * toy.y / (toy.sigma * toy.sigma);
        let shift = r.random_range(-1.0..1.0) * v.sqrt();
        let y2 = toy.y + shift * toy.sigma * toy.sigma / v;
        let m2 = v * y2 / (toy.sigma * toy.sigma);
        let a = conjugate_problem(&toy).unwrap();
        let b = a.with_data(vec![y2]).unwrap();
        let d = distance_estimate(&a, &b, 20_000, &RngState::new(5, 1 + i)).unwrap();
        let (lo, hi) = (m1.min(m2) - 12.0 * v.sqrt(), m1.max(m2) + 12.0 * v.sqrt());
        let h2 = 0.5 * simpson(|x| (gauss_pdf(x, m1, v).sqrt() - gauss_pdf(x, m2, v).sqrt()).powi(2), lo, hi, 20_000);
        hits += ((d.hellinger.value - h2.sqrt()).abs() < 4.0 * d.hellinger.se) as usize;
        let (l, u) = d.tv_hellinger_bounds_hold(4.0);
        bounds += (l && u) as usize;
    }
    Outcome {
        pass: hits >= 19 && bounds == configs as usize,
        detail: format!(
            "distance calibration: Hellinger within 4 SE of quadrature on {hits}/{configs} (need 19), TV/Hellinger bounds on {bounds}/{configs} reports"
        ),
    }
}

struct Run {
    summary: Value,
    wall_time: f64,
    csvs: BTreeMap<String, Vec<u8>>,
}

fn run_experiment(root: &Path, name: &str, tag: &str) -> Result<Run, String> {
    let cfg = root.join(format!("{name}.json"));
    fs::write(&cfg, format!(r#"{{"experiment": "{name}", "seed": 1}}"#)).unwrap();
    let out = root.join(format!("{name}-{tag}"));
    let o = Command::new(env!("CARGO_BIN_EXE_idprior"))
        .args(["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--reference"])
        .current_dir(root)
        .env("IDPRIOR_OUTPUT_ROOT", root.join("runs"))
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{name} exited with {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr).trim()));
    }
    let read_json = |f: &str| -> Value { serde_json::from_str(&fs::read_to_string(out.join(f)).unwrap()).unwrap() };
    let mut csvs = BTreeMap::new();
    for entry in fs::read_dir(&out).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            csvs.insert(path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap());
        }
    }
    Ok(Run {
        summary: read_json("summary.json"),
        wall_time: read_json("manifest.json")["wall_time_s"].as_f64().unwrap_or(f64::NAN),
        csvs,
    })
}

fn num(v: &Value, path: &[&str]) -> f64 {
    path.iter().fold(v, |v, k| &v[*k]).as_f64().unwrap_or(f64::NAN)
}

fn criterion_6(run: &Run) -> Outcome {
    let s = &run.summary;
    let deconv = num(s, &["slope_hellinger"]);
    let conj = num(s, &["conjugate", "slope_hellinger"]);
    let pass = (conj - 1.0).abs() <= 0.1 && (0.8..=1.2).contains(&deconv) && run.wall_time < 300.0;
    Outcome {
        pass,
        detail: format!(
            "stability: conjugate slope = {conj:.3} (1 +- 0.1), deconvolution slope = {deconv:.3} (in [0.8, 1.2]), runtime limit 300 s"
        ),
    }
}

fn criterion_7(run: &Run) -> Outcome {
    let s = &run.summary;
    let monotone = s["monotone_up_to_se"].as_bool() == Some(true);
    let ratio = num(s, &["ratio_last_to_first"]);
    let full = num(s, &["full_distance"]);
    Outcome {
        pass: monotone && ratio < 0.25 && full == 0.0 && run.wall_time < 300.0,
        detail: format!(
            "consistency: decreasing up to SE = {monotone}, last/first = {ratio:.4} (limit 0.25), distance at full N = {full}, runtime limit 300 s"
        ),
    }
}

fn criterion_8(run: &Run) -> Outcome {
    let s = &run.summary;
    let f1 = num(s, &["fraction_f1_p_ge_l1"]);
    let off = num(s, &["fraction_off_support_small_ge_0.9"]);
    Outcome {
        pass: f1 >= 0.8 && off >= 0.8 && run.wall_time < 180.0,
        detail: format!(
            "sparse MAP: F1(p=0.5) >= F1(p=1) on {:.0}% of seeds, off-support small on {:.0}% (need 80% each), runtime limit 180 s",
            100.0 * f1,
            100.0 * off
        ),
    }
}

fn failed(detail: String) -> Outcome {
    Outcome { pass: false, detail }
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, Outcome, f64, f64)> = Vec::new();
    let timed = |f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        (o, t.elapsed().as_secs_f64())
    };
    for (id, f, limit) in [
        (1, criterion_1 as fn() -> Outcome, 60.0),
        (2, criterion_2, 60.0),
        (3, criterion_3, 60.0),
        (4, criterion_4, 60.0),
        (5, criterion_5, 120.0),
    ] {
        let (o, secs) = timed(&f);
        results.push((id, o, secs, limit));
    }

    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let mut first = BTreeMap::new();
    let mut mismatched = Vec::new();
    let mut errors = Vec::new();
    for name in EXPERIMENTS {
        match (run_experiment(dir.path(), name, "a"), run_experiment(dir.path(), name, "b")) {
            (Ok(a), Ok(b)) => {
                if a.csvs.is_empty() || a.csvs != b.csvs {
                    mismatched.push(name);
                }
                first.insert(name, a);
            }
            (Err(e), _) | (_, Err(e)) => errors.push(e),
        }
    }
    let repro_secs = t.elapsed().as_secs_f64();
    for (id, name, check) in [
        (6, "stability_suite", criterion_6 as fn(&Run) -> Outcome),
        (7, "consistency_suite", criterion_7),
        (8, "map_bench", criterion_8),
    ] {
        let o = match first.get(name) {
            Some(run) => check(run),
            None => failed(format!("{name} did not run")),
        };
        let secs = first.get(name).map_or(0.0, |r| r.wall_time);
        results.push((id, o, secs, f64::INFINITY));
    }
    let csv_count: usize = first.values().map(|r| r.csvs.len()).sum();
    let repro = if errors.is_empty() && mismatched.is_empty() {
        Outcome {
            pass: true,
            detail: format!("reproducibility: {} experiments run twice in reference mode, {csv_count} CSV files byte-identical", EXPERIMENTS.len()),
        }
    } else {
        failed(format!("reproducibility: differing CSVs in {mismatched:?}, errors {errors:?}"))
    };
    results.push((9, repro, repro_secs, f64::INFINITY));

    let mut failures = Vec::new();
    for (id, o, secs, limit) in &results {
        let pass = o.pass && secs < limit;
        if !pass {
            failures.push(*id);
        }
        let note = if !pass && KNOWN_FAILURES.contains(id) { " [known, see decisions ledger]" } else { "" };
        println!("criterion {id} {} {} ({secs:.1} s){note}", if pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failures == KNOWN_FAILURES {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failing set {failures:?}, expected {KNOWN_FAILURES:?}");
        ExitCode::FAILURE
    }
}
