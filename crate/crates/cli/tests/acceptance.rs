use freebdy::curve::w12_distance;
use freebdy::scenario::Scenario;
use freebdy::shortening::{iterate_psi, psi, IterationOutcome, StopRule};
use freebdy::PsiConfig;
use serde_json::Value;
use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

const BIN: &str = env!("CARGO_BIN_EXE_freebdy");

struct Run {
    code: i32,
    elapsed: Duration,
    stdout: String,
}

fn freebdy(args: &[&str]) -> Run {
    let start = Instant::now();
    let out = Command::new(BIN).args(args).env("FREEBDY_LOG", "error").output().expect("spawn freebdy");
    Run {
        code: out.status.code().unwrap_or(-1),
        elapsed: start.elapsed(),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
    }
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("read report")).expect("parse report")
}

fn num(v: &Value, ptr: &str) -> f64 {
    v.pointer(ptr).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

struct Verdict {
    failed: usize,
}

impl Verdict {
    fn record(&mut self, id: usize, title: &str, ok: bool, detail: String) {
        let line = format!("{} criterion {id} ({title}): {detail}", if ok { "PASS" } else { "FAIL" });
        println!("{line}");
        self.failed += usize::from(!ok);
    }
}

fn certificate_ok(report: &Value) -> (bool, String) {
    let res = num(report, "/best/certificate/interior_residual");
    let orth = num(report, "/best/certificate/boundary_orthogonality");
    let trivial = report.pointer("/best/certificate/trivial").and_then(Value::as_bool).unwrap_or(true);
    (res < 1e-2 && orth < 1e-2 && !trivial, format!("residual {res:.2e}, orthogonality {orth:.2e} rad"))
}

struct Target {
    width: f64,
    length: f64,
    budget_secs: f64,
}

fn minmax_criterion(v: &mut Verdict, id: usize, title: &str, report: &Value, run: &Run, target: Target) {
    let Target { width, length, budget_secs: budget } = target;
    let w = num(report, "/width/value");
    let len = num(report, "/best/length");
    let (cert, cert_detail) = certificate_ok(report);
    let secs = run.elapsed.as_secs_f64();
    let ok = run.code == 0 && rel(w, width) < 1e-2 && rel(len, length) < 1e-2 && cert && secs <= budget;
    v.record(
        id,
        title,
        ok,
        format!(
            "exit {}, width {w:.4} vs {width:.4} (rel {:.2e}), best length {len:.4} vs {length:.4} (rel {:.2e}), {cert_detail}, {secs:.1} s (limit {budget} s)",
            run.code,
            rel(w, width),
            rel(len, length)
        ),
    );
}

/// Every δ = 1e-2·W slice lies within 0.1 of the family and the profile shrinks with δ.
fn delta_check(report: &Value) -> (bool, String) {
    let slices = report["almost_maximal"].as_array().cloned().unwrap_or_default();
    let worst = slices.iter().map(|s| s["analytic_distance"].as_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let profile: Vec<(f64, f64)> = report["delta_profile"]
        .as_array()
        .map(|a| a.iter().map(|l| (num(l, "/delta_rel"), l["max_analytic_distance"].as_f64().unwrap_or(f64::INFINITY))).collect())
        .unwrap_or_default();
    let monotone = profile.len() == 3 && profile.windows(2).all(|w| w[1].1 <= w[0].1);
    let shown: Vec<String> = profile.iter().map(|(d, m)| format!("{d:.0e}:{m:.3e}")).collect();
    (
        !slices.is_empty() && worst < 0.1 && monotone,
        format!("{} slices, worst {worst:.3e}, profile [{}]", slices.len(), shown.join(", ")),
    )
}

fn suite(dir: &Path, suite: &str, manifold: Option<&str>, trials: usize, seed: u64) -> (Run, Vec<Value>) {
    let out = dir.join(format!("{suite}-{}-{seed}", manifold.unwrap_or("any")));
    let (trials, seed) = (trials.to_string(), seed.to_string());
    let mut args = vec!["validate", "--suite", suite, "--trials", &trials, "--seed", &seed, "--out", out.to_str().unwrap()];
    if let Some(m) = manifold {
        args.extend(["--manifold", m]);
    }
    let run = freebdy(&args);
    let mut reports: Vec<(String, Value)> = std::fs::read_dir(&out)
        .map(|rd| {
            rd.filter_map(Result::ok).map(|e| (e.file_name().to_string_lossy().into_owned(), read_json(&e.path()))).collect()
        })
        .unwrap_or_default();
    reports.sort_by(|a, b| a.0.cmp(&b.0));
    (run, reports.into_iter().map(|r| r.1).collect())
}

fn failures(r: &Value) -> u64 {
    r["failure_count"].as_u64().unwrap_or(u64::MAX)
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("tempdir");
    let dir = tmp.path();
    let mut v = Verdict { failed: 0 };

    let sphere_dir = dir.join("sphere-t1");
    let sphere = freebdy(&[
        "minmax",
        "--scenario",
        "sphere-equator",
        "--slices",
        "64",
        "--L",
        "32",
        "--threads",
        "1",
        "--out",
        sphere_dir.to_str().unwrap(),
    ]);
    let sphere_report = read_json(&sphere_dir.join("report.json"));
    minmax_criterion(
        &mut v,
        1,
        "sphere-equator min-max",
        &sphere_report,
        &sphere,
        Target { width: 256.0 * PI * PI, length: 16.0 * PI, budget_secs: 60.0 },
    );

    let disk_dir = dir.join("disk");
    let disk = freebdy(&["minmax", "--scenario", "disk-circle", "--slices", "64", "--out", disk_dir.to_str().unwrap()]);
    let disk_report = read_json(&disk_dir.join("report.json"));
    minmax_criterion(
        &mut v,
        2,
        "disk-circle min-max",
        &disk_report,
        &disk,
        Target { width: 1024.0, length: 32.0, budget_secs: 30.0 },
    );

    let (s_ok, s_detail) = delta_check(&sphere_report);
    let (d_ok, d_detail) = delta_check(&disk_report);
    v.record(3, "almost-maximal slices near the geodesic family", s_ok && d_ok, format!("sphere {s_detail}; disk {d_detail}"));

    let (psi_run, psi_reports) = suite(dir, "psi", None, 1000, 7);
    let chain_ok = psi_reports.len() == 2
        && psi_reports.iter().all(|r| {
            r["cases"].as_u64().unwrap_or(0) >= 1000 && failures(r) == 0 && num(r, "/constants/worst_energy_chain") <= 1e-9
        });
    let chain: Vec<String> = psi_reports
        .iter()
        .map(|r| {
            format!("{} cases, worst chain {:.2e}, failures {}", r["cases"], num(r, "/constants/worst_energy_chain"), failures(r))
        })
        .collect();
    v.record(4, "stage-energy chain", psi_run.code == 0 && chain_ok, chain.join("; "));

    let start = Instant::now();
    let (w_run, w) = suite(dir, "wirtinger", None, 10_000, 7);
    let (h_run, h) = suite(dir, "holder", None, 10_000, 7);
    let (p_run, p) = suite(dir, "perp", None, 10_000, 7);
    let (u_run, u) = suite(dir, "perp", Some("unit-sphere"), 10_000, 7);
    let suite_secs = start.elapsed().as_secs_f64();
    let wirt = w.first().cloned().unwrap_or(Value::Null);
    let wirt_ok = w_run.code == 0
        && failures(&wirt) == 0
        && num(&wirt, "/constants/worst_both_ends") <= 1.0
        && num(&wirt, "/constants/worst_one_end") <= 1.0
        && num(&wirt, "/constants/sine_witness") >= 0.999;
    let holder_ok = h_run.code == 0 && h.len() == 1 && failures(&h[0]) == 0;
    let perp_ok = p_run.code == 0 && p.len() == 2 && p.iter().all(|r| failures(r) == 0);
    let unit_ok = u_run.code == 1 && u.len() == 1 && failures(&u[0]) >= 1 && failures(&u[0]) != u64::MAX;
    v.record(
        5,
        "inequality suites",
        wirt_ok && holder_ok && perp_ok && unit_ok && suite_secs <= 60.0,
        format!(
            "wirtinger sine {:.6} both {:.6} one {:.6}; holder {}; perp conforming failures {:?}; unit sphere failures {}; {suite_secs:.1} s",
            num(&wirt, "/constants/sine_witness"),
            num(&wirt, "/constants/worst_both_ends"),
            num(&wirt, "/constants/worst_one_end"),
            if holder_ok { "ok" } else { "failed" },
            p.iter().map(failures).collect::<Vec<_>>(),
            u.first().map_or(0, failures)
        ),
    );

    let mut per_key: Vec<(String, Vec<f64>)> = Vec::new();
    let mut conv_ok = true;
    for seed in 1..=5 {
        let (run, reports) = suite(dir, "convexity", None, 1000, seed);
        conv_ok &= run.code == 0 && reports.len() == 2;
        for (r, m) in reports.iter().zip(["disk", "sphere"]) {
            conv_ok &= failures(r) == 0;
            for key in ["C_hat", "C_hat_prime"] {
                let name = format!("{m}.{key}");
                let value = num(r, &format!("/constants/{key}"));
                match per_key.iter_mut().find(|(n, _)| *n == name) {
                    Some((_, vals)) => vals.push(value),
                    None => per_key.push((name, vec![value])),
                }
            }
        }
    }
    let spreads: Vec<String> = per_key
        .iter()
        .map(|(name, vals)| {
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(0.0, f64::max);
            conv_ok &= vals.len() == 5 && vals.iter().all(|x| x.is_finite() && *x > 0.0) && hi < 2.0 * lo;
            format!("{name} in [{lo:.4}, {hi:.4}]")
        })
        .collect();
    v.record(6, "convexity constants", conv_ok, spreads.join(", "));

    let s = Scenario::sphere_equator();
    let meridian = s.family.expect("meridian family").member(0.0, 0, 512);
    let cfg = PsiConfig::new(32).expect("grid");
    let moved = psi(&meridian, &s, &cfg).map(|(out, _)| w12_distance(&meridian, &out).expect("same grid"));
    let log = iterate_psi(&meridian, &s, &cfg, &StopRule::default());
    let (moved_ok, moved_detail) = match moved {
        Ok(d) => (d < 1e-4, format!("w12 move {d:.3e}")),
        Err(e) => (false, format!("psi failed: {e}")),
    };
    let (iter_ok, iter_detail) = match log.map(|(_, l)| l.outcome) {
        Ok(IterationOutcome::Converged { iterations }) => (iterations <= 2, format!("converged in {iterations} iteration(s)")),
        Ok(IterationOutcome::MaxIterations { iterations }) => (false, format!("not converged after {iterations}")),
        Err(e) => (false, format!("iterate_psi failed: {e}")),
    };
    v.record(7, "meridian fixed point", moved_ok && iter_ok, format!("{moved_detail}, {iter_detail}"));

    let sphere8_dir = dir.join("sphere-t8");
    let sphere8 = freebdy(&[
        "minmax",
        "--scenario",
        "sphere-equator",
        "--slices",
        "64",
        "--L",
        "32",
        "--threads",
        "8",
        "--out",
        sphere8_dir.to_str().unwrap(),
    ]);
    let a = std::fs::read(sphere_dir.join("report.json")).unwrap_or_default();
    let b = std::fs::read(sphere8_dir.join("report.json")).unwrap_or_default();
    let csv_same = std::fs::read(sphere_dir.join("sweeps.csv")).ok() == std::fs::read(sphere8_dir.join("sweeps.csv")).ok();
    v.record(
        8,
        "determinism across thread counts",
        sphere8.code == 0 && !a.is_empty() && a == b,
        format!("report.json {} bytes, identical {}, sweeps.csv identical {csv_same}", a.len(), a == b),
    );

    if !sphere.stdout.is_empty() {
        print!("{}", sphere.stdout.lines().map(|l| format!("  sphere: {l}\n")).collect::<String>());
    }
    println!("{} of 8 criteria passed", 8 - v.failed);
    if v.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
