use crate::args::{Common, ExportArgs, Format, MinmaxArgs, Suite, TightenArgs, ValidateArgs};
use crate::UsageError;
use anyhow::{Context, Result};
use freebdy::corpus::CorpusConfig;
use freebdy::io::{self, CurveDocument, SweepoutDocument};
use freebdy::scenario::{preset, Scenario, ScenarioDescriptor, SweepoutKind, PRESET_NAMES};
use freebdy::shortening::{geodesic_residual, iterate_psi, IterationOutcome, StopRule};
use freebdy::sweepout::{
    default_grid, generate_scenario_sweepout, precondition_sweepout, tighten_sweepout, StopReason, Sweepout, TightenConfig,
    DEFAULT_SAMPLES_PER_SEGMENT, DEFAULT_SLICES,
};
use freebdy::validation::{self, SuiteReport};
use freebdy::{DiscreteCurve, ExecMode, PsiConfig};
use serde::Serialize;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn load_common(common: Common) -> Result<Common> {
    let Some(path) = common.config.clone() else {
        return Ok(common);
    };
    let text = fs::read_to_string(&path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let file: Common = serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?;
    Ok(common.or(file))
}

struct Resolved {
    name: String,
    scenario: Scenario,
    kind: Option<SweepoutKind>,
}

fn resolve_scenario(name: &str) -> Result<Resolved> {
    if let Ok(p) = preset(name) {
        let scenario = Scenario::from_descriptor(&p.descriptor).map_err(|e| usage(e.to_string()))?;
        return Ok(Resolved { name: p.name.to_string(), scenario, kind: p.sweepout });
    }
    let path = Path::new(name);
    if !path.is_file() {
        return Err(usage(format!("unknown scenario `{name}`; built-ins are {}", PRESET_NAMES.join(", "))));
    }
    let text = fs::read_to_string(path)?;
    let descriptor: ScenarioDescriptor =
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid scenario descriptor {name}: {e}")))?;
    let scenario = Scenario::from_descriptor(&descriptor).map_err(|e| usage(e.to_string()))?;
    let kind = [SweepoutKind::Hemisphere, SweepoutKind::Disk, SweepoutKind::Loop]
        .into_iter()
        .find(|k| generate_scenario_sweepout(*k, &scenario, 2, 4).is_ok());
    Ok(Resolved { name: name.to_string(), scenario, kind })
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let n = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err(usage("--threads must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
    Ok(pool.install(f))
}

fn samples_per_segment(c: &Common) -> Result<usize> {
    let sps = c.samples_per_segment.unwrap_or(DEFAULT_SAMPLES_PER_SEGMENT);
    if sps < 2 || !sps.is_multiple_of(2) {
        return Err(usage(format!("--samples-per-segment must be even and at least 2, got {sps}")));
    }
    Ok(sps)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Everything that determines a run.
#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    scenario_name: &'a str,
    scenario: &'a ScenarioDescriptor,
    slices: Option<usize>,
    segments: usize,
    #[serde(rename = "L")]
    l: usize,
    samples_per_segment: usize,
    iters: usize,
    tol: f64,
    seed: u64,
    threads: Option<usize>,
    solver_tol: f64,
    solver_max_iters: usize,
    outputs: Vec<String>,
}

fn out_dir(c: &Common, default: &str) -> Result<PathBuf> {
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from(default));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

pub fn minmax(a: MinmaxArgs) -> Result<ExitCode> {
    let c = load_common(a.common)?;
    let r = resolve_scenario(c.scenario.as_deref().unwrap_or("sphere-equator"))?;
    let kind = r.kind.ok_or_else(|| usage(format!("scenario `{}` has no built-in sweepout", r.name)))?;
    let slices = c.slices.unwrap_or(DEFAULT_SLICES);
    if slices < 2 {
        return Err(usage("--slices must be at least 2"));
    }
    let sps = samples_per_segment(&c)?;
    let l = match c.l {
        Some(l) if l < 2 => return Err(usage("--L must be at least 2")),
        Some(l) => l,
        None => {
            let probe = generate_scenario_sweepout(kind, &r.scenario, slices, 1024).map_err(|e| usage(e.to_string()))?;
            default_grid(&probe)
        }
    };
    let segments = l * sps;
    let psi_cfg = PsiConfig::new(l)?;
    let mut cfg = TightenConfig::new(psi_cfg);
    cfg.max_sweeps = c.iters.unwrap_or(cfg.max_sweeps);
    cfg.width_tol = c.tol.unwrap_or(cfg.width_tol);
    cfg.mode = ExecMode::Parallel;

    let dir = out_dir(&c, "freebdy-out")?;
    let mut outputs = vec!["manifest.json", "report.json", "sweeps.csv", "final_curve.json", "sweepout.json"];
    if a.svg {
        outputs.push("sweepout.svg");
    }
    write_json(
        &dir.join("manifest.json"),
        &RunManifest {
            tool: "freebdy",
            version: env!("CARGO_PKG_VERSION"),
            command: "minmax",
            scenario_name: &r.name,
            scenario: &r.scenario.descriptor,
            slices: Some(slices),
            segments,
            l,
            samples_per_segment: sps,
            iters: cfg.max_sweeps,
            tol: cfg.width_tol,
            seed: c.seed.unwrap_or(0),
            threads: c.threads,
            solver_tol: psi_cfg.solver.tol,
            solver_max_iters: psi_cfg.solver.max_iters,
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        },
    )?;

    let sw = generate_scenario_sweepout(kind, &r.scenario, slices, segments).map_err(|e| usage(e.to_string()))?;
    let w0 = sw.energies().into_iter().fold(0.0, f64::max);
    if w0 > (l * l) as f64 {
        log::warn!("initial width {w0:.3} exceeds L² = {}; consider a larger --L", l * l);
    }
    let scenario = &r.scenario;
    let (tightened, report) = with_threads(c.threads, || -> Result<_> {
        let pre = precondition_sweepout(&sw, scenario, &psi_cfg, cfg.mode)?;
        Ok(tighten_sweepout(&pre, scenario, &cfg)?)
    })??;

    write_json(&dir.join("report.json"), &report)?;
    io::write_records_csv(create(&dir.join("sweeps.csv"))?, &report.sweeps)?;
    let best = report.best.as_ref().map_or(report.width.argmax_index, |b| b.index);
    let curve = &tightened.slices[best];
    let doc = CurveDocument::from_curve(curve).with_certificate(geodesic_residual(curve, scenario));
    write_json(&dir.join("final_curve.json"), &doc)?;
    io::write_sweepout_json(create(&dir.join("sweepout.json"))?, &tightened)?;
    if a.svg {
        let curves: Vec<&DiscreteCurve> = tightened.slices.iter().collect();
        fs::write(dir.join("sweepout.svg"), io::render_svg(&curves, &scenario.surface, Some(best)))?;
    }

    let stop = match report.stop {
        StopReason::AllPointCurves => "all slices are point curves".to_string(),
        StopReason::Converged { sweeps } => format!("converged after {sweeps} sweeps"),
        StopReason::MaxSweeps { sweeps } => format!("stopped at the {sweeps}-sweep limit"),
        StopReason::ContinuityLost { sweep } => format!(
            "stopped before sweep {sweep}: consecutive slices would drift apart beyond {:.3}; rerun with more --slices",
            report.continuity_limit
        ),
    };
    println!("scenario {}: {stop}", r.name);
    println!(
        "width {:.6} (slice {}, t = {})",
        report.width.value,
        report.width.argmax_index,
        tightened.param(report.width.argmax_index)
    );
    if let Some(w) = report.analytic_width {
        println!("analytic width {w:.6}, relative error {:.3e}", (report.width.value - w).abs() / w);
    }
    if let Some(b) = &report.best {
        println!(
            "best slice {}: length {:.6}, interior residual {:.3e}, orthogonality {:.3e} rad{}",
            b.index,
            b.length,
            b.certificate.interior_residual,
            b.certificate.boundary_orthogonality,
            if b.certificate.trivial { " (trivial)" } else { "" }
        );
    }
    println!("artifacts in {}", dir.display());
    Ok(if matches!(report.stop, StopReason::ContinuityLost { .. }) { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn read_curve(path: &Path) -> Result<DiscreteCurve> {
    let f = File::open(path).map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
    io::read_curve_json(std::io::BufReader::new(f)).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn tighten(a: TightenArgs) -> Result<ExitCode> {
    let c = load_common(a.common)?;
    let r = resolve_scenario(c.scenario.as_deref().unwrap_or("sphere-equator"))?;
    let curve = read_curve(&a.input)?;
    r.scenario.check_curve(&curve).map_err(|e| usage(format!("{}: {e}", a.input.display())))?;
    if !r.scenario.endpoints_on_constraint(&curve) {
        return Err(usage(format!("{}: an endpoint is off the constraint submanifold", a.input.display())));
    }
    let k = curve.segments();
    let sps = samples_per_segment(&c)?;
    let l = c.l.unwrap_or(k / sps);
    if l < 2 || k % (2 * l) != 0 {
        return Err(usage(format!("curve has {k} segments, which is not a multiple of 2L for L = {l}")));
    }
    let psi_cfg = PsiConfig::new(l)?;
    let stop = StopRule {
        max_iters: c.iters.unwrap_or(StopRule::default().max_iters),
        fixed_point_tol: c.tol.unwrap_or(StopRule::default().fixed_point_tol),
        ..StopRule::default()
    };
    let dir = out_dir(&c, "freebdy-tighten")?;
    write_json(
        &dir.join("manifest.json"),
        &RunManifest {
            tool: "freebdy",
            version: env!("CARGO_PKG_VERSION"),
            command: "tighten",
            scenario_name: &r.name,
            scenario: &r.scenario.descriptor,
            slices: None,
            segments: k,
            l,
            samples_per_segment: sps,
            iters: stop.max_iters,
            tol: stop.fixed_point_tol,
            seed: c.seed.unwrap_or(0),
            threads: c.threads,
            solver_tol: psi_cfg.solver.tol,
            solver_max_iters: psi_cfg.solver.max_iters,
            outputs: vec!["manifest.json".into(), "iterations.csv".into(), "final_curve.json".into()],
        },
    )?;
    let (out, log) = iterate_psi(&curve, &r.scenario, &psi_cfg, &stop)?;
    io::write_records_csv(create(&dir.join("iterations.csv"))?, &log.records)?;
    let cert = geodesic_residual(&out, &r.scenario);
    write_json(&dir.join("final_curve.json"), &CurveDocument::from_curve(&out).with_certificate(cert))?;
    match log.outcome {
        IterationOutcome::Converged { iterations } => println!("converged after {iterations} iteration(s)"),
        IterationOutcome::MaxIterations { iterations } => println!("not converged after {iterations} iterations"),
    }
    println!(
        "length {:.6}, interior residual {:.3e}, orthogonality {:.3e} rad{}",
        out.length(),
        cert.interior_residual,
        cert.boundary_orthogonality,
        if cert.trivial { ", trivial (point curve)" } else { "" }
    );
    Ok(ExitCode::SUCCESS)
}

const CONFORMING: [&str; 2] = ["sphere-equator", "disk-circle"];

fn run_suite(suite: Suite, manifold: &str, trials: Option<usize>, seed: u64, l: usize) -> Result<SuiteReport> {
    let mode = ExecMode::Parallel;
    let s = resolve_scenario(manifold)?.scenario;
    Ok(match suite {
        Suite::Wirtinger => validation::wirtinger_suite(trials.unwrap_or(10_000), seed, mode),
        Suite::Holder => validation::holder_suite(trials.unwrap_or(10_000), seed, mode),
        Suite::Perp => validation::perp_bound_suite(&s, trials.unwrap_or(10_000), seed, mode),
        Suite::Convexity => validation::convexity_suite(&s, l, trials.unwrap_or(1000), seed, mode),
        Suite::Continuity => validation::continuity_suite(&s, l, trials.unwrap_or(200), seed, mode),
        Suite::Psi => {
            let cfg = CorpusConfig { l, ..CorpusConfig::default() };
            validation::psi_property_suite(&s, &cfg, trials.unwrap_or(1000), seed, mode)
        }
        Suite::All => unreachable!("expanded by the caller"),
    })
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::All => "all",
        Suite::Wirtinger => "wirtinger",
        Suite::Perp => "perp",
        Suite::Holder => "holder",
        Suite::Convexity => "convexity",
        Suite::Continuity => "continuity",
        Suite::Psi => "psi",
    }
}

pub fn validate(a: ValidateArgs) -> Result<ExitCode> {
    let c = load_common(a.common)?;
    if a.trials == Some(0) {
        return Err(usage("--trials must be at least 1"));
    }
    let l = c.l.unwrap_or(16);
    if l < 2 {
        return Err(usage("--L must be at least 2"));
    }
    let seed = c.seed.unwrap_or(0);
    let manifolds: Vec<String> = match a.manifold.as_deref().or(c.scenario.as_deref()) {
        Some(m) => vec![m.to_string()],
        None => CONFORMING.iter().map(|s| s.to_string()).collect(),
    };
    for m in &manifolds {
        resolve_scenario(m)?;
    }
    let suites: Vec<Suite> = match a.suite {
        Suite::All => vec![Suite::Wirtinger, Suite::Holder, Suite::Perp, Suite::Convexity, Suite::Continuity, Suite::Psi],
        s => vec![s],
    };
    let mut jobs: Vec<(Suite, Option<&str>)> = Vec::new();
    for &s in &suites {
        if matches!(s, Suite::Wirtinger | Suite::Holder) {
            jobs.push((s, None));
        } else {
            jobs.extend(manifolds.iter().map(|m| (s, Some(m.as_str()))));
        }
    }
    let dir = match &c.out {
        Some(_) => Some(out_dir(&c, "")?),
        None => None,
    };
    let mut all_passed = true;
    for (suite, manifold) in jobs {
        let report = with_threads(c.threads, || run_suite(suite, manifold.unwrap_or(CONFORMING[0]), a.trials, seed, l))??;
        let label = match manifold {
            Some(m) => format!("{}[{m}]", suite_name(suite)),
            None => suite_name(suite).to_string(),
        };
        println!(
            "{} {label}: cases {}, failures {}, degenerate {}, worst ratio {:.6e}",
            if report.passed() { "PASS" } else { "FAIL" },
            report.cases,
            report.failure_count,
            report.degenerate,
            report.worst_ratio
        );
        for (k, v) in &report.constants {
            println!("    {k} = {v:.6e}");
        }
        if let Some(dir) = &dir {
            let file = match manifold {
                Some(m) => {
                    format!("{}-{}.json", suite_name(suite), Path::new(m).file_stem().map_or(m.into(), |s| s.to_string_lossy()))
                }
                None => format!("{}.json", suite_name(suite)),
            };
            write_json(&dir.join(file), &report)?;
        }
        all_passed &= report.passed();
    }
    Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn sweepout_csv<W: Write>(w: W, sw: &Sweepout) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        slice: usize,
        t: f64,
        j: usize,
        s: f64,
        x: f64,
        y: f64,
        z: f64,
    }
    let rows: Vec<Row> = sw
        .slices
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            c.samples().iter().enumerate().map(move |(j, p)| Row {
                slice: i,
                t: sw.param(i),
                j,
                s: c.param(j),
                x: p.x,
                y: p.y,
                z: p.z,
            })
        })
        .collect();
    io::write_records_csv(w, &rows)?;
    Ok(())
}

pub fn export(a: ExportArgs) -> Result<ExitCode> {
    let c = load_common(a.common)?;
    let mut buf: Vec<u8> = Vec::new();
    if let Some(input) = &a.input {
        let curve = read_curve(input)?;
        let surface = match &c.scenario {
            Some(name) => resolve_scenario(name)?.scenario.surface,
            None => freebdy::Surface::Plane,
        };
        match a.format {
            Format::Json => io::write_curve_json(&mut buf, &curve, None)?,
            Format::Csv => io::write_curve_csv(&mut buf, &curve)?,
            Format::Svg => buf.extend(io::render_svg(&[&curve], &surface, None).into_bytes()),
        }
    } else {
        let r = resolve_scenario(c.scenario.as_deref().unwrap_or("sphere-equator"))?;
        let kind = r.kind.ok_or_else(|| usage(format!("scenario `{}` has no built-in sweepout", r.name)))?;
        let slices = c.slices.unwrap_or(DEFAULT_SLICES);
        let sps = samples_per_segment(&c)?;
        let l = c.l.unwrap_or(16).max(2);
        let mut sw = generate_scenario_sweepout(kind, &r.scenario, slices, l * sps).map_err(|e| usage(e.to_string()))?;
        if a.precondition {
            let cfg = PsiConfig::new(l)?;
            sw = with_threads(c.threads, || precondition_sweepout(&sw, &r.scenario, &cfg, ExecMode::Parallel))??;
        }
        match a.format {
            Format::Json => serde_json::to_writer(&mut buf, &SweepoutDocument::from_sweepout(&sw))?,
            Format::Csv => sweepout_csv(&mut buf, &sw)?,
            Format::Svg => {
                let curves: Vec<&DiscreteCurve> = sw.slices.iter().collect();
                buf.extend(io::render_svg(&curves, &r.scenario.surface, None).into_bytes());
            }
        }
    }
    match &c.out {
        Some(path) => fs::write(path, &buf).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(ExitCode::SUCCESS)
}
