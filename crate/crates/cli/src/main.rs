//! `refstable` — command-line laboratory for reflected stable processes.
//!
//! Subcommands simulate the kinetic scattering process, its Markov
//! position version, half-space excursions and the assembled reflected
//! path, and run the statistical verification suite. Every run writes CSV
//! artifacts plus a JSON manifest that replays to byte-identical files.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numeric failure
//! (event caps, quadrature), 3 verification failure.

mod config;
mod output;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use config::{BoundaryRegime, ConfigError, DomainSpec, RunConfig};
use output::{fmt_f64, load_manifest_config, OutputDir, RunManifest};
use rayon::prelude::*;
use refstable::excursions::{sample_excursion_stats, ExcursionMeasureSpec};
use refstable::geometry::StronglyConvexDomain;
use refstable::kinetic::{
    simulate_markov_scattering, simulate_scattering, FramePolicy, SimOptions,
};
use refstable::laws::{BoundaryLawG, EquilibriumF};
use refstable::operators::kernel_identities;
use refstable::reflector::{simulate_assembled, AssembleOptions, ReflectorSpec};
use refstable::rng::RngStream;
use refstable::stats::{fit_tail, TailWindow};
use refstable::suite::{run_all, run_criterion, CriterionReport, SuiteConfig};
use refstable::vecmath as v;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "refstable", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Configuration file (flat `key = value` with `[section]` headers).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set eps=1e-4` (repeatable).
    #[arg(long = "set", value_parser = parse_kv_flag)]
    sets: Vec<(String, String)>,
    /// Shortcut for `--set alpha=...`.
    #[arg(long)]
    alpha: Option<f64>,
    /// Shortcut for `--set eps=...`.
    #[arg(long)]
    eps: Option<f64>,
    /// Shortcut for `--set seed=...`.
    #[arg(long)]
    seed: Option<u64>,
    /// Shortcut for `--set replicas=...`.
    #[arg(long)]
    replicas: Option<usize>,
    /// Shortcut for `--set out_dir=...`.
    #[arg(long)]
    out: Option<String>,
    /// Shortcut for `--set smoke=true`.
    #[arg(long)]
    smoke: bool,
    /// Replay the configuration stored in a manifest.
    #[arg(long)]
    replay: Option<PathBuf>,
}

fn parse_kv_flag(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, val)| (k.trim().to_string(), val.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the scattering process (position and velocity).
    SimulateScattering {
        #[command(flatten)]
        common: CommonOpts,
        /// Also write the raw per-replica event log.
        #[arg(long)]
        events: bool,
    },
    /// Simulate the Markov scattering position process.
    SimulateMarkov {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Sample half-space excursions and fit their tails.
    SampleExcursions {
        #[command(flatten)]
        common: CommonOpts,
        /// Jump cap per excursion (censors, reported per row).
        #[arg(long, default_value_t = 2_000_000)]
        cap: usize,
    },
    /// Simulate the assembled reflected path (boundary trace and marginals).
    SimulateReflected {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Verify the excursion tail exponents (duration and amplitude).
    VerifyTails {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Verify the exact discrete scaling identity and the reflected scaling.
    VerifyScaling {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Verify the weak generator consistency of the time-marginals.
    VerifyGenerator {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Evaluate the one-dimensional kernel identities (use `--alpha` for a
    /// single tail index; default checks the whole grid).
    KernelIdentities {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Verify the boundary exit dichotomy.
    VerifyExit {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the full verification matrix.
    Suite {
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn resolve_config(common: &CommonOpts) -> Result<RunConfig, ConfigError> {
    if let Some(manifest) = &common.replay {
        let (_, map) = load_manifest_config(manifest)
            .map_err(|e| ConfigError(format!("replay: {e}")))?;
        return RunConfig::from_map(map);
    }
    let mut overrides = common.sets.clone();
    if let Some(a) = common.alpha {
        overrides.push(("alpha".into(), a.to_string()));
    }
    if let Some(e) = common.eps {
        overrides.push(("eps".into(), e.to_string()));
    }
    if let Some(s) = common.seed {
        overrides.push(("seed".into(), s.to_string()));
    }
    if let Some(r) = common.replicas {
        overrides.push(("replicas".into(), r.to_string()));
    }
    if let Some(o) = &common.out {
        overrides.push(("out_dir".into(), o.clone()));
    }
    if common.smoke {
        overrides.push(("smoke".into(), "true".into()));
    }
    RunConfig::load(common.config.as_deref(), &overrides)
}

fn init_threads(cfg: &RunConfig) {
    if let Some(n) = cfg.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn domain<const D: usize>(cfg: &RunConfig) -> Result<StronglyConvexDomain<D>> {
    Ok(match &cfg.domain {
        DomainSpec::UnitBall => StronglyConvexDomain::unit_ball(),
        DomainSpec::Ellipsoid(axes) => {
            let mut a = [0.0; D];
            a.copy_from_slice(axes);
            StronglyConvexDomain::ellipsoid(a).map_err(|e| anyhow::anyhow!(e.to_string()))?
        }
    })
}

fn laws<const D: usize>(cfg: &RunConfig) -> Result<(EquilibriumF<D>, BoundaryLawG<D>)> {
    let f = EquilibriumF::new(cfg.alpha, cfg.kappa_f, None)
        .map_err(|e| anyhow::anyhow!(e.to_string()))?;
    let g = match cfg.regime {
        BoundaryRegime::Light { radius } => BoundaryLawG::light(radius),
        BoundaryRegime::Heavy { beta, kappa } => BoundaryLawG::heavy(beta, kappa, None),
    }
    .map_err(|e| anyhow::anyhow!(e.to_string()))?;
    Ok((f, g))
}

fn start_point<const D: usize>(cfg: &RunConfig) -> [f64; D] {
    let mut x = [0.0; D];
    x.copy_from_slice(&cfg.start);
    x
}

fn frames<const D: usize>(
    dom: &StronglyConvexDomain<D>,
    start: [f64; D],
) -> FramePolicy<D> {
    if D == 2 {
        FramePolicy::canonical()
    } else {
        // Frames punctured opposite the start (the law does not depend on
        // the choice; regularity holds away from one point).
        let probe = if v::norm(start) > 1e-9 { v::scale(start, -1.0) } else { v::basis::<D>(D - 1) };
        FramePolicy::with_puncture(dom.boundary_project(probe))
    }
}

fn grid(cfg: &RunConfig) -> Vec<f64> {
    (1..=cfg.grid_points)
        .map(|k| cfg.horizon * k as f64 / cfg.grid_points as f64)
        .collect()
}

// ---------------------------------------------------------------------

fn cmd_simulate_scattering(cfg: &RunConfig, events: bool) -> Result<()> {
    match cfg.dimension {
        2 => scattering_impl::<2>(cfg, events),
        _ => scattering_impl::<3>(cfg, events),
    }
}

fn scattering_impl<const D: usize>(cfg: &RunConfig, events: bool) -> Result<()> {
    let started = std::time::Instant::now();
    let dom = domain::<D>(cfg)?;
    let (f, g) = laws::<D>(cfg)?;
    let x0 = start_point::<D>(cfg);
    let fp = frames(&dom, x0);
    let tgrid = grid(cfg);
    let opts = SimOptions { event_cap: cfg.event_cap };
    let runs: Result<Vec<_>, _> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|rep| {
            let mut vel_rng = RngStream::keyed(cfg.seed, rep, 11);
            let v0 = f.sample(&mut vel_rng);
            let mut rng = RngStream::keyed(cfg.seed, rep, 12);
            simulate_scattering(
                &dom, &f, &g, cfg.eps, x0, v0, cfg.horizon, &tgrid, fp, &opts, &mut rng, events,
            )
        })
        .collect();
    let runs = runs.map_err(|e| anyhow::anyhow!("numeric: {e}"))?;

    let mut out = OutputDir::create(&cfg.out_dir)?;
    let mut header = vec!["replica".to_string(), "t".to_string()];
    header.extend((1..=D).map(|i| format!("x{i}")));
    header.extend((1..=D).map(|i| format!("v{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv(
        "scattering_snapshots.csv",
        &header_refs,
        runs.iter().enumerate().flat_map(|(rep, run)| {
            run.snapshots.iter().map(move |s| {
                let mut row = vec![rep.to_string(), fmt_f64(s.t)];
                row.extend(s.x.iter().map(|c| fmt_f64(*c)));
                row.extend(s.v.iter().map(|c| fmt_f64(*c)));
                row
            })
        }),
    )?;
    if events {
        let mut header = vec!["replica".to_string(), "t".to_string()];
        header.extend((1..=D).map(|i| format!("x{i}")));
        header.extend((1..=D).map(|i| format!("v{i}")));
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        out.write_csv(
            "scattering_events.csv",
            &header_refs,
            runs.iter().enumerate().flat_map(|(rep, run)| {
                run.events.iter().flatten().map(move |e| {
                    let mut row = vec![rep.to_string(), fmt_f64(e.t)];
                    row.extend(e.x.iter().map(|c| fmt_f64(*c)));
                    row.extend(e.v.iter().map(|c| fmt_f64(*c)));
                    row
                })
            }),
        )?;
    }
    #[derive(serde::Serialize)]
    struct Summary {
        replicas: usize,
        mean_events: f64,
        mean_boundary_hits: f64,
        mean_clock_sup_dev: f64,
        eps: f64,
    }
    let n = runs.len() as f64;
    out.write_json(
        "scattering_summary.json",
        &Summary {
            replicas: runs.len(),
            mean_events: runs.iter().map(|r| r.n_events as f64).sum::<f64>() / n,
            mean_boundary_hits: runs.iter().map(|r| r.n_boundary_hits as f64).sum::<f64>() / n,
            mean_clock_sup_dev: runs.iter().map(|r| r.clock_sup_dev).sum::<f64>() / n,
            eps: cfg.eps,
        },
    )?;
    RunManifest::new("simulate-scattering", cfg.seed, cfg.raw.clone()).finalize(&mut out, started)
}

fn cmd_simulate_markov(cfg: &RunConfig) -> Result<()> {
    match cfg.dimension {
        2 => markov_impl::<2>(cfg),
        _ => markov_impl::<3>(cfg),
    }
}

fn markov_impl<const D: usize>(cfg: &RunConfig) -> Result<()> {
    let started = std::time::Instant::now();
    let dom = domain::<D>(cfg)?;
    let (f, g) = laws::<D>(cfg)?;
    let x0 = start_point::<D>(cfg);
    let fp = frames(&dom, x0);
    let tgrid = grid(cfg);
    let opts = SimOptions { event_cap: cfg.event_cap };
    let runs: Result<Vec<_>, _> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = RngStream::keyed(cfg.seed, rep, 13);
            simulate_markov_scattering(
                &dom, &f, &g, cfg.eps, x0, cfg.horizon, &tgrid, fp, &opts, &mut rng,
            )
        })
        .collect();
    let runs = runs.map_err(|e| anyhow::anyhow!("numeric: {e}"))?;

    let mut out = OutputDir::create(&cfg.out_dir)?;
    let mut header = vec!["replica".to_string(), "t".to_string()];
    header.extend((1..=D).map(|i| format!("x{i}")));
    header.push("on_boundary".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv(
        "markov_snapshots.csv",
        &header_refs,
        runs.iter().enumerate().flat_map(|(rep, run)| {
            run.snapshots.iter().map(move |s| {
                let mut row = vec![rep.to_string(), fmt_f64(s.t)];
                row.extend(s.x.iter().map(|c| fmt_f64(*c)));
                row.push(u8::from(s.on_boundary).to_string());
                row
            })
        }),
    )?;
    #[derive(serde::Serialize)]
    struct Summary {
        replicas: usize,
        mean_events: f64,
        mean_boundary_events: f64,
        boundary_fraction_on_grid: f64,
        eps: f64,
    }
    let n = runs.len() as f64;
    let frac = runs
        .iter()
        .map(|r| {
            r.snapshots.iter().filter(|s| s.on_boundary).count() as f64
                / r.snapshots.len().max(1) as f64
        })
        .sum::<f64>()
        / n;
    out.write_json(
        "markov_summary.json",
        &Summary {
            replicas: runs.len(),
            mean_events: runs.iter().map(|r| r.n_events as f64).sum::<f64>() / n,
            mean_boundary_events: runs.iter().map(|r| r.n_boundary_events as f64).sum::<f64>() / n,
            boundary_fraction_on_grid: frac,
            eps: cfg.eps,
        },
    )?;
    RunManifest::new("simulate-markov", cfg.seed, cfg.raw.clone()).finalize(&mut out, started)
}

fn cmd_sample_excursions(cfg: &RunConfig, cap: usize) -> Result<()> {
    match cfg.dimension {
        2 => excursions_impl::<2>(cfg, cap),
        _ => excursions_impl::<3>(cfg, cap),
    }
}

fn excursions_impl<const D: usize>(cfg: &RunConfig, cap: usize) -> Result<()> {
    let started = std::time::Instant::now();
    let (f, g) = laws::<D>(cfg)?;
    let spec = match (cfg.level_n, cfg.beta()) {
        (Some(n), Some(beta)) => ExcursionMeasureSpec::FiniteJBeta {
            f,
            beta,
            cutoff_radius: 1.0 / n,
            eps_path: cfg.eps,
        },
        _ => ExcursionMeasureSpec::discrete(f, g, cfg.eps),
    };
    let stats: Vec<_> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = RngStream::keyed(cfg.seed, rep, 14);
            sample_excursion_stats(&spec, &mut rng, cap)
        })
        .collect();

    let mut out = OutputDir::create(&cfg.out_dir)?;
    let mut header = vec![
        "ell_duration".to_string(),
        "m_amplitude".to_string(),
        "e0_jump_off".to_string(),
    ];
    header.extend((1..=D).map(|i| format!("end_x{i}")));
    header.push("n_jumps".into());
    header.push("capped".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv(
        "excursions.csv",
        &header_refs,
        stats.iter().map(|s| {
            let mut row = vec![fmt_f64(s.ell), fmt_f64(s.m_sup), fmt_f64(s.start_abs)];
            row.extend(s.end.iter().map(|c| fmt_f64(*c)));
            row.push(s.n_jumps.to_string());
            row.push(u8::from(s.capped).to_string());
            row
        }),
    )?;
    #[derive(serde::Serialize)]
    struct TailBlock {
        mass: f64,
        zeta: f64,
        n: usize,
        n_capped: usize,
        duration_fit: Option<refstable::stats::TailFit>,
        amplitude_fit: Option<refstable::stats::TailFit>,
    }
    let ells: Vec<f64> = stats.iter().map(|s| s.ell).collect();
    let ms: Vec<f64> = stats.iter().map(|s| s.m_sup).collect();
    out.write_json(
        "excursion_tails.json",
        &TailBlock {
            mass: spec.mass(),
            zeta: spec.zeta(),
            n: stats.len(),
            n_capped: stats.iter().filter(|s| s.capped).count(),
            duration_fit: fit_tail(&ells, TailWindow::default()).ok(),
            amplitude_fit: fit_tail(&ms, TailWindow::default()).ok(),
        },
    )?;
    RunManifest::new("sample-excursions", cfg.seed, cfg.raw.clone()).finalize(&mut out, started)
}

fn cmd_simulate_reflected(cfg: &RunConfig) -> Result<()> {
    match cfg.dimension {
        2 => reflected_impl::<2>(cfg),
        _ => reflected_impl::<3>(cfg),
    }
}

fn reflected_impl<const D: usize>(cfg: &RunConfig) -> Result<()> {
    let started = std::time::Instant::now();
    let dom = domain::<D>(cfg)?;
    let (f, g) = laws::<D>(cfg)?;
    let spec = match (cfg.level_n, cfg.beta()) {
        (Some(n), Some(beta)) => ReflectorSpec::finite_j(f, beta, n, cfg.eps),
        _ => ReflectorSpec::discrete(f, g, cfg.eps),
    };
    // Boundary start: project the configured start outward if needed.
    let raw_start = start_point::<D>(cfg);
    let x0 = if v::norm(raw_start) > 1e-9 {
        dom.boundary_project(raw_start)
    } else {
        dom.boundary_project(v::basis::<D>(0))
    };
    let fp = frames(&dom, x0);
    let tgrid = grid(cfg);
    let opts = AssembleOptions { event_cap: cfg.event_cap, store_skeletons: false };
    let runs: Result<Vec<_>, _> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = RngStream::keyed(cfg.seed, rep, 15);
            simulate_assembled(
                &dom,
                &spec,
                x0,
                cfg.horizon * (1.0 + 1e-12) + f64::MIN_POSITIVE,
                &tgrid,
                fp,
                &opts,
                &mut rng,
            )
        })
        .collect();
    let runs = runs.map_err(|e| anyhow::anyhow!("numeric: {e}"))?;

    let mut out = OutputDir::create(&cfg.out_dir)?;
    let mut header = vec!["replica".to_string(), "t".to_string()];
    header.extend((1..=D).map(|i| format!("x{i}")));
    header.push("on_boundary".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv(
        "reflected_marginals.csv",
        &header_refs,
        runs.iter().enumerate().flat_map(|(rep, run)| {
            run.snapshots.iter().map(move |s| {
                let mut row = vec![rep.to_string(), fmt_f64(s.t)];
                row.extend(s.x.iter().map(|c| fmt_f64(*c)));
                row.push(u8::from(s.on_boundary).to_string());
                row
            })
        }),
    )?;
    // Boundary trace of the first replica: the local-time atoms.
    let mut header = vec![
        "arrival".to_string(),
        "u_local_time".to_string(),
        "tau_pre".to_string(),
        "tau_post".to_string(),
        "ell_bar_stopped_duration".to_string(),
        "e0_jump_off".to_string(),
    ];
    header.extend((1..=D).map(|i| format!("anchor_x{i}")));
    header.extend((1..=D).map(|i| format!("landing_x{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv(
        "boundary_trace.csv",
        &header_refs,
        runs[0].trace.arrivals.iter().enumerate().map(|(k, a)| {
            let mut row = vec![
                k.to_string(),
                fmt_f64(a.u),
                fmt_f64(a.tau_pre),
                fmt_f64(a.tau_post),
                fmt_f64(a.ell_bar),
                fmt_f64(a.jump_off),
            ];
            row.extend(a.anchor.iter().map(|c| fmt_f64(*c)));
            row.extend(a.landing.iter().map(|c| fmt_f64(*c)));
            row
        }),
    )?;
    #[derive(serde::Serialize)]
    struct Summary {
        replicas: usize,
        excursion_mass: f64,
        drift: f64,
        mean_arrivals: f64,
        boundary_fraction_on_grid: f64,
    }
    let n = runs.len() as f64;
    out.write_json(
        "reflected_summary.json",
        &Summary {
            replicas: runs.len(),
            excursion_mass: spec.measure.mass(),
            drift: spec.drift,
            mean_arrivals: runs.iter().map(|r| r.trace.arrivals.len() as f64).sum::<f64>() / n,
            boundary_fraction_on_grid: runs
                .iter()
                .map(|r| {
                    r.snapshots.iter().filter(|s| s.on_boundary).count() as f64
                        / r.snapshots.len().max(1) as f64
                })
                .sum::<f64>()
                / n,
        },
    )?;
    RunManifest::new("simulate-reflected", cfg.seed, cfg.raw.clone()).finalize(&mut out, started)
}

// ---------------------------------------------------------------------

/// Write criterion reports, print their lines, and fail with exit 3 if any
/// criterion failed.
fn finish_verification(
    cfg: &RunConfig,
    command: &str,
    file: &str,
    reports: Vec<CriterionReport>,
) -> Result<u8> {
    let started = std::time::Instant::now();
    for r in &reports {
        println!("{}", r.line());
    }
    let mut out = OutputDir::create(&cfg.out_dir)?;
    #[derive(serde::Serialize)]
    struct VerificationReport<'a> {
        schema_version: u32,
        smoke: bool,
        all_passed: bool,
        criteria: &'a [CriterionReport],
    }
    let all_passed = reports.iter().all(|r| r.passed);
    out.write_json(
        file,
        &VerificationReport { schema_version: 1, smoke: cfg.smoke, all_passed, criteria: &reports },
    )?;
    RunManifest::new(command, cfg.seed, cfg.raw.clone()).finalize(&mut out, started)?;
    Ok(if all_passed { 0 } else { 3 })
}

fn suite_cfg(cfg: &RunConfig) -> SuiteConfig {
    SuiteConfig { seed: cfg.seed, smoke: cfg.smoke }
}

fn run() -> Result<u8> {
    let cli = Cli::parse();
    let (common, action): (&CommonOpts, Box<dyn FnOnce(&RunConfig) -> Result<u8>>) =
        match &cli.command {
            Command::SimulateScattering { common, events } => {
                let events = *events;
                (common, Box::new(move |cfg| cmd_simulate_scattering(cfg, events).map(|_| 0)))
            }
            Command::SimulateMarkov { common } => {
                (common, Box::new(|cfg| cmd_simulate_markov(cfg).map(|_| 0)))
            }
            Command::SampleExcursions { common, cap } => {
                let cap = *cap;
                (common, Box::new(move |cfg| cmd_sample_excursions(cfg, cap).map(|_| 0)))
            }
            Command::SimulateReflected { common } => {
                (common, Box::new(|cfg| cmd_simulate_reflected(cfg).map(|_| 0)))
            }
            Command::VerifyTails { common } => (
                common,
                Box::new(|cfg| {
                    let sc = suite_cfg(cfg);
                    let reports = vec![run_criterion(2, &sc), run_criterion(3, &sc), run_criterion(4, &sc)];
                    finish_verification(cfg, "verify-tails", "tails_report.json", reports)
                }),
            ),
            Command::VerifyScaling { common } => (
                common,
                Box::new(|cfg| {
                    let sc = suite_cfg(cfg);
                    let reports = vec![run_criterion(5, &sc), run_criterion(6, &sc)];
                    finish_verification(cfg, "verify-scaling", "scaling_report.json", reports)
                }),
            ),
            Command::VerifyGenerator { common } => (
                common,
                Box::new(|cfg| {
                    let sc = suite_cfg(cfg);
                    let reports = vec![run_criterion(10, &sc)];
                    finish_verification(cfg, "verify-generator", "generator_report.json", reports)
                }),
            ),
            Command::KernelIdentities { common } => {
                let alpha = common.alpha;
                (
                    common,
                    Box::new(move |cfg| {
                        let started = std::time::Instant::now();
                        let alphas = match alpha {
                            Some(a) => vec![a],
                            None => vec![0.3, 0.5, 0.8, 1.0, 1.2, 1.5, 1.8],
                        };
                        let residuals: Vec<_> = alphas.iter().map(|a| kernel_identities(*a)).collect();
                        let worst = residuals
                            .iter()
                            .flat_map(|r| [r.a, r.b, r.c])
                            .flatten()
                            .fold(0.0f64, |acc, x| acc.max(x.abs()));
                        for r in &residuals {
                            println!(
                                "alpha {:4}: A {:?} B {:?} C {:?}",
                                r.alpha, r.a, r.b, r.c
                            );
                        }
                        let mut out = OutputDir::create(&cfg.out_dir)?;
                        out.write_json("kernel_identities.json", &residuals)?;
                        RunManifest::new("kernel-identities", cfg.seed, cfg.raw.clone())
                            .finalize(&mut out, started)?;
                        Ok(if worst < 1e-6 { 0 } else { 3 })
                    }),
                )
            }
            Command::VerifyExit { common } => (
                common,
                Box::new(|cfg| {
                    let sc = suite_cfg(cfg);
                    let reports = vec![run_criterion(8, &sc), run_criterion(11, &sc)];
                    finish_verification(cfg, "verify-exit", "exit_report.json", reports)
                }),
            ),
            Command::Suite { common } => (
                common,
                Box::new(|cfg| {
                    let reports = run_all(&suite_cfg(cfg));
                    finish_verification(cfg, "suite", "suite_report.json", reports)
                }),
            ),
        };
    let cfg = resolve_config(common).map_err(|e| anyhow::anyhow!(ExitHint::Config(e.to_string())))?;
    init_threads(&cfg);
    action(&cfg)
}

/// Internal marker separating configuration failures (exit 1) from numeric
/// ones (exit 2).
#[derive(Debug)]
enum ExitHint {
    Config(String),
}

impl std::fmt::Display for ExitHint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExitHint::Config(m) => write!(f, "{m}"),
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ExitHint>().is_some() || e.to_string().contains("config error") {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
