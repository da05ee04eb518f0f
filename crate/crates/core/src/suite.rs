//! The acceptance matrix: every statistical law the artifact must
//! reproduce, runnable as one deterministic suite.
//!
//! Each criterion returns a [`CriterionReport`] with a pass flag, a
//! one-line summary, and its raw metrics. Tolerances are fixed here, not
//! configurable: the desk scale is the contract, the smoke scale is a
//! fast variant with widened tolerances that is always labelled as such.

use crate::excursions::{sample_excursion_stats, ExcStats, ExcursionMeasureSpec};
use crate::geometry::{Classification, CutoffKind, StronglyConvexDomain};
use crate::kinetic::{
    simulate_markov_scattering, simulate_scattering, FramePolicy, SimOptions,
};
use crate::laws::{sample_feps, BoundaryLawG, EquilibriumF, JumpScale};
use crate::operators::{
    h_beta_combo, kernel_identities, weak_pde_residual, PdeResidualConfig, QuadConfig,
};
use crate::reflector::{eval_reflected, simulate_assembled, AssembleOptions, ReflectorSpec};
use crate::rng::RngStream;
use crate::stats::{batch_ci, fit_tail, ks_two_sample, median, TailWindow};
use crate::vecmath::{self as v, Point};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::{Mutex, OnceLock};

/// Base parameters of the acceptance runs: dimension 2, unit ball,
/// `alpha = 3/2`, light boundary law uniform on the unit ball, heavy
/// boundary law with exponent `beta = 1/2`.
pub const SUITE_ALPHA: f64 = 1.5;
pub const SUITE_BETA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Reduced replica counts with widened tolerances; reports are marked.
    pub smoke: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: 20260808, smoke: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub index: usize,
    pub name: String,
    pub passed: bool,
    pub summary: String,
    pub metrics: Vec<(String, f64)>,
    pub elapsed_s: f64,
    pub smoke: bool,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "criterion {:2} [{}] {} — {}{}",
            self.index,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.summary,
            if self.smoke { " (smoke, tolerances widened)" } else { "" },
        )
    }
}

fn report(
    index: usize,
    name: &str,
    cfg: &SuiteConfig,
    started: std::time::Instant,
    passed: bool,
    summary: String,
    metrics: Vec<(String, f64)>,
) -> CriterionReport {
    CriterionReport {
        index,
        name: name.to_string(),
        passed,
        summary,
        metrics,
        elapsed_s: started.elapsed().as_secs_f64(),
        smoke: cfg.smoke,
    }
}

fn ball() -> StronglyConvexDomain<2> {
    StronglyConvexDomain::unit_ball()
}

fn equilibrium() -> EquilibriumF<2> {
    EquilibriumF::new(SUITE_ALPHA, None, None).expect("valid alpha")
}

fn light_g() -> BoundaryLawG<2> {
    BoundaryLawG::light(1.0).expect("valid radius")
}

fn heavy_g() -> BoundaryLawG<2> {
    BoundaryLawG::heavy(SUITE_BETA, None, None).expect("valid beta")
}

/// Tolerance widening factor for smoke runs.
fn widen(cfg: &SuiteConfig) -> f64 {
    if cfg.smoke {
        1.5
    } else {
        1.0
    }
}

// ---------------------------------------------------------------------
// Shared tail samples (criteria 2, 3 and 4 fit different statistics of
// the same excursion populations).

pub struct TailBundle {
    pub light_ell: Vec<f64>,
    pub light_m: Vec<f64>,
    pub heavy_ell: Vec<f64>,
    pub heavy_m: Vec<f64>,
}

fn sample_tails(cfg: &SuiteConfig) -> TailBundle {
    let f = equilibrium();
    let (n_light, n_heavy, cap_light, cap_heavy) = if cfg.smoke {
        (30_000u64, 12_000u64, 400_000usize, 600_000usize)
    } else {
        (200_000u64, 70_000u64, 2_000_000usize, 4_000_000usize)
    };
    let run = |g: BoundaryLawG<2>, n: u64, cap: usize, role: u64| -> Vec<ExcStats<2>> {
        let spec = ExcursionMeasureSpec::discrete(f.clone(), g, 1e-3);
        (0..n)
            .into_par_iter()
            .map(|k| {
                let mut rng = RngStream::keyed(cfg.seed, k, role);
                sample_excursion_stats(&spec, &mut rng, cap)
            })
            .collect()
    };
    let light = run(light_g(), n_light, cap_light, 1002);
    let heavy = run(heavy_g(), n_heavy, cap_heavy, 1003);
    TailBundle {
        light_ell: light.iter().map(|s| s.ell).collect(),
        light_m: light.iter().map(|s| s.m_sup).collect(),
        heavy_ell: heavy.iter().map(|s| s.ell).collect(),
        heavy_m: heavy.iter().map(|s| s.m_sup).collect(),
    }
}

static TAIL_CACHE: OnceLock<Mutex<Vec<(SuiteConfig, std::sync::Arc<TailBundle>)>>> =
    OnceLock::new();

/// Tail samples for the given configuration, computed once per process.
pub fn tail_bundle(cfg: &SuiteConfig) -> std::sync::Arc<TailBundle> {
    let cache = TAIL_CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let mut guard = cache.lock().unwrap();
    if let Some((_, b)) = guard.iter().find(|(c, _)| c == cfg) {
        return b.clone();
    }
    let bundle = std::sync::Arc::new(sample_tails(cfg));
    guard.push((*cfg, bundle.clone()));
    bundle
}

// ---------------------------------------------------------------------
// Criterion 1: kernel identities.

pub fn criterion_1(cfg: &SuiteConfig) -> CriterionReport {
    let t0 = std::time::Instant::now();
    let mut metrics = Vec::new();
    let mut worst: f64 = 0.0;
    for alpha in [0.3, 0.5, 0.8] {
        let r = kernel_identities(alpha).a.unwrap();
        metrics.push((format!("A(alpha={alpha})"), r));
        worst = worst.max(r.abs());
    }
    for alpha in [1.2, 1.5, 1.8] {
        let r = kernel_identities(alpha).b.unwrap();
        metrics.push((format!("B(alpha={alpha})"), r));
        worst = worst.max(r.abs());
    }
    let rc = kernel_identities(1.0);
    metrics.push(("C(alpha=1)".into(), rc.c.unwrap()));
    metrics.push(("C closed form".into(), rc.c_closed_form.unwrap()));
    worst = worst.max(rc.c.unwrap().abs());
    let passed = worst < 1e-6;
    report(
        1,
        "kernel identities A = B = C = 0",
        cfg,
        t0,
        passed,
        format!("max |residual| = {worst:.2e} (tolerance 1e-6)"),
        metrics,
    )
}

// ---------------------------------------------------------------------
// Criteria 2-4: excursion tail exponents.

fn slope_criterion(
    index: usize,
    name: &str,
    cfg: &SuiteConfig,
    samples: &[f64],
    window: TailWindow,
    target: f64,
    tol: f64,
) -> CriterionReport {
    let t0 = std::time::Instant::now();
    let tol = tol * widen(cfg);
    match fit_tail(samples, window) {
        Ok(fit) => {
            let passed = (fit.slope - target).abs() <= tol;
            report(
                index,
                name,
                cfg,
                t0,
                passed,
                format!(
                    "slope {:.4} vs {target:.4} ± {tol:.2} (hill {:.4}, n_window {})",
                    fit.slope, fit.hill_slope, fit.n_window
                ),
                vec![
                    ("slope".into(), fit.slope),
                    ("target".into(), target),
                    ("tolerance".into(), tol),
                    ("hill_slope".into(), fit.hill_slope),
                    ("stderr".into(), fit.stderr),
                    ("n_window".into(), fit.n_window as f64),
                ],
            )
        }
        Err(e) => report(index, name, cfg, t0, false, format!("tail fit failed: {e}"), vec![]),
    }
}

pub fn criterion_2(cfg: &SuiteConfig) -> CriterionReport {
    let tails = tail_bundle(cfg);
    slope_criterion(
        2,
        "excursion duration tail, light boundary law",
        cfg,
        &tails.light_ell,
        TailWindow::default(),
        -0.5,
        0.07,
    )
}

pub fn criterion_3(cfg: &SuiteConfig) -> CriterionReport {
    let tails = tail_bundle(cfg);
    let window = if cfg.smoke {
        TailWindow::new(0.85, 0.98).unwrap()
    } else {
        TailWindow::new(0.90, 0.995).unwrap()
    };
    slope_criterion(
        3,
        "excursion duration tail, heavy boundary law",
        cfg,
        &tails.heavy_ell,
        window,
        -SUITE_BETA / SUITE_ALPHA,
        0.07,
    )
}

pub fn criterion_4(cfg: &SuiteConfig) -> CriterionReport {
    let t0 = std::time::Instant::now();
    let tails = tail_bundle(cfg);
    let light = fit_tail(&tails.light_m, TailWindow::default());
    let heavy_window = if cfg.smoke {
        TailWindow::new(0.85, 0.98).unwrap()
    } else {
        TailWindow::new(0.90, 0.995).unwrap()
    };
    let heavy = fit_tail(&tails.heavy_m, heavy_window);
    match (light, heavy) {
        (Ok(l), Ok(h)) => {
            let tol = 0.10 * widen(cfg);
            let light_target = -SUITE_ALPHA / 2.0;
            let heavy_target = -SUITE_BETA;
            let passed =
                (l.slope - light_target).abs() <= tol && (h.slope - heavy_target).abs() <= tol;
            report(
                4,
                "excursion amplitude tails",
                cfg,
                t0,
                passed,
                format!(
                    "light slope {:.4} vs {light_target:.2}, heavy slope {:.4} vs {heavy_target:.2} (± {tol:.2})",
                    l.slope, h.slope
                ),
                vec![
                    ("light_slope".into(), l.slope),
                    ("heavy_slope".into(), h.slope),
                    ("tolerance".into(), tol),
                ],
            )
        }
        (l, h) => {
            let msg = [l.err(), h.err()]
                .iter()
                .flatten()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            report(4, "excursion amplitude tails", cfg, t0, false, msg, vec![])
        }
    }
}

// ---------------------------------------------------------------------
// Criterion 5: exact scaling identity of the discrete excursion measure.

pub fn criterion_5(cfg: &SuiteConfig) -> CriterionReport {
    let t0 = std::time::Instant::now();
    let f = equilibrium();
    let g = light_g();
    let eps = 0.25;
    let delta = 0.25;
    let n = if cfg.smoke { 2_000 } else { 10_000 };
    let cap = 1_000_000;
    let spec_eps = ExcursionMeasureSpec::discrete(f.clone(), g.clone(), eps);
    let spec_one = ExcursionMeasureSpec::discrete(f, g, 1.0);
    let mut pass = 0;
    let mut min_p: f64 = 1.0;
    let reps = 10;
    for rep in 0..reps as u64 {
        let sample = |spec: &ExcursionMeasureSpec<2>,
                      min_ell: f64,
                      role: u64,
                      scale_l: f64,
                      scale_m: f64|
         -> (Vec<f64>, Vec<f64>) {
            let pairs: Vec<(f64, f64)> = (0..n as u64)
                .into_par_iter()
                .map(|k| {
                    let mut rng = RngStream::keyed(cfg.seed ^ 0x50, k + rep * n as u64, role);
                    // Rejection: condition on duration exceeding the level.
                    loop {
                        let s = sample_excursion_stats(spec, &mut rng, cap);
                        if s.ell > min_ell {
                            return (scale_l * s.ell, scale_m * s.m_sup);
                        }
                    }
                })
                .collect();
            (pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
        };
        // Conditioned at eps versus the rescaled pipeline at 1: the laws
        // coincide exactly, including the jump-count cap.
        let (la, ma) = sample(&spec_eps, delta, 1, 1.0, 1.0);
        let (lb, mb) = sample(&spec_one, delta / eps, 2, eps, eps.powf(1.0 / SUITE_ALPHA));
        let kl = ks_two_sample(&la, &lb).unwrap();
        let km = ks_two_sample(&ma, &mb).unwrap();
        min_p = min_p.min(kl.p_value).min(km.p_value);
        if kl.p_value > 0.01 && km.p_value > 0.01 {
            pass += 1;
        }
    }
    let need = 9;
    report(
        5,
        "exact scaling identity of the discrete excursion measure",
        cfg,
        t0,
        pass >= need,
        format!("{pass}/{reps} seeded repeats passed (need {need}); min p = {min_p:.4}"),
        vec![("repeats_passed".into(), pass as f64), ("min_p".into(), min_p)],
    )
}

// ---------------------------------------------------------------------
// Criterion 6: reflected-process scaling.

pub fn criterion_6(cfg: &SuiteConfig) -> CriterionReport {
    let t0 = std::time::Instant::now();
    let f = equilibrium();
    let g = light_g();
    let lam = 2.0f64;
    let gamma = lam.powf(1.0 / SUITE_ALPHA);
    let small = ball();
    let big = StronglyConvexDomain::<2>::ball(gamma).unwrap();
    let eps = 1e-3;
    let x0 = [0.3, 0.0];
    let t_query = 0.5;
    let n = if cfg.smoke { 2_000u64 } else { 10_000u64 };
    let reps = 10;
    let mut pass = 0;
    let mut min_p: f64 = 1.0;
    for rep in 0..reps as u64 {
        let run =
            |domain: &StronglyConvexDomain<2>, e: f64, start: Point<2>, t: f64, role: u64| -> Vec<[f64; 2]> {
                (0..n)
                    .into_par_iter()
                    .map(|k| {
                        let mut rng = RngStream::keyed(cfg.seed ^ 0x60, k + rep * n, role);
                        simulate_markov_scattering(
                            domain,
                            &f,
                            &g,
                            e,
                            start,
                            t,
                            &[],
                            FramePolicy::canonical(),
                            &SimOptions::default(),
                            &mut rng,
                        )
                        .unwrap()
                        .final_position
                    })
                    .collect()
            };
        // lambda^{1/alpha} R_{t/lambda} in the unit ball versus the
        // reflected process in the dilated ball at matched level.
        let a: Vec<[f64; 2]> =
            run(&small, eps, x0, t_query / lam, 1).into_iter().map(|p| v::scale(p, gamma)).collect();
        let b = run(&big, lam * eps, v::scale(x0, gamma), t_query, 2);
        let kx = ks_two_sample(
            &a.iter().map(|p| p[0]).collect::<Vec<_>>(),
            &b.iter().map(|p| p[0]).collect::<Vec<_>>(),
        )
        .unwrap();
        let kr = ks_two_sample(
            &a.iter().map(|p| v::norm(*p)).collect::<Vec<_>>(),
            &b.iter().map(|p| v::norm(*p)).collect::<Vec<_>>(),
        )
        .unwrap();
        min_p = min_p.min(kx.p_value).min(kr.p_value);
        if kx.p_value > 0.01 && kr.p_value > 0.01 {
            pass += 1;
        }
    }
    report(
        6,
        "reflected-process scaling",
        cfg,
        t0,
        pass >= 9,
        format!("{pass}/{reps} repeats passed (need 9); min p = {min_p:.4}"),
        vec![("repeats_passed".into(), pass as f64), ("min_p".into(), min_p)],
    )
}

// ---------------------------------------------------------------------
// Criterion 7: excursion-assembly consistency.

pub fn criterion_7(cfg: &SuiteConfig) -> CriterionReport {
    let t0 = std::time::Instant::now();
    let f = equilibrium();
    let g = light_g();
    let eps = 1e-3;
    let x0 = [1.0, 0.0];
    let dom = ball();

    // Byte-identity: the assembled path replayed from its stored trace
    // reproduces every forward sample exactly.
    let grid: Vec<f64> = (0..800).map(|k| 0.00125 * k as f64).collect();
    let spec = ReflectorSpec::discrete(f.clone(), g.clone(), eps);
    let mut rng = RngStream::keyed(cfg.seed ^ 0x70, 0, 0);
    let run = simulate_assembled(
        &dom,
        &spec,
        x0,
        1.0,
        &grid,
        FramePolicy::canonical(),
        &AssembleOptions { store_skeletons: true, ..Default::default() },
        &mut rng,
    )
    .unwrap();
    let mut replay_mismatches = 0usize;
    for s in &run.snapshots {
        let (x, on_b) = eval_reflected(&dom, &run.trace, s.t).unwrap();
        if x != s.x || on_b != s.on_boundary {
            replay_mismatches += 1;
        }
    }

    // Law-level agreement of the Markov recursion and the assembled path,
    // simulated by independent code paths and independent streams.
    let n = if cfg.smoke { 2_000u64 } else { 10_000u64 };
    let t_query = 0.5;
    let (kx, kr) = crate::reflector::markov_vs_assembled(
        &dom,
        &f,
        &g,
        eps,
        x0,
        t_query,
        n,
        FramePolicy::canonical(),
        &AssembleOptions::default(),
        cfg.seed ^ 0x71,
    )
    .unwrap();
    let passed = replay_mismatches == 0 && kx.p_value > 0.01 && kr.p_value > 0.01;
    report(
        7,
        "excursion-assembly consistency",
        cfg,
        t0,
        passed,
        format!(
            "replay mismatches {replay_mismatches}/{}; KS p (coordinate) = {:.4}, KS p (radius) = {:.4}",
            run.snapshots.len(),
            kx.p_value,
            kr.p_value
        ),
        vec![
            ("replay_mismatches".into(), replay_mismatches as f64),
            ("ks_p_coordinate".into(), kx.p_value),
            ("ks_p_radius".into(), kr.p_value),
        ],
    )
}

// ---------------------------------------------------------------------
// Criterion 8: exit dichotomy.

pub fn criterion_8(cfg: &SuiteConfig) -> CriterionReport {
    let t0 = std::time::Instant::now();
    let f = equilibrium();
    let n = if cfg.smoke { 5_000 } else { 20_000 };

    // Light law: log median jump-off displacement against log eps.
    let eps_grid = [1e-2, 3e-3, 1e-3, 3e-4];
    let mut pts = Vec::new();
    for (i, &e) in eps_grid.iter().enumerate() {
        let spec = ExcursionMeasureSpec::discrete(f.clone(), light_g(), e);
        let mut rng = RngStream::keyed(cfg.seed ^ 0x80, i as u64, 0);
        let d = crate::excursions::jump_off_displacement(&spec, n, &mut rng);
        pts.push((e.ln(), median(&d).ln()));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let light_slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();

    // Heavy law: displacement tail exponent.
    let spec = ExcursionMeasureSpec::discrete(f, heavy_g(), 1e-3);
    let mut rng = RngStream::keyed(cfg.seed ^ 0x80, 99, 1);
    let nn = if cfg.smoke { 20_000 } else { 100_000 };
    let d = crate::excursions::jump_off_displacement(&spec, nn, &mut rng);
    let heavy_fit = fit_tail(&d, TailWindow::default()).unwrap();

    let tol = 0.1 * widen(cfg);
    let light_target = 1.0 / SUITE_ALPHA;
    let heavy_target = -SUITE_BETA;
    let passed =
        (light_slope - light_target).abs() <= tol && (heavy_fit.slope - heavy_target).abs() <= tol;
    report(
        8,
        "exit dichotomy",
        cfg,
        t0,
        passed,
        format!(
            "light median slope {light_slope:.4} vs {light_target:.4}, heavy tail slope {:.4} vs {heavy_target:.2} (± {tol:.2})",
            heavy_fit.slope
        ),
        vec![
            ("light_slope".into(), light_slope),
            ("heavy_slope".into(), heavy_fit.slope),
            ("tolerance".into(), tol),
        ],
    )
}

// ---------------------------------------------------------------------
// Criterion 9: clock law.

pub fn criterion_9(cfg: &SuiteConfig) -> CriterionReport {
    let t0 = std::time::Instant::now();
    let f = equilibrium();
    let g = light_g();
    let dom = ball();
    let eps = 1e-3;
    let reps = if cfg.smoke { 50u64 } else { 200u64 };
    let mean_dev = |e: f64, role: u64| -> f64 {
        (0..reps)
            .into_par_iter()
            .map(|k| {
                let mut rng = RngStream::keyed(cfg.seed ^ 0x90, k, role);
                simulate_scattering(
                    &dom,
                    &f,
                    &g,
                    e,
                    [0.0, 0.0],
                    [1.0, 0.0],
                    1.0,
                    &[],
                    FramePolicy::canonical(),
                    &SimOptions::default(),
                    &mut rng,
                    false,
                )
                .unwrap()
                .clock_sup_dev
            })
            .sum::<f64>()
            / reps as f64
    };
    let dev = mean_dev(eps, 0);
    // Supporting diagnostic: the law does hold (deviation shrinks with eps).
    let dev_finer = mean_dev(1e-4, 1);
    let bound = 0.02;
    let passed = dev <= bound;
    report(
        9,
        "clock law: mean sup |eps N_t - t| over [0, 1]",
        cfg,
        t0,
        passed,
        format!(
            "mean sup deviation {dev:.4} at eps = 1e-3 (bound {bound}); at eps = 1e-4 it is {dev_finer:.4}. \
             The compensated-Poisson scale is ~1.25 sqrt(eps) = {:.4} before boundary-hit drift, so the \
             stated bound is reachable only for eps below ~5e-5",
            1.25 * eps.sqrt()
        ),
        vec![
            ("mean_sup_dev".into(), dev),
            ("mean_sup_dev_eps_1e-4".into(), dev_finer),
            ("bound".into(), bound),
        ],
    )
}

// ---------------------------------------------------------------------
// Criterion 10: weak generator consistency.

pub fn criterion_10(cfg: &SuiteConfig) -> CriterionReport {
    let t0 = std::time::Instant::now();
    let dom = ball();
    let f = equilibrium();
    let g = heavy_g();
    let quad = QuadConfig::default();
    let combo = match h_beta_combo(&dom, SUITE_ALPHA, SUITE_BETA, 0.8, &quad) {
        Ok(c) => c,
        Err(e) => {
            return report(10, "weak generator consistency", cfg, t0, false, e.to_string(), vec![])
        }
    };
    let pde_cfg = PdeResidualConfig {
        eps: 1e-3,
        n_replicas: if cfg.smoke { 10_000 } else { 100_000 },
        n_time_grid: 50,
        n_table: if cfg.smoke { 90 } else { 240 },
        seed: cfg.seed ^ 0xA0,
        event_cap: 100_000_000,
    };
    let tcfg = QuadConfig { n_angular: 128, r_tol: 1e-7, max_panels: 20_000 };
    let res = match weak_pde_residual(
        &dom,
        &combo,
        &f,
        &g,
        SUITE_ALPHA,
        [0.3, 0.0],
        0.5,
        &pde_cfg,
        &tcfg,
    ) {
        Ok(r) => r,
        Err(e) => {
            return report(10, "weak generator consistency", cfg, t0, false, e.to_string(), vec![])
        }
    };
    let budget = 0.02 * widen(cfg);
    let bound = 3.0 * res.stderr + budget;
    report(
        10,
        "weak generator consistency",
        cfg,
        t0,
        res.residual <= bound,
        format!(
            "residual {:.4} <= 3 stderr + {budget} = {bound:.4} (stderr {:.4})",
            res.residual, res.stderr
        ),
        vec![
            ("residual".into(), res.residual),
            ("stderr".into(), res.stderr),
            ("bound".into(), bound),
        ],
    )
}

// ---------------------------------------------------------------------
// Criterion 11: half-space exit asymptotic.

pub fn criterion_11(cfg: &SuiteConfig) -> CriterionReport {
    let t0 = std::time::Instant::now();
    let f = equilibrium();
    // The walk's entrance floor (order sqrt(eps)) must sit well below
    // x1^{alpha/2} across the grid, which forces a fine walk scale.
    let (eps, n) = if cfg.smoke { (1e-4, 5_000u64) } else { (3e-6, 30_000u64) };
    let scale = JumpScale::new(SUITE_ALPHA, eps);
    let x_grid = [0.01, 0.0178, 0.0316, 0.0562, 0.1];
    let mut pts = Vec::new();
    for (i, &x1) in x_grid.iter().enumerate() {
        let hits: usize = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut rng = RngStream::keyed(cfg.seed ^ 0xB0, k, i as u64);
                let mut z = x1;
                let mut t = 0.0;
                loop {
                    t += rng.exp(eps);
                    if t > 1.0 {
                        return 1usize;
                    }
                    z += sample_feps(&f, scale, &mut rng)[0];
                    if z <= 0.0 {
                        return 0usize;
                    }
                }
            })
            .sum();
        pts.push((x1.ln(), ((hits.max(1)) as f64 / n as f64).ln()));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
    let target = SUITE_ALPHA / 2.0;
    let tol = if cfg.smoke { 0.2 } else { 0.1 };
    report(
        11,
        "half-space exit asymptotic",
        cfg,
        t0,
        (slope - target).abs() <= tol,
        format!("slope {slope:.4} vs {target:.2} ± {tol:.2} (walk eps = {eps:.0e})"),
        vec![("slope".into(), slope), ("target".into(), target), ("tolerance".into(), tol)],
    )
}

// ---------------------------------------------------------------------
// Criterion 12: geometry property suite.

pub fn criterion_12(cfg: &SuiteConfig) -> CriterionReport {
    let t0 = std::time::Instant::now();
    let n = if cfg.smoke { 10_000u64 } else { 100_000u64 };
    let domains = [
        StronglyConvexDomain::<2>::unit_ball(),
        StronglyConvexDomain::<2>::ellipsoid([2.0, 1.0]).unwrap(),
    ];
    let mut failures: Vec<(String, u64)> = Vec::new();

    // Random points: interior (rejection in the bounding box), boundary
    // (random direction projected), exterior (scaled outward).
    let sample_interior = |dom: &StronglyConvexDomain<2>, rng: &mut RngStream| -> [f64; 2] {
        let a = dom.semi_axes();
        loop {
            let p = [a[0] * (2.0 * rng.uniform() - 1.0), a[1] * (2.0 * rng.uniform() - 1.0)];
            if dom.classify(p) == Classification::Interior {
                return p;
            }
        }
    };
    let sample_boundary = |dom: &StronglyConvexDomain<2>, rng: &mut RngStream| -> [f64; 2] {
        let t = rng.angle();
        dom.boundary_project([t.cos(), t.sin()])
    };

    for dom in &domains {
        let tag = match dom {
            StronglyConvexDomain::UnitBall => "ball",
            _ => "ellipsoid",
        };
        // Cutoff map: output on the segment, in the closure, with the
        // documented trichotomy.
        let bad: u64 = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut rng = RngStream::keyed(cfg.seed ^ 0xC0, k, 1);
                let y = if rng.uniform() < 0.2 {
                    sample_boundary(dom, &mut rng)
                } else {
                    sample_interior(dom, &mut rng)
                };
                let a = dom.semi_axes();
                let z = [
                    3.0 * a[0] * (2.0 * rng.uniform() - 1.0),
                    3.0 * a[1] * (2.0 * rng.uniform() - 1.0),
                ];
                let (p, kind) = dom.cutoff(y, z).unwrap();
                let on_segment =
                    v::dist(y, p) + v::dist(p, z) - v::dist(y, z) <= 1e-9 * (1.0 + v::dist(y, z));
                let in_closure = dom.q_value(p) <= 1.0 + 1e-9;
                let kind_ok = match kind {
                    CutoffKind::Inside => dom.in_closure(z) && p == z,
                    CutoffKind::Crossed => dom.classify(p) == Classification::Boundary,
                    CutoffKind::Stuck => p == y,
                };
                u64::from(!(on_segment && in_closure && kind_ok))
            })
            .sum();
        if bad > 0 {
            failures.push((format!("cutoff[{tag}]"), bad));
        }

        // Thales bound on interior/exterior pairs.
        let bad: u64 = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut rng = RngStream::keyed(cfg.seed ^ 0xC0, k, 2);
                let y = sample_interior(dom, &mut rng);
                let a = dom.semi_axes();
                let mut z;
                loop {
                    z = [
                        4.0 * a[0] * (2.0 * rng.uniform() - 1.0),
                        4.0 * a[1] * (2.0 * rng.uniform() - 1.0),
                    ];
                    if dom.classify(z) == Classification::Exterior {
                        break;
                    }
                }
                match dom.thales_bound(y, z) {
                    Ok((a_pt, bound)) => u64::from(v::dist(a_pt, z) > bound * (1.0 + 1e-9) + 1e-12),
                    Err(_) => 1,
                }
            })
            .sum();
        if bad > 0 {
            failures.push((format!("thales[{tag}]"), bad));
        }

        // Frame orthogonality and the normal in the first column.
        let bad: u64 = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut rng = RngStream::keyed(cfg.seed ^ 0xC0, k, 3);
                let x = sample_boundary(dom, &mut rng);
                let fr = dom.frame_at(x, None).unwrap();
                let n_x = dom.inward_normal(x).unwrap();
                u64::from(
                    fr.orthogonality_defect() > 1e-12 || v::dist(fr.cols[0], n_x) > 1e-12,
                )
            })
            .sum();
        if bad > 0 {
            failures.push((format!("frames[{tag}]"), bad));
        }

        // Local graph sandwich: half the chart gap lower-bounds the true
        // boundary distance, the gap upper-bounds it.
        let bad: u64 = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut rng = RngStream::keyed(cfg.seed ^ 0xC0, k, 4);
                let x = sample_boundary(dom, &mut rng);
                let fr = dom.frame_at(x, None).unwrap();
                let eps1 = dom.graph_radius();
                let vt = 0.9 * eps1 * (2.0 * rng.uniform() - 1.0);
                let psi = match dom.graph_height(&fr, &[vt]) {
                    Ok(p) => p,
                    Err(_) => return 1,
                };
                let u1 = psi + 0.5 * eps1 * (2.0 * rng.uniform() - 1.0);
                let gap = (u1 - psi).abs();
                let dist = dom.dist_to_boundary(fr.map([u1, vt]));
                u64::from(!(0.5 * gap <= dist * (1.0 + 1e-7) + 1e-12
                    && dist <= gap * (1.0 + 1e-7) + 1e-9))
            })
            .sum();
        if bad > 0 {
            failures.push((format!("graph-sandwich[{tag}]"), bad));
        }

        // Continuity of the cutoff map along shrinking perturbations
        // (square-root modulus at worst, near tangency).
        let bad: u64 = (0..n / 4)
            .into_par_iter()
            .map(|k| {
                let mut rng = RngStream::keyed(cfg.seed ^ 0xC0, k, 5);
                let y = if rng.uniform() < 0.3 {
                    sample_boundary(dom, &mut rng)
                } else {
                    sample_interior(dom, &mut rng)
                };
                let a = dom.semi_axes();
                let z = [
                    3.0 * a[0] * (2.0 * rng.uniform() - 1.0),
                    3.0 * a[1] * (2.0 * rng.uniform() - 1.0),
                ];
                let base = dom.cutoff_point(y, z).unwrap();
                let dir_y = crate::laws::uniform_direction::<2>(&mut rng);
                let dir_z = crate::laws::uniform_direction::<2>(&mut rng);
                let diam = dom.diameter();
                let c = 25.0 * diam.sqrt();
                for j in 3..=8 {
                    let delta = 4.0f64.powi(-j);
                    // Keep the perturbed base inside the closure.
                    let yj = dom.cutoff_point(y, v::axpy(y, delta, dir_y)).unwrap();
                    let zj = v::axpy(z, delta, dir_z);
                    let pj = dom.cutoff_point(yj, zj).unwrap();
                    if v::dist(pj, base) > c * delta.sqrt() {
                        return 1;
                    }
                }
                0
            })
            .sum();
        if bad > 0 {
            failures.push((format!("cutoff-continuity[{tag}]"), bad));
        }
    }

    // 3d frame family: orthogonality away from the puncture.
    let ball3 = StronglyConvexDomain::<3>::unit_ball();
    let bad: u64 = (0..n / 2)
        .into_par_iter()
        .map(|k| {
            let mut rng = RngStream::keyed(cfg.seed ^ 0xC0, k, 6);
            let dir = crate::laws::uniform_direction::<3>(&mut rng);
            let x = ball3.boundary_project(dir);
            if v::dist(x, [0.0, 0.0, 1.0]) < 1e-6 {
                return 0;
            }
            let fr = ball3.frame_at(x, Some([0.0, 0.0, 1.0])).unwrap();
            let n_x = ball3.inward_normal(x).unwrap();
            u64::from(fr.orthogonality_defect() > 1e-12 || v::dist(fr.cols[0], n_x) > 1e-12)
        })
        .sum();
    if bad > 0 {
        failures.push(("frames[ball-3d]".into(), bad));
    }

    let passed = failures.is_empty();
    let summary = if passed {
        format!("all properties hold on {n} randomized instances per check")
    } else {
        format!("failures: {failures:?}")
    };
    let metrics = failures.iter().map(|(k, c)| (k.clone(), *c as f64)).collect();
    report(12, "geometry property suite", cfg, t0, passed, summary, metrics)
}

// ---------------------------------------------------------------------
// Criterion 13: boundary occupation vanishes.

pub fn criterion_13(cfg: &SuiteConfig) -> CriterionReport {
    let t0 = std::time::Instant::now();
    let f = equilibrium();
    let g = light_g();
    let dom = ball();
    let grid: Vec<f64> = (1..=100).map(|k| 0.01 * k as f64).collect();
    let reps = if cfg.smoke { 96u64 } else { 384u64 };
    let mut fractions = Vec::new();
    let mut cis = Vec::new();
    for (i, e) in [1e-2, 1e-3, 1e-4].into_iter().enumerate() {
        let spec = ReflectorSpec::discrete(f.clone(), g.clone(), e);
        let per_rep: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|k| {
                let mut rng = RngStream::keyed(cfg.seed ^ 0xD0, k, i as u64);
                let run = simulate_assembled(
                    &dom,
                    &spec,
                    [0.0, 1.0],
                    1.0 + 1e-9,
                    &grid,
                    FramePolicy::canonical(),
                    &AssembleOptions::default(),
                    &mut rng,
                )
                .unwrap();
                run.snapshots.iter().filter(|s| s.on_boundary).count() as f64 / grid.len() as f64
            })
            .collect();
        let ci = batch_ci(&per_rep, 16).unwrap();
        fractions.push(ci.mean);
        cis.push(ci.halfwidth);
    }
    let passed = (0..2).all(|k| fractions[k + 1] + cis[k + 1] < fractions[k] - cis[k]);
    report(
        13,
        "boundary occupation vanishes along eps",
        cfg,
        t0,
        passed,
        format!(
            "fractions {:.4} > {:.4} > {:.4} (95% half-widths {:.4}/{:.4}/{:.4})",
            fractions[0], fractions[1], fractions[2], cis[0], cis[1], cis[2]
        ),
        vec![
            ("fraction_eps_1e-2".into(), fractions[0]),
            ("fraction_eps_1e-3".into(), fractions[1]),
            ("fraction_eps_1e-4".into(), fractions[2]),
        ],
    )
}

/// Run one criterion by index (1-based).
pub fn run_criterion(index: usize, cfg: &SuiteConfig) -> CriterionReport {
    match index {
        1 => criterion_1(cfg),
        2 => criterion_2(cfg),
        3 => criterion_3(cfg),
        4 => criterion_4(cfg),
        5 => criterion_5(cfg),
        6 => criterion_6(cfg),
        7 => criterion_7(cfg),
        8 => criterion_8(cfg),
        9 => criterion_9(cfg),
        10 => criterion_10(cfg),
        11 => criterion_11(cfg),
        12 => criterion_12(cfg),
        13 => criterion_13(cfg),
        _ => panic!("criterion index out of range: {index}"),
    }
}

/// Run the full matrix in order.
pub fn run_all(cfg: &SuiteConfig) -> Vec<CriterionReport> {
    (1..=13).map(|i| run_criterion(i, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoke_fast_criteria() {
        let cfg = SuiteConfig { seed: 7, smoke: true };
        for idx in [1usize, 12] {
            let r = run_criterion(idx, &cfg);
            println!("{}", r.line());
            assert!(r.passed, "{}", r.line());
        }
    }
}
