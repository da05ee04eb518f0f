//! The boundary process, its local-time clock, and the assembly of the
//! reflected path from stopped excursions.
//!
//! On the local-time axis, excursion arrivals form a Poisson process whose
//! rate is the total mass of the excursion measure. At each arrival the
//! excursion is mapped to the tangent half-space at the current boundary
//! point, stopped at its first exit from the domain, and contributes its
//! stopped duration to the clock `tau`; between arrivals the clock grows
//! linearly with the drift coefficient (`c_eps` for the discrete measure,
//! `m` for the finite measures). The reflected path at time `t` reads off
//! the excursion covering `t` through the inverse clock, and sits at the
//! current boundary point on the clock's linear stretches.
//!
//! All clock breakpoints are stored exactly as computed, so replaying a
//! stored trace reproduces the forward simulation bit for bit.

use crate::excursions::{ExcursionError, ExcursionMeasureSpec};
use crate::geometry::{Classification, GeometryError, StronglyConvexDomain};
use crate::kinetic::FramePolicy;
use crate::laws::{sample_feps, JumpScale};
use crate::rng::RngStream;
use crate::vecmath::{self as v, Point};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReflectorError {
    #[error("assembled simulation must start on the boundary")]
    InvalidStart,
    #[error("event cap of {cap} exceeded in the reflected simulation")]
    EventCapExceeded { cap: usize },
    #[error("queried time {t} beyond the simulated clock {max}")]
    BeyondHorizon { t: f64, max: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Excursion(#[from] ExcursionError),
}

/// Excursion measure plus the local-time drift of the clock.
#[derive(Debug, Clone)]
pub struct ReflectorSpec<const D: usize> {
    pub measure: ExcursionMeasureSpec<D>,
    pub drift: f64,
}

impl<const D: usize> ReflectorSpec<D> {
    /// The discrete-measure family: drift `c_eps`.
    pub fn discrete(
        f: crate::laws::EquilibriumF<D>,
        g: crate::laws::BoundaryLawG<D>,
        eps: f64,
    ) -> Self {
        let measure = ExcursionMeasureSpec::discrete(f, g, eps);
        let drift = measure.c_eps().unwrap();
        Self { measure, drift }
    }

    /// The finite-measure family at level `n`: start cutoff `1/n`, drift `1/n`.
    pub fn finite_j(
        f: crate::laws::EquilibriumF<D>,
        beta: f64,
        level_n: f64,
        eps_path: f64,
    ) -> Self {
        let measure = ExcursionMeasureSpec::FiniteJBeta {
            f,
            beta,
            cutoff_radius: 1.0 / level_n,
            eps_path,
        };
        Self { measure, drift: 1.0 / level_n }
    }

    /// Arbitrary pairing, for test doubles.
    pub fn with_drift(measure: ExcursionMeasureSpec<D>, drift: f64) -> Self {
        Self { measure, drift }
    }
}

/// Stored skeleton of one stopped excursion, in half-space coordinates,
/// with jump times already converted to clock times (exact forward floats).
#[derive(Debug, Clone)]
pub struct StoredExcursion<const D: usize> {
    /// Clock time at which each state starts holding; `clock_times[0]`
    /// is the arrival clock `tau_pre`.
    pub clock_times: Vec<f64>,
    /// Half-space states; the last entry is the overshoot.
    pub states: Vec<Point<D>>,
}

/// One excursion arrival of the boundary process.
#[derive(Debug, Clone)]
pub struct Arrival<const D: usize> {
    /// Local time of the arrival.
    pub u: f64,
    /// Clock just before the excursion starts.
    pub tau_pre: f64,
    /// Clock at the excursion's right end (`tau_pre + ell_bar`).
    pub tau_post: f64,
    /// Stopped duration inside the domain.
    pub ell_bar: f64,
    /// Boundary point the excursion leaves from.
    pub anchor: Point<D>,
    /// Boundary point it lands at (the cutoff of the exit jump).
    pub landing: Point<D>,
    /// Distance between the first mapped state and the anchor: `|e(0)|`.
    pub jump_off: f64,
    /// Skeleton for replay, kept only when requested.
    pub skeleton: Option<StoredExcursion<D>>,
}

/// The boundary process trace: local-time atoms, landings, and the clock.
#[derive(Debug, Clone)]
pub struct BoundaryTrace<const D: usize> {
    pub drift: f64,
    pub start: Point<D>,
    pub arrivals: Vec<Arrival<D>>,
    /// Clock value from which the trace no longer covers queries.
    pub clock_end: f64,
    pub frames: FramePolicy<D>,
}

/// A grid sample of the assembled path.
#[derive(Debug, Clone, Copy)]
pub struct ReflectedSnapshot<const D: usize> {
    pub t: f64,
    pub x: Point<D>,
    pub on_boundary: bool,
}

#[derive(Debug, Clone)]
pub struct AssembledRun<const D: usize> {
    pub trace: BoundaryTrace<D>,
    pub snapshots: Vec<ReflectedSnapshot<D>>,
}

/// Options for the assembled simulation.
#[derive(Debug, Clone)]
pub struct AssembleOptions {
    pub event_cap: usize,
    /// Keep full excursion skeletons in the trace (needed for replay).
    pub store_skeletons: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self { event_cap: 100_000_000, store_skeletons: false }
    }
}

/// Stop condition of the boundary simulation: a real-time horizon on the
/// clock, or a local-time horizon on the arrival axis.
#[derive(Debug, Clone, Copy)]
pub enum Horizon {
    Clock(f64),
    LocalTime(f64),
}

/// Simulate the boundary process and the assembled reflected path from a
/// boundary point `x0`, sampling the path at the sorted `grid` times, until
/// the clock passes `t_max`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_assembled<const D: usize>(
    domain: &StronglyConvexDomain<D>,
    spec: &ReflectorSpec<D>,
    x0: Point<D>,
    t_max: f64,
    grid: &[f64],
    frames: FramePolicy<D>,
    opts: &AssembleOptions,
    rng: &mut RngStream,
) -> Result<AssembledRun<D>, ReflectorError> {
    simulate_with_horizon(domain, spec, x0, Horizon::Clock(t_max), grid, frames, opts, rng)
}

/// Simulate the boundary process alone up to local time `u_max`: the
/// local-time atoms, landings, stopped durations, and the clock.
pub fn simulate_boundary<const D: usize>(
    domain: &StronglyConvexDomain<D>,
    spec: &ReflectorSpec<D>,
    x0: Point<D>,
    u_max: f64,
    frames: FramePolicy<D>,
    opts: &AssembleOptions,
    rng: &mut RngStream,
) -> Result<BoundaryTrace<D>, ReflectorError> {
    simulate_with_horizon(domain, spec, x0, Horizon::LocalTime(u_max), &[], frames, opts, rng)
        .map(|run| run.trace)
}

#[allow(clippy::too_many_arguments)]
fn simulate_with_horizon<const D: usize>(
    domain: &StronglyConvexDomain<D>,
    spec: &ReflectorSpec<D>,
    x0: Point<D>,
    horizon: Horizon,
    grid: &[f64],
    frames: FramePolicy<D>,
    opts: &AssembleOptions,
    rng: &mut RngStream,
) -> Result<AssembledRun<D>, ReflectorError> {
    if domain.classify(x0) != Classification::Boundary {
        return Err(ReflectorError::InvalidStart);
    }
    let mass = spec.measure.mass();
    let drift = spec.drift;
    let f = match &spec.measure {
        ExcursionMeasureSpec::DiscreteEps { f, .. } => f.clone(),
        ExcursionMeasureSpec::FiniteJBeta { f, .. } => f.clone(),
    };
    let walk_eps = match &spec.measure {
        ExcursionMeasureSpec::DiscreteEps { eps, .. } => *eps,
        ExcursionMeasureSpec::FiniteJBeta { eps_path, .. } => *eps_path,
    };
    let scale = JumpScale::new(f.alpha, walk_eps);

    let (t_stop, u_stop) = match horizon {
        Horizon::Clock(t) => (t, f64::INFINITY),
        Horizon::LocalTime(u) => (f64::INFINITY, u),
    };
    let mut b = domain.boundary_project(x0);
    let mut u = 0.0;
    let mut tau = 0.0;
    let mut n_events = 0usize;
    let mut arrivals: Vec<Arrival<D>> = Vec::new();
    let mut snapshots = Vec::with_capacity(grid.len());
    let mut grid_iter = grid.iter().copied().peekable();

    loop {
        // Boundary stretch until the next arrival.
        let du = if mass > 0.0 { rng.exp(1.0 / mass) } else { f64::INFINITY };
        let u_next = u + du;
        let tau_next = tau + drift * du;
        let stop = tau_next >= t_stop || u_next > u_stop;
        let clock_end = if stop { t_stop.min(tau + drift * (u_stop - u)) } else { tau_next };
        while let Some(&tg) = grid_iter.peek() {
            if tg >= clock_end {
                break;
            }
            if tg >= tau {
                snapshots.push(ReflectedSnapshot { t: tg, x: b, on_boundary: true });
            }
            grid_iter.next();
        }
        if stop {
            for tg in grid_iter.by_ref() {
                if tg <= clock_end {
                    snapshots.push(ReflectedSnapshot { t: tg, x: b, on_boundary: true });
                }
            }
            return Ok(AssembledRun {
                trace: BoundaryTrace { drift, start: x0, arrivals, clock_end, frames },
                snapshots,
            });
        }
        u = u_next;
        tau = tau_next;
        n_events += 1;
        if n_events >= opts.event_cap {
            return Err(ReflectorError::EventCapExceeded { cap: opts.event_cap });
        }

        // Arrival: sample the excursion, map it at the current boundary
        // point, and stop it at its first exit from the domain.
        let frame = frames.frame(domain, b)?;
        let tau_pre = tau;
        let mut z = spec.measure.sample_start(rng);
        let jump_off = v::norm(z);
        let mut clock_times = vec![tau_pre];
        let mut states = vec![z];
        let (ell_bar, landing, tau_post);
        if domain.classify(frame.map(z)) != Classification::Interior {
            // Immediate exit: the jump from the boundary is cut off.
            ell_bar = 0.0;
            tau_post = tau_pre;
            landing = domain.cutoff_point(b, frame.map(z))?;
        } else {
            let mut t_clock = tau_pre;
            loop {
                // The state `z` holds on [t_clock, t_next).
                let t_next = t_clock + rng.exp(walk_eps);
                while let Some(&tg) = grid_iter.peek() {
                    if tg >= t_next {
                        break;
                    }
                    if tg >= t_clock {
                        snapshots.push(ReflectedSnapshot {
                            t: tg,
                            x: frame.map(z),
                            on_boundary: false,
                        });
                    }
                    grid_iter.next();
                }
                let z_prev = z;
                z = v::add(z, sample_feps(&f, scale, rng));
                t_clock = t_next;
                clock_times.push(t_clock);
                states.push(z);
                n_events += 1;
                if n_events >= opts.event_cap {
                    return Err(ReflectorError::EventCapExceeded { cap: opts.event_cap });
                }
                if domain.classify(frame.map(z)) != Classification::Interior {
                    landing = domain.cutoff_point(frame.map(z_prev), frame.map(z))?;
                    tau_post = t_clock;
                    ell_bar = t_clock - tau_pre;
                    break;
                }
            }
        }
        arrivals.push(Arrival {
            u,
            tau_pre,
            tau_post,
            ell_bar,
            anchor: b,
            landing,
            jump_off,
            skeleton: if opts.store_skeletons {
                Some(StoredExcursion { clock_times, states })
            } else {
                None
            },
        });
        tau = tau_post;
        b = landing;
    }
}

/// Replay a stored trace: the reflected path value at clock time `t`.
/// With stored skeletons this reproduces the forward simulation exactly.
pub fn eval_reflected<const D: usize>(
    domain: &StronglyConvexDomain<D>,
    trace: &BoundaryTrace<D>,
    t: f64,
) -> Result<(Point<D>, bool), ReflectorError> {
    if t > trace.clock_end {
        return Err(ReflectorError::BeyondHorizon { t, max: trace.clock_end });
    }
    // Last arrival whose excursion starts at or before t.
    let k = trace.arrivals.partition_point(|a| a.tau_pre <= t);
    if k == 0 {
        return Ok((trace.start, true));
    }
    let a = &trace.arrivals[k - 1];
    if t >= a.tau_post {
        // Right end of the excursion or the following boundary stretch.
        return Ok((a.landing, true));
    }
    let sk = a.skeleton.as_ref().ok_or(ReflectorError::BeyondHorizon {
        t,
        max: f64::NAN,
    })?;
    let frame = trace.frames.frame(domain, a.anchor)?;
    let idx = sk.clock_times.partition_point(|&s| s <= t);
    let z = sk.states[idx.saturating_sub(1)];
    Ok((frame.map(z), false))
}

/// Evaluate a stored trace on a whole time grid (the offline counterpart
/// of the streaming snapshots of [`simulate_assembled`]).
pub fn assemble_on_grid<const D: usize>(
    domain: &StronglyConvexDomain<D>,
    trace: &BoundaryTrace<D>,
    grid: &[f64],
) -> Result<Vec<ReflectedSnapshot<D>>, ReflectorError> {
    grid.iter()
        .map(|&t| {
            eval_reflected(domain, trace, t)
                .map(|(x, on_boundary)| ReflectedSnapshot { t, x, on_boundary })
        })
        .collect()
}

/// Two-sample comparison of the Markov scattering marginal and the
/// excursion-assembled marginal at time `t` from a boundary start: the
/// two constructions of the same law, simulated by independent code paths
/// and independent streams. Returns the Kolmogorov–Smirnov reports for
/// the first coordinate and for the radius.
#[allow(clippy::too_many_arguments)]
pub fn markov_vs_assembled<const D: usize>(
    domain: &StronglyConvexDomain<D>,
    f: &crate::laws::EquilibriumF<D>,
    g: &crate::laws::BoundaryLawG<D>,
    eps: f64,
    x0: Point<D>,
    t: f64,
    n_replicas: u64,
    frames: FramePolicy<D>,
    opts: &AssembleOptions,
    seed: u64,
) -> Result<(crate::stats::KsReport, crate::stats::KsReport), ReflectorError>
where
    StronglyConvexDomain<D>: Sync,
{
    use rayon::prelude::*;
    let spec = ReflectorSpec::discrete(f.clone(), g.clone(), eps);
    let markov: Result<Vec<Point<D>>, _> = (0..n_replicas)
        .into_par_iter()
        .map(|k| {
            let mut rng = RngStream::keyed(seed, k, 1);
            crate::kinetic::simulate_markov_scattering(
                domain,
                f,
                g,
                eps,
                x0,
                t,
                &[],
                frames,
                &crate::kinetic::SimOptions { event_cap: opts.event_cap },
                &mut rng,
            )
            .map(|r| r.final_position)
        })
        .collect();
    let markov = markov.map_err(|e| match e {
        crate::kinetic::KineticError::EventCapExceeded { cap, .. } => {
            ReflectorError::EventCapExceeded { cap }
        }
        crate::kinetic::KineticError::Geometry(g) => ReflectorError::Geometry(g),
        crate::kinetic::KineticError::InvalidState(_) => ReflectorError::InvalidStart,
    })?;
    let assembled: Result<Vec<Point<D>>, ReflectorError> = (0..n_replicas)
        .into_par_iter()
        .map(|k| {
            let mut rng = RngStream::keyed(seed, k, 2);
            let run = simulate_assembled(
                domain,
                &spec,
                x0,
                t + 1e-9,
                &[t],
                frames,
                opts,
                &mut rng,
            )?;
            Ok(run.snapshots[0].x)
        })
        .collect();
    let assembled = assembled?;
    let coord = crate::stats::ks_two_sample(
        &markov.iter().map(|p| p[0]).collect::<Vec<_>>(),
        &assembled.iter().map(|p| p[0]).collect::<Vec<_>>(),
    )
    .expect("nonempty samples");
    let radius = crate::stats::ks_two_sample(
        &markov.iter().map(|p| v::norm(*p)).collect::<Vec<_>>(),
        &assembled.iter().map(|p| v::norm(*p)).collect::<Vec<_>>(),
    )
    .expect("nonempty samples");
    Ok((coord, radius))
}

/// Approximation family for reflected-process marginals.
#[derive(Debug, Clone)]
pub enum ApproxFamily<const D: usize> {
    /// Discrete-measure excursions with `c_eps` drift; equivalently the
    /// Markov scattering position process at the same `eps`.
    DiscreteEps { f: crate::laws::EquilibriumF<D>, g: crate::laws::BoundaryLawG<D>, eps: f64 },
    /// Finite measures at level `n` with drift `1/n`; interior prefixes
    /// use the `eps_path` walk.
    FiniteJ { f: crate::laws::EquilibriumF<D>, beta: f64, level_n: f64, eps_path: f64 },
}

/// One draw of the approximate reflected process at time `t`, from any
/// starting point in the closed domain.
pub fn simulate_reflected_marginal<const D: usize>(
    domain: &StronglyConvexDomain<D>,
    family: &ApproxFamily<D>,
    x0: Point<D>,
    t: f64,
    frames: FramePolicy<D>,
    opts: &AssembleOptions,
    rng: &mut RngStream,
) -> Result<(Point<D>, bool), ReflectorError> {
    if t == 0.0 {
        return Ok((x0, domain.classify(x0) == Classification::Boundary));
    }
    match family {
        ApproxFamily::DiscreteEps { f, g, eps } => {
            if domain.classify(x0) == Classification::Boundary {
                let spec = ReflectorSpec::discrete(f.clone(), g.clone(), *eps);
                let run =
                    simulate_assembled(domain, &spec, x0, t * (1.0 + 1e-12) + 1e-300, &[t], frames, opts, rng)?;
                let s = run.snapshots.last().ok_or(ReflectorError::InvalidStart)?;
                Ok((s.x, s.on_boundary))
            } else {
                let run = crate::kinetic::simulate_markov_scattering(
                    domain,
                    f,
                    g,
                    *eps,
                    x0,
                    t,
                    &[],
                    frames,
                    &crate::kinetic::SimOptions { event_cap: opts.event_cap },
                    rng,
                )
                .map_err(|e| match e {
                    crate::kinetic::KineticError::EventCapExceeded { cap, .. } => {
                        ReflectorError::EventCapExceeded { cap }
                    }
                    crate::kinetic::KineticError::Geometry(g) => ReflectorError::Geometry(g),
                    crate::kinetic::KineticError::InvalidState(_) => ReflectorError::InvalidStart,
                })?;
                Ok((run.final_position, run.final_on_boundary))
            }
        }
        ApproxFamily::FiniteJ { f, beta, level_n, eps_path } => {
            // Free-walk prefix until the first boundary hit.
            let scale = JumpScale::new(f.alpha, *eps_path);
            let mut x = x0;
            let mut s = 0.0;
            let mut n = 0usize;
            let mut hit = domain.classify(x0) == Classification::Boundary;
            while !hit {
                let gap = rng.exp(*eps_path);
                if s + gap >= t {
                    return Ok((x, false));
                }
                s += gap;
                let target = v::add(x, sample_feps(f, scale, rng));
                let (p, kind) = domain.cutoff(x, target)?;
                x = p;
                hit = kind != crate::geometry::CutoffKind::Inside
                    || domain.classify(p) == Classification::Boundary;
                n += 1;
                if n >= opts.event_cap {
                    return Err(ReflectorError::EventCapExceeded { cap: opts.event_cap });
                }
            }
            let remaining = t - s;
            if remaining <= 0.0 {
                return Ok((x, true));
            }
            let spec = ReflectorSpec::finite_j(f.clone(), *beta, *level_n, *eps_path);
            let run = simulate_assembled(
                domain,
                &spec,
                x,
                remaining * (1.0 + 1e-12) + 1e-300,
                &[remaining],
                frames,
                opts,
                rng,
            )?;
            let snap = run.snapshots.last().ok_or(ReflectorError::InvalidStart)?;
            Ok((snap.x, snap.on_boundary))
        }
    }
}
