//! The scattering process (position and velocity) and its Markov position
//! version.
//!
//! Both processes refresh at a rate `1/eps` exponential clock. The
//! scattering process moves ballistically at speed `eps^{(1-alpha)/alpha} V`
//! between events, takes a fresh velocity `U ~ F` at interior events, and
//! restarts with `A_x W`, `W ~ G_+`, when it hits the boundary. The Markov
//! version jumps directly through the cutoff map at each clock ring, with
//! the one-step laws `F_eps` / `G_eps`. Boundary hits are resolved exactly
//! through the quadratic geometry, never by time stepping.

use crate::geometry::{Classification, CutoffKind, Frame, GeometryError, StronglyConvexDomain};
use crate::laws::{sample_feps, sample_geps, BoundaryLawG, EquilibriumF, JumpScale};
use crate::rng::RngStream;
use crate::vecmath::{self as v, Point};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KineticError {
    #[error("event cap of {cap} events exceeded at simulated time {at_time}")]
    EventCapExceeded { cap: usize, at_time: f64 },
    #[error("initial state not admissible: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Position/velocity state of the scattering process; admissible states
/// have `x` interior, or `x` on the boundary with `v . n_x > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringState<const D: usize> {
    pub x: Point<D>,
    pub v: Point<D>,
    pub t: f64,
}

/// How boundary frames are chosen. In dimension 2 the canonical rotation
/// family is used. In dimension 3 frames are built away from a puncture
/// point; if a boundary point collides with the puncture, the antipodal
/// puncture is used for that single frame (the restart law does not depend
/// on the frame choice).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePolicy<const D: usize> {
    pub puncture: Option<Point<D>>,
}

impl<const D: usize> FramePolicy<D> {
    pub fn canonical() -> Self {
        Self { puncture: None }
    }

    pub fn with_puncture(p: Point<D>) -> Self {
        Self { puncture: Some(p) }
    }

    pub fn frame(
        &self,
        domain: &StronglyConvexDomain<D>,
        x: Point<D>,
    ) -> Result<Frame<D>, GeometryError> {
        if D == 2 {
            return domain.frame_at(x, None);
        }
        let p = self
            .puncture
            .unwrap_or_else(|| domain.boundary_project(v::scale(x, -1.0)));
        match domain.frame_at(x, Some(p)) {
            Ok(f) => Ok(f),
            Err(GeometryError::PunctureAtBase) => {
                domain.frame_at(x, Some(domain.boundary_project(v::scale(x, -1.0))))
            }
            Err(e) => Err(e),
        }
    }
}

/// Options shared by the simulators.
#[derive(Debug, Clone)]
pub struct SimOptions {
    /// Hard cap on events per replica; exceeding it is an error, never a
    /// silent truncation.
    pub event_cap: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { event_cap: 100_000_000 }
    }
}

/// Travel time `lambda(x, v, s)`: the time actually spent moving when a
/// flight of duration `s` at velocity `v` starts at `x` — `s` if the flight
/// stays inside, otherwise the exact boundary hitting time.
pub fn travel_time<const D: usize>(
    domain: &StronglyConvexDomain<D>,
    x: Point<D>,
    vel: Point<D>,
    s: f64,
) -> f64 {
    let exit = domain.ray_exit_time(x, vel);
    if exit >= s {
        s
    } else {
        exit
    }
}

/// One sampled point of a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct ScatterSnapshot<const D: usize> {
    pub t: f64,
    pub x: Point<D>,
    pub v: Point<D>,
}

#[derive(Debug, Clone)]
pub struct ScatteringRun<const D: usize> {
    pub snapshots: Vec<ScatterSnapshot<D>>,
    pub final_state: ScatteringState<D>,
    pub n_events: usize,
    pub n_boundary_hits: usize,
    /// `sup_{t <= horizon} |eps N_t - t|`, accumulated online.
    pub clock_sup_dev: f64,
    /// Post-event states `(t, x, v)`, kept only when requested.
    pub events: Option<Vec<ScatterSnapshot<D>>>,
}

/// Simulate the scattering process `(X, V)` on `[0, t_max]`.
///
/// `grid` lists the times at which snapshots are taken (must be
/// nondecreasing). Positions between events are affine, so snapshots are
/// exact.
#[allow(clippy::too_many_arguments)]
pub fn simulate_scattering<const D: usize>(
    domain: &StronglyConvexDomain<D>,
    f: &EquilibriumF<D>,
    g: &BoundaryLawG<D>,
    eps: f64,
    x0: Point<D>,
    v0: Point<D>,
    t_max: f64,
    grid: &[f64],
    frames: FramePolicy<D>,
    opts: &SimOptions,
    rng: &mut RngStream,
    record_events: bool,
) -> Result<ScatteringRun<D>, KineticError> {
    let alpha = f.alpha;
    match domain.classify(x0) {
        Classification::Exterior => {
            return Err(KineticError::InvalidState("start outside the closed domain".into()))
        }
        Classification::Boundary => {
            let n = domain.inward_normal(domain.boundary_project(x0))?;
            if v::dot(v0, n) <= 0.0 {
                return Err(KineticError::InvalidState(
                    "boundary start needs an inward velocity".into(),
                ));
            }
        }
        Classification::Interior => {}
    }
    let vfac = eps.powf((1.0 - alpha) / alpha);
    let mut x = x0;
    let mut vel = v0;
    let mut t = 0.0;
    let mut n_events = 0usize;
    let mut n_boundary = 0usize;
    let mut sup_dev: f64 = 0.0;
    let mut snapshots = Vec::with_capacity(grid.len());
    let mut grid_iter = grid.iter().copied().peekable();
    let mut events = if record_events { Some(Vec::new()) } else { None };

    while t < t_max {
        let ring = rng.exp(eps);
        let vs = v::scale(vel, vfac);
        let exit = domain.ray_exit_time(x, vs);
        let (lam, hit) = if exit >= ring { (ring, false) } else { (exit, true) };
        let t_next = t + lam;
        // Snapshots strictly inside the flight segment (positions are
        // affine there); a snapshot exactly at an event time is emitted on
        // the next pass, after the velocity refresh.
        while let Some(&tg) = grid_iter.peek() {
            if tg >= t_next.min(t_max) {
                break;
            }
            if tg >= t {
                snapshots.push(ScatterSnapshot { t: tg, x: v::axpy(x, tg - t, vs), v: vel });
            }
            grid_iter.next();
        }
        if t_next >= t_max {
            x = v::axpy(x, t_max - t, vs);
            break;
        }
        // Event at t_next.
        t = t_next;
        x = v::axpy(x, lam, vs);
        n_events += 1;
        sup_dev = sup_dev.max((eps * n_events as f64 - t).abs());
        if hit {
            x = domain.boundary_project(x);
            n_boundary += 1;
            let frame = frames.frame(domain, x)?;
            let w = g.sample_plus(rng);
            vel = frame.apply(w);
        } else {
            vel = f.sample(rng);
        }
        if let Some(ev) = events.as_mut() {
            ev.push(ScatterSnapshot { t, x, v: vel });
        }
        if n_events >= opts.event_cap {
            return Err(KineticError::EventCapExceeded { cap: opts.event_cap, at_time: t });
        }
    }
    let t = t_max;
    sup_dev = sup_dev.max((eps * n_events as f64 - t_max).abs());
    for tg in grid_iter {
        if tg <= t_max {
            snapshots.push(ScatterSnapshot { t: tg, x, v: vel });
        }
    }
    Ok(ScatteringRun {
        snapshots,
        final_state: ScatteringState { x, v: vel, t },
        n_events,
        n_boundary_hits: n_boundary,
        clock_sup_dev: sup_dev,
        events,
    })
}

/// Supremum deviation of the rescaled event counter from the identity,
/// `max_n |eps N_{T_n} - T_n|` together with the endpoint deviation at
/// `t_max`. Evaluating at the event times (right-continuous version) makes
/// a deterministic clock ticking every `eps` deviate by exactly zero.
pub fn clock_deviation(event_times: &[f64], eps: f64, t_max: f64) -> f64 {
    let mut sup: f64 = 0.0;
    let mut n = 0usize;
    for &t in event_times.iter().take_while(|&&t| t <= t_max) {
        n += 1;
        sup = sup.max((eps * n as f64 - t).abs());
    }
    sup.max((eps * n as f64 - t_max).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct MarkovSnapshot<const D: usize> {
    pub t: f64,
    pub x: Point<D>,
    pub on_boundary: bool,
}

#[derive(Debug, Clone)]
pub struct MarkovRun<const D: usize> {
    pub snapshots: Vec<MarkovSnapshot<D>>,
    pub final_position: Point<D>,
    pub final_on_boundary: bool,
    pub n_events: usize,
    pub n_boundary_events: usize,
}

/// Simulate the Markov scattering position process on `[0, t_max]`: at each
/// ring of the rate `1/eps` clock, jump through the cutoff map with a fresh
/// `F_eps` displacement from the interior or a rotated `G_eps` displacement
/// from the boundary. The path never leaves the closed domain.
#[allow(clippy::too_many_arguments)]
pub fn simulate_markov_scattering<const D: usize>(
    domain: &StronglyConvexDomain<D>,
    f: &EquilibriumF<D>,
    g: &BoundaryLawG<D>,
    eps: f64,
    x0: Point<D>,
    t_max: f64,
    grid: &[f64],
    frames: FramePolicy<D>,
    opts: &SimOptions,
    rng: &mut RngStream,
) -> Result<MarkovRun<D>, KineticError> {
    if !domain.in_closure(x0) {
        return Err(KineticError::InvalidState("start outside the closed domain".into()));
    }
    let scale = JumpScale::new(f.alpha, eps);
    let mut x = x0;
    let mut on_b = domain.classify(x0) == Classification::Boundary;
    let mut t = 0.0;
    let mut n_events = 0usize;
    let mut n_boundary_events = 0usize;
    let mut snapshots = Vec::with_capacity(grid.len());
    let mut grid_iter = grid.iter().copied().peekable();

    loop {
        let gap = rng.exp(eps);
        let t_next = t + gap;
        while let Some(&tg) = grid_iter.peek() {
            if tg >= t_next.min(t_max) {
                break;
            }
            if tg >= t {
                snapshots.push(MarkovSnapshot { t: tg, x, on_boundary: on_b });
            }
            grid_iter.next();
        }
        if t_next >= t_max {
            break;
        }
        t = t_next;
        n_events += 1;
        let target = if on_b {
            n_boundary_events += 1;
            let frame = frames.frame(domain, x)?;
            let w = sample_geps(g, scale, rng);
            v::add(x, frame.apply(w))
        } else {
            v::add(x, sample_feps(f, scale, rng))
        };
        let (p, kind) = domain.cutoff(x, target)?;
        x = p;
        on_b = match kind {
            CutoffKind::Inside => domain.classify(p) == Classification::Boundary,
            CutoffKind::Crossed | CutoffKind::Stuck => true,
        };
        if n_events >= opts.event_cap {
            return Err(KineticError::EventCapExceeded { cap: opts.event_cap, at_time: t });
        }
    }
    for tg in grid_iter {
        if tg <= t_max {
            snapshots.push(MarkovSnapshot { t: tg, x, on_boundary: on_b });
        }
    }
    Ok(MarkovRun {
        snapshots,
        final_position: x,
        final_on_boundary: on_b,
        n_events,
        n_boundary_events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type Dom2 = StronglyConvexDomain<2>;

    fn laws2() -> (EquilibriumF<2>, BoundaryLawG<2>) {
        (EquilibriumF::new(1.5, None, None).unwrap(), BoundaryLawG::light(1.0).unwrap())
    }

    #[test]
    fn travel_time_examples() {
        let ball = Dom2::unit_ball();
        assert!((travel_time(&ball, [0.0, 0.0], [1.0, 0.0], 0.5) - 0.5).abs() < 1e-14);
        assert!((travel_time(&ball, [0.0, 0.0], [1.0, 0.0], 3.0) - 1.0).abs() < 1e-12);
        let ell = Dom2::ellipsoid([2.0, 1.0]).unwrap();
        assert!((travel_time(&ell, [0.0, 0.0], [1.0, 0.0], 5.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_restart_points_inward() {
        let ball = Dom2::unit_ball();
        let (f, g) = laws2();
        let mut rng = RngStream::keyed(21, 0, 0);
        // Aim straight at the boundary with a long flight so the first
        // event is a hit.
        let run = simulate_scattering(
            &ball,
            &f,
            &g,
            1e-2,
            [0.0, 0.0],
            [1.0, 0.0],
            0.05,
            &[],
            FramePolicy::canonical(),
            &SimOptions::default(),
            &mut rng,
            false,
        )
        .unwrap();
        assert!(run.final_state.x.iter().all(|c| c.is_finite()));
        // Path stays in the closed domain.
        assert!(ball.in_closure(run.final_state.x));
    }

    #[test]
    fn markov_path_stays_in_closure() {
        let ball = Dom2::unit_ball();
        let (f, g) = laws2();
        let mut rng = RngStream::keyed(22, 0, 0);
        let grid: Vec<f64> = (0..50).map(|k| k as f64 * 0.01).collect();
        let run = simulate_markov_scattering(
            &ball,
            &f,
            &g,
            1e-2,
            [0.5, 0.0],
            0.5,
            &grid,
            FramePolicy::canonical(),
            &SimOptions::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(run.snapshots.len(), grid.len());
        for s in &run.snapshots {
            assert!(ball.in_closure(s.x), "left the domain at t = {}", s.t);
        }
    }

    #[test]
    fn markov_boundary_start_first_jump_admissible() {
        // From the boundary, the first displacement maps into the tangent
        // half-space, so the cutoff lands in the closed domain and the
        // projection on the inward normal is nonnegative.
        let ball = Dom2::unit_ball();
        let (f, g) = laws2();
        for k in 0..200 {
            let mut rng = RngStream::keyed(23, k, 0);
            let run = simulate_markov_scattering(
                &ball,
                &f,
                &g,
                0.5,
                [1.0, 0.0],
                10.0,
                &[],
                FramePolicy::canonical(),
                &SimOptions::default(),
                &mut rng,
            )
            .unwrap();
            assert!(ball.in_closure(run.final_position));
        }
    }

    #[test]
    fn frame_choice_does_not_change_the_law() {
        // In dimension 3 the frame family depends on a puncture point; the
        // boundary restart law does not. Marginals under two different
        // punctures must be statistically indistinguishable.
        let ball = StronglyConvexDomain::<3>::unit_ball();
        let f = EquilibriumF::<3>::new(1.5, None, None).unwrap();
        let g = BoundaryLawG::light(1.0).unwrap();
        let n = 3000u64;
        let run = |puncture: [f64; 3], role: u64| -> Vec<f64> {
            (0..n)
                .map(|k| {
                    let mut rng = RngStream::keyed(25, k, role);
                    let r = simulate_markov_scattering(
                        &ball,
                        &f,
                        &g,
                        0.02,
                        [0.9, 0.0, 0.0],
                        0.5,
                        &[],
                        FramePolicy::with_puncture(puncture),
                        &SimOptions::default(),
                        &mut rng,
                    )
                    .unwrap();
                    r.final_position[0]
                })
                .collect()
        };
        let a = run([0.0, 0.0, 1.0], 0);
        let b = run([-1.0, 0.0, 0.0], 1);
        let ks = crate::stats::ks_two_sample(&a, &b).unwrap();
        assert!(ks.p_value > 1e-3, "frame dependence detected: p = {}", ks.p_value);
    }

    #[test]
    fn clock_deviation_degenerate_cases() {
        assert_eq!(clock_deviation(&[], 1e-3, 0.0), 0.0);
        // Deterministic clock ticking exactly every eps: deviation 0.
        let eps = 0.01;
        let times: Vec<f64> = (1..=100).map(|k| k as f64 * eps).collect();
        assert!(clock_deviation(&times, eps, 1.0) < 1e-12);
    }

    #[test]
    fn free_space_clock_rate_is_one() {
        // In a huge domain no flight reaches the boundary, so the event
        // counter is plain Poisson of rate 1/eps: eps N_T / T ~ 1.
        let big = Dom2::ball(1e6).unwrap();
        let (f, g) = laws2();
        let eps = 1e-2;
        let t_max = 0.5;
        let reps = 64;
        let mut total = 0.0;
        for k in 0..reps {
            let mut rng = RngStream::keyed(26, k, 0);
            let run = simulate_scattering(
                &big,
                &f,
                &g,
                eps,
                [0.0, 0.0],
                [1.0, 0.0],
                t_max,
                &[],
                FramePolicy::canonical(),
                &SimOptions::default(),
                &mut rng,
                false,
            )
            .unwrap();
            assert_eq!(run.n_boundary_hits, 0);
            total += eps * run.n_events as f64 / t_max;
        }
        let mean = total / reps as f64;
        // CI half-width ~ 3 sqrt(eps / (T reps)) = 0.053.
        assert!((mean - 1.0).abs() < 0.06, "rate {mean}");
    }

    #[test]
    fn markov_marginals_cauchy_in_eps() {
        // Marginals at consecutive levels get closer as eps shrinks: the
        // two-sample distance between (eps, eps/2) decreases along eps.
        let ball = Dom2::unit_ball();
        let (f, g) = laws2();
        let n = 20_000u64;
        let sample = |eps: f64, role: u64| -> Vec<f64> {
            (0..n)
                .map(|k| {
                    let mut rng = RngStream::keyed(27, k, role);
                    simulate_markov_scattering(
                        &ball,
                        &f,
                        &g,
                        eps,
                        [0.4, 0.0],
                        0.3,
                        &[],
                        FramePolicy::canonical(),
                        &SimOptions::default(),
                        &mut rng,
                    )
                    .unwrap()
                    .final_position[0]
                })
                .collect()
        };
        let d_coarse = crate::stats::ks_two_sample(&sample(0.2, 0), &sample(0.1, 1))
            .unwrap()
            .statistic;
        let d_fine = crate::stats::ks_two_sample(&sample(0.02, 2), &sample(0.01, 3))
            .unwrap()
            .statistic;
        assert!(
            d_fine < d_coarse,
            "self-distance did not shrink: coarse {d_coarse}, fine {d_fine}"
        );
    }

    #[test]
    fn event_cap_is_a_hard_error() {
        let ball = Dom2::unit_ball();
        let (f, g) = laws2();
        let mut rng = RngStream::keyed(24, 0, 0);
        let r = simulate_markov_scattering(
            &ball,
            &f,
            &g,
            1e-3,
            [0.0, 0.0],
            10.0,
            &[],
            FramePolicy::canonical(),
            &SimOptions { event_cap: 100 },
            &mut rng,
        );
        assert!(matches!(r, Err(KineticError::EventCapExceeded { cap: 100, .. })));
    }
}
