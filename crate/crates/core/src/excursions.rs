//! Half-space excursions under the discrete excursion measures, their
//! summary statistics, and domain stopping.
//!
//! An excursion is a compound-Poisson walk in the closed upper half-space
//! `H = {x . e1 > 0}`: it starts at `O ~ G_eps` (or at a truncated power-law
//! start for the finite measures), jumps with `F_eps` increments at rate
//! `1/eps`, and is stopped at the first state outside `H`. The associated
//! measure assigns this path law the total mass `c_eps / eps`; with
//! `c_eps = chi eps^{1 - zeta}` the mass is `chi eps^{-zeta}`, where
//! `zeta = 1/2` for a light boundary law and `zeta = beta/alpha` for a
//! heavy one.
//!
//! Domain stopping maps an excursion into the tangent half-space at a
//! boundary point through an isometry frame and cuts it at its first exit
//! from the domain, recording the exit time, the undershoot and overshoot
//! states, and the landing point of the cutoff map.

use crate::geometry::{Classification, Frame, GeometryError, StronglyConvexDomain};
use crate::laws::{
    sample_feps, sample_geps, uniform_direction, BoundaryLawG, EquilibriumF, JumpScale, LawError,
};
use crate::numerics::gamma;
use crate::path::JumpPath;
use crate::rng::RngStream;
use crate::vecmath::{self as v, Point};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExcursionError {
    #[error("event cap of {cap} jumps exceeded while sampling an excursion")]
    EventCapExceeded { cap: usize },
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A stopped half-space excursion: a jump path whose interior states have
/// positive first coordinate and whose final state has left the half-space.
#[derive(Debug, Clone, PartialEq)]
pub struct Excursion<const D: usize> {
    pub path: JumpPath<D>,
}

impl<const D: usize> Excursion<D> {
    /// Duration: the time of the exit jump.
    pub fn duration(&self) -> f64 {
        self.path.last_time()
    }

    pub fn start(&self) -> Point<D> {
        self.path.states()[0]
    }

    pub fn end(&self) -> Point<D> {
        self.path.last_state()
    }
}

/// `(duration, amplitude)` of an excursion: the exit time and the supremum
/// of `|e(t)|` over the whole path, endpoints included. Exact on the jump
/// skeleton.
pub fn excursion_statistics<const D: usize>(e: &Excursion<D>) -> (f64, f64) {
    let m = e.path.states().iter().map(|s| v::norm(*s)).fold(0.0, f64::max);
    (e.duration(), m)
}

/// Streaming summary of one sampled excursion.
#[derive(Debug, Clone, Copy)]
pub struct ExcStats<const D: usize> {
    /// Duration (capped at the jump cap when `capped`).
    pub ell: f64,
    /// Supremum of `|e(t)|` up to the (possibly capped) end.
    pub m_sup: f64,
    /// `|e(0)|`: the jump-off displacement from the boundary.
    pub start_abs: f64,
    pub end: Point<D>,
    pub n_jumps: usize,
    pub capped: bool,
}

/// Which excursion measure to sample.
#[derive(Debug, Clone)]
pub enum ExcursionMeasureSpec<const D: usize> {
    /// The discrete measure of the scaled compound-Poisson walk: start
    /// `O ~ G_eps`, rate `1/eps` jumps with `F_eps` increments, total mass
    /// `c_eps/eps`.
    DiscreteEps { f: EquilibriumF<D>, g: BoundaryLawG<D>, eps: f64, chi: f64 },
    /// Finite measure with truncated power-law entrance: start radius
    /// density proportional to `r^{-1-beta}` beyond `cutoff_radius`,
    /// isotropic direction in the half-space, path evolved by the
    /// `eps_path` walk.
    FiniteJBeta { f: EquilibriumF<D>, beta: f64, cutoff_radius: f64, eps_path: f64 },
}

impl<const D: usize> ExcursionMeasureSpec<D> {
    /// Discrete spec with the default normalizing constant: for a heavy
    /// boundary law the closed form `1/(2 kappa_G Gamma(beta + 1))`, for a
    /// light one the convention `chi = 1` (the constant only shifts the
    /// boundary-time drift at order `eps^{1/2}`).
    pub fn discrete(f: EquilibriumF<D>, g: BoundaryLawG<D>, eps: f64) -> Self {
        let chi = match &g {
            BoundaryLawG::Light { .. } => 1.0,
            BoundaryLawG::Heavy { law } => 1.0 / (2.0 * law.kappa * gamma(law.exponent + 1.0)),
        };
        ExcursionMeasureSpec::DiscreteEps { f, g, eps, chi }
    }

    /// Tail-scaling exponent of the measure mass: `1/2` (light) or
    /// `beta/alpha` (heavy); `beta/alpha` for the finite measures.
    pub fn zeta(&self) -> f64 {
        match self {
            ExcursionMeasureSpec::DiscreteEps { f, g, .. } => match g {
                BoundaryLawG::Light { .. } => 0.5,
                BoundaryLawG::Heavy { law } => law.exponent / f.alpha,
            },
            ExcursionMeasureSpec::FiniteJBeta { f, beta, .. } => beta / f.alpha,
        }
    }

    /// The local-time drift coefficient `c_eps` (discrete spec only).
    pub fn c_eps(&self) -> Option<f64> {
        match self {
            ExcursionMeasureSpec::DiscreteEps { eps, chi, .. } => {
                Some(chi * eps.powf(1.0 - self.zeta()))
            }
            ExcursionMeasureSpec::FiniteJBeta { .. } => None,
        }
    }

    /// Total mass of the measure.
    pub fn mass(&self) -> f64 {
        match self {
            ExcursionMeasureSpec::DiscreteEps { eps, .. } => self.c_eps().unwrap() / eps,
            ExcursionMeasureSpec::FiniteJBeta { beta, cutoff_radius, .. } => {
                0.5 * v::sphere_area::<D>() * cutoff_radius.powf(-beta) / beta
            }
        }
    }

    fn walk_eps(&self) -> f64 {
        match self {
            ExcursionMeasureSpec::DiscreteEps { eps, .. } => *eps,
            ExcursionMeasureSpec::FiniteJBeta { eps_path, .. } => *eps_path,
        }
    }

    fn equilibrium(&self) -> &EquilibriumF<D> {
        match self {
            ExcursionMeasureSpec::DiscreteEps { f, .. } => f,
            ExcursionMeasureSpec::FiniteJBeta { f, .. } => f,
        }
    }

    /// Draw the entrance point `e(0)` of an excursion.
    pub(crate) fn sample_start(&self, rng: &mut RngStream) -> Point<D> {
        match self {
            ExcursionMeasureSpec::DiscreteEps { f, g, eps, .. } => {
                sample_geps(g, JumpScale::new(f.alpha, *eps), rng)
            }
            ExcursionMeasureSpec::FiniteJBeta { beta, cutoff_radius, .. } => {
                let r = cutoff_radius * rng.uniform_pos().powf(-1.0 / beta);
                let mut dir = uniform_direction::<D>(rng);
                if dir[0] < 0.0 {
                    dir[0] = -dir[0];
                }
                v::scale(dir, r)
            }
        }
    }
}

/// Sample a full excursion path under the normalized measure. Exceeding
/// `cap` jumps is a hard error.
pub fn sample_excursion<const D: usize>(
    spec: &ExcursionMeasureSpec<D>,
    rng: &mut RngStream,
    cap: usize,
) -> Result<Excursion<D>, ExcursionError> {
    let eps = spec.walk_eps();
    let f = spec.equilibrium();
    let scale = JumpScale::new(f.alpha, eps);
    let start = spec.sample_start(rng);
    let mut path = JumpPath::new(start);
    let mut z = start;
    let mut t = 0.0;
    for _ in 0..cap {
        if z[0] <= 0.0 {
            return Ok(Excursion { path });
        }
        t += rng.exp(eps);
        z = v::add(z, sample_feps(f, scale, rng));
        path.push(t, z);
    }
    if z[0] <= 0.0 {
        return Ok(Excursion { path });
    }
    Err(ExcursionError::EventCapExceeded { cap })
}

/// Sample only the summary statistics of an excursion, without storing the
/// path. Hitting `cap` jumps censors the sample (`capped = true`) instead
/// of failing, which the tail estimators account for.
pub fn sample_excursion_stats<const D: usize>(
    spec: &ExcursionMeasureSpec<D>,
    rng: &mut RngStream,
    cap: usize,
) -> ExcStats<D> {
    let eps = spec.walk_eps();
    let f = spec.equilibrium();
    let scale = JumpScale::new(f.alpha, eps);
    let start = spec.sample_start(rng);
    let start_abs = v::norm(start);
    let mut z = start;
    let mut t = 0.0;
    let mut m_sup = start_abs;
    let mut n = 0usize;
    while z[0] > 0.0 {
        if n >= cap {
            return ExcStats { ell: t, m_sup, start_abs, end: z, n_jumps: n, capped: true };
        }
        t += rng.exp(eps);
        z = v::add(z, sample_feps(f, scale, rng));
        m_sup = m_sup.max(v::norm(z));
        n += 1;
    }
    ExcStats { ell: t, m_sup, start_abs, end: z, n_jumps: n, capped: false }
}

/// An excursion stopped by the domain after mapping through a boundary
/// frame: exit data of the mapped path.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppedExcursion<const D: usize> {
    /// Half-space duration of the underlying excursion.
    pub ell: f64,
    /// First jump time whose mapped state leaves the domain (`0` when the
    /// start already maps outside).
    pub ell_bar: f64,
    /// State just before the domain exit (`0` by the `e(0-) = 0`
    /// convention when `ell_bar = 0`), in half-space coordinates.
    pub undershoot: Point<D>,
    /// State at the domain exit, in half-space coordinates.
    pub overshoot: Point<D>,
    /// Landing point on the boundary: the cutoff of the exit jump.
    pub landing: Point<D>,
    /// Index of the exit jump in the skeleton (0 for an immediate exit).
    pub exit_index: usize,
}

/// Stop an excursion by the domain at the frame `frame` (anchored at a
/// boundary point).
pub fn stop_in_domain<const D: usize>(
    domain: &StronglyConvexDomain<D>,
    frame: &Frame<D>,
    e: &Excursion<D>,
) -> Result<StoppedExcursion<D>, ExcursionError> {
    let states = e.path.states();
    let times = e.path.times();
    let ell = e.duration();
    // Immediate exit: the start maps outside the open domain.
    if domain.classify(frame.map(states[0])) != Classification::Interior {
        let landing = domain.cutoff_point(frame.anchor, frame.map(states[0]))?;
        return Ok(StoppedExcursion {
            ell,
            ell_bar: 0.0,
            undershoot: v::zero(),
            overshoot: states[0],
            landing,
            exit_index: 0,
        });
    }
    for k in 1..states.len() {
        if domain.classify(frame.map(states[k])) != Classification::Interior {
            let landing = domain.cutoff_point(frame.map(states[k - 1]), frame.map(states[k]))?;
            return Ok(StoppedExcursion {
                ell,
                ell_bar: times[k],
                undershoot: states[k - 1],
                overshoot: states[k],
                landing,
                exit_index: k,
            });
        }
    }
    unreachable!("the final excursion state leaves the half-space, hence the domain");
}

/// Jump-off displacements `|e(0)|` of `n` excursions: the distance between
/// the first post-boundary state and the boundary point it leaves from.
pub fn jump_off_displacement<const D: usize>(
    spec: &ExcursionMeasureSpec<D>,
    n: usize,
    rng: &mut RngStream,
) -> Vec<f64> {
    (0..n).map(|_| v::norm(spec.sample_start(rng))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn light_spec(eps: f64) -> ExcursionMeasureSpec<2> {
        ExcursionMeasureSpec::discrete(
            EquilibriumF::new(1.5, None, None).unwrap(),
            BoundaryLawG::light(1.0).unwrap(),
            eps,
        )
    }

    fn heavy_spec(eps: f64) -> ExcursionMeasureSpec<2> {
        ExcursionMeasureSpec::discrete(
            EquilibriumF::new(1.5, None, None).unwrap(),
            BoundaryLawG::heavy(0.5, None, None).unwrap(),
            eps,
        )
    }

    #[test]
    fn sign_pattern() {
        let spec = light_spec(0.3);
        let mut rng = RngStream::keyed(31, 0, 0);
        for _ in 0..500 {
            let e = sample_excursion(&spec, &mut rng, 1_000_000).unwrap();
            let states = e.path.states();
            assert!(e.duration() > 0.0);
            assert!(states[0][0] > 0.0, "start strictly inside the half-space");
            for s in &states[..states.len() - 1] {
                assert!(s[0] > 0.0);
            }
            assert!(e.end()[0] <= 0.0);
        }
    }

    #[test]
    fn statistics_single_jump() {
        let mut p = JumpPath::new([0.5, 0.0]);
        p.push(1.0, [-0.25, 2.0]);
        let e = Excursion { path: p };
        let (ell, m) = excursion_statistics(&e);
        assert_eq!(ell, 1.0);
        let expected = v::norm([-0.25, 2.0]);
        assert_eq!(m, expected.max(0.5));
    }

    #[test]
    fn mass_formulas() {
        let spec = light_spec(0.01);
        assert!((spec.zeta() - 0.5).abs() < 1e-15);
        assert!((spec.mass() - 1.0 / 0.1).abs() < 1e-12);
        let spec = heavy_spec(0.01);
        assert!((spec.zeta() - 0.5 / 1.5).abs() < 1e-15);
        let j = ExcursionMeasureSpec::FiniteJBeta {
            f: EquilibriumF::<2>::new(1.5, None, None).unwrap(),
            beta: 0.5,
            cutoff_radius: 0.1,
            eps_path: 1e-3,
        };
        // (sigma_1 / 2) * r^{-beta} / beta with sigma_1 = 2 pi.
        let exact = std::f64::consts::PI * 0.1f64.powf(-0.5) / 0.5;
        assert!((j.mass() - exact).abs() < 1e-10);
    }

    #[test]
    fn stop_in_domain_immediate_exit() {
        // Unit ball, anchor x = (-1, 0): the frame is the identity and the
        // mapped domain preimage is B(e1, 1). A constant excursion at 3 e1
        // maps to (2, 0), outside, so the exit is immediate and the landing
        // is the cutoff of the segment from x to (2, 0): the point (1, 0).
        let ball = StronglyConvexDomain::<2>::unit_ball();
        let frame = ball.frame_at([-1.0, 0.0], None).unwrap();
        let mut p = JumpPath::new([3.0, 0.0]);
        p.push(0.7, [3.0, -1.0]);
        p.push(0.9, [-0.1, -1.0]);
        let e = Excursion { path: p };
        let s = stop_in_domain(&ball, &frame, &e).unwrap();
        assert_eq!(s.ell_bar, 0.0);
        assert_eq!(s.undershoot, [0.0, 0.0]);
        assert_eq!(s.overshoot, [3.0, 0.0]);
        assert!(v::dist(s.landing, [1.0, 0.0]) < 1e-12);
        assert!((s.ell - 0.9).abs() < 1e-15);
    }

    #[test]
    fn stopped_exit_no_later_than_half_space_exit() {
        let ball = StronglyConvexDomain::<2>::unit_ball();
        let spec = light_spec(0.05);
        let mut rng = RngStream::keyed(32, 0, 0);
        for k in 0..300 {
            let theta = k as f64 * 0.021;
            let x = [theta.cos(), theta.sin()];
            let frame = ball.frame_at(x, None).unwrap();
            // Rare excursions outlive the jump cap; skip those samples.
            let e = match sample_excursion(&spec, &mut rng, 200_000) {
                Ok(e) => e,
                Err(ExcursionError::EventCapExceeded { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let s = stop_in_domain(&ball, &frame, &e).unwrap();
            assert!(s.ell_bar <= s.ell + 1e-15);
            // Landing lies on the boundary and on the exit segment.
            assert_eq!(ball.classify(s.landing), Classification::Boundary);
            let a = if s.exit_index == 0 { frame.anchor } else { frame.map(s.undershoot) };
            let b = frame.map(s.overshoot);
            let seg = v::dist(a, s.landing) + v::dist(s.landing, b) - v::dist(a, b);
            assert!(seg.abs() < 1e-9, "landing off the segment by {seg}");
        }
    }

    #[test]
    fn finite_j_beta_start_radius_is_pareto() {
        // Inverse-CDF oracle implemented independently in the test.
        let j = ExcursionMeasureSpec::FiniteJBeta {
            f: EquilibriumF::<2>::new(1.5, None, None).unwrap(),
            beta: 0.5,
            cutoff_radius: 0.25,
            eps_path: 0.1,
        };
        let mut rng = RngStream::keyed(33, 0, 0);
        let n = 40_000;
        let mut radii: Vec<f64> = (0..n).map(|_| v::norm(j.sample_start(&mut rng))).collect();
        radii.sort_by(f64::total_cmp);
        // Exact Pareto quantile r(q) = cutoff (1 - q)^{-1/beta}.
        for q in [0.1, 0.5, 0.9] {
            let i = (q * n as f64) as usize;
            let exact = 0.25 * (1.0 - q).powf(-2.0);
            assert!(
                (radii[i] - exact).abs() / exact < 0.05,
                "q{q}: {} vs {exact}",
                radii[i]
            );
        }
    }

    #[test]
    fn discrete_mass_bookkeeping_stable_in_eps() {
        // Heavy law: (c_eps/eps) P(|e(0)| > delta) should not drift with eps
        // once delta sits in the tail regime of the start law.
        let delta = 2.0;
        let mut values = Vec::new();
        for (k, eps) in [0.2, 0.05, 0.01].into_iter().enumerate() {
            let spec = heavy_spec(eps);
            let mut rng = RngStream::keyed(34, k as u64, 0);
            let n = 200_000;
            let hits = (0..n)
                .filter(|_| v::norm(spec.sample_start(&mut rng)) > delta)
                .count();
            values.push(spec.mass() * hits as f64 / n as f64);
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        for v in &values {
            assert!((v - mean).abs() / mean < 0.1, "values {values:?}");
        }
    }

    #[test]
    fn jump_off_light_median_scales() {
        // Median displacement scales like eps^{1/alpha} exactly under the
        // light law construction.
        let alpha = 1.5;
        let mut med = Vec::new();
        for (k, eps) in [1e-2, 1e-3].into_iter().enumerate() {
            let spec = light_spec(eps);
            let mut rng = RngStream::keyed(35, k as u64, 0);
            let mut d = jump_off_displacement(&spec, 20_000, &mut rng);
            d.sort_by(f64::total_cmp);
            med.push(d[10_000]);
        }
        let slope = (med[0] / med[1]).ln() / (10.0f64).ln();
        assert!((slope - 1.0 / alpha).abs() < 0.05, "slope {slope}");
    }
}
