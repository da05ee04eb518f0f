//! Velocity laws and scaled jump laws.
//!
//! The equilibrium law `F` is radially symmetric with a uniform core and an
//! exact power tail: beyond the core radius its density is exactly
//! `kappa |v|^{-d-alpha}`, so the tail constant entering the limit theorems
//! is known in closed form. The boundary law `G` is either light (uniform
//! on a ball, all moments finite) or heavy with exponent `beta` and the
//! same core/tail construction.
//!
//! Scaled jump laws: with `E` exponential of mean `eps` and `U ~ F`,
//! `W ~ G_+`, the one-step displacement laws are
//! `F_eps = law(eps^{(1-alpha)/alpha} E U)` and likewise `G_eps`, `H_eps`
//! (the joint law sharing the same `E`). Equivalently `eps^{1/alpha} E1 U`
//! with `E1` a unit exponential, which is the form used here.

use crate::rng::RngStream;
use crate::vecmath::{self as v, Point};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("invalid law parameter: {0}")]
    InvalidParam(String),
}

/// Radially symmetric density with uniform core `B(0, core_radius)` and
/// exact tail `kappa |v|^{-d-exponent}` beyond it.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPowerLaw<const D: usize> {
    pub exponent: f64,
    pub kappa: f64,
    pub core_radius: f64,
    tail_mass: f64,
    core_density: f64,
}

impl<const D: usize> RadialPowerLaw<D> {
    /// Build the law. A pinned `kappa` with no core radius selects the
    /// radius at which the tail carries half the mass; a pinned core radius
    /// with no `kappa` derives the tail constant the same way; neither
    /// pinned gives core radius 1.
    pub fn new(
        exponent: f64,
        kappa: Option<f64>,
        core_radius: Option<f64>,
    ) -> Result<Self, LawError> {
        if !(exponent > 0.0) {
            return Err(LawError::InvalidParam("tail exponent must be positive".into()));
        }
        if matches!(kappa, Some(k) if !(k > 0.0)) || matches!(core_radius, Some(r) if !(r > 0.0)) {
            return Err(LawError::InvalidParam(
                "tail constant and core radius must be positive".into(),
            ));
        }
        let sigma = v::sphere_area::<D>();
        let (kappa, r) = match (kappa, core_radius) {
            (Some(k), Some(r)) => (k, r),
            (Some(k), None) => (k, (2.0 * k * sigma / exponent).powf(1.0 / exponent)),
            (None, r) => {
                let r = r.unwrap_or(1.0);
                (0.5 * exponent * r.powf(exponent) / sigma, r)
            }
        };
        let tail_mass = kappa * sigma * r.powf(-exponent) / exponent;
        if tail_mass >= 1.0 {
            return Err(LawError::InvalidParam(format!(
                "tail mass {tail_mass:.3} >= 1; increase the core radius"
            )));
        }
        let core_density = (1.0 - tail_mass) / (v::ball_volume::<D>() * r.powi(D as i32));
        Ok(Self { exponent, kappa, core_radius: r, tail_mass, core_density })
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn density(&self, p: Point<D>) -> f64 {
        let r = v::norm(p);
        if r <= self.core_radius {
            self.core_density
        } else {
            self.kappa * r.powf(-(D as f64) - self.exponent)
        }
    }

    /// Exact `P(|V| > u)` for `u >= core_radius`.
    pub fn tail_probability(&self, u: f64) -> f64 {
        assert!(u >= self.core_radius);
        self.kappa * v::sphere_area::<D>() * u.powf(-self.exponent) / self.exponent
    }

    pub fn sample_radius(&self, rng: &mut RngStream) -> f64 {
        if rng.uniform() < self.tail_mass {
            self.core_radius * rng.uniform_pos().powf(-1.0 / self.exponent)
        } else {
            self.core_radius * rng.uniform_pos().powf(1.0 / D as f64)
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Point<D> {
        let r = self.sample_radius(rng);
        v::scale(uniform_direction::<D>(rng), r)
    }
}

/// Uniform direction on the unit sphere.
pub fn uniform_direction<const D: usize>(rng: &mut RngStream) -> Point<D> {
    let mut out = [0.0; D];
    match D {
        2 => {
            let t = rng.angle();
            out[0] = t.cos();
            out[1] = t.sin();
        }
        3 => {
            let z = 2.0 * rng.uniform() - 1.0;
            let t = rng.angle();
            let r = (1.0 - z * z).max(0.0).sqrt();
            out[0] = r * t.cos();
            out[1] = r * t.sin();
            out[2] = z;
        }
        _ => unreachable!("only d = 2 and d = 3 are supported"),
    }
    out
}

/// The equilibrium velocity law `F`: tail `~ kappa_f |v|^{-d-alpha}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumF<const D: usize> {
    pub alpha: f64,
    law: RadialPowerLaw<D>,
}

impl<const D: usize> EquilibriumF<D> {
    /// `kappa = None` selects the normalization `1/Gamma(alpha + 1)` under
    /// which the limiting jump intensity is exactly `|z|^{-d-alpha}`.
    pub fn new(alpha: f64, kappa: Option<f64>, core_radius: Option<f64>) -> Result<Self, LawError> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(LawError::InvalidParam(format!("alpha = {alpha} not in (0, 2)")));
        }
        let kappa = kappa.unwrap_or_else(|| 1.0 / crate::numerics::gamma(alpha + 1.0));
        Ok(Self { alpha, law: RadialPowerLaw::new(alpha, Some(kappa), core_radius)? })
    }

    pub fn kappa(&self) -> f64 {
        self.law.kappa
    }

    pub fn core_radius(&self) -> f64 {
        self.law.core_radius
    }

    pub fn density(&self, p: Point<D>) -> f64 {
        self.law.density(p)
    }

    pub fn tail_probability(&self, u: f64) -> f64 {
        self.law.tail_probability(u)
    }

    pub fn sample(&self, rng: &mut RngStream) -> Point<D> {
        self.law.sample(rng)
    }
}

/// The boundary velocity law `G`.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryLawG<const D: usize> {
    /// Uniform on `B(0, radius)`: every moment finite.
    Light { radius: f64 },
    /// Heavy tail `~ kappa |v|^{-d-beta}`.
    Heavy { law: RadialPowerLaw<D> },
}

impl<const D: usize> BoundaryLawG<D> {
    pub fn light(radius: f64) -> Result<Self, LawError> {
        if !(radius > 0.0) {
            return Err(LawError::InvalidParam("light G radius must be positive".into()));
        }
        Ok(BoundaryLawG::Light { radius })
    }

    /// Heavy law with exponent `beta`; `kappa = None` derives the tail
    /// constant from a unit core radius.
    pub fn heavy(
        beta: f64,
        kappa: Option<f64>,
        core_radius: Option<f64>,
    ) -> Result<Self, LawError> {
        Ok(BoundaryLawG::Heavy { law: RadialPowerLaw::new(beta, kappa, core_radius)? })
    }

    pub fn density(&self, p: Point<D>) -> f64 {
        match self {
            BoundaryLawG::Light { radius } => {
                if v::norm(p) <= *radius {
                    1.0 / (v::ball_volume::<D>() * radius.powi(D as i32))
                } else {
                    0.0
                }
            }
            BoundaryLawG::Heavy { law } => law.density(p),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Point<D> {
        match self {
            BoundaryLawG::Light { radius } => {
                let r = *radius * rng.uniform_pos().powf(1.0 / D as f64);
                v::scale(uniform_direction::<D>(rng), r)
            }
            BoundaryLawG::Heavy { law } => law.sample(rng),
        }
    }

    /// Draw from `G_+ = 2 G` restricted to the open half-space `v . e1 > 0`.
    pub fn sample_plus(&self, rng: &mut RngStream) -> Point<D> {
        loop {
            let mut w = self.sample(rng);
            if w[0] < 0.0 {
                w[0] = -w[0];
            }
            if w[0] > 0.0 {
                return w;
            }
        }
    }
}

/// Precomputed scale factors of the one-step jump laws at a given `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpScale {
    pub eps: f64,
    /// `eps^{1/alpha}`: the spatial scale of one jump.
    pub factor: f64,
}

impl JumpScale {
    pub fn new(alpha: f64, eps: f64) -> Self {
        Self { eps, factor: eps.powf(1.0 / alpha) }
    }
}

/// One draw from `F_eps`.
pub fn sample_feps<const D: usize>(
    f: &EquilibriumF<D>,
    scale: JumpScale,
    rng: &mut RngStream,
) -> Point<D> {
    let e1 = rng.exp(1.0);
    v::scale(f.sample(rng), scale.factor * e1)
}

/// One draw from `G_eps` (supported in the half-space `v . e1 > 0`).
pub fn sample_geps<const D: usize>(
    g: &BoundaryLawG<D>,
    scale: JumpScale,
    rng: &mut RngStream,
) -> Point<D> {
    let e1 = rng.exp(1.0);
    v::scale(g.sample_plus(rng), scale.factor * e1)
}

/// One draw from the joint law `H_eps`: the same exponential factor
/// multiplies both coordinates.
pub fn sample_heps<const D: usize>(
    f: &EquilibriumF<D>,
    g: &BoundaryLawG<D>,
    scale: JumpScale,
    rng: &mut RngStream,
) -> (Point<D>, Point<D>) {
    let e1 = rng.exp(1.0);
    let u = v::scale(f.sample(rng), scale.factor * e1);
    let w = v::scale(g.sample_plus(rng), scale.factor * e1);
    (u, w)
}

/// Symmetric one-dimensional alpha-stable increment of time length `t`
/// (Chambers–Mallows–Stuck transform; standard scale, characteristic
/// function `exp(-t |theta|^alpha)` up to the usual normalization).
pub fn sample_stable_1d(rng: &mut RngStream, alpha: f64, t: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 2.0 && t > 0.0);
    let vangle = std::f64::consts::PI * (rng.uniform() - 0.5);
    let x = if (alpha - 1.0).abs() < 1e-12 {
        vangle.tan()
    } else {
        let e = rng.exp(1.0);
        let s = (alpha * vangle).sin() / vangle.cos().powf(1.0 / alpha);
        let c = (((1.0 - alpha) * vangle).cos() / e).powf((1.0 - alpha) / alpha);
        s * c
    };
    t.powf(1.0 / alpha) * x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;

    #[test]
    fn f_density_integrates_to_one() {
        let f = EquilibriumF::<2>::new(1.5, None, None).unwrap();
        // Radial quadrature over the core plus the exact analytic tail.
        let core = integrate(
            |r| f.density([r, 0.0]) * 2.0 * std::f64::consts::PI * r,
            0.0,
            f.core_radius(),
            1e-12,
            2000,
        );
        let total = core.value + f.tail_probability(f.core_radius());
        assert!((total - 1.0).abs() < 1e-8, "total {total}");
    }

    #[test]
    fn f_tail_matches_analytic() {
        let f = EquilibriumF::<2>::new(1.5, None, None).unwrap();
        let mut rng = RngStream::keyed(11, 0, 0);
        let n = 400_000;
        let u = 2.0 * f.core_radius();
        let hits = (0..n).filter(|_| v::norm(f.sample(&mut rng)) > u).count();
        let p_hat = hits as f64 / n as f64;
        let p = f.tail_probability(u);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((p_hat - p).abs() < 5.0 * se, "p_hat {p_hat}, p {p}");
    }

    #[test]
    fn f_mean_is_zero() {
        let f = EquilibriumF::<2>::new(1.5, None, None).unwrap();
        let mut rng = RngStream::keyed(12, 0, 0);
        let n = 200_000;
        let mut m = [0.0, 0.0];
        for _ in 0..n {
            m = v::add(m, f.sample(&mut rng));
        }
        // alpha > 1 so the mean exists; the CI is loose because the
        // variance is infinite. Clip-free check against a wide band.
        assert!(v::norm(m) / n as f64 <= 0.08, "mean {:?}", v::scale(m, 1.0 / n as f64));
    }

    #[test]
    fn gplus_supported_in_half_space() {
        let g = BoundaryLawG::<2>::heavy(0.5, None, None).unwrap();
        let mut rng = RngStream::keyed(13, 0, 0);
        for _ in 0..10_000 {
            assert!(g.sample_plus(&mut rng)[0] > 0.0);
        }
    }

    #[test]
    fn light_g_moment_stabilizes() {
        let g = BoundaryLawG::<2>::light(1.0).unwrap();
        let mut rng = RngStream::keyed(14, 0, 0);
        let alpha_half = 0.75;
        let m: f64 = (0..50_000)
            .map(|_| v::norm(g.sample_plus(&mut rng)).powf(alpha_half))
            .sum::<f64>()
            / 50_000.0;
        // E |W|^{3/4} for W uniform on the unit disk: 2/(2 + 3/4).
        let exact = 2.0 / 2.75;
        assert!((m - exact).abs() < 0.01, "m {m}");
    }

    #[test]
    fn feps_scaling_identity_in_law() {
        // eps^{1/alpha}-scaling: quantiles of |F_eps| at eps and of the
        // rescaled law at 1 agree.
        let f = EquilibriumF::<2>::new(1.2, None, None).unwrap();
        let eps = 0.3;
        let s_eps = JumpScale::new(1.2, eps);
        let s_one = JumpScale::new(1.2, 1.0);
        let mut r1 = RngStream::keyed(15, 0, 0);
        let mut r2 = RngStream::keyed(15, 1, 0);
        let n = 60_000;
        let mut a: Vec<f64> = (0..n).map(|_| v::norm(sample_feps(&f, s_eps, &mut r1))).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|_| eps.powf(1.0 / 1.2) * v::norm(sample_feps(&f, s_one, &mut r2)))
            .collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for q in [0.25, 0.5, 0.75, 0.9] {
            let i = (q * (n as f64)) as usize;
            let (qa, qb) = (a[i], b[i]);
            assert!((qa - qb).abs() / qb < 0.05, "q{q}: {qa} vs {qb}");
        }
    }

    #[test]
    fn stable_cauchy_quartiles() {
        let mut rng = RngStream::keyed(16, 0, 0);
        let t = 2.0;
        let n = 200_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_stable_1d(&mut rng, 1.0, t)).collect();
        xs.sort_by(f64::total_cmp);
        let q1 = xs[n / 4];
        let q2 = xs[n / 2];
        let q3 = xs[3 * n / 4];
        // Cauchy of scale t: median 0, quartiles at -t and t.
        assert!(q2.abs() < 0.03 * t, "median {q2}");
        assert!((q1 + t).abs() < 0.05 * t, "q1 {q1}");
        assert!((q3 - t).abs() < 0.05 * t, "q3 {q3}");
    }

    #[test]
    fn stable_near_gaussian_quartile() {
        // As alpha -> 2 the law degenerates to N(0, 2): check the quartile.
        let mut rng = RngStream::keyed(17, 0, 0);
        let n = 200_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_stable_1d(&mut rng, 1.99, 1.0)).collect();
        xs.sort_by(f64::total_cmp);
        let q3 = xs[3 * n / 4];
        let gauss_q3 = 0.674_489_75 * 2.0f64.sqrt();
        assert!((q3 - gauss_q3).abs() < 0.05, "q3 {q3} vs {gauss_q3}");
    }

    #[test]
    fn stable_self_similarity() {
        let mut r1 = RngStream::keyed(18, 0, 0);
        let mut r2 = RngStream::keyed(18, 1, 0);
        let alpha = 1.5;
        let t = 3.0;
        let n = 100_000;
        let mut a: Vec<f64> = (0..n).map(|_| sample_stable_1d(&mut r1, alpha, t)).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|_| t.powf(1.0 / alpha) * sample_stable_1d(&mut r2, alpha, 1.0))
            .collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        // Compare quantiles on the scale of the interquartile range (the
        // median of a symmetric law sits at 0).
        let iqr = a[3 * n / 4] - a[n / 4];
        for q in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let i = (q * n as f64) as usize;
            let (qa, qb) = (a[i], b[i]);
            assert!((qa - qb).abs() / iqr < 0.05, "q{q}: {qa} vs {qb}");
        }
    }

    #[test]
    fn reproducibility_bitwise() {
        let f = EquilibriumF::<3>::new(0.8, None, None).unwrap();
        let mut a = RngStream::keyed(19, 5, 2);
        let mut b = RngStream::keyed(19, 5, 2);
        for _ in 0..100 {
            assert_eq!(f.sample(&mut a), f.sample(&mut b));
        }
    }
}
