//! Exact geometry of the strongly convex domain: containment queries,
//! inward normals, the jump cutoff map, boundary frames, and local
//! boundary graphs.
//!
//! Domains are analytic (balls and ellipsoids centered at the origin), so
//! every query reduces to a quadratic in one variable and is solved in
//! closed form with a numerically stable discriminant.

use crate::vecmath::{self as v, Point};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point is not on the boundary (quadratic form = {0})")]
    NotOnBoundary(f64),
    #[error("base point lies outside the closed domain (quadratic form = {0})")]
    OutsideClosure(f64),
    #[error("frame puncture coincides with the base point")]
    PunctureAtBase,
    #[error("local graph evaluated at |v| = {radius}, beyond the chart radius {max}")]
    GraphRadiusExceeded { radius: f64, max: f64 },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("thales bound requires y interior and z exterior")]
    ThalesPrecondition,
}

/// Where a point sits relative to the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Interior,
    Boundary,
    Exterior,
}

/// How the cutoff map resolved an attempted jump from `y` to `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffKind {
    /// `z` already in the closed domain; the jump goes through.
    Inside,
    /// The segment `(y, z]` crosses the boundary; the jump is stopped there.
    Crossed,
    /// `y` is on the boundary and the segment leaves immediately; no move.
    Stuck,
}

/// An open, bounded, strongly convex domain: the unit ball or an
/// origin-centered axis-aligned ellipsoid.
#[derive(Debug, Clone, PartialEq)]
pub enum StronglyConvexDomain<const D: usize> {
    UnitBall,
    Ellipsoid { semi_axes: [f64; D] },
}

impl<const D: usize> StronglyConvexDomain<D> {
    pub fn unit_ball() -> Self {
        StronglyConvexDomain::UnitBall
    }

    pub fn ellipsoid(semi_axes: [f64; D]) -> Result<Self, GeometryError> {
        if semi_axes.iter().any(|a| !a.is_finite() || *a <= 0.0) {
            return Err(GeometryError::InvalidDomain(
                "semi-axes must be strictly positive".into(),
            ));
        }
        Ok(StronglyConvexDomain::Ellipsoid { semi_axes })
    }

    /// Ball of radius `r` (an ellipsoid with equal semi-axes).
    pub fn ball(r: f64) -> Result<Self, GeometryError> {
        Self::ellipsoid([r; D])
    }

    #[inline]
    pub fn semi_axes(&self) -> [f64; D] {
        match self {
            StronglyConvexDomain::UnitBall => [1.0; D],
            StronglyConvexDomain::Ellipsoid { semi_axes } => *semi_axes,
        }
    }

    fn axis_min(&self) -> f64 {
        self.semi_axes().into_iter().fold(f64::INFINITY, f64::min)
    }

    fn axis_max(&self) -> f64 {
        self.semi_axes().into_iter().fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.axis_max()
    }

    /// Radius of the largest ball centered at the origin inside the domain.
    pub fn inradius(&self) -> f64 {
        self.axis_min()
    }

    /// Radius `r` such that the tangent ball `B(x + r n_x, r)` stays inside
    /// the domain for every boundary point `x` (the smallest curvature
    /// radius of the boundary).
    pub fn tangent_ball_radius(&self) -> f64 {
        let a = self.semi_axes();
        let amin = self.axis_min();
        let amax = a.into_iter().fold(0.0, f64::max);
        amin * amin / amax
    }

    /// Chart radius for local boundary graphs: half the smallest curvature
    /// radius, which keeps the graph single-valued and convex.
    pub fn graph_radius(&self) -> f64 {
        0.5 * self.tangent_ball_radius()
    }

    /// Quadratic form `q(p) = sum (p_i / a_i)^2`; the boundary is `q = 1`.
    #[inline]
    pub fn q_value(&self, p: Point<D>) -> f64 {
        match self {
            StronglyConvexDomain::UnitBall => v::norm_sq(p),
            StronglyConvexDomain::Ellipsoid { semi_axes } => {
                let mut s = 0.0;
                for i in 0..D {
                    let t = p[i] / semi_axes[i];
                    s += t * t;
                }
                s
            }
        }
    }

    /// Tolerance on `q` corresponding to a relative boundary thickness of
    /// about `1e-12` of the diameter.
    #[inline]
    fn q_tol(&self) -> f64 {
        8e-12 * (self.axis_max() / self.axis_min()).max(1.0)
    }

    pub fn classify(&self, p: Point<D>) -> Classification {
        let q = self.q_value(p);
        let tol = self.q_tol();
        if q < 1.0 - tol {
            Classification::Interior
        } else if q > 1.0 + tol {
            Classification::Exterior
        } else {
            Classification::Boundary
        }
    }

    #[inline]
    pub fn in_closure(&self, p: Point<D>) -> bool {
        self.q_value(p) <= 1.0 + self.q_tol()
    }

    /// Exact radial projection onto the boundary (for origin-centered
    /// ellipsoids `p / sqrt(q(p))` satisfies `q = 1` identically).
    pub fn boundary_project(&self, p: Point<D>) -> Point<D> {
        let q = self.q_value(p);
        v::scale(p, 1.0 / q.sqrt())
    }

    /// Unit normal at the boundary point `x`, pointing into the domain.
    pub fn inward_normal(&self, x: Point<D>) -> Result<Point<D>, GeometryError> {
        let q = self.q_value(x);
        if (q - 1.0).abs() > 1e-8 {
            return Err(GeometryError::NotOnBoundary(q));
        }
        let a = self.semi_axes();
        let mut g = [0.0; D];
        for i in 0..D {
            g[i] = -x[i] / (a[i] * a[i]);
        }
        Ok(v::normalize(g))
    }

    /// Largest root `t >= 0` of `q(y + t w) = 1`, solved with the stable
    /// quadratic formula. Requires `q(y) <= 1` (clamped) and `w != 0`.
    fn forward_crossing(&self, y: Point<D>, w: Point<D>) -> f64 {
        let ax = self.semi_axes();
        let mut qa = 0.0;
        let mut qb = 0.0;
        for i in 0..D {
            let wi = w[i] / ax[i];
            let yi = y[i] / ax[i];
            qa += wi * wi;
            qb += 2.0 * yi * wi;
        }
        let qc = (self.q_value(y) - 1.0).min(0.0);
        let disc = qb * qb - 4.0 * qa * qc;
        let sd = disc.max(0.0).sqrt();
        if qb <= 0.0 {
            (-qb + sd) / (2.0 * qa)
        } else {
            // qc <= 0, so this root is the nonnegative one.
            -2.0 * qc / (qb + sd)
        }
    }

    /// First time `u > 0` at which the ray `x + u v` leaves the open domain
    /// (for `x` in the closure; equals the far-side crossing when `x` is on
    /// the boundary and `v` points inward).
    pub fn ray_exit_time(&self, x: Point<D>, vdir: Point<D>) -> f64 {
        self.forward_crossing(x, vdir)
    }

    /// The jump cutoff map: where an attempted jump from `y` to `z` lands.
    ///
    /// Returns `z` when `z` is in the closed domain; otherwise the unique
    /// point of `(y, z] ∩ ∂D` when the segment crosses the boundary; and
    /// `y` itself when `y` is on the boundary and the segment leaves
    /// immediately. The output is always in the closed domain and on the
    /// segment `[y, z]`.
    pub fn cutoff(&self, y: Point<D>, z: Point<D>) -> Result<(Point<D>, CutoffKind), GeometryError> {
        let qy = self.q_value(y);
        if qy > 1.0 + 1e-9 {
            return Err(GeometryError::OutsideClosure(qy));
        }
        if self.in_closure(z) {
            return Ok((z, CutoffKind::Inside));
        }
        let w = v::sub(z, y);
        let theta = self.forward_crossing(y, w);
        if theta <= 0.0 {
            return Ok((y, CutoffKind::Stuck));
        }
        let theta = theta.min(1.0);
        let p = self.boundary_project(v::axpy(y, theta, w));
        Ok((p, CutoffKind::Crossed))
    }

    /// `cutoff` without the kind tag.
    pub fn cutoff_point(&self, y: Point<D>, z: Point<D>) -> Result<Point<D>, GeometryError> {
        self.cutoff(y, z).map(|(p, _)| p)
    }

    /// Euclidean distance from `p` to the boundary surface (works for
    /// interior and exterior points).
    pub fn dist_to_boundary(&self, p: Point<D>) -> f64 {
        match self {
            StronglyConvexDomain::UnitBall => (1.0 - v::norm(p)).abs(),
            StronglyConvexDomain::Ellipsoid { semi_axes } => {
                if semi_axes.iter().all(|a| *a == semi_axes[0]) {
                    return (semi_axes[0] - v::norm(p)).abs();
                }
                match D {
                    2 => ellipse_boundary_distance_2d([semi_axes[0], semi_axes[1]], [p[0], p[1]]),
                    _ => ellipsoid_boundary_distance(*semi_axes, p),
                }
            }
        }
    }

    /// Consequence of the Thales theorem: for `y` interior and `z`
    /// exterior, the crossing point `a = cutoff(y, z)` satisfies
    /// `|a - z| <= |y - z| d(z, ∂D) / d(y, ∂D)`. Returns `(a, bound)`.
    pub fn thales_bound(&self, y: Point<D>, z: Point<D>) -> Result<(Point<D>, f64), GeometryError> {
        if self.classify(y) != Classification::Interior || self.classify(z) != Classification::Exterior
        {
            return Err(GeometryError::ThalesPrecondition);
        }
        let (a, kind) = self.cutoff(y, z)?;
        debug_assert_eq!(kind, CutoffKind::Crossed);
        let bound = v::dist(y, z) * self.dist_to_boundary(z) / self.dist_to_boundary(y);
        Ok((a, bound))
    }

    /// Orthogonal frame at the boundary point `x` whose first column is the
    /// inward normal. In dimension 2 this is the explicit rotation, which
    /// is globally Lipschitz in `x`; in dimension 3 a tangent frame built
    /// from stereographic coordinates punctured at `puncture` (required,
    /// and distinct from `x`).
    pub fn frame_at(
        &self,
        x: Point<D>,
        puncture: Option<Point<D>>,
    ) -> Result<Frame<D>, GeometryError> {
        let n = self.inward_normal(x)?;
        match D {
            2 => {
                let mut cols = [[0.0; D]; D];
                cols[0] = n;
                // Rotation sending e1 to n: second column (-n_2, n_1).
                cols[1][0] = -n[1];
                cols[1][1] = n[0];
                Ok(Frame { cols, anchor: x })
            }
            3 => {
                let p = puncture.ok_or(GeometryError::PunctureAtBase)?;
                if v::dist(p, x) < 1e-9 * self.diameter() {
                    return Err(GeometryError::PunctureAtBase);
                }
                let axes = self.semi_axes();
                let to_sphere = |u: Point<D>| {
                    let mut s = u;
                    for i in 0..D {
                        s[i] /= axes[i];
                    }
                    v::normalize(s)
                };
                let s = to_sphere(x);
                let sp = to_sphere(p);
                let (t1, t2) = sphere_tangents_away_from(s, sp);
                // Pull the sphere tangents back to the ellipsoid and
                // orthonormalize against the inward normal.
                let mut tau1 = t1;
                let mut tau2 = t2;
                for i in 0..D {
                    tau1[i] *= axes[i];
                    tau2[i] *= axes[i];
                }
                let g2 = v::normalize(v::axpy(tau1, -v::dot(tau1, n), n));
                let mut g3 = v::axpy(tau2, -v::dot(tau2, n), n);
                g3 = v::normalize(v::axpy(g3, -v::dot(g3, g2), g2));
                let mut cols = [[0.0; D]; D];
                cols[0] = n;
                cols[1] = g2;
                cols[2] = g3;
                Ok(Frame { cols, anchor: x })
            }
            _ => unreachable!("only d = 2 and d = 3 are supported"),
        }
    }

    /// Height `u1 = psi(v)` of the boundary over its tangent chart at `x`:
    /// the smallest `u1 >= 0` with `x + A(u1 e1 + (0, v))` on the boundary.
    pub fn graph_height(
        &self,
        frame: &Frame<D>,
        vtan: &[f64],
    ) -> Result<f64, GeometryError> {
        debug_assert_eq!(vtan.len(), D - 1);
        let r2: f64 = vtan.iter().map(|t| t * t).sum();
        let radius = r2.sqrt();
        let max = self.graph_radius();
        if radius >= max {
            return Err(GeometryError::GraphRadiusExceeded { radius, max });
        }
        // Base point of the chart ray: x + A (0, v).
        let mut base = frame.anchor;
        for (j, &t) in vtan.iter().enumerate() {
            base = v::axpy(base, t, frame.cols[j + 1]);
        }
        let n = frame.cols[0];
        let ax = self.semi_axes();
        let mut qa = 0.0;
        let mut qb = 0.0;
        let mut qc = -1.0;
        for i in 0..D {
            let ni = n[i] / ax[i];
            let bi = base[i] / ax[i];
            qa += ni * ni;
            qb += 2.0 * bi * ni;
            qc += bi * bi;
        }
        // Smallest nonnegative root: within the chart radius the base point
        // is outside the domain, so qc >= 0 and both roots are real.
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return Err(GeometryError::GraphRadiusExceeded { radius, max });
        }
        let sd = disc.sqrt();
        let root = if qb <= 0.0 {
            let r = 2.0 * qc.max(0.0) / (-qb + sd);
            if r.is_finite() {
                r
            } else {
                0.0
            }
        } else {
            // Chart convexity makes this branch unreachable for |v| < eps1;
            // fall back to the direct formula.
            (-qb + sd) / (2.0 * qa)
        };
        Ok(root.max(0.0))
    }
}

/// Tangent frame of the unit sphere at `s`, smooth away from the puncture
/// `p`, from the conformality of the stereographic chart based at `p`.
fn sphere_tangents_away_from<const D: usize>(s: Point<D>, p: Point<D>) -> (Point<D>, Point<D>) {
    // Fixed orthonormal basis (u, v) of the plane orthogonal to p.
    let mut k = 0;
    let mut best = f64::INFINITY;
    for i in 0..D {
        if p[i].abs() < best {
            best = p[i].abs();
            k = i;
        }
    }
    let e = v::basis::<D>(k);
    let u = v::normalize(v::axpy(e, -v::dot(e, p), p));
    let mut w = [0.0; D];
    // Cross product p x u (D = 3 only).
    w[0] = p[1] * u[2] - p[2] * u[1];
    w[1] = p[2] * u[0] - p[0] * u[2];
    w[2] = p[0] * u[1] - p[1] * u[0];
    let w = v::normalize(w);

    // Stereographic coordinate of s in the (u, w) plane.
    let denom = 1.0 - v::dot(s, p);
    let xi_u = v::dot(s, u) / denom;
    let xi_w = v::dot(s, w) / denom;
    let q = xi_u * xi_u + xi_w * xi_w + 1.0;

    // sigma(xi) = ((|xi|^2 - 1) p + 2 xi) / (|xi|^2 + 1); differentiate in xi_u, xi_w.
    let sigma = {
        let mut out = v::scale(p, (q - 2.0) / q);
        out = v::axpy(out, 2.0 * xi_u / q, u);
        out = v::axpy(out, 2.0 * xi_w / q, w);
        out
    };
    let d_of = |xi_j: f64, ej: Point<D>| {
        let mut t = v::scale(p, 2.0 * xi_j / q);
        t = v::axpy(t, 2.0 / q, ej);
        v::normalize(v::axpy(t, -2.0 * xi_j / q, sigma))
    };
    (d_of(xi_u, u), d_of(xi_w, w))
}

/// Distance from `p` to an origin-centered ellipse boundary (d = 2), by a
/// scan over the boundary parameter refined with golden-section search.
fn ellipse_boundary_distance_2d(axes: [f64; 2], p: [f64; 2]) -> f64 {
    let dist2 = |t: f64| {
        let dx = axes[0] * t.cos() - p[0];
        let dy = axes[1] * t.sin() - p[1];
        dx * dx + dy * dy
    };
    let n = 256;
    let mut best_k = 0;
    let mut best = f64::INFINITY;
    for k in 0..n {
        let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let d = dist2(t);
        if d < best {
            best = d;
            best_k = k;
        }
    }
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let mut lo = (best_k as f64 - 1.0) * step;
    let mut hi = (best_k as f64 + 1.0) * step;
    let phi = 0.5 * (3.0 - 5.0f64.sqrt());
    for _ in 0..80 {
        let a = lo + phi * (hi - lo);
        let b = hi - phi * (hi - lo);
        if dist2(a) < dist2(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    dist2(0.5 * (lo + hi)).sqrt()
}

/// Distance from `p` to an origin-centered ellipsoid boundary (d >= 3), by
/// bisection on the projection equation `sum (a_i p_i / (a_i^2 + t))^2 = 1`.
/// Exact on the monotone branch; points at the centre fall back to the
/// shortest semi-axis.
fn ellipsoid_boundary_distance<const D: usize>(axes: [f64; D], p: Point<D>) -> f64 {
    let amin = axes.into_iter().fold(f64::INFINITY, f64::min);
    let amin2 = amin * amin;
    if v::norm(p) < 1e-12 * amin {
        return amin;
    }
    let f = |t: f64| -> f64 {
        let mut s = 0.0;
        for i in 0..D {
            let r = axes[i] * p[i] / (axes[i] * axes[i] + t);
            s += r * r;
        }
        s
    };
    let mut lo = -amin2 * (1.0 - 1e-14);
    let mut hi = amin2 + v::norm_sq(p);
    while f(hi) > 1.0 {
        hi *= 2.0;
    }
    if f(lo) < 1.0 {
        lo = -amin2 * (1.0 - 1e-14);
        // Interior of the evolute along a degenerate direction: the
        // projection equation has no root on the branch; the clamped value
        // still gives the distance to within the branch gap.
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 * (1.0 + hi.abs()) {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    let mut q = [0.0; D];
    for i in 0..D {
        q[i] = axes[i] * axes[i] * p[i] / (axes[i] * axes[i] + t);
    }
    v::dist(p, q)
}

/// An orthogonal frame anchored at a boundary point, with first column the
/// inward normal: the isometry carrying the reference half-space onto the
/// tangent half-space at the anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame<const D: usize> {
    /// Columns of the orthogonal matrix; `cols[0]` is the inward normal.
    pub cols: [Point<D>; D],
    /// The boundary point the frame is attached to.
    pub anchor: Point<D>,
}

impl<const D: usize> Frame<D> {
    /// Apply the linear part: `A u`.
    #[inline]
    pub fn apply(&self, u: Point<D>) -> Point<D> {
        let mut out = [0.0; D];
        for j in 0..D {
            for i in 0..D {
                out[i] += u[j] * self.cols[j][i];
            }
        }
        out
    }

    /// The anchored isometry `h(u) = anchor + A u`.
    #[inline]
    pub fn map(&self, u: Point<D>) -> Point<D> {
        v::add(self.anchor, self.apply(u))
    }

    /// Apply the transpose (inverse) of the linear part.
    #[inline]
    pub fn apply_inv(&self, u: Point<D>) -> Point<D> {
        let mut out = [0.0; D];
        for j in 0..D {
            out[j] = v::dot(self.cols[j], u);
        }
        out
    }

    /// Largest deviation from orthonormality, `max |A^T A - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..D {
            for j in 0..D {
                let g = v::dot(self.cols[i], self.cols[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Dom2 = StronglyConvexDomain<2>;
    type Dom3 = StronglyConvexDomain<3>;

    #[test]
    fn classify_examples() {
        let ball = Dom2::unit_ball();
        assert_eq!(ball.classify([0.0, 0.0]), Classification::Interior);
        assert_eq!(ball.classify([1.0, 0.0]), Classification::Boundary);
        assert_eq!(ball.classify([1.1, 0.0]), Classification::Exterior);
        let ell = Dom2::ellipsoid([2.0, 1.0]).unwrap();
        // Hand oracle: (1.9/2)^2 + 0 = 0.9025 < 1.
        assert_eq!(ell.classify([1.9, 0.0]), Classification::Interior);
    }

    #[test]
    fn inward_normal_examples() {
        let ball = Dom2::unit_ball();
        let n = ball.inward_normal([1.0, 0.0]).unwrap();
        assert!(v::dist(n, [-1.0, 0.0]) < 1e-14);
        let n = ball.inward_normal([0.0, -1.0]).unwrap();
        assert!(v::dist(n, [0.0, 1.0]) < 1e-14);
        // Normalized gradient oracle for the ellipsoid at (2, 0).
        let ell = Dom2::ellipsoid([2.0, 1.0]).unwrap();
        let n = ell.inward_normal([2.0, 0.0]).unwrap();
        assert!(v::dist(n, [-1.0, 0.0]) < 1e-14);
        // Normal must point inward: x + t n enters the domain.
        let p = v::axpy([2.0, 0.0], 1e-6, n);
        assert_eq!(ell.classify(p), Classification::Interior);
    }

    #[test]
    fn cutoff_examples() {
        let ball = Dom2::unit_ball();
        let (p, k) = ball.cutoff([0.0, 0.0], [2.0, 0.0]).unwrap();
        assert_eq!(k, CutoffKind::Crossed);
        assert!(v::dist(p, [1.0, 0.0]) < 1e-12);

        let (p, k) = ball.cutoff([0.5, 0.0], [0.9, 0.0]).unwrap();
        assert_eq!(k, CutoffKind::Inside);
        assert_eq!(p, [0.9, 0.0]);

        // From a boundary point along a tangent-ish direction the segment
        // leaves immediately: no move.
        let (p, k) = ball.cutoff([1.0, 0.0], [1.0, 1.0]).unwrap();
        assert_eq!(k, CutoffKind::Stuck);
        assert_eq!(p, [1.0, 0.0]);

        let ell = Dom2::ellipsoid([2.0, 1.0]).unwrap();
        let (p, _) = ell.cutoff([0.0, 0.0], [4.0, 0.0]).unwrap();
        assert!(v::dist(p, [2.0, 0.0]) < 1e-12);
    }

    #[test]
    fn frame_d2_examples() {
        let ball = Dom2::unit_ball();
        // x = -e1 has inward normal e1, so the frame is the identity.
        let f = ball.frame_at([-1.0, 0.0], None).unwrap();
        assert!(v::dist(f.cols[0], [1.0, 0.0]) < 1e-14);
        assert!(v::dist(f.cols[1], [0.0, 1.0]) < 1e-14);
        // x = -e2: rotation sending e1 to e2 and e2 to -e1.
        let f = ball.frame_at([0.0, -1.0], None).unwrap();
        assert!(v::dist(f.apply([1.0, 0.0]), [0.0, 1.0]) < 1e-14);
        assert!(v::dist(f.apply([0.0, 1.0]), [-1.0, 0.0]) < 1e-14);
        assert!(f.orthogonality_defect() < 1e-14);
    }

    #[test]
    fn frame_d3_gram_schmidt() {
        let ball = Dom3::unit_ball();
        let f = ball
            .frame_at([-1.0, 0.0, 0.0], Some([1.0, 0.0, 0.0]))
            .unwrap();
        assert!(v::dist(f.cols[0], [1.0, 0.0, 0.0]) < 1e-12);
        assert!(f.orthogonality_defect() < 1e-12);
        // Puncture at the base point is rejected.
        assert!(ball
            .frame_at([1.0, 0.0, 0.0], Some([1.0, 0.0, 0.0]))
            .is_err());
    }

    #[test]
    fn graph_height_sphere_formula() {
        let ball = Dom2::unit_ball();
        let f = ball.frame_at([0.0, -1.0], None).unwrap();
        assert!(ball.graph_height(&f, &[0.0]).unwrap().abs() < 1e-14);
        let psi = ball.graph_height(&f, &[0.3]).unwrap();
        let exact = 1.0 - (1.0f64 - 0.09).sqrt();
        assert!((psi - exact).abs() < 1e-12, "psi = {psi}, exact = {exact}");
        // Chart radius enforced.
        assert!(ball.graph_height(&f, &[0.7]).is_err());
    }

    #[test]
    fn graph_height_ellipse_oracle() {
        let ell = Dom2::ellipsoid([2.0, 1.0]).unwrap();
        let f = ell.frame_at([2.0, 0.0], None).unwrap();
        let t = 0.2;
        let psi = ell.graph_height(&f, &[t]).unwrap();
        // Direct oracle: the chart point x + A(psi e1 + t e2) must be on
        // the boundary and psi must be the near-side root.
        let p = f.map([psi, t]);
        assert!((ell.q_value(p) - 1.0).abs() < 1e-12);
        assert!(psi > 0.0 && psi < 0.1);
    }

    #[test]
    fn thales_examples() {
        let ball = Dom2::unit_ball();
        let (a, bound) = ball.thales_bound([0.0, 0.0], [2.0, 0.0]).unwrap();
        assert!(v::dist(a, [1.0, 0.0]) < 1e-12);
        assert!((bound - 2.0).abs() < 1e-12);
        assert!(v::dist(a, [2.0, 0.0]) <= bound + 1e-12);

        let (a, bound) = ball.thales_bound([0.5, 0.0], [1.5, 0.0]).unwrap();
        assert!(v::dist(a, [1.0, 0.0]) < 1e-12);
        assert!((bound - 1.0).abs() < 1e-12);
        assert!(v::dist(a, [1.5, 0.0]) <= bound + 1e-12);
    }

    #[test]
    fn ellipsoid_distance_matches_ball() {
        let ball_as_ellipsoid = Dom2::ellipsoid([1.0, 1.0]).unwrap();
        for p in [[0.3, 0.2], [0.0, 0.0], [1.5, -0.5], [0.9, 0.1]] {
            let d1 = ball_as_ellipsoid.dist_to_boundary(p);
            let d2 = (1.0 - v::norm(p)).abs();
            assert!((d1 - d2).abs() < 1e-9, "p {p:?}: {d1} vs {d2}");
        }
    }

    #[test]
    fn ray_exit_matches_ellipse_oracle() {
        let ell = Dom2::ellipsoid([2.0, 1.0]).unwrap();
        let t = ell.ray_exit_time([0.0, 0.0], [1.0, 0.0]);
        assert!((t - 2.0).abs() < 1e-12);
    }
}
