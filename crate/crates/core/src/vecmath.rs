//! Minimal fixed-dimension vector helpers used throughout the crate.
//!
//! Points and velocities are plain `[f64; D]` arrays with `D` a const
//! generic (the simulators are monomorphized for `D = 2` and `D = 3`).

/// A point or vector in `R^D`.
pub type Point<const D: usize> = [f64; D];

#[inline]
pub fn zero<const D: usize>() -> Point<D> {
    [0.0; D]
}

#[inline]
pub fn add<const D: usize>(a: Point<D>, b: Point<D>) -> Point<D> {
    let mut out = a;
    for i in 0..D {
        out[i] += b[i];
    }
    out
}

#[inline]
pub fn sub<const D: usize>(a: Point<D>, b: Point<D>) -> Point<D> {
    let mut out = a;
    for i in 0..D {
        out[i] -= b[i];
    }
    out
}

#[inline]
pub fn scale<const D: usize>(a: Point<D>, t: f64) -> Point<D> {
    let mut out = a;
    for x in out.iter_mut() {
        *x *= t;
    }
    out
}

/// `a + t * b`.
#[inline]
pub fn axpy<const D: usize>(a: Point<D>, t: f64, b: Point<D>) -> Point<D> {
    let mut out = a;
    for i in 0..D {
        out[i] += t * b[i];
    }
    out
}

#[inline]
pub fn dot<const D: usize>(a: Point<D>, b: Point<D>) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm_sq<const D: usize>(a: Point<D>) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm<const D: usize>(a: Point<D>) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn dist<const D: usize>(a: Point<D>, b: Point<D>) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn normalize<const D: usize>(a: Point<D>) -> Point<D> {
    let n = norm(a);
    scale(a, 1.0 / n)
}

#[inline]
pub fn is_finite<const D: usize>(a: Point<D>) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// `i`-th canonical basis vector.
#[inline]
pub fn basis<const D: usize>(i: usize) -> Point<D> {
    let mut e = [0.0; D];
    e[i] = 1.0;
    e
}

/// Surface area of the unit sphere `S^{D-1}` in `R^D` (perimeter for `D = 2`).
pub fn sphere_area<const D: usize>() -> f64 {
    match D {
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => unreachable!("only d = 2 and d = 3 are supported"),
    }
}

/// Volume of the unit ball in `R^D`.
pub fn ball_volume<const D: usize>() -> f64 {
    match D {
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => unreachable!("only d = 2 and d = 3 are supported"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let a = [1.0, 2.0];
        let b = [3.0, -1.0];
        assert_eq!(add(a, b), [4.0, 1.0]);
        assert_eq!(sub(a, b), [-2.0, 3.0]);
        assert_eq!(axpy(a, 2.0, b), [7.0, 0.0]);
        assert!((dot(a, b) - 1.0).abs() < 1e-15);
        assert!((norm([3.0, 4.0]) - 5.0).abs() < 1e-15);
    }
}
