//! Càdlàg piecewise-constant paths on a finite jump skeleton: the common
//! representation of the simulated processes.

use crate::vecmath::Point;

/// Ordered jump times with the states holding between them: the path value
/// on `[times[k], times[k+1])` is `states[k]`, and `states.last()` holds
/// from the last jump time onwards.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpPath<const D: usize> {
    times: Vec<f64>,
    states: Vec<Point<D>>,
}

impl<const D: usize> JumpPath<D> {
    pub fn new(start: Point<D>) -> Self {
        Self { times: vec![0.0], states: vec![start] }
    }

    pub fn with_capacity(start: Point<D>, cap: usize) -> Self {
        let mut times = Vec::with_capacity(cap);
        let mut states = Vec::with_capacity(cap);
        times.push(0.0);
        states.push(start);
        Self { times, states }
    }

    /// Append a jump; times must be strictly increasing.
    pub fn push(&mut self, t: f64, state: Point<D>) {
        debug_assert!(t > *self.times.last().unwrap(), "jump times must increase");
        self.times.push(t);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Point<D>] {
        &self.states
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn last_state(&self) -> Point<D> {
        *self.states.last().unwrap()
    }

    /// Value at time `t >= 0` (right-continuous).
    pub fn eval(&self, t: f64) -> Point<D> {
        let k = self.times.partition_point(|&s| s <= t);
        self.states[k.saturating_sub(1)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_is_right_continuous() {
        let mut p = JumpPath::<2>::new([0.0, 0.0]);
        p.push(1.0, [1.0, 0.0]);
        p.push(2.5, [2.0, 0.0]);
        assert_eq!(p.eval(0.0), [0.0, 0.0]);
        assert_eq!(p.eval(0.999), [0.0, 0.0]);
        assert_eq!(p.eval(1.0), [1.0, 0.0]);
        assert_eq!(p.eval(2.5), [2.0, 0.0]);
        assert_eq!(p.eval(100.0), [2.0, 0.0]);
    }
}
