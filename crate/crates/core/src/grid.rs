//! Uniform time grids and the trapezoidal quadratures built on them.
//!
//! Every time integral in the crate (Volterra convolutions, Duhamel
//! integrals, control norms) is a composite trapezoid rule on a grid
//! `t_j = j * step`, `j = 0..=steps`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when deciding whether a step divides a horizon.
pub const DIVISIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    step: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(step: f64, steps: usize) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive and finite, got {step}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("time grid needs at least one step".into()));
        }
        Ok(Self { step, steps })
    }

    /// Grid on `[0, horizon]` with `steps` equal intervals.
    pub fn from_horizon(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("time grid needs at least one step".into()));
        }
        Self::new(horizon / steps as f64, steps)
    }

    /// Grid on `[0, horizon]` with the given step; the step must divide the
    /// horizon to within [`DIVISIBILITY_TOL`] relative.
    pub fn with_step(horizon: f64, step: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive and finite, got {step}"
            )));
        }
        let ratio = horizon / step;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > DIVISIBILITY_TOL * ratio.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "step {step} does not divide horizon {horizon}"
            )));
        }
        Self::new(step, steps as usize)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes (`steps + 1`).
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.step * self.steps as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.step * j as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |j| self.node(j))
    }

    /// Composite trapezoid weights on `[0, horizon]`.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![self.step; self.len()];
        w[0] *= 0.5;
        w[self.steps] *= 0.5;
        w
    }

    /// Same step, shorter horizon.
    pub fn truncated(&self, steps: usize) -> Result<Self> {
        if steps > self.steps {
            return Err(Error::GridMismatch(format!(
                "cannot truncate {} steps to {steps}",
                self.steps
            )));
        }
        Self::new(self.step, steps)
    }

    /// Index of the node at time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let ratio = t / self.step;
        let j = ratio.round();
        if j < 0.0 || j > self.steps as f64 {
            return None;
        }
        if (ratio - j).abs() > 1e-9 * ratio.abs().max(1.0) {
            return None;
        }
        Some(j as usize)
    }

    /// True when both grids share the same step and node count.
    pub fn matches(&self, other: &TimeGrid) -> bool {
        self.steps == other.steps && (self.step - other.step).abs() <= DIVISIBILITY_TOL * self.step
    }

    pub(crate) fn ensure_matches(&self, other: &TimeGrid, context: &str) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{context}: ({} steps of {}) vs ({} steps of {})",
                self.steps, self.step, other.steps, other.step
            )))
        }
    }

    pub(crate) fn ensure_samples(&self, len: usize, context: &'static str) -> Result<()> {
        if len == self.len() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.len(),
                found: len,
                context,
            })
        }
    }
}

/// Trapezoid value of `int_0^{t_j} a(t_j - s) b(s) ds` from samples on a
/// uniform grid with step `h`.
pub fn convolution_at(a: &[f64], b: &[f64], j: usize, h: f64) -> f64 {
    if j == 0 {
        return 0.0;
    }
    let mut acc = 0.5 * (a[j] * b[0] + a[0] * b[j]);
    for k in 1..j {
        acc += a[j - k] * b[k];
    }
    h * acc
}

/// Trapezoid convolution `(a * b)(t_j)` at every node.
pub fn convolve(a: &[f64], b: &[f64], h: f64) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n).map(|j| convolution_at(a, b, j, h)).collect()
}

/// Trapezoid integral of samples over the whole grid.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_must_divide_horizon() {
        assert!(TimeGrid::with_step(1.0, 0.25).is_ok());
        assert!(TimeGrid::with_step(1.0, 0.3).is_err());
        let g = TimeGrid::with_step(2.0 * std::f64::consts::PI, std::f64::consts::PI / 100.0).unwrap();
        assert_eq!(g.steps(), 200);
    }

    #[test]
    fn weights_sum_to_horizon() {
        let g = TimeGrid::from_horizon(3.0, 7).unwrap();
        let s: f64 = g.weights().iter().sum();
        assert!((s - 3.0).abs() < 1e-14);
    }

    #[test]
    fn convolution_of_constants_is_linear_in_time() {
        let g = TimeGrid::from_horizon(2.0, 20).unwrap();
        let ones = vec![1.0; g.len()];
        let c = convolve(&ones, &ones, g.step());
        for (j, v) in c.iter().enumerate() {
            assert!((v - g.node(j)).abs() < 1e-13);
        }
    }

    #[test]
    fn trapezoid_convolution_is_symmetric() {
        let a: Vec<f64> = (0..30).map(|j| (0.1 * j as f64).sin()).collect();
        let b: Vec<f64> = (0..30).map(|j| (-0.2 * j as f64).exp()).collect();
        for j in 0..30 {
            let ab = convolution_at(&a, &b, j, 0.1);
            let ba = convolution_at(&b, &a, j, 0.1);
            assert!((ab - ba).abs() < 1e-14);
        }
    }

    #[test]
    fn index_of_rejects_off_grid_times() {
        let g = TimeGrid::from_horizon(1.0, 10).unwrap();
        assert_eq!(g.index_of(0.3), Some(3));
        assert_eq!(g.index_of(0.35), None);
        assert_eq!(g.index_of(1.5), None);
    }
}
