//! Uniform time grids and signals sampled on them.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Control/logging rate used throughout: 100 Hz.
pub const DEFAULT_DT: f64 = 0.01;

/// A uniform grid `t0, t0 + dt, ..., t0 + duration` with an integer number of steps.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    t0: f64,
    duration: f64,
    dt: f64,
    steps: usize,
}

impl Grid {
    pub fn new(t0: f64, duration: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Grid(format!("step must be positive, got {dt}")));
        }
        if !(duration >= 0.0) || !duration.is_finite() || !t0.is_finite() {
            return Err(Error::Grid(format!("duration must be non-negative, got {duration}")));
        }
        let ratio = duration / dt;
        let steps = libm::round(ratio);
        if libm::fabs(ratio - steps) > 1e-9 * steps.max(1.0) {
            return Err(Error::Grid(format!(
                "duration {duration} is not an integer multiple of step {dt}"
            )));
        }
        Ok(Self { t0, duration, dt, steps: steps as usize })
    }

    /// `duration` seconds at 100 Hz starting from zero.
    pub fn with_duration(duration: f64) -> Result<Self> {
        Self::new(0.0, duration, DEFAULT_DT)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of integration steps, `duration / dt`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of samples, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |n| self.time(n))
    }

    /// Index of the sample closest to `t`, clamped to the grid.
    pub fn index_of(&self, t: f64) -> usize {
        let n = libm::round((t - self.t0) / self.dt);
        if n <= 0.0 {
            0
        } else {
            (n as usize).min(self.steps)
        }
    }
}

/// Scalar samples on a [`Grid`], one per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape { expected: grid.len(), actual: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Grid(format!("sample {i} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: alloc::vec![value; grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl FnMut(f64) -> f64) -> Self {
        Self { grid, values: grid.times().map(f).collect() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn ensure_same_grid(&self, other: &SampledSignal) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape { expected: self.len(), actual: other.len() });
        }
        Ok(())
    }

    /// Clamp every sample into `[lo, hi]`.
    pub fn clipped(mut self, lo: f64, hi: f64) -> Self {
        for v in &mut self.values {
            *v = v.clamp(lo, hi);
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_seconds_has_501_samples() {
        let g = Grid::with_duration(5.0).unwrap();
        assert_eq!(g.steps(), 500);
        assert_eq!(g.len(), 501);
        assert!((g.time(500) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn non_integer_step_count_is_rejected() {
        assert!(matches!(Grid::new(0.0, 0.015, 0.01), Err(Error::Grid(_))));
        assert!(Grid::new(0.0, 1.0, 0.0).is_err());
        assert!(Grid::new(0.0, 1.0, -0.01).is_err());
    }

    #[test]
    fn signal_length_must_match_grid() {
        let g = Grid::with_duration(0.02).unwrap();
        assert!(SampledSignal::new(g, alloc::vec![0.0; 3]).is_ok());
        assert_eq!(
            SampledSignal::new(g, alloc::vec![0.0; 2]),
            Err(Error::Shape { expected: 3, actual: 2 })
        );
    }
}
