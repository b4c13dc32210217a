//! Probing-input generators and reference-signal distributions.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::nets::{InputRange, OutputRange};
use crate::{rng, Error, Grid, Result, SampledSignal};

/// `sin(2πf t) · sqrt(2πf) / 2` on the grid.
pub fn generate_sinusoidal(grid: &Grid, frequency: u32) -> Result<SampledSignal> {
    if frequency == 0 {
        return Err(Error::Config("sinusoid frequency must be a positive integer".into()));
    }
    let omega = 2.0 * core::f64::consts::PI * frequency as f64;
    let amplitude = libm::sqrt(omega) / 2.0;
    Ok(SampledSignal::from_fn(*grid, |t| libm::sin(omega * t) * amplitude))
}

/// Random knot sequence interpolated by a cubic spline.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplineGenConfig {
    pub min_gap: f64,
    pub max_gap: f64,
    pub min_value: f64,
    pub max_value: f64,
    /// Probability that a knot repeats the previous value.
    pub keep_probability: f64,
    pub seed: u64,
}

impl SplineGenConfig {
    /// Probing-input spline with knot gaps in `[0.4, 1.2]` s.
    pub fn probing(range: &InputRange, seed: u64) -> Self {
        Self {
            min_gap: 0.4,
            max_gap: 1.2,
            min_value: range.u_min,
            max_value: range.u_max,
            keep_probability: 0.5,
            seed,
        }
    }

    /// Smooth reference: knot gaps in `[0.8, 1.8]` s, fresh level at every knot.
    pub fn reference(range: &OutputRange, seed: u64) -> Self {
        Self {
            min_gap: 0.8,
            max_gap: 1.8,
            min_value: range.phi_min,
            max_value: range.phi_max,
            keep_probability: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_gap > 0.0 && self.max_gap > self.min_gap) {
            return Err(Error::Config(alloc::format!(
                "knot gaps need 0 < min < max, got [{}, {}]",
                self.min_gap,
                self.max_gap
            )));
        }
        if !(self.min_value < self.max_value) {
            return Err(Error::Config("empty spline value range".into()));
        }
        if !(0.0..=1.0).contains(&self.keep_probability) {
            return Err(Error::Config("keep probability outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// Knots of a spline draw: starts at `(0, 0)` and extends to at least the grid end.
pub fn draw_knots(grid: &Grid, cfg: &SplineGenConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    let mut rng = rng::seeded(cfg.seed);
    let end = grid.t0() + grid.duration();
    let mut ts = vec![grid.t0()];
    let mut us = vec![0.0];
    while *ts.last().unwrap() < end {
        let t = ts.last().unwrap() + rng.random_range(cfg.min_gap..cfg.max_gap);
        let fresh = rng.random_range(cfg.min_value..cfg.max_value);
        let keep = rng.random_bool(cfg.keep_probability);
        let u = if keep { *us.last().unwrap() } else { fresh };
        ts.push(t);
        us.push(u);
    }
    Ok((ts, us))
}

/// Random spline draw sampled on the grid and clipped to the value bounds.
pub fn draw_spline(grid: &Grid, cfg: &SplineGenConfig) -> Result<SampledSignal> {
    let (ts, us) = draw_knots(grid, cfg)?;
    let spline = CubicSpline::not_a_knot(&ts, &us)?;
    Ok(SampledSignal::from_fn(*grid, |t| spline.eval(t)).clipped(cfg.min_value, cfg.max_value))
}

/// Constant reference at a uniformly drawn level.
pub fn draw_step_reference(grid: &Grid, range: &OutputRange, seed: u64) -> SampledSignal {
    let level = rng::seeded(seed).random_range(range.phi_min..range.phi_max);
    SampledSignal::constant(*grid, level)
}

/// Two uniformly drawn levels with a switch time in `[0.3T, 0.7T]`, snapped to the grid.
pub fn draw_double_step_reference(grid: &Grid, range: &OutputRange, seed: u64) -> SampledSignal {
    let mut rng = rng::seeded(seed);
    let first = rng.random_range(range.phi_min..range.phi_max);
    let second = rng.random_range(range.phi_min..range.phi_max);
    let t = grid.duration();
    let switch = rng.random_range(0.3 * t..0.7 * t);
    let idx = grid.index_of(grid.t0() + switch);
    let values = (0..grid.len()).map(|n| if n < idx { first } else { second }).collect();
    SampledSignal::new(*grid, values).expect("finite levels")
}

/// Smooth reference through fresh uniform levels.
pub fn draw_cubic_spline_reference(grid: &Grid, range: &OutputRange, seed: u64) -> SampledSignal {
    draw_spline(grid, &SplineGenConfig::reference(range, seed)).expect("valid reference spline config")
}

/// The six probing inputs for data collection: sinusoids at 1 and 2 Hz,
/// three training splines, and a final validation spline.
pub fn probing_plan(grid: &Grid, range: &InputRange, seed: u64) -> Result<Vec<SampledSignal>> {
    let mut plan = vec![generate_sinusoidal(grid, 1)?, generate_sinusoidal(grid, 2)?];
    for i in 0..4u64 {
        let mut cfg = SplineGenConfig::probing(range, 0);
        cfg.seed = rng::stream(seed, i).random();
        plan.push(draw_spline(grid, &cfg)?);
    }
    Ok(plan)
}

/// Interpolating cubic spline with not-a-knot end conditions (natural ends
/// when fewer than four knots are given).
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn not_a_knot(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n != ys.len() || n < 2 {
            return Err(Error::Config("spline needs matching knot arrays of length >= 2".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("spline knots must be strictly increasing".into()));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let mut a = vec![0.0; n * n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            a[i * n + i - 1] = h[i - 1];
            a[i * n + i] = 2.0 * (h[i - 1] + h[i]);
            a[i * n + i + 1] = h[i];
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
        }
        if n >= 4 {
            // continuous third derivative across the second and second-to-last knots
            a[0] = h[1];
            a[1] = -(h[0] + h[1]);
            a[2] = h[0];
            let r = (n - 1) * n;
            a[r + n - 3] = h[n - 2];
            a[r + n - 2] = -(h[n - 3] + h[n - 2]);
            a[r + n - 1] = h[n - 3];
        } else {
            a[0] = 1.0;
            a[(n - 1) * n + n - 1] = 1.0;
        }
        let m = solve_dense(a, rhs, n);
        Ok(Self { xs: xs.to_vec(), ys: ys.to_vec(), m })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let (a, b) = ((x1 - x) / h, (x - x0) / h);
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Vec<f64> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| libm::fabs(a[i * n + col]).total_cmp(&libm::fabs(a[j * n + col])))
            .unwrap();
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let p = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            if f != 0.0 {
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    x
}
