//! Uniform scaled-time grids and cumulative quadrature on them.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// `points` equally spaced samples covering `[start, end]` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(start: f64, end: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidArgument(format!(
                "a grid needs at least 2 points, got {points}"
            )));
        }
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid range must be finite and ascending, got [{start}, {end}]"
            )));
        }
        Ok(Self { start, end, points })
    }

    /// Grid with `intervals` steps of equal width.
    pub fn with_intervals(start: f64, end: f64, intervals: usize) -> Result<Self> {
        Self::new(start, end, intervals + 1)
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / (self.points - 1) as f64
    }

    pub fn intervals(&self) -> usize {
        self.points - 1
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn at(&self, k: usize) -> f64 {
        if k + 1 == self.points {
            self.end
        } else {
            self.start + k as f64 * self.step()
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |k| self.at(k))
    }

    pub fn values(&self) -> Vec<f64> {
        self.iter().collect()
    }

    /// Index of the grid point closest to `s`.
    pub fn nearest(&self, s: f64) -> usize {
        let k = ((s - self.start) / self.step()).round();
        (k.max(0.0) as usize).min(self.points - 1)
    }

    /// Same grid with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            points: self.intervals() * factor.max(1) + 1,
            ..*self
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.points == other.points
            && (self.start - other.start).abs() <= 1e-12 * (1.0 + self.start.abs())
            && (self.end - other.end).abs() <= 1e-12 * (1.0 + self.end.abs())
    }
}

/// Cumulative trapezoid integral; element `k` integrates over `[s_0, s_k]`.
pub fn cumulative_trapezoid<T>(values: &[T], step: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T> + Default,
{
    let mut out = Vec::with_capacity(values.len());
    let mut acc = T::default();
    out.push(acc);
    for w in values.windows(2) {
        acc = acc + (w[0] + w[1]) * (0.5 * step);
        out.push(acc);
    }
    out
}

/// Cumulative integral that is exact for cubics on each interval.
///
/// Interior intervals use `h/24 (−f₋₁ + 13f₀ + 13f₁ − f₂)`; the two end
/// intervals use the one-sided rule `h/24 (9f₀ + 19f₁ − 5f₂ + f₃)`. With three
/// samples the quadratic rule `h/12 (5f₀ + 8f₁ − f₂)` is used, with two the
/// trapezoid rule.
pub fn cumulative_integral<T>(values: &[T], step: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> + Default,
{
    let n = values.len();
    if n < 3 {
        return cumulative_trapezoid(values, step);
    }
    let f = values;
    let mut out = Vec::with_capacity(n);
    let mut acc = T::default();
    out.push(acc);
    for j in 0..n - 1 {
        let piece = if n == 3 {
            if j == 0 {
                (f[0] * 5.0 + f[1] * 8.0 - f[2]) * (step / 12.0)
            } else {
                (f[2] * 5.0 + f[1] * 8.0 - f[0]) * (step / 12.0)
            }
        } else if j == 0 {
            (f[0] * 9.0 + f[1] * 19.0 - f[2] * 5.0 + f[3]) * (step / 24.0)
        } else if j == n - 2 {
            (f[j + 1] * 9.0 + f[j] * 19.0 - f[j - 1] * 5.0 + f[j - 2]) * (step / 24.0)
        } else {
            (f[j] * 13.0 + f[j + 1] * 13.0 - f[j - 1] - f[j + 2]) * (step / 24.0)
        };
        acc = acc + piece;
        out.push(acc);
    }
    out
}

/// Richardson error estimate for a cumulative integral: the largest
/// difference between the high-order and the trapezoid result.
pub fn richardson_gap<T, F>(values: &[T], step: f64, norm: F) -> f64
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> + Default,
    F: Fn(T) -> f64,
{
    let hi = cumulative_integral(values, step);
    let lo = cumulative_trapezoid(values, step);
    hi.iter()
        .zip(&lo)
        .map(|(&a, &b)| norm(a - b))
        .fold(0.0, f64::max)
}
