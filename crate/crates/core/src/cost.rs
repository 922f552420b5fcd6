//! Convex piecewise-linear link cost `max_i (a_i * u - b_i)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("cost function needs at least one segment")]
    Empty,
    #[error("first segment must start at utilization 0, got {0}")]
    FirstBreakpoint(f64),
    #[error("slopes must be nonnegative and strictly increasing")]
    Slopes,
    #[error("breakpoints must be strictly increasing")]
    Breakpoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSegment {
    pub a: f64,
    pub b: f64,
}

impl CostSegment {
    pub fn eval(&self, u: f64) -> f64 {
        self.a * u - self.b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostFunction {
    segments: Vec<CostSegment>,
    breakpoints: Vec<f64>,
}

/// Slopes 1, 3, 10, 70, 500, 5000 switching at utilizations 1/3, 2/3,
/// 9/10, 1 and 11/10.
pub fn default_cost_function() -> CostFunction {
    CostFunction::from_pairs(&[
        (1.0, 0.0),
        (3.0, 1.0 / 3.0),
        (10.0, 2.0 / 3.0),
        (70.0, 0.9),
        (500.0, 1.0),
        (5000.0, 1.1),
    ])
    .expect("default segments are valid")
}

impl CostFunction {
    /// Builds the envelope from `(slope, breakpoint)` pairs, where each
    /// breakpoint is the utilization at which that slope takes over. Offsets
    /// are derived so that the envelope is continuous and passes through 0.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, CostError> {
        let (&(a0, x0), rest) = pairs.split_first().ok_or(CostError::Empty)?;
        if x0 != 0.0 {
            return Err(CostError::FirstBreakpoint(x0));
        }
        if !(a0 >= 0.0) || !a0.is_finite() {
            return Err(CostError::Slopes);
        }
        let mut segments = vec![CostSegment { a: a0, b: 0.0 }];
        let mut breakpoints = vec![0.0];
        for &(a, x) in rest {
            let prev = *segments.last().unwrap();
            if !(a > prev.a) || !a.is_finite() {
                return Err(CostError::Slopes);
            }
            if !(x > *breakpoints.last().unwrap()) || !x.is_finite() {
                return Err(CostError::Breakpoints);
            }
            segments.push(CostSegment { a, b: prev.b + (a - prev.a) * x });
            breakpoints.push(x);
        }
        Ok(Self { segments, breakpoints })
    }

    pub fn segments(&self) -> &[CostSegment] {
        &self.segments
    }

    /// `(slope, breakpoint)` pairs this function was built from.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.segments.iter().zip(&self.breakpoints).map(|(s, &x)| (s.a, x)).collect()
    }

    /// Cost at utilization `u`.
    ///
    /// # Panics
    /// If `u` is negative or NaN.
    pub fn envelope(&self, u: f64) -> f64 {
        assert!(u >= 0.0, "utilization must be nonnegative, got {u}");
        self.segments.iter().map(|s| s.eval(u)).fold(0.0, f64::max)
    }
}

impl Default for CostFunction {
    fn default() -> Self {
        default_cost_function()
    }
}
