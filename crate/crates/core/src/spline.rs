//! Cubic interpolation helpers for tabulated model data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// End conditions for [`CubicSpline`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EndCondition {
    /// Zero second derivative at both ends.
    Natural,
    /// Prescribed first derivatives at the two ends.
    Clamped { start: f64, end: f64 },
}

/// C² piecewise-cubic interpolant through `(knots[i], values[i])`.
///
/// Outside the knot range the spline continues linearly with its end slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, end: EndCondition) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return Err(Error::InvalidArgument(format!(
                "spline needs at least two knots with matching values (got {} knots, {} values)",
                n,
                values.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("spline knots must be strictly increasing".into()));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("spline data must be finite".into()));
        }

        // Tridiagonal system for the second derivatives (Thomas algorithm).
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / h[i]).collect();
        match end {
            EndCondition::Natural => {
                diag[0] = 1.0;
                diag[n - 1] = 1.0;
            }
            EndCondition::Clamped { start, end } => {
                diag[0] = h[0] / 3.0;
                sup[0] = h[0] / 6.0;
                rhs[0] = slope[0] - start;
                sub[n - 1] = h[n - 2] / 6.0;
                diag[n - 1] = h[n - 2] / 3.0;
                rhs[n - 1] = end - slope[n - 2];
            }
        }
        for i in 1..n - 1 {
            sub[i] = h[i - 1] / 6.0;
            diag[i] = (h[i - 1] + h[i]) / 3.0;
            sup[i] = h[i] / 6.0;
            rhs[i] = slope[i] - slope[i - 1];
        }
        for i in 1..n {
            let m = sub[i] / diag[i - 1];
            diag[i] -= m * sup[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        let mut second = vec![0.0; n];
        second[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            second[i] = (rhs[i] - sup[i] * second[i + 1]) / diag[i];
        }
        Ok(CubicSpline {
            knots,
            values,
            second,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    fn interval(&self, t: f64) -> usize {
        let n = self.knots.len();
        match self.knots.binary_search_by(|k| k.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    fn end_slope(&self, at_end: bool) -> f64 {
        let n = self.knots.len();
        if at_end {
            let h = self.knots[n - 1] - self.knots[n - 2];
            (self.values[n - 1] - self.values[n - 2]) / h
                + h * (self.second[n - 2] + 2.0 * self.second[n - 1]) / 6.0
        } else {
            let h = self.knots[1] - self.knots[0];
            (self.values[1] - self.values[0]) / h - h * (2.0 * self.second[0] + self.second[1]) / 6.0
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (lo, hi) = self.range();
        if t < lo {
            return self.values[0] + self.end_slope(false) * (t - lo);
        }
        if t > hi {
            return *self.values.last().unwrap() + self.end_slope(true) * (t - hi);
        }
        let i = self.interval(t);
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - t) / h;
        let b = (t - self.knots[i]) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let (lo, hi) = self.range();
        if t < lo {
            return self.end_slope(false);
        }
        if t > hi {
            return self.end_slope(true);
        }
        let i = self.interval(t);
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - t) / h;
        let b = (t - self.knots[i]) / h;
        (self.values[i + 1] - self.values[i]) / h
            + ((1.0 - 3.0 * a * a) * self.second[i] + (3.0 * b * b - 1.0) * self.second[i + 1]) * h / 6.0
    }
}

/// Catmull–Rom weights for the four samples around a cell at fraction `s ∈ [0, 1]`.
pub(crate) fn catmull_rom_weights(s: f64) -> [f64; 4] {
    let s2 = s * s;
    let s3 = s2 * s;
    [
        -0.5 * s3 + s2 - 0.5 * s,
        1.5 * s3 - 2.5 * s2 + 1.0,
        -1.5 * s3 + 2.0 * s2 + 0.5 * s,
        0.5 * s3 - 0.5 * s2,
    ]
}

/// Cubic Hermite interpolation on `[t0, t1]` from values and slopes.
pub(crate) fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * d1
}
