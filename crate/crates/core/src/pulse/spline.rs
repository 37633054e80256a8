//! Natural cubic spline interpolation.

use crate::error::{Error, Result};

/// Natural cubic spline (zero second derivative at both ends) through a set of knots.
#[derive(Debug, Clone)]
pub struct NaturalSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    curvature: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(points: &[[f64; 2]]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::validation("spline needs at least two points"));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::validation("spline points must be finite"));
        }
        if let Some(w) = points.windows(2).find(|w| w[1][0] <= w[0][0]) {
            return Err(Error::validation(format!(
                "spline times must be strictly increasing ({} followed by {})",
                w[0][0], w[1][0]
            )));
        }
        let knots: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let values: Vec<f64> = points.iter().map(|p| p[1]).collect();
        let n = knots.len();
        let mut curvature = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives.
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                let h0 = knots[i + 1] - knots[i];
                let h1 = knots[i + 2] - knots[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((values[i + 2] - values[i + 1]) / h1 - (values[i + 1] - values[i]) / h0);
            }
            for i in 1..m {
                let lower = knots[i + 1] - knots[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            curvature[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                curvature[i + 1] = (rhs[i] - upper[i] * curvature[i + 2]) / diag[i];
            }
        }
        Ok(Self {
            knots,
            values,
            curvature,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let last = self.knots.len() - 2;
        let seg = match self.knots.partition_point(|&k| k <= t) {
            0 => 0,
            i => (i - 1).min(last),
        };
        let (x0, x1) = (self.knots[seg], self.knots[seg + 1]);
        let (y0, y1) = (self.values[seg], self.values[seg + 1]);
        let (m0, m1) = (self.curvature[seg], self.curvature[seg + 1]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0
    }
}
