//! Clamped cubic spline on a uniform grid.
//!
//! Used as the evaluator for sampled generating curves. The end slopes are
//! clamped so that admissibility (flat joints at the axis and the cone wall)
//! holds exactly at the endpoints.

#[derive(Debug, Clone)]
pub struct ClampedCubicSpline {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    /// First derivatives at the knots.
    d: Vec<f64>,
}

impl ClampedCubicSpline {
    /// Build a spline through `y` sampled uniformly on `[x0, x1]` with
    /// prescribed end slopes `s0` and `s1`. Needs at least two samples.
    pub fn new(x0: f64, x1: f64, y: &[f64], s0: f64, s1: f64) -> Self {
        let m = y.len() - 1;
        assert!(m >= 1, "spline needs at least two samples");
        let h = (x1 - x0) / m as f64;
        let mut d = vec![0.0; m + 1];
        d[0] = s0;
        d[m] = s1;
        if m >= 2 {
            // Tridiagonal system for interior knot slopes:
            //   d[i-1] + 4 d[i] + d[i+1] = 3 (y[i+1] - y[i-1]) / h
            let k = m - 1;
            let mut diag = vec![4.0; k];
            let mut rhs: Vec<f64> = (1..m).map(|i| 3.0 * (y[i + 1] - y[i - 1]) / h).collect();
            rhs[0] -= s0;
            rhs[k - 1] -= s1;
            for i in 1..k {
                let w = 1.0 / diag[i - 1];
                diag[i] -= w;
                rhs[i] -= w * rhs[i - 1];
            }
            d[m - 1] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                d[i + 1] = (rhs[i] - d[i + 2]) / diag[i];
            }
        }
        Self {
            x0,
            h,
            y: y.to_vec(),
            d,
        }
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let m = self.y.len() - 1;
        let s = ((x - self.x0) / self.h).floor();
        let i = (s.max(0.0) as usize).min(m - 1);
        let t = (x - self.x0) / self.h - i as f64;
        (i, t)
    }

    pub fn value(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        self.y[i] * h00
            + self.h * self.d[i] * h10
            + self.y[i + 1] * h01
            + self.h * self.d[i + 1] * h11
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let t2 = t * t;
        let h00 = 6.0 * t2 - 6.0 * t;
        let h10 = 3.0 * t2 - 4.0 * t + 1.0;
        let h01 = -6.0 * t2 + 6.0 * t;
        let h11 = 3.0 * t2 - 2.0 * t;
        (self.y[i] * h00 + self.y[i + 1] * h01) / self.h + self.d[i] * h10 + self.d[i + 1] * h11
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let h00 = 12.0 * t - 6.0;
        let h10 = 6.0 * t - 4.0;
        let h01 = -12.0 * t + 6.0;
        let h11 = 6.0 * t - 2.0;
        (self.y[i] * h00 + self.y[i + 1] * h01) / (self.h * self.h)
            + (self.d[i] * h10 + self.d[i + 1] * h11) / self.h
    }
}
