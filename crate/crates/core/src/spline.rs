//! Natural cubic spline interpolation through strictly increasing knots.

/// Natural cubic spline (zero second derivative at both end knots).
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl NaturalCubicSpline {
    /// Build the spline. Knots must be strictly increasing and at least two.
    pub fn new(knots: &[f64], values: &[f64]) -> Self {
        assert_eq!(knots.len(), values.len());
        assert!(knots.len() >= 2, "spline needs at least two knots");
        debug_assert!(knots.windows(2).all(|w| w[1] > w[0]));
        let n = knots.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives.
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 1..n - 1 {
                let h0 = knots[i] - knots[i - 1];
                let h1 = knots[i + 1] - knots[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] =
                    6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
            }
            for i in 1..m {
                let lower = knots[i + 1] - knots[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = (rhs[i] - upper[i] * second[i + 2]) / diag[i];
            }
        }
        Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            second,
        }
    }

    fn eval_segment(&self, i: usize, t: f64) -> f64 {
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - t) / h;
        let b = (t - self.knots[i]) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h
                / 6.0
    }

    pub fn eval(&self, t: f64) -> f64 {
        let last = self.knots.len() - 2;
        let i = match self.knots.partition_point(|&k| k <= t) {
            0 => 0,
            p => (p - 1).min(last),
        };
        self.eval_segment(i, t)
    }

    /// Evaluate at the sample instants 0, 1, ..., len-1 in a single sweep.
    pub fn eval_grid(&self, len: usize, out: &mut Vec<f64>) {
        out.clear();
        out.reserve(len);
        let k = &self.knots;
        let (y, m) = (&self.values, &self.second);
        let last = k.len() - 2;
        let mut s = 0usize;
        for i in 0..=last {
            let end = if i == last {
                len
            } else {
                (k[i + 1].ceil().max(0.0) as usize).min(len)
            };
            if s >= end {
                continue;
            }
            // Power form about the left knot: y + b u + c u^2 + d u^3.
            let h = k[i + 1] - k[i];
            let b = (y[i + 1] - y[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0;
            let c = 0.5 * m[i];
            let d = (m[i + 1] - m[i]) / (6.0 * h);
            while s < end {
                let u = s as f64 - k[i];
                out.push(y[i] + u * (b + u * (c + u * d)));
                s += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knot_values_and_lines() {
        let k = [0.0, 1.5, 3.0, 7.0, 9.0];
        let v = [1.0, -2.0, 0.5, 4.0, 3.0];
        let s = NaturalCubicSpline::new(&k, &v);
        for (t, y) in k.iter().zip(v) {
            assert!((s.eval(*t) - y).abs() < 1e-12);
        }
        let line = NaturalCubicSpline::new(&k, &k.map(|t| 2.0 * t - 1.0));
        for t in [0.3, 2.2, 5.0, 8.9] {
            assert!((line.eval(t) - (2.0 * t - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn natural_end_conditions() {
        let k = [0.0, 1.0, 2.0, 3.0];
        let s = NaturalCubicSpline::new(&k, &[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(s.second[0], 0.0);
        assert_eq!(s.second[3], 0.0);
        // interior matches the hand-solved system: 4 M1 + M2 = -12, M1 + 4 M2 = 12
        assert!((s.second[1] + 4.0).abs() < 1e-12);
        assert!((s.second[2] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn grid_matches_pointwise() {
        let k = [-3.0, 2.0, 5.0, 11.0, 17.0, 25.0];
        let v = [0.0, 1.0, -1.0, 2.0, 0.0, 1.0];
        let s = NaturalCubicSpline::new(&k, &v);
        let mut out = Vec::new();
        s.eval_grid(21, &mut out);
        for (i, y) in out.iter().enumerate() {
            assert!((s.eval(i as f64) - y).abs() < 1e-12);
        }
    }
}
