//! Monotone piecewise-cubic (Fritsch–Carlson) interpolation of tone-curve
//! control points.

use crate::roc::Point;

#[derive(Debug, Clone)]
pub struct ToneCurve {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl ToneCurve {
    /// `points` must hold at least two entries, strictly increasing in x.
    pub fn new(points: &[Point]) -> Self {
        assert!(points.len() >= 2, "tone curve needs two control points");
        let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]))
            .collect();

        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for k in 1..n - 1 {
            slopes[k] = if secants[k - 1] * secants[k] <= 0.0 {
                0.0
            } else {
                (secants[k - 1] + secants[k]) / 2.0
            };
        }
        for k in 0..n - 1 {
            if secants[k] == 0.0 {
                slopes[k] = 0.0;
                slopes[k + 1] = 0.0;
                continue;
            }
            let a = slopes[k] / secants[k];
            let b = slopes[k + 1] / secants[k];
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                slopes[k] = t * a * secants[k];
                slopes[k + 1] = t * b * secants[k];
            }
        }
        Self { xs, ys, slopes }
    }

    /// True when every control point lies on `y = x`.
    pub fn is_identity(points: &[Point]) -> bool {
        points.iter().all(|p| p.x == p.y)
    }

    /// Evaluates the curve; inputs outside the control range hold the
    /// endpoint value.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.xs.partition_point(|&xk| xk <= x) - 1;
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn passes_through_control_points() {
        let p = pts(&[(0.0, 0.0), (0.25, 0.4), (0.7, 0.75), (1.0, 1.0)]);
        let c = ToneCurve::new(&p);
        for q in &p {
            assert!((c.eval(q.x) - q.y).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_on_dense_grid() {
        let c = ToneCurve::new(&pts(&[(0.0, 0.0), (0.1, 0.6), (0.2, 0.62), (0.9, 0.65), (1.0, 1.0)]));
        let mut last = f64::NEG_INFINITY;
        for i in 0..=10_000 {
            let y = c.eval(i as f64 / 10_000.0);
            assert!(y >= last - 1e-15, "non-monotone at {i}");
            last = y;
        }
    }

    #[test]
    fn flat_outside_range() {
        let c = ToneCurve::new(&pts(&[(0.2, 0.1), (0.8, 0.9)]));
        assert_eq!(c.eval(0.0), 0.1);
        assert_eq!(c.eval(1.0), 0.9);
    }
}
