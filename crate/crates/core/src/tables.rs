//! Interpolation tables for tabulated radial and polar functions.

use serde::{Deserialize, Serialize};

/// Natural cubic spline on increasing knots.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
    uniform: bool,
}

impl CubicSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert!(
            xs.len() >= 2 && xs.len() == ys.len(),
            "spline needs matching knots and values"
        );
        let n = xs.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal solve for second derivatives with natural ends.
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let a = h0 / 6.0;
                let b = (h0 + h1) / 3.0;
                let cc = h1 / 6.0;
                let r = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
                let denom = b - a * c[i - 1];
                c[i] = cc / denom;
                d[i] = (r - a * d[i - 1]) / denom;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        let h = (xs[n - 1] - xs[0]) / (n - 1) as f64;
        let uniform = xs
            .iter()
            .enumerate()
            .all(|(i, &x)| (x - (xs[0] + h * i as f64)).abs() <= 1e-12 * h.max(1.0));
        Self { xs, ys, m, uniform }
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    fn interval(&self, x: f64) -> usize {
        let n = self.xs.len();
        if self.uniform {
            let h = (self.xs[n - 1] - self.xs[0]) / (n - 1) as f64;
            let i = ((x - self.xs[0]) / h).floor();
            return (i.max(0.0) as usize).min(n - 2);
        }
        match self.xs.binary_search_by(|k| k.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Value at `x`, clamped to the end values outside the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.interval(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Splines joined at prescribed breakpoints, so that kinks of the tabulated
/// function at those points are not smeared into the neighbouring intervals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PiecewiseSpline {
    pieces: Vec<CubicSpline>,
}

impl PiecewiseSpline {
    /// Every break strictly inside the knot range must itself be a knot.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, breaks: &[f64]) -> Self {
        assert_eq!(xs.len(), ys.len());
        let mut pieces = Vec::new();
        let mut start = 0;
        for i in 1..xs.len() {
            let is_break = breaks.iter().any(|&b| b == xs[i]);
            if (is_break && i + 1 < xs.len()) || i + 1 == xs.len() {
                if i - start >= 1 {
                    pieces.push(CubicSpline::new(
                        xs[start..=i].to_vec(),
                        ys[start..=i].to_vec(),
                    ));
                }
                start = i;
            }
        }
        Self { pieces }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self
            .pieces
            .partition_point(|p| *p.knots().last().unwrap() < x);
        self.pieces[i.min(self.pieces.len() - 1)].eval(x)
    }

    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .pieces
            .iter()
            .flat_map(|p| p.knots().iter().copied())
            .collect();
        k.dedup();
        k
    }
}

/// Knots on `[0, hi]`: `n` uniform intervals, each break inserted, and
/// geometric clustering towards every break down to `h·2^{−depth}`.
pub fn clustered_knots(hi: f64, n: usize, breaks: &[f64], depth: i32) -> Vec<f64> {
    let h = hi / n as f64;
    let mut k: Vec<f64> = (0..=n).map(|i| hi * i as f64 / n as f64).collect();
    for &b in breaks {
        k.push(b);
        for j in 1..=depth {
            let e = h * 2f64.powi(-j);
            k.extend([b - e, b + e]);
        }
    }
    k.retain(|&x| (0.0..=hi).contains(&x));
    k.sort_by(f64::total_cmp);
    k.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * hi);
    k
}

/// Knots on `[0, hi]`: `n` uniform intervals plus, for each zone
/// `(centre, half_width, spacing)`, a finer uniform run; every break is
/// kept exactly.
pub fn refined_knots(hi: f64, n: usize, zones: &[(f64, f64, f64)], breaks: &[f64]) -> Vec<f64> {
    let mut k: Vec<f64> = (0..=n).map(|i| hi * i as f64 / n as f64).collect();
    for &(c, w, h) in zones {
        let m = (2.0 * w / h).ceil() as usize;
        k.extend((0..=m).map(|j| c - w + 2.0 * w * j as f64 / m as f64));
    }
    let tol = 1e-9 * hi;
    k.retain(|&x| x >= 0.0 && x <= hi && breaks.iter().all(|&b| (x - b).abs() > tol));
    k.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < hi));
    k.sort_by(f64::total_cmp);
    k.dedup_by(|a, b| (*a - *b).abs() <= tol);
    k
}

/// Function of `(r, θ)` with period `period` in θ: a natural spline in `r`
/// (split at `breaks`) per tabulated angle and periodic cubic Lagrange interpolation across angles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolarTable {
    period: f64,
    columns: Vec<PiecewiseSpline>,
}

impl PolarTable {
    /// `values[j][i]` is the value at `radii[i]` and angle `j·period/len`.
    pub fn new(radii: &[f64], period: f64, values: Vec<Vec<f64>>, breaks: &[f64]) -> Self {
        let columns = values
            .into_iter()
            .map(|col| PiecewiseSpline::new(radii.to_vec(), col, breaks))
            .collect();
        Self { period, columns }
    }

    pub fn eval(&self, r: f64, theta: f64) -> f64 {
        let n = self.columns.len();
        let h = self.period / n as f64;
        let t = theta.rem_euclid(self.period) / h;
        let j = t.floor();
        let u = t - j;
        let j = j as isize;
        let idx = |k: isize| (j + k).rem_euclid(n as isize) as usize;
        let f = |k: isize| self.columns[idx(k)].eval(r);
        let (fm, f0, f1, f2) = (f(-1), f(0), f(1), f(2));
        // Cubic Lagrange through nodes −1, 0, 1, 2.
        let wm = -u * (u - 1.0) * (u - 2.0) / 6.0;
        let w0 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
        let w1 = -(u + 1.0) * u * (u - 2.0) / 2.0;
        let w2 = (u + 1.0) * u * (u - 1.0) / 6.0;
        wm * fm + w0 * f0 + w1 * f1 + w2 * f2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_knots_and_smooth_functions() {
        let xs: Vec<f64> = (0..=200).map(|i| i as f64 * 0.01).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let s = CubicSpline::new(xs.clone(), ys.clone());
        for (x, y) in xs.iter().zip(&ys) {
            assert!((s.eval(*x) - y).abs() < 1e-15);
        }
        for i in 0..100 {
            let x = 0.2 + i as f64 * 0.0137;
            assert!((s.eval(x) - x.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn nonuniform_knots() {
        let xs: Vec<f64> = (0..=60).map(|i| 2.0 * (i as f64 / 60.0).powi(2)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (-x).exp()).collect();
        let s = CubicSpline::new(xs, ys);
        for i in 0..50 {
            let x = 0.3 + i as f64 * 0.03;
            assert!((s.eval(x) - (-x).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn piecewise_spline_keeps_kinks_sharp() {
        let f = |x: f64| (x - 1.0).abs() + 0.3 * x * x;
        let xs = clustered_knots(2.0, 40, &[1.0], 6);
        assert!(xs.contains(&1.0) && xs[0] == 0.0 && *xs.last().unwrap() == 2.0);
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let plain = CubicSpline::new(xs.clone(), ys.clone());
        let split = PiecewiseSpline::new(xs, ys, &[1.0]);
        let worst = |g: &dyn Fn(f64) -> f64| {
            (0..400)
                .map(|i| 0.6 + i as f64 * 0.002)
                .map(|x| (g(x) - f(x)).abs())
                .fold(0.0, f64::max)
        };
        let e_split = worst(&|x| split.eval(x));
        assert!(e_split < 1e-5, "{e_split}");
        assert!(worst(&|x| plain.eval(x)) > 5.0 * e_split);
    }

    #[test]
    fn polar_table_periodic() {
        let radii: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
        let n = 32;
        let period = std::f64::consts::PI;
        let f = |r: f64, t: f64| r * (2.0 * t).cos() + 1.0;
        let values = (0..n)
            .map(|j| {
                radii
                    .iter()
                    .map(|&r| f(r, j as f64 * period / n as f64))
                    .collect()
            })
            .collect();
        let t = PolarTable::new(&radii, period, values, &[]);
        for k in 0..50 {
            let (r, th) = (0.03 + k as f64 * 0.037, -3.0 + k as f64 * 0.29);
            assert!((t.eval(r, th) - f(r, th)).abs() < 1e-4);
        }
    }
}
