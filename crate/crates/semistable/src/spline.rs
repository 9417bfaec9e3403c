//! Natural cubic splines on arbitrary monotone grids, plus the graded grids
//! used to tabulate exponents with a |t|^alpha cusp at the origin.

use num_complex::Complex64;

/// Natural cubic spline through (xs, ys). Evaluation clamps to the grid range.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    y2: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        assert!(n >= 3, "spline needs at least 3 nodes");
        assert_eq!(n, ys.len());
        debug_assert!(xs.windows(2).all(|w| w[1] > w[0]), "grid must increase");

        let mut y2 = vec![0.0f64; n];
        let mut u = vec![0.0f64; n];
        for i in 1..n - 1 {
            let sig = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
            let p = sig * y2[i - 1] + 2.0;
            y2[i] = (sig - 1.0) / p;
            let du = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
                - (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
            u[i] = (6.0 * du / (xs[i + 1] - xs[i - 1]) - sig * u[i - 1]) / p;
        }
        for k in (0..n - 1).rev() {
            y2[k] = y2[k] * y2[k + 1] + u[k];
        }
        Self { xs, ys, y2 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        let hi = self
            .xs
            .partition_point(|&g| g < x)
            .clamp(1, n - 1);
        let lo = hi - 1;
        let h = self.xs[hi] - self.xs[lo];
        let a = (self.xs[hi] - x) / h;
        let b = (x - self.xs[lo]) / h;
        a * self.ys[lo]
            + b * self.ys[hi]
            + ((a * a * a - a) * self.y2[lo] + (b * b * b - b) * self.y2[hi]) * h * h / 6.0
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().expect("non-empty grid")
    }
}

/// Pair of splines holding a complex-valued function.
#[derive(Debug, Clone)]
pub struct ComplexSpline {
    re: CubicSpline,
    im: CubicSpline,
}

impl ComplexSpline {
    pub fn natural(xs: Vec<f64>, ys: &[Complex64]) -> Self {
        let re: Vec<f64> = ys.iter().map(|z| z.re).collect();
        let im: Vec<f64> = ys.iter().map(|z| z.im).collect();
        Self {
            re: CubicSpline::natural(xs.clone(), re),
            im: CubicSpline::natural(xs, im),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> Complex64 {
        Complex64::new(self.re.eval(x), self.im.eval(x))
    }

    pub fn x_max(&self) -> f64 {
        self.re.x_max()
    }
}

/// Grid on [0, b] with nodes b*(i/n)^power, dense near 0.
pub fn graded_grid(b: f64, n: usize, power: f64) -> Vec<f64> {
    assert!(b > 0.0 && n >= 2);
    let mut g: Vec<f64> = (0..=n)
        .map(|i| b * (i as f64 / n as f64).powf(power))
        .collect();
    g.dedup_by(|a, b| *a <= *b + f64::EPSILON * b.abs());
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_smooth_function() {
        let xs: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (x * 0.7).sin() * (-0.1 * x).exp()).collect();
        let s = CubicSpline::natural(xs, ys);
        // Interior accuracy; the natural boundary condition costs O(h^2)
        // in the first and last panels.
        for i in 0..360 {
            let x = 0.5 + i as f64 * 0.0249;
            let want = (x * 0.7).sin() * (-0.1 * x).exp();
            assert!((s.eval(x) - want).abs() < 2e-7, "x={x}");
        }
    }

    #[test]
    fn graded_grid_monotone() {
        let g = graded_grid(60.0, 1000, 5.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g[0], 0.0);
        assert!((g.last().unwrap() - 60.0).abs() < 1e-12);
    }
}
