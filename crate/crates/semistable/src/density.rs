//! Semistable densities g_lambda and distribution functions G_lambda by
//! Fourier inversion of the characteristic exponent, plus the
//! position-indexed right-hand-side integrals of the strong renewal and
//! renewal-function theorems.
//!
//! The exponent satisfies the exact scaling y_1(r t) = c y_1(t), so a single
//! multiplicative period of y_1 determines psi_lambda everywhere:
//! psi_lambda(t) = exp(lambda y_1(lambda^{-1/alpha} t)). The same scaling
//! propagates the decay bound -Re y_1(t) >= nu t^alpha exactly, which fixes
//! the inversion truncation.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::charfn::levy_exponent;
use crate::error::{Error, Result};
use crate::model::{NormingScheme, SemistableSpec};
use crate::quad::{adaptive, adaptive_real, fourier_improper, geometric_edges, kronrod15};
use crate::spline::ComplexSpline;

const PI: f64 = std::f64::consts::PI;

/// y_1 tabulated over one multiplicative period [t_hi/r, t_hi] and extended
/// to all t > 0 by the exact scaling y_1(t) = c^{-j} y_1(t r^j).
pub struct ExponentTable {
    spline: ComplexSpline,
    t_lo: f64,
    t_hi: f64,
    r: f64,
    c: f64,
}

impl ExponentTable {
    fn build(spec: &SemistableSpec, t_hi: f64, nodes: usize) -> Result<Self> {
        let r = spec.r();
        let t_lo = t_hi / r;
        let xs: Vec<f64> = (0..nodes)
            .map(|i| t_lo * r.powf(i as f64 / (nodes - 1) as f64))
            .collect();
        let ys: Vec<Complex64> = xs
            .par_iter()
            .map(|&t| levy_exponent(spec, 1.0, t, 1e-11))
            .collect::<Result<Vec<_>>>()?;
        let ln_xs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        Ok(Self {
            spline: ComplexSpline::natural(ln_xs, &ys),
            t_lo,
            t_hi,
            r,
            c: spec.c(),
        })
    }

    /// y_1(t) for any t > 0, via y_1(t) = c^{-j} y_1(t r^j) with
    /// t r^j in (t_hi/r, t_hi].
    pub fn eval(&self, t: f64) -> Complex64 {
        debug_assert!(t > 0.0);
        if t > self.t_lo && t <= self.t_hi {
            return self.spline.eval(t.ln());
        }
        let j = (self.t_hi / t).log(self.r).floor();
        let scaled = (t * self.r.powf(j)).clamp(self.t_lo, self.t_hi);
        self.spline.eval(scaled.ln()) * self.c.powf(-j)
    }
}

/// Evaluator configuration and caches; reported in the JSON metadata dump.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluatorInfo {
    pub alpha: f64,
    pub c: f64,
    pub nu_decay: f64,
    pub t_cut: f64,
    pub eps: f64,
    pub x_max: f64,
    pub lambda_nodes: usize,
    pub x_nodes: usize,
    pub sup_g: f64,
}

/// Fourier-inversion evaluator for the merging family g_lambda, G_lambda,
/// lambda in (1/c, 1], for one-sided specs with alpha in (0, 1).
pub struct DensityEvaluator {
    spec: SemistableSpec,
    alpha: f64,
    c: f64,
    exponent: ExponentTable,
    nu_decay: f64,
    t_cut: f64,
    eps: f64,
    lambda_grid: Vec<f64>,
    x_max: f64,
    dx: f64,
    g_cache: Vec<Vec<f64>>,
    g_cum: Vec<Vec<f64>>,
    sup_g: f64,
}

impl DensityEvaluator {
    /// Builds the evaluator: decay probe, one-period exponent table, and the
    /// (lambda, x) density cache (64 x 1025 by default).
    pub fn new(spec: &SemistableSpec) -> Result<Self> {
        Self::with_options(spec, 1e-7, 64, 1024, 32.0)
    }

    pub fn with_options(
        spec: &SemistableSpec,
        eps: f64,
        lambda_nodes: usize,
        x_nodes: usize,
        x_max: f64,
    ) -> Result<Self> {
        let alpha = spec.alpha();
        if !(alpha > 0.0 && alpha < 1.0) || spec.m_right().is_none() || spec.m_left().is_some() {
            return Err(Error::Precondition(
                "density evaluator covers one-sided specs with alpha in (0,1)".into(),
            ));
        }
        let c = spec.c();
        let r = spec.r();

        // Decay constant from one period of direct exponent evaluations;
        // exact scaling extends -Re y_1(t) >= nu t^alpha to all t and to all
        // lambda (the lambda factors cancel).
        let probe: Vec<f64> = (0..129)
            .map(|i| r.powf(i as f64 / 128.0))
            .collect();
        let mut nu = f64::INFINITY;
        for &t in &probe {
            let y = levy_exponent(spec, 1.0, t, 1e-9)?;
            nu = nu.min(-y.re / t.powf(alpha));
        }
        if !(nu > 0.0) {
            return Err(Error::Numeric(format!(
                "characteristic exponent does not decay (nu = {nu})"
            )));
        }

        // Truncation: int_{t_cut}^inf e^{-nu t^alpha} dt below eps/100, so
        // the truncation bias stays well under the -1e-9 negativity floor.
        let mut t_cut = (1.0 / nu).powf(1.0 / alpha);
        while decay_tail(nu, alpha, t_cut) > eps / 100.0 {
            t_cut *= 1.25;
        }

        let exponent = ExponentTable::build(spec, t_cut * r * 1.0001, 1537)?;

        let mut eval = Self {
            spec: spec.clone(),
            alpha,
            c,
            exponent,
            nu_decay: nu,
            t_cut,
            eps,
            lambda_grid: (0..lambda_nodes)
                .map(|j| 1.0 / c + (1.0 - 1.0 / c) * j as f64 / (lambda_nodes - 1) as f64)
                .collect(),
            x_max,
            dx: x_max / x_nodes as f64,
            g_cache: Vec::new(),
            g_cum: Vec::new(),
            sup_g: 0.0,
        };

        let xs: Vec<f64> = (0..=x_nodes).map(|i| i as f64 * eval.dx).collect();
        let columns: Vec<Vec<f64>> = eval
            .lambda_grid
            .par_iter()
            .map(|&lam| {
                xs.iter()
                    .map(|&x| eval.g_slow(lam, x))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        let mut sup_g = 0.0f64;
        let mut cache = Vec::with_capacity(columns.len());
        let mut cums = Vec::with_capacity(columns.len());
        for col in columns {
            let mut clean = Vec::with_capacity(col.len());
            for v in col {
                if v < -1e-9 {
                    return Err(Error::Numeric(format!(
                        "inversion produced g = {v} < -1e-9"
                    )));
                }
                let v = v.max(0.0);
                sup_g = sup_g.max(v);
                clean.push(v);
            }
            let mut cum = Vec::with_capacity(clean.len());
            let mut acc = 0.0;
            cum.push(0.0);
            for w in clean.windows(2) {
                acc += 0.5 * (w[0] + w[1]) * eval.dx;
                cum.push(acc.min(1.0));
            }
            cache.push(clean);
            cums.push(cum);
        }
        eval.g_cache = cache;
        eval.g_cum = cums;
        eval.sup_g = sup_g;
        Ok(eval)
    }

    pub fn info(&self) -> EvaluatorInfo {
        EvaluatorInfo {
            alpha: self.alpha,
            c: self.c,
            nu_decay: self.nu_decay,
            t_cut: self.t_cut,
            eps: self.eps,
            x_max: self.x_max,
            lambda_nodes: self.lambda_grid.len(),
            x_nodes: self.g_cache[0].len() - 1,
            sup_g: self.sup_g,
        }
    }

    pub fn spec(&self) -> &SemistableSpec {
        &self.spec
    }

    pub fn sup_g(&self) -> f64 {
        self.sup_g
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn lambda_grid(&self) -> &[f64] {
        &self.lambda_grid
    }

    pub fn cached_column(&self, j: usize) -> (&[f64], &[f64]) {
        (&self.g_cache[j], &self.g_cum[j])
    }

    /// Reduce lambda into (1/c, 1] by the exact periodicity of the family.
    pub fn reduce_lambda(&self, lambda: f64) -> f64 {
        debug_assert!(lambda > 0.0);
        let m = lambda.log(self.c).ceil();
        let red = lambda * self.c.powf(-m);
        if red <= 1.0 / self.c {
            red * self.c
        } else if red > 1.0 {
            red / self.c
        } else {
            red
        }
    }

    /// psi_lambda(t) through the exponent table.
    pub fn psi(&self, lambda: f64, t: f64) -> Complex64 {
        if t == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        if t < 0.0 {
            return self.psi(lambda, -t).conj();
        }
        let s = t / lambda.powf(1.0 / self.alpha);
        (self.exponent.eval(s) * lambda).exp()
    }

    /// Slow-path density: adaptive inversion of the exponent table, absolute
    /// accuracy ~ eps. Used for cache construction and high-accuracy checks.
    pub fn g_slow(&self, lambda: f64, x: f64) -> Result<f64> {
        let lam = self.reduce_lambda(lambda);
        let f = |t: f64| self.psi(lam, t) * Complex64::from_polar(1.0, -t * x);
        let panels = (((self.t_cut * x.abs()) / 2.0) as usize).clamp(2_000, 200_000);
        let tol = (self.eps * 0.2).min(5e-9);
        let (v, _) = adaptive(&f, 0.0, self.t_cut, tol, 1e-10, &[], panels)?;
        Ok(v.re / PI)
    }

    /// Far-field density by half-period block summation in t.
    pub fn g_far(&self, lambda: f64, x: f64) -> Result<f64> {
        let lam = self.reduce_lambda(lambda);
        let f = |t: f64| self.psi(lam, t);
        let (v, _) = fourier_improper(&f, 0.0, -x, self.eps * 0.1, |_, _| Vec::new(), 4_000)?;
        Ok(v.re / PI)
    }

    /// Tail probability 1 - G_lambda(x) by Gil-Pelaez inversion, usable for
    /// x beyond the cache where it is small but not negligible.
    pub fn tail_far(&self, lambda: f64, x: f64) -> Result<f64> {
        let lam = self.reduce_lambda(lambda);
        // S = 1/2 + (1/pi) Im int_0^inf e^{-itx} psi(t) / t dt, with the
        // first half-period integrated as a real smooth integrand.
        let a = PI / x;
        let head_f = |t: f64| {
            if t == 0.0 {
                return 0.0;
            }
            (self.psi(lam, t) * Complex64::from_polar(1.0, -t * x)).im / t
        };
        let (head, _) = adaptive_real(&head_f, 0.0, a, self.eps * 0.05, 1e-10, &[], 20_000)?;
        let tail_f = |t: f64| self.psi(lam, t) / t;
        let (tail_c, _) =
            fourier_improper(&tail_f, a, -x, self.eps * 0.05, |_, _| Vec::new(), 4_000)?;
        let s = 0.5 + (head + tail_c.im) / PI;
        Ok(s.clamp(0.0, 1.0))
    }

    /// Density from the (lambda, x) cache by bilinear interpolation; falls
    /// back to the far-field inversion beyond the cache.
    pub fn g(&self, lambda: f64, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        if x > self.x_max {
            return self.g_far(lambda, x);
        }
        Ok(self.bilinear(&self.g_cache, lambda, x))
    }

    /// Distribution function from the cumulative cache (clamped monotone);
    /// 1 - tail_far beyond the cache.
    pub fn cdf(&self, lambda: f64, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        if x > self.x_max {
            return Ok(1.0 - self.tail_far(lambda, x)?);
        }
        Ok(self.bilinear(&self.g_cum, lambda, x).clamp(0.0, 1.0))
    }

    fn bilinear(&self, table: &[Vec<f64>], lambda: f64, x: f64) -> f64 {
        let lam = self.reduce_lambda(lambda).clamp(
            self.lambda_grid[0],
            *self.lambda_grid.last().expect("non-empty grid"),
        );
        let nl = self.lambda_grid.len();
        let dl = (self.lambda_grid[nl - 1] - self.lambda_grid[0]) / (nl - 1) as f64;
        let jf = ((lam - self.lambda_grid[0]) / dl).clamp(0.0, (nl - 1) as f64);
        let j = (jf as usize).min(nl - 2);
        let tj = jf - j as f64;

        let nif = (x / self.dx).clamp(0.0, (table[0].len() - 1) as f64);
        let i = (nif as usize).min(table[0].len() - 2);
        let ti = nif - i as f64;

        let a = table[j][i] * (1.0 - ti) + table[j][i + 1] * ti;
        let b = table[j + 1][i] * (1.0 - ti) + table[j + 1][i + 1] * ti;
        a * (1.0 - tj) + b * tj
    }

    /// Total mass int_0^X g + certified remainder bound, X chosen so the
    /// Levy-tail bound on 1 - G(X) sits below 0.4 eps_target.
    pub fn normalization(&self, lambda: f64, eps_target: f64) -> Result<f64> {
        let lam = self.reduce_lambda(lambda);
        // Near field.
        let mut total = 0.0;
        let f = |x: f64| self.g_slow(lam, x).unwrap_or(f64::NAN);
        let (near, _) = adaptive_real(
            &f,
            0.0,
            self.x_max,
            eps_target * 0.2,
            1e-9,
            &[],
            400_000,
        )?;
        total += near;

        // Far field in logarithmic pieces out to the certified-tail cutoff.
        let m_sup = self
            .spec
            .m_right()
            .map(|m| m.inf_sup().1)
            .unwrap_or(1.0);
        let x_big = (2.0 * m_sup / (0.4 * eps_target))
            .powf(1.0 / self.alpha)
            .max(4.0 * self.x_max);
        let edges = geometric_edges(self.x_max, x_big, 3);
        for w in edges.windows(2) {
            let g = |x: f64| {
                Complex64::new(self.g_far(lam, x).unwrap_or(f64::NAN), 0.0)
            };
            let (piece, _) = adaptive(&g, w[0], w[1], eps_target * 0.02, 1e-7, &[], 600)?;
            total += piece.re;
        }
        Ok(total)
    }

    /// Empirical lambda-Lipschitz constant of the cached family.
    pub fn lipschitz_lambda(&self) -> f64 {
        let mut nu4 = 0.0f64;
        let dl = self.lambda_grid[1] - self.lambda_grid[0];
        for cols in self.g_cache.windows(2) {
            for (a, b) in cols[0].iter().zip(cols[1].iter()) {
                nu4 = nu4.max((b - a).abs() / dl);
            }
        }
        nu4
    }

    /// Empirical bound on the x-derivative of the cached family.
    pub fn x_derivative_bound(&self) -> f64 {
        let mut d = 0.0f64;
        for col in &self.g_cache {
            for w in col.windows(2) {
                d = d.max((w[1] - w[0]).abs() / self.dx);
            }
        }
        d
    }
}

/// Upper bound for int_T^inf e^{-nu t^alpha} dt by a geometric cover.
fn decay_tail(nu: f64, alpha: f64, t_from: f64) -> f64 {
    let mut total = 0.0;
    let mut t = t_from;
    for _ in 0..400 {
        let step = t * 0.1;
        let term = step * (-nu * t.powf(alpha)).exp();
        total += term;
        if term < 1e-18 * total.max(1e-300) {
            break;
        }
        t += step;
    }
    total
}

/// alpha int g_{gamma(B(n) x^{-alpha})}(x) x^{-alpha} dx: the SRT right-hand
/// side, split at the position-parameter crossings.
pub fn srt_rhs_integral(
    e: &DensityEvaluator,
    scheme: &NormingScheme,
    n: f64,
) -> Result<f64> {
    rhs_integral(e, scheme, n, RhsKind::Density)
}

/// alpha int G_{gamma(B(y) x^{-alpha})}(x) x^{-alpha-1} dx: the renewal
/// function right-hand side.
pub fn renewal_rhs_integral(
    e: &DensityEvaluator,
    scheme: &NormingScheme,
    y: f64,
) -> Result<f64> {
    rhs_integral(e, scheme, y, RhsKind::Cdf)
}

enum RhsKind {
    Density,
    Cdf,
}

fn rhs_integral(
    e: &DensityEvaluator,
    scheme: &NormingScheme,
    n: f64,
    kind: RhsKind,
) -> Result<f64> {
    let alpha = e.alpha;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition("RHS integrals need alpha in (0,1)".into()));
    }
    let b_n = scheme.norming_b(n);

    // Lower x limit: the merging densities are exponentially small near 0.
    let mut x_lo = e.x_max / 1024.0;
    while x_lo > 1e-8 {
        let probe = (0..e.lambda_grid.len())
            .step_by(7)
            .map(|j| e.g_cache[j][(x_lo / e.dx) as usize])
            .fold(0.0f64, f64::max);
        if probe > 1e-13 {
            break;
        }
        x_lo *= 0.5;
    }

    let integrand = |x: f64| -> f64 {
        let lam = scheme.gamma_extended(b_n * x.powf(-alpha));
        let v = match kind {
            RhsKind::Density => e.g(lam, x).unwrap_or(f64::NAN),
            RhsKind::Cdf => e.cdf(lam, x).unwrap_or(f64::NAN) * x.powf(-1.0),
        };
        alpha * v * x.powf(-alpha)
    };

    // Gamma crossing points: B(n) x^{-alpha} = b_j.
    let crossings = |lo: f64, hi: f64| -> Vec<f64> {
        let v_hi = b_n * lo.powf(-alpha);
        let v_lo = b_n * hi.powf(-alpha);
        scheme
            .bracket_points(v_lo, v_hi)
            .into_iter()
            .map(|b| (b_n / b).powf(1.0 / alpha))
            .filter(|&x| x > lo && x < hi)
            .collect()
    };

    // Near field over the cache.
    let mut total = 0.0;
    {
        let mut edges = crossings(x_lo, e.x_max);
        edges.push(x_lo);
        edges.push(e.x_max);
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        for w in edges.windows(2) {
            let f = |x: f64| integrand(x);
            let (piece, _) = adaptive_real(&f, w[0], w[1], 1e-9, 1e-7, &[], 50_000)?;
            total += piece;
        }
    }

    match kind {
        RhsKind::Density => {
            // Far field: alpha g x^{-alpha} decays like x^{-1-2 alpha}; extend
            // geometrically until the running piece is negligible.
            let mut lo = e.x_max;
            loop {
                let hi = lo * 2.0;
                let mut edges = crossings(lo, hi);
                edges.push(lo);
                edges.push(hi);
                edges.sort_by(f64::total_cmp);
                edges.dedup();
                let mut piece = 0.0;
                for w in edges.windows(2) {
                    let f = |x: f64| Complex64::new(integrand(x), 0.0);
                    let (v, _) = adaptive(&f, w[0], w[1], 1e-8, 1e-6, &[], 400)?;
                    piece += v.re;
                }
                total += piece;
                lo = hi;
                if piece < 2e-5 * total.abs() || lo > 1e9 {
                    break;
                }
            }
        }
        RhsKind::Cdf => {
            // alpha int_X^inf G x^{-alpha-1} = X^{-alpha}
            //   - alpha int_X^inf (1-G) x^{-alpha-1}, the last term summed in
            // geometric pieces of the Gil-Pelaez tail until negligible.
            let x0 = e.x_max;
            total += x0.powf(-alpha);
            let mut lo = x0;
            loop {
                let hi = lo * 2.0;
                let mut edges = crossings(lo, hi);
                edges.push(lo);
                edges.push(hi);
                edges.sort_by(f64::total_cmp);
                edges.dedup();
                let mut piece = 0.0;
                for w in edges.windows(2) {
                    let f = |x: f64| {
                        let lam = scheme.gamma_extended(b_n * x.powf(-alpha));
                        let s = e.tail_far(lam, x).unwrap_or(f64::NAN);
                        Complex64::new(alpha * s * x.powf(-alpha - 1.0), 0.0)
                    };
                    let (v, _) = adaptive(&f, w[0], w[1], 1e-9, 1e-5, &[], 200)?;
                    piece += v.re;
                }
                total -= piece;
                lo = hi;
                if piece < 2e-5 * total.abs() || lo > 1e10 {
                    break;
                }
            }
        }
    }
    Ok(total)
}

/// Closed forms of the one-sided stable alpha = 1/2 law with Levy tail
/// m x^{-1/2}: the Levy(c) distribution with c = m^2 pi / 2.
pub mod stable_half {
    use crate::special::erfc;

    pub fn density(m: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let c = m * m * std::f64::consts::PI / 2.0;
        (c / (2.0 * std::f64::consts::PI)).sqrt() * x.powf(-1.5) * (-c / (2.0 * x)).exp()
    }

    pub fn cdf(m: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let c = m * m * std::f64::consts::PI / 2.0;
        erfc((c / (2.0 * x)).sqrt())
    }
}

/// One Kronrod panel of the slow inversion integrand, exposed for the
/// metadata dump of quadrature behavior in reports.
pub fn inversion_panel(
    e: &DensityEvaluator,
    lambda: f64,
    x: f64,
    t0: f64,
    t1: f64,
) -> (Complex64, f64) {
    let lam = e.reduce_lambda(lambda);
    let f = |t: f64| e.psi(lam, t) * Complex64::from_polar(1.0, -t * x);
    kronrod15(&f, t0, t1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Centering, LogPeriodic, SlowlyVarying};

    fn tent_spec(alpha: f64, c: f64) -> SemistableSpec {
        let r = c.powf(1.0 / alpha);
        let h = 1.0 + 0.9 * (LogPeriodic::tent_height_limit(alpha, r) - 1.0);
        SemistableSpec::one_sided(alpha, c, LogPeriodic::tent(r, h).unwrap()).unwrap()
    }

    fn stable_spec(m: f64) -> SemistableSpec {
        SemistableSpec::one_sided(0.5, 2.0, LogPeriodic::constant(4.0, m).unwrap()).unwrap()
    }

    #[test]
    fn exponent_table_matches_direct() {
        let spec = tent_spec(0.75, 2.0);
        let e = DensityEvaluator::new(&spec).unwrap();
        for &t in &[0.037, 1.3, 11.0, e.t_cut * 0.9] {
            let direct = levy_exponent(&spec, 1.0, t, 1e-11).unwrap();
            let table = e.exponent.eval(t);
            assert!(
                (direct - table).norm() < 1e-8 * (1.0 + direct.norm()),
                "t={t}: {direct} vs {table}"
            );
        }
    }

    #[test]
    fn stable_half_density_oracle() {
        let m = 1.0;
        let e = DensityEvaluator::new(&stable_spec(m)).unwrap();
        for &x in &[0.5, 1.0, 2.0] {
            let got = e.g_slow(1.0, x).unwrap();
            let want = stable_half::density(m, x);
            assert!(
                (got - want).abs() < 1e-6,
                "x={x}: {got} vs {want}"
            );
        }
        // Far field matches the closed form too.
        for &x in &[40.0, 150.0] {
            let got = e.g_far(1.0, x).unwrap();
            let want = stable_half::density(m, x);
            assert!(
                (got - want).abs() < 1e-8 + 1e-4 * want,
                "x={x}: {got} vs {want}"
            );
        }
        // Gil-Pelaez tail vs closed-form CDF.
        for &x in &[40.0, 400.0] {
            let got = e.tail_far(1.0, x).unwrap();
            let want = 1.0 - stable_half::cdf(m, x);
            assert!(
                (got / want - 1.0).abs() < 1e-3,
                "x={x}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn normalization_and_family_invariants() {
        let spec = tent_spec(0.75, 2.0);
        let e = DensityEvaluator::new(&spec).unwrap();
        for &lam in &[0.55, 0.8, 1.0] {
            let mass = e.normalization(lam, 1e-6).unwrap();
            assert!((mass - 1.0).abs() < 1e-6, "lambda={lam}: mass {mass}");
        }
        // Periodicity through reduction is exact.
        for i in 0..20 {
            let lam = 0.52 + 0.023 * i as f64;
            let x = 0.3 + 0.6 * i as f64;
            let a = e.g(lam, x).unwrap();
            let b = e.g(lam * spec.c(), x).unwrap();
            assert!((a - b).abs() < 1e-12, "lam={lam} x={x}");
        }
        // Lipschitz and derivative bounds finite.
        assert!(e.lipschitz_lambda().is_finite() && e.lipschitz_lambda() > 0.0);
        assert!(e.x_derivative_bound().is_finite());
        assert!(e.sup_g() > 0.05 && e.sup_g() < 10.0);
        // G is exponentially small near zero and monotone on the grid.
        assert!(e.cdf(1.0, 1e-3).unwrap() < 1e-6);
        let mut prev = 0.0;
        for i in 0..1000 {
            let x = e.x_max() * i as f64 / 1000.0;
            let g = e.cdf(0.7, x).unwrap();
            assert!(g + 1e-12 >= prev);
            prev = g;
        }
    }

    #[test]
    fn srt_rhs_stable_reduction_oracle() {
        // With M_R = m constant the position index is irrelevant and the SRT
        // RHS equals sin(pi alpha)/(pi m) at alpha = 1/2 via
        // alpha E[V^-alpha] = alpha / (Gamma(1+a) Gamma(1-a) m).
        let m = 1.0;
        let e = DensityEvaluator::new(&stable_spec(m)).unwrap();
        let scheme = NormingScheme::new(0.5, 2.0, SlowlyVarying::one(), Centering::Zero).unwrap();
        let got = srt_rhs_integral(&e, &scheme, 1e4).unwrap();
        let want = (PI * 0.5).sin() / (PI * m);
        assert!(
            (got / want - 1.0).abs() < 1e-4,
            "got {got}, want {want}"
        );
        // And the renewal-function RHS equals E[V^-alpha] = want / alpha.
        let got2 = renewal_rhs_integral(&e, &scheme, 1e4).unwrap();
        let want2 = want / 0.5;
        assert!(
            (got2 / want2 - 1.0).abs() < 2e-4,
            "got {got2}, want {want2}"
        );
    }

    #[test]
    fn srt_rhs_log_periodic_consistency() {
        // Scaling n -> r n shifts the position parameter by one full period;
        // with ell = 1 the integral is invariant up to floor effects.
        let spec = tent_spec(0.75, 2.0);
        let e = DensityEvaluator::new(&spec).unwrap();
        let scheme = NormingScheme::new(0.75, 2.0, SlowlyVarying::one(), Centering::Zero).unwrap();
        let n = 1e4;
        let a = srt_rhs_integral(&e, &scheme, n).unwrap();
        let b = srt_rhs_integral(&e, &scheme, n * spec.r()).unwrap();
        assert!(a.is_finite() && a > 0.0);
        assert!((a / b - 1.0).abs() < 1e-3, "a={a} b={b}");
    }
}
