//! Log-periodic functions, a closed-form slowly varying family, semistable
//! specifications and the norming / centering machinery tying them together.

use crate::error::{Error, Result};

/// Positive function with p(r x) = p(x) for a fixed multiplicative period
/// r > 1, bounded with strictly positive infimum and right-continuous.
///
/// The table representation is piecewise linear in x over one period
/// [1, r): node i sits at r^{i/m}, and `wrap` is the left limit at r. The
/// single allowed discontinuity is the (right-continuous) drop at the period
/// boundary, so `wrap >= values[0]` is required whenever the tail product
/// p(x) x^{-alpha} must be nonincreasing.
#[derive(Debug, Clone)]
pub enum LogPeriodic {
    Const {
        period: f64,
        value: f64,
    },
    Table {
        period: f64,
        values: Vec<f64>,
        wrap: f64,
    },
    /// mean + sum_j (a_j cos(2 pi j u) + b_j sin(2 pi j u)), u = log_r x.
    Fourier {
        period: f64,
        mean: f64,
        coeffs: Vec<(f64, f64)>,
    },
}

impl LogPeriodic {
    pub fn constant(period: f64, value: f64) -> Result<Self> {
        check_period(period)?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Construction(format!(
                "constant log-periodic value must be positive, got {value}"
            )));
        }
        Ok(Self::Const { period, value })
    }

    pub fn table(period: f64, values: Vec<f64>, wrap: f64) -> Result<Self> {
        check_period(period)?;
        if values.is_empty() {
            return Err(Error::Construction("empty table".into()));
        }
        if values.iter().chain([&wrap]).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Construction(
                "table values must be strictly positive and finite".into(),
            ));
        }
        Ok(Self::Table {
            period,
            values,
            wrap,
        })
    }

    /// Sample `f` (a function of the log-position u in [0, 1)) at m nodes.
    pub fn from_log_fn(period: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..m).map(|i| f(i as f64 / m as f64)).collect();
        let wrap = f(1.0);
        Self::table(period, values, wrap)
    }

    /// Tent rising linearly in x from 1 at x = 1 to `height` at x = sqrt(r),
    /// back to 1 at the wrap: a continuous 2-segment table.
    pub fn tent(period: f64, height: f64) -> Result<Self> {
        Self::table(period, vec![1.0, height], 1.0)
    }

    /// Largest tent height keeping p(x) x^{-alpha} nonincreasing.
    pub fn tent_height_limit(alpha: f64, period: f64) -> f64 {
        let m = period.sqrt();
        let denom = (1.0 - alpha) * m + alpha;
        let b = if denom > 0.0 {
            (alpha / denom).min(1.0)
        } else {
            1.0
        };
        1.0 + b * (m - 1.0)
    }

    pub fn fourier(period: f64, mean: f64, coeffs: Vec<(f64, f64)>) -> Result<Self> {
        check_period(period)?;
        let p = Self::Fourier {
            period,
            mean,
            coeffs,
        };
        // Positivity is not structural for a Fourier series; scan one period.
        let (inf, _) = p.inf_sup();
        if !(inf > 0.0) {
            return Err(Error::Construction(format!(
                "fourier log-periodic takes non-positive values (inf ~ {inf:.3e})"
            )));
        }
        Ok(p)
    }

    pub fn period(&self) -> f64 {
        match self {
            Self::Const { period, .. }
            | Self::Table { period, .. }
            | Self::Fourier { period, .. } => *period,
        }
    }

    /// Value at x > 0 by reduction to [1, r).
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!(
                "log-periodic function evaluated at x = {x} <= 0"
            )));
        }
        Ok(self.value(x))
    }

    /// Unchecked evaluation; `x` must be positive.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        debug_assert!(x > 0.0);
        match self {
            Self::Const { value, .. } => *value,
            Self::Table {
                period,
                values,
                wrap,
            } => {
                let u = fract_log(x, *period);
                let m = values.len();
                let pos = u * m as f64;
                let i = (pos as usize).min(m - 1);
                // Node positions r^{i/m}: interpolate linearly in x.
                let x_red = period.powf(u);
                let x_lo = period.powf(i as f64 / m as f64);
                let x_hi = period.powf((i + 1) as f64 / m as f64);
                let v_lo = values[i];
                let v_hi = if i + 1 < m { values[i + 1] } else { *wrap };
                let theta = ((x_red - x_lo) / (x_hi - x_lo)).clamp(0.0, 1.0);
                v_lo + theta * (v_hi - v_lo)
            }
            Self::Fourier {
                period,
                mean,
                coeffs,
            } => {
                let u = fract_log(x, *period);
                let mut s = *mean;
                for (j, (a, b)) in coeffs.iter().enumerate() {
                    let w = 2.0 * std::f64::consts::PI * (j + 1) as f64 * u;
                    s += a * w.cos() + b * w.sin();
                }
                s
            }
        }
    }

    /// Infimum and supremum over one period (node-exact for tables, scanned
    /// on a 4096-point grid for Fourier series).
    pub fn inf_sup(&self) -> (f64, f64) {
        match self {
            Self::Const { value, .. } => (*value, *value),
            Self::Table { values, wrap, .. } => {
                let mut lo = *wrap;
                let mut hi = *wrap;
                for &v in values {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                (lo, hi)
            }
            Self::Fourier { period, .. } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for i in 0..4096 {
                    let v = self.value(period.powf(i as f64 / 4096.0));
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                (lo, hi)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        let (lo, hi) = self.inf_sup();
        hi - lo <= 1e-12 * hi
    }

    /// Positions in [1, r) where the function is not smooth (table nodes and
    /// the wrap point). Used to pre-split quadrature panels.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Const { .. } | Self::Fourier { .. } => vec![1.0],
            Self::Table { period, values, .. } => {
                let m = values.len();
                (0..m).map(|i| period.powf(i as f64 / m as f64)).collect()
            }
        }
    }

    /// Verifies that x -> value(x) x^{-alpha} is nonincreasing.
    ///
    /// For tables the check is exact per linear segment; for Fourier series a
    /// dense grid over one period is scanned. Returns the first offending x.
    pub fn check_tail_monotone(&self, alpha: f64) -> Result<()> {
        match self {
            Self::Const { .. } => Ok(()),
            Self::Table {
                period,
                values,
                wrap,
            } => {
                if values[0] > *wrap * (1.0 + 1e-12) {
                    return Err(Error::Construction(format!(
                        "tail product jumps up at the period wrap: p(1) = {} > wrap = {wrap}",
                        values[0]
                    )));
                }
                let m = values.len();
                for i in 0..m {
                    let x_lo = period.powf(i as f64 / m as f64);
                    let x_hi = period.powf((i + 1) as f64 / m as f64);
                    let v_lo = values[i];
                    let v_hi = if i + 1 < m { values[i + 1] } else { *wrap };
                    // p(x) = a + b x on the segment; d/dx [p x^{-alpha}] has the
                    // sign of b(1-alpha) x - alpha a, linear in x.
                    let b = (v_hi - v_lo) / (x_hi - x_lo);
                    let a = v_lo - b * x_lo;
                    let d_lo = b * (1.0 - alpha) * x_lo - alpha * a;
                    let d_hi = b * (1.0 - alpha) * x_hi - alpha * a;
                    if d_lo > 1e-12 * alpha * v_lo || d_hi > 1e-12 * alpha * v_hi {
                        return Err(Error::Construction(format!(
                            "p(x) x^-alpha increases on segment starting at x = {x_lo}"
                        )));
                    }
                }
                Ok(())
            }
            Self::Fourier { period, .. } => {
                let n = 8192;
                let mut prev_x = 1.0f64;
                let mut prev = self.value(1.0);
                for i in 1..=n {
                    let x = period.powf(i as f64 / n as f64);
                    let v = self.value(x) * x.powf(-alpha);
                    let scaled_prev = prev * prev_x.powf(-alpha);
                    if v > scaled_prev * (1.0 + 1e-10) {
                        return Err(Error::Construction(format!(
                            "p(x) x^-alpha increases near x = {x}"
                        )));
                    }
                    prev_x = x;
                    prev = self.value(x);
                }
                Ok(())
            }
        }
    }
}

fn check_period(period: f64) -> Result<()> {
    if !(period > 1.0 && period.is_finite()) {
        return Err(Error::Construction(format!(
            "multiplicative period must be > 1, got {period}"
        )));
    }
    Ok(())
}

#[inline]
fn fract_log(x: f64, period: f64) -> f64 {
    let u = x.ln() / period.ln();
    let f = u - u.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Slowly varying function kappa * max(ln x, 1)^beta. beta = 0 yields
/// constants; the family is closed under the asymptotic-inverse pairing used
/// by the norming machinery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowlyVarying {
    pub kappa: f64,
    pub beta: f64,
}

impl SlowlyVarying {
    pub fn new(kappa: f64, beta: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite() && beta.is_finite()) {
            return Err(Error::Construction(format!(
                "slowly varying parameters out of range: kappa={kappa}, beta={beta}"
            )));
        }
        Ok(Self { kappa, beta })
    }

    pub fn one() -> Self {
        Self {
            kappa: 1.0,
            beta: 0.0,
        }
    }

    /// log_2(x), the paper's base-2 logarithm example.
    pub fn log2() -> Self {
        Self {
            kappa: 1.0 / std::f64::consts::LN_2,
            beta: 1.0,
        }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        debug_assert!(x > 0.0);
        if self.beta == 0.0 {
            return self.kappa;
        }
        self.kappa * x.ln().max(1.0).powf(self.beta)
    }

    pub fn is_constant(&self) -> bool {
        self.beta == 0.0
    }

    /// The slowly varying part of the asymptotic inverse: if A(n) =
    /// n^{1/alpha} ell1(n), then B(y) = y^alpha / ell(y) satisfies
    /// B(A(n)) ~ n with ell = partner(ell1). Exact when beta = 0.
    pub fn partner(&self, alpha: f64) -> Self {
        Self {
            kappa: self.kappa.powf(alpha) * alpha.powf(alpha * self.beta),
            beta: alpha * self.beta,
        }
    }
}

/// Parameters of a semistable law: index alpha, geometric ratio c > 1, the
/// multiplicative period r = c^{1/alpha}, and the log-periodic Levy tail
/// amplitudes M_R, M_L (None = identically zero, not both).
#[derive(Debug, Clone)]
pub struct SemistableSpec {
    alpha: f64,
    c: f64,
    m_right: Option<LogPeriodic>,
    m_left: Option<LogPeriodic>,
    shift: f64,
}

impl SemistableSpec {
    pub fn new(
        alpha: f64,
        c: f64,
        m_right: Option<LogPeriodic>,
        m_left: Option<LogPeriodic>,
        shift: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::Construction(format!(
                "alpha must lie in (0, 2), got {alpha}"
            )));
        }
        if !(c > 1.0 && c.is_finite()) {
            return Err(Error::Construction(format!("c must be > 1, got {c}")));
        }
        if m_right.is_none() && m_left.is_none() {
            return Err(Error::Construction(
                "M_R and M_L cannot both be zero".into(),
            ));
        }
        let r = c.powf(1.0 / alpha);
        for (name, m) in [("M_R", &m_right), ("M_L", &m_left)] {
            if let Some(p) = m {
                if (p.period() / r - 1.0).abs() > 1e-9 {
                    return Err(Error::Construction(format!(
                        "{name} has period {} but the spec requires r = c^(1/alpha) = {r}",
                        p.period()
                    )));
                }
                p.check_tail_monotone(alpha)?;
            }
        }
        Ok(Self {
            alpha,
            c,
            m_right,
            m_left,
            shift,
        })
    }

    /// One-sided spec (M_L = 0), the setting of the renewal theorems.
    pub fn one_sided(alpha: f64, c: f64, m_right: LogPeriodic) -> Result<Self> {
        Self::new(alpha, c, Some(m_right), None, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn r(&self) -> f64 {
        self.c.powf(1.0 / self.alpha)
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn m_right(&self) -> Option<&LogPeriodic> {
        self.m_right.as_ref()
    }

    pub fn m_left(&self) -> Option<&LogPeriodic> {
        self.m_left.as_ref()
    }

    /// Right Levy tail M_R(x) x^{-alpha} (0 if M_R = 0).
    pub fn levy_tail_right(&self, x: f64) -> f64 {
        match &self.m_right {
            Some(p) => p.value(x) * x.powf(-self.alpha),
            None => 0.0,
        }
    }

    /// A spec is nonstable when M_R or M_L is not constant.
    pub fn is_nonstable(&self) -> bool {
        let non_const = |m: &Option<LogPeriodic>| m.as_ref().map_or(false, |p| !p.is_constant());
        non_const(&self.m_right) || non_const(&self.m_left)
    }

    /// Grid guard over `points` geometrically spaced x spanning `periods`
    /// multiplicative periods: M_R(x) x^{-alpha} must be nonincreasing.
    pub fn check_monotone_grid(&self, points: usize, periods: u32) -> Result<()> {
        let r = self.r();
        let hi = r.powi(periods as i32);
        let mut prev = f64::INFINITY;
        for i in 0..points {
            let x = hi.powf(i as f64 / (points - 1) as f64);
            let v = self.levy_tail_right(x);
            if v > prev * (1.0 + 1e-10) {
                return Err(Error::Construction(format!(
                    "M_R(x) x^-alpha increases at grid point x = {x}"
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

/// Centering mode of a norming scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    Zero,
    QuantileIntegral,
}

/// Source of the truncated quantile integral used by the centering sequence.
pub trait QuantileIntegral {
    /// integral of Q(s) ds over (lo, hi), exact for step quantiles.
    fn quantile_integral(&self, lo: f64, hi: f64, rel_tol: f64) -> Result<f64>;
}

/// Subsequence k_n = floor(c^n), norming A_n = n^{1/alpha} ell1(n), tail
/// scale B(y) = y^alpha / ell(y), position parameter gamma and ratio delta.
#[derive(Debug, Clone)]
pub struct NormingScheme {
    alpha: f64,
    c: f64,
    ell1: SlowlyVarying,
    ell: SlowlyVarying,
    centering: Centering,
    ks: Vec<u64>,
    a_ks: Vec<f64>,
}

impl NormingScheme {
    pub fn new(alpha: f64, c: f64, ell1: SlowlyVarying, centering: Centering) -> Result<Self> {
        let ell = ell1.partner(alpha);
        Self::with_ell(alpha, c, ell1, ell, centering)
    }

    pub fn with_ell(
        alpha: f64,
        c: f64,
        ell1: SlowlyVarying,
        ell: SlowlyVarying,
        centering: Centering,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::Construction(format!(
                "alpha must lie in (0, 2), got {alpha}"
            )));
        }
        if !(c > 1.0 && c.is_finite()) {
            return Err(Error::Construction(format!("c must be > 1, got {c}")));
        }
        let mut scheme = Self {
            alpha,
            c,
            ell1,
            ell,
            centering,
            ks: Vec::new(),
            a_ks: Vec::new(),
        };
        scheme.build_subsequence();
        Ok(scheme)
    }

    /// k_n = floor(c^n), starting at the least n with k_n >= 2, deduplicated.
    /// The whole usable range is precomputed, so lookups are pure reads.
    fn build_subsequence(&mut self) {
        let mut n = 1i32;
        let mut last = 0u64;
        loop {
            let v = self.c.powi(n);
            if v > 4.0e18 {
                break;
            }
            let k = v.floor() as u64;
            if k >= 2 && k > last {
                self.ks.push(k);
                last = k;
            }
            n += 1;
            if n > 100_000 {
                break;
            }
        }
        self.a_ks = self
            .ks
            .iter()
            .map(|&k| self.norming_a(k as f64))
            .collect();
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn ell(&self) -> &SlowlyVarying {
        &self.ell
    }

    pub fn ell1(&self) -> &SlowlyVarying {
        &self.ell1
    }

    pub fn centering_mode(&self) -> Centering {
        self.centering
    }

    pub fn subsequence(&self) -> &[u64] {
        &self.ks
    }

    /// A_n = n^{1/alpha} ell1(n).
    pub fn norming_a(&self, n: f64) -> f64 {
        debug_assert!(n >= 1.0);
        n.powf(1.0 / self.alpha) * self.ell1.value(n)
    }

    /// B(y) = y^alpha / ell(y).
    pub fn norming_b(&self, y: f64) -> f64 {
        debug_assert!(y > 0.0);
        y.powf(self.alpha) / self.ell.value(y)
    }

    /// Position parameter gamma(x) = x / k_n for the unique k_{n-1} < x <= k_n.
    pub fn position_gamma(&self, x: f64) -> Result<f64> {
        let k0 = self.ks[0] as f64;
        if !(x >= k0) {
            return Err(Error::Domain(format!(
                "gamma(x) needs x >= k_1 = {k0}, got {x}"
            )));
        }
        let i = self.ks.partition_point(|&k| (k as f64) < x);
        if i >= self.ks.len() {
            return Err(Error::Domain(format!(
                "x = {x} beyond the precomputed subsequence range"
            )));
        }
        Ok(x / self.ks[i] as f64)
    }

    /// gamma extended below k_1 by the exact geometric continuation
    /// k_1 c^{-j}; the RHS integrals of the renewal theorems evaluate the
    /// position parameter at arbitrarily small arguments where the paper's
    /// definition is vacuous, and only the value modulo the period matters.
    pub fn gamma_extended(&self, x: f64) -> f64 {
        debug_assert!(x > 0.0);
        let k0 = self.ks[0] as f64;
        if x >= k0 {
            let i = self.ks.partition_point(|&k| (k as f64) < x);
            if i < self.ks.len() {
                return x / self.ks[i] as f64;
            }
            // Beyond the table: geometric continuation upward.
            let top = *self.ks.last().expect("non-empty") as f64;
            let j = (x / top).log(self.c).ceil().max(1.0);
            return x / (top * self.c.powf(j));
        }
        let j = (k0 / x).log(self.c).floor();
        x / (k0 * self.c.powf(-j))
    }

    /// Bracket boundaries b (stored k_n or geometric continuation) with
    /// v_lo < b <= v_hi; these are the kink positions of gamma.
    pub fn bracket_points(&self, v_lo: f64, v_hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let k0 = self.ks[0] as f64;
        if v_lo < k0 {
            let mut j = (k0 / v_lo.max(1e-300)).log(self.c).floor();
            if j < 0.0 {
                j = 0.0;
            }
            let mut b = k0 * self.c.powf(-j);
            while b <= v_hi {
                if b > v_lo && b < k0 {
                    out.push(b);
                }
                b *= self.c;
            }
        }
        for &k in &self.ks {
            let b = k as f64;
            if b > v_lo && b <= v_hi {
                out.push(b);
            }
            if b > v_hi {
                break;
            }
        }
        out
    }

    /// delta(x) = x / A_{k_n} for the unique A_{k_n} <= x < A_{k_{n+1}}.
    pub fn ratio_delta(&self, x: f64) -> Result<f64> {
        let a0 = self.a_ks[0];
        if !(x >= a0) {
            return Err(Error::Domain(format!(
                "delta(x) needs x >= A_k1 = {a0}, got {x}"
            )));
        }
        let i = self.a_ks.partition_point(|&a| a <= x);
        if i == 0 || i > self.a_ks.len() {
            return Err(Error::Domain(format!("x = {x} outside delta range")));
        }
        Ok(x / self.a_ks[i - 1])
    }

    /// C_n: zero, or n * integral of the quantile over (1/n, 1 - 1/n).
    pub fn centering_c<D: QuantileIntegral + ?Sized>(&self, dist: &D, n: u64) -> Result<f64> {
        match self.centering {
            Centering::Zero => Ok(0.0),
            Centering::QuantileIntegral => {
                let nf = n as f64;
                let q = dist.quantile_integral(1.0 / nf, 1.0 - 1.0 / nf, 1e-8)?;
                Ok(nf * q)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_1_to_2() -> LogPeriodic {
        // p linear from 1 at x=1 to 2 at x=2^-, period 2.
        LogPeriodic::table(2.0, vec![1.0], 2.0).unwrap()
    }

    #[test]
    fn log_periodic_eval_examples() {
        let c = LogPeriodic::constant(2.0, 1.0).unwrap();
        for &x in &[0.3, 1.0, 7.7, 1e9] {
            assert_eq!(c.eval(x).unwrap(), 1.0);
        }
        let p = linear_1_to_2();
        assert!((p.eval(4.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((p.eval(3.0).unwrap() - 1.5).abs() < 1e-12);
        assert!(p.eval(-1.0).is_err());
        assert!(p.eval(0.0).is_err());
    }

    #[test]
    fn log_periodic_exact_periodicity() {
        let p = LogPeriodic::from_log_fn(2.0f64.powf(4.0 / 3.0), 256, |u| {
            1.0 + 0.5 * if u < 0.5 { u } else { 1.0 - u }
        })
        .unwrap();
        for i in 0..200 {
            let x = 0.173 * 1.31f64.powi(i % 40) * (1.0 + i as f64);
            let a = p.value(x);
            let b = p.value(x * p.period());
            assert!((a - b).abs() < 1e-11, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn tail_monotone_check() {
        // Tent rising to ratio sqrt(r)^0.9alpha then back: passes for the
        // subcritical slope, fails when the rise is supercritical.
        let alpha = 0.75;
        let r: f64 = 2.0f64.powf(1.0 / alpha);
        let ok = LogPeriodic::from_log_fn(r, 128, |u| {
            r.powf(0.9 * alpha * 0.5 * (1.0 - (2.0 * u - 1.0).abs()))
        })
        .unwrap();
        assert!(ok.check_tail_monotone(alpha).is_ok());

        let bad = LogPeriodic::from_log_fn(r, 128, |u| {
            r.powf(1.8 * alpha * 0.5 * (1.0 - (2.0 * u - 1.0).abs()))
        });
        let bad = bad.unwrap();
        assert!(bad.check_tail_monotone(alpha).is_err());
    }

    #[test]
    fn slowly_varying_ratio_tends_to_one() {
        let l = SlowlyVarying::new(2.0, 1.5).unwrap();
        for &x in &[1e6, 1e9] {
            for &lam in &[0.5, 2.0, 10.0] {
                let ratio = l.value(lam * x) / l.value(x);
                assert!((ratio - 1.0).abs() < 0.35, "x={x} lam={lam}: {ratio}");
            }
        }
        // Tighter at larger x for every fixed lambda.
        for &lam in &[0.5, 2.0, 10.0] {
            let r1 = (l.value(lam * 1e6) / l.value(1e6) - 1.0).abs();
            let r2 = (l.value(lam * 1e9) / l.value(1e9) - 1.0).abs();
            assert!(r2 < r1, "lam={lam}");
        }
    }

    #[test]
    fn norming_a_examples() {
        let s = NormingScheme::new(0.5, 2.0, SlowlyVarying::one(), Centering::Zero).unwrap();
        assert!((s.norming_a(4.0) - 16.0).abs() < 1e-12);
        let s1 = NormingScheme::new(1.0, 2.0, SlowlyVarying::one(), Centering::Zero).unwrap();
        assert!((s1.norming_a(10.0) - 10.0).abs() < 1e-12);
        let s2 = NormingScheme::new(0.75, 2.0, SlowlyVarying::one(), Centering::Zero).unwrap();
        assert!((s2.norming_a(4096.0) - 65536.0).abs() < 1e-6);
    }

    #[test]
    fn norming_b_examples() {
        let s = NormingScheme::new(0.75, 2.0, SlowlyVarying::one(), Centering::Zero).unwrap();
        assert!((s.norming_b(16.0) - 8.0).abs() < 1e-12);
        let s1 = NormingScheme::new(1.0, 2.0, SlowlyVarying::one(), Centering::Zero).unwrap();
        assert!((s1.norming_b(7.0) - 7.0).abs() < 1e-12);
        // ell = ln: B(e^4) = e^3 / 4.
        let s2 = NormingScheme::with_ell(
            0.75,
            2.0,
            SlowlyVarying::one(),
            SlowlyVarying::new(1.0, 1.0).unwrap(),
            Centering::Zero,
        )
        .unwrap();
        let x = 4.0f64.exp();
        assert!((s2.norming_b(x) - 3.0f64.exp() / 4.0).abs() < 1e-9);
    }

    #[test]
    fn gamma_examples() {
        let s = NormingScheme::new(1.0, 2.0, SlowlyVarying::one(), Centering::Zero).unwrap();
        assert_eq!(s.subsequence()[0], 2);
        assert!((s.position_gamma(32.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((s.position_gamma(24.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(s.position_gamma(1.0).is_err());

        let s15 = NormingScheme::new(1.0, 1.5, SlowlyVarying::one(), Centering::Zero).unwrap();
        assert_eq!(&s15.subsequence()[..5], &[2, 3, 5, 7, 11]);
        assert!((s15.position_gamma(10.0).unwrap() - 10.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_is_right_boundary_exact_and_jumps_down() {
        let s = NormingScheme::new(0.75, 2.0, SlowlyVarying::one(), Centering::Zero).unwrap();
        for &k in &s.subsequence()[..10] {
            let g = s.position_gamma(k as f64).unwrap();
            assert_eq!(g, 1.0);
            let g_above = s.position_gamma(k as f64 * (1.0 + 1e-9)).unwrap();
            assert!(g_above < 0.75, "gamma just above k_n is near 1/c, got {g_above}");
        }
    }

    #[test]
    fn gamma_extended_agrees_and_continues() {
        let s = NormingScheme::new(0.75, 2.0, SlowlyVarying::one(), Centering::Zero).unwrap();
        for &x in &[3.0, 17.0, 999.0] {
            assert_eq!(s.gamma_extended(x), s.position_gamma(x).unwrap());
        }
        // Below k_1 = 2, pure geometric bracketing into (1/c, 1].
        for &x in &[1.7, 0.9, 0.141, 1e-3] {
            let g = s.gamma_extended(x);
            assert!(g > 0.5 - 1e-12 && g <= 1.0 + 1e-12, "x={x}: gamma={g}");
        }
        assert!((s.gamma_extended(2.0) - 1.0).abs() < 1e-15);
        assert!((s.gamma_extended(1.5) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn delta_examples() {
        let s = NormingScheme::new(1.0, 2.0, SlowlyVarying::one(), Centering::Zero).unwrap();
        assert!((s.ratio_delta(64.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((s.ratio_delta(96.0).unwrap() - 1.5).abs() < 1e-15);

        // alpha = 0.5, k_n = 2^n so A_{k_n} = 4^n; x = 96 sits in [64, 256).
        let s2 = NormingScheme::new(0.5, 2.0, SlowlyVarying::one(), Centering::Zero).unwrap();
        assert!((s2.ratio_delta(96.0).unwrap() - 1.5).abs() < 1e-12);
        assert!(s2.ratio_delta(1.0).is_err());
    }

    #[test]
    fn delta_times_a_reconstructs_x() {
        let s = NormingScheme::new(0.75, 2.0, SlowlyVarying::one(), Centering::Zero).unwrap();
        for i in 0..60 {
            let x = 7.3 * 1.618f64.powi(i);
            if x < s.norming_a(s.subsequence()[0] as f64) {
                continue;
            }
            let d = match s.ratio_delta(x) {
                Ok(d) => d,
                Err(_) => break,
            };
            let i_br = s
                .a_ks_for_test()
                .partition_point(|&a| a <= x);
            let a = s.a_ks_for_test()[i_br - 1];
            assert!((d * a / x - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn partner_gives_asymptotic_inverse() {
        // Exact for constants.
        let s = NormingScheme::new(0.6, 2.0, SlowlyVarying::new(3.0, 0.0).unwrap(), Centering::Zero)
            .unwrap();
        for &n in &[1e3, 1e6, 1e9] {
            let ratio = s.norming_b(s.norming_a(n)) / n;
            assert!((ratio - 1.0).abs() < 1e-10, "n={n}: {ratio}");
        }
        // For log factors the composition converges slowly; check the trend.
        let sl =
            NormingScheme::new(0.75, 2.0, SlowlyVarying::new(1.0, 1.0).unwrap(), Centering::Zero)
                .unwrap();
        let dev = |n: f64| (sl.norming_b(sl.norming_a(n)) / n - 1.0).abs();
        assert!(dev(1e9) < dev(1e3));
        assert!(dev(1e12) < 0.25);
    }

    impl NormingScheme {
        fn a_ks_for_test(&self) -> &[f64] {
            &self.a_ks
        }
    }
}
