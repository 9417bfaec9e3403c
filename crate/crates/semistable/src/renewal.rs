//! Exact renewal sequences and renewal functions, with the residuals against
//! the strong renewal theorem, the alpha = 1 limit, the renewal-function
//! asymptotics, the nonarithmetic window representation, and the irrational
//! rotation averages behind it.

use num_complex::Complex64;
use serde::Serialize;

use crate::charfn::{phi_exact, w_value};
use crate::density::{renewal_rhs_integral, srt_rhs_integral, DensityEvaluator};
use crate::dists::{truncated_mean_lattice, LatticeDist};
use crate::error::{Error, Result};
use crate::fftconv::Convolver;
use crate::model::NormingScheme;
use crate::quad::{adaptive, adaptive_real};
use crate::special::Kahan;
use crate::spline::ComplexSpline;

const PI: f64 = std::f64::consts::PI;

/// Construction method of a renewal table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RenewalMethod {
    DirectRecursion,
    SeriesReciprocal,
}

/// u_0..u_N with the cumulative renewal function on the lattice.
pub struct RenewalTable {
    u: Vec<f64>,
    cum: Vec<f64>,
    method: RenewalMethod,
}

impl RenewalTable {
    /// Exact renewal masses u_n = sum_k f_k u_{n-k}: direct O(N^2) recursion
    /// up to N = 1e5, Newton series reciprocal above.
    pub fn build(d: &LatticeDist, n_max: usize) -> Result<Self> {
        let method = if n_max <= 100_000 {
            RenewalMethod::DirectRecursion
        } else {
            RenewalMethod::SeriesReciprocal
        };
        Self::build_with(d, n_max, method)
    }

    pub fn build_with(d: &LatticeDist, n_max: usize, method: RenewalMethod) -> Result<Self> {
        if !d.is_arithmetic() {
            return Err(Error::Precondition(
                "renewal sequences need an arithmetic lattice law".into(),
            ));
        }
        let f = d.pmf_vec(n_max + 1);
        let u = match method {
            RenewalMethod::DirectRecursion => {
                let mut u = vec![0.0f64; n_max + 1];
                u[0] = 1.0;
                for n in 1..=n_max {
                    let mut acc = 0.0;
                    for k in d.support_start() as usize..=n {
                        acc += f[k] * u[n - k];
                    }
                    u[n] = acc;
                }
                u
            }
            RenewalMethod::SeriesReciprocal => {
                let mut dcoef = vec![0.0f64; n_max + 1];
                dcoef[0] = 1.0;
                for (k, &fk) in f.iter().enumerate().skip(1) {
                    dcoef[k] = -fk;
                }
                let mut conv = Convolver::new();
                let mut u = conv.series_reciprocal(&dcoef, n_max + 1);
                // Spot-check the defining recursion on ~100 indices.
                let step = (n_max / 100).max(1);
                for i in 1..=100 {
                    let n = (i * step).min(n_max);
                    let mut acc = 0.0;
                    for k in d.support_start() as usize..=n {
                        acc += f[k] * u[n - k];
                    }
                    if (acc - u[n]).abs() > 1e-9 {
                        return Err(Error::Numeric(format!(
                            "series reciprocal fails the renewal recursion at n = {n}: {} vs {acc}",
                            u[n]
                        )));
                    }
                }
                for v in u.iter_mut() {
                    if *v < 0.0 && *v > -1e-9 {
                        *v = 0.0;
                    }
                }
                u
            }
        };
        let mut cum = Vec::with_capacity(u.len());
        let mut acc = Kahan::new();
        for &v in &u {
            acc.add(v);
            cum.push(acc.value());
        }
        Ok(Self { u, cum, method })
    }

    pub fn method(&self) -> RenewalMethod {
        self.method
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u(&self, n: usize) -> f64 {
        self.u[n]
    }

    pub fn masses(&self) -> &[f64] {
        &self.u
    }

    /// U(y) = sum_{m <= y} u_m.
    pub fn big_u(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        let i = (y.floor() as usize).min(self.cum.len() - 1);
        self.cum[i]
    }
}

/// Residual of Thm-type SRT normalization: n^{1-alpha} ell(n) u_n - RHS(n).
#[derive(Debug, Clone, Serialize)]
pub struct SrtResidual {
    pub n: u64,
    pub scaled_u: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// residual(n) = n^{1-alpha} ell(n) u_n - alpha int g_{gamma(B(n)x^-a)} x^-a dx.
pub fn srt_residuals(
    table: &RenewalTable,
    e: &DensityEvaluator,
    scheme: &NormingScheme,
    n_list: &[u64],
) -> Result<Vec<SrtResidual>> {
    let alpha = scheme.alpha();
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n as usize >= table.len() {
            return Err(Error::Domain(format!(
                "n = {n} beyond the renewal table length {}",
                table.len()
            )));
        }
        let nf = n as f64;
        let scaled_u = nf.powf(1.0 - alpha) * scheme.ell().value(nf) * table.u(n as usize);
        let rhs = srt_rhs_integral(e, scheme, nf)?;
        out.push(SrtResidual {
            n,
            scaled_u,
            rhs,
            residual: scaled_u - rhs,
        });
    }
    Ok(out)
}

/// Interpolated-RHS sign scan: checks residual(n) >= floor for every n in
/// [n_lo, n_hi], with the RHS evaluated on a log grid (`per_period` nodes per
/// multiplicative period) and cubic-interpolated between; u_n is exact.
pub fn srt_liminf_scan(
    table: &RenewalTable,
    e: &DensityEvaluator,
    scheme: &NormingScheme,
    n_lo: u64,
    n_hi: u64,
    per_period: usize,
    floor: f64,
) -> Result<(f64, u64, usize)> {
    let alpha = scheme.alpha();
    let r = scheme.c().powf(1.0 / alpha);
    let periods = ((n_hi as f64 / n_lo as f64).ln() / r.ln()).ceil();
    let nodes = ((periods * per_period as f64).ceil() as usize).max(8) + 1;
    let mut ln_ns = Vec::with_capacity(nodes);
    let mut rhs_vals = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let nf = n_lo as f64 * (n_hi as f64 / n_lo as f64).powf(i as f64 / (nodes - 1) as f64);
        ln_ns.push(nf.ln());
        rhs_vals.push(srt_rhs_integral(e, scheme, nf)?);
    }
    let rhs_spline = crate::spline::CubicSpline::natural(ln_ns, rhs_vals);

    let mut worst = f64::INFINITY;
    let mut worst_n = n_lo;
    let mut violations = 0usize;
    for n in n_lo..=n_hi {
        let nf = n as f64;
        let scaled_u = nf.powf(1.0 - alpha) * scheme.ell().value(nf) * table.u(n as usize);
        let resid = scaled_u - rhs_spline.eval(nf.ln());
        if resid < worst {
            worst = resid;
            worst_n = n;
        }
        if resid < floor {
            violations += 1;
        }
    }
    Ok((worst, worst_n, violations))
}

/// Residual of the renewal function normalization:
/// y^{-alpha} ell(y) U(y) - alpha int G_{gamma(B(y)x^-a)} x^{-a-1} dx.
#[derive(Debug, Clone, Serialize)]
pub struct RenewalFnResidual {
    pub y: f64,
    pub scaled_u: f64,
    pub rhs: f64,
    pub residual: f64,
}

pub fn renewal_function_residuals(
    table: &RenewalTable,
    e: &DensityEvaluator,
    scheme: &NormingScheme,
    y_list: &[f64],
) -> Result<Vec<RenewalFnResidual>> {
    let alpha = scheme.alpha();
    let mut out = Vec::with_capacity(y_list.len());
    for &y in y_list {
        if y >= table.len() as f64 {
            return Err(Error::Domain(format!(
                "y = {y} beyond the renewal table length {}",
                table.len()
            )));
        }
        let scaled_u = y.powf(-alpha) * scheme.ell().value(y) * table.big_u(y);
        let rhs = renewal_rhs_integral(e, scheme, y)?;
        out.push(RenewalFnResidual {
            y,
            scaled_u,
            rhs,
            residual: scaled_u - rhs,
        });
    }
    Ok(out)
}

/// L(n) u_n for the alpha = 1 infinite-mean SRT (limit 1), with an explicit
/// finite-mean guard.
pub fn srt_a1_values(d: &LatticeDist, table: &RenewalTable, n_list: &[u64]) -> Result<Vec<(u64, f64)>> {
    // L must grow without bound: probe a geometric grid.
    let l6 = truncated_mean_lattice(d, 1e6)?;
    let l12 = truncated_mean_lattice(d, 1e12)?;
    if l12 < l6 * 1.5 {
        return Err(Error::Precondition(format!(
            "truncated mean looks bounded (L(1e6) = {l6:.4}, L(1e12) = {l12:.4}); alpha = 1 SRT needs infinite mean"
        )));
    }
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let l = truncated_mean_lattice(d, n as f64)?;
        out.push((n, l * table.u(n as usize)));
    }
    Ok(out)
}

/// int_{t_min}^{1/x} W(t) dt * L(x) * 2/pi, which tends to 1 (the slow
/// variation of the W-integral). The lower cutoff leaves a deficit of order
/// L(x)/L(1/t_min), reported alongside.
pub fn w_integral_check(d: &LatticeDist, x: f64, t_min: f64) -> Result<(f64, f64)> {
    let hi = 1.0 / x;
    if !(t_min < hi) {
        return Err(Error::Domain("need t_min < 1/x".into()));
    }
    // Integrate W over [t_min, 1/x] in logarithmic coordinates.
    let f = |u: f64| {
        let t = u.exp();
        w_value(d, t, 1e-6 * t.max(1e-30)).map(|w| w * t).unwrap_or(f64::NAN)
    };
    let (val, _) = adaptive_real(&f, t_min.ln(), hi.ln(), 0.0, 1e-6, &[], 40_000)?;
    let l = truncated_mean_lattice(d, x)?;
    let deficit = l / truncated_mean_lattice(d, 1.0 / t_min)?;
    Ok((val * l * 2.0 / PI, deficit))
}

/// U(y+h) - U(y-h) for a nonarithmetic lattice law (irrational offset a),
/// computed from the exact window representation
/// sum_k I_{k,y} P(S̃_k = <y - k a>).
pub fn nonarithmetic_window_mass(
    d: &LatticeDist,
    y: f64,
    h: f64,
    k_max: usize,
    pmf_cut: usize,
) -> Result<f64> {
    if !(h > 0.0 && h < 0.5) {
        return Err(Error::Domain(format!("h must lie in (0, 1/2), got {h}")));
    }
    let a = d.offset();
    if a == 0.0 {
        return Err(Error::Precondition(
            "window masses are for nonarithmetic lattice laws (offset != 0)".into(),
        ));
    }
    let f = d.pmf_vec(pmf_cut);
    let mut conv = Convolver::new();
    let fhat_len = (2 * pmf_cut).next_power_of_two();
    let fhat = conv.forward(&f, fhat_len);

    // The integer in (v-h, v+h] is round(v) when v - round(v) in [-h, h).
    let window_term = |v: f64, p: &[f64]| -> f64 {
        let m = v.round();
        if v - m >= -h && v - m < h && m >= 0.0 && (m as usize) < p.len() {
            p[m as usize]
        } else {
            0.0
        }
    };

    // k = 0: S̃_0 = 0 exactly.
    let mut p0 = vec![0.0f64; 2];
    p0[0] = 1.0;
    let mut total = Kahan::new();
    total.add(window_term(y, &p0));

    // p_k = pmf of S̃_k, advanced by FFT convolution with the fixed kernel.
    let mut p = vec![0.0f64; pmf_cut];
    p[0] = 1.0;
    for k in 1..=k_max {
        let mut ph = conv.forward(&p, fhat_len);
        for (x, y) in ph.iter_mut().zip(fhat.iter()) {
            *x *= y;
        }
        p = conv.inverse_re(ph, pmf_cut);
        let v = y - k as f64 * a;
        if v < -h {
            break;
        }
        // The support starts at k * k0; beyond the window the terms vanish.
        if (k as f64) * d.support_start() as f64 > v + h + 1.0 {
            break;
        }
        total.add(window_term(v, &p));
    }
    Ok(total.value())
}

/// sup over window starts m and points y of |N^{-1} sum I_{k,y} - 2h| for
/// the rotation by -a; the unique-ergodicity average behind the
/// nonarithmetic SRT.
pub fn rotation_average_deviation(
    a: f64,
    h: f64,
    n: usize,
    m_starts: &[usize],
    y_grid: &[f64],
) -> f64 {
    let mut worst = 0.0f64;
    for &m in m_starts {
        for &y in y_grid {
            let mut count = 0usize;
            for k in (m + 1)..=(m + n) {
                let w = (y - k as f64 * a).rem_euclid(1.0);
                if w < h || w >= 1.0 - h {
                    count += 1;
                }
            }
            worst = worst.max((count as f64 / n as f64 - 2.0 * h).abs());
        }
    }
    worst
}

/// u_n by the inversion formula (1/pi) Re int_0^pi (1 - phi(t))^{-1} e^{-int} dt
/// at several n: the integrable blowup at t = 0 is handled by graded panels
/// with direct phi evaluations (relative accuracy), while t >= 0.05 rides a
/// spline of phi built once.
pub fn u_by_inversion_many(d: &LatticeDist, ns: &[u64], tol: f64) -> Result<Vec<f64>> {
    let t_mid = 0.05;
    let nodes = 4000;
    let mut xs = Vec::with_capacity(nodes);
    let mut ys = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let t = t_mid * (PI / t_mid).powf(i as f64 / (nodes - 1) as f64);
        xs.push(t.ln());
        ys.push(phi_exact(d, t, 1e-9)?.value);
    }
    let mid = ComplexSpline::natural(xs, &ys);

    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        let nf = n as f64;
        // Head: graded panels down to where the nu_2-type bound certifies the
        // remaining mass of |1 - phi|^{-1} is negligible.
        let head_f = |t: f64| -> Complex64 {
            if t <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let phi = match phi_exact(d, t, 1e-12f64.max(1e-4 * t)) {
                Ok(v) => v.value,
                Err(_) => return Complex64::new(f64::NAN, f64::NAN),
            };
            Complex64::from_polar(1.0, -nf * t) / (Complex64::new(1.0, 0.0) - phi)
        };
        let edges: Vec<f64> = (0..=96)
            .map(|i| t_mid * 1e-28f64.powf(1.0 - i as f64 / 96.0))
            .collect();
        let (head, _) = adaptive(&head_f, 0.0, t_mid, tol * 0.4, 1e-9, &edges, 60_000)?;

        let tail_f = |t: f64| -> Complex64 {
            let phi = mid.eval(t.ln());
            Complex64::from_polar(1.0, -nf * t) / (Complex64::new(1.0, 0.0) - phi)
        };
        let panels = ((4.0 * nf) as usize).clamp(4_000, 400_000);
        let (tail, _) = adaptive(&tail_f, t_mid, PI, tol * 0.4, 1e-9, &[], panels)?;
        out.push((head + tail).re / PI);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::{counterexample_dist, LatticeTail};
    use crate::dists::GOLDEN_OFFSET;

    #[test]
    fn degenerate_and_geometric_renewal() {
        let one = LatticeDist::new(LatticeTail::Degenerate { at: 1 }, 0.0).unwrap();
        let t = RenewalTable::build(&one, 500).unwrap();
        assert_eq!(t.u(0), 1.0);
        for n in 1..=500 {
            assert!((t.u(n) - 1.0).abs() < 1e-12);
        }

        let geo = LatticeDist::new(LatticeTail::Geometric { p: 0.37 }, 0.0).unwrap();
        let t = RenewalTable::build(&geo, 2000).unwrap();
        for n in 1..=2000 {
            assert!((t.u(n) - 0.37).abs() < 1e-11, "u_{n} = {}", t.u(n));
        }
    }

    #[test]
    fn methods_agree_on_overlap() {
        let ce = counterexample_dist();
        let a = RenewalTable::build_with(&ce, 10_000, RenewalMethod::DirectRecursion).unwrap();
        let b = RenewalTable::build_with(&ce, 10_000, RenewalMethod::SeriesReciprocal).unwrap();
        for n in 0..=10_000 {
            assert!(
                (a.u(n) - b.u(n)).abs() < 1e-10,
                "n={n}: {} vs {}",
                a.u(n),
                b.u(n)
            );
        }
    }

    #[test]
    fn renewal_masses_in_range_and_eventually_positive() {
        let ce = counterexample_dist();
        let t = RenewalTable::build(&ce, 5_000).unwrap();
        let mut n0 = None;
        for n in 0..=5_000usize {
            let u = t.u(n);
            assert!((0.0..=1.0 + 1e-12).contains(&u), "u_{n} = {u}");
            if n0.is_none() && u > 0.0 && n > 0 {
                n0 = Some(n);
            }
        }
        // Aperiodic support: positive from some point on.
        let start = 2_000;
        for n in start..=5_000 {
            assert!(t.u(n) > 0.0, "u_{n} vanished");
        }
    }

    #[test]
    fn inversion_crosscheck_semistable_and_geometric() {
        use crate::dists::make_semistable_lattice;
        use crate::model::{LogPeriodic, SemistableSpec, SlowlyVarying};
        let alpha = 0.75;
        let r = 2.0f64.powf(1.0 / alpha);
        let h = 1.0 + 0.9 * (LogPeriodic::tent_height_limit(alpha, r) - 1.0);
        let spec = SemistableSpec::one_sided(alpha, 2.0, LogPeriodic::tent(r, h).unwrap()).unwrap();
        let d = make_semistable_lattice(&spec, SlowlyVarying::one(), 1.0).unwrap();
        let table = RenewalTable::build(&d, 1_100).unwrap();
        let ns = [17u64, 93, 341, 767, 1023];
        let inv = u_by_inversion_many(&d, &ns, 1e-7).unwrap();
        for (&n, &v) in ns.iter().zip(inv.iter()) {
            assert!(
                (v - table.u(n as usize)).abs() < 1e-6,
                "n={n}: inversion {v} vs recursion {}",
                table.u(n as usize)
            );
        }
        let geo = LatticeDist::new(LatticeTail::Geometric { p: 0.37 }, 0.0).unwrap();
        let inv = u_by_inversion_many(&geo, &[11, 200], 1e-8).unwrap();
        for v in inv {
            assert!((v - 0.37).abs() < 1e-7, "{v}");
        }
    }

    #[test]
    fn rotation_average_examples() {
        let m_starts: Vec<usize> = (0..16).map(|i| i * 613).collect();
        let y_grid: Vec<f64> = (0..16).map(|i| i as f64 / 16.3).collect();
        let dev = rotation_average_deviation(GOLDEN_OFFSET, 0.25, 10_000, &m_starts, &y_grid);
        assert!(dev < 0.01, "golden rotation deviation {dev}");

        // N = 1: the single indicator is 0 or 1.
        let dev1 = rotation_average_deviation(GOLDEN_OFFSET, 0.25, 1, &m_starts, &y_grid);
        assert!((dev1 - 0.5).abs() < 1e-12);

        // Rational rotation: adversarial y keeps the window empty.
        let dev_rat = rotation_average_deviation(0.5, 0.2, 10_000, &[0], &[0.35]);
        assert!(dev_rat > 0.39, "rational rotation fails to equidistribute: {dev_rat}");
    }

    #[test]
    fn degenerate_window_mass_matches_enumeration() {
        // X = 1 + a: S_k = k (1 + a); the window (y-h, y+h] catches S_k iff
        // y - k(1+a) in [-h, h).
        let a = GOLDEN_OFFSET;
        let d = LatticeDist::new(LatticeTail::Degenerate { at: 1 }, a).unwrap();
        let y = 100.0;
        let h = 0.3;
        let got = nonarithmetic_window_mass(&d, y, h, 200, 256).unwrap();
        let mut want = 0.0;
        for k in 0..=200 {
            let v = y - k as f64 * (1.0 + a);
            if v >= -h && v < h {
                want += 1.0;
            }
        }
        assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
    }
}
