//! Exact characteristic functions of the constructed lattice laws, the
//! characteristic exponents of the semistable limits, and the small-t
//! asymptotic amplitudes.
//!
//! phi(t) is evaluated through the tail-sum identity
//! phi = 1 - (1 - e^{it}) T(t), T(t) = sum_k F̄(k) e^{itk}, choosing between
//! three routes: closed-form geometric-run summation (piecewise-constant
//! tails), half-period block summation with series acceleration (moderate t),
//! and an exact head plus an integrated-by-parts continuum tail (small t).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dists::{truncated_mean_lattice, LatticeDist, LatticeTail, PowerTail};
use crate::error::{Error, Result};
use crate::model::{LogPeriodic, SemistableSpec, SlowlyVarying};
use crate::quad::{adaptive, fourier_improper, SeriesAccel};
use crate::special::Kahan;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const PI: f64 = std::f64::consts::PI;

/// Evaluation route taken for a characteristic-function value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhiMethod {
    ExactSum,
    LevyIntegral,
    Asymptotic,
}

/// A single phi(t) evaluation with its error bound.
#[derive(Debug, Clone, Copy)]
pub struct CharFnValue {
    pub t: f64,
    pub value: Complex64,
    pub method: PhiMethod,
    pub abs_error: f64,
}

/// E e^{itX} for a lattice law X = a + X̃, to absolute accuracy `tol`.
pub fn phi_exact(d: &LatticeDist, t: f64, tol: f64) -> Result<CharFnValue> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tol must be > 0, got {tol}")));
    }
    let (value, err) = phi_integer_part(d, t, tol)?;
    let value = if d.offset() != 0.0 {
        Complex64::from_polar(1.0, t * d.offset()) * value
    } else {
        value
    };
    Ok(CharFnValue {
        t,
        value,
        method: PhiMethod::ExactSum,
        abs_error: err,
    })
}

/// phi of the integer part (2 pi periodic, conjugate-symmetric).
fn phi_integer_part(d: &LatticeDist, t: f64, tol: f64) -> Result<(Complex64, f64)> {
    let mut tr = t % TWO_PI;
    if tr > PI {
        tr -= TWO_PI;
    } else if tr < -PI {
        tr += TWO_PI;
    }
    if tr == 0.0 {
        return Ok((Complex64::new(1.0, 0.0), 0.0));
    }
    let conj = tr < 0.0;
    let tr = tr.abs();

    let (v, e) = match d.tail_kind() {
        LatticeTail::Degenerate { at } => {
            let phase = (t % TWO_PI) * (*at as f64) % TWO_PI;
            (Complex64::from_polar(1.0, phase), 0.0)
        }
        LatticeTail::Geometric { p } => {
            let z = Complex64::from_polar(1.0, tr);
            let q = 1.0 - p;
            (p * z / (Complex64::new(1.0, 0.0) - q * z), 1e-15)
        }
        _ => {
            let tsum = tail_transform(d, tr, tol)?;
            let one_minus_z = one_minus_cis(tr);
            let phi = Complex64::new(1.0, 0.0) - one_minus_z * tsum.0;
            (phi, tsum.1 * one_minus_z.norm())
        }
    };
    Ok(if conj { (v.conj(), e) } else { (v, e) })
}

/// T(t) = sum_{k>=0} F̄(k) e^{itk} for t in (0, pi], with an absolute error
/// bound on T.
fn tail_transform(d: &LatticeDist, t: f64, tol: f64) -> Result<(Complex64, f64)> {
    let tol_t = tol / one_minus_cis(t).norm();
    if let Some(runs) = d.tail_runs(run_horizon(t, tol_t)) {
        return tail_transform_runs(&runs, t, tol_t);
    }
    if let Some(pt) = d.power_tail() {
        tail_transform_ibp(d, &pt, t, tol_t)
    } else if t >= 0.04 {
        // Pure discrete route: triple Abel summation, any smooth-ish tail.
        tail_transform_abel(d, t, tol_t)
    } else if t >= 1e-3 {
        tail_transform_blocks(d, t, tol_t)
    } else {
        Err(Error::Numeric(format!(
            "no small-t evaluation route for this tail at t = {t:.3e}"
        )))
    }
}

fn run_horizon(t: f64, tol_t: f64) -> f64 {
    // Beyond k with F̄(k) * 2/|1-z| < tol the run contributions are dropped.
    let osc = 2.0 / one_minus_cis(t).norm();
    (osc / tol_t.max(1e-300)).min(1e290) * 4.0
}

#[inline]
fn one_minus_cis(t: f64) -> Complex64 {
    // 1 - e^{it} computed without cancellation: 2 sin^2(t/2) - i sin t.
    let s = (0.5 * t).sin();
    Complex64::new(2.0 * s * s, -t.sin())
}

/// Closed-form summation over piecewise-constant runs:
/// sum over runs of v_j * z^{a_j} (z^{len_j} - 1)/(z - 1).
fn tail_transform_runs(runs: &[(f64, f64)], t: f64, tol_t: f64) -> Result<(Complex64, f64)> {
    let zm1 = -one_minus_cis(t);
    let mut acc = Complex64::new(0.0, 0.0);
    let osc_bound = 2.0 / zm1.norm();
    let mut dropped = 0.0;
    for (j, &(start, v)) in runs.iter().enumerate() {
        let end = runs.get(j + 1).map(|r| r.0);
        if v * osc_bound < tol_t * 0.1 && v < 0.5 {
            dropped = v * osc_bound;
            break;
        }
        let phase_a = (t * start) % TWO_PI;
        let za = Complex64::from_polar(1.0, phase_a);
        let seg = match end {
            Some(e) => {
                let len = e - start;
                // (z^{len} - 1)/(z - 1), stable for small t*len.
                let num = -one_minus_cis((t * len) % TWO_PI);
                za * num / zm1
            }
            None => {
                // Geometric tail of the final run: sum_{k>=start} z^k would
                // not converge on |z|=1; runs always extend past the horizon
                // where v * osc_bound < tol, so treat as dropped.
                dropped = dropped.max(v * osc_bound);
                break;
            }
        };
        acc += v * seg;
    }
    Ok((acc, dropped + acc.norm() * 1e-14))
}

/// Block summation: groups of round(pi/t) consecutive terms alternate in
/// phase and are accelerated. Two accelerators with different warmups guard
/// against the extrapolation locking onto one log-period's local pattern.
fn tail_transform_blocks(d: &LatticeDist, t: f64, tol_t: f64) -> Result<(Complex64, f64)> {
    let len = ((PI / t).round() as u64).max(1);
    let z = Complex64::from_polar(1.0, t);
    let mut w = Complex64::new(1.0, 0.0);
    let mut k = 0u64;
    let mut partial_re = Kahan::new();
    let mut partial_im = Kahan::new();
    let mut accel_a = SeriesAccel::new();
    let mut accel_b = SeriesAccel::new();
    let mut est_a: Vec<Complex64> = Vec::new();
    let mut est_b = Complex64::new(0.0, 0.0);
    const WARM_A: usize = 8;
    const WARM_B: usize = 23;
    const MAX_BLOCKS: usize = 3000;

    for blk in 0..MAX_BLOCKS {
        for _ in 0..len {
            let f = d.tail_int(k);
            partial_re.add(f * w.re);
            partial_im.add(f * w.im);
            k += 1;
            w *= z;
        }
        // Keep the rotation on the unit circle.
        w /= w.norm();
        let partial = Complex64::new(partial_re.value(), partial_im.value());
        if blk >= WARM_A {
            let e = accel_a.push(partial);
            est_a.push(e);
        }
        if blk >= WARM_B {
            est_b = accel_b.push(partial);
            let n = est_a.len();
            let e1 = (est_a[n - 1] - est_a[n - 2]).norm();
            let e2 = (est_a[n - 2] - est_a[n - 3]).norm();
            let cross = (est_a[n - 1] - est_b).norm();
            if e1 < 0.5 * tol_t && e2 < 0.5 * tol_t && cross < tol_t {
                return Ok((est_a[n - 1], e1.max(e2).max(cross)));
            }
        }
    }
    Err(Error::Numeric(format!(
        "block summation of the characteristic function stalled at t = {t:.3e} (tol {tol_t:.1e})"
    )))
}

/// Exact head to N0 plus a midpoint-shifted continuum tail evaluated by
/// exact repeated integration by parts on the piecewise-power closure.
///
/// The per-cell identity
/// sum_{k>=N0} F̄(k) z^k = (it/(z-1)) int_{N0}^inf F̄(floor u) e^{itu} du
/// is exact; replacing the step tail by the closure at cell midpoints,
/// F̄(floor u) -> F̄_c(u - 1/2), leaves Euler-Maclaurin remainders of order
/// t^2 F̄_c /12. The remaining integral over [a, inf), a = N0 - 1/2, is
/// integrated by parts three times; slope jumps at the segment boundaries
/// enter as explicit geometric sums and the residual third-derivative
/// integral converges absolutely.
fn tail_transform_ibp(
    d: &LatticeDist,
    pt: &PowerTail,
    t: f64,
    tol_t: f64,
) -> Result<(Complex64, f64)> {
    let omz_c = one_minus_cis(t);
    let omz = omz_c.norm();
    let tol_abs = tol_t * omz;

    // Midpoint Euler-Maclaurin remainder: coherent bound F̄_c(N), or the
    // segment-wise Dirichlet bound 6 |F̄_c'(N)| / |1-z| once oscillation
    // cancels within segments.
    let em_bound = |n: f64| {
        let coherent = pt.value(n);
        let dirichlet = 6.0 * pt.deriv(n, 1).abs() / omz;
        t * t / 12.0 * coherent.min(dirichlet) + t * pt.deriv(n, 1).abs() / 24.0
    };
    let mut n0 = 4096u64.max(d.support_start() * 64);
    while em_bound(n0 as f64) > 0.25 * tol_abs && n0 < (1 << 23) {
        n0 *= 2;
    }
    tail_transform_ibp_with_n0(d, pt, t, tol_abs, n0)
}

fn tail_transform_ibp_with_n0(
    d: &LatticeDist,
    pt: &PowerTail,
    t: f64,
    tol_abs: f64,
    n0: u64,
) -> Result<(Complex64, f64)> {
    let omz_c = one_minus_cis(t);
    let omz = omz_c.norm();
    let em_bound = |n: f64| {
        let coherent = pt.value(n);
        let dirichlet = 6.0 * pt.deriv(n, 1).abs() / omz;
        t * t / 12.0 * coherent.min(dirichlet) + t * pt.deriv(n, 1).abs() / 24.0
    };

    let z = Complex64::from_polar(1.0, t);
    let mut w = Complex64::new(1.0, 0.0);
    let mut head_re = Kahan::new();
    let mut head_im = Kahan::new();
    for k in 0..n0 {
        let f = d.tail_int(k);
        head_re.add(f * w.re);
        head_im.add(f * w.im);
        w *= z;
        if k % 65_536 == 65_535 {
            w /= w.norm();
        }
    }
    let head = Complex64::new(head_re.value(), head_im.value());

    let a = n0 as f64 - 0.5;
    let it = Complex64::new(0.0, t);
    let it2 = it * it;
    let it3 = it2 * it;
    let e_a = Complex64::from_polar(1.0, (t * a) % TWO_PI);

    // Jump sums over the segment boundaries.
    let mut j1 = Complex64::new(0.0, 0.0);
    let mut j2 = Complex64::new(0.0, 0.0);
    let mut kink_rem_phi = 0.0;
    let mut kinks_done = false;
    for (x, d1, d2, _) in pt.kinks_from(a) {
        let scale_now = d1.abs() / t + d2.abs() / (t * t);
        if scale_now < 0.02 * tol_abs && x > 2.0 * a {
            kink_rem_phi = 4.0 * scale_now;
            kinks_done = true;
            break;
        }
        let e = Complex64::from_polar(1.0, (t * x) % TWO_PI);
        j1 += d1 * e;
        j2 += d2 * e;
    }
    if !kinks_done {
        kink_rem_phi = 0.0; // iterator exhausted: all jumps included
    }

    // Residual third-derivative integral, truncated where its absolute
    // remainder (bounded by 4 |F̄_c''(X)|) is negligible at the phi level.
    let mut x_cut = 4.0 * a;
    while 4.0 * pt.deriv(x_cut, 2).abs() / (t * t) > 0.2 * tol_abs && x_cut < 1e12 {
        x_cut *= 2.0;
    }
    let mut edges: Vec<f64> = crate::quad::geometric_edges(a, x_cut, 4);
    for (x, ..) in pt.kinks_from(a) {
        if x >= x_cut {
            break;
        }
        edges.push(x);
    }
    let integrand = |v: f64| pt.deriv(v, 3) * Complex64::from_polar(1.0, (t * v) % TWO_PI);
    let max_panels = ((t * (x_cut - a) / 2.0) as usize).clamp(4_000, 400_000);
    let (i3, i3_err) = adaptive(
        &integrand,
        a,
        x_cut,
        0.2 * tol_abs * t * t,
        1e-13,
        &edges,
        max_panels,
    )?;
    let i3_rem_phi = 4.0 * pt.deriv(x_cut, 2).abs() / (t * t) + i3_err / (t * t);

    // I = int_a^inf F̄_c(v) e^{itv} dv by three integrations by parts.
    let i_total = -pt.value(a) * e_a / it + (pt.deriv(a, 1) * e_a + j1) / it2
        - (pt.deriv(a, 2) * e_a + j2) / it3
        - i3 / it3;
    let tail = it / (z - Complex64::new(1.0, 0.0))
        * Complex64::from_polar(1.0, 0.5 * t)
        * i_total;

    let err_phi = em_bound(a) + kink_rem_phi + i3_rem_phi;
    Ok((head + tail, err_phi / omz + head.norm() * 1e-15))
}

/// Triple Abel-summed discrete tail: exact for any integer tail, with the
/// final absolutely-convergent third-difference series summed directly.
fn tail_transform_abel(d: &LatticeDist, t: f64, tol_t: f64) -> Result<(Complex64, f64)> {
    let z = Complex64::from_polar(1.0, t);
    let omz_c = one_minus_cis(t);
    let omz3 = omz_c * omz_c * omz_c;

    let n0 = 4096u64.max(d.support_start() * 8);
    let mut w = Complex64::new(1.0, 0.0);
    let mut head_re = Kahan::new();
    let mut head_im = Kahan::new();
    for k in 0..n0 {
        let f = d.tail_int(k);
        head_re.add(f * w.re);
        head_im.add(f * w.im);
        w *= z;
        if k % 65_536 == 65_535 {
            w /= w.norm();
        }
    }
    let head = Complex64::new(head_re.value(), head_im.value());

    let f0 = d.tail_int(n0);
    let f1 = d.tail_int(n0 + 1);
    let f2 = d.tail_int(n0 + 2);
    let d1n = f1 - f0;
    let d2n = f2 - 2.0 * f1 + f0;
    let zn = Complex64::from_polar(1.0, (t * n0 as f64) % TWO_PI);

    // S3 = sum_{k>=N} d3(k) z^k, absolutely convergent (third differences
    // decay like k^{-alpha-2} plus geometrically sparse kink terms).
    let mut s3_re = Kahan::new();
    let mut s3_im = Kahan::new();
    let mut wk = zn;
    let mut window_abs = 0.0f64;
    let mut window_end = 2 * n0;
    let mut k = n0;
    let mut t0 = f0;
    let mut t1 = f1;
    let mut t2 = f2;
    let mut rem_t = f64::INFINITY;
    const K_CAP: u64 = 60_000_000;
    loop {
        let t3 = d.tail_int(k + 3);
        let d3 = t3 - 3.0 * t2 + 3.0 * t1 - t0;
        s3_re.add(d3 * wk.re);
        s3_im.add(d3 * wk.im);
        window_abs += d3.abs();
        k += 1;
        t0 = t1;
        t1 = t2;
        t2 = t3;
        wk *= z;
        if k % 65_536 == 0 {
            wk /= wk.norm();
        }
        if k == window_end {
            // Later doubling windows shrink at least geometrically for
            // power-type tails; 2x the last window is a safe remainder.
            rem_t = 2.0 * window_abs / omz3.norm();
            if rem_t <= 0.25 * tol_t {
                break;
            }
            window_abs = 0.0;
            window_end *= 2;
        }
        if k > K_CAP {
            return Err(Error::Numeric(format!(
                "Abel tail did not reach tolerance {tol_t:.1e} at t = {t:.3e} within {K_CAP} terms"
            )));
        }
    }
    let s3 = Complex64::new(s3_re.value(), s3_im.value());

    let tail = f0 * zn / omz_c
        + d1n * zn * z / (omz_c * omz_c)
        + d2n * zn * z * z / omz3
        + z * z * z * s3 / omz3;
    let noise = 1e-16 * ((k - n0) as f64).sqrt() * f0 / omz3.norm();
    Ok((head + tail, rem_t + noise + head.norm() * 1e-15))
}

/// W(t) = Re 1/(1 - phi(t))./// W(t) = Re 1/(1 - phi(t)).
pub fn w_value(d: &LatticeDist, t: f64, tol: f64) -> Result<f64> {
    let phi = phi_exact(d, t, tol)?.value;
    let denom = Complex64::new(1.0, 0.0) - phi;
    if denom.norm() < 1e-14 {
        return Err(Error::Pole { t });
    }
    Ok(denom.re / denom.norm_sqr())
}

/// int_0^{inf-} y^{-alpha} w(y) e^{i sign y} dy (alpha < 1), or the
/// compensated variant with e^{i sign y} - 1 (alpha in (1,2)).
///
/// `w` must be positive, bounded and exactly multiplicatively periodic with
/// period `w_period`; `w_breaks` yields its kink positions in an interval.
pub fn levy_power_integral<W, B>(
    alpha: f64,
    w: &W,
    w_breaks: &B,
    w_period: f64,
    sign: f64,
    tol: f64,
) -> Result<Complex64>
where
    W: Fn(f64) -> f64 + ?Sized,
    B: Fn(f64, f64) -> Vec<f64> + ?Sized,
{
    assert!(sign == 1.0 || sign == -1.0);
    if alpha < 1.0 {
        // Head [0, pi] with the cusp absorbed by y = v^{1/(1-alpha)}.
        let p = 1.0 / (1.0 - alpha);
        let head_f = |v: f64| {
            let y = v.powf(p);
            p * w(y) * Complex64::from_polar(1.0, sign * y)
        };
        let v_hi = PI.powf(1.0 / p);
        let head_breaks: Vec<f64> = w_breaks(1e-12, PI)
            .into_iter()
            .map(|y| y.powf(1.0 / p))
            .collect();
        let (head, _) = adaptive(&head_f, 0.0, v_hi, tol * 0.3, 1e-13, &head_breaks, 40_000)?;

        let tail_f = |y: f64| Complex64::new(y.powf(-alpha) * w(y), 0.0);
        let (tail, _) = fourier_improper(
            &tail_f,
            PI,
            sign,
            tol * 0.3,
            |lo, hi| w_breaks(lo, hi),
            2_000,
        )?;
        Ok(head + tail)
    } else if alpha > 1.0 {
        // Head [0, pi]: (e^{isy} - 1) y^{-alpha} dy becomes
        // p w(v^p) (e^{i s v^p} - 1) v^{-p} dv under y = v^p, p = 1/(2-alpha);
        // the product stays bounded since e^{isy} - 1 ~ i s y = i s v^p.
        let p = 1.0 / (2.0 - alpha);
        let head_f = |v: f64| {
            let y = v.powf(p);
            let osc = -one_minus_cis(sign * y);
            p * w(y) * osc * v.powf(-p)
        };
        let v_hi = PI.powf(1.0 / p);
        let head_breaks: Vec<f64> = w_breaks(1e-12, PI)
            .into_iter()
            .map(|y| y.powf(1.0 / p))
            .collect();
        let (head, _) = adaptive(&head_f, 0.0, v_hi, tol * 0.3, 1e-13, &head_breaks, 40_000)?;

        // Oscillatory part of the tail.
        let tail_f = |y: f64| Complex64::new(y.powf(-alpha) * w(y), 0.0);
        let (osc_tail, _) = fourier_improper(
            &tail_f,
            PI,
            sign,
            tol * 0.3,
            |lo, hi| w_breaks(lo, hi),
            2_000,
        )?;
        // The -1 part: exactly one period integrated, telescoped by the
        // multiplicative periodicity of w.
        let mono = |y: f64| Complex64::new(y.powf(-alpha) * w(y), 0.0);
        let breaks = w_breaks(PI, PI * w_period);
        let (one_period, _) =
            adaptive(&mono, PI, PI * w_period, tol * 0.1, 1e-13, &breaks, 40_000)?;
        let tail_minus = one_period / (1.0 - w_period.powf(1.0 - alpha));
        Ok(head + osc_tail - tail_minus)
    } else {
        Err(Error::Precondition(
            "levy_power_integral covers alpha != 1; use sinc_weighted_integral".into(),
        ))
    }
}

/// int_0^{inf-} (sin y / y) w(y) dy, the alpha = 1 real-part amplitude.
pub fn sinc_weighted_integral<W, B>(w: &W, w_breaks: &B, tol: f64) -> Result<f64>
where
    W: Fn(f64) -> f64 + ?Sized,
    B: Fn(f64, f64) -> Vec<f64> + ?Sized,
{
    let head_f = |y: f64| {
        let s = if y == 0.0 { 1.0 } else { y.sin() / y };
        Complex64::new(s * w(y), 0.0)
    };
    let head_breaks = w_breaks(1e-12, PI);
    let (head, _) = adaptive(&head_f, 0.0, PI, tol * 0.3, 1e-13, &head_breaks, 40_000)?;
    let tail_f = |y: f64| Complex64::new(w(y) / y, 0.0);
    let (tail, _) = fourier_improper(&tail_f, PI, 1.0, tol * 0.3, |lo, hi| w_breaks(lo, hi), 2_000)?;
    Ok(head.re + tail.im)
}

fn log_periodic_breaks(m: &LogPeriodic, scale: f64, lo: f64, hi: f64) -> Vec<f64> {
    // Kinks of y -> m(scale * y) in (lo, hi): only period wraps are
    // significant for quadrature; interior table nodes are gentle.
    let r = m.period();
    if lo >= hi || scale <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    // First period wrap at or below scale * lo.
    let x_lo = scale * lo;
    let x = r.powf((x_lo.ln() / r.ln()).floor());
    let mut y = x / scale;
    let mut guard = 0;
    while y < hi {
        if y > lo {
            out.push(y);
        }
        y *= r;
        guard += 1;
        if guard > 4000 {
            break;
        }
    }
    out
}

/// Characteristic exponent y_lambda(t) of the semistable law with Levy tails
/// M_{R/L}(lambda^{1/alpha} x) x^{-alpha}.
///
/// Centering conventions: alpha < 1 uncentered (int (e^{itx}-1) dLambda),
/// alpha in (1,2) fully compensated (zero mean), alpha = 1 only for symmetric
/// specs (M_R = M_L).
pub fn levy_exponent(
    spec: &SemistableSpec,
    lambda: f64,
    t: f64,
    tol: f64,
) -> Result<Complex64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be > 0, got {lambda}")));
    }
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if t < 0.0 {
        return Ok(levy_exponent(spec, lambda, -t, tol)?.conj());
    }
    let alpha = spec.alpha();
    let scale = lambda.powf(1.0 / alpha) / t;
    let r = spec.r();

    if (alpha - 1.0).abs() < 1e-12 {
        let (m_r, m_l) = match (spec.m_right(), spec.m_left()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Precondition(
                    "alpha = 1 exponent is only defined for symmetric specs".into(),
                ))
            }
        };
        for i in 0..64 {
            let x = r.powf(i as f64 / 64.0);
            if (m_r.value(x) - m_l.value(x)).abs() > 1e-10 * m_r.value(x) {
                return Err(Error::Precondition(
                    "alpha = 1 exponent requires M_R = M_L".into(),
                ));
            }
        }
        let w = |y: f64| m_r.value(scale * y);
        let wb = |lo: f64, hi: f64| log_periodic_breaks(m_r, scale, lo, hi);
        let s = sinc_weighted_integral(&w, &wb, tol)?;
        return Ok(Complex64::new(-2.0 * t * s, 0.0));
    }

    let mut total = Complex64::new(0.0, 0.0);
    if let Some(m_r) = spec.m_right() {
        let w = |y: f64| m_r.value(scale * y);
        let wb = |lo: f64, hi: f64| log_periodic_breaks(m_r, scale, lo, hi);
        let j = levy_power_integral(alpha, &w, &wb, r, 1.0, tol)?;
        total += Complex64::new(0.0, 1.0) * t.powf(alpha) * j;
    }
    if let Some(m_l) = spec.m_left() {
        let w = |y: f64| m_l.value(scale * y);
        let wb = |lo: f64, hi: f64| log_periodic_breaks(m_l, scale, lo, hi);
        let j = levy_power_integral(alpha, &w, &wb, r, 1.0, tol)?;
        total -= Complex64::new(0.0, 1.0) * t.powf(alpha) * j.conj();
    }
    Ok(total)
}

/// psi_lambda(t) = exp(y_lambda(t)).
pub fn psi_lambda(spec: &SemistableSpec, lambda: f64, t: f64, tol: f64) -> Result<Complex64> {
    Ok(levy_exponent(spec, lambda, t, tol)?.exp())
}

/// |y_lambda(t) - lambda y_1(t / lambda^{1/alpha})|: exact 0 under the
/// centering conventions above, so the residual measures quadrature error.
pub fn scaling_relation_residual(spec: &SemistableSpec, lambda: f64, t: f64) -> Result<f64> {
    let lhs = levy_exponent(spec, lambda, t, 1e-10)?;
    let rhs = levy_exponent(spec, 1.0, t / lambda.powf(1.0 / spec.alpha()), 1e-10)?;
    Ok((lhs - lambda * rhs).norm())
}

/// p2(t) of the asymptotic 1 - phi(t) ~ -i sgn(t) |t|^alpha ell(1/|t|) p2(t).
///
/// For alpha = 1 the returned value is the real-part amplitude
/// int (sin y / y)(h + k)(y/|t|) dy.
pub fn p2_amplitude(
    h: Option<&LogPeriodic>,
    k: Option<&LogPeriodic>,
    alpha: f64,
    t: f64,
) -> Result<Complex64> {
    if t == 0.0 {
        return Err(Error::Domain("p2 needs t != 0".into()));
    }
    let sign = t.signum();
    let ta = t.abs();
    let tol = 1e-9;
    if alpha <= 1.0 {
        for m in [h, k].into_iter().flatten() {
            m.check_tail_monotone(alpha).map_err(|e| {
                Error::Precondition(format!("p2 needs ultimately nonincreasing tails: {e}"))
            })?;
        }
    }
    if (alpha - 1.0).abs() < 1e-12 {
        let mut s = 0.0;
        for m in [h, k].into_iter().flatten() {
            let w = |y: f64| m.value(y / ta);
            let wb = |lo: f64, hi: f64| log_periodic_breaks(m, 1.0 / ta, lo, hi);
            s += sinc_weighted_integral(&w, &wb, tol)?;
        }
        return Ok(Complex64::new(s, 0.0));
    }
    let mut p2 = Complex64::new(0.0, 0.0);
    if let Some(m) = h {
        let w = |y: f64| m.value(y / ta);
        let wb = |lo: f64, hi: f64| log_periodic_breaks(m, 1.0 / ta, lo, hi);
        p2 += levy_power_integral(alpha, &w, &wb, m.period(), sign, tol)?;
    }
    if let Some(m) = k {
        let w = |y: f64| m.value(y / ta);
        let wb = |lo: f64, hi: f64| log_periodic_breaks(m, 1.0 / ta, lo, hi);
        p2 -= levy_power_integral(alpha, &w, &wb, m.period(), -sign, tol)?;
    }
    Ok(p2)
}

/// Predicted 1 - phi(t): -i sgn(t) |t|^alpha ell(1/|t|) p2(t).
pub fn predicted_one_minus_phi(
    spec: &SemistableSpec,
    ell: &SlowlyVarying,
    t: f64,
) -> Result<Complex64> {
    let p2 = p2_amplitude(spec.m_right(), spec.m_left(), spec.alpha(), t)?;
    let ta = t.abs();
    Ok(Complex64::new(0.0, -t.signum())
        * ta.powf(spec.alpha())
        * ell.value(1.0 / ta)
        * p2)
}

/// (1 - phi(t)) / predicted, the Thm-2.1 convergence diagnostic.
pub fn asymptotic_ratio(
    d: &LatticeDist,
    ell: &SlowlyVarying,
    spec: &SemistableSpec,
    t: f64,
) -> Result<Complex64> {
    let scale = t.abs().powf(spec.alpha()) * ell.value(1.0 / t.abs());
    let phi = phi_exact(d, t, (1e-4 * scale).max(1e-14))?.value;
    let predicted = predicted_one_minus_phi(spec, ell, t)?;
    if predicted.norm() == 0.0 {
        return Err(Error::Numeric("predicted asymptote vanished".into()));
    }
    Ok((Complex64::new(1.0, 0.0) - phi) / predicted)
}

/// alpha = 1 one-sided imaginary-part diagnostic |Im phi(t)| / (t L(1/t)).
pub fn imag_ratio_alpha1(d: &LatticeDist, t: f64) -> Result<f64> {
    let l = truncated_mean_lattice(d, 1.0 / t)?;
    let phi = phi_exact(d, t, (1e-4 * t * l).max(1e-15))?.value;
    Ok(phi.im.abs() / (t * l))
}

/// Empirical constants of the Lemma 7.1 bounds plus the strict-positivity
/// constant, with a recheck pass counting violations.
#[derive(Debug, Clone, Serialize)]
pub struct NuBounds {
    /// |phi(t)| <= exp(-nu1 |t|^alpha ell(1/|t|)) on the scan grid.
    pub nu1: f64,
    /// |1 - phi(t)|^{-1} <= nu2 |t|^{-alpha} ell(1/|t|)^{-1}.
    pub nu2: f64,
    /// |phi(t+h) - phi(t)| <= nu3 |h|^alpha ell(1/|h|) on sampled pairs.
    pub nu3: f64,
    /// Re(1 - phi(t)) >= nu_pos t^alpha ell(1/t) on [1e-6, 0.1].
    pub nu_pos: f64,
    pub violations: usize,
    pub grid_len: usize,
}

/// Scans t in [1e-6, pi] (log spaced) for the Lemma 7.1 constants; the
/// increment bound is sampled at `pairs` random (t, h).
pub fn nu_bound_scan(
    d: &LatticeDist,
    alpha: f64,
    ell: &SlowlyVarying,
    grid_len: usize,
    pairs: usize,
    seed: u64,
) -> Result<NuBounds> {
    if alpha >= 1.0 {
        return Err(Error::Precondition(
            "nu_bound_scan implements the alpha < 1 bounds".into(),
        ));
    }
    let lo: f64 = 1e-6;
    let hi: f64 = PI;
    let mut grid = Vec::with_capacity(grid_len);
    for i in 0..grid_len {
        grid.push(lo * (hi / lo).powf(i as f64 / (grid_len - 1) as f64));
    }
    let scale = |t: f64| t.powf(alpha) * ell.value(1.0 / t);

    let mut nu1 = f64::INFINITY;
    let mut nu2: f64 = 0.0;
    let mut nu_pos = f64::INFINITY;
    let mut phis = Vec::with_capacity(grid.len());
    for &t in &grid {
        let s = scale(t);
        let phi = phi_exact(d, t, (1e-4 * s).max(1e-13))?.value;
        phis.push(phi);
        nu1 = nu1.min(-phi.norm().ln() / s);
        let om = (Complex64::new(1.0, 0.0) - phi).norm();
        nu2 = nu2.max(s / om);
        if t <= 0.1 {
            nu_pos = nu_pos.min((1.0 - phi.re) / s);
        }
    }

    let mut nu3: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..pairs {
        let t: f64 = rng.gen_range(-PI..PI);
        let mag = 10f64.powf(rng.gen_range(-3.0..0.0));
        let h = if rng.gen::<bool>() { mag } else { -mag };
        let s = mag.powf(alpha) * ell.value(1.0 / mag);
        let tol = (1e-4 * s).max(1e-13);
        let a = phi_exact(d, t + h, tol)?.value;
        let b = phi_exact(d, t, tol)?.value;
        nu3 = nu3.max((a - b).norm() / s);
    }

    // Recheck with the extremal constants.
    let mut violations = 0usize;
    for (&t, &phi) in grid.iter().zip(&phis) {
        let s = scale(t);
        if phi.norm() > (-nu1 * s).exp() * (1.0 + 1e-12) {
            violations += 1;
        }
        if 1.0 / (Complex64::new(1.0, 0.0) - phi).norm() > nu2 / s * (1.0 + 1e-12) {
            violations += 1;
        }
        if t <= 0.1 && 1.0 - phi.re < nu_pos * s * (1.0 - 1e-12) {
            violations += 1;
        }
    }
    Ok(NuBounds {
        nu1,
        nu2,
        nu3,
        nu_pos,
        violations,
        grid_len,
    })
}
