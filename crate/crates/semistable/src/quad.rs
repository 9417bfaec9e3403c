//! Quadrature kernels: adaptive Gauss-Kronrod panels and improper Fourier
//! integrals summed over half-periods with iterated-average (Euler-type)
//! acceleration of the alternating block series.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Abscissae of the 15-point Kronrod rule (7-point Gauss embedded),
/// from QUADPACK dqk15.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];

/// Kronrod weights.
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

/// Gauss weights for the embedded 7-point rule.
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Kronrod panel on [a, b]. Returns (integral, error estimate) with the
/// QUADPACK rescaling of |K15 - G7| against the panel's variation.
pub fn kronrod15<F>(f: &F, a: f64, b: f64) -> (Complex64, f64)
where
    F: Fn(f64) -> Complex64 + ?Sized,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut fv1 = [Complex64::new(0.0, 0.0); 7];
    let mut fv2 = [Complex64::new(0.0, 0.0); 7];
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    for j in 0..7 {
        let x = half * XGK[j];
        fv1[j] = f(center - x);
        fv2[j] = f(center + x);
        res_k += (fv1[j] + fv2[j]) * WGK[j];
        if j % 2 == 1 {
            res_g += (fv1[j] + fv2[j]) * WG[j / 2];
        }
    }

    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).norm();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).norm() + (fv2[j] - mean).norm());
    }
    res_asc *= half.abs();

    let value = res_k * half;
    let mut err = ((res_k - res_g) * half).norm();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    (value, err.max(value.norm() * 1e-16))
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

/// Adaptive Gauss-Kronrod integration of a complex integrand over [a, b].
///
/// `breaks` lists interior points where the integrand has kinks or jumps;
/// panels never straddle them. Stops when the accumulated error estimate
/// drops below `max(abs_tol, rel_tol * |integral|)`.
pub fn adaptive<F>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    breaks: &[f64],
    max_panels: usize,
) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Complex64 + ?Sized,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("non-finite interval [{a}, {b}]")));
    }
    if a == b {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }

    let mut edges: Vec<f64> = vec![a];
    for &x in breaks {
        if x > a && x < b {
            edges.push(x);
        }
    }
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut panels: Vec<Panel> = Vec::with_capacity(64);
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_err = 0.0;
    for w in edges.windows(2) {
        let (v, e) = kronrod15(f, w[0], w[1]);
        total += v;
        total_err += e;
        panels.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            err: e,
        });
    }

    let tol = |tot: Complex64| abs_tol.max(rel_tol * tot.norm());
    while total_err > tol(total) && panels.len() < max_panels {
        // Split the panel with the largest error estimate.
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("non-empty panel list");
        let Panel { a, b, value, err } = panels.swap_remove(idx);
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // Interval at floating point resolution; keep as is.
            panels.push(Panel {
                a,
                b,
                value,
                err: 0.0,
            });
            continue;
        }
        let (v1, e1) = kronrod15(f, a, mid);
        let (v2, e2) = kronrod15(f, mid, b);
        total += v1 + v2 - value;
        total_err += e1 + e2 - err;
        panels.push(Panel {
            a,
            b: mid,
            value: v1,
            err: e1,
        });
        panels.push(Panel {
            a: mid,
            b,
            value: v2,
            err: e2,
        });
    }

    if total_err > tol(total) * 8.0 {
        return Err(Error::Numeric(format!(
            "adaptive quadrature stalled on [{a}, {b}]: error estimate {total_err:.3e} above tolerance"
        )));
    }
    Ok((total, total_err))
}

/// Real-valued convenience wrapper around [`adaptive`].
pub fn adaptive_real<F>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    breaks: &[f64],
    max_panels: usize,
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let g = |x: f64| Complex64::new(f(x), 0.0);
    let (v, e) = adaptive(&g, a, b, abs_tol, rel_tol, breaks, max_panels)?;
    Ok((v.re, e))
}

/// Iterated-average accelerator for a slowly alternating sequence of
/// partial sums. Each `push` returns the current highest-order average.
#[derive(Debug, Default, Clone)]
pub struct SeriesAccel {
    row: Vec<Complex64>,
}

impl SeriesAccel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, partial_sum: Complex64) -> Complex64 {
        let mut next = Vec::with_capacity(self.row.len() + 1);
        next.push(partial_sum);
        for j in 0..self.row.len() {
            let v = 0.5 * (next[j] + self.row[j]);
            next.push(v);
        }
        self.row = next;
        *self.row.last().expect("row is non-empty after push")
    }
}

/// Improper Fourier integral `int_a^infty f(y) e^{i sigma y} dy` for an
/// envelope `f` of ultimately monotone/slowly varying type.
///
/// The range is split into half-periods of the oscillation; block sums then
/// alternate and are fed through [`SeriesAccel`]. Tolerance is absolute;
/// stops when three consecutive accelerated estimates agree within `tol`.
pub fn fourier_improper<F, B>(
    f: &F,
    a: f64,
    sigma: f64,
    tol: f64,
    breaks_in: B,
    max_blocks: usize,
) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Complex64 + ?Sized,
    B: Fn(f64, f64) -> Vec<f64>,
{
    assert!(sigma != 0.0, "oscillation frequency must be nonzero");
    let half_period = std::f64::consts::PI / sigma.abs();
    let g = |y: f64| f(y) * Complex64::new(0.0, sigma * y).exp();

    // First block boundary at the next multiple of the half period.
    let mut m = (a / half_period).floor() as i64 + 1;
    let mut lo = a;
    let block_tol = tol * 0.05;

    let mut partial = Complex64::new(0.0, 0.0);
    let mut accel = SeriesAccel::new();
    let mut estimates: Vec<Complex64> = Vec::new();
    const DIRECT_BLOCKS: usize = 6;

    for blk in 0..max_blocks {
        let hi = m as f64 * half_period;
        let breaks = breaks_in(lo, hi);
        let (v, _) = adaptive(&g, lo, hi, block_tol, 1e-12, &breaks, 2_000)?;
        partial += v;

        if blk >= DIRECT_BLOCKS {
            let est = accel.push(partial);
            estimates.push(est);
            let k = estimates.len();
            if k >= 3 {
                let e1 = (estimates[k - 1] - estimates[k - 2]).norm();
                let e2 = (estimates[k - 2] - estimates[k - 3]).norm();
                if e1 < tol && e2 < tol {
                    return Ok((estimates[k - 1], e1.max(e2)));
                }
            }
        }

        lo = hi;
        m += 1;
    }

    Err(Error::Numeric(format!(
        "oscillatory integral did not stabilize within {max_blocks} blocks (sigma={sigma:.3e}, tol={tol:.1e})"
    )))
}

/// Geometric split points of [a, b] with `per_octave` points per doubling;
/// used to pre-partition integrands that live on a logarithmic scale.
pub fn geometric_edges(a: f64, b: f64, per_octave: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a);
    let octaves = (b / a).log2();
    let n = ((octaves * per_octave as f64).ceil() as usize).max(1);
    let ratio = (b / a).powf(1.0 / n as f64);
    let mut edges = Vec::with_capacity(n + 1);
    let mut x = a;
    for _ in 0..n {
        edges.push(x);
        x *= ratio;
    }
    edges.push(b);
    edges
}
