//! Truncated polynomial arithmetic on f64 coefficient vectors: FFT
//! convolution, convolution powers of probability vectors, and power-series
//! reciprocals by Newton doubling.
//!
//! Truncation at index K commutes with convolution for nonnegative-support
//! sequences: coefficients below K never depend on mass above K.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// FFT convolution engine with cached plans.
pub struct Convolver {
    planner: FftPlanner<f64>,
    plans: HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
}

impl Default for Convolver {
    fn default() -> Self {
        Self::new()
    }
}

impl Convolver {
    pub fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
            plans: HashMap::new(),
        }
    }

    fn plan(&mut self, len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        let planner = &mut self.planner;
        self.plans
            .entry(len)
            .or_insert_with(|| {
                (
                    planner.plan_fft_forward(len),
                    planner.plan_fft_inverse(len),
                )
            })
            .clone()
    }

    pub fn forward(&mut self, data: &[f64], len: usize) -> Vec<Complex64> {
        let (fwd, _) = self.plan(len);
        let mut buf: Vec<Complex64> = Vec::with_capacity(len);
        buf.extend(data.iter().map(|&x| Complex64::new(x, 0.0)));
        buf.resize(len, Complex64::new(0.0, 0.0));
        fwd.process(&mut buf);
        buf
    }

    pub fn inverse_re(&mut self, mut buf: Vec<Complex64>, out_len: usize) -> Vec<f64> {
        let len = buf.len();
        let (_, inv) = self.plan(len);
        inv.process(&mut buf);
        let scale = 1.0 / len as f64;
        buf.iter().take(out_len).map(|z| z.re * scale).collect()
    }

    /// Convolution of `a` and `b`, truncated to the first `k_out` coefficients.
    pub fn conv_trunc(&mut self, a: &[f64], b: &[f64], k_out: usize) -> Vec<f64> {
        let a = &a[..a.len().min(k_out)];
        let b = &b[..b.len().min(k_out)];
        if a.is_empty() || b.is_empty() {
            return vec![0.0; 0];
        }
        let full = a.len() + b.len() - 1;
        let out_len = full.min(k_out);
        if a.len().min(b.len()) <= 64 || full <= 1024 {
            return conv_naive(a, b, out_len);
        }
        let len = full.next_power_of_two();
        let fa = self.forward(a, len);
        let mut fb = self.forward(b, len);
        for (x, y) in fb.iter_mut().zip(fa.iter()) {
            *x *= y;
        }
        self.inverse_re(fb, out_len)
    }

    /// Convolution power `f^{*n}` truncated at `k_out` coefficients, by binary
    /// exponentiation. `f` is indexed from 0.
    pub fn pow_trunc(&mut self, f: &[f64], n: u64, k_out: usize) -> Vec<f64> {
        assert!(n >= 1);
        let mut base: Vec<f64> = f[..f.len().min(k_out)].to_vec();
        let mut acc: Option<Vec<f64>> = None;
        let mut n = n;
        loop {
            if n & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => self.conv_trunc(&a, &base, k_out),
                });
            }
            n >>= 1;
            if n == 0 {
                break;
            }
            base = self.conv_trunc(&base, &base, k_out);
        }
        let mut out = acc.expect("n >= 1");
        out.resize(k_out, 0.0);
        out
    }

    /// First `n_out` coefficients of 1/D for a power series with D[0] != 0,
    /// by Newton doubling: R_{2m} = R_m (2 - D R_m).
    pub fn series_reciprocal(&mut self, d: &[f64], n_out: usize) -> Vec<f64> {
        assert!(!d.is_empty() && d[0] != 0.0, "series must have d[0] != 0");
        let mut r = vec![1.0 / d[0]];
        let mut m = 1usize;
        while m < n_out {
            m = (2 * m).min(n_out);
            let dr = self.conv_trunc(&d[..d.len().min(m)], &r, m);
            // two_minus = 2 - D R
            let mut two_minus = dr;
            for x in two_minus.iter_mut() {
                *x = -*x;
            }
            two_minus[0] += 2.0;
            r = self.conv_trunc(&r, &two_minus, m);
        }
        r.resize(n_out, 0.0);
        r
    }
}

fn conv_naive(a: &[f64], b: &[f64], out_len: usize) -> Vec<f64> {
    let mut out = vec![0.0; out_len];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 || i >= out_len {
            continue;
        }
        let jmax = (out_len - i).min(b.len());
        for (j, &bj) in b[..jmax].iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_matches_naive_on_random_input() {
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let a: Vec<f64> = (0..3000).map(|_| next()).collect();
        let b: Vec<f64> = (0..2500).map(|_| next()).collect();
        let mut c = Convolver::new();
        let fast = c.conv_trunc(&a, &b, 4000);
        let slow = conv_naive(&a, &b, 4000);
        for (x, y) in fast.iter().zip(slow.iter()) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn pow_trunc_uniform_two_point() {
        // f = uniform on {1,2}; f^{*2} = (1/4, 1/2, 1/4) on {2,3,4}.
        let f = vec![0.0, 0.5, 0.5];
        let mut c = Convolver::new();
        let p2 = c.pow_trunc(&f, 2, 8);
        assert!((p2[2] - 0.25).abs() < 1e-15);
        assert!((p2[3] - 0.5).abs() < 1e-15);
        assert!((p2[4] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn reciprocal_of_geometric_renewal() {
        // f_k = p q^{k-1}: renewal sequence u_0 = 1, u_n = p for n >= 1.
        let p = 0.37;
        let q = 1.0 - p;
        let n = 5000;
        let mut f = vec![0.0; n];
        let mut mass = p;
        for k in 1..n {
            f[k] = mass;
            mass *= q;
        }
        let mut d = vec![0.0; n];
        d[0] = 1.0;
        for k in 1..n {
            d[k] = -f[k];
        }
        let mut c = Convolver::new();
        let u = c.series_reciprocal(&d, n);
        assert!((u[0] - 1.0).abs() < 1e-12);
        for k in 1..n {
            assert!((u[k] - p).abs() < 1e-11, "u[{k}] = {}", u[k]);
        }
    }

    #[test]
    fn truncation_commutes_with_convolution() {
        let a: Vec<f64> = (0..512).map(|i| ((i * 37 + 11) % 100) as f64 / 100.0).collect();
        let mut c = Convolver::new();
        let full = c.conv_trunc(&a, &a, 1024);
        let cut = c.conv_trunc(&a[..256], &a[..256], 256);
        for k in 0..256 {
            assert!((full[k] - cut[k]).abs() < 1e-10);
        }
    }
}
