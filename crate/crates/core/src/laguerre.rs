//! Laguerre functions in time and the algebra they induce.
//!
//! A causal signal is represented as `f(t) = eta * sum_m f^m l_m(eta t)`
//! with `l_m(x) = exp(-x/2) L_m(x)`. With this normalization
//! `f^m = int_0^inf f(t) l_m(eta t) dt` is the exact inverse, since
//! `int_0^inf l_m(eta t) l_n(eta t) dt = delta_mn / eta`.

use crate::fft::KernelConvolution;
use crate::{Error, Result};

/// Scale, coefficient count and time window of a Laguerre expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaguerreParams {
    /// Scale `eta` in 1/s.
    pub eta: f64,
    /// Number of coefficients `M`.
    pub count: usize,
    /// Time window `L` in seconds.
    pub window: f64,
}

impl LaguerreParams {
    pub fn new(eta: f64, count: usize, window: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::param(format!("eta must be positive, got {eta}")));
        }
        if count == 0 {
            return Err(Error::param("coefficient count must be at least 1"));
        }
        if !(window > 0.0 && window.is_finite()) {
            return Err(Error::param(format!(
                "window must be positive, got {window}"
            )));
        }
        let params = Self { eta, count, window };
        if !params.covers_window() {
            log::warn!(
                "eta*L = {:.1} exceeds 4M = {}; the series will not resolve the end of the window",
                eta * window,
                4 * count
            );
        }
        Ok(params)
    }

    /// `l_m(eta t)` oscillates on `eta t < 4m`; beyond that the last
    /// basis function has already decayed.
    pub fn covers_window(&self) -> bool {
        self.eta * self.window <= 4.0 * self.count as f64
    }
}

/// Coefficients `f^0 .. f^{M-1}` of a time signal.
#[derive(Debug, Clone, PartialEq)]
pub struct LaguerreSpectrum {
    pub params: LaguerreParams,
    pub coeffs: Vec<f64>,
}

impl LaguerreSpectrum {
    pub fn new(params: LaguerreParams, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != params.count {
            return Err(Error::shape(format!(
                "expected {} Laguerre coefficients, got {}",
                params.count,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("Laguerre coefficients must be finite"));
        }
        Ok(Self { params, coeffs })
    }

    pub fn zeros(params: LaguerreParams) -> Self {
        Self {
            params,
            coeffs: vec![0.0; params.count],
        }
    }

    pub fn synthesize(&self, times: &[f64]) -> Result<Vec<f64>> {
        synthesize(self, times)
    }
}

const RESCALE_ABOVE: f64 = 1e150;
const RESCALE_BY: f64 = 1e-150;

/// Fills `out[m] = l_m(x)` for `m < out.len()`.
///
/// The three-term recurrence runs on unscaled polynomial values with a
/// separately tracked log scale, so `exp(-x/2)` never underflows before the
/// polynomial growth has been applied.
pub(crate) fn fill_laguerre(x: f64, out: &mut [f64]) {
    debug_assert!(x >= 0.0);
    if out.is_empty() {
        return;
    }
    let mut log_scale = -0.5 * x;
    let mut prev = 0.0_f64;
    let mut cur = 1.0_f64;
    let mut factor = log_scale.exp();
    for m in 0..out.len() {
        out[m] = if log_scale > -700.0 {
            cur * factor
        } else if cur == 0.0 {
            0.0
        } else {
            cur.signum() * (cur.abs().ln() + log_scale).exp()
        };
        let mf = m as f64;
        let next = ((2.0 * mf + 1.0 - x) * cur - mf * prev) / (mf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_ABOVE {
            cur *= RESCALE_BY;
            prev *= RESCALE_BY;
            log_scale -= RESCALE_BY.ln();
            factor = log_scale.exp();
        }
    }
}

/// Values `l_0(x) .. l_{count-1}(x)`.
pub fn eval_laguerre_functions(x: f64, count: usize) -> Result<Vec<f64>> {
    if !(x >= 0.0) {
        return Err(Error::param(format!(
            "Laguerre argument must be >= 0, got {x}"
        )));
    }
    if count == 0 {
        return Err(Error::param("count must be at least 1"));
    }
    let mut out = vec![0.0; count];
    fill_laguerre(x, &mut out);
    Ok(out)
}

/// Evaluates the truncated series `eta * sum_m f^m l_m(eta t)` at each time.
pub fn synthesize(spec: &LaguerreSpectrum, times: &[f64]) -> Result<Vec<f64>> {
    let eta = spec.params.eta;
    let mut basis = vec![0.0; spec.coeffs.len()];
    times
        .iter()
        .map(|&t| {
            if !(t >= 0.0) {
                return Err(Error::param(format!(
                    "synthesis time must be >= 0, got {t}"
                )));
            }
            fill_laguerre(eta * t, &mut basis);
            Ok(eta * dot(&spec.coeffs, &basis))
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `Phi_1` for every index: `eta * sum_{k<m} f^k`.
pub fn phi1(coeffs: &[f64], eta: f64) -> Vec<f64> {
    let mut acc = Compensated::default();
    coeffs
        .iter()
        .map(|&c| {
            let v = eta * acc.value();
            acc.add(c);
            v
        })
        .collect()
}

/// `Phi_2` for every index: `eta^2 * sum_{k<m} (m - k) f^k`.
///
/// Uses `sum_{k<m} (m-k) f^k = sum_{j=1..m} sum_{k<j} f^k`, i.e. a prefix sum
/// of prefix sums.
pub fn phi2(coeffs: &[f64], eta: f64) -> Vec<f64> {
    let eta2 = eta * eta;
    let mut first = Compensated::default();
    let mut second = Compensated::default();
    coeffs
        .iter()
        .map(|&c| {
            second.add(first.value());
            first.add(c);
            eta2 * second.value()
        })
        .collect()
}

/// Single entry of [`phi1`].
pub fn phi1_at(coeffs: &[f64], eta: f64, m: usize) -> f64 {
    let mut acc = Compensated::default();
    for &c in &coeffs[..m.min(coeffs.len())] {
        acc.add(c);
    }
    eta * acc.value()
}

/// Single entry of [`phi2`].
pub fn phi2_at(coeffs: &[f64], eta: f64, m: usize) -> f64 {
    let mut acc = Compensated::default();
    for (k, &c) in coeffs[..m.min(coeffs.len())].iter().enumerate() {
        acc.add((m - k) as f64 * c);
    }
    eta * eta * acc.value()
}

/// Linear convolution `sum_{j<=m} a^{m-j} b_j` truncated to `a.len()` terms.
pub fn laguerre_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    let kernel = &b[..b.len().min(n)];
    let conv = KernelConvolution::new(kernel, n);
    let mut scratch = conv.scratch();
    let mut out = vec![0.0; n];
    conv.convolve_range(a, 0, &mut out, &mut scratch);
    out
}

/// Backward differences `d_m = f^m - f^{m-1}` for `m = 0..=len`, with
/// `f^{-1} = f^{len} = 0`.
pub(crate) fn differences(coeffs: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let mut prev = 0.0;
    for &c in coeffs {
        out.push(c - prev);
        prev = c;
    }
    out.push(-prev);
}
