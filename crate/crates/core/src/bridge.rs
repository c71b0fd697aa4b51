//! Conversion between Fourier series and Laguerre series in time.
//!
//! A signal sampled at `N` points on `[0, L)` has the trigonometric
//! interpolant `f(t) = sum_j c_j exp(i k_j t)` with `c_j = F_j / N`, where
//! `F` is the unnormalized DFT. The Laguerre coefficients of the periodic
//! interpolant are `g = V c` with
//!
//! ```text
//! V[m, j] = (-eta/2 - i k_j)^m / (eta/2 - i k_j)^(m+1)
//! ```
//!
//! Conversely, for a series that vanishes outside `(0, L)` the Fourier
//! coefficients are `c = (eta / L) V^H f`.
//!
//! # Frequency ordering
//!
//! Fourier coefficients are kept in *centered* order: index `j` carries the
//! wavenumber `k_j = 2 pi q_j / L` with `q_j = j - N/2` for even `N` and
//! `q_j = j - (N-1)/2` for odd `N`. The DFT bin of centered index `j` is
//! `q_j mod N` (see [`centered_to_dft`]). For even `N` the first centered
//! entry is the Nyquist bin.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::fft::{ConvScratch, KernelConvolution};
use crate::laguerre::{differences, fill_laguerre, LaguerreParams, LaguerreSpectrum};
use crate::planes::PlaneStack;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Signed frequency index `q_j` of centered index `j`.
pub fn centered_index(j: usize, n: usize) -> i64 {
    let half = if n.is_multiple_of(2) {
        n / 2
    } else {
        (n - 1) / 2
    };
    j as i64 - half as i64
}

/// DFT bin holding centered index `j`.
pub fn centered_to_dft(j: usize, n: usize) -> usize {
    centered_index(j, n).rem_euclid(n as i64) as usize
}

/// Wavenumbers `k_j` in centered order, in rad/s.
pub fn centered_frequencies(n: usize, window: f64) -> Vec<f64> {
    (0..n)
        .map(|j| 2.0 * PI / window * centered_index(j, n) as f64)
        .collect()
}

/// DFT coefficients of a time series on `[0, L)`, in centered order.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    pub window: f64,
    pub coeffs: Vec<Complex64>,
}

impl FourierSpectrum {
    pub fn from_samples(samples: &[f64], window: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::param("cannot transform an empty trace"));
        }
        if !(window > 0.0) {
            return Err(Error::param("window must be positive"));
        }
        let n = samples.len();
        let mut buf: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let coeffs = (0..n).map(|j| buf[centered_to_dft(j, n)]).collect();
        Ok(Self { window, coeffs })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficients in standard DFT order.
    pub fn to_dft_order(&self) -> Vec<Complex64> {
        let n = self.len();
        let mut out = vec![ZERO; n];
        for (j, &c) in self.coeffs.iter().enumerate() {
            out[centered_to_dft(j, n)] = c;
        }
        out
    }

    /// Real part of the inverse DFT.
    pub fn to_samples(&self) -> Vec<f64> {
        let n = self.len();
        let mut buf = self.to_dft_order();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        buf.iter().map(|v| v.re / n as f64).collect()
    }
}

/// The dense Fourier-to-Laguerre matrix `V`, `M x N`.
#[derive(Debug, Clone)]
pub struct TransformMatrix {
    params: LaguerreParams,
    n: usize,
    wavenumbers: Vec<f64>,
    /// Column-major: entry `(m, j)` at `j * M + m`.
    cols: Vec<Complex64>,
}

impl TransformMatrix {
    pub fn new(params: LaguerreParams, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("Fourier length must be at least 1"));
        }
        let m_count = params.count;
        let half_eta = 0.5 * params.eta;
        let wavenumbers = centered_frequencies(n, params.window);
        let mut cols = vec![ZERO; m_count * n];
        for (j, col) in cols.chunks_mut(m_count).enumerate() {
            let k = wavenumbers[j];
            let den = Complex64::new(half_eta, -k);
            // |ratio| == 1, so the recurrence neither grows nor decays.
            let ratio = Complex64::new(-half_eta, -k) / den;
            let mut v = den.inv();
            for entry in col.iter_mut() {
                *entry = v;
                v *= ratio;
            }
        }
        Ok(Self {
            params,
            n,
            wavenumbers,
            cols,
        })
    }

    pub fn params(&self) -> &LaguerreParams {
        &self.params
    }

    pub fn rows(&self) -> usize {
        self.params.count
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn entry(&self, m: usize, j: usize) -> Complex64 {
        self.cols[j * self.params.count + m]
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        let m = self.params.count;
        &self.cols[j * m..(j + 1) * m]
    }

    /// Plain matrix action `V x`.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.n {
            return Err(Error::shape(format!(
                "V expects {} inputs, got {}",
                self.n,
                x.len()
            )));
        }
        let mut out = vec![ZERO; self.rows()];
        for (j, &xj) in x.iter().enumerate() {
            if xj == ZERO {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.column(j)) {
                *o += v * xj;
            }
        }
        Ok(out)
    }

    /// Adjoint action `V^H y`.
    pub fn apply_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.rows() {
            return Err(Error::shape(format!(
                "V^H expects {} inputs, got {}",
                self.rows(),
                y.len()
            )));
        }
        Ok((0..self.n)
            .map(|j| {
                self.column(j)
                    .iter()
                    .zip(y)
                    .map(|(v, yi)| v.conj() * yi)
                    .sum()
            })
            .collect())
    }

    fn check_spectrum(&self, f: &FourierSpectrum) -> Result<()> {
        if f.len() != self.n {
            return Err(Error::shape(format!(
                "spectrum has {} coefficients, matrix expects {}",
                f.len(),
                self.n
            )));
        }
        if (f.window - self.params.window).abs() > 1e-12 * self.params.window {
            return Err(Error::shape(format!(
                "spectrum window {} differs from matrix window {}",
                f.window, self.params.window
            )));
        }
        Ok(())
    }

    /// Centered index of the unpaired Nyquist column, if any.
    fn nyquist(&self) -> Option<usize> {
        self.n.is_multiple_of(2).then_some(0)
    }

    /// Centered index of the zero-frequency column.
    fn dc(&self) -> usize {
        if self.n.is_multiple_of(2) {
            self.n / 2
        } else {
            (self.n - 1) / 2
        }
    }
}

/// Laguerre coefficients of the periodic interpolant, complex-valued:
/// `g = V F / N`.
pub fn fourier_to_laguerre_complex(
    f: &FourierSpectrum,
    v: &TransformMatrix,
) -> Result<Vec<Complex64>> {
    v.check_spectrum(f)?;
    let scale = 1.0 / v.n as f64;
    let mut out = v.apply(&f.coeffs)?;
    for o in &mut out {
        *o *= scale;
    }
    Ok(out)
}

/// Raw Laguerre coefficients `g` of the periodic interpolant of a real
/// signal. The unpaired Nyquist term is read as a cosine.
pub fn fourier_to_laguerre(f: &FourierSpectrum, v: &TransformMatrix) -> Result<Vec<f64>> {
    v.check_spectrum(f)?;
    let mut coeffs = f.coeffs.clone();
    if let Some(nyq) = v.nyquist() {
        coeffs[nyq] = Complex64::new(coeffs[nyq].re, 0.0);
    }
    let mut full = v.apply(&coeffs)?;
    if let Some(nyq) = v.nyquist() {
        // Split the Nyquist bin evenly between +N/2 and -N/2.
        let x = coeffs[nyq].re;
        for (o, vm) in full.iter_mut().zip(v.column(nyq)) {
            *o -= Complex64::new(0.0, vm.im * x);
        }
    }
    let scale = 1.0 / v.n as f64;
    if cfg!(debug_assertions) {
        let re: f64 = full.iter().map(|c| c.re * c.re).sum::<f64>().sqrt();
        let im: f64 = full.iter().map(|c| c.im * c.im).sum::<f64>().sqrt();
        debug_assert!(
            im <= 1e-8 * re.max(f64::MIN_POSITIVE) || im * scale < 1e-300,
            "non-Hermitian spectrum passed as a real signal (imaginary residue {im:e} vs {re:e})"
        );
    }
    Ok(full.iter().map(|c| c.re * scale).collect())
}

/// Fourier (DFT-scaled) coefficients of a real Laguerre series that
/// vanishes outside `(0, L)`: `F = (N eta / L) V^H f`.
pub fn laguerre_to_fourier(
    spec: &LaguerreSpectrum,
    v: &TransformMatrix,
) -> Result<FourierSpectrum> {
    if spec.coeffs.len() != v.rows() {
        return Err(Error::shape(format!(
            "spectrum has {} coefficients, matrix expects {}",
            spec.coeffs.len(),
            v.rows()
        )));
    }
    if spec.params != v.params {
        return Err(Error::shape(
            "Laguerre parameters differ from the transform matrix",
        ));
    }
    let y: Vec<Complex64> = spec
        .coeffs
        .iter()
        .map(|&c| Complex64::new(c, 0.0))
        .collect();
    let scale = v.n as f64 * v.params.eta / v.params.window;
    let mut coeffs = v.apply_adjoint(&y)?;
    for c in &mut coeffs {
        *c *= scale;
    }
    if let Some(nyq) = v.nyquist() {
        coeffs[nyq] = Complex64::new(2.0 * coeffs[nyq].re, 0.0);
    }
    Ok(FourierSpectrum {
        window: v.params.window,
        coeffs,
    })
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0) {
        return Err(Error::param(format!("shift must be >= 0, got {tau}")));
    }
    Ok(())
}

/// Delay operator: coefficients of `f(t - tau) H(t - tau)`.
///
/// `S{f; tau}^m = sum_{j<=m} (f^{m-j} - f^{m-j-1}) l_j(eta tau)`.
pub fn shift_s(coeffs: &[f64], tau: f64, params: &LaguerreParams) -> Result<Vec<f64>> {
    check_tau(tau)?;
    let op = ShiftOperator::new(params, coeffs.len(), tau);
    let mut scratch = op.scratch();
    let mut out = vec![0.0; coeffs.len()];
    op.apply(coeffs, &mut out, &mut scratch);
    Ok(out)
}

/// Reflection operator: coefficients of `f(tau - t)` on `(0, tau)`.
///
/// `Q{f; tau}^j = sum_m (f^m - f^{m-1}) l_{m+j}(eta tau)`.
pub fn conjugate_q(coeffs: &[f64], tau: f64, params: &LaguerreParams) -> Result<Vec<f64>> {
    check_tau(tau)?;
    let op = ConjugationOperator::new(params, coeffs.len(), tau);
    let mut scratch = op.scratch();
    let mut out = vec![0.0; coeffs.len()];
    op.apply(coeffs, &mut out, &mut scratch);
    Ok(out)
}

/// `f = g - S{g; L}`: keeps one period of the periodic interpolant.
pub fn remove_periodicity_shift(raw: &[f64], params: &LaguerreParams) -> Vec<f64> {
    let op = ShiftOperator::new(params, raw.len(), params.window);
    let mut scratch = op.scratch();
    let mut out = raw.to_vec();
    op.subtract_shifted(&mut out, &mut scratch);
    out
}

/// `Q{Q{g; L}; L}`: restricts the series to `(0, L)`.
pub fn remove_periodicity_q2(raw: &[f64], params: &LaguerreParams) -> Vec<f64> {
    let op = ConjugationOperator::new(params, raw.len(), params.window);
    let mut scratch = op.scratch();
    let mut out = raw.to_vec();
    op.apply_twice(&mut out, &mut scratch);
    out
}

/// How the spurious period introduced by `V` is removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeriodicityRemoval {
    #[default]
    Shift,
    DoubleConjugation,
}

/// Laguerre coefficients of a trace sampled uniformly on `[0, L)`.
pub fn expand_trace(samples: &[f64], params: LaguerreParams) -> Result<LaguerreSpectrum> {
    expand_trace_with(samples, params, PeriodicityRemoval::Shift)
}

pub fn expand_trace_with(
    samples: &[f64],
    params: LaguerreParams,
    removal: PeriodicityRemoval,
) -> Result<LaguerreSpectrum> {
    let f = FourierSpectrum::from_samples(samples, params.window)?;
    let v = TransformMatrix::new(params, samples.len())?;
    let raw = fourier_to_laguerre(&f, &v)?;
    let coeffs = match removal {
        PeriodicityRemoval::Shift => remove_periodicity_shift(&raw, &params),
        PeriodicityRemoval::DoubleConjugation => remove_periodicity_q2(&raw, &params),
    };
    LaguerreSpectrum::new(params, coeffs)
}

/// `S{.; tau}` with its kernel transformed once.
pub(crate) struct ShiftOperator {
    len: usize,
    conv: KernelConvolution,
}

impl ShiftOperator {
    pub(crate) fn new(params: &LaguerreParams, len: usize, tau: f64) -> Self {
        let mut kernel = vec![0.0; len];
        fill_laguerre(params.eta * tau, &mut kernel);
        Self {
            len,
            conv: KernelConvolution::new(&kernel, len.max(1)),
        }
    }

    pub(crate) fn scratch(&self) -> (ConvScratch, Vec<f64>) {
        (self.conv.scratch(), Vec::with_capacity(self.len + 1))
    }

    pub(crate) fn apply(
        &self,
        coeffs: &[f64],
        out: &mut [f64],
        scratch: &mut (ConvScratch, Vec<f64>),
    ) {
        let (conv, diff) = scratch;
        differences(coeffs, diff);
        self.conv.convolve_range(&diff[..self.len], 0, out, conv);
    }

    /// `f -= S{f}` in place.
    pub(crate) fn subtract_shifted(
        &self,
        coeffs: &mut [f64],
        scratch: &mut (ConvScratch, Vec<f64>),
    ) {
        let mut shifted = vec![0.0; coeffs.len()];
        self.apply(coeffs, &mut shifted, scratch);
        for (c, s) in coeffs.iter_mut().zip(&shifted) {
            *c -= s;
        }
    }
}

/// `Q{.; tau}` as an FFT correlation against `l_i(eta tau)`, `i <= 2M`.
pub(crate) struct ConjugationOperator {
    len: usize,
    conv: KernelConvolution,
}

impl ConjugationOperator {
    pub(crate) fn new(params: &LaguerreParams, len: usize, tau: f64) -> Self {
        let mut kernel = vec![0.0; 2 * len + 1];
        fill_laguerre(params.eta * tau, &mut kernel);
        Self {
            len,
            conv: KernelConvolution::new(&kernel, len + 1),
        }
    }

    pub(crate) fn scratch(&self) -> (ConvScratch, Vec<f64>) {
        (self.conv.scratch(), Vec::with_capacity(self.len + 1))
    }

    pub(crate) fn apply(
        &self,
        coeffs: &[f64],
        out: &mut [f64],
        scratch: &mut (ConvScratch, Vec<f64>),
    ) {
        let (conv, diff) = scratch;
        differences(coeffs, diff);
        diff.reverse();
        // (reversed d * l)[M + j] = sum_m d_m l_{m+j}
        self.conv.convolve_range(diff, self.len, out, conv);
    }

    pub(crate) fn apply_twice(&self, coeffs: &mut [f64], scratch: &mut (ConvScratch, Vec<f64>)) {
        let mut once = vec![0.0; coeffs.len()];
        self.apply(coeffs, &mut once, scratch);
        self.apply(&once, coeffs, scratch);
    }
}

/// Reusable conversion machinery for many time series sharing one grid.
pub struct Bridge {
    params: LaguerreParams,
    matrix: TransformMatrix,
    shift: ShiftOperator,
    conj: ConjugationOperator,
}

impl Bridge {
    pub fn new(params: LaguerreParams, n: usize) -> Result<Self> {
        let matrix = TransformMatrix::new(params, n)?;
        Ok(Self {
            params,
            shift: ShiftOperator::new(&params, params.count, params.window),
            conj: ConjugationOperator::new(&params, params.count, params.window),
            matrix,
        })
    }

    pub fn params(&self) -> &LaguerreParams {
        &self.params
    }

    pub fn fourier_len(&self) -> usize {
        self.matrix.n
    }

    pub fn matrix(&self) -> &TransformMatrix {
        &self.matrix
    }

    pub fn dt(&self) -> f64 {
        self.params.window / self.matrix.n as f64
    }

    /// Angular frequencies `omega_p = -k_p`, matching an `exp(-i omega t)`
    /// time dependence so that `exp(i omega dz / c)` is a delay.
    pub fn omegas(&self) -> Vec<f64> {
        self.matrix.wavenumbers.iter().map(|k| -k).collect()
    }

    /// Trace samples to periodicity-free Laguerre coefficients.
    pub fn expand(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.matrix.n {
            return Err(Error::shape(format!(
                "trace has {} samples, bridge expects {}",
                samples.len(),
                self.matrix.n
            )));
        }
        let f = FourierSpectrum::from_samples(samples, self.params.window)?;
        let mut coeffs = fourier_to_laguerre(&f, &self.matrix)?;
        let mut scratch = self.shift.scratch();
        self.shift.subtract_shifted(&mut coeffs, &mut scratch);
        Ok(coeffs)
    }

    /// Laguerre coefficients to trace samples through the Fourier route.
    pub fn samples(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        let spec = LaguerreSpectrum::new(self.params, coeffs.to_vec())?;
        Ok(laguerre_to_fourier(&spec, &self.matrix)?.to_samples())
    }

    /// Fourier planes (centered order) of real Laguerre planes.
    pub fn to_fourier_planes(&self, lag: &PlaneStack<f64>) -> PlaneStack<Complex64> {
        let v = &self.matrix;
        let n = v.n;
        let npts = lag.npts();
        let scale = n as f64 * self.params.eta / self.params.window;
        let dc = v.dc();
        let nyq = v.nyquist();
        let mut out: PlaneStack<Complex64> = PlaneStack::zeros(n, npts);
        out.par_planes_mut().enumerate().for_each(|(j, plane)| {
            if j < dc && Some(j) != nyq {
                return;
            }
            for (m, src) in lag.planes().enumerate() {
                let w = v.entry(m, j).conj() * scale;
                for (o, &s) in plane.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
            if Some(j) == nyq {
                for o in plane.iter_mut() {
                    *o = Complex64::new(2.0 * o.re, 0.0);
                }
            }
        });
        // Negative wavenumbers by Hermitian symmetry.
        for j in 0..dc {
            if Some(j) == nyq {
                continue;
            }
            let partner = 2 * dc - j;
            let src: Vec<Complex64> = out.plane(partner).iter().map(|c| c.conj()).collect();
            out.plane_mut(j).copy_from_slice(&src);
        }
        out
    }

    /// Raw Laguerre planes (periodic interpolant) of Hermitian Fourier planes.
    pub fn to_laguerre_planes_raw(&self, four: &PlaneStack<Complex64>) -> PlaneStack<f64> {
        let v = &self.matrix;
        let n = v.n;
        let npts = four.npts();
        let dc = v.dc();
        let nyq = v.nyquist();
        let inv_n = 1.0 / n as f64;
        let mut out = PlaneStack::zeros(self.params.count, npts);
        out.par_planes_mut().enumerate().for_each(|(m, plane)| {
            for j in dc..n {
                let w = v.entry(m, j) * inv_n;
                let src = four.plane(j);
                if j == dc {
                    for (o, s) in plane.iter_mut().zip(src) {
                        *o += w.re * s.re - w.im * s.im;
                    }
                } else {
                    let (wr, wi) = (2.0 * w.re, 2.0 * w.im);
                    for (o, s) in plane.iter_mut().zip(src) {
                        *o += wr * s.re - wi * s.im;
                    }
                }
            }
            if let Some(j) = nyq {
                let w = v.entry(m, j).re * inv_n;
                for (o, s) in plane.iter_mut().zip(four.plane(j)) {
                    *o += w * s.re;
                }
            }
        });
        out
    }

    /// Fourier planes to periodicity-free Laguerre planes.
    pub fn to_laguerre_planes(&self, four: &PlaneStack<Complex64>) -> PlaneStack<f64> {
        let mut raw = self.to_laguerre_planes_raw(four);
        self.remove_periodicity_planes(&mut raw);
        raw
    }

    /// `f = g - S{g; L}` at every point.
    pub fn remove_periodicity_planes(&self, planes: &mut PlaneStack<f64>) {
        planes.map_columns(
            || self.shift.scratch(),
            |_, col, scratch| self.shift.subtract_shifted(col, scratch),
        );
    }

    /// `Q^2{.; L}` at every point.
    pub fn q2_planes(&self, planes: &mut PlaneStack<f64>) {
        planes.map_columns(
            || self.conj.scratch(),
            |_, col, scratch| self.conj.apply_twice(col, scratch),
        );
    }

    /// Inverse DFT of a centered Fourier column.
    pub fn fourier_column_to_samples(&self, column: &[Complex64]) -> Vec<f64> {
        FourierSpectrum {
            window: self.params.window,
            coeffs: column.to_vec(),
        }
        .to_samples()
    }
}

/// Runs `steps` Laguerre -> Fourier -> Laguerre cycles on a plane stack.
pub fn bridge_cycles(bridge: &Bridge, planes: &mut PlaneStack<f64>, steps: usize) {
    for _ in 0..steps {
        bridge.q2_planes(planes);
        let four = bridge.to_fourier_planes(planes);
        *planes = bridge.to_laguerre_planes(&four);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eta: f64, m: usize, window: f64) -> LaguerreParams {
        LaguerreParams::new(eta, m, window).unwrap()
    }

    #[test]
    fn centered_order_maps_to_dft_bins() {
        // even N: q = -4..3
        let n = 8;
        let bins: Vec<usize> = (0..n).map(|j| centered_to_dft(j, n)).collect();
        assert_eq!(bins, vec![4, 5, 6, 7, 0, 1, 2, 3]);
        // odd N: q = -3..3
        let n = 7;
        let bins: Vec<usize> = (0..n).map(|j| centered_to_dft(j, n)).collect();
        assert_eq!(bins, vec![4, 5, 6, 0, 1, 2, 3]);
        let k = centered_frequencies(4, 2.0);
        assert_eq!(k, vec![-2.0 * PI, -PI, 0.0, PI]);
    }

    #[test]
    fn spectrum_of_pure_tone_lands_on_its_wavenumber() {
        let n = 16;
        let window = 1.0;
        let samples: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 3.0 * i as f64 / n as f64).cos())
            .collect();
        let f = FourierSpectrum::from_samples(&samples, window).unwrap();
        let k = centered_frequencies(n, window);
        for (j, c) in f.coeffs.iter().enumerate() {
            let expected = if (k[j].abs() - 6.0 * PI).abs() < 1e-9 {
                8.0
            } else {
                0.0
            };
            assert!(
                (c.re - expected).abs() < 1e-9 && c.im.abs() < 1e-9,
                "j={j} c={c}"
            );
        }
        let back = f.to_samples();
        for (a, b) in back.iter().zip(&samples) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_spectrum_gives_zero_coefficients() {
        let p = params(100.0, 12, 1.0);
        let v = TransformMatrix::new(p, 8).unwrap();
        let f = FourierSpectrum {
            window: 1.0,
            coeffs: vec![ZERO; 8],
        };
        assert!(fourier_to_laguerre(&f, &v)
            .unwrap()
            .iter()
            .all(|c| *c == 0.0));
        let spec = LaguerreSpectrum::zeros(p);
        assert!(laguerre_to_fourier(&spec, &v)
            .unwrap()
            .coeffs
            .iter()
            .all(|c| *c == ZERO));
    }

    #[test]
    fn single_mode_selects_a_column() {
        let p = params(50.0, 10, 0.5);
        let v = TransformMatrix::new(p, 6).unwrap();
        for j in 0..6 {
            let mut coeffs = vec![ZERO; 6];
            coeffs[j] = Complex64::new(6.0, 0.0);
            let f = FourierSpectrum {
                window: 0.5,
                coeffs,
            };
            let g = fourier_to_laguerre_complex(&f, &v).unwrap();
            for (m, gm) in g.iter().enumerate() {
                assert!((gm - v.entry(m, j)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn matrix_entries_match_closed_form() {
        let p = params(80.0, 40, 1.0);
        let v = TransformMatrix::new(p, 9).unwrap();
        for j in 0..9 {
            let k = v.wavenumbers()[j];
            let a = Complex64::new(-40.0, -k);
            let b = Complex64::new(40.0, -k);
            for m in [0usize, 1, 7, 39] {
                let direct = a.powi(m as i32) / b.powi(m as i32 + 1);
                assert!((v.entry(m, j) - direct).norm() <= 1e-12 * direct.norm());
            }
        }
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let p = params(80.0, 4, 1.0);
        let v = TransformMatrix::new(p, 8).unwrap();
        let f = FourierSpectrum {
            window: 1.0,
            coeffs: vec![ZERO; 7],
        };
        assert!(fourier_to_laguerre(&f, &v).is_err());
        let f = FourierSpectrum {
            window: 2.0,
            coeffs: vec![ZERO; 8],
        };
        assert!(fourier_to_laguerre(&f, &v).is_err());
    }

    #[test]
    fn negative_shift_rejected() {
        let p = params(10.0, 4, 1.0);
        assert!(shift_s(&[1.0, 0.0, 0.0, 0.0], -1.0, &p).is_err());
        assert!(conjugate_q(&[1.0, 0.0, 0.0, 0.0], -1.0, &p).is_err());
    }

    #[test]
    fn zero_shift_is_identity() {
        let p = params(10.0, 6, 1.0);
        let c = [0.3, -1.0, 2.0, 0.5, 0.0, 4.0];
        let s = shift_s(&c, 0.0, &p).unwrap();
        for (a, b) in s.iter().zip(&c) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_inputs_stay_zero() {
        let p = params(10.0, 6, 1.0);
        let z = [0.0; 6];
        assert!(conjugate_q(&z, 1.0, &p).unwrap().iter().all(|v| *v == 0.0));
        assert!(remove_periodicity_shift(&z, &p).iter().all(|v| *v == 0.0));
        assert!(remove_periodicity_q2(&z, &p).iter().all(|v| *v == 0.0));
        let spec = expand_trace(&[0.0; 32], params(100.0, 16, 1.0)).unwrap();
        assert!(spec.coeffs.iter().all(|v| *v == 0.0));
    }

    fn pulse(n: usize, window: f64) -> Vec<f64> {
        let dt = window / n as f64;
        (0..n)
            .map(|i| {
                let a = (PI * 20.0 * (i as f64 * dt - 0.2)).powi(2);
                (1.0 - 2.0 * a) * (-a).exp()
            })
            .collect()
    }

    #[test]
    fn trace_round_trip_through_both_routes() {
        let (n, window) = (256, 1.0);
        let p = params(600.0, 512, window);
        let x = pulse(n, window);
        let bridge = Bridge::new(p, n).unwrap();
        let coeffs = bridge.expand(&x).unwrap();
        let times: Vec<f64> = (0..n).map(|i| i as f64 * window / n as f64).collect();
        let direct = LaguerreSpectrum::new(p, coeffs.clone())
            .unwrap()
            .synthesize(&times)
            .unwrap();
        let via_fourier = bridge.samples(&coeffs).unwrap();
        let peak = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 1..n {
            assert!(
                (direct[i] - x[i]).abs() < 1e-6 * peak,
                "i={i} {} {}",
                direct[i],
                x[i]
            );
            assert!((via_fourier[i] - x[i]).abs() < 1e-6 * peak, "i={i}");
        }
    }

    #[test]
    fn plane_routes_match_single_trace_routes() {
        let (n, window) = (64, 1.0);
        let p = params(200.0, 128, window);
        let bridge = Bridge::new(p, n).unwrap();
        let traces = [
            pulse(n, window),
            pulse(n, window).iter().map(|v| -0.5 * v).collect(),
        ];
        let mut lag = PlaneStack::zeros(p.count, 2);
        for (pt, tr) in traces.iter().enumerate() {
            let c = bridge.expand(tr).unwrap();
            for (m, v) in c.iter().enumerate() {
                lag.plane_mut(m)[pt] = *v;
            }
        }
        let four = bridge.to_fourier_planes(&lag);
        let back = bridge.to_laguerre_planes(&four);
        for pt in 0..2 {
            let col = lag.column(pt);
            let spec = LaguerreSpectrum::new(p, col.clone()).unwrap();
            let f = laguerre_to_fourier(&spec, bridge.matrix()).unwrap();
            for j in 0..n {
                assert!(
                    (four.plane(j)[pt] - f.coeffs[j]).norm() < 1e-9 * (1.0 + f.coeffs[j].norm())
                );
            }
            let g =
                remove_periodicity_shift(&fourier_to_laguerre(&f, bridge.matrix()).unwrap(), &p);
            for m in 0..p.count {
                assert!((back.plane(m)[pt] - g[m]).abs() < 1e-9);
            }
        }
    }
}
