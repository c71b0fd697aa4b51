//! Zero-padded FFT convolution with a fixed kernel.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Linear convolution of variable inputs against one precomputed kernel.
///
/// The transform size covers the full linear convolution of an input of at
/// most `max_input` samples, so no circular wrap reaches the output.
pub(crate) struct KernelConvolution {
    size: usize,
    max_input: usize,
    kernel_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Per-thread working memory for [`KernelConvolution`].
pub(crate) struct ConvScratch {
    buf: Vec<Complex64>,
    fft: Vec<Complex64>,
}

impl KernelConvolution {
    pub(crate) fn new(kernel: &[f64], max_input: usize) -> Self {
        let size = (kernel.len() + max_input).max(2).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut kernel_hat = vec![Complex64::new(0.0, 0.0); size];
        for (dst, &k) in kernel_hat.iter_mut().zip(kernel) {
            dst.re = k;
        }
        forward.process(&mut kernel_hat);
        let norm = 1.0 / size as f64;
        for v in &mut kernel_hat {
            *v *= norm;
        }
        Self {
            size,
            max_input,
            kernel_hat,
            forward,
            inverse,
        }
    }

    pub(crate) fn scratch(&self) -> ConvScratch {
        let n = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        ConvScratch {
            buf: vec![Complex64::new(0.0, 0.0); self.size],
            fft: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Writes `(input * kernel)[offset .. offset + out.len()]`.
    pub(crate) fn convolve_range(
        &self,
        input: &[f64],
        offset: usize,
        out: &mut [f64],
        scratch: &mut ConvScratch,
    ) {
        assert!(input.len() <= self.max_input);
        assert!(offset + out.len() <= self.size);
        let buf = &mut scratch.buf;
        for (i, v) in buf.iter_mut().enumerate() {
            *v = Complex64::new(input.get(i).copied().unwrap_or(0.0), 0.0);
        }
        self.forward.process_with_scratch(buf, &mut scratch.fft);
        for (v, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *v *= k;
        }
        self.inverse.process_with_scratch(buf, &mut scratch.fft);
        for (o, v) in out.iter_mut().zip(&buf[offset..]) {
            *o = v.re;
        }
    }
}

/// Plain 1D complex transforms used for spatial spectra.
pub(crate) struct Fft1d {
    pub(crate) forward: Arc<dyn Fft<f64>>,
    pub(crate) inverse: Arc<dyn Fft<f64>>,
}

impl Fft1d {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

/// In-place 2D FFT of an `nx * ny` plane stored with x fastest.
///
/// Unnormalized in both directions; callers divide by `nx * ny` after an
/// inverse transform.
pub(crate) struct Fft2d {
    nx: usize,
    ny: usize,
    x: Fft1d,
    y: Fft1d,
}

impl Fft2d {
    pub(crate) fn new(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            x: Fft1d::new(nx),
            y: Fft1d::new(ny),
        }
    }

    pub(crate) fn forward(&self, plane: &mut [Complex64], column: &mut Vec<Complex64>) {
        self.run(plane, column, true);
    }

    pub(crate) fn inverse(&self, plane: &mut [Complex64], column: &mut Vec<Complex64>) {
        self.run(plane, column, false);
    }

    fn run(&self, plane: &mut [Complex64], column: &mut Vec<Complex64>, forward: bool) {
        let (fx, fy) = if forward {
            (&self.x.forward, &self.y.forward)
        } else {
            (&self.x.inverse, &self.y.inverse)
        };
        fx.process(plane);
        if self.ny > 1 {
            column.resize(self.ny, Complex64::new(0.0, 0.0));
            for ix in 0..self.nx {
                for iy in 0..self.ny {
                    column[iy] = plane[iy * self.nx + ix];
                }
                fy.process(column);
                for iy in 0..self.ny {
                    plane[iy * self.nx + ix] = column[iy];
                }
            }
        }
    }
}

/// Signed integer wavenumber index of FFT bin `i` for a length-`n` transform.
pub(crate) fn signed_bin(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}
