//! One-way acoustic wave extrapolation with a Laguerre expansion in time.
//!
//! The wavefield at each depth is stored as Laguerre coefficient planes
//! `u^m(x, y)`. Depth stepping combines an implicit Crank–Nicolson solve of
//! the rational (Padé) diffraction terms, solved by matrix-free conjugate
//! gradients, with a Fourier-domain transport step and an evanescent-wave
//! filter. The Laguerre/Fourier bridge converts between both time
//! representations at every layer.
//!
//! Module map:
//!
//! * [`laguerre`]: basis functions, synthesis, derivative prefix operators,
//!   FFT convolution.
//! * [`bridge`]: Fourier to Laguerre conversion, the shift and conjugation
//!   operators, periodicity removal.
//! * [`pade`]: real rational approximations of `sqrt(1 - X)`.
//! * [`stencil`]: 13-point horizontal Laplacian and taper boundaries.
//! * [`linsolve`]: conjugate gradients and buffer-zone domain decomposition.
//! * [`extrapolator`]: depth stepping, filtering, impulse responses.
//! * [`migration`]: shot-record migration and imaging conditions.
//! * [`io`]: file formats, wavelets and run configuration.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bridge;
pub mod error;
pub mod extrapolator;
mod fft;
pub mod io;
pub mod laguerre;
pub mod linsolve;
pub mod migration;
pub mod pade;
pub mod planes;
pub mod stencil;

pub use error::{Error, Result};
pub use rustfft::num_complex::Complex64;
