//! Thirteen-point horizontal Laplacian and absorbing taper strips.
//!
//! Planes are stored with `x` fastest: value `(ix, iy)` at `iy * nx + ix`.
//! A layout with `ny == 1` is a 2D section and gets no `y` derivative.

use std::ops::{Add, Mul, Sub};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::{Error, Result};

/// Symmetric half-stencil `a_0 .. a_6` of a second derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilCoeffs {
    pub a: [f64; 7],
}

impl StencilCoeffs {
    /// Dispersion-relation-preserving set used by default.
    ///
    /// Second-order exact (`sum_p a_p p^2 = 1`), fourth-order exact, and
    /// within `7.2e-5` relative of the exact symbol `-(k dx)^2` for
    /// `k dx <= 2`.
    pub fn drp() -> Self {
        Self {
            a: [
                -3.1072196482,
                1.8244501464,
                -0.3438701713,
                0.0930346741,
                -0.0244416968,
                0.0049947055,
                -0.0005578338,
            ],
        }
    }

    /// Older tabulated set. Sums to zero but `sum_p a_p p^2 = 0.9987`, so it
    /// is only first-order consistent and carries about `1.3e-3` relative
    /// symbol error at long wavelengths.
    pub fn published() -> Self {
        Self {
            a: [
                -3.12513824,
                1.84108651,
                -0.35706478,
                0.10185626,
                -0.02924772,
                0.00696837,
                -0.00102952,
            ],
        }
    }

    /// `a_0 + 2 sum_p a_p cos(p k dx)`, the symbol times `dx^2`.
    pub fn symbol(&self, k_dx: f64) -> f64 {
        self.a[0]
            + 2.0
                * (1..7)
                    .map(|p| self.a[p] * (p as f64 * k_dx).cos())
                    .sum::<f64>()
    }
}

impl Default for StencilCoeffs {
    fn default() -> Self {
        Self::drp()
    }
}

/// Discrete symbol of the default stencil.
pub fn stencil_symbol(k_dx: f64) -> f64 {
    StencilCoeffs::drp().symbol(k_dx)
}

/// Horizontal grid of one depth slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layout2D {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub coeffs: StencilCoeffs,
}

impl Layout2D {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::param(format!(
                "grid must be non-empty, got {nx} x {ny}"
            )));
        }
        if !(dx > 0.0) || (ny > 1 && !(dy > 0.0)) {
            return Err(Error::param(format!(
                "spacings must be positive, got dx={dx} dy={dy}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            dx,
            dy: if ny > 1 { dy } else { dx },
            coeffs: StencilCoeffs::drp(),
        })
    }

    /// A 2D section (`ny = 1`).
    pub fn section(nx: usize, dx: f64) -> Result<Self> {
        Self::new(nx, 1, dx, dx)
    }

    pub fn with_coeffs(mut self, coeffs: StencilCoeffs) -> Self {
        self.coeffs = coeffs;
        self
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_3d(&self) -> bool {
        self.ny > 1
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Largest eigenvalue magnitude bound of `-L`.
    pub fn spectral_radius_bound(&self) -> f64 {
        let s: f64 =
            2.0 * self.coeffs.a[1..].iter().map(|a| a.abs()).sum::<f64>() + self.coeffs.a[0].abs();
        let mut r = s / (self.dx * self.dx);
        if self.is_3d() {
            r += s / (self.dy * self.dy);
        }
        r
    }
}

/// Values the Laplacian can act on.
pub trait PlaneValue:
    Copy + Default + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
}

impl PlaneValue for f64 {}
impl PlaneValue for Complex64 {}

/// `out = L u` with zero extension outside the grid.
pub fn apply_l<T: PlaneValue>(u: &[T], out: &mut [T], layout: &Layout2D) -> Result<()> {
    check_len(u.len(), layout)?;
    check_len(out.len(), layout)?;
    apply_l_unchecked(u, out, layout);
    Ok(())
}

/// Allocating form of [`apply_l`].
pub fn apply_l_new<T: PlaneValue>(u: &[T], layout: &Layout2D) -> Result<Vec<T>> {
    let mut out = vec![T::default(); u.len()];
    apply_l(u, &mut out, layout)?;
    Ok(out)
}

fn check_len(len: usize, layout: &Layout2D) -> Result<()> {
    if len != layout.len() {
        return Err(Error::shape(format!(
            "plane has {len} values, layout is {} x {}",
            layout.nx, layout.ny
        )));
    }
    Ok(())
}

/// Rows run in parallel when the plane is large enough to pay for it.
const PARALLEL_MIN: usize = 1 << 14;

pub(crate) fn apply_l_unchecked<T: PlaneValue>(u: &[T], out: &mut [T], layout: &Layout2D) {
    let nx = layout.nx;
    let ny = layout.ny;
    let a = &layout.coeffs.a;
    let cx = 1.0 / (layout.dx * layout.dx);
    let cy = 1.0 / (layout.dy * layout.dy);
    let at = |ix: isize, iy: isize| -> T {
        if ix < 0 || iy < 0 || ix >= nx as isize || iy >= ny as isize {
            T::default()
        } else {
            u[iy as usize * nx + ix as usize]
        }
    };
    let row = |iy: usize, out_row: &mut [T]| {
        for (ix, o) in out_row.iter_mut().enumerate() {
            let c = u[iy * nx + ix];
            let c2 = c + c;
            let (xi, yi) = (ix as isize, iy as isize);
            let mut sx = T::default();
            for p in 1..7 {
                sx = sx + (at(xi + p as isize, yi) + at(xi - p as isize, yi) - c2) * a[p];
            }
            let mut acc = sx * cx;
            if ny > 1 {
                let mut sy = T::default();
                for p in 1..7 {
                    sy = sy + (at(xi, yi + p as isize) + at(xi, yi - p as isize) - c2) * a[p];
                }
                acc = acc + sy * cy;
            }
            *o = acc;
        }
    };
    if u.len() >= PARALLEL_MIN {
        out.par_chunks_mut(nx)
            .enumerate()
            .for_each(|(iy, r)| row(iy, r));
    } else {
        out.chunks_mut(nx)
            .enumerate()
            .for_each(|(iy, r)| row(iy, r));
    }
}

/// Edge value of the taper weights.
pub const TAPER_EDGE_WEIGHT: f64 = 0.92;

/// Weights `w_i = exp(-alpha^2 (width - i)^2)` for `i < width`, with
/// `w_0 = 0.92`. Points `width` or more cells from an edge get weight 1.
pub fn taper_profile(width: usize) -> Vec<f64> {
    if width == 0 {
        return Vec::new();
    }
    let alpha2 = -TAPER_EDGE_WEIGHT.ln() / (width * width) as f64;
    (0..width)
        .map(|i| (-alpha2 * ((width - i) as f64).powi(2)).exp())
        .collect()
}

/// Per-point taper weights on a layout (product of the `x` and `y` profiles).
pub fn taper_weights(layout: &Layout2D, width: usize) -> Vec<f64> {
    let profile = taper_profile(width);
    let edge = |i: usize, n: usize| -> f64 {
        let d = i.min(n - 1 - i);
        profile.get(d).copied().unwrap_or(1.0)
    };
    let mut w = vec![1.0; layout.len()];
    for iy in 0..layout.ny {
        let wy = if layout.is_3d() {
            edge(iy, layout.ny)
        } else {
            1.0
        };
        for ix in 0..layout.nx {
            w[iy * layout.nx + ix] = wy * edge(ix, layout.nx);
        }
    }
    w
}

/// Multiplies a plane by the taper weights in place.
pub fn apply_taper<T: PlaneValue>(plane: &mut [T], weights: &[f64]) {
    for (v, &w) in plane.iter_mut().zip(weights) {
        *v = *v * w;
    }
}
