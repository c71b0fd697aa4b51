//! Operations on Fourier-in-time planes: phase-shift transport, the
//! analytic homogeneous-layer propagator and evanescent filtering.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::fft::{signed_bin, Fft2d};
use crate::stencil::Layout2D;
use crate::{Error, Result};

use super::WavefieldFourier;

/// `|k|^2` of every 2D FFT bin, `x` fastest.
pub(crate) fn wavenumber_squared(layout: &Layout2D) -> Vec<f64> {
    let kx = 2.0 * PI / (layout.nx as f64 * layout.dx);
    let ky = 2.0 * PI / (layout.ny as f64 * layout.dy);
    let mut out = Vec::with_capacity(layout.len());
    for iy in 0..layout.ny {
        let y = if layout.is_3d() {
            ky * signed_bin(iy, layout.ny)
        } else {
            0.0
        };
        for ix in 0..layout.nx {
            let x = kx * signed_bin(ix, layout.nx);
            out.push(x * x + y * y);
        }
    }
    out
}

/// `u^p *= exp(i omega_p dz / c)` at every point.
pub fn transport_step_fourier(w: &mut WavefieldFourier, c_plane: &[f64], dz: f64) -> Result<()> {
    check_plane(c_plane, &w.layout)?;
    let omegas = &w.omegas;
    w.planes
        .par_planes_mut()
        .enumerate()
        .for_each(|(p, plane)| {
            let omega = omegas[p];
            if omega == 0.0 {
                return;
            }
            for (v, &c) in plane.iter_mut().zip(c_plane) {
                *v *= Complex64::from_polar(1.0, omega * dz / c);
            }
        });
    Ok(())
}

fn check_plane(c_plane: &[f64], layout: &Layout2D) -> Result<()> {
    if c_plane.len() != layout.len() {
        return Err(Error::shape(format!(
            "velocity plane has {} values, layout has {}",
            c_plane.len(),
            layout.len()
        )));
    }
    if let Some(c) = c_plane.iter().find(|c| !(**c > 0.0)) {
        return Err(Error::param(format!(
            "velocity must be positive, found {c}"
        )));
    }
    Ok(())
}

/// Exact one-way multiplier for a homogeneous slab of velocity `chi`.
///
/// Propagating (`|k| < |omega|/chi`): `exp(i omega dz/chi sqrt(1 - chi^2 k^2/omega^2))`.
/// Evanescent: `exp(-|omega| dz/chi sqrt(chi^2 k^2/omega^2 - 1))`.
/// At `omega = 0` only `k = 0` survives.
pub fn homogeneous_multiplier(omega: f64, k2: f64, chi: f64, dz: f64) -> Complex64 {
    if omega == 0.0 {
        return if k2 == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let ratio = chi * chi * k2 / (omega * omega);
    if ratio < 1.0 {
        Complex64::from_polar(1.0, omega * dz / chi * (1.0 - ratio).sqrt())
    } else {
        Complex64::new((-omega.abs() * dz / chi * (ratio - 1.0).sqrt()).exp(), 0.0)
    }
}

/// Evanescent filter gain: 1 in the passband, otherwise
/// `exp(-|omega| dz/chi sqrt(chi^2 k^2/omega^2 - 1))`. Same `omega = 0`
/// convention as [`homogeneous_multiplier`].
pub fn filter_gain(omega: f64, k2: f64, chi: f64, dz: f64) -> f64 {
    if omega == 0.0 {
        return if k2 == 0.0 { 1.0 } else { 0.0 };
    }
    let ratio = chi * chi * k2 / (omega * omega);
    if ratio < 1.0 {
        1.0
    } else {
        (-omega.abs() * dz / chi * (ratio - 1.0).sqrt()).exp()
    }
}

/// Propagates every frequency plane through a homogeneous slab.
pub fn homogeneous_layer_step(w: &mut WavefieldFourier, chi: f64, dz: f64) -> Result<()> {
    if !(chi > 0.0) {
        return Err(Error::param(format!(
            "reference velocity must be positive, got {chi}"
        )));
    }
    let layout = w.layout;
    let k2 = wavenumber_squared(&layout);
    let fft = Fft2d::new(layout.nx, layout.ny);
    let norm = 1.0 / layout.len() as f64;
    let omegas = &w.omegas;
    w.planes
        .par_planes_mut()
        .enumerate()
        .for_each_init(Vec::new, |col, (p, plane)| {
            let omega = omegas[p];
            fft.forward(plane, col);
            for (v, &k) in plane.iter_mut().zip(&k2) {
                *v *= homogeneous_multiplier(omega, k, chi, dz) * norm;
            }
            fft.inverse(plane, col);
        });
    Ok(())
}

/// Reference velocities used to select per-point filter gains.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    /// Strictly increasing.
    pub velocities: Vec<f64>,
}

impl FilterBank {
    pub fn single(chi: f64) -> Result<Self> {
        if !(chi > 0.0) {
            return Err(Error::param(format!(
                "filter velocity must be positive, got {chi}"
            )));
        }
        Ok(Self {
            velocities: vec![chi],
        })
    }

    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    /// Index of the largest velocity not above `c`.
    pub fn bin(&self, c: f64) -> usize {
        self.velocities
            .iter()
            .rposition(|&chi| chi <= c)
            .unwrap_or(0)
    }
}

/// Reference velocities for one layer.
///
/// `b = 1`: the minimum. `b = 2`: minimum and mean. `b = 3, 4`:
/// `chi_1 = min`, `chi_2 = chi_1 + dchi`, `chi_3 = chi_1 + 2 dchi`,
/// `chi_4 = chi_1 + 3.2 dchi` with `dchi = (max - min)/3.5`. Coincident
/// values are merged, so a homogeneous layer yields one velocity.
pub fn build_filter_velocities(c_plane: &[f64], b: usize) -> Result<FilterBank> {
    if c_plane.is_empty() {
        return Err(Error::param("empty velocity plane"));
    }
    if let Some(c) = c_plane.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
        return Err(Error::param(format!(
            "velocity must be positive, found {c}"
        )));
    }
    let min = c_plane.iter().copied().fold(f64::INFINITY, f64::min);
    let max = c_plane.iter().copied().fold(0.0, f64::max);
    let mean = c_plane.iter().sum::<f64>() / c_plane.len() as f64;
    let dchi = (max - min) / 3.5;
    let raw = match b {
        1 => vec![min],
        2 => vec![min, mean],
        3 => vec![min, min + dchi, min + 2.0 * dchi],
        4 => vec![min, min + dchi, min + 2.0 * dchi, min + 3.2 * dchi],
        _ => {
            return Err(Error::param(format!(
                "filter velocity count must be 1 to 4, got {b}"
            )))
        }
    };
    let mut velocities: Vec<f64> = Vec::with_capacity(raw.len());
    for v in raw {
        match velocities.last() {
            Some(&last) if v <= last * (1.0 + 1e-12) => {}
            _ => velocities.push(v),
        }
    }
    Ok(FilterBank { velocities })
}

/// Evanescent filtering with per-point selection among the bank's copies.
pub fn filter_plane(
    w: &mut WavefieldFourier,
    bank: &FilterBank,
    c_plane: &[f64],
    dz: f64,
) -> Result<()> {
    if bank.is_empty() {
        return Err(Error::param("empty filter bank"));
    }
    check_plane(c_plane, &w.layout)?;
    let layout = w.layout;
    let k2 = wavenumber_squared(&layout);
    let fft = Fft2d::new(layout.nx, layout.ny);
    let norm = 1.0 / layout.len() as f64;
    let bins: Vec<usize> = c_plane.iter().map(|&c| bank.bin(c)).collect();
    let omegas = &w.omegas;
    w.planes.par_planes_mut().enumerate().for_each_init(
        || (Vec::new(), Vec::new(), Vec::new()),
        |(col, spectrum, copy), (p, plane)| {
            let omega = omegas[p];
            spectrum.clear();
            spectrum.extend_from_slice(plane);
            fft.forward(spectrum, col);
            for (l, &chi) in bank.velocities.iter().enumerate() {
                let passes = k2.iter().all(|&k| filter_gain(omega, k, chi, dz) == 1.0);
                if passes {
                    // Identity gain: leave the selected points untouched.
                    continue;
                }
                copy.clear();
                copy.extend(
                    spectrum
                        .iter()
                        .zip(&k2)
                        .map(|(v, &k)| v * (filter_gain(omega, k, chi, dz) * norm)),
                );
                fft.inverse(copy, col);
                for ((v, &bin), &c) in plane.iter_mut().zip(&bins).zip(copy.iter()) {
                    if bin == l {
                        *v = c;
                    }
                }
            }
        },
    );
    Ok(())
}
