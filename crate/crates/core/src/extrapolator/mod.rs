//! Depth extrapolation of Laguerre-domain wavefields.
//!
//! One depth step ([`Extrapolator::step`]) runs:
//!
//! 1. the rational diffraction terms, solved implicitly per coefficient;
//! 2. `Q^2` windowing to `(0, L)`;
//! 3. Laguerre to Fourier conversion;
//! 4. a phase shift `exp(i omega dz / c)` with the local velocity;
//! 5. evanescent filtering;
//! 6. Fourier to Laguerre conversion;
//! 7. removal of the spurious period.
//!
//! A laterally homogeneous layer replaces steps 1, 4 and 5 by the exact
//! homogeneous propagator. The taper strip is applied at the end of every
//! step.

mod diffraction;
mod spectral;

use std::collections::HashMap;

use rustfft::num_complex::Complex64;

use crate::bridge::{Bridge, ShiftOperator};
use crate::laguerre::{fill_laguerre, LaguerreParams};
use crate::linsolve::SolverConfig;
use crate::pade::PadeExpansion;
use crate::planes::PlaneStack;
use crate::stencil::{apply_taper, taper_weights, Layout2D};
use crate::{Error, Result};

pub use diffraction::diffraction_step;
pub use spectral::{
    build_filter_velocities, filter_gain, filter_plane, homogeneous_layer_step,
    homogeneous_multiplier, transport_step_fourier, FilterBank,
};

/// Laguerre coefficient planes `u^m(x, y)` at one depth.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefieldLaguerre {
    pub layout: Layout2D,
    pub params: LaguerreParams,
    pub planes: PlaneStack<f64>,
}

impl WavefieldLaguerre {
    pub fn zeros(layout: Layout2D, params: LaguerreParams) -> Self {
        Self {
            layout,
            params,
            planes: PlaneStack::zeros(params.count, layout.len()),
        }
    }

    pub fn new(layout: Layout2D, params: LaguerreParams, planes: PlaneStack<f64>) -> Result<Self> {
        if planes.count() != params.count || planes.npts() != layout.len() {
            return Err(Error::shape(format!(
                "expected {} planes of {} points, got {} of {}",
                params.count,
                layout.len(),
                planes.count(),
                planes.npts()
            )));
        }
        if planes.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::param("wavefield contains non-finite values"));
        }
        Ok(Self {
            layout,
            params,
            planes,
        })
    }

    /// L2 norm over all coefficients.
    pub fn norm(&self) -> f64 {
        self.planes
            .as_slice()
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.planes.as_slice().iter().all(|v| v.is_finite())
    }

    /// Field values `u(x, y, t)` at one time.
    pub fn synthesize_plane(&self, t: f64) -> Result<Vec<f64>> {
        if !(t >= 0.0) {
            return Err(Error::param(format!("time must be >= 0, got {t}")));
        }
        let eta = self.params.eta;
        let mut basis = vec![0.0; self.params.count];
        fill_laguerre(eta * t, &mut basis);
        let mut out = vec![0.0; self.layout.len()];
        for (plane, &b) in self.planes.planes().zip(&basis) {
            if b == 0.0 {
                continue;
            }
            let w = eta * b;
            for (o, &v) in out.iter_mut().zip(plane) {
                *o += w * v;
            }
        }
        Ok(out)
    }
}

/// Fourier-in-time planes `u^p(x, y)` in centered frequency order.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefieldFourier {
    pub layout: Layout2D,
    pub window: f64,
    /// `omega_p` per plane, rad/s.
    pub omegas: Vec<f64>,
    pub planes: PlaneStack<Complex64>,
}

/// Gridded velocity `c(x, y, z)`, `x` fastest then `y` then `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityModel {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub c: Vec<f64>,
}

impl VelocityModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nx: usize,
        ny: usize,
        nz: usize,
        dx: f64,
        dy: f64,
        dz: f64,
        c: Vec<f64>,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::param(format!(
                "model must be non-empty, got {nx} x {ny} x {nz}"
            )));
        }
        if !(dx > 0.0 && dy > 0.0 && dz > 0.0) {
            return Err(Error::param(format!(
                "spacings must be positive: {dx} {dy} {dz}"
            )));
        }
        if c.len() != nx * ny * nz {
            return Err(Error::shape(format!(
                "model has {} values, expected {}",
                c.len(),
                nx * ny * nz
            )));
        }
        if let Some(v) = c.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::param(format!(
                "velocity must be positive and finite, found {v}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            nz,
            dx,
            dy,
            dz,
            c,
        })
    }

    /// Model filled by `f(x, y, z)` in meters.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fn(
        nx: usize,
        ny: usize,
        nz: usize,
        dx: f64,
        dy: f64,
        dz: f64,
        f: impl Fn(f64, f64, f64) -> f64,
    ) -> Result<Self> {
        let mut c = Vec::with_capacity(nx * ny * nz);
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    c.push(f(ix as f64 * dx, iy as f64 * dy, iz as f64 * dz));
                }
            }
        }
        Self::new(nx, ny, nz, dx, dy, dz, c)
    }

    pub fn layout(&self) -> Result<Layout2D> {
        Layout2D::new(self.nx, self.ny, self.dx, self.dy)
    }

    pub fn layer(&self, iz: usize) -> &[f64] {
        let n = self.nx * self.ny;
        &self.c[iz * n..(iz + 1) * n]
    }
}

/// True when a layer's velocity spread is below `1e-9` relative.
pub fn is_homogeneous(c_plane: &[f64]) -> bool {
    let min = c_plane.iter().copied().fold(f64::INFINITY, f64::min);
    let max = c_plane.iter().copied().fold(0.0, f64::max);
    max - min <= 1e-9 * max
}

/// Delay by `dz / c` at every point (exact Laguerre-domain transport).
pub fn transport_step_laguerre(w: &mut WavefieldLaguerre, c_plane: &[f64], dz: f64) -> Result<()> {
    if c_plane.len() != w.layout.len() {
        return Err(Error::shape("velocity plane does not match the wavefield"));
    }
    if !(dz >= 0.0) {
        return Err(Error::param(format!("depth step must be >= 0, got {dz}")));
    }
    if let Some(c) = c_plane.iter().find(|c| !(**c > 0.0)) {
        return Err(Error::param(format!(
            "velocity must be positive, found {c}"
        )));
    }
    let params = w.params;
    let mut kernels: HashMap<u64, ShiftOperator> = HashMap::new();
    for &c in c_plane {
        kernels
            .entry(c.to_bits())
            .or_insert_with(|| ShiftOperator::new(&params, params.count, dz / c));
    }
    w.planes
        .map_columns(HashMap::new, |p, col, scratches: &mut HashMap<u64, _>| {
            let key = c_plane[p].to_bits();
            let op = &kernels[&key];
            let scratch = scratches.entry(key).or_insert_with(|| op.scratch());
            let input = col.to_vec();
            op.apply(&input, col, scratch);
        });
    Ok(())
}

/// Transport followed by every diffraction term, each term starting from
/// the previous one's output.
pub fn split_step(
    w: &mut WavefieldLaguerre,
    c_plane: &[f64],
    pade: &PadeExpansion,
    dz: f64,
    solver: &SolverConfig,
) -> Result<usize> {
    transport_step_laguerre(w, c_plane, dz)?;
    let mut iters = 0;
    for (s, (&b, &g)) in pade.beta.iter().zip(&pade.gamma).enumerate() {
        iters = iters.max(diffraction_step(w, c_plane, b, g, dz, solver, s, 0)?);
    }
    Ok(iters)
}

/// `sum |u(x, y, t)|^2` over the plane.
pub fn wavefield_energy(w: &WavefieldLaguerre, t: f64) -> Result<f64> {
    Ok(w.synthesize_plane(t)?.iter().map(|v| v * v).sum())
}

/// Settings of a depth stepper.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolatorConfig {
    pub pade: PadeExpansion,
    pub solver: SolverConfig,
    /// Reference velocities for filtering (`b`); 0 disables filtering.
    pub filter_count: usize,
    pub taper_width: usize,
    /// Use the finite-difference path even on homogeneous layers.
    pub force_fd: bool,
}

impl Default for ExtrapolatorConfig {
    fn default() -> Self {
        Self {
            pade: PadeExpansion::standard(4).expect("order 4 is valid"),
            solver: SolverConfig::default(),
            filter_count: 2,
            taper_width: 0,
            force_fd: false,
        }
    }
}

/// Result of one depth step.
#[derive(Debug, Clone)]
pub struct StepReport {
    /// Fourier planes of the new field, used for imaging.
    pub fourier: WavefieldFourier,
    pub homogeneous: bool,
    pub max_cg_iterations: usize,
}

/// Depth stepper holding the per-grid precomputations.
pub struct Extrapolator {
    layout: Layout2D,
    params: LaguerreParams,
    bridge: Bridge,
    config: ExtrapolatorConfig,
    taper: Option<Vec<f64>>,
}

impl Extrapolator {
    pub fn new(
        layout: Layout2D,
        params: LaguerreParams,
        fourier_len: usize,
        config: ExtrapolatorConfig,
    ) -> Result<Self> {
        if config.filter_count > 4 {
            return Err(Error::param(format!(
                "filter velocity count must be 0 to 4, got {}",
                config.filter_count
            )));
        }
        let taper = (config.taper_width > 0).then(|| taper_weights(&layout, config.taper_width));
        Ok(Self {
            layout,
            params,
            bridge: Bridge::new(params, fourier_len)?,
            config,
            taper,
        })
    }

    pub fn layout(&self) -> &Layout2D {
        &self.layout
    }

    pub fn params(&self) -> &LaguerreParams {
        &self.params
    }

    pub fn bridge(&self) -> &Bridge {
        &self.bridge
    }

    pub fn config(&self) -> &ExtrapolatorConfig {
        &self.config
    }

    pub fn zero_field(&self) -> WavefieldLaguerre {
        WavefieldLaguerre::zeros(self.layout, self.params)
    }

    /// Fourier planes of a Laguerre field (no windowing).
    pub fn to_fourier(&self, w: &WavefieldLaguerre) -> WavefieldFourier {
        WavefieldFourier {
            layout: self.layout,
            window: self.params.window,
            omegas: self.bridge.omegas(),
            planes: self.bridge.to_fourier_planes(&w.planes),
        }
    }

    /// Periodicity-free Laguerre field of Fourier planes.
    pub fn to_laguerre(&self, f: &WavefieldFourier) -> WavefieldLaguerre {
        WavefieldLaguerre {
            layout: self.layout,
            params: self.params,
            planes: self.bridge.to_laguerre_planes(&f.planes),
        }
    }

    fn check(&self, w: &WavefieldLaguerre, c_plane: &[f64], dz: f64) -> Result<()> {
        if w.layout != self.layout || w.params != self.params {
            return Err(Error::shape(
                "wavefield grid differs from the extrapolator grid",
            ));
        }
        if c_plane.len() != self.layout.len() {
            return Err(Error::shape(format!(
                "velocity plane has {} values, layout has {}",
                c_plane.len(),
                self.layout.len()
            )));
        }
        if let Some(c) = c_plane.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::param(format!(
                "velocity must be positive, found {c}"
            )));
        }
        if !(dz > 0.0) {
            return Err(Error::param(format!(
                "depth step must be positive, got {dz}"
            )));
        }
        Ok(())
    }

    /// Advances `w` by `dz` through a layer with velocity `c_plane`.
    pub fn step(
        &self,
        w: &mut WavefieldLaguerre,
        c_plane: &[f64],
        dz: f64,
        layer: usize,
    ) -> Result<StepReport> {
        self.check(w, c_plane, dz)?;
        let homogeneous = !self.config.force_fd && is_homogeneous(c_plane);
        let mut max_cg_iterations = 0;
        if !homogeneous {
            let pade = &self.config.pade;
            for (s, (&b, &g)) in pade.beta.iter().zip(&pade.gamma).enumerate() {
                let it = diffraction_step(w, c_plane, b, g, dz, &self.config.solver, s, layer)?;
                max_cg_iterations = max_cg_iterations.max(it);
            }
        }
        self.bridge.q2_planes(&mut w.planes);
        let mut f = self.to_fourier(w);
        if homogeneous {
            homogeneous_layer_step(&mut f, c_plane[0], dz)?;
        } else {
            transport_step_fourier(&mut f, c_plane, dz)?;
            if self.config.filter_count > 0 {
                let bank = build_filter_velocities(c_plane, self.config.filter_count)?;
                filter_plane(&mut f, &bank, c_plane, dz)?;
            }
        }
        if let Some(taper) = &self.taper {
            for plane in f.planes.planes_mut() {
                apply_taper(plane, taper);
            }
        }
        w.planes = self.bridge.to_laguerre_planes(&f.planes);
        Ok(StepReport {
            fourier: f,
            homogeneous,
            max_cg_iterations,
        })
    }
}

/// Full seven-step update with a freshly built stepper.
pub fn algorithm1_step(
    w: &mut WavefieldLaguerre,
    c_plane: &[f64],
    dz: f64,
    fourier_len: usize,
    config: &ExtrapolatorConfig,
) -> Result<StepReport> {
    Extrapolator::new(w.layout, w.params, fourier_len, config.clone())?.step(w, c_plane, dz, 0)
}

/// Adds a point source with Laguerre coefficients `coeffs` at `(ix, iy)`.
/// With `smooth`, the source is spread over a 3 x 3 patch with weights
/// `[1/4, 1/2, 1/4]` per direction.
pub fn inject_source(
    w: &mut WavefieldLaguerre,
    ix: usize,
    iy: usize,
    coeffs: &[f64],
    smooth: bool,
) -> Result<()> {
    let layout = w.layout;
    if ix >= layout.nx || iy >= layout.ny {
        return Err(Error::param(format!(
            "source ({ix}, {iy}) outside the {} x {} grid",
            layout.nx, layout.ny
        )));
    }
    if coeffs.len() != w.params.count {
        return Err(Error::shape(format!(
            "source has {} coefficients, field has {}",
            coeffs.len(),
            w.params.count
        )));
    }
    let taps: &[(isize, f64)] = if smooth {
        &[(-1, 0.25), (0, 0.5), (1, 0.25)]
    } else {
        &[(0, 1.0)]
    };
    let ytaps: &[(isize, f64)] = if layout.is_3d() { taps } else { &[(0, 1.0)] };
    for &(oy, wy) in ytaps {
        for &(ox, wx) in taps {
            let (x, y) = (ix as isize + ox, iy as isize + oy);
            if x < 0 || y < 0 || x >= layout.nx as isize || y >= layout.ny as isize {
                continue;
            }
            let idx = layout.index(x as usize, y as usize);
            for (m, &c) in coeffs.iter().enumerate() {
                w.planes.plane_mut(m)[idx] += wx * wy * c;
            }
        }
    }
    Ok(())
}

/// Output of an impulse-response run.
#[derive(Debug, Clone)]
pub struct ImpulseResponse {
    /// Field at the snapshot time per depth, `nz + 1` planes starting at the
    /// surface.
    pub snapshots: Vec<Vec<f64>>,
    /// `sum |u|^2` of each snapshot plane.
    pub energy: Vec<f64>,
    /// Largest coefficient L2 norm seen per depth.
    pub norms: Vec<f64>,
    pub field: WavefieldLaguerre,
}

/// Extrapolates a surface source through every layer of `model`.
pub fn impulse_response(
    model: &VelocityModel,
    stepper: &Extrapolator,
    source: (usize, usize),
    wavelet_coeffs: &[f64],
    snapshot_time: f64,
) -> Result<ImpulseResponse> {
    let mut w = stepper.zero_field();
    inject_source(&mut w, source.0, source.1, wavelet_coeffs, false)?;
    let mut snapshots = Vec::with_capacity(model.nz + 1);
    let mut norms = Vec::with_capacity(model.nz + 1);
    snapshots.push(w.synthesize_plane(snapshot_time)?);
    norms.push(w.norm());
    for iz in 0..model.nz {
        stepper.step(&mut w, model.layer(iz), model.dz, iz)?;
        if !w.is_finite() {
            return Err(Error::param(format!(
                "wavefield became non-finite at layer {iz}"
            )));
        }
        snapshots.push(w.synthesize_plane(snapshot_time)?);
        norms.push(w.norm());
    }
    let energy = snapshots
        .iter()
        .map(|s| s.iter().map(|v| v * v).sum())
        .collect();
    Ok(ImpulseResponse {
        snapshots,
        energy,
        norms,
        field: w,
    })
}

#[cfg(test)]
mod tests;
