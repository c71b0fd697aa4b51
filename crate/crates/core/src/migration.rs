//! Shot-record migration with crosscorrelation and deconvolution imaging.
//!
//! The source field starts from the wavelet at the source node. The
//! receiver field starts from the time-reversed records (conjugated
//! spectra), is continued downward with the same stepper, and is conjugated
//! back at every depth, which turns downward delay into upward advance.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::extrapolator::{inject_source, Extrapolator, VelocityModel, WavefieldFourier};
use crate::stencil::Layout2D;
use crate::{Error, Result};

/// One shot: a source wavelet and the traces recorded at surface nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotGather {
    /// Source node `(ix, iy)`.
    pub source: (usize, usize),
    /// Source wavelet samples on `[0, L)`.
    pub wavelet: Vec<f64>,
    /// Receiver nodes `(ix, iy)`.
    pub receivers: Vec<(usize, usize)>,
    /// One trace per receiver, same sampling as the wavelet.
    pub traces: Vec<Vec<f64>>,
    /// Time window `L` in seconds.
    pub window: f64,
}

impl ShotGather {
    pub fn dt(&self) -> f64 {
        self.window / self.wavelet.len() as f64
    }

    pub fn validate(&self, layout: &Layout2D) -> Result<()> {
        let n = self.wavelet.len();
        if n == 0 {
            return Err(Error::param("empty source wavelet"));
        }
        if self.receivers.len() != self.traces.len() {
            return Err(Error::shape(format!(
                "{} receivers but {} traces",
                self.receivers.len(),
                self.traces.len()
            )));
        }
        if let Some(t) = self.traces.iter().find(|t| t.len() != n) {
            return Err(Error::shape(format!(
                "trace has {} samples, wavelet has {n}",
                t.len()
            )));
        }
        let inside = |&(x, y): &(usize, usize)| x < layout.nx && y < layout.ny;
        if !inside(&self.source) {
            return Err(Error::param(format!(
                "source {:?} outside the model",
                self.source
            )));
        }
        if let Some(r) = self.receivers.iter().find(|r| !inside(r)) {
            return Err(Error::param(format!("receiver {r:?} outside the model")));
        }
        Ok(())
    }
}

/// Image grids on the model mesh, depth index `iz` at depth `iz * dz`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageAccumulator {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Crosscorrelation image.
    pub ic: Vec<f64>,
    /// Deconvolution image.
    pub id: Vec<f64>,
}

/// Lower bound of the deconvolution regularization.
pub const EPS_FLOOR: f64 = 1e-300;

/// Relative size of the deconvolution regularization.
pub const EPS_RELATIVE: f64 = 1e-3;

impl ImageAccumulator {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Self {
            nx,
            ny,
            nz,
            ic: vec![0.0; nx * ny * nz],
            id: vec![0.0; nx * ny * nz],
        }
    }

    pub fn plane_len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn ic_plane(&self, iz: usize) -> &[f64] {
        let n = self.plane_len();
        &self.ic[iz * n..(iz + 1) * n]
    }

    pub fn id_plane(&self, iz: usize) -> &[f64] {
        let n = self.plane_len();
        &self.id[iz * n..(iz + 1) * n]
    }

    /// Adds another accumulator of the same shape.
    pub fn merge(&mut self, other: &ImageAccumulator) -> Result<()> {
        if (self.nx, self.ny, self.nz) != (other.nx, other.ny, other.nz) {
            return Err(Error::shape("image grids differ"));
        }
        for (a, b) in self.ic.iter_mut().zip(&other.ic) {
            *a += b;
        }
        for (a, b) in self.id.iter_mut().zip(&other.id) {
            *a += b;
        }
        Ok(())
    }

    fn check(&self, iz: usize, len: usize) -> Result<()> {
        if iz >= self.nz {
            return Err(Error::param(format!(
                "depth index {iz} beyond {} layers",
                self.nz
            )));
        }
        if len != self.plane_len() {
            return Err(Error::shape(format!(
                "plane has {len} values, image has {}",
                self.plane_len()
            )));
        }
        Ok(())
    }
}

/// `I_c += Re(R conj(S))` for one frequency plane at depth `iz`.
pub fn imaging_ic(
    s: &[Complex64],
    r: &[Complex64],
    acc: &mut ImageAccumulator,
    iz: usize,
) -> Result<()> {
    acc.check(iz, s.len())?;
    acc.check(iz, r.len())?;
    let n = acc.plane_len();
    for ((img, sv), rv) in acc.ic[iz * n..(iz + 1) * n].iter_mut().zip(s).zip(r) {
        *img += (rv * sv.conj()).re;
    }
    Ok(())
}

/// Regularization `max(1e-3 max |S|^2, floor)` over all points and planes.
pub fn deconvolution_eps(s_planes: &[&[Complex64]]) -> f64 {
    let peak = s_planes
        .iter()
        .flat_map(|p| p.iter())
        .map(|v| v.norm_sqr())
        .fold(0.0, f64::max);
    (EPS_RELATIVE * peak).max(EPS_FLOOR)
}

/// `I_d += sum_p Re(R conj(S) / (|S|^2 + eps))` at depth `iz`.
pub fn imaging_id(
    s_planes: &[&[Complex64]],
    r_planes: &[&[Complex64]],
    acc: &mut ImageAccumulator,
    iz: usize,
) -> Result<f64> {
    if s_planes.len() != r_planes.len() {
        return Err(Error::shape(format!(
            "{} source planes but {} receiver planes",
            s_planes.len(),
            r_planes.len()
        )));
    }
    for (s, r) in s_planes.iter().zip(r_planes) {
        acc.check(iz, s.len())?;
        acc.check(iz, r.len())?;
    }
    let eps = deconvolution_eps(s_planes);
    let n = acc.plane_len();
    let img = &mut acc.id[iz * n..(iz + 1) * n];
    for (s, r) in s_planes.iter().zip(r_planes) {
        for ((o, sv), rv) in img.iter_mut().zip(s.iter()).zip(r.iter()) {
            *o += (rv * sv.conj()).re / (sv.norm_sqr() + eps);
        }
    }
    Ok(eps)
}

fn image_depth(
    acc: &mut ImageAccumulator,
    s: &WavefieldFourier,
    r: &WavefieldFourier,
    iz: usize,
) -> Result<()> {
    let sp: Vec<&[Complex64]> = s.planes.planes().collect();
    let rp: Vec<&[Complex64]> = r.planes.planes().collect();
    for (a, b) in sp.iter().zip(&rp) {
        imaging_ic(a, b, acc, iz)?;
    }
    imaging_id(&sp, &rp, acc, iz)?;
    Ok(())
}

fn conjugate(f: &mut WavefieldFourier) {
    for v in f.planes.as_mut_slice() {
        *v = v.conj();
    }
}

fn check_geometry(model: &VelocityModel, stepper: &Extrapolator) -> Result<()> {
    let l = stepper.layout();
    if l.nx != model.nx || l.ny != model.ny {
        return Err(Error::shape(format!(
            "stepper grid {} x {} differs from model {} x {}",
            l.nx, l.ny, model.nx, model.ny
        )));
    }
    Ok(())
}

/// Continues the source and receiver fields of one shot through the model,
/// calling `sink(iz, S, R)` with the Fourier planes at every depth.
pub fn extrapolate_shot(
    gather: &ShotGather,
    model: &VelocityModel,
    stepper: &Extrapolator,
    mut sink: impl FnMut(usize, &WavefieldFourier, &WavefieldFourier) -> Result<()>,
) -> Result<()> {
    check_geometry(model, stepper)?;
    let layout = *stepper.layout();
    gather.validate(&layout)?;
    let bridge = stepper.bridge();
    if gather.wavelet.len() != bridge.fourier_len() {
        return Err(Error::shape(format!(
            "gather has {} samples, stepper expects {}",
            gather.wavelet.len(),
            bridge.fourier_len()
        )));
    }
    if (gather.window - stepper.params().window).abs() > 1e-9 * stepper.params().window {
        return Err(Error::shape(format!(
            "gather window {} differs from the stepper window {}",
            gather.window,
            stepper.params().window
        )));
    }
    let mut s = stepper.zero_field();
    let wavelet = bridge.expand(&gather.wavelet)?;
    inject_source(&mut s, gather.source.0, gather.source.1, &wavelet, false)?;

    let n = gather.wavelet.len();
    let mut r = stepper.zero_field();
    for (&(ix, iy), trace) in gather.receivers.iter().zip(&gather.traces) {
        if trace.iter().all(|v| *v == 0.0) {
            continue;
        }
        // Circular reversal: conjugates the DFT of a real trace.
        let reversed: Vec<f64> = (0..n).map(|i| trace[(n - i) % n]).collect();
        let coeffs = bridge.expand(&reversed)?;
        inject_source(&mut r, ix, iy, &coeffs, false)?;
    }

    let mut s_f = stepper.to_fourier(&s);
    let mut r_f = stepper.to_fourier(&r);
    conjugate(&mut r_f);
    sink(0, &s_f, &r_f)?;
    for iz in 1..model.nz {
        let c = model.layer(iz - 1);
        s_f = stepper.step(&mut s, c, model.dz, iz - 1)?.fourier;
        r_f = stepper.step(&mut r, c, model.dz, iz - 1)?.fourier;
        conjugate(&mut r_f);
        sink(iz, &s_f, &r_f)?;
    }
    Ok(())
}

/// Images of one shot.
pub fn migrate_shot(
    gather: &ShotGather,
    model: &VelocityModel,
    stepper: &Extrapolator,
) -> Result<ImageAccumulator> {
    let mut acc = ImageAccumulator::new(model.nx, model.ny, model.nz);
    extrapolate_shot(gather, model, stepper, |iz, s, r| {
        image_depth(&mut acc, s, r, iz)
    })?;
    Ok(acc)
}

/// Images of all shots, run in parallel and summed in shot order.
pub fn migrate(
    gathers: &[ShotGather],
    model: &VelocityModel,
    stepper: &Extrapolator,
) -> Result<ImageAccumulator> {
    let images: Vec<Result<ImageAccumulator>> = gathers
        .par_iter()
        .map(|g| migrate_shot(g, model, stepper))
        .collect();
    let mut acc = ImageAccumulator::new(model.nx, model.ny, model.nz);
    for img in images {
        acc.merge(&img?)?;
    }
    Ok(acc)
}

/// Primary reflection from a flat interface at depth index `reflector_iz`.
///
/// The source field is continued down to the reflector, scaled by
/// `reflectivity`, and continued back up through the same layers in
/// reverse order (one-way propagation is symmetric in a layered medium).
/// Traces are recorded at `receivers`.
pub fn synthesize_flat_reflector(
    model: &VelocityModel,
    stepper: &Extrapolator,
    source: (usize, usize),
    wavelet: &[f64],
    receivers: &[(usize, usize)],
    reflector_iz: usize,
    reflectivity: f64,
) -> Result<ShotGather> {
    check_geometry(model, stepper)?;
    if reflector_iz == 0 || reflector_iz >= model.nz {
        return Err(Error::param(format!(
            "reflector index {reflector_iz} must lie in 1..{}",
            model.nz
        )));
    }
    let bridge = stepper.bridge();
    let mut w = stepper.zero_field();
    inject_source(&mut w, source.0, source.1, &bridge.expand(wavelet)?, false)?;
    for iz in 0..reflector_iz {
        stepper.step(&mut w, model.layer(iz), model.dz, iz)?;
    }
    for v in w.planes.as_mut_slice() {
        *v *= reflectivity;
    }
    let mut last = None;
    for iz in (0..reflector_iz).rev() {
        last = Some(stepper.step(&mut w, model.layer(iz), model.dz, iz)?.fourier);
    }
    let f = last.expect("at least one layer");
    let layout = stepper.layout();
    let traces = receivers
        .iter()
        .map(|&(ix, iy)| {
            let p = layout.index(ix, iy);
            let column: Vec<Complex64> = f.planes.planes().map(|plane| plane[p]).collect();
            bridge.fourier_column_to_samples(&column)
        })
        .collect();
    Ok(ShotGather {
        source,
        wavelet: wavelet.to_vec(),
        receivers: receivers.to_vec(),
        traces,
        window: stepper.params().window,
    })
}
