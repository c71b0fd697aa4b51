//! Crank–Nicolson solve of one rational diffraction term in the Laguerre
//! domain.
//!
//! With `X = -(c/omega)^2 L`, the term `u_z = -(i omega / c) beta X u / (1 - gamma X)`
//! becomes, for an `exp(-i omega t)` time dependence,
//!
//! ```text
//! (1/c^2) d_tt u_z - gamma L u_z - (beta/c) L d_t u = 0.
//! ```
//!
//! In Laguerre coefficients `d_t -> eta/2 + Phi_1` and
//! `d_tt -> eta^2/4 + Phi_2`. Centering in depth with `D = U1 - U0` and
//! `A = U1 + U0` and collecting the `U1^m` terms gives
//!
//! ```text
//! (d - L) U1^m = [ q U0^m + (beta eta/(4c) - gamma/dz) L U0^m
//!                  + (beta eta/(2c)) L P^m - (eta^2/(c^2 dz)) T^m ] / g
//! ```
//!
//! with `g = gamma/dz + beta eta/(4c)`, `q = eta^2/(4 c^2 dz)`, `d = q/g`,
//! `P^m = sum_{k<m} A^k` and `T^m = sum_{k<m} (m-k) D^k`. Only indices below
//! `m` appear on the right, so the coefficients are solved in increasing `m`.

use crate::linsolve::{LayerOperator, SolverConfig};
use crate::stencil::apply_l_unchecked;
use crate::{Error, Result};

use super::WavefieldLaguerre;

/// Per-point Neumaier sums over whole planes.
struct CompensatedPlane {
    sum: Vec<f64>,
    carry: Vec<f64>,
}

impl CompensatedPlane {
    fn zeros(n: usize) -> Self {
        Self {
            sum: vec![0.0; n],
            carry: vec![0.0; n],
        }
    }

    fn add(&mut self, v: &[f64]) {
        for ((s, c), &x) in self.sum.iter_mut().zip(&mut self.carry).zip(v) {
            let t = *s + x;
            if s.abs() >= x.abs() {
                *c += (*s - t) + x;
            } else {
                *c += (x - t) + *s;
            }
            *s = t;
        }
    }

    fn value_into(&self, out: &mut [f64]) {
        for ((o, s), c) in out.iter_mut().zip(&self.sum).zip(&self.carry) {
            *o = s + c;
        }
    }
}

/// Solves one diffraction term over a depth step in place. Returns the
/// largest CG iteration count over all coefficients.
#[allow(clippy::too_many_arguments)]
pub fn diffraction_step(
    w: &mut WavefieldLaguerre,
    c_plane: &[f64],
    beta: f64,
    gamma: f64,
    dz: f64,
    solver: &SolverConfig,
    term: usize,
    layer: usize,
) -> Result<usize> {
    let npts = w.layout.len();
    if c_plane.len() != npts {
        return Err(Error::shape(format!(
            "velocity plane has {} values, wavefield has {npts}",
            c_plane.len()
        )));
    }
    if !(dz > 0.0) {
        return Err(Error::param(format!(
            "depth step must be positive, got {dz}"
        )));
    }
    if !(beta > 0.0 && gamma >= 0.0) {
        return Err(Error::param(format!(
            "bad Padé term beta={beta} gamma={gamma}"
        )));
    }
    let eta = w.params.eta;
    let mut q = Vec::with_capacity(npts);
    let mut a_l0 = Vec::with_capacity(npts);
    let mut a_p = Vec::with_capacity(npts);
    let mut a_t = Vec::with_capacity(npts);
    let mut inv_g = Vec::with_capacity(npts);
    let mut diag = Vec::with_capacity(npts);
    for &c in c_plane {
        let g = gamma / dz + beta * eta / (4.0 * c);
        let qv = eta * eta / (4.0 * c * c * dz);
        q.push(qv);
        a_l0.push(beta * eta / (4.0 * c) - gamma / dz);
        a_p.push(beta * eta / (2.0 * c));
        a_t.push(eta * eta / (c * c * dz));
        inv_g.push(1.0 / g);
        diag.push(qv / g);
    }
    let op = LayerOperator::new(w.layout, diag)?;

    let mut p_sum = CompensatedPlane::zeros(npts);
    let mut s1 = CompensatedPlane::zeros(npts);
    let mut t_sum = CompensatedPlane::zeros(npts);
    let mut s1_val = vec![0.0; npts];
    let mut t_val = vec![0.0; npts];
    let mut p_val = vec![0.0; npts];
    let mut l_u0 = vec![0.0; npts];
    let mut l_p = vec![0.0; npts];
    let mut rhs = vec![0.0; npts];
    let mut diff = vec![0.0; npts];
    let mut max_iter = 0;
    for m in 0..w.params.count {
        s1.value_into(&mut s1_val);
        t_sum.add(&s1_val);
        t_sum.value_into(&mut t_val);
        p_sum.value_into(&mut p_val);
        let u0 = w.planes.plane(m);
        apply_l_unchecked(u0, &mut l_u0, &w.layout);
        apply_l_unchecked(&p_val, &mut l_p, &w.layout);
        for i in 0..npts {
            rhs[i] =
                (q[i] * u0[i] + a_l0[i] * l_u0[i] + a_p[i] * l_p[i] - a_t[i] * t_val[i]) * inv_g[i];
        }
        let (u1, iters) = solver.solve(&op, &rhs).map_err(|e| Error::Diffraction {
            m,
            term,
            layer,
            source: Box::new(e),
        })?;
        max_iter = max_iter.max(iters);
        let u0 = w.planes.plane_mut(m);
        for i in 0..npts {
            diff[i] = u1[i] - u0[i];
            // reuse l_p as the A plane
            l_p[i] = u1[i] + u0[i];
            u0[i] = u1[i];
        }
        p_sum.add(&l_p);
        s1.add(&diff);
    }
    Ok(max_iter)
}
