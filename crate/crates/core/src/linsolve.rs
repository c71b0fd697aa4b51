//! Conjugate gradients for the per-layer systems `(d - L) u = f` and the
//! buffer-zone domain decomposition built on it.

use rayon::prelude::*;

use crate::stencil::{apply_l_unchecked, Layout2D};
use crate::{Error, Result};

/// `u -> d(x, y) u - L u`, symmetric positive definite for `d > 0`.
#[derive(Debug, Clone)]
pub struct LayerOperator {
    pub layout: Layout2D,
    pub diag: Vec<f64>,
    /// When false the operator is just the diagonal.
    pub laplacian: bool,
}

impl LayerOperator {
    pub fn new(layout: Layout2D, diag: Vec<f64>) -> Result<Self> {
        if diag.len() != layout.len() {
            return Err(Error::shape(format!(
                "diagonal has {} values, layout has {}",
                diag.len(),
                layout.len()
            )));
        }
        if let Some(bad) = diag.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::param(format!(
                "diagonal must be positive and finite, found {bad}"
            )));
        }
        Ok(Self {
            layout,
            diag,
            laplacian: true,
        })
    }

    pub fn diagonal_only(layout: Layout2D, diag: Vec<f64>) -> Result<Self> {
        let mut op = Self::new(layout, diag)?;
        op.laplacian = false;
        Ok(op)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        if self.laplacian {
            apply_l_unchecked(u, out, &self.layout);
            for ((o, &d), &v) in out.iter_mut().zip(&self.diag).zip(u) {
                *o = d * v - *o;
            }
        } else {
            for ((o, &d), &v) in out.iter_mut().zip(&self.diag).zip(u) {
                *o = d * v;
            }
        }
    }

    /// The operator restricted to the rectangle `[x0, x1) x [y0, y1)` with
    /// zero values outside it.
    fn restrict(&self, x0: usize, x1: usize, y0: usize, y1: usize) -> Self {
        let nx = self.layout.nx;
        let mut layout = self.layout;
        layout.nx = x1 - x0;
        layout.ny = y1 - y0;
        let mut diag = Vec::with_capacity(layout.len());
        for iy in y0..y1 {
            diag.extend_from_slice(&self.diag[iy * nx + x0..iy * nx + x1]);
        }
        Self {
            layout,
            diag,
            laplacian: self.laplacian,
        }
    }
}

/// Outcome of a converged CG run.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Final `||r|| / ||f||`.
    pub residual: f64,
    /// Relative residual after each iteration, starting with 1.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unpreconditioned CG from a zero initial guess, stopping at
/// `||r|| <= eps ||f||`.
pub fn cg_solve(op: &LayerOperator, rhs: &[f64], eps: f64, maxiter: usize) -> Result<CgOutcome> {
    if rhs.len() != op.len() {
        return Err(Error::shape(format!(
            "rhs has {} values, operator has {}",
            rhs.len(),
            op.len()
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::param(format!(
            "tolerance must be positive, got {eps}"
        )));
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("rhs contains non-finite values"));
    }
    let n = rhs.len();
    let fnorm = dot(rhs, rhs).sqrt();
    let mut x = vec![0.0; n];
    if fnorm == 0.0 {
        return Ok(CgOutcome {
            solution: x,
            iterations: 0,
            residual: 0.0,
            history: vec![0.0],
        });
    }
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = fnorm * fnorm;
    let mut history = vec![1.0];
    for it in 1..=maxiter {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: rr.sqrt() / fnorm,
            });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let rel = rr_new.sqrt() / fnorm;
        history.push(rel);
        if rel <= eps {
            return Ok(CgOutcome {
                solution: x,
                iterations: it,
                residual: rel,
                history,
            });
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: maxiter,
        residual: rr.sqrt() / fnorm,
    })
}

/// Non-overlapping `px x py` tiling with a buffer ring around each tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DDMConfig {
    pub px: usize,
    pub py: usize,
    pub buffer: usize,
}

impl Default for DDMConfig {
    fn default() -> Self {
        Self {
            px: 1,
            py: 1,
            buffer: 8,
        }
    }
}

impl DDMConfig {
    pub fn new(px: usize, py: usize, buffer: usize) -> Result<Self> {
        if px == 0 || py == 0 {
            return Err(Error::param(format!(
                "subdomain counts must be positive, got {px} x {py}"
            )));
        }
        Ok(Self { px, py, buffer })
    }

    pub fn is_trivial(&self) -> bool {
        self.px == 1 && self.py == 1
    }
}

/// Outcome of a decomposed solve.
#[derive(Debug, Clone)]
pub struct DdmOutcome {
    pub solution: Vec<f64>,
    /// Largest CG iteration count over subdomains.
    pub max_iterations: usize,
    /// Iterations per subdomain, `x` fastest.
    pub iterations: Vec<usize>,
}

/// Near-equal split of `0..n` into `parts` ranges.
fn split(n: usize, parts: usize) -> Vec<(usize, usize)> {
    (0..parts)
        .map(|i| (i * n / parts, (i + 1) * n / parts))
        .collect()
}

/// Each tile is extended by `buffer` nodes (clipped at the grid edge),
/// solved with the rhs zeroed outside the tile, and all local solutions are
/// summed onto the global grid.
pub fn ddm_solve(
    op: &LayerOperator,
    rhs: &[f64],
    cfg: &DDMConfig,
    eps: f64,
    maxiter: usize,
) -> Result<DdmOutcome> {
    if rhs.len() != op.len() {
        return Err(Error::shape(format!(
            "rhs has {} values, operator has {}",
            rhs.len(),
            op.len()
        )));
    }
    let layout = op.layout;
    if cfg.px == 0 || cfg.py == 0 || cfg.px > layout.nx || cfg.py > layout.ny {
        return Err(Error::param(format!(
            "cannot split {} x {} into {} x {} subdomains",
            layout.nx, layout.ny, cfg.px, cfg.py
        )));
    }
    if cfg.is_trivial() {
        let out = cg_solve(op, rhs, eps, maxiter)?;
        return Ok(DdmOutcome {
            max_iterations: out.iterations,
            iterations: vec![out.iterations],
            solution: out.solution,
        });
    }
    let xs = split(layout.nx, cfg.px);
    let ys = split(layout.ny, cfg.py);
    let min_x = xs.iter().map(|(a, b)| b - a).min().unwrap_or(0);
    let min_y = ys.iter().map(|(a, b)| b - a).min().unwrap_or(0);
    if (cfg.px > 1 && cfg.buffer > min_x) || (cfg.py > 1 && cfg.buffer > min_y) {
        return Err(Error::param(format!(
            "buffer {} exceeds the smallest subdomain extent ({} x {})",
            cfg.buffer, min_x, min_y
        )));
    }
    let tiles: Vec<((usize, usize), (usize, usize))> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
        .collect();
    let nx = layout.nx;
    // Each entry: extended tile bounds `(x0, x1, y0, y1)` and its solve.
    type Local = ((usize, usize, usize, usize), CgOutcome);
    let locals: Vec<Result<Local>> = tiles
        .par_iter()
        .map(|&((tx0, tx1), (ty0, ty1))| {
            let x0 = tx0.saturating_sub(cfg.buffer);
            let x1 = (tx1 + cfg.buffer).min(layout.nx);
            let (y0, y1) = if layout.ny > 1 {
                (
                    ty0.saturating_sub(cfg.buffer),
                    (ty1 + cfg.buffer).min(layout.ny),
                )
            } else {
                (0, 1)
            };
            let local = op.restrict(x0, x1, y0, y1);
            let lnx = x1 - x0;
            let mut local_rhs = vec![0.0; local.len()];
            for iy in ty0..ty1 {
                for ix in tx0..tx1 {
                    local_rhs[(iy - y0) * lnx + (ix - x0)] = rhs[iy * nx + ix];
                }
            }
            let out = cg_solve(&local, &local_rhs, eps, maxiter)?;
            Ok(((x0, x1, y0, y1), out))
        })
        .collect();
    let mut solution = vec![0.0; rhs.len()];
    let mut iterations = Vec::with_capacity(tiles.len());
    for local in locals {
        let ((x0, x1, y0, y1), out) = local?;
        let lnx = x1 - x0;
        for iy in y0..y1 {
            for ix in x0..x1 {
                solution[iy * nx + ix] += out.solution[(iy - y0) * lnx + (ix - x0)];
            }
        }
        iterations.push(out.iterations);
    }
    Ok(DdmOutcome {
        max_iterations: iterations.iter().copied().max().unwrap_or(0),
        iterations,
        solution,
    })
}

/// Either a global CG solve or a decomposed one, by configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub eps: f64,
    pub maxiter: usize,
    pub ddm: DDMConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            maxiter: 1000,
            ddm: DDMConfig::default(),
        }
    }
}

impl SolverConfig {
    /// Solution and the (max subdomain) iteration count.
    pub fn solve(&self, op: &LayerOperator, rhs: &[f64]) -> Result<(Vec<f64>, usize)> {
        if self.ddm.is_trivial() {
            let out = cg_solve(op, rhs, self.eps, self.maxiter)?;
            Ok((out.solution, out.iterations))
        } else {
            let out = ddm_solve(op, rhs, &self.ddm, self.eps, self.maxiter)?;
            Ok((out.solution, out.max_iterations))
        }
    }
}
