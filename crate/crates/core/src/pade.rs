//! Real rational approximations of the one-way square root
//! `sqrt(1 - X) ~ 1 - sum_s beta_s X / (1 - gamma_s X)`.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// `n` real partial-fraction terms.
#[derive(Debug, Clone, PartialEq)]
pub struct PadeExpansion {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl PadeExpansion {
    /// Closed-form family `beta_s = 2/(2n+1) sin^2(s pi/(2n+1))`,
    /// `gamma_s = cos^2(s pi/(2n+1))`. Matches the Taylor series of the
    /// square root through `X^(2n)`.
    pub fn standard(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("Padé order must be at least 1"));
        }
        let denom = (2 * n + 1) as f64;
        let (gamma, beta) = (1..=n)
            .map(|s| {
                let theta = s as f64 * std::f64::consts::PI / denom;
                (theta.cos().powi(2), 2.0 / denom * theta.sin().powi(2))
            })
            .unzip();
        Ok(Self { gamma, beta })
    }

    /// Least-squares fit of the relative error on `[0, x_max]`, started
    /// from [`PadeExpansion::standard`].
    ///
    /// Minimizes `sum_i (approx(X_i) / sqrt(1 - X_i) - 1)^2` on a dense grid
    /// by damped Gauss-Newton (Levenberg-Marquardt).
    pub fn least_squares(n: usize, x_max: f64) -> Result<Self> {
        if !(x_max > 0.0 && x_max < 1.0) {
            return Err(Error::param(format!(
                "fit interval end must lie in (0, 1), got {x_max}"
            )));
        }
        let start = Self::standard(n)?;
        let grid: Vec<f64> = (0..=400).map(|i| x_max * i as f64 / 400.0).collect();
        let mut params: Vec<f64> = start.beta.iter().chain(&start.gamma).copied().collect();
        let mut lambda = 1e-3;
        let mut cost = fit_cost(&params, &grid, n);
        for _ in 0..500 {
            let (r, jac) = fit_residuals(&params, &grid, n);
            let j = DMatrix::from_row_slice(grid.len(), 2 * n, &jac);
            let r = DVector::from_vec(r);
            let jtj = j.transpose() * &j;
            let jtr = j.transpose() * r;
            let mut improved = false;
            for _ in 0..30 {
                let mut a = jtj.clone();
                for d in 0..2 * n {
                    a[(d, d)] += lambda * (jtj[(d, d)] + 1e-30);
                }
                let Some(step) = a.lu().solve(&(-&jtr)) else {
                    lambda *= 10.0;
                    continue;
                };
                let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
                let feasible = trial[n..].iter().all(|&g| g > 0.0 && g * x_max < 1.0);
                let trial_cost = if feasible {
                    fit_cost(&trial, &grid, n)
                } else {
                    f64::INFINITY
                };
                if trial_cost < cost {
                    let rel = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                    params = trial;
                    cost = trial_cost;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = rel > 1e-14;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }
        Ok(Self {
            beta: params[..n].to_vec(),
            gamma: params[n..].to_vec(),
        })
    }

    pub fn order(&self) -> usize {
        self.gamma.len()
    }

    /// `1 - sum_s beta_s X / (1 - gamma_s X)`.
    pub fn approximate(&self, x: f64) -> f64 {
        1.0 - self
            .beta
            .iter()
            .zip(&self.gamma)
            .map(|(b, g)| b * x / (1.0 - g * x))
            .sum::<f64>()
    }

    /// Pole locations `X = 1 / gamma_s`.
    pub fn poles(&self) -> Vec<f64> {
        self.gamma.iter().map(|g| 1.0 / g).collect()
    }

    /// `sqrt(1 - X) - approximate(X)` on each grid point.
    pub fn dispersion_error(&self, grid: &[f64]) -> Result<Vec<f64>> {
        grid.iter()
            .map(|&x| {
                if !(0.0..1.0).contains(&x) {
                    return Err(Error::param(format!("grid point {x} outside [0, 1)")));
                }
                if self.gamma.iter().any(|g| (1.0 - g * x).abs() < 1e-12) {
                    return Err(Error::param(format!("grid point {x} sits on a pole")));
                }
                Ok((1.0 - x).sqrt() - self.approximate(x))
            })
            .collect()
    }
}

fn fit_residuals(params: &[f64], grid: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let (beta, gamma) = params.split_at(n);
    let mut r = Vec::with_capacity(grid.len());
    let mut jac = Vec::with_capacity(grid.len() * 2 * n);
    for &x in grid {
        let w = 1.0 / (1.0 - x).sqrt();
        let mut approx = 1.0;
        for s in 0..n {
            approx -= beta[s] * x / (1.0 - gamma[s] * x);
        }
        r.push(approx * w - 1.0);
        for s in 0..n {
            jac.push(-x / (1.0 - gamma[s] * x) * w);
        }
        for s in 0..n {
            let d = 1.0 - gamma[s] * x;
            jac.push(-beta[s] * x * x / (d * d) * w);
        }
    }
    (r, jac)
}

fn fit_cost(params: &[f64], grid: &[f64], n: usize) -> f64 {
    let (beta, gamma) = params.split_at(n);
    grid.iter()
        .map(|&x| {
            let approx = 1.0
                - (0..n)
                    .map(|s| beta[s] * x / (1.0 - gamma[s] * x))
                    .sum::<f64>();
            (approx / (1.0 - x).sqrt() - 1.0).powi(2)
        })
        .sum()
}
