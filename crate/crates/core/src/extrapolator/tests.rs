use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::*;
use crate::bridge::Bridge;
use crate::laguerre::{phi1, phi2, LaguerreSpectrum};
use crate::stencil::apply_l_new;

fn ricker(t: f64, f: f64, t0: f64) -> f64 {
    let a = (PI * f * (t - t0)).powi(2);
    (1.0 - 2.0 * a) * (-a).exp()
}

fn trace(n: usize, window: f64, f: f64, t0: f64) -> Vec<f64> {
    (0..n)
        .map(|i| ricker(i as f64 * window / n as f64, f, t0))
        .collect()
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

#[test]
fn zero_depth_transport_is_identity() {
    let params = LaguerreParams::new(100.0, 32, 1.0).unwrap();
    let layout = Layout2D::section(3, 10.0).unwrap();
    let mut w = WavefieldLaguerre::zeros(layout, params);
    for m in 0..32 {
        w.planes
            .plane_mut(m)
            .copy_from_slice(&[m as f64, -1.0, 0.5 * m as f64]);
    }
    let before = w.clone();
    transport_step_laguerre(&mut w, &[1500.0, 2000.0, 2500.0], 0.0).unwrap();
    for (a, b) in w.planes.as_slice().iter().zip(before.planes.as_slice()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn laguerre_transport_delays_the_signal() {
    let (n, window) = (256, 1.0);
    let params = LaguerreParams::new(600.0, 512, window).unwrap();
    let bridge = Bridge::new(params, n).unwrap();
    let coeffs = bridge.expand(&trace(n, window, 20.0, 0.1)).unwrap();
    let layout = Layout2D::section(2, 10.0).unwrap();
    let mut w = WavefieldLaguerre::zeros(layout, params);
    for (m, c) in coeffs.iter().enumerate() {
        w.planes.plane_mut(m).copy_from_slice(&[*c, *c]);
    }
    let (c1, c2, dz) = (2000.0, 4000.0, 200.0);
    transport_step_laguerre(&mut w, &[c1, c2], dz).unwrap();
    let times: Vec<f64> = (0..n).map(|i| i as f64 * window / n as f64).collect();
    for (pt, c) in [(0, c1), (1, c2)] {
        let spec = LaguerreSpectrum::new(params, w.planes.column(pt)).unwrap();
        let got = spec.synthesize(&times).unwrap();
        let want: Vec<f64> = times
            .iter()
            .map(|&t| ricker(t, 20.0, 0.1 + dz / c))
            .collect();
        let err = got
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "c={c} err={err}");
    }
}

#[test]
fn laguerre_and_fourier_transport_agree() {
    let (n, window) = (128, 0.5);
    let params = LaguerreParams::new(600.0, 256, window).unwrap();
    let layout = Layout2D::section(3, 10.0).unwrap();
    let stepper = Extrapolator::new(layout, params, n, ExtrapolatorConfig::default()).unwrap();
    let coeffs = stepper
        .bridge()
        .expand(&trace(n, window, 20.0, 0.08))
        .unwrap();
    let mut w = stepper.zero_field();
    for (m, c) in coeffs.iter().enumerate() {
        w.planes.plane_mut(m).copy_from_slice(&[*c, 0.5 * c, -c]);
    }
    let c_plane = [1800.0, 2500.0, 3000.0];
    let mut f = stepper.to_fourier(&w);
    transport_step_fourier(&mut f, &c_plane, 150.0).unwrap();
    let via_fourier = stepper.to_laguerre(&f);
    transport_step_laguerre(&mut w, &c_plane, 150.0).unwrap();
    let err = rel_l2(via_fourier.planes.as_slice(), w.planes.as_slice());
    assert!(err < 1e-3, "{err}");
}

fn fourier_field(
    layout: Layout2D,
    omegas: Vec<f64>,
    fill: impl Fn(usize, usize) -> Complex64,
) -> WavefieldFourier {
    let n = omegas.len();
    let mut planes = PlaneStack::zeros(n, layout.len());
    for p in 0..n {
        for (i, v) in planes.plane_mut(p).iter_mut().enumerate() {
            *v = fill(p, i);
        }
    }
    WavefieldFourier {
        layout,
        window: 1.0,
        omegas,
        planes,
    }
}

#[test]
fn fourier_transport_is_unimodular_and_additive() {
    let layout = Layout2D::section(4, 10.0).unwrap();
    let omegas = vec![-20.0, 0.0, 35.0];
    let make = || {
        fourier_field(layout, omegas.clone(), |p, i| {
            Complex64::new(1.0 + p as f64, i as f64 - 1.5)
        })
    };
    let c = [1500.0, 2000.0, 2500.0, 3000.0];
    let mut one = make();
    transport_step_fourier(&mut one, &c, 40.0).unwrap();
    let mut two = make();
    transport_step_fourier(&mut two, &c, 20.0).unwrap();
    transport_step_fourier(&mut two, &c, 20.0).unwrap();
    let orig = make();
    for ((a, b), o) in one
        .planes
        .as_slice()
        .iter()
        .zip(two.planes.as_slice())
        .zip(orig.planes.as_slice())
    {
        assert!((a.norm() - o.norm()).abs() < 1e-12);
        assert!((a - b).norm() < 1e-12);
    }
    assert_eq!(one.planes.plane(1), orig.planes.plane(1));
}

#[test]
fn homogeneous_step_phase_and_magnitude() {
    let nx = 32;
    let layout = Layout2D::section(nx, 10.0).unwrap();
    let omega = 2.0 * PI * 25.0;
    let chi = 2000.0;
    let dz = 10.0;
    // vertical plane wave
    let mut f = fourier_field(layout, vec![omega], |_, _| Complex64::new(1.0, 0.0));
    homogeneous_layer_step(&mut f, chi, dz).unwrap();
    let want = Complex64::from_polar(1.0, omega * dz / chi);
    assert!(f.planes.plane(0).iter().all(|v| (v - want).norm() < 1e-12));
    // tilted propagating mode keeps its magnitude
    let k = 2.0 * PI * 3.0 / (nx as f64 * 10.0);
    let mut f = fourier_field(layout, vec![omega], |_, i| {
        Complex64::from_polar(1.0, k * i as f64 * 10.0)
    });
    homogeneous_layer_step(&mut f, chi, dz).unwrap();
    assert!(f
        .planes
        .plane(0)
        .iter()
        .all(|v| (v.norm() - 1.0).abs() < 1e-12));
    // zero frequency keeps only k = 0
    let mut f = fourier_field(layout, vec![0.0], |_, i| {
        Complex64::new(2.0 + (k * i as f64 * 10.0).cos(), 0.0)
    });
    homogeneous_layer_step(&mut f, chi, dz).unwrap();
    assert!(f
        .planes
        .plane(0)
        .iter()
        .all(|v| (v - Complex64::new(2.0, 0.0)).norm() < 1e-12));
    assert!(homogeneous_layer_step(&mut f, 0.0, dz).is_err());
}

#[test]
fn filter_velocity_recipes() {
    let ramp: Vec<f64> = (0..=3750).map(|i| 1500.0 + i as f64).collect();
    let bank = build_filter_velocities(&ramp, 4).unwrap();
    let want = [
        1500.0,
        2571.428571428571,
        3642.857142857143,
        4928.571428571428,
    ];
    for (a, b) in bank.velocities.iter().zip(&want) {
        assert!((a - b).abs() < 1e-9, "{a} {b}");
    }
    let bank = build_filter_velocities(&ramp, 2).unwrap();
    assert_eq!(bank.velocities, vec![1500.0, 3375.0]);
    let bank = build_filter_velocities(&[2000.0; 10], 4).unwrap();
    assert_eq!(bank.velocities, vec![2000.0]);
    assert!(build_filter_velocities(&ramp, 5).is_err());
    assert!(build_filter_velocities(&ramp, 0).is_err());
    assert_eq!(build_filter_velocities(&ramp, 3).unwrap().len(), 3);
}

#[test]
fn filter_passband_identity_and_evanescent_gain() {
    let nx = 64;
    let dx = 10.0;
    let layout = Layout2D::section(nx, dx).unwrap();
    let chi = 2000.0;
    let dz = 5.0;
    let c_plane = vec![chi; nx];
    let bank = build_filter_velocities(&c_plane, 1).unwrap();
    let kq = |q: usize| 2.0 * PI * q as f64 / (nx as f64 * dx);
    // |k| = 2 omega / chi exactly on a grid bin
    let k = kq(8);
    let omega = k * chi / 2.0;
    let mode = |_, i: usize| Complex64::from_polar(1.0, k * i as f64 * dx);
    let mut f = fourier_field(layout, vec![omega], mode);
    filter_plane(&mut f, &bank, &c_plane, dz).unwrap();
    let gain = (-omega * dz / chi * 3f64.sqrt()).exp();
    for (i, v) in f.planes.plane(0).iter().enumerate() {
        assert!((v - mode(0, i) * gain).norm() < 1e-12);
    }
    // twice at dz equals once at 2 dz
    let mut twice = fourier_field(layout, vec![omega], mode);
    filter_plane(&mut twice, &bank, &c_plane, dz).unwrap();
    filter_plane(&mut twice, &bank, &c_plane, dz).unwrap();
    let mut once = fourier_field(layout, vec![omega], mode);
    filter_plane(&mut once, &bank, &c_plane, 2.0 * dz).unwrap();
    for (a, b) in twice.planes.as_slice().iter().zip(once.planes.as_slice()) {
        assert!((a - b).norm() < 1e-12);
    }
    // passband field untouched
    let low = |_, i: usize| Complex64::from_polar(0.7, kq(1) * i as f64 * dx);
    let mut f = fourier_field(layout, vec![omega], low);
    let orig = f.clone();
    filter_plane(&mut f, &bank, &c_plane, dz).unwrap();
    for (a, b) in f.planes.as_slice().iter().zip(orig.planes.as_slice()) {
        assert!((a - b).norm() < 1e-13);
    }
}

#[test]
fn filter_gains_bounded() {
    for &omega in &[-50.0, 0.0, 1e-3, 80.0] {
        for i in 0..50 {
            let k2 = (i as f64 * 0.01).powi(2);
            let g = filter_gain(omega, k2, 2500.0, 10.0);
            assert!((0.0..=1.0).contains(&g));
            if omega != 0.0 && 2500.0f64.powi(2) * k2 < omega * omega {
                assert_eq!(g, 1.0);
            }
        }
    }
}

#[test]
fn zero_field_stays_zero() {
    let params = LaguerreParams::new(600.0, 64, 0.256).unwrap();
    let layout = Layout2D::new(14, 13, 10.0, 10.0).unwrap();
    let c: Vec<f64> = (0..layout.len()).map(|i| 2000.0 + i as f64).collect();
    let mut w = WavefieldLaguerre::zeros(layout, params);
    let solver = SolverConfig::default();
    diffraction_step(&mut w, &c, 0.2, 0.8, 5.0, &solver, 0, 0).unwrap();
    assert!(w.planes.as_slice().iter().all(|v| *v == 0.0));
    let report = algorithm1_step(&mut w, &c, 5.0, 32, &ExtrapolatorConfig::default()).unwrap();
    assert!(!report.homogeneous);
    assert!(w.planes.as_slice().iter().all(|v| *v == 0.0));
    assert_eq!(wavefield_energy(&w, 0.1).unwrap(), 0.0);
}

/// Dense reference of the Crank–Nicolson system for a 2D section, written
/// directly from the coefficient equation
/// `(1/c^2)(eta^2/4 + Phi_2) U_z - gamma L U_z - (beta/c) L (eta/2 + Phi_1) U = 0`.
fn dense_diffraction(
    u0: &[Vec<f64>],
    c: &[f64],
    beta: f64,
    gamma: f64,
    dz: f64,
    eta: f64,
    layout: &Layout2D,
) -> Vec<Vec<f64>> {
    let nx = layout.nx;
    let mut lmat = DMatrix::zeros(nx, nx);
    for j in 0..nx {
        let mut e = vec![0.0; nx];
        e[j] = 1.0;
        let col = apply_l_new(&e, layout).unwrap();
        for i in 0..nx {
            lmat[(i, j)] = col[i];
        }
    }
    let m_count = u0.len();
    let mut u1: Vec<Vec<f64>> = Vec::with_capacity(m_count);
    for m in 0..m_count {
        // Unknown-independent part: everything at level k, plus level k+1
        // coefficients with index < m.
        let series = |i: usize, level1: &[Vec<f64>], sign: f64| -> Vec<f64> {
            (0..m).map(|k| level1[k][i] + sign * u0[k][i]).collect()
        };
        let mut rhs = DVector::zeros(nx);
        let mut phi1_a = vec![0.0; nx];
        for i in 0..nx {
            let a: Vec<f64> = series(i, &u1, 1.0);
            let d: Vec<f64> = series(i, &u1, -1.0);
            let mut a_full = a.clone();
            a_full.push(0.0);
            let mut d_full = d.clone();
            d_full.push(0.0);
            phi1_a[i] = phi1(&a_full, eta)[m];
            let phi2_d = phi2(&d_full, eta)[m];
            rhs[i] = eta * eta / (4.0 * c[i] * c[i] * dz) * u0[m][i] - phi2_d / (c[i] * c[i] * dz);
        }
        let l_u0 =
            &lmat * DVector::from_column_slice(&(0..nx).map(|i| u0[m][i]).collect::<Vec<_>>());
        let l_phi = &lmat * DVector::from_column_slice(&phi1_a);
        let mut a = DMatrix::zeros(nx, nx);
        for i in 0..nx {
            let ci = c[i];
            rhs[i] +=
                (beta * eta / (4.0 * ci) - gamma / dz) * l_u0[i] + beta / (2.0 * ci) * l_phi[i];
            a[(i, i)] += eta * eta / (4.0 * ci * ci * dz);
            for j in 0..nx {
                a[(i, j)] -= (gamma / dz + beta * eta / (4.0 * ci)) * lmat[(i, j)];
            }
        }
        let sol = a.lu().solve(&rhs).unwrap();
        u1.push(sol.iter().copied().collect());
    }
    u1
}

#[test]
fn diffraction_matches_dense_reference() {
    let (nx, m_count) = (16, 24);
    let layout = Layout2D::section(nx, 10.0).unwrap();
    let params = LaguerreParams::new(300.0, m_count, 0.2).unwrap();
    let c: Vec<f64> = (0..nx).map(|i| 1800.0 + 60.0 * i as f64).collect();
    let u0: Vec<Vec<f64>> = (0..m_count)
        .map(|m| {
            (0..nx)
                .map(|i| ((i * 7 + m * 3) % 11) as f64 / 11.0 - 0.4)
                .collect()
        })
        .collect();
    let mut w = WavefieldLaguerre::zeros(layout, params);
    for (m, row) in u0.iter().enumerate() {
        w.planes.plane_mut(m).copy_from_slice(row);
    }
    let solver = SolverConfig {
        eps: 1e-13,
        ..SolverConfig::default()
    };
    let (beta, gamma, dz) = (0.15, 0.7, 5.0);
    diffraction_step(&mut w, &c, beta, gamma, dz, &solver, 0, 0).unwrap();
    let want = dense_diffraction(&u0, &c, beta, gamma, dz, params.eta, &layout);
    let flat: Vec<f64> = want.concat();
    let err = rel_l2(w.planes.as_slice(), &flat);
    assert!(err < 1e-9, "{err}");
}

#[test]
fn diffraction_3d_y_invariant_matches_2d() {
    // Explicit Laplacian terms carry edge effects about 6 cells per
    // coefficient, so the y extent must exceed 2 * 6 * M.
    let (nx, ny, m_count) = (20, 220, 16);
    let params = LaguerreParams::new(400.0, m_count, 0.2).unwrap();
    let l2 = Layout2D::section(nx, 10.0).unwrap();
    let l3 = Layout2D::new(nx, ny, 10.0, 10.0).unwrap();
    let c2: Vec<f64> = (0..nx).map(|i| 2000.0 + 25.0 * i as f64).collect();
    let c3: Vec<f64> = (0..ny).flat_map(|_| c2.clone()).collect();
    let mut w2 = WavefieldLaguerre::zeros(l2, params);
    let mut w3 = WavefieldLaguerre::zeros(l3, params);
    for m in 0..m_count {
        let row: Vec<f64> = (0..nx)
            .map(|i| (-(((i as f64) - 10.0) / 3.0).powi(2)).exp() * (m as f64 * 0.4).cos())
            .collect();
        w2.planes.plane_mut(m).copy_from_slice(&row);
        for iy in 0..ny {
            w3.planes.plane_mut(m)[iy * nx..(iy + 1) * nx].copy_from_slice(&row);
        }
    }
    let solver = SolverConfig {
        eps: 1e-12,
        ..SolverConfig::default()
    };
    diffraction_step(&mut w2, &c2, 0.2, 0.6, 5.0, &solver, 0, 0).unwrap();
    diffraction_step(&mut w3, &c3, 0.2, 0.6, 5.0, &solver, 0, 0).unwrap();
    let mid = ny / 2;
    let mut got = Vec::new();
    for m in 0..m_count {
        got.extend_from_slice(&w3.planes.plane(m)[mid * nx..(mid + 1) * nx]);
    }
    let err = rel_l2(&got, w2.planes.as_slice());
    assert!(err < 1e-6, "{err}");
}

#[test]
fn source_injection_bounds_and_smoothing() {
    let params = LaguerreParams::new(100.0, 3, 1.0).unwrap();
    let layout = Layout2D::new(5, 5, 1.0, 1.0).unwrap();
    let mut w = WavefieldLaguerre::zeros(layout, params);
    assert!(inject_source(&mut w, 5, 0, &[1.0, 2.0, 3.0], false).is_err());
    assert!(inject_source(&mut w, 0, 0, &[1.0, 2.0], false).is_err());
    inject_source(&mut w, 2, 2, &[1.0, 2.0, 3.0], true).unwrap();
    let total: f64 = w.planes.plane(1).iter().sum();
    assert!((total - 2.0).abs() < 1e-15);
    assert_eq!(w.planes.plane(0)[layout.index(2, 2)], 0.25);
}
