//! For `p = 1` the Jacobian of the flow map has a closed form along each
//! characteristic: with `K = int u0_x^2` and `w = sqrt(K)/2`,
//! `gamma_x(x, t) = (cos(w t) + u0_x(x)/sqrt(K) sin(w t))^2`.
//! These tests hold the Lagrangian solver and the breaking-time routines to it.

use std::f64::consts::{PI, TAU};

use mhs_core::eulerian::{
    characteristic_breaking_time, energy, predict_breaking_time, Termination,
};
use mhs_core::lagrangian::{LagrangianRun, LagrangianState};
use mhs_core::spectral::derivative;
use mhs_core::{ModelParams, SpectralField};

fn sine(n: usize, a: f64) -> SpectralField {
    SpectralField::from_fn(n, move |x| a * (TAU * x).sin())
}

fn exact_min_jacobian(min_slope: f64, k: f64, t: f64) -> f64 {
    let w = 0.5 * k.sqrt();
    let y = (w * t).cos() + min_slope / k.sqrt() * (w * t).sin();
    y * y
}

/// Root of `exact_min_jacobian = level` on `[0, T*]` by bisection.
fn exact_crossing(min_slope: f64, k: f64, level: f64, t_star: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, t_star);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if exact_min_jacobian(min_slope, k, mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn closed_form_breaking_time_for_the_sine() {
    let t_star = 2f64.sqrt() / PI * (PI / 2.0 - 2f64.sqrt().atan());
    let k = 2.0 * PI * PI;
    assert!(exact_min_jacobian(-TAU, k, t_star) < 1e-28);
    let predicted = predict_breaking_time(&sine(64, 1.0), &ModelParams::new(1).unwrap()).unwrap();
    assert!(
        (predicted - t_star).abs() < 1e-12,
        "{predicted} vs {t_star}"
    );
    assert!((t_star - 0.2771).abs() < 1e-4);
}

#[test]
fn lagrangian_jacobian_follows_the_closed_form() {
    let u0 = SpectralField::from_fn(128, |x| (TAU * x).sin() + 0.3 * (2.0 * TAU * x).cos());
    let k = energy(&u0);
    let min_slope = {
        let g = derivative(&u0).grid();
        g.into_iter().fold(f64::INFINITY, f64::min)
    };
    let params = ModelParams::new(1).unwrap();
    let mut run = LagrangianRun::new(LagrangianState::initial(u0.clone(), params), 1e-3).unwrap();
    let slopes = derivative(&u0).grid();
    for &t in &[0.05, 0.1, 0.15] {
        assert_eq!(run.integrate(t, 1000).unwrap(), Termination::Completed);
        let w = 0.5 * k.sqrt();
        for (j, &jac) in run.state.gamma.jacobian().iter().enumerate() {
            let y = (w * t).cos() + slopes[j] / k.sqrt() * (w * t).sin();
            assert!(
                (jac - y * y).abs() < 1e-9,
                "t={t} node {j}: {jac} vs {}",
                y * y
            );
        }
        let m = run.state.gamma.min_jacobian();
        assert!(m >= exact_min_jacobian(min_slope, k, t) - 1e-9);
    }
}

#[test]
fn monitor_crossing_matches_the_closed_form() {
    let u0 = sine(128, 1.0);
    let params = ModelParams::new(1).unwrap();
    let t_star = predict_breaking_time(&u0, &params).unwrap();
    let k = 2.0 * PI * PI;
    for level in [1e-1, 1e-2] {
        let exact = exact_crossing(-TAU, k, level, t_star);
        let numeric = characteristic_breaking_time(&u0, &params, 1.0, level).unwrap();
        assert!(
            (numeric - exact).abs() < 1e-6,
            "level {level}: {numeric} vs {exact}"
        );
    }
    // gamma_x vanishes quadratically, so the 1e-2 level is reached well before T*.
    let early = 1.0 - exact_crossing(-TAU, k, 1e-2, t_star) / t_star;
    assert!((0.09..0.1).contains(&early), "{early}");
}

#[test]
fn amplitude_rescales_time() {
    let params = ModelParams::new(1).unwrap();
    let t1 = predict_breaking_time(&sine(64, 1.0), &params).unwrap();
    for a in [0.5, 2.0, 4.0] {
        let ta = predict_breaking_time(&sine(64, a), &params).unwrap();
        assert!((ta * a - t1).abs() < 1e-12);
    }
}
