//! Direct integration of `u_t = -u^p u_x + (p/2) antiderivative(u^(p-1) u_x^2)`
//! in the mean-conserving gauge.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::lagrangian::{LagrangianRun, LagrangianState};
use crate::record::RunRecord;
use crate::scale::{fit_radius, resolved_scale_norm, ScaleParams};
use crate::spectral::{
    antiderivative, derivative, multiply, power, power_or_one, ModelParams, SpectralField, TWO_PI,
};

/// `sup |u_x|` above which a run is stopped as broken.
pub const SLOPE_HARD_STOP: f64 = 1e6;
/// Upper end of the window used to extrapolate the breaking time.
pub const SLOPE_FIT_CEILING: f64 = 1e3;
/// Spectral tail above which a run whose `sup |u_x|` has started to fall
/// is declared unresolved.
pub const RESOLUTION_LOST_TAIL: f64 = 1e-3;

/// Right side of the Eulerian equation.
pub fn rhs_euler(u: &SpectralField, params: &ModelParams) -> SpectralField {
    let p = params.p();
    let d = params.dealias;
    let ux = derivative(u);
    let up = power(u, p, d).expect("p >= 1");
    let transport = multiply(&up, &ux, d).expect("same grid");
    let ux2 = multiply(&ux, &ux, d).expect("same grid");
    let integrand = if p == 1 {
        ux2
    } else {
        multiply(&power_or_one(u, p - 1, d), &ux2, d).expect("same grid")
    };
    antiderivative(&integrand)
        .axpy(-2.0 / p as f64, &transport)
        .scaled(0.5 * p as f64)
}

/// `int u_x^2 dx` by Parseval.
pub fn energy(u: &SpectralField) -> f64 {
    let half = u.n_modes() / 2;
    u.coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| {
            let mult = if k == half { 1.0 } else { 2.0 };
            mult * (TWO_PI * k as f64).powi(2) * c.norm_sqr()
        })
        .sum()
}

/// Advective step bound `0.5 / max(1, sup|u|^p 2 pi N)`.
pub fn cfl_bound(u: &SpectralField, params: &ModelParams) -> f64 {
    let speed = u.sup_norm().powi(params.p() as i32) * TWO_PI * u.n_modes() as f64;
    0.5 / speed.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    /// `sup |u_x|` passed [`SLOPE_HARD_STOP`].
    SlopeBlowup {
        t: f64,
        sup_abs_ux: f64,
    },
    NonFinite {
        t: f64,
    },
    /// The spectrum reached the dealiasing band and `sup |u_x|` fell below
    /// its running peak: the truncated solution no longer steepens.
    ResolutionLost {
        t: f64,
        peak_slope: f64,
    },
    /// `min gamma_x` fell to the Lagrangian floor.
    FlowMapCollapse {
        t: f64,
        min_gamma_x: f64,
    },
}

impl Termination {
    pub fn is_breakdown(&self) -> bool {
        !matches!(self, Termination::Completed)
    }
}

/// A single-owner Eulerian run.
#[derive(Debug, Clone)]
pub struct EulerianRun {
    pub u: SpectralField,
    pub t: f64,
    pub params: ModelParams,
    pub dt: f64,
    pub scale: ScaleParams,
    pub history: Vec<RunRecord>,
    peak_slope: f64,
}

impl EulerianRun {
    pub fn new(u0: SpectralField, params: ModelParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Precondition(format!(
                "dt must be positive, got {dt}"
            )));
        }
        Ok(Self {
            u: u0,
            t: 0.0,
            params,
            dt,
            scale: ScaleParams::new(0.5)?,
            history: Vec::new(),
            peak_slope: 0.0,
        })
    }

    pub fn with_scale(mut self, scale: ScaleParams) -> Self {
        self.scale = scale;
        self
    }

    fn check_cfl(&self) -> Result<()> {
        let bound = cfl_bound(&self.u, &self.params);
        if self.dt > bound {
            return Err(Error::Cfl {
                dt: self.dt,
                suggested: bound,
            });
        }
        Ok(())
    }

    /// One classical RK4 step of size `self.dt`.
    pub fn step_rk4(&mut self) -> Result<()> {
        self.check_cfl()?;
        let h = self.dt;
        self.u = rk4(&self.u, h, &self.params);
        self.t += h;
        Ok(())
    }

    fn step_by(&mut self, h: f64) {
        self.u = rk4(&self.u, h, &self.params);
        self.t += h;
    }

    pub fn record(&mut self, dt_used: f64) {
        let rec = diagnostics(&self.u, self.t, dt_used, &self.scale);
        self.history.push(rec);
    }

    /// Steps to `t_end`, recording every `record_every` steps and at the end.
    /// The last step is shortened to land on `t_end`.
    pub fn integrate(&mut self, t_end: f64, record_every: usize) -> Result<Termination> {
        let record_every = record_every.max(1);
        if self.history.is_empty() {
            self.record(0.0);
        }
        let mut steps = 0usize;
        while self.t < t_end - 1e-12 * t_end.abs().max(1.0) {
            self.check_cfl()?;
            let h = self.dt.min(t_end - self.t);
            self.step_by(h);
            if (t_end - self.t).abs() <= 1e-12 * t_end.abs().max(1.0) {
                self.t = t_end;
            }
            steps += 1;
            if let Some(term) = self.breakdown() {
                self.record(h);
                return Ok(term);
            }
            let at_end = self.t >= t_end - 1e-12 * t_end.abs().max(1.0);
            if steps % record_every == 0 || at_end {
                self.record(h);
            }
        }
        Ok(Termination::Completed)
    }

    fn breakdown(&mut self) -> Option<Termination> {
        breakdown_check(&self.u, self.t, &mut self.peak_slope)
    }

    /// Step-doubling error estimate: sup-norm distance between one step of
    /// size `dt` and two of size `dt/2` from the current state.
    pub fn step_doubling_error(&self) -> f64 {
        let full = rk4(&self.u, self.dt, &self.params);
        let half = rk4(
            &rk4(&self.u, 0.5 * self.dt, &self.params),
            0.5 * self.dt,
            &self.params,
        );
        full.max_abs_diff(&half)
    }

    /// Adaptive integration: each step is accepted when its step-doubling
    /// error is below `tol`, and `dt` is rescaled by the usual fifth-root
    /// rule (capped by the CFL bound).
    pub fn integrate_adaptive(
        &mut self,
        t_end: f64,
        tol: f64,
        record_every: usize,
    ) -> Result<Termination> {
        let record_every = record_every.max(1);
        if self.history.is_empty() {
            self.record(0.0);
        }
        let mut steps = 0usize;
        while self.t < t_end - 1e-12 * t_end.abs().max(1.0) {
            let bound = cfl_bound(&self.u, &self.params);
            let h = self.dt.min(bound).min(t_end - self.t);
            let full = rk4(&self.u, h, &self.params);
            let half = rk4(&rk4(&self.u, 0.5 * h, &self.params), 0.5 * h, &self.params);
            let err = full.max_abs_diff(&half);
            let factor = if err > 0.0 {
                0.9 * (tol / err).powf(0.2)
            } else {
                2.0
            };
            if err <= tol {
                // Richardson-improved update
                self.u = half.axpy(1.0 / 15.0, &(&half - &full));
                self.t += h;
                steps += 1;
                self.dt = (h * factor.clamp(0.2, 2.0)).min(bound);
                if let Some(term) = self.breakdown() {
                    self.record(h);
                    return Ok(term);
                }
                let at_end = self.t >= t_end - 1e-12 * t_end.abs().max(1.0);
                if steps % record_every == 0 || at_end {
                    self.record(h);
                }
            } else {
                self.dt = h * factor.clamp(0.1, 0.9);
                if self.dt < 1e-14 {
                    return Ok(Termination::NonFinite { t: self.t });
                }
            }
        }
        Ok(Termination::Completed)
    }
}

/// Shared stop test for field-based runs; `peak_slope` carries the running
/// maximum of `sup |u_x|`.
pub(crate) fn breakdown_check(
    u: &SpectralField,
    t: f64,
    peak_slope: &mut f64,
) -> Option<Termination> {
    if !u.is_finite() {
        return Some(Termination::NonFinite { t });
    }
    let slope = derivative(u).sup_norm();
    if !slope.is_finite() {
        return Some(Termination::NonFinite { t });
    }
    if slope > SLOPE_HARD_STOP {
        return Some(Termination::SlopeBlowup {
            t,
            sup_abs_ux: slope,
        });
    }
    if slope < *peak_slope && spectral_tail(u) > RESOLUTION_LOST_TAIL {
        return Some(Termination::ResolutionLost {
            t,
            peak_slope: *peak_slope,
        });
    }
    *peak_slope = peak_slope.max(slope);
    None
}

fn rk4(u: &SpectralField, h: f64, params: &ModelParams) -> SpectralField {
    let k1 = rhs_euler(u, params);
    let k2 = rhs_euler(&u.axpy(0.5 * h, &k1), params);
    let k3 = rhs_euler(&u.axpy(0.5 * h, &k2), params);
    let k4 = rhs_euler(&u.axpy(h, &k3), params);
    let incr = k1.axpy(2.0, &k2).axpy(2.0, &k3).axpy(1.0, &k4);
    u.axpy(h / 6.0, &incr)
}

/// Diagnostics row for a field at time `t`.
pub fn diagnostics(u: &SpectralField, t: f64, dt_used: f64, scale: &ScaleParams) -> RunRecord {
    let grid = u.grid();
    RunRecord {
        t,
        mean_u: u.mean(),
        energy: energy(u),
        sup_u: grid.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        sup_abs_ux: derivative(u).sup_norm(),
        radius_est: fit_radius(u).unwrap_or(f64::NAN),
        scale_norm: resolved_scale_norm(u, scale).value,
        dt_used,
        min_gamma_x: None,
    }
}

/// Location of the minimum of the interpolant of `f` (grid argmin refined by
/// Newton on `f'`).
pub(crate) fn refined_min(f: &SpectralField) -> f64 {
    let grid = f.grid();
    let n = grid.len();
    let (j, _) = grid.iter().enumerate().fold(
        (0, f64::INFINITY),
        |b, (j, &v)| if v < b.1 { (j, v) } else { b },
    );
    let df = derivative(f);
    let mut x = j as f64 / n as f64;
    let h = 1.0 / n as f64;
    for _ in 0..30 {
        let (slope, curv) = df.eval_with_derivative(x);
        if curv <= 0.0 {
            break;
        }
        let next = (x - slope / curv).clamp(j as f64 * h - h, j as f64 * h + h);
        if (next - x).abs() < 1e-15 {
            x = next;
            break;
        }
        x = next;
    }
    let best_grid = grid[j];
    f.eval(x).min(best_grid)
}

pub const DEFAULT_BREAKING_HORIZON: f64 = 5.0;

/// Wave-breaking time from the initial data.
///
/// For `p = 1` the slope along the steepest characteristic obeys
/// `Dv/Dt = -(v^2 + K)/2` with `K = int u0_x^2`, giving
/// `T* = (2/sqrt K)(pi/2 + atan(min u0_x / sqrt K))`. For `p >= 2` see
/// [`extrapolated_breaking_time`].
pub fn predict_breaking_time(u0: &SpectralField, params: &ModelParams) -> Option<f64> {
    predict_breaking_time_within(u0, params, DEFAULT_BREAKING_HORIZON)
}

pub fn predict_breaking_time_within(
    u0: &SpectralField,
    params: &ModelParams,
    horizon: f64,
) -> Option<f64> {
    let k = energy(u0);
    if k == 0.0 {
        return None;
    }
    if params.p() == 1 {
        let min_slope = refined_min(&derivative(u0));
        let rk = k.sqrt();
        return Some(2.0 / rk * (FRAC_PI_2 + (min_slope / rk).atan()));
    }
    extrapolated_breaking_time(u0, params, horizon)
}

/// `(t, min gamma_x)` along the Lagrangian flow, until `min gamma_x` drops
/// to `stop_below`, a step fails, or `horizon` is passed.
pub fn min_jacobian_trace(
    u0: &SpectralField,
    params: &ModelParams,
    horizon: f64,
    stop_below: f64,
) -> Vec<(f64, f64)> {
    let rate = derivative(u0).sup_norm() * u0.sup_norm().powi(params.p() as i32 - 1).max(1.0);
    let dt = (2e-3 / rate.max(1.0)).min(1e-3);
    let mut trace = vec![(0.0, 1.0)];
    let Ok(mut run) = LagrangianRun::new(LagrangianState::initial(u0.clone(), *params), dt) else {
        return trace;
    };
    while run.state.t < horizon {
        if run.step_rk4().is_err() {
            break;
        }
        let m = run.state.gamma.min_jacobian();
        trace.push((run.state.t, m));
        if m <= stop_below {
            break;
        }
    }
    trace
}

/// First time `min gamma_x` falls to `threshold`, linearly interpolated
/// between steps; `None` if not before `horizon`.
pub fn characteristic_breaking_time(
    u0: &SpectralField,
    params: &ModelParams,
    horizon: f64,
    threshold: f64,
) -> Option<f64> {
    let trace = min_jacobian_trace(u0, params, horizon, threshold);
    let i = trace.iter().position(|&(_, m)| m <= threshold)?;
    let ((t0, m0), (t1, m1)) = (trace[i - 1], trace[i]);
    Some(t0 + (m0 - threshold) / (m0 - m1) * (t1 - t0))
}

/// Breaking time from the flow map: `min gamma_x` vanishes quadratically,
/// so `sqrt(min gamma_x)` is fitted linearly over the samples below `0.05`
/// (down to `1e-2`) and extrapolated to zero.
pub fn extrapolated_breaking_time(
    u0: &SpectralField,
    params: &ModelParams,
    horizon: f64,
) -> Option<f64> {
    let trace = min_jacobian_trace(u0, params, horizon, 1e-2);
    if trace.last()?.1 > 1e-2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = trace
        .iter()
        .filter(|&&(_, m)| m <= 0.05)
        .map(|&(t, m)| (t, m.sqrt()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let (slope, intercept) = linear_fit(&pts);
    (slope < 0.0).then(|| -intercept / slope)
}

/// Numerical breaking time from the Eulerian solver.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupEstimate {
    pub t_star: f64,
    /// Time span of the samples used in the fit.
    pub window: (f64, f64),
    pub points: usize,
    /// Largest `sup |u_x|` reached while resolved.
    pub max_resolved_slope: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Spectral tail: largest `|u_n|` for `N/4 <= n <= N/3` relative to the
/// largest coefficient overall.
pub fn spectral_tail(u: &SpectralField) -> f64 {
    let n = u.n_modes();
    let amps: Vec<f64> = u.coeffs().iter().map(|c| c.norm()).collect();
    let peak = amps[1..].iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    amps[n / 4..=n / 3].iter().copied().fold(0.0, f64::max) / peak
}

pub const RESOLUTION_TAIL: f64 = 1e-10;

/// Runs until `sup|u_x|` reaches [`SLOPE_FIT_CEILING`] or the spectrum stops
/// being resolved, then extrapolates `1/sup|u_x|` linearly to zero using
/// the final resolved samples with `sup|u_x|` at least half the last one.
/// `None` when nothing steepens before `horizon`.
pub fn estimate_breaking_time(
    u0: &SpectralField,
    params: &ModelParams,
    dt: f64,
    horizon: f64,
) -> Result<Option<BlowupEstimate>> {
    let mut run = EulerianRun::new(u0.clone(), *params, dt)?;
    let mut samples = vec![(0.0, derivative(u0).sup_norm())];
    let initial = samples[0].1;
    loop {
        if run.t >= horizon {
            break;
        }
        let prev = run.u.clone();
        run.step_rk4()?;
        if !run.u.is_finite() || spectral_tail(&run.u) > RESOLUTION_TAIL {
            run.u = prev;
            break;
        }
        let slope = derivative(&run.u).sup_norm();
        samples.push((run.t, slope));
        if slope >= SLOPE_FIT_CEILING {
            break;
        }
    }
    let last = samples.last().expect("initial sample").1;
    if initial == 0.0 || last < 4.0 * initial {
        return Ok(None);
    }
    let window: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(_, s)| s >= 0.5 * last)
        .collect();
    if window.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} resolved samples in the breaking window; reduce dt or raise N",
            window.len()
        )));
    }
    let pts: Vec<(f64, f64)> = window.iter().map(|&(t, s)| (t, 1.0 / s)).collect();
    let (slope, intercept) = linear_fit(&pts);
    Ok(Some(BlowupEstimate {
        t_star: -intercept / slope,
        window: (window[0].0, window[window.len() - 1].0),
        points: window.len(),
        max_resolved_slope: last,
        samples,
    }))
}

pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid_nodes;

    fn sin_field(n: usize, a: f64) -> SpectralField {
        SpectralField::from_fn(n, move |x| a * (TWO_PI * x).sin())
    }

    #[test]
    fn underresolved_breaking_is_reported() {
        let u0 = SpectralField::from_fn(256, |x| (TWO_PI * x).sin());
        let mut run = EulerianRun::new(u0, ModelParams::new(1).unwrap(), 1e-4).unwrap();
        match run.integrate(0.5, 1000).unwrap() {
            Termination::ResolutionLost { t, peak_slope } => {
                assert!((0.25..0.29).contains(&t), "t = {t}");
                assert!(peak_slope > 40.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constants_are_equilibria() {
        for p in 1..=3 {
            let params = ModelParams::new(p).unwrap();
            let r = rhs_euler(&SpectralField::constant(64, 0.3), &params);
            assert_eq!(r.sup_norm(), 0.0);
        }
    }

    #[test]
    fn rhs_for_sine_p1() {
        // transport -pi sin(4 pi x), nonlocal +pi/4 sin(4 pi x)
        let u = sin_field(64, 1.0);
        let r = rhs_euler(&u, &ModelParams::new(1).unwrap());
        let expected = SpectralField::from_fn(64, |x| {
            -0.75 * std::f64::consts::PI * (2.0 * TWO_PI * x).sin()
        });
        assert!(r.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn rhs_for_sine_p1_by_quadrature() {
        // nonlocal part: primitive of (u_x^2 - mean) by fine trapezoid
        let n = 4096;
        let ux = |x: f64| TWO_PI * (TWO_PI * x).cos();
        let mean = 0.5 * TWO_PI * TWO_PI;
        let h = 1.0 / n as f64;
        let mut prim = vec![0.0; n];
        for j in 1..n {
            let (a, b) = ((j - 1) as f64 * h, j as f64 * h);
            prim[j] = prim[j - 1] + 0.5 * h * (ux(a).powi(2) + ux(b).powi(2)) - mean * h;
        }
        let pm = prim.iter().sum::<f64>() / n as f64;
        let r = rhs_euler(&sin_field(n, 1.0), &ModelParams::new(1).unwrap()).grid();
        for (j, x) in grid_nodes(n).into_iter().enumerate() {
            let expected = -(TWO_PI * x).sin() * ux(x) + 0.5 * (prim[j] - pm);
            assert!((r[j] - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn energy_matches_quadrature() {
        let u =
            SpectralField::from_fn(128, |x| (TWO_PI * x).sin() + 0.3 * (3.0 * TWO_PI * x).cos());
        let ux = derivative(&u).grid();
        let quad = ux.iter().map(|v| v * v).sum::<f64>() / 128.0;
        assert!((energy(&u) - quad).abs() < 1e-12 * quad);
    }

    #[test]
    fn constant_state_is_preserved() {
        let params = ModelParams::new(2).unwrap();
        let mut run = EulerianRun::new(SpectralField::constant(64, 0.3), params, 1e-3).unwrap();
        assert_eq!(run.integrate(0.1, 10).unwrap(), Termination::Completed);
        assert_eq!(run.u, SpectralField::constant(64, 0.3));
        assert!(run
            .history
            .iter()
            .all(|r| r.mean_u == 0.3 && r.energy == 0.0));
    }

    #[test]
    fn cfl_violation_is_refused() {
        let params = ModelParams::new(1).unwrap();
        let mut run = EulerianRun::new(sin_field(256, 1.0), params, 1e-2).unwrap();
        match run.step_rk4() {
            Err(Error::Cfl { suggested, .. }) => {
                assert!((suggested - 0.5 / (TWO_PI * 256.0)).abs() < 1e-12)
            }
            other => panic!("expected CFL refusal, got {other:?}"),
        }
        assert!(EulerianRun::new(sin_field(64, 1.0), params, 0.0).is_err());
    }

    #[test]
    fn step_doubling_is_fifth_order_locally() {
        let params = ModelParams::new(1).unwrap();
        let u0 = sin_field(64, 1.0);
        let e1 = EulerianRun::new(u0.clone(), params, 1e-3)
            .unwrap()
            .step_doubling_error();
        let e2 = EulerianRun::new(u0, params, 5e-4)
            .unwrap()
            .step_doubling_error();
        let ratio = e1 / e2;
        assert!((20.0..45.0).contains(&ratio), "local error ratio {ratio}");
    }

    #[test]
    fn history_times_increase_and_end_exactly() {
        let params = ModelParams::new(1).unwrap();
        let mut run = EulerianRun::new(sin_field(64, 0.1), params, 3e-3).unwrap();
        run.integrate(0.1, 4).unwrap();
        let ts: Vec<f64> = run.history.iter().map(|r| r.t).collect();
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
        assert!((run.t - 0.1).abs() < 1e-14);
        assert!((ts.last().unwrap() - 0.1).abs() < 1e-14);
    }

    #[test]
    fn riccati_closed_form_for_sine() {
        let params = ModelParams::new(1).unwrap();
        let t = predict_breaking_time(&sin_field(128, 1.0), &params).unwrap();
        let expected = 2f64.sqrt() / std::f64::consts::PI * (FRAC_PI_2 - 2f64.sqrt().atan());
        assert!((t - expected).abs() < 1e-12);
        assert!((t - 0.2771).abs() < 1e-4);
        let t2 = predict_breaking_time(&sin_field(128, 2.0), &params).unwrap();
        assert!(t2 < t);
        assert_eq!(
            predict_breaking_time(&SpectralField::constant(64, 0.4), &params),
            None
        );
    }

    #[test]
    fn riccati_matches_scalar_characteristic_integration() {
        // independent check: RK4 on v' = -(v^2 + K)/2 from v0 = -2 pi until v < -1e8
        let k = 2.0 * std::f64::consts::PI.powi(2);
        let f = |v: f64| -0.5 * (v * v + k);
        let (mut t, mut v, h) = (0.0, -TWO_PI, 1e-6);
        while v > -1e8 {
            let k1 = f(v);
            let k2 = f(v + 0.5 * h * k1);
            let k3 = f(v + 0.5 * h * k2);
            let k4 = f(v + h * k3);
            v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
        }
        let predicted =
            predict_breaking_time(&sin_field(64, 1.0), &ModelParams::new(1).unwrap()).unwrap();
        assert!((t - predicted).abs() < 1e-5, "{t} vs {predicted}");
    }

    #[test]
    fn flow_map_extrapolation_matches_riccati() {
        let u0 = sin_field(128, 1.0);
        let params = ModelParams::new(1).unwrap();
        let riccati = predict_breaking_time(&u0, &params).unwrap();
        let t = extrapolated_breaking_time(&u0, &params, 1.0).unwrap();
        assert!((t / riccati - 1.0).abs() < 2e-3, "{t} vs {riccati}");
        // the Jacobian vanishes quadratically, so the 1e-2 crossing comes early
        let cross = characteristic_breaking_time(&u0, &params, 1.0, 1e-2).unwrap();
        assert!(cross < 0.95 * riccati && cross > 0.85 * riccati);
    }

    #[test]
    fn higher_powers_break_earlier_with_larger_data() {
        let params = ModelParams::new(2).unwrap();
        let t1 = predict_breaking_time(&sin_field(64, 1.0), &params).unwrap();
        let t2 = predict_breaking_time(&sin_field(64, 2.0), &params).unwrap();
        assert!(t2 < t1);
    }

    #[test]
    fn adaptive_run_tracks_fixed_step() {
        let params = ModelParams::new(1).unwrap();
        let u0 = sin_field(64, 0.5);
        let mut fixed = EulerianRun::new(u0.clone(), params, 1e-4).unwrap();
        fixed.integrate(0.05, 100).unwrap();
        let mut adaptive = EulerianRun::new(u0, params, 1e-3).unwrap();
        adaptive.integrate_adaptive(0.05, 1e-11, 1).unwrap();
        assert!(adaptive.u.max_abs_diff(&fixed.u) < 1e-8);
        assert!((adaptive.t - 0.05).abs() < 1e-14);
    }

    #[test]
    fn no_breaking_for_constant_data() {
        let params = ModelParams::new(1).unwrap();
        let est =
            estimate_breaking_time(&SpectralField::constant(64, 0.3), &params, 1e-3, 0.5).unwrap();
        assert!(est.is_none());
    }
}
