//! The flow-map ODE `gamma_t = zeta^p`, `zeta_t = F(gamma, zeta)` on circle
//! diffeomorphisms, integrated without composition or inversion.
//!
//! Lagrangian derivatives use `(d/dx)_gamma h = h_x / gamma_x`, so with
//! `J = gamma_x` and `q = zeta^(p-1) zeta_x^2 / J` the nonlocal force is
//! `(p/2) (antiderivative(q) - m d - c)`, where `m = mean(q)`, `d` is the
//! displacement and `c = mean((antiderivative(q) - m d) J)`. The two gauge
//! terms make `F` the exact Lagrangian image of the Eulerian force, so the
//! reconstruction `zeta o gamma^-1` solves the Eulerian equation.

use crate::error::{Error, Result};
use crate::eulerian::Termination;
use crate::record::RunRecord;
use crate::scale::{fit_radius, resolved_scale_norm, ScaleParams};
use crate::spectral::{
    antiderivative, compose, derivative, invert_diffeo, multiply, pointwise, power, power_or_one,
    weighted_mean, Diffeo, ModelParams, SpectralField,
};

/// Runs stop once `min gamma_x` falls to this value.
pub const JACOBIAN_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianState {
    pub gamma: Diffeo,
    pub zeta: SpectralField,
    pub t: f64,
    pub params: ModelParams,
}

impl LagrangianState {
    /// `gamma = id`, `zeta = u0` at `t = 0`.
    pub fn initial(u0: SpectralField, params: ModelParams) -> Self {
        let n = u0.n_modes();
        Self {
            gamma: Diffeo::identity(n),
            zeta: u0,
            t: 0.0,
            params,
        }
    }

    pub fn new(gamma: Diffeo, zeta: SpectralField, t: f64, params: ModelParams) -> Result<Self> {
        crate::spectral::same_size(gamma.n_modes(), zeta.n_modes())?;
        Ok(Self {
            gamma,
            zeta,
            t,
            params,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.zeta.n_modes()
    }

    pub fn check_floor(&self) -> Result<()> {
        let m = self.gamma.min_jacobian();
        if !(m > JACOBIAN_FLOOR) {
            return Err(Error::Breakdown { min_jacobian: m });
        }
        Ok(())
    }

    fn is_identity(&self) -> bool {
        self.gamma
            .displacement()
            .coeffs()
            .iter()
            .all(|c| c.norm_sqr() == 0.0)
    }

    /// `zeta^(p-1) zeta_x^2 / gamma_x`.
    fn integrand(&self) -> SpectralField {
        let p = self.params.p();
        let d = self.params.dealias;
        let zx = derivative(&self.zeta);
        let zx2 = multiply(&zx, &zx, d).expect("same grid");
        let num = if p == 1 {
            zx2
        } else {
            multiply(&power_or_one(&self.zeta, p - 1, d), &zx2, d).expect("same grid")
        };
        self.over_jacobian(num, 1)
    }

    /// Grid division by `gamma_x^k`, dealiased when the model asks for it.
    fn over_jacobian(&self, f: SpectralField, k: i32) -> SpectralField {
        if self.is_identity() {
            return f;
        }
        let q = pointwise(&f, self.gamma.jacobian(), |a, j| a / j.powi(k));
        if self.params.dealias {
            q.dealiased()
        } else {
            q
        }
    }
}

/// The nonlocal force `F(gamma, zeta)`, exact in the mean-conserving gauge.
pub fn force(state: &LagrangianState) -> Result<SpectralField> {
    state.check_floor()?;
    let p = state.params.p() as f64;
    let q = state.integrand();
    if state.is_identity() {
        return Ok(antiderivative(&q).scaled(0.5 * p));
    }
    let base = antiderivative(&q).axpy(-q.mean(), state.gamma.displacement());
    let c = weighted_mean(&base, state.gamma.jacobian());
    Ok(base
        .axpy(-c, &SpectralField::constant(state.n_modes(), 1.0))
        .scaled(0.5 * p))
}

/// `(p/2) antiderivative(zeta^(p-1) zeta_x^2 / gamma_x)`: the force without
/// the gauge terms. It differs from [`force`] by `(p/2)(m d + c)`.
pub fn force_projected(state: &LagrangianState) -> Result<SpectralField> {
    state.check_floor()?;
    Ok(antiderivative(&state.integrand()).scaled(0.5 * state.params.p() as f64))
}

/// `(zeta^p, F)`: the rates of the displacement and of `zeta`.
pub fn rhs_lagrangian(state: &LagrangianState) -> Result<(SpectralField, SpectralField)> {
    let f = force(state)?;
    let rate = power(&state.zeta, state.params.p(), state.params.dealias)?;
    Ok((rate, f))
}

/// Variation of `q` along `zeta + eps W`:
/// `(p (zeta^(p-1) W)_x zeta_x + (zeta^p)_x W_x) / (p gamma_x)`.
fn dq_dzeta(state: &LagrangianState, w: &SpectralField) -> Result<SpectralField> {
    crate::spectral::same_size(state.n_modes(), w.n_modes())?;
    let p = state.params.p();
    let d = state.params.dealias;
    let zx = derivative(&state.zeta);
    let a = derivative(&multiply(&power_or_one(&state.zeta, p - 1, d), w, d)?);
    let a = multiply(&a, &zx, d)?.scaled(p as f64);
    let b = multiply(&derivative(&power(&state.zeta, p, d)?), &derivative(w), d)?;
    Ok(state.over_jacobian(&a + &b, 1).scaled(1.0 / p as f64))
}

/// Variation of `q` along `gamma + eps W`: `-(zeta^p)_x zeta_x W_x / (p gamma_x^2)`.
fn dq_dgamma(state: &LagrangianState, w: &SpectralField) -> Result<SpectralField> {
    crate::spectral::same_size(state.n_modes(), w.n_modes())?;
    let p = state.params.p();
    let d = state.params.dealias;
    let zx = derivative(&state.zeta);
    let num = multiply(
        &multiply(&derivative(&power(&state.zeta, p, d)?), &zx, d)?,
        &derivative(w),
        d,
    )?;
    Ok(state.over_jacobian(num, 2).scaled(-1.0 / p as f64))
}

/// Linearization of the gauge terms: given `dq`, the displacement variation
/// `dd` and the Jacobian variation `dj` (grid values),
/// `antiderivative(dq) - dm d - m dd - dc`.
fn gauge_variation(
    state: &LagrangianState,
    dq: &SpectralField,
    dd: Option<&SpectralField>,
    dj: Option<&[f64]>,
) -> SpectralField {
    let q = state.integrand();
    let m = q.mean();
    let dm = dq.mean();
    let disp = state.gamma.displacement();
    let mut var = antiderivative(dq).axpy(-dm, disp);
    if let Some(dd) = dd {
        var = var.axpy(-m, dd);
    }
    let jac = state.gamma.jacobian();
    let mut dc = weighted_mean(&var, jac);
    if let Some(dj) = dj {
        let base = antiderivative(&q).axpy(-m, disp);
        dc += weighted_mean(&base, dj);
    }
    var.axpy(-dc, &SpectralField::constant(state.n_modes(), 1.0))
}

/// Directional derivative of [`force`] in `zeta` along `w`.
pub fn df_dzeta(state: &LagrangianState, w: &SpectralField) -> Result<SpectralField> {
    state.check_floor()?;
    let dq = dq_dzeta(state, w)?;
    let p = state.params.p() as f64;
    Ok(gauge_variation(state, &dq, None, None).scaled(0.5 * p))
}

/// Directional derivative of [`force`] in `gamma` along the displacement
/// perturbation `w`.
pub fn df_dgamma(state: &LagrangianState, w: &SpectralField) -> Result<SpectralField> {
    state.check_floor()?;
    let dq = dq_dgamma(state, w)?;
    let wx = derivative(w).grid();
    let p = state.params.p() as f64;
    Ok(gauge_variation(state, &dq, Some(w), Some(&wx)).scaled(0.5 * p))
}

/// Derivative of [`force_projected`] in `zeta`:
/// `(1/2) antiderivative((p (zeta^(p-1) W)_x zeta_x + (zeta^p)_x W_x) / gamma_x)`.
pub fn df_dzeta_projected(state: &LagrangianState, w: &SpectralField) -> Result<SpectralField> {
    state.check_floor()?;
    let p = state.params.p() as f64;
    Ok(antiderivative(&dq_dzeta(state, w)?).scaled(0.5 * p))
}

/// Derivative of [`force_projected`] in `gamma`:
/// `-(1/2) antiderivative((zeta^p)_x zeta_x W_x / gamma_x^2)`.
///
/// With `anchored_constant` the constant `(1/2) int W (zeta^p)_x zeta_x / gamma_x^2 dx`
/// is added, which belongs to the primitive anchored at a point rather than
/// the mean-projected one.
pub fn df_dgamma_projected(
    state: &LagrangianState,
    w: &SpectralField,
    anchored_constant: bool,
) -> Result<SpectralField> {
    state.check_floor()?;
    let p = state.params.p() as f64;
    let dq = dq_dgamma(state, w)?;
    let mut out = antiderivative(&dq).scaled(0.5 * p);
    if anchored_constant {
        // -p dq / W_x = (zeta^p)_x zeta_x / gamma_x^2
        let d = state.params.dealias;
        let zx = derivative(&state.zeta);
        let prod = multiply(
            &derivative(&power(&state.zeta, state.params.p(), d)?),
            &zx,
            d,
        )?;
        let g = state.over_jacobian(prod, 2);
        let k = 0.5 * multiply(w, &g, false)?.mean();
        out = out.axpy(k, &SpectralField::constant(state.n_modes(), 1.0));
    }
    Ok(out)
}

/// Eulerian field `zeta o gamma^-1` on the grid.
pub fn reconstruct_u(state: &LagrangianState) -> Result<SpectralField> {
    if state.is_identity() {
        return Ok(state.zeta.clone());
    }
    compose(&state.zeta, &invert_diffeo(&state.gamma)?)
}

/// Diagnostics computed in Lagrangian variables: `mean(u) = int zeta gamma_x`,
/// `int u_x^2 = int zeta_x^2 / gamma_x`, `sup|u_x| = sup|zeta_x / gamma_x|`.
/// The radius and scale norm use the reconstructed field (`NaN` if the
/// inversion fails).
pub fn diagnostics(state: &LagrangianState, dt_used: f64, scale: &ScaleParams) -> RunRecord {
    let jac = state.gamma.jacobian();
    let zeta = state.zeta.grid();
    let zx = derivative(&state.zeta).grid();
    let n = zeta.len() as f64;
    let mean_u = zeta.iter().zip(jac).map(|(z, j)| z * j).sum::<f64>() / n;
    let energy = zx.iter().zip(jac).map(|(d, j)| d * d / j).sum::<f64>() / n;
    let sup_abs_ux = zx
        .iter()
        .zip(jac)
        .fold(0.0_f64, |m, (d, j)| m.max((d / j).abs()));
    let sup_u = zeta.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let (radius_est, scale_norm) = match reconstruct_u(state) {
        Ok(u) => (
            fit_radius(&u).unwrap_or(f64::NAN),
            resolved_scale_norm(&u, scale).value,
        ),
        Err(_) => (f64::NAN, f64::NAN),
    };
    RunRecord {
        t: state.t,
        mean_u,
        energy,
        sup_u,
        sup_abs_ux,
        radius_est,
        scale_norm,
        dt_used,
        min_gamma_x: Some(state.gamma.min_jacobian()),
    }
}

#[derive(Debug, Clone)]
pub struct LagrangianRun {
    pub state: LagrangianState,
    pub dt: f64,
    pub scale: ScaleParams,
    pub history: Vec<RunRecord>,
}

impl LagrangianRun {
    pub fn new(state: LagrangianState, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Precondition(format!(
                "dt must be positive, got {dt}"
            )));
        }
        state.check_floor()?;
        Ok(Self {
            state,
            dt,
            scale: ScaleParams::new(0.5)?,
            history: Vec::new(),
        })
    }

    pub fn with_scale(mut self, scale: ScaleParams) -> Self {
        self.scale = scale;
        self
    }

    pub fn step_rk4(&mut self) -> Result<()> {
        let h = self.dt;
        self.state = rk4(&self.state, h)?;
        Ok(())
    }

    pub fn record(&mut self, dt_used: f64) {
        let rec = diagnostics(&self.state, dt_used, &self.scale);
        self.history.push(rec);
    }

    /// Steps to `t_end` (last step shortened), recording every
    /// `record_every` steps. Stops with [`Termination::FlowMapCollapse`]
    /// when `min gamma_x` reaches [`JACOBIAN_FLOOR`].
    pub fn integrate(&mut self, t_end: f64, record_every: usize) -> Result<Termination> {
        let record_every = record_every.max(1);
        if self.history.is_empty() {
            self.record(0.0);
        }
        let eps = 1e-12 * t_end.abs().max(1.0);
        let mut steps = 0usize;
        while self.state.t < t_end - eps {
            let h = self.dt.min(t_end - self.state.t);
            match rk4(&self.state, h) {
                Ok(next) => {
                    self.state = next;
                    if (t_end - self.state.t).abs() <= eps {
                        self.state.t = t_end;
                    }
                }
                Err(Error::Breakdown { min_jacobian }) => {
                    return Ok(Termination::FlowMapCollapse {
                        t: self.state.t,
                        min_gamma_x: min_jacobian,
                    });
                }
                Err(e) => return Err(e),
            }
            steps += 1;
            if !self.state.zeta.is_finite() {
                return Ok(Termination::NonFinite { t: self.state.t });
            }
            let m = self.state.gamma.min_jacobian();
            if !(m > JACOBIAN_FLOOR) {
                self.record(h);
                return Ok(Termination::FlowMapCollapse {
                    t: self.state.t,
                    min_gamma_x: m,
                });
            }
            if steps % record_every == 0 || self.state.t >= t_end - eps {
                self.record(h);
            }
        }
        Ok(Termination::Completed)
    }

    /// Sup-norm distance in `(displacement, zeta)` between one step of size
    /// `dt` and two of size `dt/2`.
    pub fn step_doubling_error(&self) -> Result<f64> {
        let full = rk4(&self.state, self.dt)?;
        let half = rk4(&rk4(&self.state, 0.5 * self.dt)?, 0.5 * self.dt)?;
        Ok(full.zeta.max_abs_diff(&half.zeta).max(
            full.gamma
                .displacement()
                .max_abs_diff(half.gamma.displacement()),
        ))
    }
}

fn stage(base: &LagrangianState, h: f64, k: &(SpectralField, SpectralField)) -> LagrangianState {
    LagrangianState {
        gamma: Diffeo::new_unchecked(base.gamma.displacement().axpy(h, &k.0)),
        zeta: base.zeta.axpy(h, &k.1),
        t: base.t + h,
        params: base.params,
    }
}

fn rk4(s: &LagrangianState, h: f64) -> Result<LagrangianState> {
    let k1 = rhs_lagrangian(s)?;
    let k2 = rhs_lagrangian(&stage(s, 0.5 * h, &k1))?;
    let k3 = rhs_lagrangian(&stage(s, 0.5 * h, &k2))?;
    let k4 = rhs_lagrangian(&stage(s, h, &k3))?;
    let combine = |a: &SpectralField, b: &SpectralField, c: &SpectralField, d: &SpectralField| {
        a.axpy(2.0, b).axpy(2.0, c).axpy(1.0, d)
    };
    let incr = (
        combine(&k1.0, &k2.0, &k3.0, &k4.0),
        combine(&k1.1, &k2.1, &k3.1, &k4.1),
    );
    let mut next = stage(s, h / 6.0, &incr);
    next.t = s.t + h;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eulerian::rhs_euler;
    use crate::spectral::{conjugated_antiderivative_exact, TWO_PI};
    use std::f64::consts::PI;

    const N: usize = 64;

    fn params(p: u32) -> ModelParams {
        ModelParams::new(p).unwrap()
    }

    fn state(p: u32, disp: impl Fn(f64) -> f64, zeta: impl Fn(f64) -> f64) -> LagrangianState {
        let gamma = Diffeo::from_displacement(SpectralField::from_fn(N, disp)).unwrap();
        LagrangianState::new(gamma, SpectralField::from_fn(N, zeta), 0.0, params(p)).unwrap()
    }

    #[test]
    fn force_examples() {
        let s =
            LagrangianState::initial(SpectralField::from_fn(N, |x| (TWO_PI * x).sin()), params(1));
        let expected = SpectralField::from_fn(N, |x| PI / 4.0 * (2.0 * TWO_PI * x).sin());
        assert!(force(&s).unwrap().max_abs_diff(&expected) < 1e-12);

        let c = state(2, |x| 0.1 * (TWO_PI * x).sin(), |_| 0.7);
        assert!(force(&c).unwrap().sup_norm() < 1e-15);
    }

    #[test]
    fn identity_force_is_the_eulerian_nonlocal_term() {
        for p in 1..=3 {
            let u = SpectralField::from_fn(N, |x| {
                0.3 + (TWO_PI * x).sin() - 0.4 * (2.0 * TWO_PI * x).cos()
            });
            let s = LagrangianState::initial(u.clone(), params(p));
            let up = power(&u, p, true).unwrap();
            let transport = multiply(&up, &derivative(&u), true).unwrap();
            let nonlocal = &rhs_euler(&u, &params(p)) + &transport;
            assert!(force(&s).unwrap().max_abs_diff(&nonlocal) < 1e-12);
        }
    }

    #[test]
    fn force_equals_the_conjugated_eulerian_force() {
        // definition route: the nonlocal term in y, pulled back via the exact conjugation
        let s = state(
            2,
            |x| 0.08 * (TWO_PI * x).sin() + 0.03,
            |x| 0.5 * (TWO_PI * x).cos() + 0.2,
        );
        let jac = s.gamma.jacobian().to_vec();
        let zx = derivative(&s.zeta).grid();
        let zeta = s.zeta.grid();
        // f o gamma^-1 composed back with gamma is zeta^(p-1) (zeta_x / J)^2
        let pulled: Vec<f64> = (0..N).map(|j| zeta[j] * (zx[j] / jac[j]).powi(2)).collect();
        let f = SpectralField::from_grid(&pulled).unwrap();
        let expected = conjugated_antiderivative_exact(&f, &s.gamma)
            .unwrap()
            .scaled(1.0);
        let got = force(&s).unwrap();
        assert!(
            got.max_abs_diff(&expected) < 1e-6,
            "{}",
            got.max_abs_diff(&expected)
        );
    }

    #[test]
    fn rest_state_and_rotation() {
        let z = LagrangianState::initial(SpectralField::zeros(N), params(1));
        let (dg, dz) = rhs_lagrangian(&z).unwrap();
        assert_eq!((dg.sup_norm(), dz.sup_norm()), (0.0, 0.0));

        let c = LagrangianState::initial(SpectralField::constant(N, 0.5), params(2));
        let (dg, dz) = rhs_lagrangian(&c).unwrap();
        assert!(dg.max_abs_diff(&SpectralField::constant(N, 0.25)) < 1e-15);
        assert_eq!(dz.sup_norm(), 0.0);
    }

    #[test]
    fn initial_rates_reconstruct_the_eulerian_rate() {
        let u0 = SpectralField::from_fn(N, |x| (TWO_PI * x).sin());
        let s = LagrangianState::initial(u0.clone(), params(1));
        let (dg, dz) = rhs_lagrangian(&s).unwrap();
        let ut = &dz - &multiply(&dg, &derivative(&u0), true).unwrap();
        let expected = SpectralField::from_fn(N, |x| -0.75 * PI * (2.0 * TWO_PI * x).sin());
        assert!(ut.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn reconstruction_examples() {
        let z = SpectralField::from_fn(N, |x| (TWO_PI * x).sin());
        let id = LagrangianState::initial(z.clone(), params(1));
        assert_eq!(reconstruct_u(&id).unwrap(), z);
        let shifted = LagrangianState::new(Diffeo::shift(N, 0.25), z, 0.0, params(1)).unwrap();
        let expected = SpectralField::from_fn(N, |x| -(TWO_PI * x).cos());
        assert!(reconstruct_u(&shifted).unwrap().max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn floor_is_enforced() {
        let s = state(
            1,
            |x| (1.0 - 5e-4) / TWO_PI * (TWO_PI * x).sin(),
            |x| (TWO_PI * x).sin(),
        );
        assert!(matches!(force(&s), Err(Error::Breakdown { .. })));
    }

    #[test]
    fn derivatives_vanish_at_zero_and_are_linear() {
        let s = state(
            2,
            |x| 0.05 * (TWO_PI * x).cos(),
            |x| 0.4 * (TWO_PI * x).sin() + 0.1,
        );
        let zero = SpectralField::zeros(N);
        assert_eq!(df_dzeta(&s, &zero).unwrap().sup_norm(), 0.0);
        assert!(df_dgamma(&s, &zero).unwrap().sup_norm() < 1e-15);
        let w1 = SpectralField::from_fn(N, |x| (2.0 * TWO_PI * x).sin());
        let w2 = SpectralField::from_fn(N, |x| (3.0 * TWO_PI * x).cos());
        let (a, b) = (0.7, -1.3);
        let comb = w1.scaled(a).axpy(b, &w2);
        for df in [df_dzeta, df_dgamma] {
            let lhs = df(&s, &comb).unwrap();
            let rhs = df(&s, &w1)
                .unwrap()
                .scaled(a)
                .axpy(b, &df(&s, &w2).unwrap());
            assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }

    fn fd_errors(
        s: &LagrangianState,
        w: &SpectralField,
        perturb: fn(&LagrangianState, &SpectralField, f64) -> LagrangianState,
        f: fn(&LagrangianState) -> Result<SpectralField>,
        exact: &SpectralField,
    ) -> Vec<f64> {
        [1e-4, 1e-5]
            .iter()
            .map(|&eps| {
                let fd = (&f(&perturb(s, w, eps)).unwrap() - &f(&perturb(s, w, -eps)).unwrap())
                    .scaled(0.5 / eps);
                fd.max_abs_diff(exact)
            })
            .collect()
    }

    fn perturb_zeta(s: &LagrangianState, w: &SpectralField, eps: f64) -> LagrangianState {
        LagrangianState {
            zeta: s.zeta.axpy(eps, w),
            ..s.clone()
        }
    }

    fn perturb_gamma(s: &LagrangianState, w: &SpectralField, eps: f64) -> LagrangianState {
        LagrangianState {
            gamma: Diffeo::new_unchecked(s.gamma.displacement().axpy(eps, w)),
            ..s.clone()
        }
    }

    #[test]
    fn derivatives_match_central_differences_at_second_order() {
        let s = state(
            2,
            |x| 0.06 * (TWO_PI * x).sin() + 0.02 * (2.0 * TWO_PI * x).cos(),
            |x| 0.8 * (TWO_PI * x).sin() + 0.3 * (2.0 * TWO_PI * x).cos() + 0.2,
        );
        let w = SpectralField::from_fn(N, |x| {
            (2.0 * TWO_PI * x).sin() + 0.5 * (3.0 * TWO_PI * x).cos()
        });
        let e = fd_errors(&s, &w, perturb_zeta, force, &df_dzeta(&s, &w).unwrap());
        assert!((80.0..120.0).contains(&(e[0] / e[1])), "zeta {e:?}");
        let e = fd_errors(&s, &w, perturb_gamma, force, &df_dgamma(&s, &w).unwrap());
        assert!((80.0..120.0).contains(&(e[0] / e[1])), "gamma {e:?}");
        let e = fd_errors(
            &s,
            &w,
            perturb_gamma,
            force_projected,
            &df_dgamma_projected(&s, &w, false).unwrap(),
        );
        assert!(
            (80.0..120.0).contains(&(e[0] / e[1])),
            "projected gamma {e:?}"
        );
        let e = fd_errors(
            &s,
            &w,
            perturb_zeta,
            force_projected,
            &df_dzeta_projected(&s, &w).unwrap(),
        );
        assert!(
            (80.0..120.0).contains(&(e[0] / e[1])),
            "projected zeta {e:?}"
        );
    }

    #[test]
    fn anchored_constant_only_shifts_the_mean() {
        let s = state(1, |x| 0.05 * (TWO_PI * x).sin(), |x| (TWO_PI * x).sin());
        let w = SpectralField::from_fn(N, |x| (TWO_PI * x).cos());
        let a = df_dgamma_projected(&s, &w, false).unwrap();
        let b = df_dgamma_projected(&s, &w, true).unwrap();
        assert!((&b - &a).sup_norm_nonconstant() < 1e-14);
        assert!((b.mean() - a.mean()).abs() > 1e-6);
    }

    #[test]
    fn zero_data_is_frozen() {
        let mut run = LagrangianRun::new(
            LagrangianState::initial(SpectralField::zeros(N), params(1)),
            1e-2,
        )
        .unwrap();
        assert_eq!(run.integrate(0.1, 1).unwrap(), Termination::Completed);
        assert_eq!(run.state.zeta.sup_norm(), 0.0);
        assert_eq!(run.state.gamma.displacement().sup_norm(), 0.0);
        assert!(run.history.iter().all(|r| r.min_gamma_x == Some(1.0)));
    }

    #[test]
    fn lagrangian_step_doubling_is_fifth_order_locally() {
        let u0 = SpectralField::from_fn(N, |x| (TWO_PI * x).sin());
        let s = LagrangianState::initial(u0, params(1));
        let e1 = LagrangianRun::new(s.clone(), 2e-2)
            .unwrap()
            .step_doubling_error()
            .unwrap();
        let e2 = LagrangianRun::new(s, 1e-2)
            .unwrap()
            .step_doubling_error()
            .unwrap();
        assert!((20.0..45.0).contains(&(e1 / e2)), "{}", e1 / e2);
    }
}
