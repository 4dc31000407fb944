//! Time-Taylor recursion for the first-order system in `u1 = u`, `u2 = u_x`:
//!
//! ```text
//! d/dt u1 = F1 = -(1/(p+1)) d/dx(u1^(p+1)) + (p/2) antiderivative(u1^(p-1) u2^2)
//! d/dt u2 = F2 = -d/dx(u1^p u2) + (p/2) u1^(p-1) u2^2
//! ```
//!
//! Coefficients satisfy `(j+1) a_(j+1) = [F]_j`, with powers and products
//! expanded by Cauchy products in `t`. The transport term of `F1` is formed
//! as `[u1^p d/dx u1]_j`, which equals `(1/(p+1)) d/dx [u1^(p+1)]_j` and
//! keeps `u2_j` and `d/dx u1_j` built from the same products.
//!
//! The literal `F2` keeps the mean of `u1^(p-1) u2^2`, which `d/dx F1` lacks,
//! so the defect `u2 - d/dx u1` picks up a constant at first order and a
//! non-constant part from second order on. [`Closure::MeanFree`] removes
//! that mean; the defect then vanishes identically and `u1` is the solution
//! of the nonlocal equation.

use crate::error::{Error, Result};
use crate::eulerian::{breakdown_check, diagnostics, Termination};
use crate::record::RunRecord;
use crate::scale::{sobolev_norm, ScaleParams};
use crate::spectral::{antiderivative, derivative, multiply, ModelParams, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Closure {
    /// `F2 = -d/dx(u1^p u2) + (p/2) u1^(p-1) u2^2`.
    #[default]
    Literal,
    /// `F2` with the mean of `u1^(p-1) u2^2` removed.
    MeanFree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorSeries {
    pub params: ModelParams,
    pub order: usize,
    pub coeffs_u1: Vec<SpectralField>,
    pub coeffs_u2: Vec<SpectralField>,
    pub base_time: f64,
    pub closure: Closure,
}

/// Coefficients `j = 0..=order` with the literal `F2`.
pub fn taylor_coeffs(
    u0: &SpectralField,
    params: &ModelParams,
    order: usize,
) -> Result<TaylorSeries> {
    taylor_coeffs_with(u0, params, order, Closure::Literal)
}

pub fn taylor_coeffs_with(
    u0: &SpectralField,
    params: &ModelParams,
    order: usize,
    closure: Closure,
) -> Result<TaylorSeries> {
    taylor_coeffs_filtered(u0, params, order, closure, NOISE_FLOOR)
}

/// Relative level below which Fourier modes of new coefficients are zeroed.
pub const NOISE_FLOOR: f64 = 1e-13;

/// Coefficient recursion with a noise filter: after each order, modes of
/// `u1_j` below `noise_floor` times its largest non-mean mode are zeroed in
/// both `u1_j` and `u2_j`. Rounding errors in unresolved modes are otherwise
/// amplified by one derivative per order. `0` disables the filter.
pub fn taylor_coeffs_filtered(
    u0: &SpectralField,
    params: &ModelParams,
    order: usize,
    closure: Closure,
    noise_floor: f64,
) -> Result<TaylorSeries> {
    if order == 0 {
        return Err(Error::Precondition(
            "Taylor order must be at least 1".into(),
        ));
    }
    let p = params.p() as usize;
    let d = params.dealias;
    let n = u0.n_modes();
    let half_p = 0.5 * p as f64;
    let cauchy = |x: &[SpectralField], y: &[SpectralField], j: usize| -> Result<SpectralField> {
        let mut acc = SpectralField::zeros(n);
        for i in 0..=j {
            acc = &acc + &multiply(&x[i], &y[j - i], d)?;
        }
        Ok(acc)
    };

    let mut a = vec![u0.clone()];
    let mut b = vec![derivative(&a[0])];
    // pows[k][j] = [u1^(k+1)]_j for k + 1 = 1..=p
    let mut pows: Vec<Vec<SpectralField>> = vec![Vec::new(); p];
    let mut u2sq: Vec<SpectralField> = Vec::new();
    let mut weight: Vec<SpectralField> = Vec::new();
    let mut flux: Vec<SpectralField> = Vec::new();
    let mut ax: Vec<SpectralField> = Vec::new();

    for j in 0..order {
        pows[0].push(a[j].clone());
        for k in 1..p {
            let next = cauchy(&pows[k - 1], &a, j)?;
            pows[k].push(next);
        }
        u2sq.push(cauchy(&b, &b, j)?);
        // [u1^(p-1) u2^2]_j
        weight.push(if p == 1 {
            u2sq[j].clone()
        } else {
            cauchy(&pows[p - 2], &u2sq, j)?
        });
        flux.push(cauchy(&pows[p - 1], &b, j)?);

        let scale = 1.0 / (j + 1) as f64;
        ax.push(derivative(&a[j]));
        let transport = cauchy(&pows[p - 1], &ax, j)?;
        let f1 = (-&transport).axpy(half_p, &antiderivative(&weight[j]));
        let mut f2 = (-&derivative(&flux[j])).axpy(half_p, &weight[j]);
        if closure == Closure::MeanFree {
            f2 = f2.axpy(-half_p, &SpectralField::constant(n, weight[j].mean()));
        }
        let (mut next_a, mut next_b) = (f1.scaled(scale), f2.scaled(scale));
        if noise_floor > 0.0 {
            filter_pair(&mut next_a, &mut next_b, noise_floor);
        }
        a.push(next_a);
        b.push(next_b);
    }
    Ok(TaylorSeries {
        params: *params,
        order,
        coeffs_u1: a,
        coeffs_u2: b,
        base_time: 0.0,
        closure,
    })
}

fn filter_pair(a: &mut SpectralField, b: &mut SpectralField, floor: f64) {
    let peak = a.coeffs()[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let cut = floor * peak;
    let keep: Vec<bool> = a.coeffs().iter().map(|c| c.norm() >= cut).collect();
    for f in [a, b] {
        for (k, c) in f.coeffs_mut().iter_mut().enumerate().skip(1) {
            if !keep[k] {
                *c = Default::default();
            }
        }
    }
}

impl TaylorSeries {
    /// Horner evaluation of `(u1, u2)` at time `t`.
    pub fn evaluate(&self, t: f64) -> (SpectralField, SpectralField) {
        let h = t - self.base_time;
        let horner = |c: &[SpectralField]| {
            c.iter()
                .rev()
                .skip(1)
                .fold(c[c.len() - 1].clone(), |acc, cj| cj.axpy(h, &acc))
        };
        (horner(&self.coeffs_u1), horner(&self.coeffs_u2))
    }

    /// `u1` truncated at order `j`.
    pub fn evaluate_truncated(&self, t: f64, j: usize) -> SpectralField {
        let h = t - self.base_time;
        let c = &self.coeffs_u1[..=j.min(self.order)];
        c.iter()
            .rev()
            .skip(1)
            .fold(c[c.len() - 1].clone(), |acc, cj| cj.axpy(h, &acc))
    }

    pub fn with_base_time(mut self, t0: f64) -> Self {
        self.base_time = t0;
        self
    }
}

pub fn evaluate_series(series: &TaylorSeries, t: f64) -> (SpectralField, SpectralField) {
    series.evaluate(t)
}

/// Root-test estimate `1 / limsup ||a_j||^(1/j)` from a least-squares fit of
/// `ln ||a_j||` against `j` over `j in [J/2, J]`, with `||.||` the Sobolev
/// norm of index `norm.sigma`. `+inf` when those coefficients vanish.
pub fn time_radius(series: &TaylorSeries, norm: &ScaleParams) -> Result<f64> {
    if series.order < 8 {
        return Err(Error::InsufficientData(format!(
            "time radius needs order >= 8, got {}",
            series.order
        )));
    }
    let lo = series.order / 2;
    let pts: Vec<(f64, f64)> = (lo..=series.order)
        .map(|j| (j as f64, sobolev_norm(&series.coeffs_u1[j], norm.sigma)))
        .filter(|&(_, v)| v > 0.0)
        .map(|(j, v)| (j, v.ln()))
        .collect();
    if pts.is_empty() {
        return Ok(f64::INFINITY);
    }
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} nonzero coefficients in the fit window",
            pts.len()
        )));
    }
    Ok((-crate::scale::least_squares_slope(&pts)).exp())
}

/// Sup norm of the non-constant part of `u2_j - d/dx u1_j` for each `j`.
pub fn consistency_defect(series: &TaylorSeries) -> Vec<f64> {
    series
        .coeffs_u1
        .iter()
        .zip(&series.coeffs_u2)
        .map(|(a, b)| (b - &derivative(a)).sup_norm_nonconstant())
        .collect()
}

/// Constant part of `u2_j - d/dx u1_j` for each `j`.
pub fn defect_mean(series: &TaylorSeries) -> Vec<f64> {
    series
        .coeffs_u1
        .iter()
        .zip(&series.coeffs_u2)
        .map(|(a, b)| (b - &derivative(a)).mean())
        .collect()
}

/// Piecewise Taylor integration: the series of order `order` is rebuilt
/// from `(u, u_x)` every `interval`.
#[derive(Debug, Clone)]
pub struct TaylorRun {
    pub u: SpectralField,
    pub t: f64,
    pub params: ModelParams,
    pub order: usize,
    pub interval: f64,
    pub closure: Closure,
    pub scale: ScaleParams,
    pub history: Vec<RunRecord>,
    peak_slope: f64,
}

impl TaylorRun {
    pub fn new(
        u0: SpectralField,
        params: ModelParams,
        order: usize,
        interval: f64,
    ) -> Result<Self> {
        if !(interval > 0.0 && interval.is_finite()) {
            return Err(Error::Precondition(format!(
                "re-expansion interval must be positive, got {interval}"
            )));
        }
        if order == 0 {
            return Err(Error::Precondition(
                "Taylor order must be at least 1".into(),
            ));
        }
        Ok(Self {
            u: u0,
            t: 0.0,
            params,
            order,
            interval,
            closure: Closure::MeanFree,
            scale: ScaleParams::new(0.5)?,
            history: Vec::new(),
            peak_slope: 0.0,
        })
    }

    pub fn with_closure(mut self, closure: Closure) -> Self {
        self.closure = closure;
        self
    }

    pub fn with_scale(mut self, scale: ScaleParams) -> Self {
        self.scale = scale;
        self
    }

    /// Advances by `h` with a single expansion about the current time.
    pub fn advance(&mut self, h: f64) -> Result<()> {
        let series = taylor_coeffs_with(&self.u, &self.params, self.order, self.closure)?;
        self.u = series.evaluate(h).0;
        self.t += h;
        Ok(())
    }

    pub fn record(&mut self, dt_used: f64) {
        let rec = diagnostics(&self.u, self.t, dt_used, &self.scale);
        self.history.push(rec);
    }

    pub fn integrate(&mut self, t_end: f64, record_every: usize) -> Result<Termination> {
        let record_every = record_every.max(1);
        if self.history.is_empty() {
            self.record(0.0);
        }
        let eps = 1e-12 * t_end.abs().max(1.0);
        let mut steps = 0usize;
        while self.t < t_end - eps {
            let h = self.interval.min(t_end - self.t);
            self.advance(h)?;
            if (t_end - self.t).abs() <= eps {
                self.t = t_end;
            }
            steps += 1;
            if let Some(term) = breakdown_check(&self.u, self.t, &mut self.peak_slope) {
                self.record(h);
                return Ok(term);
            }
            if steps % record_every == 0 || self.t >= t_end - eps {
                self.record(h);
            }
        }
        Ok(Termination::Completed)
    }
}
