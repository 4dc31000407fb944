//! Fourier representation of real 1-periodic fields on the unit circle and
//! the exact operators built on it: derivative, mean-projected
//! antiderivative, dealiased products, composition with circle
//! diffeomorphisms and their inversion.
//!
//! Convention: `f(x) = sum_n f_n exp(2 pi i n x)` over `n = -N/2+1 ..= N/2`,
//! sampled at `x_j = j / N`. Only `n = 0 ..= N/2` is stored; negative modes
//! follow from Hermitian symmetry. The Nyquist mode is stored as a real
//! number and evaluated off-grid as `f_{N/2} cos(pi N x)`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub(crate) const TWO_PI: f64 = 2.0 * PI;

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLANS: RefCell<HashMap<usize, PlanPair>> = RefCell::new(HashMap::new());
}

fn plans(n: usize) -> PlanPair {
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
            })
            .clone()
    })
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidGridSize(n));
    }
    Ok(())
}

pub(crate) fn same_size(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::SizeMismatch { left: a, right: b });
    }
    Ok(())
}

/// Physics parameters shared by every solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelParams {
    p: u32,
    pub dealias: bool,
}

impl ModelParams {
    pub fn new(p: u32) -> Result<Self> {
        if p == 0 {
            return Err(Error::ZeroPower(p));
        }
        Ok(Self { p, dealias: true })
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    /// Nonlinearity exponent.
    pub fn p(&self) -> u32 {
        self.p
    }
}

/// A real periodic field stored by its Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    n: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    /// Zero field on an `n`-point grid. Panics if `n` is odd or zero.
    pub fn zeros(n: usize) -> Self {
        check_size(n).expect("invalid grid size");
        Self {
            n,
            coeffs: vec![Complex64::new(0.0, 0.0); n / 2 + 1],
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut f = Self::zeros(n);
        f.coeffs[0] = Complex64::new(c, 0.0);
        f
    }

    /// Samples `func` on the grid and transforms.
    pub fn from_fn(n: usize, func: impl Fn(f64) -> f64) -> Self {
        check_size(n).expect("invalid grid size");
        let grid: Vec<f64> = (0..n).map(|j| func(j as f64 / n as f64)).collect();
        Self::from_grid(&grid).expect("size checked above")
    }

    pub fn from_grid(values: &[f64]) -> Result<Self> {
        let n = values.len();
        check_size(n)?;
        let (fwd, _) = plans(n);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fwd.process(&mut buf);
        let scale = 1.0 / n as f64;
        let mut coeffs: Vec<Complex64> = buf[..=n / 2].iter().map(|c| c * scale).collect();
        coeffs[0].im = 0.0;
        coeffs[n / 2].im = 0.0;
        Ok(Self { n, coeffs })
    }

    /// Builds a field from coefficients for `n = 0 ..= N/2`. Imaginary parts
    /// of the mean and Nyquist modes are discarded.
    pub fn from_coeffs(n: usize, mut coeffs: Vec<Complex64>) -> Result<Self> {
        check_size(n)?;
        if coeffs.len() != n / 2 + 1 {
            return Err(Error::Precondition(format!(
                "expected {} coefficients for n_modes = {n}, got {}",
                n / 2 + 1,
                coeffs.len()
            )));
        }
        coeffs[0].im = 0.0;
        coeffs[n / 2].im = 0.0;
        Ok(Self { n, coeffs })
    }

    pub fn n_modes(&self) -> usize {
        self.n
    }

    /// Coefficients for wavenumbers `0 ..= N/2`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of wavenumber `k`, negative `k` by conjugate symmetry,
    /// zero outside the resolved band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let half = (self.n / 2) as i64;
        if k.abs() > half {
            Complex64::new(0.0, 0.0)
        } else if k >= 0 {
            self.coeffs[k as usize]
        } else {
            self.coeffs[(-k) as usize].conj()
        }
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.n;
        let (_, inv) = plans(n);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[0] = self.coeffs[0];
        for k in 1..n / 2 {
            buf[k] = self.coeffs[k];
            buf[n - k] = self.coeffs[k].conj();
        }
        buf[n / 2] = self.coeffs[n / 2];
        inv.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Grid points `x_j = j/N`.
    pub fn nodes(&self) -> Vec<f64> {
        grid_nodes(self.n)
    }

    /// Evaluates the trigonometric interpolant at an arbitrary point.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).0
    }

    /// Interpolant value and its x-derivative at `x`.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let half = self.n / 2;
        let mut value = self.coeffs[0].re;
        let mut slope = 0.0;
        let step = Complex64::from_polar(1.0, TWO_PI * x);
        let mut rot = step;
        for k in 1..half {
            // resync the rotation to keep the recurrence error bounded
            if k % 64 == 0 {
                rot = Complex64::from_polar(1.0, TWO_PI * k as f64 * x);
            }
            let term = self.coeffs[k] * rot;
            value += 2.0 * term.re;
            slope -= 2.0 * TWO_PI * k as f64 * term.im;
            rot *= step;
        }
        let nyq = self.coeffs[half].re;
        if nyq != 0.0 {
            let phase = PI * self.n as f64 * x;
            value += nyq * phase.cos();
            slope -= nyq * PI * self.n as f64 * phase.sin();
        }
        (value, slope)
    }

    pub fn sup_norm(&self) -> f64 {
        self.grid().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Grid sup-norm of `self - other`.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        assert_eq!(self.n, other.n, "field sizes differ");
        let a = self.grid();
        let b = other.grid();
        a.iter()
            .zip(&b)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    /// Sup-norm over grid points of the non-constant part.
    pub fn sup_norm_nonconstant(&self) -> f64 {
        self.without_mean().sup_norm()
    }

    pub fn without_mean(&self) -> SpectralField {
        let mut out = self.clone();
        out.coeffs[0] = Complex64::new(0.0, 0.0);
        out
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        SpectralField {
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> SpectralField {
        assert_eq!(self.n, other.n, "field sizes differ");
        SpectralField {
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + y * a)
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Zeroes every mode with `|k| > kmax`.
    pub fn truncated(&self, kmax: usize) -> SpectralField {
        let mut out = self.clone();
        for (k, c) in out.coeffs.iter_mut().enumerate() {
            if k > kmax {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// 2/3-rule projection: keeps `|k| <= N/3`.
    pub fn dealiased(&self) -> SpectralField {
        self.truncated(dealias_cutoff(self.n))
    }

    /// Same function on an `m`-point grid (zero padding or truncation).
    pub fn resampled(&self, m: usize) -> SpectralField {
        let mut out = SpectralField::zeros(m);
        let keep = (m / 2).min(self.n / 2);
        for k in 0..=keep {
            let mut c = self.coeffs[k];
            // a Nyquist mode that is no longer Nyquist splits over +-k
            if k == self.n / 2 && k < m / 2 {
                c *= 0.5;
            }
            out.coeffs[k] = c;
        }
        out.coeffs[m / 2].im = 0.0;
        out
    }

    /// Grid-quadrature mean of the pointwise product of two fields.
    pub fn inner_mean(&self, other: &SpectralField) -> f64 {
        assert_eq!(self.n, other.n, "field sizes differ");
        let a = self.grid();
        let b = other.grid();
        a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / self.n as f64
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, a: f64) -> SpectralField {
        self.scaled(a)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

pub fn grid_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 / n as f64).collect()
}

pub fn dealias_cutoff(n: usize) -> usize {
    n / 3
}

/// Spectral x-derivative. The Nyquist mode is dropped: its derivative
/// vanishes at every grid point.
pub fn derivative(f: &SpectralField) -> SpectralField {
    let mut out = SpectralField::zeros(f.n);
    for k in 1..f.n / 2 {
        out.coeffs[k] = f.coeffs[k] * Complex64::new(0.0, TWO_PI * k as f64);
    }
    out
}

/// Mean-projected antiderivative: the zero-mean primitive of `f - mean(f)`.
pub fn antiderivative(f: &SpectralField) -> SpectralField {
    let mut out = SpectralField::zeros(f.n);
    for k in 1..f.n / 2 {
        out.coeffs[k] = f.coeffs[k] / Complex64::new(0.0, TWO_PI * k as f64);
    }
    out
}

/// Pointwise product of two fields, with 2/3-rule truncation of both inputs
/// and of the result when `dealias` is set.
pub fn multiply(f: &SpectralField, g: &SpectralField, dealias: bool) -> Result<SpectralField> {
    same_size(f.n, g.n)?;
    let (a, b) = if dealias {
        (f.dealiased().grid(), g.dealiased().grid())
    } else {
        (f.grid(), g.grid())
    };
    let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let out = SpectralField::from_grid(&prod)?;
    Ok(if dealias { out.dealiased() } else { out })
}

/// `f^p` by repeated [`multiply`].
pub fn power(f: &SpectralField, p: u32, dealias: bool) -> Result<SpectralField> {
    if p == 0 {
        return Err(Error::ZeroPower(p));
    }
    let base = if dealias { f.dealiased() } else { f.clone() };
    let mut acc = base.clone();
    for _ in 1..p {
        acc = multiply(&acc, &base, dealias)?;
    }
    Ok(acc)
}

/// `f^p` with `f^0` read as the constant 1.
pub(crate) fn power_or_one(f: &SpectralField, p: u32, dealias: bool) -> SpectralField {
    if p == 0 {
        SpectralField::constant(f.n, 1.0)
    } else {
        power(f, p, dealias).expect("p >= 1")
    }
}

/// Orientation-preserving circle diffeomorphism `gamma(x) = x + d(x)` with a
/// periodic displacement `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Diffeo {
    displacement: SpectralField,
    values: Vec<f64>,
    jacobian: Vec<f64>,
}

impl Diffeo {
    pub fn identity(n: usize) -> Self {
        Self::from_displacement(SpectralField::zeros(n)).expect("identity is a diffeomorphism")
    }

    /// Rigid rotation `x + a`.
    pub fn shift(n: usize, a: f64) -> Self {
        Self::from_displacement(SpectralField::constant(n, a))
            .expect("rotation is a diffeomorphism")
    }

    /// Fails with [`Error::Breakdown`] unless `1 + d'(x_j) > 0` on the grid.
    pub fn from_displacement(displacement: SpectralField) -> Result<Self> {
        let d = Self::new_unchecked(displacement);
        d.ensure_diffeomorphic()?;
        Ok(d)
    }

    /// Builds the map without the monotonicity check; callers inspect
    /// [`Diffeo::min_jacobian`] themselves.
    pub fn new_unchecked(displacement: SpectralField) -> Self {
        let disp = displacement.grid();
        let values = displacement
            .nodes()
            .iter()
            .zip(&disp)
            .map(|(x, d)| x + d)
            .collect();
        let jacobian = derivative(&displacement)
            .grid()
            .into_iter()
            .map(|v| 1.0 + v)
            .collect();
        Self {
            displacement,
            values,
            jacobian,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.displacement.n
    }

    pub fn displacement(&self) -> &SpectralField {
        &self.displacement
    }

    /// `gamma(x_j)` on the grid.
    pub fn grid_values(&self) -> &[f64] {
        &self.values
    }

    /// `d gamma / dx` at the grid points.
    pub fn jacobian(&self) -> &[f64] {
        &self.jacobian
    }

    /// `d gamma / dx` as a field.
    pub fn jacobian_field(&self) -> SpectralField {
        let mut j = derivative(&self.displacement);
        j.coeffs[0] = Complex64::new(1.0, 0.0);
        j
    }

    pub fn min_jacobian(&self) -> f64 {
        self.jacobian.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn ensure_diffeomorphic(&self) -> Result<()> {
        let m = self.min_jacobian();
        if !(m > 0.0) {
            return Err(Error::Breakdown { min_jacobian: m });
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        x + self.displacement.eval(x)
    }
}

/// Samples `f(gamma(x_j))` by direct interpolant summation. Exact for
/// trigonometric polynomials up to rounding; O(N^2).
pub fn compose(f: &SpectralField, gamma: &Diffeo) -> Result<SpectralField> {
    same_size(f.n, gamma.n_modes())?;
    gamma.ensure_diffeomorphic()?;
    let values: Vec<f64> = gamma.grid_values().iter().map(|&y| f.eval(y)).collect();
    SpectralField::from_grid(&values)
}

const INVERSION_TOL: f64 = 1e-12;

/// Inverse diffeomorphism, solving `y + d(y) = x_j` per grid point with a
/// bracketed Newton iteration that falls back to bisection.
pub fn invert_diffeo(gamma: &Diffeo) -> Result<Diffeo> {
    gamma.ensure_diffeomorphic()?;
    let d = gamma.displacement();
    let disp = d.grid();
    let dmin = disp.iter().copied().fold(f64::INFINITY, f64::min);
    let dmax = disp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let margin = 0.1 * (dmax - dmin) + 1e-3;
    let nodes = d.nodes();
    let mut inverse_disp = Vec::with_capacity(nodes.len());
    for &x in &nodes {
        let y = solve_monotone(
            |y| {
                let (v, s) = d.eval_with_derivative(y);
                (y + v - x, 1.0 + s)
            },
            x - dmax - margin,
            x - dmin + margin,
        )?;
        inverse_disp.push(y - x);
    }
    Diffeo::from_displacement(SpectralField::from_grid(&inverse_disp)?)
}

fn solve_monotone(g: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut g_lo = g(lo).0;
    let mut g_hi = g(hi).0;
    // widen until the root is bracketed
    let mut widen = 0;
    while g_lo > 0.0 || g_hi < 0.0 {
        widen += 1;
        if widen > 60 {
            return Err(Error::Breakdown {
                min_jacobian: f64::NAN,
            });
        }
        let w = hi - lo;
        if g_lo > 0.0 {
            lo -= w;
            g_lo = g(lo).0;
        }
        if g_hi < 0.0 {
            hi += w;
            g_hi = g(hi).0;
        }
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (val, slope) = g(y);
        if val.abs() <= INVERSION_TOL * 1e-2 {
            return Ok(y);
        }
        if val < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let newton = y - val / slope;
        y = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < INVERSION_TOL * 1e-2 {
            return Ok(y);
        }
    }
    Ok(y)
}

/// The conjugated antiderivative in its closed form `antiderivative(f * gamma_x)`.
/// Satisfies `conj(f) - antiderivative(f) = antiderivative(f (gamma_x - 1))`
/// exactly; it agrees with the literal conjugation up to mean-gauge terms,
/// see [`conjugated_antiderivative_exact`].
pub fn conjugated_antiderivative(f: &SpectralField, gamma: &Diffeo) -> Result<SpectralField> {
    same_size(f.n, gamma.n_modes())?;
    if gamma
        .displacement
        .coeffs
        .iter()
        .all(|c| c.norm_sqr() == 0.0)
    {
        return Ok(antiderivative(f));
    }
    let weighted = pointwise(f, gamma.jacobian(), |a, b| a * b);
    Ok(antiderivative(&weighted))
}

/// The literal conjugation `(antiderivative(f o gamma^-1)) o gamma` computed
/// without composition or inversion.
///
/// With `q = f gamma_x` and `m = mean(q)` (the mean of `f o gamma^-1`), the
/// primitive picks up `-m d` from the non-periodic part and a constant that
/// restores zero mean in the `y = gamma(x)` variable:
/// `antiderivative(q) - m d - mean((antiderivative(q) - m d) gamma_x)`.
pub fn conjugated_antiderivative_exact(f: &SpectralField, gamma: &Diffeo) -> Result<SpectralField> {
    same_size(f.n, gamma.n_modes())?;
    let q = pointwise(f, gamma.jacobian(), |a, b| a * b);
    let m = q.mean();
    let base = antiderivative(&q).axpy(-m, gamma.displacement());
    let c = weighted_mean(&base, gamma.jacobian());
    let mut out = base;
    out.coeffs[0].re -= c;
    Ok(out)
}

/// Applies `op(f(x_j), w_j)` on the grid.
pub(crate) fn pointwise(
    f: &SpectralField,
    w: &[f64],
    op: impl Fn(f64, f64) -> f64,
) -> SpectralField {
    let vals: Vec<f64> = f.grid().iter().zip(w).map(|(&a, &b)| op(a, b)).collect();
    SpectralField::from_grid(&vals).expect("grid size already valid")
}

/// Grid mean of `f * w`.
pub(crate) fn weighted_mean(f: &SpectralField, w: &[f64]) -> f64 {
    f.grid().iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / f.n as f64
}
