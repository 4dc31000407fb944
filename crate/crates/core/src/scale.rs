//! Norm analytics: Sobolev norms, the truncated analytic-scale norms
//! `|||u|||_s = sup_k ||d^k u||_{H^sigma} s^k (k+1)^2 / k!`, the operators
//! `P1 = -d/dx` and `P2 = antiderivative` with their scale estimates, and
//! analyticity-strip fitting from Fourier decay.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{antiderivative, derivative, multiply, SpectralField, TWO_PI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams {
    pub s: f64,
    pub sigma: f64,
    pub k_max: usize,
}

impl ScaleParams {
    pub fn new(s: f64) -> Result<Self> {
        Self {
            s,
            sigma: 2.0,
            k_max: 30,
        }
        .validated()
    }

    pub fn with_sigma(self, sigma: f64) -> Result<Self> {
        Self { sigma, ..self }.validated()
    }

    pub fn with_k_max(self, k_max: usize) -> Result<Self> {
        Self { k_max, ..self }.validated()
    }

    fn validated(self) -> Result<Self> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::Precondition(format!(
                "scale parameter s = {} must lie in (0, 1)",
                self.s
            )));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::Precondition(format!(
                "sigma = {} must be nonnegative",
                self.sigma
            )));
        }
        if self.k_max == 0 {
            return Err(Error::Precondition("k_max must be at least 1".into()));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub value: f64,
    pub argmax_k: usize,
    /// The last three k-terms are each below `1e-6 * value`.
    pub truncation_ok: bool,
}

impl NormReport {
    pub const CSV_HEADER: &'static str = "value,argmax_k,truncation_ok";

    pub fn csv_row(&self) -> String {
        format!("{},{},{}", self.value, self.argmax_k, self.truncation_ok)
    }
}

/// `(sum_n (1 + (2 pi n)^2)^s |f_n|^2)^(1/2)` over all resolved `n`.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    let half = f.n_modes() / 2;
    f.coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mult = if k == 0 || k == half { 1.0 } else { 2.0 };
            mult * (1.0 + (TWO_PI * k as f64).powi(2)).powf(s) * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Scale norm of a zero-mean field.
pub fn scale_norm(f: &SpectralField, params: &ScaleParams) -> Result<NormReport> {
    let tol = 1e-12 * sobolev_norm(f, 0.0).max(1.0);
    if f.mean().abs() > tol {
        return Err(Error::Precondition(format!(
            "scale norms need zero mean, got mean {:e}",
            f.mean()
        )));
    }
    Ok(scale_norm_unchecked(f, params))
}

/// The scale-norm formula without the zero-mean precondition (products of
/// zero-mean fields generally have a mean).
pub fn scale_norm_unchecked(f: &SpectralField, params: &ScaleParams) -> NormReport {
    let terms = log_terms(f, params);
    let (argmax_k, log_max) =
        terms
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, v)| {
                if v > best.1 {
                    (k, v)
                } else {
                    best
                }
            });
    if log_max == f64::NEG_INFINITY {
        return NormReport {
            value: 0.0,
            argmax_k: 0,
            truncation_ok: true,
        };
    }
    let cut = log_max + 1e-6_f64.ln();
    let tail = terms.len().saturating_sub(3);
    let truncation_ok = terms[tail..].iter().all(|&t| t < cut);
    NormReport {
        value: log_max.exp(),
        argmax_k,
        truncation_ok,
    }
}

/// `ln(||d^k f||_{H^sigma} s^k (k+1)^2 / k!)` for `k = 0..=k_max`.
fn log_terms(f: &SpectralField, params: &ScaleParams) -> Vec<f64> {
    let half = f.n_modes() / 2;
    // per-mode pieces: ln(mult |f_n|^2 (1+(2 pi n)^2)^sigma) and ln(2 pi n)
    let modes: Vec<(f64, f64)> = f
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(k, c)| {
            let mult: f64 = if k == 0 || k == half { 1.0 } else { 2.0 };
            let w = TWO_PI * k as f64;
            let base = mult.ln() + c.norm_sqr().ln() + params.sigma * (1.0 + w * w).ln();
            (base, if k == 0 { f64::NEG_INFINITY } else { w.ln() })
        })
        .collect();
    let mut log_fact = 0.0;
    (0..=params.k_max)
        .map(|k| {
            if k > 0 {
                log_fact += (k as f64).ln();
            }
            let exps: Vec<f64> = modes
                .iter()
                .filter(|(_, lw)| k == 0 || lw.is_finite())
                .map(|(b, lw)| b + if k == 0 { 0.0 } else { 2.0 * k as f64 * lw })
                .collect();
            let log_sq = log_sum_exp(&exps);
            0.5 * log_sq + k as f64 * params.s.ln() + 2.0 * ((k + 1) as f64).ln() - log_fact
        })
        .collect()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `P1(u) = -du/dx`.
pub fn op_p1(f: &SpectralField) -> SpectralField {
    -&derivative(f)
}

/// `P2(u)`: the mean-projected antiderivative.
pub fn op_p2(f: &SpectralField) -> SpectralField {
    antiderivative(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lemma {
    /// `|||P1 u|||_{s'} <= |||u|||_s / (s - s')`
    P1,
    /// `|||P2 u|||_s <= |||u|||_s`
    P2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub lemma: Lemma,
    pub witness: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub violations: Vec<Violation>,
    /// Largest `lhs / rhs` seen for each estimate (0 when every rhs is 0).
    pub p1_worst_ratio: f64,
    pub p2_worst_ratio: f64,
    /// Empirical `max |||uv|||_s / (|||u|||_s |||v|||_s)` over all pairs.
    pub algebra_constant: f64,
    /// Norm evaluations whose k-series had not decayed by `k_max`.
    pub truncation_warnings: usize,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const LEMMA_SLACK: f64 = 1e-9;

/// Evaluates both operator estimates on every corpus element and the algebra
/// ratio on every unordered pair (including `u = v`). Products are
/// denoised first so FFT roundoff in high modes is not amplified by the weights.
pub fn check_lemma_bounds(
    corpus: &[SpectralField],
    s: f64,
    s_prime: f64,
    params: &ScaleParams,
) -> Result<LemmaReport> {
    if !(0.0 < s_prime && s_prime < s && s < 1.0) {
        return Err(Error::Precondition(format!(
            "need 0 < s' < s < 1, got s = {s}, s' = {s_prime}"
        )));
    }
    let at_s = ScaleParams { s, ..*params };
    let at_sp = ScaleParams {
        s: s_prime,
        ..*params
    };
    let mut report = LemmaReport {
        violations: Vec::new(),
        p1_worst_ratio: 0.0,
        p2_worst_ratio: 0.0,
        algebra_constant: 0.0,
        truncation_warnings: 0,
    };
    let norm = |f: &SpectralField, p: &ScaleParams, warnings: &mut usize| {
        let r = scale_norm_unchecked(f, p);
        if !r.truncation_ok {
            *warnings += 1;
        }
        r.value
    };
    let mut norms_s = Vec::with_capacity(corpus.len());
    for (i, u) in corpus.iter().enumerate() {
        let nu = norm(u, &at_s, &mut report.truncation_warnings);
        norms_s.push(nu);
        let checks = [
            (
                Lemma::P1,
                norm(&op_p1(u), &at_sp, &mut report.truncation_warnings),
                nu / (s - s_prime),
            ),
            (
                Lemma::P2,
                norm(&op_p2(u), &at_s, &mut report.truncation_warnings),
                nu,
            ),
        ];
        for (lemma, lhs, rhs) in checks {
            let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
            match lemma {
                Lemma::P1 => report.p1_worst_ratio = report.p1_worst_ratio.max(ratio),
                Lemma::P2 => report.p2_worst_ratio = report.p2_worst_ratio.max(ratio),
            }
            if lhs > rhs * (1.0 + LEMMA_SLACK) {
                report.violations.push(Violation {
                    lemma,
                    witness: i,
                    lhs,
                    rhs,
                });
            }
        }
    }
    for i in 0..corpus.len() {
        for j in i..corpus.len() {
            let denom = norms_s[i] * norms_s[j];
            if denom == 0.0 {
                continue;
            }
            let uv = denoised(&multiply(&corpus[i], &corpus[j], false)?);
            let ratio = norm(&uv, &at_s, &mut report.truncation_warnings) / denom;
            report.algebra_constant = report.algebra_constant.max(ratio);
        }
    }
    Ok(report)
}

pub const MIN_USABLE_MODES: usize = 4;

/// Relative amplitude below which Fourier modes are treated as roundoff.
pub const NOISE_FLOOR: f64 = 1e-14;

/// Zeroes every mode with `|f_n| <= NOISE_FLOOR * max_{n>=1} |f_n|`.
pub fn denoised(f: &SpectralField) -> SpectralField {
    let peak = f.coeffs()[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let cut = NOISE_FLOOR * peak;
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(n, c)| {
            if n > 0 && c.norm() <= cut {
                Complex64::new(0.0, 0.0)
            } else {
                *c
            }
        })
        .collect();
    SpectralField::from_coeffs(f.n_modes(), coeffs).expect("same grid")
}

/// Scale norm of the zero-mean, denoised part of `u`. Roundoff in high
/// modes would otherwise dominate the `k`-weights.
pub fn resolved_scale_norm(u: &SpectralField, params: &ScaleParams) -> NormReport {
    scale_norm_unchecked(&denoised(&u.without_mean()), params)
}

/// Least-squares fit of `|f_n| ~ C exp(-2 pi rho n)`; returns the strip
/// half-width `rho`.
///
/// Modes are usable above `1e-14 max|f_n|`. With fewer than
/// [`MIN_USABLE_MODES`] usable modes the field counts as band-limited and the
/// `+inf` sentinel is returned. The
/// fit window runs from the first mode below `0.1 max|f_n|` to the last
/// usable mode.
pub fn fit_radius(f: &SpectralField) -> Result<f64> {
    let amps: Vec<f64> = f.coeffs().iter().map(|c| c.norm()).collect();
    let peak = amps[1..].iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(f64::INFINITY);
    }
    let floor = NOISE_FLOOR * peak;
    let usable = amps[1..].iter().filter(|&&a| a > floor).count();
    if usable < MIN_USABLE_MODES {
        return Ok(f64::INFINITY);
    }
    let start = match (1..amps.len()).find(|&n| amps[n] < 0.1 * peak) {
        Some(n) => n,
        None => {
            return Err(Error::InsufficientData(
                "spectrum never drops below 10% of its peak".into(),
            ))
        }
    };
    let end = (1..amps.len())
        .rev()
        .find(|&n| amps[n] > floor)
        .unwrap_or(0);
    let pts: Vec<(f64, f64)> = (start..=end)
        .filter(|&n| amps[n] > floor)
        .map(|n| (n as f64, amps[n].ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} modes in the fit window",
            pts.len()
        )));
    }
    let slope = least_squares_slope(&pts);
    Ok((-slope / TWO_PI).max(0.0))
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::num_complex::Complex64;

    const N: usize = 64;

    fn sin1() -> SpectralField {
        SpectralField::from_fn(N, |x| (TWO_PI * x).sin())
    }

    #[test]
    fn sobolev_examples() {
        assert_eq!(sobolev_norm(&SpectralField::zeros(N), 1.5), 0.0);
        assert!((sobolev_norm(&SpectralField::constant(N, -3.0), 2.7) - 3.0).abs() < 1e-15);
        let c = SpectralField::from_fn(N, |x| (TWO_PI * x).cos());
        let quad = (c.grid().iter().map(|v| v * v).sum::<f64>() / N as f64).sqrt();
        assert!((sobolev_norm(&c, 0.0) - 0.5_f64.sqrt()).abs() < 1e-15);
        assert!((sobolev_norm(&c, 0.0) - quad).abs() < 1e-15);
    }

    #[test]
    fn scale_norm_of_sine_matches_direct_sum() {
        let p = ScaleParams::new(0.05).unwrap();
        let r = scale_norm(&sin1(), &p).unwrap();
        // direct evaluation of every term
        let mut best = (0.0, 0usize);
        let mut fact = 1.0;
        for k in 0..=30 {
            if k > 0 {
                fact *= k as f64;
            }
            let t = TWO_PI.powi(k as i32) * (1.0 + TWO_PI * TWO_PI) / 2f64.sqrt()
                * 0.05f64.powi(k as i32)
                * ((k + 1) as f64).powi(2)
                / fact;
            if t > best.0 {
                best = (t, k);
            }
        }
        assert!((r.value - best.0).abs() < 1e-12 * best.0);
        assert_eq!(r.argmax_k, best.1);
        assert!(r.truncation_ok);
    }

    #[test]
    fn scale_norm_zero_and_precondition() {
        let p = ScaleParams::new(0.5).unwrap();
        let r = scale_norm(&SpectralField::zeros(N), &p).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(matches!(
            scale_norm(&SpectralField::constant(N, 1.0), &p),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn truncation_flag_detects_slow_decay() {
        // harmonic 8 at s = 0.9: terms still growing at k = 30
        let f = SpectralField::from_fn(N, |x| (8.0 * TWO_PI * x).cos());
        let r = scale_norm(&f, &ScaleParams::new(0.9).unwrap()).unwrap();
        assert!(!r.truncation_ok);
        assert_eq!(r.argmax_k, 30);
    }

    #[test]
    fn scale_norm_monotone_in_s() {
        let f = SpectralField::from_fn(N, |x| (TWO_PI * x).sin() + 0.3 * (3.0 * TWO_PI * x).cos());
        let mut last = 0.0;
        for s in [0.05, 0.1, 0.3, 0.5, 0.9] {
            let v = scale_norm(&f, &ScaleParams::new(s).unwrap()).unwrap().value;
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn params_validation() {
        assert!(ScaleParams::new(0.0).is_err());
        assert!(ScaleParams::new(1.0).is_err());
        assert!(ScaleParams::new(0.5).unwrap().with_k_max(0).is_err());
        assert!(ScaleParams::new(0.5).unwrap().with_sigma(-1.0).is_err());
    }

    #[test]
    fn operator_examples() {
        let s = sin1();
        let expected = SpectralField::from_fn(N, |x| -TWO_PI * (TWO_PI * x).cos());
        assert!(op_p1(&s).max_abs_diff(&expected) < 1e-12);
        let f = SpectralField::from_fn(N, |x| {
            0.4 + (TWO_PI * x).sin() - 0.2 * (2.0 * TWO_PI * x).cos()
        });
        let back = op_p2(&op_p1(&f));
        assert!(back.max_abs_diff(&(-&f.without_mean())) < 1e-14);
        let c = SpectralField::from_fn(N, |x| (TWO_PI * x).cos());
        assert!(
            op_p2(&c).max_abs_diff(&SpectralField::from_fn(N, |x| (TWO_PI * x).sin() / TWO_PI))
                < 1e-15
        );
    }

    #[test]
    fn lemma_check_trivial_corpus() {
        let p = ScaleParams::new(0.1).unwrap();
        let r = check_lemma_bounds(&[SpectralField::zeros(N)], 0.1, 0.05, &p).unwrap();
        assert!(r.passed());
        assert_eq!(
            (r.p1_worst_ratio, r.p2_worst_ratio, r.algebra_constant),
            (0.0, 0.0, 0.0)
        );
        assert!(check_lemma_bounds(&[], 0.05, 0.1, &p).is_err());
    }

    #[test]
    fn algebra_constant_does_not_grow_with_k_max() {
        let corpus = crate::corpus::trig_corpus(11, 12, 8, N);
        let c = |k_max| {
            let p = ScaleParams::new(0.9).unwrap().with_k_max(k_max).unwrap();
            check_lemma_bounds(&corpus, 0.9, 0.45, &p)
                .unwrap()
                .algebra_constant
        };
        let (short, long) = (c(30), c(200));
        assert!(long < 1.0 && short < 1.0, "{short} {long}");
    }

    #[test]
    fn p1_estimate_on_cosine() {
        let c = SpectralField::from_fn(N, |x| (TWO_PI * x).cos());
        let p = ScaleParams::new(0.1).unwrap();
        let lhs = scale_norm(&op_p1(&c), &ScaleParams::new(0.05).unwrap())
            .unwrap()
            .value;
        let rhs = 20.0 * scale_norm(&c, &p).unwrap().value;
        assert!(lhs <= rhs);
        assert!(check_lemma_bounds(&[c], 0.1, 0.05, &p).unwrap().passed());
    }

    #[test]
    fn radius_of_poisson_kernel() {
        let n = 256;
        let rho0 = 0.03;
        let r = (-TWO_PI * rho0).exp();
        let coeffs: Vec<Complex64> = (0..=n / 2)
            .map(|k| Complex64::new(r.powi(k as i32), 0.0))
            .collect();
        let f = SpectralField::from_coeffs(n, coeffs).unwrap();
        let rho = fit_radius(&f).unwrap();
        assert!((rho - rho0).abs() < 0.01 * rho0, "{rho}");
        assert_eq!(fit_radius(&f.scaled(2.0)).unwrap(), rho);
    }

    #[test]
    fn radius_sentinels_and_errors() {
        assert_eq!(fit_radius(&sin1()).unwrap(), f64::INFINITY);
        assert_eq!(
            fit_radius(&SpectralField::constant(N, 2.0)).unwrap(),
            f64::INFINITY
        );
        // flat spectrum never decays below 10% of the peak
        let flat =
            SpectralField::from_coeffs(N, vec![Complex64::new(1.0, 0.0); N / 2 + 1]).unwrap();
        assert!(matches!(fit_radius(&flat), Err(Error::InsufficientData(_))));
    }
}
