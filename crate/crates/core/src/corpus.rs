//! Seeded random test data. Every generator draws from a ChaCha8 stream
//! seeded with a single `u64`, so corpora are reproducible across runs and
//! platforms.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::lagrangian::LagrangianState;
use crate::spectral::{derivative, Diffeo, ModelParams, SpectralField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real trigonometric polynomial with harmonics `lo..=hi`, amplitudes
/// uniform in `[-1, 1]` and the given mean.
pub fn random_trig<R: Rng>(
    rng: &mut R,
    n: usize,
    lo: usize,
    hi: usize,
    mean: f64,
) -> SpectralField {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n / 2 + 1];
    coeffs[0].re = mean;
    for c in coeffs.iter_mut().take(hi + 1).skip(lo.max(1)) {
        *c = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    }
    SpectralField::from_coeffs(n, coeffs).expect("valid grid")
}

/// `count` zero-mean trigonometric polynomials of degree `1..=max_degree`.
pub fn trig_corpus(seed: u64, count: usize, max_degree: usize, n: usize) -> Vec<SpectralField> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let deg = r.gen_range(1..=max_degree);
            random_trig(&mut r, n, 1, deg, 0.0)
        })
        .collect()
}

/// Random diffeomorphism whose grid Jacobian is at least `min_jacobian`.
pub fn random_diffeo<R: Rng>(rng: &mut R, n: usize, degree: usize, min_jacobian: f64) -> Diffeo {
    let shift = rng.gen_range(-0.5..0.5);
    let d = random_trig(rng, n, 1, degree, shift);
    let slope_min = derivative(&d)
        .grid()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let room = (1.0 - min_jacobian) / (-slope_min).max(f64::MIN_POSITIVE);
    let scale = rng.gen_range(0.2..1.0) * room;
    let mean = d.mean();
    let disp = d
        .without_mean()
        .scaled(scale)
        .axpy(mean, &SpectralField::constant(n, 1.0));
    Diffeo::from_displacement(disp).expect("Jacobian bounded below")
}

/// `(f, gamma)` pairs with `deg f <= 6`, `deg d <= 4` and `min gamma_x >= min_jacobian`.
pub fn conjugation_pairs(
    seed: u64,
    count: usize,
    n: usize,
    min_jacobian: f64,
) -> Vec<(SpectralField, Diffeo)> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let deg = r.gen_range(1..=6);
            let mean = r.gen_range(-1.0..1.0);
            let f = random_trig(&mut r, n, 1, deg, mean);
            let gdeg = r.gen_range(1..=4);
            let g = random_diffeo(&mut r, n, gdeg, min_jacobian);
            (f, g)
        })
        .collect()
}

/// A Lagrangian state with a perturbation direction.
#[derive(Debug, Clone)]
pub struct DerivativeCase {
    pub state: LagrangianState,
    pub direction: SpectralField,
}

/// Finite-difference test cases: `p` alternates between 2 and 3 (for
/// `p = 1` the force is quadratic in `zeta`, so central differences are exact
/// in that direction), `zeta` of degree `<= 3` with a mean, `gamma` with
/// `min gamma_x >= 0.5`, and a direction built from harmonics 2 to 4.
pub fn derivative_cases(seed: u64, count: usize, n: usize) -> Vec<DerivativeCase> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let p = if i % 2 == 0 { 2 } else { 3 };
            let deg = r.gen_range(1..=3);
            let mean = r.gen_range(-0.5..0.5);
            let zeta = random_trig(&mut r, n, 1, deg, mean);
            let gdeg = r.gen_range(1..=3);
            let gamma = random_diffeo(&mut r, n, gdeg, 0.5);
            let direction = random_trig(&mut r, n, 2, 4, 0.0);
            let params = ModelParams::new(p).expect("p >= 1");
            let state = LagrangianState::new(gamma, zeta, 0.0, params).expect("same grid");
            DerivativeCase { state, direction }
        })
        .collect()
}
