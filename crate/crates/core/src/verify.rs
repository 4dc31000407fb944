//! Property suites with fixed seeds. Each property reports its measured
//! value against a threshold.

use serde::Serialize;

use crate::corpus::{conjugation_pairs, derivative_cases, trig_corpus};
use crate::error::{Error, Result};
use crate::eulerian::{rhs_euler, EulerianRun};
use crate::lagrangian::{
    df_dgamma, df_dzeta, force, reconstruct_u, LagrangianRun, LagrangianState,
};
use crate::scale::{check_lemma_bounds, sobolev_norm, Lemma, ScaleParams};
use crate::spectral::{
    antiderivative, compose, conjugated_antiderivative, derivative, invert_diffeo, multiply,
    power_or_one, Diffeo, ModelParams, SpectralField, TWO_PI,
};
use crate::taylor::{
    consistency_defect, defect_mean, taylor_coeffs, taylor_coeffs_with, time_radius, Closure,
    TaylorRun,
};

pub const DEFAULT_SEED: u64 = 0x6d68_7331;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Spectral,
    Lemmas,
    Derivatives,
    Equivalence,
    Conservation,
    Taylor,
    All,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Spectral,
        Suite::Lemmas,
        Suite::Derivatives,
        Suite::Equivalence,
        Suite::Conservation,
        Suite::Taylor,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Spectral => "spectral",
            Suite::Lemmas => "lemmas",
            Suite::Derivatives => "derivatives",
            Suite::Equivalence => "equivalence",
            Suite::Conservation => "conservation",
            Suite::Taylor => "taylor",
            Suite::All => "all",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Self::ALL
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub suite: &'static str,
    pub property: String,
    pub passed: bool,
    pub measured: f64,
    /// Upper bound, or the `[lo, hi]` band for ratio checks.
    pub bound: (f64, f64),
    /// Distance to the nearest edge of the admissible band (negative on failure).
    pub margin: f64,
    pub witness: Option<String>,
}

impl PropertyResult {
    fn at_most(
        suite: &'static str,
        property: impl Into<String>,
        measured: f64,
        bound: f64,
    ) -> Self {
        Self::within(suite, property, measured, f64::NEG_INFINITY, bound)
    }

    fn within(
        suite: &'static str,
        property: impl Into<String>,
        measured: f64,
        lo: f64,
        hi: f64,
    ) -> Self {
        let margin = (measured - lo).min(hi - measured);
        Self {
            suite,
            property: property.into(),
            passed: measured.is_finite() && measured >= lo && measured <= hi,
            measured,
            bound: (lo, hi),
            margin: if margin.is_nan() {
                f64::NEG_INFINITY
            } else {
                margin
            },
            witness: None,
        }
    }

    fn witness(mut self, w: impl Into<String>) -> Self {
        self.witness = Some(w.into());
        self
    }

    pub fn line(&self) -> String {
        let bound = if self.bound.0 == f64::NEG_INFINITY {
            format!("<= {:e}", self.bound.1)
        } else {
            format!("in [{}, {}]", self.bound.0, self.bound.1)
        };
        format!(
            "[{}] {}/{}: {:e} {} (margin {:e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.property,
            self.measured,
            bound,
            self.margin
        )
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<PropertyResult>> {
    match suite {
        Suite::Spectral => spectral_suite(seed),
        Suite::Lemmas => lemma_suite(seed),
        Suite::Derivatives => derivative_suite(seed),
        Suite::Equivalence => equivalence_suite(),
        Suite::Conservation => conservation_suite(),
        Suite::Taylor => taylor_suite(),
        Suite::All => {
            let mut all = Vec::new();
            for s in Suite::ALL {
                all.extend(run_suite(s, seed)?);
            }
            Ok(all)
        }
    }
}

fn spectral_suite(seed: u64) -> Result<Vec<PropertyResult>> {
    const S: &str = "spectral";
    let n = 64;
    let mut out = Vec::new();
    let corpus = trig_corpus(seed, 50, 8, n);
    let (mut inv1, mut inv2, mut pars) = (0.0_f64, 0.0_f64, 0.0_f64);
    for f in &corpus {
        let shifted = f.axpy(0.7, &SpectralField::constant(n, 1.0));
        inv1 = inv1.max(antiderivative(&derivative(&shifted)).max_abs_diff(f));
        inv2 = inv2.max(derivative(&antiderivative(&shifted)).max_abs_diff(f));
        let quad = shifted.grid().iter().map(|v| v * v).sum::<f64>() / n as f64;
        pars = pars.max((sobolev_norm(&shifted, 0.0).powi(2) - quad).abs() / quad);
    }
    out.push(PropertyResult::at_most(
        S,
        "antiderivative(derivative f) = f - mean f",
        inv1,
        1e-12,
    ));
    out.push(PropertyResult::at_most(
        S,
        "derivative(antiderivative f) = f - mean f",
        inv2,
        1e-12,
    ));
    out.push(PropertyResult::at_most(
        S,
        "Parseval for the H^0 norm (relative)",
        pars,
        1e-13,
    ));

    let pairs = conjugation_pairs(seed ^ 0x5eed, 50, 2 * n, 0.3);
    let (mut worst, mut witness) = (0.0_f64, 0);
    let mut round = 0.0_f64;
    for (i, (f, g)) in pairs.iter().enumerate() {
        let lhs = &conjugated_antiderivative(f, g)? - &antiderivative(f);
        let weight: Vec<f64> = g.jacobian().iter().map(|j| j - 1.0).collect();
        let rhs = antiderivative(&crate::spectral::pointwise(f, &weight, |a, b| a * b));
        let scale = lhs.sup_norm().max(rhs.sup_norm()).max(f64::MIN_POSITIVE);
        let rel = lhs.max_abs_diff(&rhs) / scale;
        if rel > worst {
            worst = rel;
            witness = i;
        }
        let back = compose(&compose(f, g)?, &invert_diffeo(g)?)?;
        round = round.max(back.max_abs_diff(f));
    }
    out.push(
        PropertyResult::at_most(
            S,
            "conjugation identity on 50 pairs (relative)",
            worst,
            1e-12,
        )
        .witness(format!("pair {witness}")),
    );
    out.push(PropertyResult::at_most(
        S,
        "compose(compose(f, g), g^-1) = f",
        round,
        1e-8,
    ));
    Ok(out)
}

pub const LEMMA_PAIRS: [(f64, f64); 3] = [(0.1, 0.05), (0.5, 0.25), (0.9, 0.45)];

fn lemma_suite(seed: u64) -> Result<Vec<PropertyResult>> {
    const S: &str = "lemmas";
    let corpus = trig_corpus(seed, 100, 8, 64);
    let mut out = Vec::new();
    for (s, sp) in LEMMA_PAIRS {
        for sigma in [2.0, s] {
            let params = ScaleParams::new(s)?.with_sigma(sigma)?;
            let rep = check_lemma_bounds(&corpus, s, sp, &params)?;
            let tag = format!("s={s}, s'={sp}, sigma={sigma}");
            let slack = 1.0 + crate::scale::LEMMA_SLACK;
            for (lemma, worst) in [
                (Lemma::P1, rep.p1_worst_ratio),
                (Lemma::P2, rep.p2_worst_ratio),
            ] {
                let mut r = PropertyResult::at_most(
                    S,
                    format!("{lemma:?} bound at {tag} (worst ratio)"),
                    worst,
                    slack,
                );
                if let Some(v) = rep.violations.iter().find(|v| v.lemma == lemma) {
                    r = r.witness(format!("corpus element {}", v.witness));
                }
                out.push(r);
            }
            out.push(PropertyResult::at_most(
                S,
                format!("empirical algebra constant at {tag}"),
                rep.algebra_constant,
                f64::INFINITY,
            ));
        }
    }
    Ok(out)
}

/// Error ratio `e(1e-4) / e(1e-5)` of central differences against the
/// analytic directional derivative.
pub fn fd_ratio(
    state: &LagrangianState,
    w: &SpectralField,
    gamma_direction: bool,
) -> Result<(f64, f64, f64)> {
    let exact = if gamma_direction {
        df_dgamma(state, w)?
    } else {
        df_dzeta(state, w)?
    };
    let mut errs = [0.0; 2];
    for (k, eps) in [1e-4, 1e-5].into_iter().enumerate() {
        let shifted = |e: f64| -> Result<SpectralField> {
            let s = if gamma_direction {
                LagrangianState {
                    gamma: Diffeo::new_unchecked(state.gamma.displacement().axpy(e, w)),
                    ..state.clone()
                }
            } else {
                LagrangianState {
                    zeta: state.zeta.axpy(e, w),
                    ..state.clone()
                }
            };
            force(&s)
        };
        let fd = (&shifted(eps)? - &shifted(-eps)?).scaled(0.5 / eps);
        errs[k] = fd.max_abs_diff(&exact);
    }
    Ok((errs[0] / errs[1], errs[0], errs[1]))
}

pub const DERIVATIVE_CASES: usize = 20;

fn derivative_suite(seed: u64) -> Result<Vec<PropertyResult>> {
    const S: &str = "derivatives";
    let mut out = Vec::new();
    for (dir, gamma) in [("zeta", false), ("gamma", true)] {
        let (mut lo, mut hi, mut wl, mut wh) = (f64::INFINITY, 0.0_f64, 0, 0);
        for (i, c) in derivative_cases(seed, DERIVATIVE_CASES, 64)
            .iter()
            .enumerate()
        {
            let (r, _, _) = fd_ratio(&c.state, &c.direction, gamma)?;
            if r < lo {
                lo = r;
                wl = i;
            }
            if r > hi {
                hi = r;
                wh = i;
            }
        }
        out.push(
            PropertyResult::within(
                S,
                format!("dF/d{dir} smallest FD error ratio"),
                lo,
                80.0,
                120.0,
            )
            .witness(format!("case {wl}")),
        );
        out.push(
            PropertyResult::within(
                S,
                format!("dF/d{dir} largest FD error ratio"),
                hi,
                80.0,
                120.0,
            )
            .witness(format!("case {wh}")),
        );
    }
    let case = &derivative_cases(seed, 1, 64)[0];
    let w2 = case.direction.scaled(-0.4).axpy(
        1.0,
        &SpectralField::from_fn(64, |x| (TWO_PI * 3.0 * x).cos()),
    );
    let (a, b) = (0.8, -1.7);
    let mut lin = 0.0_f64;
    for df in [df_dzeta, df_dgamma] {
        let lhs = df(&case.state, &case.direction.scaled(a).axpy(b, &w2))?;
        let rhs = df(&case.state, &case.direction)?
            .scaled(a)
            .axpy(b, &df(&case.state, &w2)?);
        lin = lin.max(lhs.max_abs_diff(&rhs));
    }
    out.push(PropertyResult::at_most(
        S,
        "linearity in the direction",
        lin,
        1e-12,
    ));
    Ok(out)
}

/// Setup shared by the equivalence and conservation suites.
pub const TRIALITY_N: usize = 256;
pub const TRIALITY_DT: f64 = 1e-4;
pub const TRIALITY_T_END: f64 = 0.1;
pub const TRIALITY_ORDER: usize = 16;
pub const TRIALITY_INTERVAL: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct Triality {
    pub p: u32,
    /// Largest pairwise sup-norm deviation at the comparison times.
    pub euler_lagrange: f64,
    pub euler_taylor: f64,
    pub lagrange_taylor: f64,
    pub euler: EulerianRun,
    pub lagrange: LagrangianRun,
    pub taylor: TaylorRun,
}

impl Triality {
    pub fn max_deviation(&self) -> f64 {
        self.euler_lagrange
            .max(self.euler_taylor)
            .max(self.lagrange_taylor)
    }
}

/// Runs all three solvers from `u0` and compares them every
/// `TRIALITY_INTERVAL` up to `TRIALITY_T_END`.
pub fn triality(u0: &SpectralField, p: u32, closure: Closure) -> Result<Triality> {
    let params = ModelParams::new(p)?;
    let mut euler = EulerianRun::new(u0.clone(), params, TRIALITY_DT)?;
    let mut lagrange =
        LagrangianRun::new(LagrangianState::initial(u0.clone(), params), TRIALITY_DT)?;
    let mut taylor = TaylorRun::new(u0.clone(), params, TRIALITY_ORDER, TRIALITY_INTERVAL)?
        .with_closure(closure);
    let (mut el, mut et, mut lt) = (0.0_f64, 0.0_f64, 0.0_f64);
    let steps = (TRIALITY_T_END / TRIALITY_INTERVAL).round() as usize;
    let every = (TRIALITY_INTERVAL / TRIALITY_DT).round() as usize;
    for k in 1..=steps {
        let t = k as f64 * TRIALITY_INTERVAL;
        euler.integrate(t, every)?;
        lagrange.integrate(t, every)?;
        taylor.integrate(t, 1)?;
        let ul = reconstruct_u(&lagrange.state)?;
        el = el.max(euler.u.max_abs_diff(&ul));
        et = et.max(euler.u.max_abs_diff(&taylor.u));
        lt = lt.max(ul.max_abs_diff(&taylor.u));
    }
    Ok(Triality {
        p,
        euler_lagrange: el,
        euler_taylor: et,
        lagrange_taylor: lt,
        euler,
        lagrange,
        taylor,
    })
}

pub fn triality_data(n: usize) -> SpectralField {
    SpectralField::from_fn(n, |x| 0.1 * (TWO_PI * x).sin())
}

/// The force computed through the Eulerian field: invert, evaluate the
/// nonlocal term, compose back.
pub fn force_by_definition(state: &LagrangianState) -> Result<SpectralField> {
    let u = reconstruct_u(state)?;
    let p = state.params.p();
    let d = state.params.dealias;
    let ux = derivative(&u);
    let integrand = multiply(&power_or_one(&u, p - 1, d), &multiply(&ux, &ux, d)?, d)?;
    let nonlocal = antiderivative(&integrand).scaled(0.5 * p as f64);
    compose(&nonlocal, &state.gamma)
}

fn equivalence_suite() -> Result<Vec<PropertyResult>> {
    const S: &str = "equivalence";
    let mut out = Vec::new();
    for p in 1..=3 {
        let t = triality(&triality_data(TRIALITY_N), p, Closure::MeanFree)?;
        out.push(PropertyResult::at_most(
            S,
            format!("p={p} Eulerian vs Lagrangian"),
            t.euler_lagrange,
            1e-6,
        ));
        out.push(PropertyResult::at_most(
            S,
            format!("p={p} Eulerian vs Taylor"),
            t.euler_taylor,
            1e-6,
        ));
        out.push(PropertyResult::at_most(
            S,
            format!("p={p} Lagrangian vs Taylor"),
            t.lagrange_taylor,
            1e-6,
        ));
    }
    let mut worst = 0.0_f64;
    for c in derivative_cases(DEFAULT_SEED ^ 0xdef, 5, 256) {
        let via_def = force_by_definition(&c.state)?;
        worst = worst.max(force(&c.state)?.max_abs_diff(&via_def));
    }
    out.push(PropertyResult::at_most(
        S,
        "composition-free force vs definition route",
        worst,
        1e-8,
    ));
    let u0 = SpectralField::from_fn(64, |x| (TWO_PI * x).sin());
    let state = LagrangianState::initial(u0.clone(), ModelParams::new(1)?);
    let (dg, dz) = crate::lagrangian::rhs_lagrangian(&state)?;
    let ut = &dz - &multiply(&dg, &derivative(&u0), true)?;
    out.push(PropertyResult::at_most(
        S,
        "initial Lagrangian rates reproduce the Eulerian rate",
        ut.max_abs_diff(&rhs_euler(&u0, &state.params)),
        1e-12,
    ));
    Ok(out)
}

fn conservation_suite() -> Result<Vec<PropertyResult>> {
    const S: &str = "conservation";
    let mut out = Vec::new();
    for p in 1..=3 {
        let t = triality(&triality_data(TRIALITY_N), p, Closure::MeanFree)?;
        let runs = [
            ("Eulerian", &t.euler.history),
            ("Lagrangian", &t.lagrange.history),
            ("Taylor", &t.taylor.history),
        ];
        for (name, h) in runs {
            let (e0, m0) = (h[0].energy, h[0].mean_u);
            let de = h
                .iter()
                .map(|r| (r.energy - e0).abs() / e0)
                .fold(0.0, f64::max);
            let dm = h.iter().map(|r| (r.mean_u - m0).abs()).fold(0.0, f64::max);
            out.push(PropertyResult::at_most(
                S,
                format!("p={p} {name} energy drift (relative)"),
                de,
                1e-8,
            ));
            out.push(PropertyResult::at_most(
                S,
                format!("p={p} {name} mean drift"),
                dm,
                1e-10,
            ));
        }
    }
    Ok(out)
}

fn taylor_suite() -> Result<Vec<PropertyResult>> {
    const S: &str = "taylor";
    let n = 128;
    let mut out = Vec::new();
    let u0 = triality_data(n);
    for p in 1..=2 {
        let params = ModelParams::new(p)?;
        let s = taylor_coeffs_with(&u0, &params, 16, Closure::MeanFree)?;
        let d = consistency_defect(&s).into_iter().fold(0.0, f64::max);
        out.push(PropertyResult::at_most(
            S,
            format!("p={p} non-constant consistency defect"),
            d,
            1e-12,
        ));
        let reality = s
            .coeffs_u1
            .iter()
            .chain(&s.coeffs_u2)
            .map(|c| c.coeffs()[0].im.abs().max(c.coeffs()[n / 2].im.abs()))
            .fold(0.0, f64::max);
        out.push(PropertyResult::at_most(
            S,
            format!("p={p} coefficient reality"),
            reality,
            1e-12,
        ));
    }
    let sine = SpectralField::from_fn(n, |x| (TWO_PI * x).sin());
    let lit = taylor_coeffs(&sine, &ModelParams::new(1)?, 2)?;
    out.push(PropertyResult::at_most(
        S,
        "literal closure: first-order defect constant equals pi^2",
        (defect_mean(&lit)[1] - std::f64::consts::PI.powi(2)).abs(),
        1e-12,
    ));

    for p in 1..=3 {
        let params = ModelParams::new(p)?;
        let s = taylor_coeffs_with(&u0, &params, 16, Closure::MeanFree)?;
        let mut worst = 0.0_f64;
        for &t in &[1e-3, 5e-3, 1e-2] {
            let mut rk = EulerianRun::new(u0.clone(), params, 1e-4)?;
            rk.integrate(t, usize::MAX)?;
            worst = worst.max(s.evaluate(t).0.max_abs_diff(&rk.u));
        }
        out.push(PropertyResult::at_most(
            S,
            format!("p={p} series vs RK4 for t <= 1e-2"),
            worst,
            1e-8,
        ));
    }

    let scale = ScaleParams::new(0.5)?;
    let params = ModelParams::new(1)?;
    let r16 = time_radius(
        &taylor_coeffs_with(&triality_data(256), &params, 16, Closure::MeanFree)?,
        &scale,
    )?;
    let r24 = time_radius(
        &taylor_coeffs_with(&triality_data(256), &params, 24, Closure::MeanFree)?,
        &scale,
    )?;
    out.push(PropertyResult::at_most(
        S,
        "time radius J=16 vs J=24 (relative)",
        (r16 / r24 - 1.0).abs(),
        0.1,
    ));

    let sine = SpectralField::from_fn(n, |x| (TWO_PI * x).sin());
    let s = taylor_coeffs_with(&sine, &params, 16, Closure::MeanFree)?;
    let radius = time_radius(&s, &scale)?;
    let mut worst = 0.0_f64;
    for k in 1..=4 {
        let t = 0.5 * radius * k as f64 / 4.0;
        let mut rk = EulerianRun::new(sine.clone(), params, 2e-4)?;
        rk.integrate(t, usize::MAX)?;
        worst = worst.max(s.evaluate(t).0.max_abs_diff(&rk.u));
    }
    out.push(PropertyResult::at_most(
        S,
        "series within half the time radius vs RK4",
        worst,
        1e-6,
    ));
    Ok(out)
}

/// Fails with [`Error::Precondition`] naming the first failed property.
pub fn ensure_passed(results: &[PropertyResult]) -> Result<()> {
    match results.iter().find(|r| !r.passed) {
        Some(r) => Err(Error::Precondition(format!(
            "property failed: {}",
            r.line()
        ))),
        None => Ok(()),
    }
}
