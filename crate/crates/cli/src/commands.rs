use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use mhs_core::eulerian::{
    characteristic_breaking_time, estimate_breaking_time, extrapolated_breaking_time,
    predict_breaking_time_within, EulerianRun, Termination, DEFAULT_BREAKING_HORIZON,
};
use mhs_core::lagrangian::{reconstruct_u, LagrangianRun, LagrangianState};
use mhs_core::record::{
    fmt_f64, read_snapshots, write_history_csv, write_jsonl, RunRecord, Snapshot,
};
use mhs_core::scale::{fit_radius, resolved_scale_norm, sobolev_norm};
use mhs_core::spectral::derivative;
use mhs_core::taylor::{taylor_coeffs_with, time_radius, Closure, TaylorRun};
use mhs_core::verify::{run_suite, PropertyResult, Suite};
use mhs_core::{Error, SpectralField};

use crate::config::{ConfigError, Method, ScenarioConfig};

/// Process outcome; the numeric codes are a stable contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    VerifyFailed,
    Breakdown,
    NoBreaking,
    RadiusCollapse,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::VerifyFailed => 1,
            Outcome::Breakdown => 3,
            Outcome::NoBreaking => 4,
            Outcome::RadiusCollapse => 5,
        }
    }
}

pub const CONFIG_EXIT: u8 = 2;

fn row(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| fmt_f64(*v))
        .collect::<Vec<_>>()
        .join(",")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

trait Solver {
    fn time(&self) -> f64;
    fn advance_to(&mut self, t: f64, record_every: usize) -> mhs_core::Result<Termination>;
    fn history(&self) -> &[RunRecord];
    fn snapshot(&self) -> mhs_core::Result<Snapshot>;
    fn field(&self) -> mhs_core::Result<SpectralField>;
}

impl Solver for EulerianRun {
    fn time(&self) -> f64 {
        self.t
    }
    fn advance_to(&mut self, t: f64, record_every: usize) -> mhs_core::Result<Termination> {
        self.integrate(t, record_every)
    }
    fn history(&self) -> &[RunRecord] {
        &self.history
    }
    fn snapshot(&self) -> mhs_core::Result<Snapshot> {
        Ok(Snapshot::eulerian(self.t, &self.u))
    }
    fn field(&self) -> mhs_core::Result<SpectralField> {
        Ok(self.u.clone())
    }
}

impl Solver for LagrangianRun {
    fn time(&self) -> f64 {
        self.state.t
    }
    fn advance_to(&mut self, t: f64, record_every: usize) -> mhs_core::Result<Termination> {
        self.integrate(t, record_every)
    }
    fn history(&self) -> &[RunRecord] {
        &self.history
    }
    fn snapshot(&self) -> mhs_core::Result<Snapshot> {
        let u = reconstruct_u(&self.state)?;
        Ok(Snapshot::lagrangian(
            self.state.t,
            &u,
            self.state.gamma.displacement(),
            &self.state.zeta,
        ))
    }
    fn field(&self) -> mhs_core::Result<SpectralField> {
        reconstruct_u(&self.state)
    }
}

impl Solver for TaylorRun {
    fn time(&self) -> f64 {
        self.t
    }
    /// Records only at segment ends, so rows line up with the step-based solvers.
    fn advance_to(&mut self, t: f64, _record_every: usize) -> mhs_core::Result<Termination> {
        self.integrate(t, usize::MAX)
    }
    fn history(&self) -> &[RunRecord] {
        &self.history
    }
    fn snapshot(&self) -> mhs_core::Result<Snapshot> {
        Ok(Snapshot::eulerian(self.t, &self.u))
    }
    fn field(&self) -> mhs_core::Result<SpectralField> {
        Ok(self.u.clone())
    }
}

/// Segment end times: every `record_every` steps of size `step`, ending at `t_end`.
fn targets(step: f64, record_every: usize, t_end: f64) -> Vec<f64> {
    let seg = step * record_every as f64;
    let count = (t_end / seg - 1e-9).ceil().max(1.0) as usize;
    (1..=count).map(|k| (k as f64 * seg).min(t_end)).collect()
}

/// Result of driving one solver segment by segment.
struct Drive {
    termination: Termination,
    snapshots: Vec<Snapshot>,
}

fn breakdown_from(err: Error, t: f64) -> std::result::Result<Termination, anyhow::Error> {
    match err {
        Error::Cfl { dt, suggested } if t == 0.0 => Err(ConfigError(format!(
            "time step {dt:e} exceeds the advective bound; use dt <= {suggested:e}"
        ))
        .into()),
        Error::Cfl { .. } => Ok(Termination::NonFinite { t }),
        Error::Breakdown { min_jacobian } => Ok(Termination::FlowMapCollapse {
            t,
            min_gamma_x: min_jacobian,
        }),
        other => Err(other.into()),
    }
}

fn drive(
    solver: &mut dyn Solver,
    step: f64,
    cfg: &ScenarioConfig,
    want_snapshots: bool,
) -> Result<Drive> {
    let mut snapshots = Vec::new();
    if want_snapshots {
        snapshots.push(solver.snapshot()?);
    }
    let mut termination = Termination::Completed;
    for t in targets(step, cfg.record_every, cfg.t_end) {
        let term = match solver.advance_to(t, cfg.record_every) {
            Ok(term) => term,
            Err(e) => breakdown_from(e, solver.time())?,
        };
        if want_snapshots {
            if let Ok(s) = solver.snapshot() {
                snapshots.push(s);
            }
        }
        if term.is_breakdown() {
            termination = term;
            break;
        }
    }
    Ok(Drive {
        termination,
        snapshots,
    })
}

fn describe(term: &Termination) -> String {
    match term {
        Termination::Completed => "status=completed".into(),
        Termination::SlopeBlowup { t, sup_abs_ux } => {
            format!("status=breakdown kind=slope-blowup t={t} sup_abs_ux={sup_abs_ux:e}")
        }
        Termination::NonFinite { t } => format!("status=breakdown kind=non-finite t={t}"),
        Termination::ResolutionLost { t, peak_slope } => {
            format!("status=breakdown kind=resolution-lost t={t} peak_sup_abs_ux={peak_slope}")
        }
        Termination::FlowMapCollapse { t, min_gamma_x } => {
            format!("status=breakdown kind=flow-map-collapse t={t} min_gamma_x={min_gamma_x:e}")
        }
    }
}

fn energy_drift(history: &[RunRecord]) -> f64 {
    match (history.first(), history.last()) {
        (Some(a), Some(b)) if a.energy > 0.0 => (b.energy - a.energy).abs() / a.energy,
        (Some(a), Some(b)) => (b.energy - a.energy).abs(),
        _ => 0.0,
    }
}

fn build(cfg: &ScenarioConfig, method: Method) -> Result<(Box<dyn Solver>, f64)> {
    let u0 = cfg.initial_field();
    let params = cfg.params();
    Ok(match method {
        Method::Eulerian | Method::Compare => (
            Box::new(EulerianRun::new(u0, params, cfg.dt)?.with_scale(cfg.scale)),
            cfg.dt,
        ),
        Method::Lagrangian => {
            let run = LagrangianRun::new(LagrangianState::initial(u0, params), cfg.dt)?
                .with_scale(cfg.scale);
            (Box::new(run), cfg.dt)
        }
        Method::Taylor => {
            let run = TaylorRun::new(u0, params, cfg.order, cfg.interval)?
                .with_closure(cfg.closure)
                .with_scale(cfg.scale);
            (Box::new(run), cfg.dt)
        }
    })
}

pub fn solve(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<Outcome> {
    if cfg.method == Method::Compare {
        return compare(cfg, out);
    }
    let (mut solver, step) = build(cfg, cfg.method)?;
    let d = drive(solver.as_mut(), step, cfg, cfg.snapshots.is_some())?;
    if let Some(path) = &cfg.out {
        let mut w = create(path)?;
        write_history_csv(&mut w, solver.history())?;
        w.flush()?;
    }
    if let Some(path) = &cfg.snapshots {
        let mut w = create(path)?;
        write_jsonl(&mut w, &d.snapshots)?;
        w.flush()?;
    }
    writeln!(
        out,
        "summary method={} p={} n={} t_final={} energy_drift={:e} records={} {}",
        cfg.method.name(),
        cfg.p,
        cfg.n_modes,
        solver.time(),
        energy_drift(solver.history()),
        solver.history().len(),
        describe(&d.termination)
    )?;
    Ok(if d.termination.is_breakdown() {
        Outcome::Breakdown
    } else {
        Outcome::Ok
    })
}

pub const COMPARE_COLUMNS: &str = "t,euler_lagrange,euler_taylor,lagrange_taylor";

/// Runs all three solvers on the same segments and records pairwise
/// sup-norm deviations.
pub fn compare(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<Outcome> {
    let (mut e, _) = build(cfg, Method::Eulerian)?;
    let (mut l, _) = build(cfg, Method::Lagrangian)?;
    let (mut t, _) = build(cfg, Method::Taylor)?;
    let mut rows = Vec::new();
    let mut snapshots = vec![e.snapshot()?];
    let mut termination = Termination::Completed;
    let mut worst = 0.0_f64;
    'outer: for target in targets(cfg.dt, cfg.record_every, cfg.t_end) {
        for s in [&mut e, &mut l, &mut t] {
            let term = match s.advance_to(target, cfg.record_every) {
                Ok(term) => term,
                Err(err) => breakdown_from(err, s.time())?,
            };
            if term.is_breakdown() {
                termination = term;
                break 'outer;
            }
        }
        let (ue, ul, ut) = (e.field()?, l.field()?, t.field()?);
        let row = [
            ue.max_abs_diff(&ul),
            ue.max_abs_diff(&ut),
            ul.max_abs_diff(&ut),
        ];
        worst = row.iter().copied().fold(worst, f64::max);
        rows.push((target, row));
        snapshots.push(e.snapshot()?);
    }
    if let Some(path) = &cfg.out {
        let mut w = create(path)?;
        writeln!(w, "{COMPARE_COLUMNS}")?;
        for (time, r) in &rows {
            writeln!(w, "{}", row(&[*time, r[0], r[1], r[2]]))?;
        }
        w.flush()?;
    }
    if let Some(path) = &cfg.snapshots {
        let mut w = create(path)?;
        write_jsonl(&mut w, &snapshots)?;
        w.flush()?;
    }
    writeln!(
        out,
        "summary method=compare p={} n={} t_final={} max_deviation={:e} energy_drift={:e} {}",
        cfg.p,
        cfg.n_modes,
        e.time(),
        worst,
        energy_drift(e.history()),
        describe(&termination)
    )?;
    Ok(if termination.is_breakdown() {
        Outcome::Breakdown
    } else {
        Outcome::Ok
    })
}

/// Largest grid `blowup` refines to.
pub const MAX_BLOWUP_N: usize = 2048;

pub fn blowup(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<Outcome> {
    let params = cfg.params();
    let horizon = if cfg.t_end_explicit {
        cfg.t_end
    } else {
        DEFAULT_BREAKING_HORIZON
    };
    let u0 = cfg.initial_field();
    let predicted = predict_breaking_time_within(&u0, &params, horizon);
    let mut n = cfg.n_modes;
    let estimate = loop {
        let u = cfg.initial_field_on(n);
        let speed = u.sup_norm().powi(cfg.p as i32).max(1.0);
        let auto_dt = 0.4 / (std::f64::consts::TAU * n as f64 * speed);
        let dt = if cfg.dt_explicit {
            cfg.dt.min(auto_dt)
        } else {
            auto_dt
        };
        if let Some(est) = estimate_breaking_time(&u, &params, dt, horizon)? {
            break Some((est, n));
        }
        if predicted.is_none() || n >= MAX_BLOWUP_N.max(cfg.n_modes) {
            break None;
        }
        n *= 2;
    };
    let Some((est, n_used)) = estimate else {
        match predicted {
            None => writeln!(out, "no breaking detected before t={horizon}")?,
            Some(tp) => writeln!(
                out,
                "no breaking detected: predicted T*={tp} is not resolved up to n={}",
                MAX_BLOWUP_N.max(cfg.n_modes)
            )?,
        }
        return Ok(Outcome::NoBreaking);
    };
    if let Some(path) = &cfg.out {
        let mut w = create(path)?;
        writeln!(w, "t,sup_abs_ux")?;
        for (t, s) in &est.samples {
            writeln!(w, "{}", row(&[*t, *s]))?;
        }
        w.flush()?;
    }
    writeln!(
        out,
        "estimated T*={} n={} fit_window=[{}, {}] points={} max_resolved_slope={:e}",
        est.t_star, n_used, est.window.0, est.window.1, est.points, est.max_resolved_slope
    )?;
    if let Some(tp) = predicted {
        let label = if cfg.p == 1 { "oracle" } else { "flow-map" };
        writeln!(out, "{label} T*={tp} rel_err={:e}", (est.t_star - tp) / tp)?;
        if let Some(tc) = characteristic_breaking_time(&u0, &params, horizon, 1e-2) {
            writeln!(
                out,
                "min gamma_x crosses 1e-2 at t={tc} rel_err={:e}",
                (tc - tp) / tp
            )?;
        }
        if let Some(te) = extrapolated_breaking_time(&u0, &params, horizon) {
            writeln!(
                out,
                "sqrt(min gamma_x) extrapolated T*={te} rel_err={:e}",
                (te - tp) / tp
            )?;
        }
    }
    Ok(Outcome::Ok)
}

pub const ANALYTICITY_COLUMNS: &str = "t,radius_est,time_radius";

/// Time-radius stability check at `t = 0`: orders `J` and `J + 8`.
pub fn time_radius_pair(u0: &SpectralField, cfg: &ScenarioConfig) -> Result<(f64, f64)> {
    let params = cfg.params();
    let j = cfg.order.max(8);
    let a = time_radius(
        &taylor_coeffs_with(u0, &params, j, Closure::MeanFree)?,
        &cfg.scale,
    )?;
    let b = time_radius(
        &taylor_coeffs_with(u0, &params, j + 8, Closure::MeanFree)?,
        &cfg.scale,
    )?;
    Ok((a, b))
}

pub fn analyticity(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<Outcome> {
    let params = cfg.params();
    let u0 = cfg.initial_field();
    let order = cfg.order.max(8);
    let mut run = EulerianRun::new(u0.clone(), params, cfg.dt)?.with_scale(cfg.scale);
    let tr = |u: &SpectralField| -> Result<f64> {
        Ok(time_radius(
            &taylor_coeffs_with(u, &params, order, Closure::MeanFree)?,
            &cfg.scale,
        )?)
    };
    let mut rows = vec![(0.0, fit_radius(&u0).unwrap_or(f64::NAN), tr(&u0)?)];
    let mut collapse = None;
    let mut termination = Termination::Completed;
    for target in targets(cfg.dt, cfg.record_every, cfg.t_end) {
        let term = match run.integrate(target, cfg.record_every) {
            Ok(term) => term,
            Err(e) => breakdown_from(e, run.t)?,
        };
        let radius = fit_radius(&run.u).unwrap_or(f64::NAN);
        rows.push((run.t, radius, tr(&run.u).unwrap_or(f64::NAN)));
        if collapse.is_none() && radius < cfg.radius_floor {
            collapse = Some((run.t, radius));
        }
        if term.is_breakdown() {
            termination = term;
            break;
        }
    }
    if let Some(path) = &cfg.out {
        let mut w = create(path)?;
        writeln!(w, "{ANALYTICITY_COLUMNS}")?;
        for (t, r, tr) in &rows {
            writeln!(w, "{}", row(&[*t, *r, *tr]))?;
        }
        w.flush()?;
    }
    let (ja, jb) = time_radius_pair(&u0, cfg)?;
    let min_radius = rows[1..].iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    writeln!(
        out,
        "time radius at t=0: J={order} {ja} J={} {jb} rel_change={:e}",
        order + 8,
        (ja / jb - 1.0).abs()
    )?;
    match collapse {
        Some((t, r)) => {
            writeln!(
                out,
                "radius collapse at t={t}: radius_est={r} < floor {}",
                cfg.radius_floor
            )?;
            Ok(Outcome::RadiusCollapse)
        }
        None => {
            writeln!(
                out,
                "summary t_final={} min_radius_est={min_radius} floor={} {}",
                run.t,
                cfg.radius_floor,
                describe(&termination)
            )?;
            Ok(if termination.is_breakdown() {
                Outcome::Breakdown
            } else {
                Outcome::Ok
            })
        }
    }
}

pub const NORM_COLUMNS: &str =
    "t,mean,sobolev,scale_norm,argmax_k,truncation_ok,radius_est,sup_abs_ux";

pub fn norms(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<Outcome> {
    let path = cfg
        .snapshots
        .as_ref()
        .ok_or_else(|| ConfigError("norms needs --snapshots <file>".into()))?;
    let file = File::open(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let snaps = read_snapshots(BufReader::new(file)).map_err(|e| ConfigError(e.to_string()))?;
    let mut lines = vec![NORM_COLUMNS.to_string()];
    for snap in &snaps {
        let f = snap.field().map_err(|e| ConfigError(e.to_string()))?;
        let rep = resolved_scale_norm(&f, &cfg.scale);
        let nums = row(&[
            snap.t,
            f.mean(),
            sobolev_norm(&f, cfg.scale.sigma),
            rep.value,
        ]);
        let tail = row(&[
            fit_radius(&f).unwrap_or(f64::NAN),
            derivative(&f).sup_norm(),
        ]);
        lines.push(format!(
            "{nums},{},{},{tail}",
            rep.argmax_k, rep.truncation_ok
        ));
    }
    match &cfg.out {
        Some(p) => {
            let mut w = create(p)?;
            for l in &lines {
                writeln!(w, "{l}")?;
            }
            w.flush()?;
            writeln!(out, "wrote {} norm rows to {}", snaps.len(), p.display())?;
        }
        None => {
            for l in &lines {
                writeln!(out, "{l}")?;
            }
        }
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct FailureReport<'a> {
    suite: &'a str,
    seed: u64,
    failures: Vec<&'a PropertyResult>,
}

pub fn verify(
    suite: Suite,
    seed: u64,
    report: Option<&Path>,
    out: &mut dyn Write,
) -> Result<Outcome> {
    let results = run_suite(suite, seed)?;
    for r in &results {
        writeln!(out, "{}", r.line())?;
    }
    let failures: Vec<&PropertyResult> = results.iter().filter(|r| !r.passed).collect();
    writeln!(
        out,
        "verify suite={} seed={seed}: {}/{} properties passed",
        suite.name(),
        results.len() - failures.len(),
        results.len()
    )?;
    if failures.is_empty() {
        return Ok(Outcome::Ok);
    }
    let rep = FailureReport {
        suite: suite.name(),
        seed,
        failures,
    };
    let json = serde_json::to_string(&rep)?;
    writeln!(out, "{json}")?;
    if let Some(p) = report {
        std::fs::write(p, format!("{json}\n"))
            .with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(Outcome::VerifyFailed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_targets_land_on_t_end() {
        let t = targets(1e-4, 100, 0.1);
        assert_eq!(t.len(), 10);
        assert_eq!(*t.last().unwrap(), 0.1);
        let t = targets(1e-4, 300, 0.1);
        assert_eq!(t.len(), 4);
        assert_eq!(*t.last().unwrap(), 0.1);
        assert_eq!(targets(0.01, 1, 0.005), vec![0.005]);
    }

    #[test]
    fn exit_codes_are_stable() {
        let codes: Vec<u8> = [
            Outcome::Ok,
            Outcome::VerifyFailed,
            Outcome::Breakdown,
            Outcome::NoBreaking,
            Outcome::RadiusCollapse,
        ]
        .iter()
        .map(|o| o.code())
        .collect();
        assert_eq!(codes, vec![0, 1, 3, 4, 5]);
        assert_eq!(CONFIG_EXIT, 2);
    }
}
