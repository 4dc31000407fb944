//! Scenario configuration: a flat `key=value` file overlaid by command-line
//! flags, validated before any computation starts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use clap::Args;
use mhs_core::initcond::{parse_init_for_grid, realize};
use mhs_core::scale::ScaleParams;
use mhs_core::taylor::Closure;
use mhs_core::{ModelParams, SpectralField};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Eulerian,
    Lagrangian,
    Taylor,
    Compare,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "eulerian" => Ok(Method::Eulerian),
            "lagrangian" => Ok(Method::Lagrangian),
            "taylor" => Ok(Method::Taylor),
            "compare" => Ok(Method::Compare),
            other => Err(bad(format!(
                "unknown method {other:?} (eulerian, lagrangian, taylor, compare)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Eulerian => "eulerian",
            Method::Lagrangian => "lagrangian",
            Method::Taylor => "taylor",
            Method::Compare => "compare",
        }
    }
}

/// Flags shared by every scenario subcommand. Any flag left unset falls
/// back to the config file, then to the command default.
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// Flat key=value file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<u32>,
    /// Initial data, e.g. "0.1*sin(2*pi*x)".
    #[arg(long)]
    pub init: Option<String>,
    /// Grid size (power of two, at least 32).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long = "record-every")]
    pub record_every: Option<usize>,
    /// CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON-lines snapshot path.
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Taylor order.
    #[arg(long)]
    pub order: Option<usize>,
    /// Taylor re-expansion interval.
    #[arg(long)]
    pub interval: Option<f64>,
    /// Taylor second-component closure: mean-free or literal.
    #[arg(long)]
    pub closure: Option<String>,
    /// Spatial radius floor for `analyticity`.
    #[arg(long = "radius-floor")]
    pub radius_floor: Option<f64>,
}

/// Per-command fallbacks for keys that nobody set.
#[derive(Debug, Clone, Copy)]
pub struct Defaults {
    pub t_end: f64,
    pub dt: f64,
    pub method: Method,
}

impl Default for Defaults {
    fn default() -> Self {
        Self {
            t_end: 0.1,
            dt: 1e-4,
            method: Method::Eulerian,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub p: u32,
    pub init: String,
    pub n_modes: usize,
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
    pub record_every: usize,
    pub out: Option<PathBuf>,
    pub snapshots: Option<PathBuf>,
    pub scale: ScaleParams,
    pub seed: u64,
    pub order: usize,
    pub interval: f64,
    pub closure: Closure,
    pub radius_floor: f64,
    /// Whether `dt` came from the user rather than a default.
    pub dt_explicit: bool,
    pub t_end_explicit: bool,
}

impl ScenarioConfig {
    pub fn params(&self) -> ModelParams {
        ModelParams::new(self.p).expect("validated")
    }

    pub fn initial_field(&self) -> SpectralField {
        self.initial_field_on(self.n_modes)
    }

    pub fn initial_field_on(&self, n: usize) -> SpectralField {
        let expr = parse_init_for_grid(&self.init, self.n_modes).expect("validated");
        realize(&expr, n).expect("validated")
    }
}

pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected key=value, got {raw:?}", i + 1)))?;
        let key = k.trim().replace('-', "_");
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

const KNOWN_KEYS: [&str; 18] = [
    "p",
    "init",
    "n",
    "dt",
    "t_end",
    "method",
    "record_every",
    "out",
    "snapshots",
    "s",
    "sigma",
    "kmax",
    "seed",
    "order",
    "interval",
    "closure",
    "radius_floor",
    "n_modes",
];

fn num<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, ConfigError> {
    map.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| bad(format!("{key}: cannot parse {v:?}")))
        })
        .transpose()
}

impl ScenarioArgs {
    /// Fills unset flags from the config file named by `--config`.
    pub fn merged(&self) -> Result<ScenarioArgs, ConfigError> {
        let Some(path) = &self.config else {
            return Ok(self.clone());
        };
        let text =
            std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let file = parse_kv(&text)?;
        if let Some(k) = file.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(bad(format!("{}: unknown key {k:?}", path.display())));
        }
        let path_of = |k: &str| file.get(k).map(PathBuf::from);
        let n = match num(&file, "n")? {
            Some(n) => Some(n),
            None => num(&file, "n_modes")?,
        };
        Ok(ScenarioArgs {
            config: self.config.clone(),
            p: self.p.or(num(&file, "p")?),
            init: self.init.clone().or_else(|| file.get("init").cloned()),
            n: self.n.or(n),
            dt: self.dt.or(num(&file, "dt")?),
            t_end: self.t_end.or(num(&file, "t_end")?),
            method: self.method.clone().or_else(|| file.get("method").cloned()),
            record_every: self.record_every.or(num(&file, "record_every")?),
            out: self.out.clone().or_else(|| path_of("out")),
            snapshots: self.snapshots.clone().or_else(|| path_of("snapshots")),
            s: self.s.or(num(&file, "s")?),
            sigma: self.sigma.or(num(&file, "sigma")?),
            kmax: self.kmax.or(num(&file, "kmax")?),
            seed: self.seed.or(num(&file, "seed")?),
            order: self.order.or(num(&file, "order")?),
            interval: self.interval.or(num(&file, "interval")?),
            closure: self
                .closure
                .clone()
                .or_else(|| file.get("closure").cloned()),
            radius_floor: self.radius_floor.or(num(&file, "radius_floor")?),
        })
    }

    pub fn resolve(&self, defaults: Defaults) -> Result<ScenarioConfig, ConfigError> {
        let a = self.merged()?;
        let p = a.p.unwrap_or(1);
        if p == 0 {
            return Err(bad("p must be at least 1"));
        }
        let n_modes = a.n.unwrap_or(256);
        if n_modes < 32 || !n_modes.is_power_of_two() {
            return Err(bad(format!(
                "n must be a power of two >= 32, got {n_modes}"
            )));
        }
        let t_end = a.t_end.unwrap_or(defaults.t_end);
        let dt = a.dt.unwrap_or(defaults.dt);
        if !(t_end.is_finite() && dt.is_finite() && dt > 0.0 && dt < t_end) {
            return Err(bad(format!(
                "need 0 < dt < t_end, got dt={dt}, t_end={t_end}"
            )));
        }
        let method = match &a.method {
            Some(m) => Method::parse(m)?,
            None => defaults.method,
        };
        let record_every = a.record_every.unwrap_or(100);
        if record_every == 0 {
            return Err(bad("record-every must be at least 1"));
        }
        let init = a
            .init
            .clone()
            .unwrap_or_else(|| "0.1*sin(2*pi*x)".to_string());
        parse_init_for_grid(&init, n_modes).map_err(|e| bad(format!("init {init:?}: {e}")))?;
        let s = a.s.unwrap_or(0.5);
        let mut scale = ScaleParams::new(s).map_err(|e| bad(format!("s: {e}")))?;
        if let Some(sigma) = a.sigma {
            scale = scale
                .with_sigma(sigma)
                .map_err(|e| bad(format!("sigma: {e}")))?;
        }
        if let Some(k) = a.kmax {
            scale = scale.with_k_max(k).map_err(|e| bad(format!("kmax: {e}")))?;
        }
        let order = a.order.unwrap_or(16);
        if order < 1 {
            return Err(bad("order must be at least 1"));
        }
        let interval = a.interval.unwrap_or(0.01);
        if !(interval > 0.0 && interval.is_finite()) {
            return Err(bad(format!("interval must be positive, got {interval}")));
        }
        let closure = match a.closure.as_deref() {
            None | Some("mean-free") => Closure::MeanFree,
            Some("literal") => Closure::Literal,
            Some(other) => {
                return Err(bad(format!(
                    "unknown closure {other:?} (mean-free, literal)"
                )))
            }
        };
        let radius_floor = a.radius_floor.unwrap_or(0.05);
        if !(radius_floor >= 0.0) {
            return Err(bad(format!(
                "radius-floor must be nonnegative, got {radius_floor}"
            )));
        }
        Ok(ScenarioConfig {
            p,
            init,
            n_modes,
            dt,
            t_end,
            method,
            record_every,
            out: a.out,
            snapshots: a.snapshots,
            scale,
            seed: a.seed.unwrap_or(mhs_core::verify::DEFAULT_SEED),
            order,
            interval,
            closure,
            radius_floor,
            dt_explicit: a.dt.is_some(),
            t_end_explicit: a.t_end.is_some(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_parsing() {
        let m = parse_kv("# c\np = 2\nt-end=0.5\n\ninit = 0.1*sin(2*pi*x)\n").unwrap();
        assert_eq!(m["p"], "2");
        assert_eq!(m["t_end"], "0.5");
        assert_eq!(m["init"], "0.1*sin(2*pi*x)");
        assert!(parse_kv("nonsense").is_err());
    }

    #[test]
    fn validation() {
        let ok = ScenarioArgs::default()
            .resolve(Defaults::default())
            .unwrap();
        assert_eq!(ok.n_modes, 256);
        assert_eq!(ok.method, Method::Eulerian);
        for bad_args in [
            ScenarioArgs {
                n: Some(48),
                ..Default::default()
            },
            ScenarioArgs {
                n: Some(16),
                ..Default::default()
            },
            ScenarioArgs {
                dt: Some(0.2),
                t_end: Some(0.1),
                ..Default::default()
            },
            ScenarioArgs {
                dt: Some(-1.0),
                ..Default::default()
            },
            ScenarioArgs {
                p: Some(0),
                ..Default::default()
            },
            ScenarioArgs {
                s: Some(1.5),
                ..Default::default()
            },
            ScenarioArgs {
                method: Some("spectral".into()),
                ..Default::default()
            },
            ScenarioArgs {
                init: Some("sin(3*pi*x)".into()),
                ..Default::default()
            },
            ScenarioArgs {
                init: Some("sin(200*pi*x)".into()),
                ..Default::default()
            },
        ] {
            assert!(
                bad_args.resolve(Defaults::default()).is_err(),
                "{bad_args:?}"
            );
        }
    }
}
