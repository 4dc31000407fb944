//! Run diagnostics and the on-disk formats: history CSV, snapshot and
//! series JSON-lines.

use std::io::{self, BufRead, Write};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// One diagnostics row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub t: f64,
    pub mean_u: f64,
    /// `int u_x^2 dx`
    pub energy: f64,
    pub sup_u: f64,
    pub sup_abs_ux: f64,
    /// Fitted analyticity strip half-width; `inf` for band-limited fields,
    /// `NaN` when the fit had too little data.
    pub radius_est: f64,
    pub scale_norm: f64,
    pub dt_used: f64,
    /// Only present for Lagrangian runs.
    pub min_gamma_x: Option<f64>,
}

pub const HISTORY_COLUMNS: [&str; 8] = [
    "t",
    "mean_u",
    "energy",
    "sup_u",
    "sup_abs_ux",
    "radius_est",
    "scale_norm",
    "dt_used",
];

/// CSV number format: plain decimal in `[1e-4, 1e15)`, scientific otherwise,
/// shortest round-trip digits in both cases.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl RunRecord {
    pub fn csv_header(lagrangian: bool) -> String {
        let mut h = HISTORY_COLUMNS.join(",");
        if lagrangian {
            h.push_str(",min_gamma_x");
        }
        h
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            self.t,
            self.mean_u,
            self.energy,
            self.sup_u,
            self.sup_abs_ux,
            self.radius_est,
            self.scale_norm,
            self.dt_used,
        ];
        cols.extend(self.min_gamma_x);
        cols.into_iter().map(fmt_f64).collect::<Vec<_>>().join(",")
    }
}

pub fn write_history_csv<W: Write>(mut out: W, records: &[RunRecord]) -> io::Result<()> {
    let lagrangian = records.first().is_some_and(|r| r.min_gamma_x.is_some());
    writeln!(out, "{}", RunRecord::csv_header(lagrangian))?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

fn pairs(f: &SpectralField) -> Vec<[f64; 2]> {
    f.coeffs().iter().map(|c| [c.re, c.im]).collect()
}

fn field_from_pairs(n_modes: usize, pairs: &[[f64; 2]]) -> Result<SpectralField> {
    SpectralField::from_coeffs(
        n_modes,
        pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
    )
}

/// One snapshot line. Coefficients are ordered `n = 0 ..= N/2`; Lagrangian
/// runs add the flow-map displacement and `zeta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub n_modes: usize,
    pub coeffs: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<Vec<[f64; 2]>>,
}

impl Snapshot {
    pub fn eulerian(t: f64, u: &SpectralField) -> Self {
        Self {
            t,
            n_modes: u.n_modes(),
            coeffs: pairs(u),
            displacement: None,
            zeta: None,
        }
    }

    pub fn lagrangian(
        t: f64,
        u: &SpectralField,
        displacement: &SpectralField,
        zeta: &SpectralField,
    ) -> Self {
        Self {
            t,
            n_modes: u.n_modes(),
            coeffs: pairs(u),
            displacement: Some(pairs(displacement)),
            zeta: Some(pairs(zeta)),
        }
    }

    pub fn field(&self) -> Result<SpectralField> {
        field_from_pairs(self.n_modes, &self.coeffs)
    }
}

pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, items: &[T]) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_snapshots<R: BufRead>(input: R) -> Result<Vec<Snapshot>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let snap: Snapshot = serde_json::from_str(&line)
            .map_err(|e| Error::Io(format!("snapshot line {}: {e}", i + 1)))?;
        out.push(snap);
    }
    Ok(out)
}

/// One Taylor coefficient line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesLine {
    pub j: usize,
    pub which: String,
    pub coeffs: Vec<[f64; 2]>,
}

impl SeriesLine {
    pub fn new(j: usize, which: &str, f: &SpectralField) -> Self {
        Self {
            j,
            which: which.to_string(),
            coeffs: pairs(f),
        }
    }
}
