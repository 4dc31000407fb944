//! Initial-condition mini-language: real 1-periodic trigonometric
//! polynomials such as `0.5 + 0.2*cos(4*pi*x) - sin(2*pi*x)`.
//!
//! ```text
//! expr := sign? term (('+' | '-') term)*
//! term := number | number? '*'? func
//! func := ('sin' | 'cos') '(' integer? '*'? 'pi' '*'? 'x' ')'
//! ```
//!
//! The integer in front of `pi` must be `2k`; `k` is the harmonic.

use std::fmt;

use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::spectral::{dealias_cutoff, SpectralField};

pub const MAX_AMPLITUDE: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("{0}*pi*x is not 1-periodic")]
    NotPeriodic(u64),
    #[error("sin/cos need a harmonic of at least 1")]
    ZeroHarmonic,
    #[error("overflow: {0}")]
    Overflow(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermKind {
    Const,
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub kind: TermKind,
    pub amplitude: f64,
    /// 0 for constants.
    pub harmonic: u32,
}

/// A normalized trigonometric polynomial: one term per (kind, harmonic),
/// no zero amplitudes, sorted by harmonic with cos before sin.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InitExpr {
    terms: Vec<Term>,
}

impl InitExpr {
    /// Merges like terms, drops cancelled ones and sorts.
    pub fn normalized(raw: impl IntoIterator<Item = Term>) -> Self {
        let mut terms: Vec<Term> = Vec::new();
        for t in raw {
            let t = if t.kind == TermKind::Const {
                Term { harmonic: 0, ..t }
            } else {
                t
            };
            match terms
                .iter_mut()
                .find(|u| u.kind == t.kind && u.harmonic == t.harmonic)
            {
                Some(u) => u.amplitude += t.amplitude,
                None => terms.push(t),
            }
        }
        terms.retain(|t| t.amplitude != 0.0);
        terms.sort_by_key(|t| (t.harmonic, t.kind));
        Self { terms }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_harmonic(&self) -> u32 {
        self.terms.iter().map(|t| t.harmonic).max().unwrap_or(0)
    }

    /// Sum of two expressions.
    pub fn plus(&self, other: &InitExpr) -> InitExpr {
        InitExpr::normalized(self.terms.iter().chain(&other.terms).copied())
    }
}

impl fmt::Display for InitExpr {
    /// Canonical text form; parsing it back yields the same expression.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let mag = t.amplitude.abs();
            match (i, t.amplitude < 0.0) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            match t.kind {
                TermKind::Const => write!(f, "{mag:?}")?,
                TermKind::Cos => write!(f, "{mag:?}*cos({}*pi*x)", 2 * t.harmonic)?,
                TermKind::Sin => write!(f, "{mag:?}*sin({}*pi*x)", 2 * t.harmonic)?,
            }
        }
        Ok(())
    }
}

/// Parses an initial condition.
pub fn parse_init(text: &str) -> std::result::Result<InitExpr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let mut raw = Vec::new();
    p.skip_ws();
    let mut sign = match p.peek() {
        Some(b'-') => {
            p.pos += 1;
            -1.0
        }
        Some(b'+') => {
            p.pos += 1;
            1.0
        }
        _ => 1.0,
    };
    loop {
        let mut term = p.term()?;
        term.amplitude *= sign;
        raw.push(term);
        p.skip_ws();
        sign = match p.peek() {
            None => break,
            Some(b'+') => 1.0,
            Some(b'-') => -1.0,
            Some(c) => return Err(p.syntax(format!("expected '+' or '-', found '{}'", c as char))),
        };
        p.pos += 1;
    }
    let expr = InitExpr::normalized(raw);
    if let Some(t) = expr
        .terms
        .iter()
        .find(|t| t.amplitude.abs() > MAX_AMPLITUDE)
    {
        return Err(ParseError {
            offset: text.len(),
            kind: ParseErrorKind::Overflow(format!(
                "merged amplitude {} exceeds {MAX_AMPLITUDE:e}",
                t.amplitude
            )),
        });
    }
    Ok(expr)
}

/// [`parse_init`] plus the dealiasing headroom check `harmonic <= n_modes/3`.
pub fn parse_init_for_grid(
    text: &str,
    n_modes: usize,
) -> std::result::Result<InitExpr, ParseError> {
    let expr = parse_init(text)?;
    let limit = dealias_cutoff(n_modes);
    if let Some(t) = expr.terms.iter().find(|t| t.harmonic as usize > limit) {
        return Err(ParseError {
            offset: 0,
            kind: ParseErrorKind::Overflow(format!(
                "harmonic {} exceeds n_modes/3 = {limit}",
                t.harmonic
            )),
        });
    }
    Ok(expr)
}

/// Places each term's coefficients exactly on an `n_modes` grid.
pub fn realize(expr: &InitExpr, n_modes: usize) -> Result<SpectralField> {
    let limit = dealias_cutoff(n_modes);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n_modes / 2 + 1];
    for t in &expr.terms {
        if t.harmonic as usize > limit {
            return Err(Error::Resolution {
                harmonic: t.harmonic,
                limit,
            });
        }
        let k = t.harmonic as usize;
        match t.kind {
            TermKind::Const => coeffs[0].re += t.amplitude,
            TermKind::Cos => coeffs[k].re += 0.5 * t.amplitude,
            TermKind::Sin => coeffs[k].im -= 0.5 * t.amplitude,
        }
    }
    SpectralField::from_coeffs(n_modes, coeffs)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn syntax(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            offset: self.pos,
            kind: ParseErrorKind::Syntax(msg.into()),
        }
    }

    fn expect(&mut self, c: u8) -> std::result::Result<(), ParseError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(format!("expected '{}'", c as char)))
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, word: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(word.as_bytes()) {
            self.pos += word.len();
            true
        } else {
            false
        }
    }

    fn term(&mut self) -> std::result::Result<Term, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let amplitude = if matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
            Some(self.number()?)
        } else {
            None
        };
        if let Some(a) = amplitude {
            if !a.is_finite() || a.abs() > MAX_AMPLITUDE {
                return Err(ParseError {
                    offset: start,
                    kind: ParseErrorKind::Overflow(format!("|amplitude| > {MAX_AMPLITUDE:e}")),
                });
            }
        }
        let star = self.eat(b'*');
        let kind = if self.keyword("sin") {
            TermKind::Sin
        } else if self.keyword("cos") {
            TermKind::Cos
        } else if star || amplitude.is_none() {
            return Err(self.syntax("expected a number, 'sin' or 'cos'"));
        } else {
            return Ok(Term {
                kind: TermKind::Const,
                amplitude: amplitude.unwrap(),
                harmonic: 0,
            });
        };
        let harmonic = self.func_argument()?;
        Ok(Term {
            kind,
            amplitude: amplitude.unwrap_or(1.0),
            harmonic,
        })
    }

    /// `'(' integer? '*'? 'pi' '*'? 'x' ')'`, returning the harmonic.
    fn func_argument(&mut self) -> std::result::Result<u32, ParseError> {
        self.expect(b'(')?;
        self.skip_ws();
        let mult_at = self.pos;
        let multiple = if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.integer()?
        } else {
            1
        };
        self.eat(b'*');
        if !self.keyword("pi") {
            return Err(self.syntax("expected 'pi'"));
        }
        self.eat(b'*');
        if !self.keyword("x") {
            return Err(self.syntax("expected 'x'"));
        }
        self.expect(b')')?;
        if multiple % 2 != 0 {
            return Err(ParseError {
                offset: mult_at,
                kind: ParseErrorKind::NotPeriodic(multiple),
            });
        }
        if multiple == 0 {
            return Err(ParseError {
                offset: mult_at,
                kind: ParseErrorKind::ZeroHarmonic,
            });
        }
        u32::try_from(multiple / 2).map_err(|_| ParseError {
            offset: mult_at,
            kind: ParseErrorKind::Overflow("harmonic does not fit in 32 bits".into()),
        })
    }

    fn integer(&mut self) -> std::result::Result<u64, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        text.parse().map_err(|_| ParseError {
            offset: start,
            kind: ParseErrorKind::Overflow(format!("integer {text} too large")),
        })
    }

    fn number(&mut self) -> std::result::Result<f64, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while matches!(p.peek(), Some(c) if c.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(ParseError {
                offset: start,
                kind: ParseErrorKind::Syntax("malformed number".into()),
            });
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        text.parse::<f64>().map_err(|_| ParseError {
            offset: start,
            kind: ParseErrorKind::Syntax(format!("malformed number '{text}'")),
        })
    }
}
