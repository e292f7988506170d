//! Text formats for dense complex matrices, MES specifiers and explicit strategies.
//!
//! A matrix is written row-major, one row per line, with entries `re,im`
//! separated by whitespace. A bare real number is accepted as `re,0`. `#` starts
//! a comment and blank lines are ignored.
//!
//! A strategy file starts with `strategy <m> <D>` and is followed by blocks
//! `alice <x> <a>` or `bob <y> <b>`, each followed by the `m^D` rows of the
//! element.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;

use crate::correlation::{align_bases, depolarized_mes, NoisyMES};
use crate::dense::{checked_pow, CMatrix, DenseHermitian};
use crate::error::{Error, Result};
use crate::prover_tools::ExplicitStrategy;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Content lines with their 1-based numbers, comments stripped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_entry(token: &str, line: usize) -> Result<Complex64> {
    let (re, im) = match token.split_once(',') {
        Some((re, im)) => (re, im),
        None => (token, "0"),
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| parse_err(line, format!("bad matrix entry `{token}`")))
    };
    Ok(Complex64::new(num(re)?, num(im)?))
}

fn parse_row(text: &str, line: usize) -> Result<Vec<Complex64>> {
    text.split_whitespace()
        .map(|t| parse_entry(t, line))
        .collect()
}

/// Parses a square complex matrix.
pub fn parse_complex_matrix(text: &str) -> Result<CMatrix> {
    let rows: Vec<(usize, Vec<Complex64>)> = content_lines(text)
        .map(|(n, l)| parse_row(l, n).map(|r| (n, r)))
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Err(parse_err(0, "matrix has no rows"));
    }
    let dim = rows.len();
    if let Some((n, r)) = rows.iter().find(|(_, r)| r.len() != dim) {
        return Err(parse_err(
            *n,
            format!("row has {} entries, expected {dim}", r.len()),
        ));
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| rows[i].1[j]))
}

/// Writes `mat` in the format read by [`parse_complex_matrix`], with round-trip precision.
pub fn write_complex_matrix(mat: &CMatrix) -> String {
    let mut out = String::new();
    for i in 0..mat.nrows() {
        let row: Vec<String> = (0..mat.ncols())
            .map(|j| format!("{:?},{:?}", mat[(i, j)].re, mat[(i, j)].im))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Where a noisy MES comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MesSpec {
    Depolarized { m: usize, eps: f64 },
    File(PathBuf),
}

impl FromStr for MesSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidInput(format!("MES specifier `{s}`: {msg}"));
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(bad("empty path"));
            }
            return Ok(MesSpec::File(PathBuf::from(path)));
        }
        let body = s
            .strip_prefix("depolarized:")
            .ok_or_else(|| bad("expected `depolarized:` or `file:`"))?;
        let (mut m, mut eps) = (None, None);
        for part in body.split(',') {
            match part.split_once('=') {
                Some(("m", v)) => {
                    m = Some(
                        v.trim()
                            .parse::<usize>()
                            .map_err(|_| bad("m is not an integer"))?,
                    )
                }
                Some(("eps", v)) => {
                    eps = Some(
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| bad("eps is not a number"))?,
                    )
                }
                _ => return Err(bad(&format!("unknown field `{part}`"))),
            }
        }
        match (m, eps) {
            (Some(m), Some(eps)) => Ok(MesSpec::Depolarized { m, eps }),
            _ => Err(bad("need both m and eps")),
        }
    }
}

/// Builds the MES: the depolarized constructor, or a state file on `C^m (x) C^m`.
pub fn load_mes(spec: &MesSpec) -> Result<NoisyMES> {
    match spec {
        MesSpec::Depolarized { m, eps } => depolarized_mes(*m, *eps),
        MesSpec::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
            let mat = parse_complex_matrix(&text)?;
            let dim = mat.nrows();
            let m = (dim as f64).sqrt().round() as usize;
            if m * m != dim {
                return Err(Error::InvalidDimension(format!(
                    "state dimension {dim} is not a square"
                )));
            }
            align_bases(DenseHermitian::new(mat)?, m)
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Alice,
    Bob,
}

/// Parses a strategy file and checks every question's elements form a POVM.
pub fn parse_strategy(text: &str) -> Result<ExplicitStrategy> {
    let mut lines = content_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty strategy file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (m, registers) = match fields.as_slice() {
        ["strategy", m, d] => (
            m.parse::<usize>().map_err(|_| parse_err(hline, "bad m"))?,
            d.parse::<usize>()
                .map_err(|_| parse_err(hline, "bad register count"))?,
        ),
        _ => return Err(parse_err(hline, "expected `strategy <m> <D>`")),
    };
    let dim = checked_pow(m, registers)
        .filter(|&d| d <= 1 << 12)
        .ok_or_else(|| parse_err(hline, format!("{m}^{registers} is too large")))?;
    let mut blocks: Vec<(Side, usize, usize, usize, CMatrix)> = Vec::new();
    while let Some((n, head)) = lines.next() {
        let f: Vec<&str> = head.split_whitespace().collect();
        let side = match f.first() {
            Some(&"alice") => Side::Alice,
            Some(&"bob") => Side::Bob,
            _ => {
                return Err(parse_err(
                    n,
                    format!("expected `alice x a` or `bob y b`, found `{head}`"),
                ))
            }
        };
        if f.len() != 3 {
            return Err(parse_err(n, "block header needs a question and an answer"));
        }
        let q = f[1]
            .parse::<usize>()
            .map_err(|_| parse_err(n, "bad question index"))?;
        let a = f[2]
            .parse::<usize>()
            .map_err(|_| parse_err(n, "bad answer index"))?;
        let mut mat = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            let (rn, row) = lines
                .next()
                .ok_or_else(|| parse_err(n, format!("block ends after {i} of {dim} rows")))?;
            let row = parse_row(row, rn)?;
            if row.len() != dim {
                return Err(parse_err(
                    rn,
                    format!("row has {} entries, expected {dim}", row.len()),
                ));
            }
            for (j, v) in row.into_iter().enumerate() {
                mat[(i, j)] = v;
            }
        }
        blocks.push((side, q, a, n, mat));
    }
    let assemble = |side: Side, name: &str| -> Result<Vec<Vec<DenseHermitian>>> {
        let mine: Vec<&(Side, usize, usize, usize, CMatrix)> =
            blocks.iter().filter(|b| b.0 == side).collect();
        let s = mine.iter().map(|b| b.1 + 1).max().unwrap_or(0);
        let t = mine.iter().map(|b| b.2 + 1).max().unwrap_or(0);
        let mut grid: Vec<Vec<Option<DenseHermitian>>> = vec![vec![None; t]; s];
        for (_, q, a, n, mat) in mine {
            if grid[*q][*a].is_some() {
                return Err(parse_err(*n, format!("duplicate {name} block {q} {a}")));
            }
            let h = DenseHermitian::new(mat.clone()).map_err(|e| parse_err(*n, e.to_string()))?;
            grid[*q][*a] = Some(h);
        }
        grid.into_iter()
            .enumerate()
            .map(|(q, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(a, e)| {
                        e.ok_or_else(|| {
                            Error::InvalidInput(format!("missing {name} block {q} {a}"))
                        })
                    })
                    .collect()
            })
            .collect()
    };
    let alice = assemble(Side::Alice, "alice")?;
    let bob = assemble(Side::Bob, "bob")?;
    ExplicitStrategy::new(m, registers, alice, bob)
}

/// Writes a strategy in the format read by [`parse_strategy`].
pub fn write_strategy(strategy: &ExplicitStrategy) -> String {
    let mut out = format!("strategy {} {}\n", strategy.m(), strategy.registers());
    for (name, side) in [("alice", strategy.alice()), ("bob", strategy.bob())] {
        for (q, povm) in side.iter().enumerate() {
            for (a, e) in povm.iter().enumerate() {
                let _ = writeln!(out, "{name} {q} {a}");
                out.push_str(&write_complex_matrix(e.matrix()));
            }
        }
    }
    out
}
