//! Text format for instrument definitions.
//!
//! ```text
//! file    := { blank | comment } header { branch }
//! header  := "instrument" DIM
//! branch  := "branch" LABEL { term }
//! term    := ("kraus" | "subtract") NEWLINE row{DIM}
//! row     := complex{DIM}                 one matrix row per line
//! complex := REAL ("+" | "-") UREAL "i"   e.g. 0.5+0i, 1e-3-2.5i
//! comment := "#" to end of line
//! ```
//!
//! `kraus` adds a term `K ρ K†` to the branch map; `subtract` adds `−F ρ F†`.
//! The writer emits every real with 17 significant digits, so parsing the
//! output reproduces the instrument bit for bit.

use super::{Branch, QuantumInstrument};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Formats one complex entry as `re±imi` with 17 significant digits.
pub fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{sign}{:.16e}i", z.re, z.im.abs())
}

/// Parses `re±imi`. A bare real (no `i`) is accepted as a purely real entry.
pub fn parse_complex(token: &str) -> Result<C64, String> {
    let bad = || format!("malformed complex number '{token}'");
    let Some(body) = token.strip_suffix('i') else {
        let re: f64 = token.parse().map_err(|_| bad())?;
        return finite(C64::new(re, 0.0)).ok_or_else(bad);
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(bad)?;
    let re: f64 = body[..split].parse().map_err(|_| bad())?;
    let im_text = &body[split + 1..];
    if im_text.starts_with(['+', '-']) {
        return Err(bad());
    }
    let im: f64 = im_text.parse().map_err(|_| bad())?;
    let im = if bytes[split] == b'-' { -im } else { im };
    finite(C64::new(re, im)).ok_or_else(bad)
}

fn finite(z: C64) -> Option<C64> {
    (z.re.is_finite() && z.im.is_finite()).then_some(z)
}

pub fn write_instrument(inst: &QuantumInstrument) -> String {
    let mut out = format!("instrument {}\n", inst.dimension());
    let write_matrix = |out: &mut String, keyword: &str, m: &ComplexMatrix| {
        out.push_str("  ");
        out.push_str(keyword);
        out.push('\n');
        for r in 0..m.rows() {
            let row: Vec<String> = (0..m.cols()).map(|c| format_complex(m.get(r, c))).collect();
            out.push_str("    ");
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    };
    for b in inst.branches() {
        out.push_str(&format!("branch {}\n", b.outcome()));
        for k in b.kraus() {
            write_matrix(&mut out, "kraus", k);
        }
        for k in b.subtracted() {
            write_matrix(&mut out, "subtract", k);
        }
    }
    out
}

pub fn parse_instrument(text: &str) -> Result<QuantumInstrument> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    let (line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty instrument definition"))?;
    let dim = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["instrument", d] => d
            .parse::<usize>()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::parse(line, format!("invalid dimension '{d}'")))?,
        _ => return Err(Error::parse(line, "expected 'instrument <dim>'")),
    };

    let mut branches: Vec<Branch> = Vec::new();
    let mut current: Option<(String, Vec<ComplexMatrix>, Vec<ComplexMatrix>)> = None;
    while let Some((line, text)) = lines.next() {
        let words: Vec<&str> = text.split_whitespace().collect();
        match words[..] {
            ["branch", label] => {
                if let Some((o, k, s)) = current.take() {
                    branches.push(Branch::with_subtracted(o, k, s));
                }
                current = Some((label.to_string(), Vec::new(), Vec::new()));
            }
            [keyword @ ("kraus" | "subtract")] => {
                let Some((_, kraus, subtracted)) = current.as_mut() else {
                    return Err(Error::parse(line, format!("'{keyword}' outside a branch")));
                };
                let mut entries = Vec::with_capacity(dim * dim);
                for _ in 0..dim {
                    let (row_line, row) = lines
                        .next()
                        .ok_or_else(|| Error::parse(line, "matrix ends early"))?;
                    let tokens: Vec<&str> = row.split_whitespace().collect();
                    if tokens.len() != dim {
                        return Err(Error::parse(
                            row_line,
                            format!("expected {dim} entries, found {}", tokens.len()),
                        ));
                    }
                    for t in tokens {
                        entries.push(parse_complex(t).map_err(|m| Error::parse(row_line, m))?);
                    }
                }
                let m = ComplexMatrix::from_row_major(dim, dim, entries)
                    .map_err(|e| Error::parse(line, e.to_string()))?;
                if keyword == "kraus" {
                    kraus.push(m);
                } else {
                    subtracted.push(m);
                }
            }
            _ => return Err(Error::parse(line, format!("unexpected '{text}'"))),
        }
    }
    if let Some((o, k, s)) = current.take() {
        branches.push(Branch::with_subtracted(o, k, s));
    }
    QuantumInstrument::new(dim, branches)
}
