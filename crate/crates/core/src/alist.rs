//! MacKay alist serialization of sparse parity-check matrices.
//!
//! Layout: line 1 `n m`; line 2 `max_col_weight max_row_weight`; the n
//! column weights; the m row weights; then one line per column listing the
//! 1-based row indices of its ones, and one line per row listing the
//! 1-based column indices, each padded with `0` entries up to the
//! corresponding maximum weight.

use crate::code::ParityCheckMatrix;
use crate::{Error, Result};

/// Serializes `h` to alist text. `import(export(h)) == h`.
pub fn export_alist(h: &ParityCheckMatrix) -> String {
    let (m, n) = (h.m(), h.n());
    let max_col = (0..n).map(|j| h.col(j).len()).max().unwrap_or(0);
    let max_row = (0..m).map(|i| h.row(i).len()).max().unwrap_or(0);

    let mut out = String::new();
    out.push_str(&format!("{n} {m}\n{max_col} {max_row}\n"));
    let weights = |lens: Vec<usize>| -> String {
        lens.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
    };
    out.push_str(&weights((0..n).map(|j| h.col(j).len()).collect()));
    out.push('\n');
    out.push_str(&weights((0..m).map(|i| h.row(i).len()).collect()));
    out.push('\n');

    let padded_line = |indices: &[usize], width: usize| -> String {
        let mut fields: Vec<String> = indices.iter().map(|&x| (x + 1).to_string()).collect();
        fields.resize(width, "0".to_string());
        fields.join(" ")
    };
    for j in 0..n {
        out.push_str(&padded_line(h.col(j), max_col));
        out.push('\n');
    }
    for i in 0..m {
        out.push_str(&padded_line(h.row(i), max_row));
        out.push('\n');
    }
    out
}

/// Parses alist text back into a sparse matrix. Zero padding entries are
/// skipped; indices are converted to 0-based.
pub fn import_alist(text: &str) -> Result<ParityCheckMatrix> {
    let mut tokens = text.split_whitespace();
    let mut next_usize = |what: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::Parse { line: 0, msg: format!("alist truncated before {what}") })?
            .parse::<usize>()
            .map_err(|_| Error::Parse { line: 0, msg: format!("invalid alist {what}") })
    };

    let n = next_usize("n")?;
    let m = next_usize("m")?;
    let max_col = next_usize("max column weight")?;
    let max_row = next_usize("max row weight")?;
    let col_weights: Vec<usize> =
        (0..n).map(|_| next_usize("column weight")).collect::<Result<_>>()?;
    let row_weights: Vec<usize> =
        (0..m).map(|_| next_usize("row weight")).collect::<Result<_>>()?;

    // Column lists are read only to consume their tokens and cross-check
    // the declared weights; the matrix is rebuilt from the row lists.
    for (j, &w) in col_weights.iter().enumerate() {
        let mut seen = 0usize;
        for _ in 0..max_col {
            let v = next_usize("column entry")?;
            if v > 0 {
                if v > m {
                    return Err(Error::Parse {
                        line: 0,
                        msg: format!("column {j}: row index {v} exceeds m = {m}"),
                    });
                }
                seen += 1;
            }
        }
        if seen != w {
            return Err(Error::Parse {
                line: 0,
                msg: format!("column {j}: {seen} entries but declared weight {w}"),
            });
        }
    }

    let mut rows = Vec::with_capacity(m);
    for (i, &w) in row_weights.iter().enumerate() {
        let mut row = Vec::with_capacity(w);
        for _ in 0..max_row {
            let v = next_usize("row entry")?;
            if v > 0 {
                if v > n {
                    return Err(Error::Parse {
                        line: 0,
                        msg: format!("row {i}: column index {v} exceeds n = {n}"),
                    });
                }
                row.push(v - 1);
            }
        }
        if row.len() != w {
            return Err(Error::Parse {
                line: 0,
                msg: format!("row {i}: {} entries but declared weight {w}", row.len()),
            });
        }
        row.sort_unstable();
        rows.push(row);
    }
    ParityCheckMatrix::from_rows(m, n, rows)
}
