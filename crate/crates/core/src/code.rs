//! QC-LDPC code structure: base matrices, expansion, block tables, layers.
//!
//! A code is described by an `m_b × n_b` base matrix over
//! `S = {-1} ∪ {0..z-1}`. Entry `s ≥ 0` expands to the z×z identity
//! cyclically right-shifted by `s` (row `r` has its 1 at column
//! `(s + r) mod z`); entry `-1` expands to the z×z zero block. The expanded
//! parity-check matrix has `m = m_b·z` rows and `n = n_b·z` columns.
//!
//! Rows are processed by the decoder one *layer* (block row) at a time;
//! within a layer the z rows touch pairwise-disjoint column sets, which is
//! what makes layered scheduling legal. Per layer, the *block tables* list
//! the valid (non `-1`) block columns and their shifts in ascending column
//! order — the decoder's entire compressed schedule.

use crate::{Error, Result};
use rand::Rng;

/// Compressed QC code description: a grid of shift values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseMatrix {
    m_b: usize,
    n_b: usize,
    z: usize,
    /// Row-major `m_b × n_b` shift grid; -1 marks a zero block.
    shifts: Vec<i32>,
}

impl BaseMatrix {
    /// Builds a base matrix, validating dimensions and shift ranges.
    pub fn new(m_b: usize, n_b: usize, z: usize, shifts: Vec<i32>) -> Result<Self> {
        if m_b == 0 || n_b == 0 || z == 0 {
            return Err(Error::InvalidInput(format!(
                "base matrix dimensions must be positive, got {m_b}x{n_b}, z={z}"
            )));
        }
        if shifts.len() != m_b * n_b {
            return Err(Error::InvalidInput(format!(
                "expected {} shift entries, got {}",
                m_b * n_b,
                shifts.len()
            )));
        }
        if let Some(s) = shifts.iter().find(|&&s| s < -1 || s >= z as i32) {
            return Err(Error::InvalidInput(format!(
                "shift out of range: {s} not in -1..{}",
                z - 1
            )));
        }
        Ok(BaseMatrix { m_b, n_b, z, shifts })
    }

    /// Number of block rows `m_b`.
    pub fn m_b(&self) -> usize {
        self.m_b
    }

    /// Number of block columns `n_b`.
    pub fn n_b(&self) -> usize {
        self.n_b
    }

    /// Expansion factor `z`.
    pub fn z(&self) -> usize {
        self.z
    }

    /// Expanded row count `m = m_b·z`.
    pub fn m(&self) -> usize {
        self.m_b * self.z
    }

    /// Expanded column count (code length) `n = n_b·z`.
    pub fn n(&self) -> usize {
        self.n_b * self.z
    }

    /// Message length `k = n − m` of the expanded code.
    pub fn k(&self) -> usize {
        self.n().saturating_sub(self.m())
    }

    /// Design rate `(n_b − m_b) / n_b`.
    pub fn rate(&self) -> f64 {
        (self.n_b as f64 - self.m_b as f64) / self.n_b as f64
    }

    /// Shift entry at block position `(i, j)`; -1 for a zero block.
    pub fn shift(&self, i: usize, j: usize) -> i32 {
        self.shifts[i * self.n_b + j]
    }

    /// Iterator over the valid (non `-1`) blocks of block row `i`, in
    /// ascending block-column order, as `(block_col, shift)` pairs.
    pub fn valid_blocks(&self, i: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.shifts[i * self.n_b..(i + 1) * self.n_b]
            .iter()
            .enumerate()
            .filter(|(_, &s)| s >= 0)
            .map(|(j, &s)| (j, s as u32))
    }

    /// Total count of valid blocks.
    pub fn valid_block_count(&self) -> usize {
        self.shifts.iter().filter(|&&s| s >= 0).count()
    }

    /// Serializes back to the text file format accepted by
    /// [`load_base_matrix`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.m_b, self.n_b, self.z);
        for i in 0..self.m_b {
            let row: Vec<String> = (0..self.n_b).map(|j| self.shift(i, j).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Expands into the full sparse parity-check matrix.
    pub fn expand(&self) -> ParityCheckMatrix {
        expand(self)
    }

    /// Builds the per-layer valid-block tables.
    pub fn block_tables(&self) -> BlockTables {
        build_block_tables(self)
    }

    /// Derives the canonical block-row layer partition.
    pub fn layers(&self) -> LayerPartition {
        derive_layers(self)
    }

    /// Generates a random base matrix: each entry is a zero block with
    /// probability `1 − valid_fraction`, otherwise a uniform shift in
    /// `0..z`. Intended for property tests and experiments.
    pub fn random_with<R: Rng + ?Sized>(
        m_b: usize,
        n_b: usize,
        z: usize,
        valid_fraction: f64,
        rng: &mut R,
    ) -> Self {
        let shifts = (0..m_b * n_b)
            .map(|_| {
                if rng.random::<f64>() < valid_fraction {
                    rng.random_range(0..z as i32)
                } else {
                    -1
                }
            })
            .collect();
        BaseMatrix { m_b, n_b, z, shifts }
    }
}

/// Parses base-matrix text: line 1 is `m_b n_b z`, followed by `m_b` lines
/// of `n_b` space-separated shifts (−1 for a zero block). Lines starting
/// with `#` and blank lines are ignored. Errors name the offending 1-based
/// line number.
pub fn load_base_matrix(text: &str) -> Result<BaseMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(idx, l)| (idx + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_no, header) = lines
        .next()
        .ok_or(Error::Parse { line: 1, msg: "empty file, expected header \"m_b n_b z\"".into() })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::Parse {
            line: header_no,
            msg: format!("expected header \"m_b n_b z\", got \"{header}\""),
        });
    }
    let parse_dim = |f: &str, what: &str| -> Result<usize> {
        f.parse::<usize>().map_err(|_| Error::Parse {
            line: header_no,
            msg: format!("invalid {what} \"{f}\""),
        })
    };
    let m_b = parse_dim(fields[0], "row count")?;
    let n_b = parse_dim(fields[1], "column count")?;
    let z = parse_dim(fields[2], "expansion factor")?;
    if m_b == 0 || n_b == 0 || z == 0 {
        return Err(Error::Parse {
            line: header_no,
            msg: "m_b, n_b, z must all be positive".into(),
        });
    }

    let mut shifts = Vec::with_capacity(m_b * n_b);
    for row in 0..m_b {
        let (line_no, line) = lines.next().ok_or(Error::Parse {
            line: header_no,
            msg: format!("expected {m_b} matrix rows, found {row}"),
        })?;
        let entries: Vec<&str> = line.split_whitespace().collect();
        if entries.len() != n_b {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {n_b} entries, got {}", entries.len()),
            });
        }
        for e in entries {
            let s: i32 = e.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("invalid shift \"{e}\""),
            })?;
            if s < -1 || s >= z as i32 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("shift out of range: {s} not in -1..{}", z - 1),
                });
            }
            shifts.push(s);
        }
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("unexpected content after {m_b} matrix rows"),
        });
    }
    BaseMatrix::new(m_b, n_b, z, shifts)
}

/// Reads and parses a base-matrix file.
pub fn load_base_matrix_file(path: &std::path::Path) -> Result<BaseMatrix> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::ReadIo {
        path: path.display().to_string(),
        source,
    })?;
    load_base_matrix(&text)
}

/// Expanded sparse binary parity-check matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    m: usize,
    n: usize,
    /// Per row, strictly increasing column indices of the ones.
    rows: Vec<Vec<usize>>,
    /// Per column, strictly increasing row indices of the ones.
    cols: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Builds from per-row column lists, validating ranges and ordering.
    pub fn from_rows(m: usize, n: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        if rows.len() != m {
            return Err(Error::InvalidInput(format!(
                "expected {m} rows, got {}",
                rows.len()
            )));
        }
        let mut cols = vec![Vec::new(); n];
        for (i, row) in rows.iter().enumerate() {
            for (idx, &j) in row.iter().enumerate() {
                if j >= n {
                    return Err(Error::InvalidInput(format!(
                        "row {i}: column {j} out of range (n = {n})"
                    )));
                }
                if idx > 0 && row[idx - 1] >= j {
                    return Err(Error::InvalidInput(format!(
                        "row {i}: column indices not strictly increasing"
                    )));
                }
                cols[j].push(i);
            }
        }
        Ok(ParityCheckMatrix { m, n, rows, cols })
    }

    /// Row count `m`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Column count (code length) `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Message length `k = n − m`.
    pub fn k(&self) -> usize {
        self.n.saturating_sub(self.m)
    }

    /// Column indices of the ones in row `i` (the row's neighborhood).
    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    /// Row indices of the ones in column `j`.
    pub fn col(&self, j: usize) -> &[usize] {
        &self.cols[j]
    }

    /// Total number of ones.
    pub fn ones(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// True iff `H·bits = 0` over GF(2), i.e. every row has even parity.
    pub fn parity_ok(&self, bits: &[u8]) -> bool {
        debug_assert_eq!(bits.len(), self.n);
        self.rows
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &j| acc ^ (bits[j] & 1)) == 0)
    }
}

/// Expands a base matrix into its sparse parity-check matrix. Block
/// `(i, j)` with shift `s ≥ 0` places, for each `r` in `0..z`, a one at
/// expanded position `(i·z + r, j·z + (s + r) mod z)`.
pub fn expand(base: &BaseMatrix) -> ParityCheckMatrix {
    let z = base.z();
    let m = base.m();
    let n = base.n();
    let mut rows = vec![Vec::new(); m];
    for i_b in 0..base.m_b() {
        for (j_b, s) in base.valid_blocks(i_b) {
            for r in 0..z {
                rows[i_b * z + r].push(j_b * z + (s as usize + r) % z);
            }
        }
    }
    ParityCheckMatrix::from_rows(m, n, rows)
        .expect("expansion produces valid sorted rows by construction")
}

/// Per-layer tables of valid-block columns and shifts — the decoder's
/// compressed schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockTables {
    m_b: usize,
    n_b: usize,
    z: usize,
    /// Per layer, ascending block-column indices of the valid blocks.
    block_cols: Vec<Vec<usize>>,
    /// Per layer, shift of each valid block, parallel to `block_cols`.
    shifts: Vec<Vec<u32>>,
}

impl BlockTables {
    /// Number of layers `I = m_b`.
    pub fn layer_count(&self) -> usize {
        self.m_b
    }

    /// Number of block columns `J = n_b`.
    pub fn block_col_count(&self) -> usize {
        self.n_b
    }

    /// Expansion factor `z`.
    pub fn z(&self) -> usize {
        self.z
    }

    /// Code length `n = n_b·z`.
    pub fn n(&self) -> usize {
        self.n_b * self.z
    }

    /// Valid-block columns of layer `u`, ascending.
    pub fn block_cols(&self, u: usize) -> &[usize] {
        &self.block_cols[u]
    }

    /// Shifts of layer `u`'s valid blocks, parallel to [`Self::block_cols`].
    pub fn shifts(&self, u: usize) -> &[u32] {
        &self.shifts[u]
    }

    /// Layer degree `d_u` (number of valid blocks).
    pub fn degree(&self, u: usize) -> usize {
        self.block_cols[u].len()
    }

    /// All layer degrees.
    pub fn degrees(&self) -> Vec<usize> {
        (0..self.m_b).map(|u| self.degree(u)).collect()
    }

    /// Total valid blocks `Σ d_u`.
    pub fn total_blocks(&self) -> usize {
        self.block_cols.iter().map(Vec::len).sum()
    }

    /// Largest layer degree.
    pub fn max_degree(&self) -> usize {
        self.block_cols.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Layers with fewer than two valid blocks. Such rows carry no
    /// extrinsic information, so the decoder schedules skip them (their
    /// parity checks still count).
    pub fn degenerate_layers(&self) -> Vec<usize> {
        (0..self.m_b).filter(|&u| self.degree(u) < 2).collect()
    }

    /// Reconstructs the base matrix (zero blocks where no entry is listed).
    /// Round-trips exactly with [`build_block_tables`].
    pub fn rebuild_base(&self) -> BaseMatrix {
        let mut shifts = vec![-1i32; self.m_b * self.n_b];
        for u in 0..self.m_b {
            for (&j, &s) in self.block_cols[u].iter().zip(&self.shifts[u]) {
                shifts[u * self.n_b + j] = s as i32;
            }
        }
        BaseMatrix::new(self.m_b, self.n_b, self.z, shifts)
            .expect("tables hold validated shifts")
    }
}

/// Extracts the valid-block tables from a base matrix: per layer, the
/// non-(−1) entries in ascending block-column order.
pub fn build_block_tables(base: &BaseMatrix) -> BlockTables {
    let mut block_cols = Vec::with_capacity(base.m_b());
    let mut shifts = Vec::with_capacity(base.m_b());
    for i in 0..base.m_b() {
        let (cols, ss): (Vec<usize>, Vec<u32>) = base.valid_blocks(i).unzip();
        block_cols.push(cols);
        shifts.push(ss);
    }
    BlockTables {
        m_b: base.m_b(),
        n_b: base.n_b(),
        z: base.z(),
        block_cols,
        shifts,
    }
}

/// A partition of the expanded rows into decoding layers, plus the block
/// column ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerPartition {
    z: usize,
    n: usize,
    layers: Vec<Vec<usize>>,
}

impl LayerPartition {
    /// Number of layers `I`.
    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Expanded row indices of layer `u`.
    pub fn layer(&self, u: usize) -> &[usize] {
        &self.layers[u]
    }

    /// Column range of block column `j`: `[j·z, (j+1)·z)`.
    pub fn block_column(&self, j: usize) -> std::ops::Range<usize> {
        j * self.z..(j + 1) * self.z
    }

    /// Number of block columns `J = n/z`.
    pub fn block_col_count(&self) -> usize {
        self.n / self.z
    }
}

/// Canonical layer partition: layer `u` is block row `u`, i.e. expanded
/// rows `[u·z, (u+1)·z)`. Always passes [`validate_layering`] because each
/// valid block contributes exactly one 1 per row and per column within its
/// block.
pub fn derive_layers(base: &BaseMatrix) -> LayerPartition {
    let z = base.z();
    let layers = (0..base.m_b())
        .map(|u| (u * z..(u + 1) * z).collect())
        .collect();
    LayerPartition { z, n: base.n(), layers }
}

/// A within-layer disjointness violation: two rows of one layer share a
/// column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeringViolation {
    pub layer: usize,
    pub row_a: usize,
    pub row_b: usize,
    pub column: usize,
}

/// Result of [`validate_layering`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeringReport {
    pub violations: Vec<LayeringViolation>,
}

impl LayeringReport {
    /// True iff every within-layer row pair has disjoint column support.
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that rows within each layer have pairwise-disjoint column
/// support, listing every offending `(layer, row, row, column)` triple.
/// Layer row indices outside `H` are an input error.
pub fn validate_layering(
    h: &ParityCheckMatrix,
    layers: &LayerPartition,
) -> Result<LayeringReport> {
    let mut violations = Vec::new();
    // seen_by[j] = row that last touched column j in the current layer
    let mut seen_by: Vec<Option<usize>> = vec![None; h.n()];
    for (u, layer) in layers.layers.iter().enumerate() {
        for slot in seen_by.iter_mut() {
            *slot = None;
        }
        for &i in layer {
            if i >= h.m() {
                return Err(Error::InvalidInput(format!(
                    "layer {u} references row {i}, but H has only {} rows",
                    h.m()
                )));
            }
            for &j in h.row(i) {
                match seen_by[j] {
                    Some(prev) => violations.push(LayeringViolation {
                        layer: u,
                        row_a: prev,
                        row_b: i,
                        column: j,
                    }),
                    None => seen_by[j] = Some(i),
                }
            }
        }
    }
    Ok(LayeringReport { violations })
}
