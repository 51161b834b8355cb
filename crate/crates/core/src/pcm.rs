//! Sparse binary parity-check matrices with a raptor-like extension
//! structure.
//!
//! A matrix holds an upper-left *base* block of `base_m` rows and `base_n`
//! columns followed by extension rows/columns that lower the code rate when
//! included. The *window* at depth `d` is the upper-left
//! `(base_m + d) x (base_n + d)` submatrix; its rate is
//! `(base_n - base_m) / (base_n + d)`, so deepening the window only adds
//! syndrome bits while keeping all previous ones unchanged. Extension column
//! `base_n + j` participates in no row above `base_m + j` and couples to row
//! `base_m + j` with degree one, which is what makes the windows nested.
//!
//! Matrices are stored row-major as sorted column-index lists, which is the
//! layout both the syndrome computation and the decoder want.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::Bit;

mod alist;

pub use alist::{load_alist, write_alist, AlistError};

/// Default column degree of the pseudo-random base block produced by
/// [`generate_raptor_family`].
pub const BASE_COL_DEGREE: usize = 3;

/// Errors from matrix construction, validation, and windowing.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PcmError {
    #[error("row {row}: column index {col} out of range (n_total {n_total})")]
    ColumnOutOfRange { row: usize, col: usize, n_total: usize },
    #[error("row {row}: duplicate column index {col}")]
    DuplicateColumn { row: usize, col: usize },
    #[error("base dimensions {base_m}x{base_n} exceed matrix {m_total}x{n_total}")]
    BaseOutOfRange { base_m: usize, base_n: usize, m_total: usize, n_total: usize },
    #[error("window depth {d} exceeds maximum extension depth {max_depth}")]
    DepthOutOfRange { d: usize, max_depth: usize },
    #[error("bit vector has length {got}, window has {expected} columns")]
    FrameLengthMismatch { expected: usize, got: usize },
    #[error("invalid generator parameters: {0}")]
    BadGeneratorParams(&'static str),
    #[error("base block degenerate (all-zero row) after {0} regeneration attempts")]
    DegenerateBase(usize),
    #[error("matrix too large: column indices must fit in u32")]
    TooLarge,
}

/// Sparse binary parity-check matrix over GF(2) with nested rate windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsePcm {
    m_total: usize,
    n_total: usize,
    base_m: usize,
    base_n: usize,
    raptor: bool,
    /// `rows[i]` holds the sorted column indices of the ones in row `i`.
    rows: Vec<Vec<u32>>,
}

impl SparsePcm {
    /// Builds a matrix from row-major index lists, inferring the base
    /// dimensions as the largest trailing block that satisfies the raptor
    /// extension property. Rows are sorted; duplicates are rejected.
    pub fn new(rows: Vec<Vec<u32>>, n_total: usize) -> Result<Self, PcmError> {
        let rows = Self::normalize_rows(rows, n_total)?;
        let m_total = rows.len();
        let depth = inferred_extension_depth(&rows, m_total, n_total);
        Ok(SparsePcm {
            m_total,
            n_total,
            base_m: m_total - depth,
            base_n: n_total - depth,
            raptor: true,
            rows,
        })
    }

    /// Builds a matrix with explicit base dimensions. The raptor flag is the
    /// result of verifying the degree-one extension property structurally.
    pub fn with_base(
        rows: Vec<Vec<u32>>,
        n_total: usize,
        base_m: usize,
        base_n: usize,
    ) -> Result<Self, PcmError> {
        let rows = Self::normalize_rows(rows, n_total)?;
        let m_total = rows.len();
        if base_m == 0 || base_n == 0 || base_m > m_total || base_n > n_total {
            return Err(PcmError::BaseOutOfRange { base_m, base_n, m_total, n_total });
        }
        let raptor = verify_raptor(&rows, m_total, n_total, base_m, base_n);
        Ok(SparsePcm { m_total, n_total, base_m, base_n, raptor, rows })
    }

    fn normalize_rows(mut rows: Vec<Vec<u32>>, n_total: usize) -> Result<Vec<Vec<u32>>, PcmError> {
        if n_total > u32::MAX as usize {
            return Err(PcmError::TooLarge);
        }
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            for pair in row.windows(2) {
                if pair[0] == pair[1] {
                    return Err(PcmError::DuplicateColumn { row: i, col: pair[0] as usize });
                }
            }
            if let Some(&last) = row.last() {
                if last as usize >= n_total {
                    return Err(PcmError::ColumnOutOfRange {
                        row: i,
                        col: last as usize,
                        n_total,
                    });
                }
            }
        }
        Ok(rows)
    }

    pub fn m_total(&self) -> usize {
        self.m_total
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn base_m(&self) -> usize {
        self.base_m
    }

    pub fn base_n(&self) -> usize {
        self.base_n
    }

    /// Whether the extension columns satisfy the degree-one coupling
    /// structure (vacuously true when there is no extension).
    pub fn raptor_flag(&self) -> bool {
        self.raptor
    }

    /// Sorted column indices of row `i`.
    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.rows.iter().map(|r| r.as_slice())
    }

    /// Number of stored ones.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// Deepest window this matrix supports.
    pub fn max_depth(&self) -> usize {
        (self.m_total - self.base_m).min(self.n_total - self.base_n)
    }

    /// Code rate of the base window.
    pub fn base_rate(&self) -> f64 {
        (self.base_n as f64 - self.base_m as f64) / self.base_n as f64
    }

    /// The `(base_m + d) x (base_n + d)` upper-left window.
    pub fn window(&self, d: usize) -> Result<PcmWindow<'_>, PcmError> {
        if d > self.max_depth() {
            return Err(PcmError::DepthOutOfRange { d, max_depth: self.max_depth() });
        }
        Ok(PcmWindow { pcm: self, d })
    }

    /// The base window (depth zero).
    pub fn base_window(&self) -> PcmWindow<'_> {
        PcmWindow { pcm: self, d: 0 }
    }
}

/// A zero-copy view of the upper-left `(base_m + d) x (base_n + d)` window.
#[derive(Debug, Clone, Copy)]
pub struct PcmWindow<'a> {
    pcm: &'a SparsePcm,
    d: usize,
}

impl<'a> PcmWindow<'a> {
    pub fn depth(&self) -> usize {
        self.d
    }

    pub fn pcm(&self) -> &'a SparsePcm {
        self.pcm
    }

    /// The window `d_extra` rows and columns deeper into the same matrix.
    pub fn deepen(&self, d_extra: usize) -> Result<PcmWindow<'a>, PcmError> {
        self.pcm.window(self.d + d_extra)
    }

    pub fn n_cols(&self) -> usize {
        self.pcm.base_n + self.d
    }

    pub fn m_rows(&self) -> usize {
        self.pcm.base_m + self.d
    }

    /// Code rate of this window, `(n - m) / n` of the window dimensions.
    pub fn rate(&self) -> f64 {
        (self.n_cols() as f64 - self.m_rows() as f64) / self.n_cols() as f64
    }

    /// Column indices of row `i` restricted to the window. For matrices with
    /// the raptor property the restriction never removes anything; for
    /// arbitrary matrices it truncates at the window boundary.
    pub fn row(&self, i: usize) -> &'a [u32] {
        let full = self.pcm.row(i);
        let end = full.partition_point(|&c| (c as usize) < self.n_cols());
        &full[..end]
    }

    /// Syndrome of `bits` under this window: entry `i` is the XOR of the
    /// bits addressed by row `i`.
    pub fn syndrome(&self, bits: &[Bit]) -> Result<Vec<Bit>, PcmError> {
        if bits.len() != self.n_cols() {
            return Err(PcmError::FrameLengthMismatch { expected: self.n_cols(), got: bits.len() });
        }
        let mut out = Vec::with_capacity(self.m_rows());
        for i in 0..self.m_rows() {
            let mut parity = 0u8;
            for &c in self.row(i) {
                parity ^= bits[c as usize];
            }
            out.push(parity);
        }
        Ok(out)
    }
}

/// Largest `e` such that interpreting the last `e` rows and columns as a
/// raptor extension is structurally valid.
fn inferred_extension_depth(rows: &[Vec<u32>], m_total: usize, n_total: usize) -> usize {
    let cap = (m_total.saturating_sub(1)).min(n_total.saturating_sub(1));
    if cap == 0 {
        return 0;
    }
    let mut min_row = vec![usize::MAX; n_total];
    for (i, row) in rows.iter().enumerate() {
        for &c in row {
            let c = c as usize;
            if min_row[c] == usize::MAX {
                min_row[c] = i;
            } else {
                min_row[c] = min_row[c].min(i);
            }
        }
    }
    let mut depth = 0;
    while depth < cap {
        let col = n_total - 1 - depth;
        // Coupling row for column `col` under any consistent base split.
        let want = col as i64 + m_total as i64 - n_total as i64;
        if want < 0 || min_row[col] != want as usize {
            break;
        }
        depth += 1;
    }
    depth
}

fn verify_raptor(
    rows: &[Vec<u32>],
    m_total: usize,
    n_total: usize,
    base_m: usize,
    base_n: usize,
) -> bool {
    let ext_cols = n_total - base_n;
    if ext_cols > m_total - base_m {
        return false;
    }
    // Column-first scan: every extension column must be absent from all rows
    // above its coupling row and present in the coupling row itself.
    let mut min_row = vec![usize::MAX; ext_cols];
    for (i, row) in rows.iter().enumerate() {
        let start = row.partition_point(|&c| (c as usize) < base_n);
        for &c in &row[start..] {
            let j = c as usize - base_n;
            if min_row[j] == usize::MAX {
                min_row[j] = i;
            }
        }
    }
    (0..ext_cols).all(|j| min_row[j] == base_m + j)
}

/// Generates a raptor-like family: a pseudo-random column-regular base block
/// (column degree [`BASE_COL_DEGREE`]) of `base_m` rows by `base_n` columns,
/// extended by `max_d` degree-one-coupled rows/columns. Extension row
/// `base_m + j` contains column `base_n + j` plus `ext_degree` distinct
/// columns drawn from `[0, base_n + j)`.
///
/// Deterministic in `seed`. Column sampling leaves a few all-zero rows once
/// `base_m` is large; those are repaired by moving parity stubs out of
/// heavier rows, keeping every column at exactly its target degree. A base
/// block the repair cannot fix is regenerated with a perturbed sub-seed,
/// failing after 100 attempts.
pub fn generate_raptor_family(
    seed: u64,
    base_n: usize,
    base_m: usize,
    max_d: usize,
    ext_degree: usize,
) -> Result<SparsePcm, PcmError> {
    generate_raptor_family_with_degree(seed, base_n, base_m, max_d, ext_degree, BASE_COL_DEGREE)
}

/// [`generate_raptor_family`] with an explicit base column degree.
pub fn generate_raptor_family_with_degree(
    seed: u64,
    base_n: usize,
    base_m: usize,
    max_d: usize,
    ext_degree: usize,
    base_col_degree: usize,
) -> Result<SparsePcm, PcmError> {
    if base_m == 0 || base_n == 0 || base_m >= base_n {
        return Err(PcmError::BadGeneratorParams("need 0 < base_m < base_n"));
    }
    if ext_degree == 0 || ext_degree > base_n {
        return Err(PcmError::BadGeneratorParams("need 1 <= ext_degree <= base_n"));
    }
    if base_col_degree == 0 || base_col_degree > base_m {
        return Err(PcmError::BadGeneratorParams("need 1 <= base_col_degree <= base_m"));
    }
    if base_n + max_d > u32::MAX as usize {
        return Err(PcmError::TooLarge);
    }

    const MAX_ATTEMPTS: usize = 100;
    'attempt: for attempt in 0..MAX_ATTEMPTS {
        let sub_seed = seed.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed);
        let mut col_rows: Vec<Vec<usize>> = Vec::with_capacity(base_n);
        let mut row_deg = vec![0usize; base_m];
        for _ in 0..base_n {
            let picks: Vec<usize> =
                rand::seq::index::sample(&mut rng, base_m, base_col_degree).into_iter().collect();
            for &r in &picks {
                row_deg[r] += 1;
            }
            col_rows.push(picks);
        }
        // Move stubs from rows of degree >= 2 until every row holds at
        // least two, so no check is empty (or a bare bit disclosure).
        for r in 0..base_m {
            while row_deg[r] < 2 {
                let mut budget = 64 * base_m + 1024;
                loop {
                    if budget == 0 {
                        continue 'attempt;
                    }
                    budget -= 1;
                    let c = rng.random_range(0..base_n);
                    let j = rng.random_range(0..base_col_degree);
                    let donor = col_rows[c][j];
                    if donor != r && row_deg[donor] > 2 && !col_rows[c].contains(&r) {
                        col_rows[c][j] = r;
                        row_deg[donor] -= 1;
                        row_deg[r] += 1;
                        break;
                    }
                }
            }
        }
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); base_m + max_d];
        for (c, rs) in col_rows.iter().enumerate() {
            for &r in rs {
                rows[r].push(c as u32);
            }
        }
        for j in 0..max_d {
            let row = &mut rows[base_m + j];
            row.push((base_n + j) as u32);
            for c in rand::seq::index::sample(&mut rng, base_n + j, ext_degree) {
                row.push(c as u32);
            }
        }
        let pcm = SparsePcm::with_base(rows, base_n + max_d, base_m, base_n)?;
        debug_assert!(pcm.raptor_flag());
        return Ok(pcm);
    }
    Err(PcmError::DegenerateBase(MAX_ATTEMPTS))
}

/// Frame length `2 * 10^4 * floor(1/r)` used by the full-scale multi-rate
/// code family this toolkit is meant to drive; synthetic test codes are much
/// shorter.
pub fn family_frame_length(rate: f64) -> usize {
    20_000 * (1.0 / rate).floor() as usize
}
