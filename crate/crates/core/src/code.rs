//! Linear block codes: parity-check matrices, Tanner graph adjacency,
//! syndromes and (test-side) encoding.
//!
//! Two text formats are understood. The alist format (MacKay) and a dense
//! format whose first line is `rows cols` followed by `rows` lines of
//! space-separated 0/1 entries.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Binary vector of length V holding a (candidate) codeword.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Codeword(pub Vec<u8>);

impl Codeword {
    pub fn zeros(n: usize) -> Self {
        Codeword(vec![0; n])
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b != 0).count()
    }
}

/// Binary error pattern e = y_HD xor c.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ErrorPattern(pub Vec<u8>);

impl ErrorPattern {
    pub fn between(received: &[u8], codeword: &[u8]) -> Self {
        ErrorPattern(received.iter().zip(codeword).map(|(a, b)| (a ^ b) & 1).collect())
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b != 0).count()
    }

    /// Positions of the set bits.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b != 0).map(|(i, _)| i)
    }
}

/// Sparse parity-check matrix with its Tanner graph.
///
/// Edges are indexed in row-major order: all edges of check 0 by increasing
/// variable, then check 1, and so on. Every per-edge quantity in the crate
/// (messages, weights, gradients) uses this indexing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    rows: usize,
    cols: usize,
    dense: Vec<u8>,
    edges: Vec<(usize, usize)>,
    check_ptr: Vec<usize>,
    var_ptr: Vec<usize>,
    var_edges: Vec<usize>,
    // For an outgoing edge e = (c, v), the incoming edges (c', v), c' != c,
    // live at pair_in[pair_ptr[e]..pair_ptr[e + 1]].
    pair_ptr: Vec<usize>,
    pair_in: Vec<usize>,
}

impl ParityCheckMatrix {
    /// Builds the matrix from per-check variable lists (0-based).
    pub fn from_check_lists(cols: usize, check_lists: &[Vec<usize>]) -> Result<Self> {
        let rows = check_lists.len();
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "parity-check matrix must be non-empty (got {rows}x{cols})"
            )));
        }
        let mut dense = vec![0u8; rows * cols];
        for (c, list) in check_lists.iter().enumerate() {
            for &v in list {
                if v >= cols {
                    return Err(Error::InvalidArgument(format!(
                        "check {c}: variable index {v} out of range (cols = {cols})"
                    )));
                }
                if dense[c * cols + v] != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "check {c}: duplicate variable {v}"
                    )));
                }
                dense[c * cols + v] = 1;
            }
        }
        Self::from_dense(rows, cols, dense)
    }

    /// Builds the matrix from a row-major dense 0/1 buffer.
    pub fn from_dense(rows: usize, cols: usize, dense: Vec<u8>) -> Result<Self> {
        check_len("dense matrix entries", rows * cols, dense.len())?;
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "parity-check matrix must be non-empty (got {rows}x{cols})"
            )));
        }
        if let Some(bad) = dense.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidArgument(format!("non-binary entry {bad}")));
        }
        let mut edges = Vec::new();
        let mut check_ptr = Vec::with_capacity(rows + 1);
        check_ptr.push(0);
        for c in 0..rows {
            for v in 0..cols {
                if dense[c * cols + v] == 1 {
                    edges.push((c, v));
                }
            }
            if edges.len() == check_ptr[c] {
                return Err(Error::InvalidArgument(format!("check {c} has no variables")));
            }
            check_ptr.push(edges.len());
        }
        let mut per_var: Vec<Vec<usize>> = vec![Vec::new(); cols];
        for (e, &(_, v)) in edges.iter().enumerate() {
            per_var[v].push(e);
        }
        if let Some(v) = per_var.iter().position(|l| l.is_empty()) {
            return Err(Error::InvalidArgument(format!("variable {v} has no checks")));
        }
        let mut var_ptr = Vec::with_capacity(cols + 1);
        var_ptr.push(0);
        let mut var_edges = Vec::with_capacity(edges.len());
        for list in &per_var {
            var_edges.extend_from_slice(list);
            var_ptr.push(var_edges.len());
        }
        let mut pair_ptr = vec![0usize; edges.len() + 1];
        let mut pair_slots: Vec<Vec<usize>> = vec![Vec::new(); edges.len()];
        for list in &per_var {
            for &out in list {
                pair_slots[out] = list.iter().copied().filter(|&e| e != out).collect();
            }
        }
        let mut pair_in = Vec::new();
        for (e, slots) in pair_slots.iter().enumerate() {
            pair_in.extend_from_slice(slots);
            pair_ptr[e + 1] = pair_in.len();
        }
        Ok(ParityCheckMatrix {
            rows,
            cols,
            dense,
            edges,
            check_ptr,
            var_ptr,
            var_edges,
            pair_ptr,
            pair_in,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.pair_in.len()
    }

    pub fn entry(&self, check: usize, var: usize) -> u8 {
        self.dense[check * self.cols + var]
    }

    pub fn dense(&self) -> &[u8] {
        &self.dense
    }

    /// All edges as (check, variable), in edge-index order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edge indices of check `c`; contiguous by construction.
    pub fn check_edges(&self, c: usize) -> std::ops::Range<usize> {
        self.check_ptr[c]..self.check_ptr[c + 1]
    }

    /// Edge indices touching variable `v`, ordered by check.
    pub fn var_edges(&self, v: usize) -> &[usize] {
        &self.var_edges[self.var_ptr[v]..self.var_ptr[v + 1]]
    }

    pub fn var_degree(&self, v: usize) -> usize {
        self.var_ptr[v + 1] - self.var_ptr[v]
    }

    pub fn check_degree(&self, c: usize) -> usize {
        self.check_ptr[c + 1] - self.check_ptr[c]
    }

    /// N(v): check indices touching variable `v`.
    pub fn var_neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.var_edges(v).iter().map(move |&e| self.edges[e].0)
    }

    /// Variable indices of check `c`.
    pub fn check_neighbors(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.check_edges(c).map(move |e| self.edges[e].1)
    }

    /// Pair slots feeding outgoing edge `e`; slot `p` has incoming edge
    /// [`Self::pair_incoming`]`(p)`.
    pub fn pair_range(&self, e: usize) -> std::ops::Range<usize> {
        self.pair_ptr[e]..self.pair_ptr[e + 1]
    }

    pub fn pair_incoming(&self, p: usize) -> usize {
        self.pair_in[p]
    }

    /// s = H·word over GF(2), computed from the check adjacency.
    pub fn syndrome(&self, word: &[u8]) -> Result<Vec<u8>> {
        check_len("word length", self.cols, word.len())?;
        Ok(self.syndrome_unchecked(word))
    }

    pub(crate) fn syndrome_unchecked(&self, word: &[u8]) -> Vec<u8> {
        (0..self.rows)
            .map(|c| {
                self.check_edges(c)
                    .fold(0u8, |acc, e| acc ^ (word[self.edges[e].1] & 1))
            })
            .collect()
    }

    /// True iff H·word = 0.
    pub fn is_codeword(&self, word: &[u8]) -> Result<bool> {
        check_len("word length", self.cols, word.len())?;
        Ok(self.is_codeword_unchecked(word))
    }

    pub(crate) fn is_codeword_unchecked(&self, word: &[u8]) -> bool {
        (0..self.rows).all(|c| {
            self.check_edges(c)
                .fold(0u8, |acc, e| acc ^ (word[self.edges[e].1] & 1))
                == 0
        })
    }

    /// Rank of H over GF(2).
    pub fn rank(&self) -> usize {
        let mut rows: Vec<Vec<u8>> = (0..self.rows)
            .map(|c| self.dense[c * self.cols..(c + 1) * self.cols].to_vec())
            .collect();
        let mut rank = 0;
        for col in 0..self.cols {
            if let Some(p) = (rank..rows.len()).find(|&r| rows[r][col] == 1) {
                rows.swap(rank, p);
                let pivot = rows[rank].clone();
                for (r, row) in rows.iter_mut().enumerate() {
                    if r != rank && row[col] == 1 {
                        row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    /// Number of length-4 cycles in the Tanner graph.
    pub fn four_cycles(&self) -> usize {
        let mut total = 0;
        for a in 0..self.rows {
            for b in a + 1..self.rows {
                let overlap = (0..self.cols)
                    .filter(|&v| self.entry(a, v) == 1 && self.entry(b, v) == 1)
                    .count();
                total += overlap * overlap.saturating_sub(1) / 2;
            }
        }
        total
    }

    /// Reads an alist file.
    pub fn load_alist(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_alist(&text, &path.display().to_string())
    }

    /// Reads a dense 0/1 text matrix.
    pub fn load_dense(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_dense(&text, &path.display().to_string())
    }

    /// Serializes as alist with 1-based, zero-padded neighbor lists.
    pub fn to_alist(&self) -> String {
        let col_lists: Vec<Vec<usize>> = (0..self.cols)
            .map(|v| self.var_neighbors(v).map(|c| c + 1).collect())
            .collect();
        let row_lists: Vec<Vec<usize>> = (0..self.rows)
            .map(|c| self.check_neighbors(c).map(|v| v + 1).collect())
            .collect();
        let max_col = col_lists.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = row_lists.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.cols, self.rows);
        let _ = writeln!(out, "{max_col} {max_row}");
        let join = |xs: &mut dyn Iterator<Item = usize>| {
            xs.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(out, "{}", join(&mut col_lists.iter().map(Vec::len)));
        let _ = writeln!(out, "{}", join(&mut row_lists.iter().map(Vec::len)));
        for (lists, width) in [(&col_lists, max_col), (&row_lists, max_row)] {
            for l in lists.iter() {
                let mut it = l.iter().copied().chain(std::iter::repeat(0)).take(width);
                let _ = writeln!(out, "{}", join(&mut it));
            }
        }
        out
    }

    pub fn to_dense_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for c in 0..self.rows {
            let row: Vec<String> = self.dense[c * self.cols..(c + 1) * self.cols]
                .iter()
                .map(|b| b.to_string())
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    source: &'a str,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, source: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate().peekable(),
            source,
            last: 0,
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.source.to_string(),
            line,
            message: message.into(),
        }
    }

    /// Next non-blank line as (1-based line number, integers).
    fn next_ints(&mut self, what: &str) -> Result<(usize, Vec<usize>)> {
        loop {
            match self.inner.next() {
                None => return Err(self.err(self.last + 1, format!("unexpected end of file, expected {what}"))),
                Some((i, line)) => {
                    self.last = i + 1;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let ints = line
                        .split_whitespace()
                        .map(|tok| {
                            tok.parse::<usize>()
                                .map_err(|_| self.err(i + 1, format!("{what}: invalid integer '{tok}'")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    return Ok((i + 1, ints));
                }
            }
        }
    }

    fn expect_count(&mut self, what: &str, count: usize) -> Result<(usize, Vec<usize>)> {
        let (line, ints) = self.next_ints(what)?;
        if ints.len() != count {
            return Err(self.err(line, format!("{what}: expected {count} values, found {}", ints.len())));
        }
        Ok((line, ints))
    }
}

pub fn parse_alist(text: &str, source: &str) -> Result<ParityCheckMatrix> {
    let mut lines = Lines::new(text, source);
    let (hl, header) = lines.expect_count("header (cols rows)", 2)?;
    let (cols, rows) = (header[0], header[1]);
    if cols == 0 || rows == 0 {
        return Err(lines.err(hl, "matrix dimensions must be positive"));
    }
    let (ml, maxes) = lines.expect_count("max degrees", 2)?;
    let (_, col_deg) = lines.expect_count("column degree list", cols)?;
    let (_, row_deg) = lines.expect_count("row degree list", rows)?;
    if col_deg.iter().max() != Some(&maxes[0]) || row_deg.iter().max() != Some(&maxes[1]) {
        return Err(lines.err(ml, "max degrees disagree with degree lists"));
    }
    let mut read_lists = |count: usize, degrees: &[usize], limit: usize, what: &str| -> Result<Vec<(usize, Vec<usize>)>> {
        (0..count)
            .map(|i| {
                let (line, ints) = lines.next_ints(what)?;
                let list: Vec<usize> = ints.into_iter().filter(|&x| x != 0).collect();
                if list.len() != degrees[i] {
                    return Err(lines.err(
                        line,
                        format!("{what} {}: degree {} declared, {} entries found", i + 1, degrees[i], list.len()),
                    ));
                }
                if let Some(&bad) = list.iter().find(|&&x| x > limit) {
                    return Err(lines.err(line, format!("{what} {}: index {bad} out of range 1..={limit}", i + 1)));
                }
                Ok((line, list.into_iter().map(|x| x - 1).collect()))
            })
            .collect()
    };
    let col_lists = read_lists(cols, &col_deg, rows, "column")?;
    let row_lists = read_lists(rows, &row_deg, cols, "row")?;

    let mut from_rows = vec![0u8; rows * cols];
    for (c, (line, list)) in row_lists.iter().enumerate() {
        for &v in list {
            if from_rows[c * cols + v] != 0 {
                return Err(Error::Parse {
                    path: source.to_string(),
                    line: *line,
                    message: format!("row {}: duplicate column {}", c + 1, v + 1),
                });
            }
            from_rows[c * cols + v] = 1;
        }
    }
    for (v, (line, list)) in col_lists.iter().enumerate() {
        for &c in list {
            if from_rows[c * cols + v] != 1 {
                return Err(Error::Parse {
                    path: source.to_string(),
                    line: *line,
                    message: format!("column {} lists row {} but row {} does not list column {}", v + 1, c + 1, c + 1, v + 1),
                });
            }
        }
    }
    // Column lists are consistent with rows entry by entry; the degree totals
    // must agree as well.
    let total_cols: usize = col_deg.iter().sum();
    let total_rows: usize = row_deg.iter().sum();
    if total_cols != total_rows {
        return Err(Error::Parse {
            path: source.to_string(),
            line: col_lists.last().map(|l| l.0).unwrap_or(hl),
            message: format!("column lists hold {total_cols} entries, row lists {total_rows}"),
        });
    }
    ParityCheckMatrix::from_dense(rows, cols, from_rows).map_err(|e| Error::Parse {
        path: source.to_string(),
        line: hl,
        message: e.to_string(),
    })
}

pub fn parse_dense(text: &str, source: &str) -> Result<ParityCheckMatrix> {
    let mut lines = Lines::new(text, source);
    let (hl, header) = lines.expect_count("header (rows cols)", 2)?;
    let (rows, cols) = (header[0], header[1]);
    let mut dense = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (line, ints) = lines.expect_count("matrix row", cols)?;
        if ints.iter().any(|&b| b > 1) {
            return Err(lines.err(line, "entries must be 0 or 1"));
        }
        dense.extend(ints.into_iter().map(|b| b as u8));
    }
    ParityCheckMatrix::from_dense(rows, cols, dense).map_err(|e| Error::Parse {
        path: source.to_string(),
        line: hl,
        message: e.to_string(),
    })
}

/// Code parameters of a narrow-sense primitive BCH code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub code_id: String,
    pub n: usize,
    pub k: usize,
    /// Bounded-distance correction radius of the hard-decision decoder.
    pub t: usize,
    /// m with n = 2^m - 1.
    pub gf_order_exponent: u32,
}

impl CodeSpec {
    /// Parameters of the primitive narrow-sense BCH code of length 2^m - 1
    /// and dimension `k`. `t` is the designed radius: the smallest t whose
    /// cyclotomic cosets of 1..=2t cover exactly n - k exponents.
    pub fn primitive_bch(code_id: impl Into<String>, m: u32, k: usize) -> Result<Self> {
        if !(2..=16).contains(&m) {
            return Err(Error::InvalidArgument(format!("unsupported field degree m = {m}")));
        }
        let n = (1usize << m) - 1;
        if k == 0 || k >= n {
            return Err(Error::InvalidArgument(format!("need 0 < k < n, got k = {k}, n = {n}")));
        }
        let mut covered = vec![false; n];
        let mut count = 0;
        for t in 1..=n / 2 {
            for j in [2 * t - 1, 2 * t] {
                let mut x = j % n;
                while !covered[x] {
                    covered[x] = true;
                    count += 1;
                    x = (2 * x) % n;
                }
            }
            if count == n - k {
                return Ok(CodeSpec {
                    code_id: code_id.into(),
                    n,
                    k,
                    t,
                    gf_order_exponent: m,
                });
            }
            if count > n - k {
                break;
            }
        }
        Err(Error::InvalidArgument(format!(
            "no narrow-sense primitive BCH code with n = {n}, k = {k}"
        )))
    }

    /// Parses identifiers such as `CR-BCH(63,36)`, `BCH(63,45)` or
    /// `Hamming(7,4)`.
    pub fn from_id(code_id: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unrecognized code id '{code_id}'"));
        let open = code_id.find('(').ok_or_else(bad)?;
        let close = code_id.rfind(')').ok_or_else(bad)?;
        let family = &code_id[..open];
        if !(family.ends_with("BCH") || family.ends_with("Hamming")) {
            return Err(bad());
        }
        let mut parts = code_id[open + 1..close].split(',').map(|s| s.trim().parse::<usize>());
        let n = parts.next().and_then(|r| r.ok()).ok_or_else(bad)?;
        let k = parts.next().and_then(|r| r.ok()).ok_or_else(bad)?;
        if !(n + 1).is_power_of_two() {
            return Err(bad());
        }
        let spec = Self::primitive_bch(code_id, (n + 1).trailing_zeros(), k)?;
        if family.ends_with("Hamming") && spec.t != 1 {
            return Err(bad());
        }
        Ok(spec)
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Checks that `h` has the shape of this code.
    pub fn check_matrix(&self, h: &ParityCheckMatrix) -> Result<()> {
        check_len("parity-check columns", self.n, h.cols())?;
        let rank = h.rank();
        if rank != self.n - self.k {
            return Err(Error::InvalidArgument(format!(
                "{}: parity-check rank {rank}, expected n - k = {}",
                self.code_id,
                self.n - self.k
            )));
        }
        Ok(())
    }
}

/// Generator matrix derived from H by Gaussian elimination.
///
/// Only used for encoding random codewords in tests and spot checks; the
/// decoding pipeline works on the zero codeword.
#[derive(Debug, Clone)]
pub struct Generator {
    n: usize,
    rows: Vec<Vec<u8>>,
}

impl Generator {
    pub fn from_parity_check(h: &ParityCheckMatrix) -> Self {
        let n = h.cols();
        let mut m: Vec<Vec<u8>> = (0..h.rows())
            .map(|c| h.dense()[c * n..(c + 1) * n].to_vec())
            .collect();
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..n {
            if r == m.len() {
                break;
            }
            if let Some(p) = (r..m.len()).find(|&i| m[i][col] == 1) {
                m.swap(r, p);
                let pivot = m[r].clone();
                for (i, row) in m.iter_mut().enumerate() {
                    if i != r && row[col] == 1 {
                        row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
                    }
                }
                pivots.push(col);
                r += 1;
            }
        }
        let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        // Reduced row echelon form: x_pivot(i) = sum over free f of m[i][f] x_f.
        let rows = free
            .iter()
            .map(|&f| {
                let mut g = vec![0u8; n];
                g[f] = 1;
                for (i, &p) in pivots.iter().enumerate() {
                    g[p] = m[i][f];
                }
                g
            })
            .collect();
        Generator { n, rows }
    }

    pub fn dimension(&self) -> usize {
        self.rows.len()
    }

    pub fn encode(&self, message: &[u8]) -> Result<Codeword> {
        check_len("message length", self.rows.len(), message.len())?;
        let mut c = vec![0u8; self.n];
        for (row, &bit) in self.rows.iter().zip(message) {
            if bit & 1 == 1 {
                c.iter_mut().zip(row).for_each(|(a, b)| *a ^= b);
            }
        }
        Ok(Codeword(c))
    }

    /// Uniformly random codeword.
    pub fn random_codeword<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Codeword {
        let msg: Vec<u8> = (0..self.rows.len()).map(|_| rng.random::<bool>() as u8).collect();
        self.encode(&msg).expect("message length matches")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::hamming_7_4;

    #[test]
    fn hamming_shape() {
        let h = hamming_7_4();
        assert_eq!((h.rows(), h.cols(), h.num_edges()), (3, 7, 12));
        for v in 0..7 {
            for c in h.var_neighbors(v) {
                assert!(h.check_neighbors(c).any(|x| x == v));
            }
        }
    }

    #[test]
    fn single_bit_syndrome_is_column() {
        let h = hamming_7_4();
        for v in 0..7 {
            let mut e = vec![0u8; 7];
            e[v] = 1;
            let s = h.syndrome(&e).unwrap();
            let col: Vec<u8> = (0..3).map(|c| h.entry(c, v)).collect();
            assert_eq!(s, col);
            assert!(!h.is_codeword(&e).unwrap());
        }
        assert_eq!(h.syndrome(&[0; 7]).unwrap(), vec![0; 3]);
        assert!(h.is_codeword(&[0; 7]).unwrap());
    }

    #[test]
    fn length_mismatch() {
        let h = hamming_7_4();
        assert!(matches!(h.syndrome(&[0; 6]), Err(Error::Dimension { .. })));
        assert!(h.is_codeword(&[0; 8]).is_err());
    }

    #[test]
    fn alist_row_column_disagreement() {
        let text = "3 2\n1 2\n1 1 1\n2 1\n1\n2\n1\n1 2\n3\n";
        // column 2 lists row 2, but row 2 only lists column 3
        let err = parse_alist(text, "bad.alist").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn alist_errors_name_lines() {
        let err = parse_alist("7 3\n3 4\n1 1 2\n", "short.alist").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_alist("x 3\n", "hdr.alist").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let text = hamming_7_4().to_alist().replace("1 3 4 5", "1 3 4 9");
        let err = parse_alist(&text, "range.alist").unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn zero_column_rejected() {
        let err = ParityCheckMatrix::from_dense(1, 2, vec![1, 0]).unwrap_err();
        assert!(err.to_string().contains("variable 1"));
    }

    #[test]
    fn dense_round_trip() {
        let h = hamming_7_4();
        let back = parse_dense(&h.to_dense_text(), "mem").unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn generator_rows_are_codewords() {
        let h = hamming_7_4();
        let g = Generator::from_parity_check(&h);
        assert_eq!(g.dimension(), 4);
        for m in 0..16u8 {
            let msg: Vec<u8> = (0..4).map(|i| (m >> i) & 1).collect();
            let c = g.encode(&msg).unwrap();
            assert!(h.is_codeword(c.bits()).unwrap());
        }
    }

    #[test]
    fn bch_radius_from_cosets() {
        assert_eq!(CodeSpec::from_id("CR-BCH(63,36)").unwrap().t, 5);
        assert_eq!(CodeSpec::from_id("CR-BCH(63,45)").unwrap().t, 3);
        assert_eq!(CodeSpec::from_id("Hamming(7,4)").unwrap().t, 1);
        assert!(CodeSpec::from_id("BCH(63,40)").is_err());
        assert!(CodeSpec::from_id("LDPC(63,36)").is_err());
        let c = CodeSpec::from_id("BCH(63,36)").unwrap();
        assert!((c.rate() - 36.0 / 63.0).abs() < 1e-15);
    }

    #[test]
    fn pair_slots_exclude_self() {
        let h = hamming_7_4();
        for e in 0..h.num_edges() {
            let (_, v) = h.edges()[e];
            let incoming: Vec<usize> = h.pair_range(e).map(|p| h.pair_incoming(p)).collect();
            assert_eq!(incoming.len(), h.var_degree(v) - 1);
            assert!(incoming.iter().all(|&i| i != e && h.edges()[i].1 == v));
        }
    }
}
