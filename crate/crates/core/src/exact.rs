//! Exact integer matrices: rank, Gram determinants, minors and the
//! Cauchy–Binet identity. Nothing in here touches floating point.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Default cap on the number of minors enumerated by one call.
pub const DEFAULT_MINOR_BUDGET: u64 = 1_000_000;

/// Dense integer matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl ExactMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(ExactMatrix { rows, cols, data })
    }

    pub fn from_i64(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        Self::new(rows, cols, data.into_iter().map(BigInt::from).collect())
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::from_i64(r, c, rows.iter().flatten().copied().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ExactMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Entries as `i64` if all of them fit.
    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.data.iter().map(ToPrimitive::to_i64).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        ExactMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn mul(&self, other: &ExactMatrix) -> Result<ExactMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = ExactMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &ExactMatrix) -> Result<ExactMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ExactMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Submatrix keeping every row and the given columns, in order.
    pub fn select_cols(&self, cols: &[usize]) -> ExactMatrix {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            for &j in cols {
                data.push(self.get(i, j).clone());
            }
        }
        ExactMatrix {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> ExactMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        ExactMatrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    /// Sum of squared entries (the squared Hilbert–Schmidt norm).
    pub fn frobenius_sq(&self) -> BigInt {
        self.data.iter().map(|x| x * x).sum()
    }
}

impl fmt::Debug for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactMatrix{}x{}[", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(ToString::to_string).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for ExactMatrix {
    /// The shared text format: `rows cols` header, then one line per row.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(ToString::to_string).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Rank over the rationals.
pub fn rank(m: &ExactMatrix) -> usize {
    if let Some(small) = m.to_i64() {
        if let Some(r) = rank_i128(m.rows, m.cols, &small) {
            return r;
        }
    }
    rank_big(m.rows, m.cols, m.data.clone())
}

/// Rank of a small row-major `i64` matrix, with a big-integer fallback.
pub fn rank_of(rows: usize, cols: usize, data: &[i64]) -> usize {
    rank_i128(rows, cols, data)
        .unwrap_or_else(|| rank_big(rows, cols, data.iter().map(|&x| BigInt::from(x)).collect()))
}

// Fraction-free elimination: after step r every live entry is an
// (r+1)x(r+1) minor, so the division by the previous pivot is exact.
fn rank_i128(rows: usize, cols: usize, data: &[i64]) -> Option<usize> {
    let mut a: Vec<i128> = data.iter().map(|&x| x as i128).collect();
    let mut prev: i128 = 1;
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| a[i * cols + c] != 0) else {
            continue;
        };
        if p != r {
            for j in 0..cols {
                a.swap(p * cols + j, r * cols + j);
            }
        }
        let piv = a[r * cols + c];
        for i in r + 1..rows {
            let lead = a[i * cols + c];
            for j in c + 1..cols {
                let v = piv
                    .checked_mul(a[i * cols + j])?
                    .checked_sub(lead.checked_mul(a[r * cols + j])?)?;
                a[i * cols + j] = v / prev;
            }
            a[i * cols + c] = 0;
        }
        prev = piv;
        r += 1;
    }
    Some(r)
}

fn rank_big(rows: usize, cols: usize, mut a: Vec<BigInt>) -> usize {
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i * cols + c].is_zero()) else {
            continue;
        };
        if p != r {
            for j in 0..cols {
                a.swap(p * cols + j, r * cols + j);
            }
        }
        let piv = a[r * cols + c].clone();
        for i in r + 1..rows {
            let lead = a[i * cols + c].clone();
            for j in c + 1..cols {
                let v = &piv * &a[i * cols + j] - &lead * &a[r * cols + j];
                a[i * cols + j] = v / &prev;
            }
            a[i * cols + c] = BigInt::zero();
        }
        prev = piv;
        r += 1;
    }
    r
}

/// Determinant of a square matrix by fraction-free elimination.
pub fn det(m: &ExactMatrix) -> Result<BigInt> {
    if m.rows != m.cols {
        return Err(Error::DimensionMismatch {
            expected: m.rows,
            found: m.cols,
        });
    }
    if let Some(small) = m.to_i64() {
        if let Some(d) = det_i128(m.rows, &small) {
            return Ok(BigInt::from(d));
        }
    }
    Ok(det_big(m.rows, m.data.clone()))
}

fn det_i128(n: usize, data: &[i64]) -> Option<i128> {
    if n == 0 {
        return Some(1);
    }
    let mut a: Vec<i128> = data.iter().map(|&x| x as i128).collect();
    let mut prev: i128 = 1;
    let mut sign = 1;
    for k in 0..n {
        let p = (k..n).find(|&i| a[i * n + k] != 0)?;
        if p != k {
            for j in 0..n {
                a.swap(p * n + j, k * n + j);
            }
            sign = -sign;
        }
        let piv = a[k * n + k];
        for i in k + 1..n {
            for j in k + 1..n {
                let v = piv
                    .checked_mul(a[i * n + j])?
                    .checked_sub(a[i * n + k].checked_mul(a[k * n + j])?)?;
                a[i * n + j] = v / prev;
            }
        }
        prev = piv;
    }
    Some(sign * a[n * n - 1])
}

// `det_i128` returns None both on overflow and on a zero column; the big
// version settles either case.
fn det_big(n: usize, mut a: Vec<BigInt>) -> BigInt {
    if n == 0 {
        return BigInt::one();
    }
    let mut prev = BigInt::one();
    let mut negate = false;
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i * n + k].is_zero()) else {
            return BigInt::zero();
        };
        if p != k {
            for j in 0..n {
                a.swap(p * n + j, k * n + j);
            }
            negate = !negate;
        }
        let piv = a[k * n + k].clone();
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &piv * &a[i * n + j] - &a[i * n + k] * &a[k * n + j];
                a[i * n + j] = v / &prev;
            }
        }
        prev = piv;
    }
    let d = a[n * n - 1].clone();
    if negate {
        -d
    } else {
        d
    }
}

/// `det(M Mᵀ)`.
pub fn gram_det(m: &ExactMatrix) -> Result<BigInt> {
    if m.rows > m.cols {
        return Err(Error::invalid(format!(
            "gram_det needs rows <= cols, got {}x{}",
            m.rows, m.cols
        )));
    }
    det(&m.mul(&m.transpose())?)
}

/// Both sides of the Cauchy–Binet identity for `det(M Mᵀ)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CauchyBinet {
    pub lhs: BigInt,
    pub rhs: BigInt,
    pub equal: bool,
    pub minors: u64,
}

/// Lexicographic k-subsets of `0..n`.
pub fn combinations(n: usize, k: usize) -> Combinations {
    Combinations {
        n,
        k,
        cur: if k <= n { Some((0..k).collect()) } else { None },
    }
}

pub struct Combinations {
    n: usize,
    k: usize,
    cur: Option<Vec<usize>>,
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.cur.clone()?;
        let (n, k) = (self.n, self.k);
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            if next[i] < n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.cur = Some(next);
                break;
            }
        }
        Some(out)
    }
}

fn minor_count_checked(m: &ExactMatrix, budget: u64) -> Result<u64> {
    if m.rows > m.cols {
        return Err(Error::invalid(format!(
            "minor enumeration needs rows <= cols, got {}x{}",
            m.rows, m.cols
        )));
    }
    let count = crate::numeric::binomial(m.cols as u64, m.rows as u64);
    match count.to_u64() {
        Some(c) if c <= budget => Ok(c),
        _ => Err(Error::BudgetExceeded {
            what: "minor",
            limit: budget,
        }),
    }
}

fn maximal_minors(m: &ExactMatrix) -> Vec<BigInt> {
    let subsets: Vec<Vec<usize>> = combinations(m.cols, m.rows).collect();
    par::map_slice(&subsets, |cols| {
        det(&m.select_cols(cols)).expect("square by construction")
    })
}

pub fn cauchy_binet_check(m: &ExactMatrix, budget: u64) -> Result<CauchyBinet> {
    let minors = minor_count_checked(m, budget)?;
    let lhs = gram_det(m)?;
    let rhs: BigInt = maximal_minors(m).iter().map(|d| d * d).sum();
    Ok(CauchyBinet {
        equal: lhs == rhs,
        lhs,
        rhs,
        minors,
    })
}

/// Number of `rows x rows` submatrices with nonzero determinant.
pub fn count_nonzero_minors(m: &ExactMatrix, budget: u64) -> Result<u64> {
    minor_count_checked(m, budget)?;
    Ok(maximal_minors(m).iter().filter(|d| !d.is_zero()).count() as u64)
}

/// Rank via the largest nonvanishing minor; brute force, for cross-checks.
pub fn rank_by_minors(m: &ExactMatrix) -> usize {
    for k in (1..=m.rows.min(m.cols)).rev() {
        for rows in combinations(m.rows, k) {
            let sub = m.select_rows(&rows);
            for cols in combinations(m.cols, k) {
                if !det(&sub.select_cols(&cols)).unwrap().is_zero() {
                    return k;
                }
            }
        }
    }
    0
}

/// Reduced row echelon form over the rationals: the nonzero rows and the
/// pivot column of each.
pub fn rref(m: &ExactMatrix) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let (rows, cols) = (m.rows, m.cols);
    let mut a: Vec<Vec<BigRational>> = (0..rows)
        .map(|i| {
            m.row(i)
                .iter()
                .map(|x| BigRational::from_integer(x.clone()))
                .collect()
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(p, r);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let delta = &f * &a[r][j];
                    a[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    a.truncate(r);
    (a, pivots)
}

/// A `{+1, -1}` matrix with each row packed into 64-bit words.
///
/// A set bit encodes `-1`, so the dot product of two rows over `n` columns
/// is `n - 2 * popcount(u xor v)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    bits: Vec<u64>,
}

impl SignMatrix {
    pub fn ones(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64).max(1);
        SignMatrix {
            rows,
            cols,
            words,
            bits: vec![0; rows * words],
        }
    }

    /// Builds from rows given as bitmasks (bit j set means entry j is -1).
    pub fn from_row_masks(cols: usize, masks: &[u64]) -> Result<Self> {
        if cols > 64 {
            return Err(Error::invalid("row masks limited to 64 columns"));
        }
        let mut m = Self::ones(masks.len(), cols);
        let keep = if cols == 64 { u64::MAX } else { (1u64 << cols) - 1 };
        for (i, &mask) in masks.iter().enumerate() {
            if mask & !keep != 0 {
                return Err(Error::invalid("mask has bits beyond the column count"));
            }
            m.bits[i] = mask;
        }
        Ok(m)
    }

    pub fn from_entries(rows: usize, cols: usize, entries: &[i8]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        let mut m = Self::ones(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                match entries[i * cols + j] {
                    1 => {}
                    -1 => m.bits[i * m.words + j / 64] |= 1 << (j % 64),
                    v => return Err(Error::invalid(format!("sign entry must be +-1, got {v}"))),
                }
            }
        }
        Ok(m)
    }

    pub fn from_exact(m: &ExactMatrix) -> Result<Self> {
        let mut entries = Vec::with_capacity(m.rows * m.cols);
        for x in m.entries() {
            match x.to_i8() {
                Some(v @ (1 | -1)) => entries.push(v),
                _ => return Err(Error::invalid(format!("sign entry must be +-1, got {x}"))),
            }
        }
        Self::from_entries(m.rows, m.cols, &entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        if self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: i8) {
        let w = &mut self.bits[i * self.words + j / 64];
        if v < 0 {
            *w |= 1 << (j % 64);
        } else {
            *w &= !(1 << (j % 64));
        }
    }

    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// The row as a single mask; only valid when `cols <= 64`.
    pub fn row_mask(&self, i: usize) -> u64 {
        debug_assert!(self.cols <= 64);
        self.bits[i * self.words]
    }

    pub fn row_dot(&self, a: usize, b: usize) -> i64 {
        let disagree: u32 = self
            .row_words(a)
            .iter()
            .zip(self.row_words(b))
            .map(|(x, y)| (x ^ y).count_ones())
            .sum();
        self.cols as i64 - 2 * disagree as i64
    }

    pub fn to_exact(&self) -> ExactMatrix {
        let data = (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .map(|(i, j)| BigInt::from(self.get(i, j)))
            .collect();
        ExactMatrix::new(self.rows, self.cols, data).expect("shape")
    }

    pub fn to_i64(&self) -> Vec<i64> {
        (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j) as i64)
            .collect()
    }

    pub fn transpose(&self) -> SignMatrix {
        let mut t = SignMatrix::ones(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Renders with `+`/`-` tokens in the shared text format.
    pub fn to_sign_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let row: Vec<&str> = (0..self.cols)
                .map(|j| if self.get(i, j) > 0 { "+" } else { "-" })
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

impl fmt::Debug for SignMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignMatrix{}x{}[", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, " ")?;
            }
            for j in 0..self.cols {
                write!(f, "{}", if self.get(i, j) > 0 { '+' } else { '-' })?;
            }
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<serde_json::Value>>,
}

fn json_int(v: &serde_json::Value) -> Result<BigInt> {
    match v {
        serde_json::Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| Error::Parse(format!("non-integer entry {n}"))),
        serde_json::Value::String(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad integer '{s}'"))),
        other => Err(Error::Parse(format!("bad matrix entry {other}"))),
    }
}

/// Parses either the text format or the JSON form of a matrix.
pub fn parse_matrix(input: &str) -> Result<ExactMatrix> {
    let trimmed = input.trim_start();
    if trimmed.starts_with('{') {
        let raw: MatrixJson =
            serde_json::from_str(trimmed).map_err(|e| Error::Parse(e.to_string()))?;
        if raw.entries.len() != raw.rows || raw.entries.iter().any(|r| r.len() != raw.cols) {
            return Err(Error::Parse("entries do not match rows/cols".into()));
        }
        let data = raw
            .entries
            .iter()
            .flatten()
            .map(json_int)
            .collect::<Result<Vec<_>>>()?;
        return ExactMatrix::new(raw.rows, raw.cols, data);
    }
    let (rows, cols, tokens) = header_and_tokens(input)?;
    let data = tokens
        .iter()
        .map(|t| match *t {
            "+" => Ok(BigInt::one()),
            "-" => Ok(-BigInt::one()),
            t => t
                .parse::<BigInt>()
                .map_err(|_| Error::Parse(format!("bad integer '{t}'"))),
        })
        .collect::<Result<Vec<_>>>()?;
    if data.len() != rows * cols {
        return Err(Error::Parse(format!(
            "expected {} entries, found {}",
            rows * cols,
            data.len()
        )));
    }
    ExactMatrix::new(rows, cols, data)
}

/// Parses a sign matrix; accepts `+`/`-` (also run together, as in `+-+`)
/// or `1`/`-1` tokens, and the JSON form.
pub fn parse_sign_matrix(input: &str) -> Result<SignMatrix> {
    if input.trim_start().starts_with('{') {
        return SignMatrix::from_exact(&parse_matrix(input)?);
    }
    let (rows, cols, tokens) = header_and_tokens(input)?;
    let mut entries = Vec::with_capacity(rows * cols);
    for t in tokens {
        match t {
            "1" | "+1" => entries.push(1),
            "-1" => entries.push(-1),
            t if t.chars().all(|c| c == '+' || c == '-') => {
                entries.extend(t.chars().map(|c| if c == '+' { 1 } else { -1 }))
            }
            t => return Err(Error::Parse(format!("bad sign token '{t}'"))),
        }
    }
    if entries.len() != rows * cols {
        return Err(Error::Parse(format!(
            "expected {} entries, found {}",
            rows * cols,
            entries.len()
        )));
    }
    SignMatrix::from_entries(rows, cols, &entries)
}

fn header_and_tokens(input: &str) -> Result<(usize, usize, Vec<&str>)> {
    let mut lines = input.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix input".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header '{header}'"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse(format!("header must be 'rows cols', got '{header}'")));
    };
    if rows == 0 || cols == 0 {
        return Err(Error::Parse("empty matrix".into()));
    }
    Ok((rows, cols, lines.flat_map(str::split_whitespace).collect()))
}

/// JSON form `{"rows":r,"cols":c,"entries":[[...],...]}`.
pub fn matrix_to_json(m: &ExactMatrix) -> serde_json::Value {
    let entries: Vec<Vec<serde_json::Value>> = (0..m.rows)
        .map(|i| {
            m.row(i)
                .iter()
                .map(|x| match x.to_i64() {
                    Some(v) => serde_json::Value::from(v),
                    None => serde_json::Value::from(x.to_string()),
                })
                .collect()
        })
        .collect();
    serde_json::json!({"rows": m.rows, "cols": m.cols, "entries": entries})
}

/// Integer dot product.
pub fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
