//! Compressed sparse row matrices.
//!
//! Used both for the signed integer incidence matrices of the cell complexes
//! and for the real-valued system matrices of the state-space model. Entries
//! are kept sorted row-major with explicit zeros removed, so iteration order
//! (and therefore every exported file) is reproducible.

use std::fmt::Display;
use std::io::{self, BufRead, Write};
use std::ops::{Add, Mul, Neg};

use num_traits::Zero;

use crate::error::{Error, Result};

pub trait Scalar:
    Copy + Zero + PartialEq + Add<Output = Self> + Mul<Output = Self> + Neg<Output = Self> + Display
{
    /// Text representation used by the triplet export.
    fn fmt_triplet(&self) -> String;
}

impl Scalar for i32 {
    fn fmt_triplet(&self) -> String {
        self.to_string()
    }
}

impl Scalar for i64 {
    fn fmt_triplet(&self) -> String {
        self.to_string()
    }
}

impl Scalar for f64 {
    fn fmt_triplet(&self) -> String {
        format!("{:.16e}", self)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self
    where
        T: num_traits::One,
    {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_triplets(n, n, diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed and entries that end up zero are dropped.
    ///
    /// Panics if a triplet lies outside the given shape.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut entries: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            assert!(
                r < nrows && c < ncols,
                "triplet ({r}, {c}) outside {nrows}x{ncols}"
            );
        }
        entries.sort_by_key(|a| (a.0, a.1));

        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if let (Some(&lr), Some(&lc)) = (rows.last(), indices.last()) {
                if lr == r && lc == c {
                    let last = values.last_mut().unwrap();
                    *last = *last + v;
                    continue;
                }
            }
            rows.push(r);
            indices.push(c);
            values.push(v);
        }
        let mut kept_idx = Vec::with_capacity(indices.len());
        let mut kept_val = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(indices).zip(values) {
            if v != T::zero() {
                indptr[r + 1] += 1;
                kept_idx.push(c);
                kept_val.push(v);
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices: kept_idx,
            values: kept_val,
        }
    }

    /// Places each block with its top-left corner at the given offset.
    pub fn from_blocks(nrows: usize, ncols: usize, blocks: &[(usize, usize, &Self)]) -> Self {
        Self::from_triplets(
            nrows,
            ncols,
            blocks
                .iter()
                .flat_map(|&(r0, c0, m)| m.iter().map(move |(r, c, v)| (r0 + r, c0 + c, v))),
        )
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        let range = self.indptr[row]..self.indptr[row + 1];
        match self.indices[range.clone()].binary_search(&col) {
            Ok(k) => self.values[range.start + k],
            Err(_) => T::zero(),
        }
    }

    /// Entries of one row as `(col, value)` pairs in column order.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.indptr[row]..self.indptr[row + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// All stored entries, row-major.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.iter().map(|(r, c, v)| (c, r, v)))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> SparseMatrix<U> {
        SparseMatrix::from_triplets(self.nrows, self.ncols, self.iter().map(|(r, c, v)| (r, c, f(v))))
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }

    pub fn scale_rows(&self, factors: &[T]) -> Self {
        assert_eq!(factors.len(), self.nrows);
        Self::from_triplets(
            self.nrows,
            self.ncols,
            self.iter().map(|(r, c, v)| (r, c, factors[r] * v)),
        )
    }

    pub fn scale_cols(&self, factors: &[T]) -> Self {
        assert_eq!(factors.len(), self.ncols);
        Self::from_triplets(
            self.nrows,
            self.ncols,
            self.iter().map(|(r, c, v)| (r, c, v * factors[c])),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "cannot add {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Self::from_triplets(
            self.nrows,
            self.ncols,
            self.iter().chain(other.iter()),
        ))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::Shape(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut triplets = Vec::new();
        let mut acc: Vec<Option<T>> = vec![None; other.ncols];
        let mut touched = Vec::new();
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    match &mut acc[c] {
                        Some(v) => *v = *v + a * b,
                        slot @ None => {
                            *slot = Some(a * b);
                            touched.push(c);
                        }
                    }
                }
            }
            for c in touched.drain(..) {
                if let Some(v) = acc[c].take() {
                    triplets.push((r, c, v));
                }
            }
        }
        Ok(Self::from_triplets(self.nrows, other.ncols, triplets))
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| self.row(r).fold(T::zero(), |acc, (c, v)| acc + v * x[c]))
            .collect()
    }

    /// `y += alpha * self * x` without allocating.
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).fold(T::zero(), |acc, (c, v)| acc + v * x[c]);
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Keeps only the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_pos = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_pos[c] = k;
        }
        let mut triplets = Vec::new();
        for (new_r, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if col_pos[c] != usize::MAX {
                    triplets.push((new_r, col_pos[c], v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), triplets)
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut dense = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (r, c, v) in self.iter() {
            dense[r][c] = v;
        }
        dense
    }

    /// Writes the matrix as coordinate triplets: a `# rows cols nnz` header
    /// then one `row col value` line per entry, 0-based, row-major.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# {} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (r, c, v) in self.iter() {
            writeln!(out, "{} {} {}", r, c, v.fmt_triplet())?;
        }
        Ok(())
    }

    pub fn to_triplet_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_triplets(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("triplet text is ASCII")
    }
}

impl<T: Scalar + std::str::FromStr> SparseMatrix<T> {
    pub fn read_triplets<R: BufRead>(input: R) -> Result<Self> {
        let mut shape = None;
        let mut triplets = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Parse(format!("triplet line {}: '{}'", lineno + 1, line));
            if let Some(header) = line.strip_prefix('#') {
                let dims: Vec<usize> = header
                    .split_whitespace()
                    .map(|s| s.parse().map_err(|_| bad()))
                    .collect::<Result<_>>()?;
                if dims.len() < 2 {
                    return Err(bad());
                }
                shape = Some((dims[0], dims[1]));
                continue;
            }
            let mut parts = line.split_whitespace();
            let r: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let c: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let v: T = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            triplets.push((r, c, v));
        }
        let (nrows, ncols) =
            shape.ok_or_else(|| Error::Parse("triplet file without '# rows cols' header".into()))?;
        if triplets.iter().any(|&(r, c, _)| r >= nrows || c >= ncols) {
            return Err(Error::Parse("triplet outside declared shape".into()));
        }
        Ok(Self::from_triplets(nrows, ncols, triplets))
    }
}

impl SparseMatrix<i32> {
    pub fn to_f64(&self) -> SparseMatrix<f64> {
        self.map(f64::from)
    }
}

impl SparseMatrix<f64> {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }
}
