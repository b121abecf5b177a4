//! Compressed-row matrices over fixed-point scalars, plus an `f64` mirror.

use crate::error::{ensure_dim, invalid, Result};
use crate::fixed::FixedScalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<FixedScalar>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, row_ptr: vec![0; rows + 1], col_idx: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Matrix {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![FixedScalar::ONE; n],
        }
    }

    /// Builds from row-major dense data; zero entries are not stored.
    pub fn from_dense(rows: usize, cols: usize, data: &[FixedScalar]) -> Result<Self> {
        ensure_dim(rows * cols, data.len(), "dense matrix data")?;
        let mut m = Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let v = data[r * cols + c];
                if !v.is_zero() {
                    m.col_idx.push(c);
                    m.vals.push(v);
                }
            }
            m.row_ptr[r + 1] = m.vals.len();
        }
        Ok(m)
    }

    /// Builds from `(row, col, value)` triplets. Duplicate positions are rejected.
    pub fn from_triplets(rows: usize, cols: usize, mut trips: Vec<(usize, usize, FixedScalar)>) -> Result<Self> {
        trips.sort_by_key(|t| (t.0, t.1));
        let mut m = Matrix::zeros(rows, cols);
        let mut counts = vec![0usize; rows];
        for (i, &(r, c, v)) in trips.iter().enumerate() {
            if r >= rows || c >= cols {
                return invalid(format!("entry ({r},{c}) outside a {rows}x{cols} matrix"));
            }
            if i > 0 && trips[i - 1].0 == r && trips[i - 1].1 == c {
                return invalid(format!("duplicate matrix entry ({r},{c})"));
            }
            if !v.is_zero() {
                counts[r] += 1;
                m.col_idx.push(c);
                m.vals.push(v);
            }
        }
        for r in 0..rows {
            m.row_ptr[r + 1] = m.row_ptr[r] + counts[r];
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, FixedScalar)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> FixedScalar {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(i) => self.vals[span.start + i],
            Err(_) => FixedScalar::ZERO,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, FixedScalar)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn values(&self) -> &[FixedScalar] {
        &self.vals
    }

    pub fn to_dense(&self) -> Vec<FixedScalar> {
        let mut out = vec![FixedScalar::ZERO; self.rows * self.cols];
        for (r, c, v) in self.triplets() {
            out[r * self.cols + c] = v;
        }
        out
    }

    /// Largest bit complexity among stored entries.
    pub fn max_tau(&self) -> u32 {
        self.vals.iter().map(|v| v.tau()).max().unwrap_or(0)
    }

    /// Applies a fallible map to every stored entry.
    pub fn try_map(&self, f: impl Fn(FixedScalar) -> Result<FixedScalar>) -> Result<Self> {
        let mut out = self.clone();
        for v in out.vals.iter_mut() {
            *v = f(*v)?;
        }
        out.prune_zeros();
        Ok(out)
    }

    fn prune_zeros(&mut self) {
        if self.vals.iter().all(|v| !v.is_zero()) {
            return;
        }
        let trips: Vec<_> = self.triplets().filter(|t| !t.2.is_zero()).collect();
        *self = Matrix::from_triplets(self.rows, self.cols, trips).expect("valid triplets");
    }

    /// Re-indexes columns: old column `c` becomes `map[c]` in a matrix with `new_cols` columns.
    pub fn remap_cols(&self, new_cols: usize, map: &[usize]) -> Result<Self> {
        ensure_dim(self.cols, map.len(), "column map")?;
        let mut trips = Vec::with_capacity(self.nnz());
        for (r, c, v) in self.triplets() {
            if map[c] >= new_cols {
                return invalid("column map target out of range");
            }
            trips.push((r, map[c], v));
        }
        // Two old columns mapped to one new column must be summed.
        trips.sort_by_key(|t| (t.0, t.1));
        let mut merged: Vec<(usize, usize, FixedScalar)> = Vec::with_capacity(trips.len());
        for t in trips {
            match merged.last_mut() {
                Some(last) if last.0 == t.0 && last.1 == t.1 => last.2 = last.2.checked_add(&t.2)?,
                _ => merged.push(t),
            }
        }
        Matrix::from_triplets(self.rows, new_cols, merged)
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(parts: &[&Matrix]) -> Result<Self> {
        let cols = parts.first().map(|m| m.cols).unwrap_or(0);
        let mut trips = Vec::new();
        let mut off = 0;
        for m in parts {
            ensure_dim(cols, m.cols, "vstack columns")?;
            trips.extend(m.triplets().map(|(r, c, v)| (r + off, c, v)));
            off += m.rows;
        }
        Matrix::from_triplets(off, cols, trips)
    }

    /// Places matrices side by side (equal row counts).
    pub fn hstack(parts: &[&Matrix]) -> Result<Self> {
        let rows = parts.first().map(|m| m.rows).unwrap_or(0);
        let mut trips = Vec::new();
        let mut off = 0;
        for m in parts {
            ensure_dim(rows, m.rows, "hstack rows")?;
            trips.extend(m.triplets().map(|(r, c, v)| (r, c + off, v)));
            off += m.cols;
        }
        Matrix::from_triplets(rows, off, trips)
    }

    pub fn block_diag(parts: &[&Matrix]) -> Result<Self> {
        let mut trips = Vec::new();
        let (mut ro, mut co) = (0, 0);
        for m in parts {
            trips.extend(m.triplets().map(|(r, c, v)| (r + ro, c + co, v)));
            ro += m.rows;
            co += m.cols;
        }
        Matrix::from_triplets(ro, co, trips)
    }

    /// Appends zero rows at the bottom.
    pub fn pad_rows(&self, extra: usize) -> Self {
        let mut out = self.clone();
        out.rows += extra;
        let last = *out.row_ptr.last().unwrap();
        out.row_ptr.extend(std::iter::repeat_n(last, extra));
        out
    }

    /// Appends zero columns on the right.
    pub fn pad_cols(&self, extra: usize) -> Self {
        let mut out = self.clone();
        out.cols += extra;
        out
    }

    pub fn to_f64(&self) -> CsrF64 {
        CsrF64 {
            rows: self.rows,
            cols: self.cols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            vals: self.vals.iter().map(|v| v.to_f64()).collect(),
        }
    }
}

/// Floating-point copy of a [`Matrix`] for fast evaluation and norm estimates.
#[derive(Clone, Debug)]
pub struct CsrF64 {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrF64 {
    /// `y = A x`, summing each row in stored column order.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.rows) {
            let mut acc = 0.0;
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[i] * x[self.col_idx[i]];
            }
            *out = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    /// `y = A^T x`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.cols];
        for (r, &xr) in x.iter().enumerate().take(self.rows) {
            if xr == 0.0 {
                continue;
            }
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[i]] += self.vals[i] * xr;
            }
        }
        y
    }

    pub fn frobenius(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|r| self.vals[self.row_ptr[r]..self.row_ptr[r + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for (i, &c) in self.col_idx.iter().enumerate() {
            sums[c] += self.vals[i].abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::dy;

    fn ints(v: &[i128]) -> Vec<FixedScalar> {
        v.iter().map(|&x| dy(x, 0)).collect()
    }

    #[test]
    fn dense_round_trip_skips_zeros() {
        let d = ints(&[1, 0, -2, 0, 0, 3]);
        let m = Matrix::from_dense(2, 3, &d).unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.to_dense(), d);
        assert_eq!(m.get(1, 2), dy(3, 0));
        assert_eq!(m.get(1, 0), FixedScalar::ZERO);
    }

    #[test]
    fn stacking_shapes() {
        let a = Matrix::identity(2);
        let b = Matrix::from_dense(1, 2, &ints(&[5, 6])).unwrap();
        let v = Matrix::vstack(&[&a, &b]).unwrap();
        assert_eq!((v.rows(), v.cols()), (3, 2));
        assert_eq!(v.get(2, 1), dy(6, 0));
        let h = Matrix::hstack(&[&a, &a]).unwrap();
        assert_eq!(h.get(1, 3), FixedScalar::ONE);
        let bd = Matrix::block_diag(&[&a, &b]).unwrap();
        assert_eq!((bd.rows(), bd.cols()), (3, 4));
        assert_eq!(bd.get(2, 3), dy(6, 0));
    }

    #[test]
    fn remap_merges_columns() {
        let m = Matrix::from_dense(1, 2, &ints(&[2, 3])).unwrap();
        let r = m.remap_cols(4, &[3, 3]).unwrap();
        assert_eq!(r.get(0, 3), dy(5, 0));
        assert_eq!(r.nnz(), 1);
    }

    #[test]
    fn duplicate_triplets_rejected() {
        let t = vec![(0, 0, dy(1, 0)), (0, 0, dy(1, 0))];
        assert!(Matrix::from_triplets(1, 1, t).is_err());
    }

    #[test]
    fn float_products() {
        let m = Matrix::from_dense(2, 2, &ints(&[1, 2, 3, 4])).unwrap().to_f64();
        assert_eq!(m.matvec(&[1.0, 1.0]), vec![3.0, 7.0]);
        assert_eq!(m.matvec_t(&[1.0, 1.0]), vec![4.0, 6.0]);
        assert_eq!(m.norm_inf(), 7.0);
        assert_eq!(m.norm_one(), 6.0);
    }
}
