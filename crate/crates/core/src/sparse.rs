//! Compressed sparse row matrices shared by the model fitting code.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(n_cols: usize) -> Self {
        Self { n_cols, indptr: vec![0], indices: Vec::new(), values: Vec::new() }
    }

    /// Appends a row. Entries may come in any order; explicit zeros are
    /// dropped and duplicate columns summed.
    pub fn push_row<I>(&mut self, entries: I)
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let start = self.indices.len();
        let mut row: Vec<(u32, f64)> = entries.into_iter().collect();
        row.sort_by_key(|&(c, _)| c);
        for (c, v) in row {
            assert!((c as usize) < self.n_cols, "column {c} out of range {}", self.n_cols);
            if self.indices.len() > start && *self.indices.last().unwrap() == c {
                *self.values.last_mut().unwrap() += v;
            } else if v != 0.0 {
                self.indices.push(c);
                self.values.push(v);
            }
        }
        self.indptr.push(self.indices.len());
    }

    pub fn from_rows<R, I>(n_cols: usize, rows: R) -> Self
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut m = Self::new(n_cols);
        for r in rows {
            m.push_row(r);
        }
        m
    }

    pub fn from_dense(x: &DMatrix<f64>) -> Self {
        Self::from_rows(
            x.ncols(),
            (0..x.nrows()).map(|i| (0..x.ncols()).map(move |j| (j as u32, x[(i, j)])).collect::<Vec<_>>()),
        )
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n_rows(), self.n_cols);
        for i in 0..self.n_rows() {
            let (idx, val) = self.row(i);
            for (&c, &v) in idx.iter().zip(val) {
                out[(i, c as usize)] = v;
            }
        }
        out
    }

    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        let (idx, val) = self.row(i);
        idx.iter().zip(val).map(|(&c, &v)| v * w[c as usize]).sum()
    }

    /// `X w`.
    pub fn mul_vec(&self, w: &[f64]) -> Vec<f64> {
        debug_assert_eq!(w.len(), self.n_cols);
        (0..self.n_rows()).map(|i| self.row_dot(i, w)).collect()
    }

    /// `X^T r`.
    pub fn tr_mul_vec(&self, r: &[f64]) -> Vec<f64> {
        debug_assert_eq!(r.len(), self.n_rows());
        let mut out = vec![0.0; self.n_cols];
        for (i, &ri) in r.iter().enumerate() {
            if ri == 0.0 {
                continue;
            }
            let (idx, val) = self.row(i);
            for (&c, &v) in idx.iter().zip(val) {
                out[c as usize] += v * ri;
            }
        }
        out
    }

    /// Column means and sample variances (denominator `n - 1`, or 1 when
    /// there is a single row).
    pub fn column_moments(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_rows();
        let mut sum = vec![0.0; self.n_cols];
        for (&c, &v) in self.indices.iter().zip(&self.values) {
            sum[c as usize] += v;
        }
        let mean: Vec<f64> = sum.iter().map(|s| if n == 0 { 0.0 } else { s / n as f64 }).collect();
        // two-pass: explicit entries contribute (v - mean)^2, implicit zeros mean^2
        let mut ss = vec![0.0; self.n_cols];
        let mut count = vec![0usize; self.n_cols];
        for (&c, &v) in self.indices.iter().zip(&self.values) {
            let d = v - mean[c as usize];
            ss[c as usize] += d * d;
            count[c as usize] += 1;
        }
        let denom = n.saturating_sub(1).max(1) as f64;
        let var = (0..self.n_cols)
            .map(|j| (ss[j] + (n - count[j]) as f64 * mean[j] * mean[j]) / denom)
            .collect();
        (mean, var)
    }

    pub fn select_rows(&self, rows: &[usize]) -> CsrMatrix {
        let mut out = CsrMatrix::new(self.n_cols);
        for &i in rows {
            let (idx, val) = self.row(i);
            out.indices.extend_from_slice(idx);
            out.values.extend_from_slice(val);
            out.indptr.push(out.indices.len());
        }
        out
    }

    /// Keeps the given columns, renumbered in the order listed.
    pub fn select_columns(&self, cols: &[usize]) -> CsrMatrix {
        let mut map = vec![u32::MAX; self.n_cols];
        for (new, &old) in cols.iter().enumerate() {
            map[old] = new as u32;
        }
        let mut out = CsrMatrix::new(cols.len());
        for i in 0..self.n_rows() {
            let (idx, val) = self.row(i);
            out.push_row(
                idx.iter()
                    .zip(val)
                    .filter(|(&c, _)| map[c as usize] != u32::MAX)
                    .map(|(&c, &v)| (map[c as usize], v)),
            );
        }
        out
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn vstack(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n_cols, other.n_cols, "column counts differ");
        let mut out = self.clone();
        let base = out.indices.len();
        out.indices.extend_from_slice(&other.indices);
        out.values.extend_from_slice(&other.values);
        out.indptr.extend(other.indptr[1..].iter().map(|p| p + base));
        out
    }

    /// Columns of `self` followed by columns of `other`.
    pub fn hstack(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n_rows(), other.n_rows(), "row counts differ");
        let shift = self.n_cols as u32;
        let mut out = CsrMatrix::new(self.n_cols + other.n_cols);
        for i in 0..self.n_rows() {
            let (ai, av) = self.row(i);
            let (bi, bv) = other.row(i);
            out.indices.extend_from_slice(ai);
            out.values.extend_from_slice(av);
            out.indices.extend(bi.iter().map(|&c| c + shift));
            out.values.extend_from_slice(bv);
            out.indptr.push(out.indices.len());
        }
        out
    }
}
