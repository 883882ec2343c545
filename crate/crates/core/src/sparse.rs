//! Compressed sparse row matrices with the handful of kernels the
//! hypergraph operators need.

use ndarray::{Array2, ArrayView2};

use crate::error::{HgmnError, Result};
use crate::parallel;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(HgmnError::shape(
                    "csr",
                    format!("entry ({r}, {c}) outside {nrows}x{ncols}"),
                ));
            }
            rows[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (idx, vals) = self.row(r);
        idx.binary_search(&c).map_or(0.0, |k| vals[k])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            let (idx, vals) = self.row(r);
            for (&c, &v) in idx.iter().zip(vals) {
                indices[next[c]] = r;
                values[next[c]] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            values,
        }
    }

    /// Scales row `r` by `s[r]`.
    pub fn scale_rows(&mut self, s: &[f64]) {
        for (r, &f) in s.iter().enumerate().take(self.nrows) {
            for v in &mut self.values[self.indptr[r]..self.indptr[r + 1]] {
                *v *= f;
            }
        }
    }

    /// Scales column `c` by `s[c]`.
    pub fn scale_cols(&mut self, s: &[f64]) {
        for (v, &c) in self.values.iter_mut().zip(&self.indices) {
            *v *= s[c];
        }
    }

    /// Sparse-sparse product (row-wise Gustavson).
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.ncols != other.nrows {
            return Err(HgmnError::shape(
                "csr matmul",
                format!("{}x{} times {}x{}", self.nrows, self.ncols, other.nrows, other.ncols),
            ));
        }
        let rows = parallel::map_range(self.nrows, |r| {
            let mut acc: std::collections::BTreeMap<usize, f64> = Default::default();
            let (idx, vals) = self.row(r);
            for (&k, &a) in idx.iter().zip(vals) {
                let (idx2, vals2) = other.row(k);
                for (&c, &b) in idx2.iter().zip(vals2) {
                    *acc.entry(c).or_insert(0.0) += a * b;
                }
            }
            acc
        });
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            for (c, v) in row {
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Dense product `self · x`.
    pub fn spmm(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.ncols {
            return Err(HgmnError::shape(
                "spmm",
                format!("{}x{} times {}x{}", self.nrows, self.ncols, x.nrows(), x.ncols()),
            ));
        }
        let width = x.ncols();
        let mut out = vec![0.0; self.nrows * width];
        parallel::for_each_row_mut(&mut out, width, |r, dst| {
            let (idx, vals) = self.row(r);
            for (&c, &a) in idx.iter().zip(vals) {
                for (d, &s) in dst.iter_mut().zip(x.row(c)) {
                    *d += a * s;
                }
            }
        });
        Ok(Array2::from_shape_vec((self.nrows, width), out).expect("shape"))
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut d = Array2::zeros((self.nrows, self.ncols));
        for r in 0..self.nrows {
            let (idx, vals) = self.row(r);
            for (&c, &v) in idx.iter().zip(vals) {
                d[[r, c]] = v;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample() -> CsrMatrix {
        CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (1, 1, 3.0), (0, 2, 0.5)]).unwrap()
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = sample();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.to_dense(), array![[2.0, 0.0, 1.5], [0.0, 3.0, 0.0]]);
    }

    #[test]
    fn transpose_and_products_match_dense() {
        let m = sample();
        let t = m.transpose();
        assert_eq!(t.to_dense(), m.to_dense().t());
        let p = m.matmul(&t).unwrap();
        assert_eq!(p.to_dense(), m.to_dense().dot(&m.to_dense().t()));
        let x = array![[1.0, -1.0], [0.5, 2.0], [3.0, 0.0]];
        assert_eq!(m.spmm(x.view()).unwrap(), m.to_dense().dot(&x));
    }

    #[test]
    fn scaling() {
        let mut m = sample();
        m.scale_rows(&[2.0, 1.0]);
        m.scale_cols(&[1.0, 10.0, 1.0]);
        assert_eq!(m.to_dense(), array![[4.0, 0.0, 3.0], [0.0, 30.0, 0.0]]);
    }

    #[test]
    fn shape_errors() {
        assert!(CsrMatrix::from_triplets(1, 1, &[(1, 0, 1.0)]).is_err());
        assert!(sample().spmm(Array2::zeros((2, 2)).view()).is_err());
        assert!(sample().matmul(&sample()).is_err());
    }
}
