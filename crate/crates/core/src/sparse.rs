//! Minimal CSR matrix: just the products graph propagation needs.

use alloc::vec::Vec;

use ndarray::{Array2, ArrayView2};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Triplets must be grouped by ascending row; the order of entries within
    /// a row is kept and fixes the summation order of every product.
    pub fn from_row_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        let mut current = 0;
        for (r, c, v) in triplets {
            assert!(r >= current && r < rows, "triplets must be grouped by row");
            assert!(c < cols, "column {c} out of range");
            while current < r {
                indptr.push(indices.len());
                current += 1;
            }
            indices.push(c);
            data.push(v);
        }
        while indptr.len() <= rows {
            indptr.push(indices.len());
        }
        CsrMatrix {
            rows,
            cols,
            indptr,
            indices,
            data,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[span.clone()], &self.data[span])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        idx.iter()
            .zip(val)
            .filter(|(&c, _)| c == j)
            .map(|(_, &v)| v)
            .sum()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows, self.cols));
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                out[[i, j]] += v;
            }
        }
        out
    }

    /// `self * x`.
    pub fn matmul(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(self.cols, x.nrows(), "spmm shape mismatch");
        let d = x.ncols();
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        let mut out = Array2::zeros((self.rows, d));
        let os = out.as_slice_mut().expect("fresh array");
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            let orow = &mut os[i * d..(i + 1) * d];
            for (&j, &a) in idx.iter().zip(val) {
                let xrow = &xs[j * d..(j + 1) * d];
                for (o, &v) in orow.iter_mut().zip(xrow) {
                    *o += a * v;
                }
            }
        }
        out
    }

    /// `self^T * x`.
    pub fn transpose_matmul(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(self.rows, x.nrows(), "spmm shape mismatch");
        let d = x.ncols();
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        let mut out = Array2::zeros((self.cols, d));
        let os = out.as_slice_mut().expect("fresh array");
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            let xrow = &xs[i * d..(i + 1) * d];
            for (&j, &a) in idx.iter().zip(val) {
                let orow = &mut os[j * d..(j + 1) * d];
                for (o, &v) in orow.iter_mut().zip(xrow) {
                    *o += a * v;
                }
            }
        }
        out
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use ndarray::array;

    #[test]
    fn products_match_dense() {
        let m = CsrMatrix::from_row_triplets(3, 2, [(0, 1, 2.0), (2, 0, -1.0), (2, 1, 0.5)]);
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        let dense = m.to_dense();
        assert_eq!(m.matmul(&x.view()), dense.dot(&x));
        let y = array![[1.0], [2.0], [3.0]];
        assert_eq!(m.transpose_matmul(&y.view()), dense.t().dot(&y));
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.row(1).0.len(), 0);
    }
}
