//! Compressed-row sparse matrices with a fixed symbolic pattern.
//!
//! Assembly precomputes the pattern once per mesh (nodes couple within a
//! fixed stencil on a structured grid), then accumulates values with
//! binary search inside each row. Reassembling for a new nonlinear
//! iterate only rewrites the value array.

use crate::error::{Error, Result};
use crate::mesh::StructuredMesh;

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build a zero matrix from per-row column lists. Each list must be
    /// sorted and duplicate-free.
    pub fn from_adjacency(rows: &[Vec<usize>]) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for cols in rows {
            debug_assert!(cols.windows(2).all(|w| w[0] < w[1]), "row not sorted");
            col_idx.extend_from_slice(cols);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn row_values_mut(&mut self, i: usize) -> &mut [f64] {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        &mut self.values[span]
    }

    /// Column indices alongside mutable values of row `i`.
    pub fn row_mut(&mut self, i: usize) -> (&[usize], &mut [f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &mut self.values[span])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn zero_values(&mut self) {
        self.values.fill(0.0);
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let span = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        span.binary_search(&j).ok().map(|p| self.row_ptr[i] + p)
    }

    /// Accumulate into entry (i, j). The entry must exist in the pattern;
    /// a miss is a bug in the pattern construction, not a runtime
    /// condition, so it panics.
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        match self.position(i, j) {
            Some(p) => self.values[p] += v,
            None => panic!("entry ({i}, {j}) not in sparsity pattern"),
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        match self.position(i, j) {
            Some(p) => self.values[p] = v,
            None => panic!("entry ({i}, {j}) not in sparsity pattern"),
        }
    }

    /// Value at (i, j), zero when outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "dimension mismatch in mat-vec");
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            y[i] = acc;
        }
        y
    }

    /// Entrywise difference of two matrices sharing one pattern.
    pub fn sub_same_pattern(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.row_ptr != other.row_ptr || self.col_idx != other.col_idx {
            return Err(Error::InvalidArgument(
                "matrix difference requires identical patterns".into(),
            ));
        }
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v -= w;
        }
        Ok(out)
    }

    /// Lower and upper bandwidth (kl, ku) of the stored pattern.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }
}

/// Column lists coupling each node of a structured mesh to all nodes
/// within Chebyshev distance `layers` on the grid. `layers = 1` is the
/// 3x3 stencil of the element-assembled matrices; the statically
/// condensed matrix needs `layers = 2`.
pub fn stencil_pattern(mesh: &StructuredMesh, layers: usize) -> Vec<Vec<usize>> {
    let nx = mesh.nx as isize;
    let ny = mesh.ny as isize;
    let span = layers as isize;
    let mut rows = Vec::with_capacity(mesh.num_nodes());
    for j in 0..=ny {
        for i in 0..=nx {
            let mut cols = Vec::with_capacity((2 * layers + 1).pow(2));
            for dj in -span..=span {
                let jj = j + dj;
                if jj < 0 || jj > ny {
                    continue;
                }
                for di in -span..=span {
                    let ii = i + di;
                    if ii < 0 || ii > nx {
                        continue;
                    }
                    cols.push((jj * (nx + 1) + ii) as usize);
                }
            }
            rows.push(cols);
        }
    }
    rows
}
