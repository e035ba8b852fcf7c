//! Minimal dense matrix type for the network layers.
//!
//! All reductions run in a fixed order (ascending index) so that results
//! are bit-identical across runs and across the parallel/sequential
//! execution paths, which only ever split work across *rows* or *nodes*,
//! never across the inner accumulation.

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Mat {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Mat {
        assert_eq!(data.len(), rows * cols, "data length mismatch");
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `y = W x + b`; the inner product runs over ascending column index.
    pub fn matvec_add(&self, x: &[f64], bias: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        assert_eq!(bias.len(), self.rows, "bias dimension mismatch");
        let mut y = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = bias[r];
            for c in 0..self.cols {
                acc += row[c] * x[c];
            }
            y.push(acc);
        }
        y
    }

    /// `out = W x + b` without allocating; `out` is fully overwritten.
    pub fn matvec_into(&self, x: &[f64], bias: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        assert_eq!(bias.len(), self.rows, "bias dimension mismatch");
        assert_eq!(out.len(), self.rows, "output dimension mismatch");
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = bias[r];
            for c in 0..self.cols {
                acc += row[c] * x[c];
            }
            out[r] = acc;
        }
    }

    /// `out = W (x1 ∥ x2) + b` for a matrix whose columns split into an
    /// `x1` block followed by an `x2` block, without materializing the
    /// concatenation.
    pub fn matvec2_into(&self, x1: &[f64], x2: &[f64], bias: &[f64], out: &mut [f64]) {
        assert_eq!(x1.len() + x2.len(), self.cols, "matvec2 dimension mismatch");
        assert_eq!(bias.len(), self.rows, "bias dimension mismatch");
        assert_eq!(out.len(), self.rows, "output dimension mismatch");
        let split = x1.len();
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = bias[r];
            for c in 0..split {
                acc += row[c] * x1[c];
            }
            for c in 0..x2.len() {
                acc += row[split + c] * x2[c];
            }
            out[r] = acc;
        }
    }

    /// `out[c] += Σ_r W[r, col_start + c] · g[r]` — the transpose
    /// product restricted to a column block, accumulated in place.
    pub fn tr_matvec_acc(&self, g: &[f64], col_start: usize, out: &mut [f64]) {
        assert_eq!(g.len(), self.rows, "tr_matvec dimension mismatch");
        assert!(col_start + out.len() <= self.cols, "column block out of range");
        for r in 0..self.rows {
            let row = &self.row(r)[col_start..col_start + out.len()];
            let gr = g[r];
            for c in 0..out.len() {
                out[c] += gr * row[c];
            }
        }
    }

    /// `y = W^T g`; the sum over rows runs in ascending row index.
    pub fn tr_matvec(&self, g: &[f64]) -> Vec<f64> {
        assert_eq!(g.len(), self.rows, "tr_matvec dimension mismatch");
        let mut y = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = self.row(r);
            let gr = g[r];
            for c in 0..self.cols {
                y[c] += gr * row[c];
            }
        }
        y
    }

    /// Rank-one update `W += g x^T`, used to accumulate weight gradients.
    pub fn add_outer(&mut self, g: &[f64], x: &[f64]) {
        assert_eq!(g.len(), self.rows, "outer row mismatch");
        assert_eq!(x.len(), self.cols, "outer col mismatch");
        for r in 0..self.rows {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            let gr = g[r];
            for c in 0..self.cols {
                row[c] += gr * x[c];
            }
        }
    }
}

/// `a += b`, element-wise.
pub fn add_assign(a: &mut [f64], b: &[f64]) {
    assert_eq!(a.len(), b.len(), "add_assign length mismatch");
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}
