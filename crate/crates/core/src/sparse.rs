//! Symmetric sparse matrices in compressed row storage.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Symmetric matrix stored as full CSR (both triangles), columns sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetricMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl SparseSymmetricMatrix {
    /// Matrix with the sparsity pattern of `g` plus a full diagonal:
    /// `diag[i]` on the diagonal, `off(w_ij)` at every edge.
    pub fn from_graph(g: &WeightedGraph, diag: &[f64], off: impl Fn(f64) -> f64) -> Self {
        let n = g.n();
        assert_eq!(diag.len(), n);
        let (rp, cols, vals) = g.csr();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::with_capacity(cols.len() + n);
        let mut val = Vec::with_capacity(cols.len() + n);
        row_ptr.push(0);
        for i in 0..n {
            let mut placed = false;
            for s in rp[i]..rp[i + 1] {
                if !placed && cols[s] > i {
                    col.push(i);
                    val.push(diag[i]);
                    placed = true;
                }
                col.push(cols[s]);
                val.push(off(vals[s]));
            }
            if !placed {
                col.push(i);
                val.push(diag[i]);
            }
            row_ptr.push(col.len());
        }
        Self { n, row_ptr, col, val }
    }

    /// Builds from upper-or-lower triplets; each off-diagonal pair is
    /// mirrored. Duplicate positions are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!("entry ({i}, {j}) out of range for n = {n}")));
            }
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        let mut row_ptr = vec![0];
        let mut col = Vec::new();
        let mut val = Vec::new();
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (j, v) in r {
                if col.len() > *row_ptr.last().unwrap() && *col.last().unwrap() == j {
                    *val.last_mut().unwrap() += v;
                } else {
                    col.push(j);
                    val.push(v);
                }
            }
            row_ptr.push(col.len());
        }
        Ok(Self { n, row_ptr, col, val })
    }

    pub fn identity(n: usize) -> Self {
        Self { n, row_ptr: (0..=n).collect(), col: (0..n).collect(), val: vec![1.0; n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries, counting both triangles.
    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col[r.clone()].binary_search(&j) {
            Ok(k) => self.val[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[s] * x[self.col[s]];
            }
            y[i] = acc;
        }
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[i] * self.val[s] * x[self.col[s]];
            }
        }
        acc
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        for v in &mut m.val {
            *v *= s;
        }
        m
    }

    /// Lower and upper Gershgorin bounds on the spectrum.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let mut d = 0.0;
            let mut r = 0.0;
            for (j, v) in self.row(i) {
                if j == i {
                    d = v;
                } else {
                    r += v.abs();
                }
            }
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        (lo, hi)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Largest entrywise difference; patterns may differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        let mut d: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d = d.max((v - other.get(i, j)).abs());
            }
            for (j, v) in other.row(i) {
                d = d.max((v - self.get(i, j)).abs());
            }
        }
        d
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }

    /// Coordinate dump, one `i j value` per line, upper triangle.
    pub fn write_coordinates(&self, mut out: impl Write) -> Result<()> {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j >= i {
                    writeln!(out, "{i} {j} {v}")?;
                }
            }
        }
        Ok(())
    }
}
