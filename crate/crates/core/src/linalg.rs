//! Sparse direct solves and small dense helpers.

use crate::error::{Error, Result};
use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use std::sync::OnceLock;

/// Square sparse matrix accumulated from (row, col, value) triplets; duplicates add.
#[derive(Debug, Clone, Default)]
pub struct TripletMatrix {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl TripletMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    /// Adds an entry; zeros are kept so the sparsity pattern depends only on the caller's loops.
    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.entries.push((r, c, v));
    }

    /// Compressed row form with duplicates summed, entries sorted by column.
    pub fn to_rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n];
        for &(r, c, v) in &self.entries {
            rows[r].push((c, v));
        }
        for row in rows.iter_mut() {
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            *row = merged;
        }
        rows
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// max |A_ij − A_ji| relative to max |A_ij|.
    pub fn asymmetry(&self) -> f64 {
        let rows = self.to_rows();
        let mut scale: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for (r, row) in rows.iter().enumerate() {
            for &(c, v) in row {
                scale = scale.max(v.abs());
                let t = rows[c]
                    .binary_search_by_key(&r, |e| e.0)
                    .map(|k| rows[c][k].1)
                    .unwrap_or(0.0);
                worst = worst.max((v - t).abs());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for &(r, c, v) in &self.entries {
            d[r][c] += v;
        }
        d
    }
}

/// Column pointers and row indices of a sparsity pattern.
type Pattern = (Vec<usize>, Vec<usize>);

/// Symbolic LU analysis kept for the first sparsity pattern seen.
#[derive(Default)]
pub struct PatternCache(OnceLock<(Pattern, SymbolicLu<usize>)>);

/// An LU factorization able to solve with several right-hand sides.
pub struct Factorization {
    lu: Lu<usize, f64>,
    matrix: TripletMatrix,
}

fn sequential() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

impl Factorization {
    pub fn new(matrix: TripletMatrix) -> Result<Self> {
        Self::with_pattern_cache(matrix, &PatternCache::default())
    }

    /// Factors reusing the symbolic analysis stored in `cache` when the sparsity pattern
    /// matches the one it was built from.
    pub fn with_pattern_cache(matrix: TripletMatrix, cache: &PatternCache) -> Result<Self> {
        sequential();
        let trip: Vec<Triplet<usize, usize, f64>> = matrix
            .entries
            .iter()
            .map(|&(r, c, v)| Triplet::new(r, c, v))
            .collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(matrix.n, matrix.n, &trip)
            .map_err(|e| Error::InfSup(format!("matrix construction failed: {e:?}")))?;
        let singular =
            |e: &dyn std::fmt::Debug| Error::InfSup(format!("singular factorization: {e:?}"));
        let key = (a.col_ptr().to_vec(), a.row_idx().to_vec());
        let symbolic = match cache.0.get() {
            Some((k, s)) if *k == key => s.clone(),
            _ => {
                let s = SymbolicLu::try_new(a.symbolic()).map_err(|e| singular(&e))?;
                let _ = cache.0.set((key, s.clone()));
                s
            }
        };
        let lu = Lu::try_new_with_symbolic(symbolic, a.as_ref()).map_err(|e| singular(&e))?;
        Ok(Self { lu, matrix })
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..n).map(|i| x[(i, 0)]).collect()
    }

    /// Solves A x = b with one step of iterative refinement; errors if the relative
    /// residual stays above `1e-10`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let bnorm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if bnorm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let mut x = self.raw_solve(b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InfSup(
                "non-finite solution from a singular factorization".into(),
            ));
        }
        let mut rel = self.relative_residual(&x, b, bnorm);
        if rel > 1e-13 && rel.is_finite() {
            let ax = self.matrix.mul(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let dx = self.raw_solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            rel = self.relative_residual(&x, b, bnorm);
        }
        if !(rel <= 1e-10) {
            return Err(Error::InfSup(format!(
                "relative residual {rel:.3e} after solve"
            )));
        }
        Ok(x)
    }

    fn relative_residual(&self, x: &[f64], b: &[f64], bnorm: f64) -> f64 {
        let ax = self.matrix.mul(x);
        let xs = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = self
            .matrix
            .entries
            .iter()
            .fold(0.0f64, |m, e| m.max(e.2.abs()));
        let r = ax
            .iter()
            .zip(b)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        r / (bnorm + scale * xs)
    }
}

/// Dense Gaussian elimination with partial pivoting; returns None when singular.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}
