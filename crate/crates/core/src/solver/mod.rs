//! Sparse Gaussian elimination with a reusable solve program.
//!
//! [`factor`] eliminates a [`SparseMatrix`] once, with partial pivoting,
//! and records every row operation. [`solve_with_plan`] replays the record
//! on a right-hand side and back-substitutes, so a matrix that does not
//! change is only eliminated once however many right-hand sides follow.

mod dense;
mod plan;

pub use dense::dense_oracle_solve;
pub use plan::{factor, factor_checked, solve_with_plan, Elimination, SolvePlan, SINGULARITY_THRESHOLD};

use crate::error::SolveError;

/// Rows of `(column, value)` pairs with strictly increasing columns and no
/// stored zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

/// Sorts a row by column, sums repeated columns and drops zeros.
pub(crate) fn normalize_row(mut row: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    row.sort_by_key(|&(c, _)| c);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (c, v) in row {
        match out.last_mut() {
            Some((last, acc)) if *last == c => *acc += v,
            _ => out.push((c, v)),
        }
    }
    out.retain(|&(_, v)| v != 0.0);
    out
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { cols, rows: vec![Vec::new(); rows] }
    }

    /// Builds a matrix from unsorted entry lists; repeated columns in a row
    /// are summed.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let rows = rows
            .into_iter()
            .map(|row| {
                debug_assert!(row.iter().all(|&(c, _)| c < cols));
                normalize_row(row)
            })
            .collect();
        Self { cols, rows }
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let cols = dense.first().map_or(0, Vec::len);
        let rows = dense
            .iter()
            .map(|row| row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(c, v)| (c, *v)).collect())
            .collect();
        Self { cols, rows }
    }

    pub fn identity(n: usize) -> Self {
        Self { cols: n, rows: (0..n).map(|i| vec![(i, 1.0)]).collect() }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0.0; self.cols];
                for &(c, v) in row {
                    dense[c] = v;
                }
                dense
            })
            .collect()
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.rows[row].binary_search_by_key(&col, |&(c, _)| c).map_or(0.0, |i| self.rows[row][i].1)
    }

    /// Sets one entry; setting zero removes it.
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let entries = &mut self.rows[row];
        match entries.binary_search_by_key(&col, |&(c, _)| c) {
            Ok(i) if value == 0.0 => {
                entries.remove(i);
            }
            Ok(i) => entries[i].1 = value,
            Err(_) if value == 0.0 => {}
            Err(i) => entries.insert(i, (col, value)),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, SolveError> {
        if x.len() != self.cols {
            return Err(SolveError::DimensionMismatch { expected: self.cols, got: x.len() });
        }
        Ok(self.rows.iter().map(|row| row.iter().map(|&(c, v)| v * x[c]).sum()).collect())
    }

    /// Largest `|A x - b|` entry.
    pub fn residual(&self, x: &[f64], b: &[f64]) -> Result<f64, SolveError> {
        let ax = self.mul_vec(x)?;
        if b.len() != ax.len() {
            return Err(SolveError::DimensionMismatch { expected: ax.len(), got: b.len() });
        }
        Ok(ax.iter().zip(b).map(|(l, r)| (l - r).abs()).fold(0.0, f64::max))
    }
}

/// For every stored entry, the number of zero columns before the next
/// stored entry of its row (or before the end of the row).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroGapIndex {
    gaps: Vec<Vec<usize>>,
}

pub(crate) fn row_gaps(row: &[(usize, f64)], cols: usize) -> Vec<usize> {
    row.iter()
        .enumerate()
        .map(|(i, &(c, _))| row.get(i + 1).map_or(cols, |&(next, _)| next) - c - 1)
        .collect()
}

impl ZeroGapIndex {
    pub fn build(matrix: &SparseMatrix) -> Self {
        Self { gaps: matrix.rows.iter().map(|r| row_gaps(r, matrix.cols)).collect() }
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.gaps[i]
    }

    pub(crate) fn update_row(&mut self, i: usize, row: &[(usize, f64)], cols: usize) {
        self.gaps[i] = row_gaps(row, cols);
    }

    /// True when the gaps agree with the column sequences of `rows`.
    pub fn consistent_with(&self, rows: &[Vec<(usize, f64)>], cols: usize) -> bool {
        self.gaps.len() == rows.len() && rows.iter().zip(&self.gaps).all(|(r, g)| row_gaps(r, cols) == *g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_normalized() {
        let m = SparseMatrix::from_rows(6, vec![vec![(5, 2.0), (0, 1.0), (3, 0.0), (5, 1.0)]]);
        assert_eq!(m.row(0), &[(0, 1.0), (5, 3.0)]);
        assert_eq!(m.get(0, 5), 3.0);
        assert_eq!(m.get(0, 2), 0.0);
    }

    #[test]
    fn set_keeps_rows_sorted_without_zeros() {
        let mut m = SparseMatrix::zeros(1, 4);
        m.set(0, 3, 1.0);
        m.set(0, 1, 2.0);
        m.set(0, 3, 0.0);
        m.set(0, 2, 0.0);
        assert_eq!(m.row(0), &[(1, 2.0)]);
    }

    #[test]
    fn gaps_count_zero_runs() {
        let m = SparseMatrix::from_rows(6, vec![vec![(0, 1.0), (5, 2.0)], vec![], vec![(2, 1.0), (3, 1.0)]]);
        let z = ZeroGapIndex::build(&m);
        assert_eq!(z.row(0), &[4, 0]);
        assert!(z.row(1).is_empty());
        assert_eq!(z.row(2), &[0, 2]);
        assert!(z.consistent_with(m.rows(), 6));
    }

    #[test]
    fn dense_round_trip_and_product() {
        let dense = vec![vec![1.0, 0.0, 2.0], vec![0.0, 0.0, 0.0], vec![0.0, 3.0, 0.0]];
        let m = SparseMatrix::from_dense(&dense);
        assert_eq!(m.to_dense(), dense);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]).unwrap(), vec![3.0, 0.0, 3.0]);
        assert!(m.mul_vec(&[1.0]).is_err());
    }
}
