use super::{normalize_row, SparseMatrix, ZeroGapIndex};
use crate::error::SolveError;

/// A pivot is unusable when its magnitude is below this fraction of the
/// largest magnitude in its column of the original matrix.
pub const SINGULARITY_THRESHOLD: f64 = 1e-12;

/// Forward step: `b[target] -= coefficient * b[source]`, in original row
/// numbering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Elimination {
    pub target: usize,
    pub source: usize,
    pub coefficient: f64,
}

/// The result of eliminating a matrix: the row operations to replay on a
/// right-hand side, and the triangular rows to back-substitute with.
#[derive(Clone, Debug, PartialEq)]
pub struct SolvePlan {
    /// Row `k` holds the pivot row for unknown `k`; its first entry is the
    /// pivot, at column `k`.
    pub triangular: SparseMatrix,
    /// `perm[k]` is the original index of the pivot row for unknown `k`.
    pub perm: Vec<usize>,
    pub program: Vec<Elimination>,
}

impl SolvePlan {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }
}

/// `target - factor * source`, skipping over the zero runs of both rows.
/// The leading entry of `target` cancels exactly and is not stored.
fn eliminate(target: &[(usize, f64)], source: &[(usize, f64)], factor: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(target.len() + source.len());
    let (mut i, mut j) = (1, 1);
    while i < target.len() || j < source.len() {
        let tc = target.get(i).map_or(usize::MAX, |e| e.0);
        let sc = source.get(j).map_or(usize::MAX, |e| e.0);
        let (col, value) = if tc < sc {
            i += 1;
            (tc, target[i - 1].1)
        } else if sc < tc {
            j += 1;
            (sc, -factor * source[j - 1].1)
        } else {
            i += 1;
            j += 1;
            (tc, target[i - 1].1 - factor * source[j - 1].1)
        };
        if value != 0.0 {
            out.push((col, value));
        }
    }
    out
}

struct Work {
    cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
    gaps: ZeroGapIndex,
    check_gaps: bool,
}

fn run(matrix: &SparseMatrix, check_gaps: bool) -> Result<SolvePlan, SolveError> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(SolveError::NotSquare { rows: n, cols: matrix.ncols() });
    }
    let mut column_max = vec![0.0f64; n];
    for row in matrix.rows() {
        for &(c, v) in row {
            column_max[c] = column_max[c].max(v.abs());
        }
    }
    let mut work = Work {
        cols: n,
        rows: matrix.rows().iter().cloned().map(normalize_row).collect(),
        gaps: ZeroGapIndex::build(matrix),
        check_gaps,
    };
    // Rows waiting for elimination, grouped by leading column.
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in work.rows.iter().enumerate() {
        if let Some(&(c, _)) = row.first() {
            buckets[c].push(i);
        }
    }
    let mut perm = Vec::with_capacity(n);
    let mut program = Vec::new();
    for k in 0..n {
        let candidates = std::mem::take(&mut buckets[k]);
        let Some(&pivot_row) = candidates.iter().max_by(|&&a, &&b| {
            work.rows[a][0].1.abs().total_cmp(&work.rows[b][0].1.abs()).then(b.cmp(&a))
        }) else {
            return Err(SolveError::Singular { column: k });
        };
        let pivot = work.rows[pivot_row][0].1;
        if pivot.abs() < SINGULARITY_THRESHOLD * column_max[k] {
            return Err(SolveError::Singular { column: k });
        }
        for &target in candidates.iter().filter(|&&r| r != pivot_row) {
            let coefficient = work.rows[target][0].1 / pivot;
            let updated = eliminate(&work.rows[target], &work.rows[pivot_row], coefficient);
            work.gaps.update_row(target, &updated, work.cols);
            if let Some(&(c, _)) = updated.first() {
                buckets[c].push(target);
            }
            work.rows[target] = updated;
            program.push(Elimination { target, source: pivot_row, coefficient });
        }
        if work.check_gaps {
            assert!(work.gaps.consistent_with(&work.rows, work.cols), "zero-gap index out of sync at column {k}");
        }
        perm.push(pivot_row);
    }
    let triangular = perm.iter().map(|&r| std::mem::take(&mut work.rows[r])).collect();
    Ok(SolvePlan { triangular: SparseMatrix { cols: n, rows: triangular }, perm, program })
}

/// Eliminates `matrix` with partial pivoting on the largest leading
/// coefficient.
pub fn factor(matrix: &SparseMatrix) -> Result<SolvePlan, SolveError> {
    run(matrix, false)
}

/// [`factor`], also verifying after every column that the zero-gap index
/// matches a rebuild from the working rows. Panics on a mismatch.
pub fn factor_checked(matrix: &SparseMatrix) -> Result<SolvePlan, SolveError> {
    run(matrix, true)
}

/// Replays the plan's row operations on `b`, then back-substitutes.
pub fn solve_with_plan(plan: &SolvePlan, b: &[f64]) -> Result<Vec<f64>, SolveError> {
    let n = plan.dim();
    if b.len() != n {
        return Err(SolveError::DimensionMismatch { expected: n, got: b.len() });
    }
    let mut y = b.to_vec();
    for op in &plan.program {
        y[op.target] -= op.coefficient * y[op.source];
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let row = plan.triangular.row(k);
        let mut sum = y[plan.perm[k]];
        for &(c, v) in &row[1..] {
            sum -= v * x[c];
        }
        x[k] = sum / row[0].1;
    }
    Ok(x)
}
