use crate::error::SolveError;

/// Textbook Gaussian elimination on the augmented matrix `[A | b]` with
/// partial pivoting. Slow and simple; used to check the sparse solver.
pub fn dense_oracle_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>, SolveError> {
    let n = a.len();
    if let Some(row) = a.iter().find(|r| r.len() != n) {
        return Err(SolveError::NotSquare { rows: n, cols: row.len() });
    }
    if b.len() != n {
        return Err(SolveError::DimensionMismatch { expected: n, got: b.len() });
    }
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| row.iter().copied().chain([bi]).collect()).collect();
    let scale: Vec<f64> = (0..n).map(|c| a.iter().map(|r| r[c].abs()).fold(0.0, f64::max)).collect();
    for k in 0..n {
        let pivot = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap_or(k);
        if m[pivot][k] == 0.0 || m[pivot][k].abs() < 1e-12 * scale[k] {
            return Err(SolveError::Singular { column: k });
        }
        m.swap(k, pivot);
        let (top, rest) = m.split_at_mut(k + 1);
        let pivot_row = &top[k];
        for row in rest.iter_mut() {
            let f = row[k] / pivot_row[k];
            if f != 0.0 {
                for (x, p) in row[k..].iter_mut().zip(&pivot_row[k..]) {
                    *x -= f * p;
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|c| m[k][c] * x[c]).sum();
        x[k] = (m[k][n] - s) / m[k][k];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_system() {
        assert_eq!(dense_oracle_solve(&[vec![2.0, 0.0], vec![0.0, 4.0]], &[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn hilbert_like_residual() {
        let a: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| 1.0 / (i + j + 1) as f64).collect()).collect();
        let b = [1.0, 2.0, 3.0];
        let x = dense_oracle_solve(&a, &b).unwrap();
        for (row, bi) in a.iter().zip(b) {
            let ax: f64 = row.iter().zip(&x).map(|(a, x)| a * x).sum();
            assert!((ax - bi).abs() <= 1e-8, "{ax} vs {bi}");
        }
    }

    #[test]
    fn singular_and_malformed() {
        assert_eq!(dense_oracle_solve(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 1.0]), Err(SolveError::Singular { column: 1 }));
        assert!(matches!(dense_oracle_solve(&[vec![1.0]], &[1.0, 2.0]), Err(SolveError::DimensionMismatch { .. })));
        assert!(matches!(dense_oracle_solve(&[vec![1.0, 2.0]], &[1.0]), Err(SolveError::NotSquare { .. })));
    }
}
