//! Cyclic Jacobi eigenvalue iteration for small symmetric matrices.

use nalgebra::DMatrix;

/// Cap on full sweeps over the off-diagonal entries.
pub const MAX_SWEEPS: usize = 30;

/// Eigenvalues of a symmetric matrix, sorted ascending.
///
/// Uses cyclic Jacobi rotations in the row-by-row order `(0,1), (0,2), ...`,
/// which makes the result reproducible bit for bit. Intended for `n <= 8`.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let mut a = m.clone();
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
            if off.sqrt() <= 1e-17 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut a, p, q);
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    vals.sort_by(f64::total_cmp);
    vals
}

fn rotate(a: &mut DMatrix<f64>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let n = a.nrows();
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_is_sorted() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -1.0, 2.0]));
        assert_eq!(symmetric_eigenvalues(&m), vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let v = symmetric_eigenvalues(&m);
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn matches_nalgebra_on_dense_matrix() {
        let n = 6;
        let m = DMatrix::from_fn(n, n, |i, j| {
            let (i, j) = (i.min(j) as f64, i.max(j) as f64);
            (1.0 + i * 0.7 - j * 0.3).sin() + if i == j { 2.0 } else { 0.0 }
        });
        let ours = symmetric_eigenvalues(&m);
        let mut theirs: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
        theirs.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn rank_one_matrix() {
        let v = [1.0, 2.0, -2.0];
        let m = DMatrix::from_fn(3, 3, |i, j| v[i] * v[j]);
        let e = symmetric_eigenvalues(&m);
        assert!(e[0].abs() < 1e-14 && e[1].abs() < 1e-14);
        assert!((e[2] - 9.0).abs() < 1e-13);
    }
}
