use nalgebra::{DMatrix, Dim, Matrix, Storage};
use serde::Serialize;

/// Default relative rank threshold, multiplied by the largest singular value.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

// Absolute threshold used when every singular value is zero.
const ZERO_MATRIX_TOL: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankResult {
    pub rank: usize,
    /// Descending, non-negative.
    pub singular_values: Vec<f64>,
    pub tolerance_used: f64,
}

/// Numerical rank: the number of singular values above `rel_tol * sigma_1`.
///
/// # Panics
///
/// If `rel_tol` is not in `(0, 1)` or the matrix has non-finite entries.
pub fn svd_rank<R: Dim, C: Dim, S: Storage<f64, R, C>>(
    m: &Matrix<f64, R, C, S>,
    rel_tol: f64,
) -> RankResult {
    assert!(
        rel_tol > 0.0 && rel_tol < 1.0,
        "relative rank tolerance must be in (0, 1), got {rel_tol}"
    );
    assert!(m.iter().all(|v| v.is_finite()), "svd_rank on non-finite matrix");

    let dense = DMatrix::from_iterator(m.nrows(), m.ncols(), m.iter().copied());
    let mut singular_values: Vec<f64> = if dense.is_empty() {
        Vec::new()
    } else {
        dense.singular_values().iter().map(|s| s.max(0.0)).collect()
    };
    singular_values.sort_by(|a, b| b.total_cmp(a));

    let largest = singular_values.first().copied().unwrap_or(0.0);
    let tolerance_used = if largest > 0.0 {
        rel_tol * largest
    } else {
        ZERO_MATRIX_TOL
    };
    let rank = singular_values.iter().filter(|&&s| s > tolerance_used).count();
    RankResult {
        rank,
        singular_values,
        tolerance_used,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Matrix3, Matrix6, SMatrix};
    use proptest::prelude::*;

    #[test]
    fn zero_and_identity() {
        let r = svd_rank(&Matrix6::<f64>::zeros(), DEFAULT_RANK_TOL);
        assert_eq!(r.rank, 0);
        assert_eq!(r.tolerance_used, 1e-300);

        let r = svd_rank(&Matrix6::<f64>::identity(), DEFAULT_RANK_TOL);
        assert_eq!(r.rank, 6);
        assert!(r.singular_values.iter().all(|s| (s - 1.0).abs() < 1e-15));
    }

    #[test]
    fn dependent_rows() {
        let m = Matrix2::new(1.0, 0.0, 2.0, 0.0);
        let r = svd_rank(&m, DEFAULT_RANK_TOL);
        assert_eq!(r.rank, 1);
        assert!((r.singular_values[0] - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn threshold_is_relative() {
        let m = Matrix3::from_diagonal(&nalgebra::Vector3::new(1e-5, 1e-12, 1e-15));
        assert_eq!(svd_rank(&m, 1e-8).rank, 2);
        assert_eq!(svd_rank(&m, 1e-6).rank, 1);
        assert_eq!(svd_rank(&(m * 1e20), 1e-8).rank, 2);
    }

    #[test]
    #[should_panic]
    fn rejects_bad_tolerance() {
        svd_rank(&Matrix2::<f64>::identity(), 1.5);
    }

    fn rotation(theta: f64, phi: f64) -> Matrix3<f64> {
        let rz = nalgebra::Rotation3::from_euler_angles(0.0, 0.0, theta);
        let rx = nalgebra::Rotation3::from_euler_angles(phi, 0.0, 0.0);
        (rz * rx).into_inner()
    }

    proptest! {
        #[test]
        fn rank_invariant_under_orthogonal_factors(
            entries in proptest::collection::vec(-1.0f64..1.0, 9),
            t1 in 0.0f64..6.3, p1 in 0.0f64..6.3,
            drop_col in 0usize..3,
        ) {
            let mut m = SMatrix::<f64, 3, 3>::from_iterator(entries);
            // Force a rank deficiency in some cases.
            if drop_col < 2 {
                let c = m.column(drop_col + 1).into_owned();
                m.set_column(drop_col, &(2.0 * c));
            }
            let q = rotation(t1, p1);
            let base = svd_rank(&m, 1e-8);
            let rotated = svd_rank(&(q * m), 1e-8);
            prop_assert_eq!(base.rank, rotated.rank);
            for (a, b) in base.singular_values.iter().zip(&rotated.singular_values) {
                prop_assert!((a - b).abs() <= 1e-12 * base.singular_values[0]);
            }
            let w = q.transpose();
            let right = svd_rank(&(m.transpose() * w), 1e-8);
            prop_assert_eq!(base.rank, right.rank);
        }

        #[test]
        fn singular_values_sorted_and_counted(entries in proptest::collection::vec(-10.0f64..10.0, 18)) {
            let m = SMatrix::<f64, 6, 3>::from_iterator(entries);
            let r = svd_rank(&m, 1e-8);
            prop_assert!(r.singular_values.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(r.singular_values.iter().all(|s| *s >= 0.0));
            prop_assert_eq!(r.rank, r.singular_values.iter().filter(|s| **s > r.tolerance_used).count());
        }
    }
}
