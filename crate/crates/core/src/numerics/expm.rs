use nalgebra::{DMatrix, SMatrix};

use super::NumericsError;

// Padé numerator coefficients (denominator uses the same with alternating
// signs on odd terms) and the 1-norm bound below which each degree reaches
// double precision.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539_398_330_063_23e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068;
const THETA13: f64 = 5.371920351148152;

// Beyond this many squarings the result cannot be finite anyway.
const MAX_SQUARINGS: i32 = 1000;

fn one_norm<const N: usize>(a: &SMatrix<f64, N, N>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `U` (odd part) and `V` (even part) of the diagonal Padé approximant.
fn pade_uv<const N: usize>(
    a: &SMatrix<f64, N, N>,
    coeffs: &[f64],
) -> (SMatrix<f64, N, N>, SMatrix<f64, N, N>) {
    let a2 = a * a;
    let mut power = SMatrix::<f64, N, N>::identity();
    let mut odd = SMatrix::<f64, N, N>::zeros();
    let mut even = SMatrix::<f64, N, N>::zeros();
    for pair in coeffs.chunks(2) {
        even += pair[0] * power;
        if let Some(c) = pair.get(1) {
            odd += *c * power;
        }
        power *= a2;
    }
    (a * odd, even)
}

/// Matrix exponential `e^(A dt)` by scaling and squaring with a diagonal
/// Padé approximant of degree 3, 5, 7, 9 or 13.
pub fn expm<const N: usize>(
    a: &SMatrix<f64, N, N>,
    dt: f64,
) -> Result<SMatrix<f64, N, N>, NumericsError> {
    if !dt.is_finite() || a.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite("expm input"));
    }
    let scaled = a * dt;
    let norm = one_norm(&scaled);
    if !norm.is_finite() {
        return Err(NumericsError::Overflow(norm));
    }
    if norm == 0.0 {
        return Ok(SMatrix::identity());
    }

    let (coeffs, squarings): (&[f64], i32) = if norm < THETA3 {
        (&PADE3, 0)
    } else if norm < THETA5 {
        (&PADE5, 0)
    } else if norm < THETA7 {
        (&PADE7, 0)
    } else if norm < THETA9 {
        (&PADE9, 0)
    } else {
        ((&PADE13), (norm / THETA13).log2().ceil().max(0.0) as i32)
    };
    if squarings > MAX_SQUARINGS {
        return Err(NumericsError::Overflow(norm));
    }

    let reduced = scaled * 2f64.powi(-squarings);
    let (u, v) = pade_uv(&reduced, coeffs);
    // Dense LU keeps the const-generic signature free of typenum bounds.
    let denom = DMatrix::from_column_slice(N, N, (v - u).as_slice());
    let numer = DMatrix::from_column_slice(N, N, (v + u).as_slice());
    let solved = denom
        .lu()
        .solve(&numer)
        .ok_or(NumericsError::Overflow(norm))?;
    let mut result = SMatrix::<f64, N, N>::from_column_slice(solved.as_slice());
    for _ in 0..squarings {
        result = result * result;
    }
    if result.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::Overflow(norm));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Matrix3, Matrix6};

    fn rel_err<const N: usize>(a: &SMatrix<f64, N, N>, b: &SMatrix<f64, N, N>) -> f64 {
        (a - b).norm() / b.norm()
    }

    /// Plain Taylor series summed until terms stop contributing; only used
    /// on small-norm inputs where it is accurate.
    fn taylor<const N: usize>(a: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
        let mut sum = SMatrix::<f64, N, N>::identity();
        let mut term = SMatrix::<f64, N, N>::identity();
        for k in 1..60 {
            term = term * a / k as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn zero_matrix_and_zero_step() {
        let a = Matrix3::new(1.0, 2.0, 3.0, 0.0, -1.0, 4.0, 2.0, 0.5, 0.1);
        assert_eq!(expm(&Matrix3::zeros(), 3.0).unwrap(), Matrix3::identity());
        assert_eq!(expm(&a, 0.0).unwrap(), Matrix3::identity());
    }

    #[test]
    fn rotation_generator() {
        let a = Matrix2::new(0.0, -1.0, 1.0, 0.0);
        for t in [0.001, 0.3, 1.0, 2.5, 7.0, 10.0] {
            let e = expm(&a, t).unwrap();
            let (s, c) = f64::sin_cos(t);
            let expect = Matrix2::new(c, -s, s, c);
            assert!((e - expect).norm() < 1e-13, "t={t}");
        }
    }

    #[test]
    fn diagonal_matrix() {
        let a = Matrix3::from_diagonal(&nalgebra::Vector3::new(-3.0, 0.5, 2.0));
        let e = expm(&a, 2.0).unwrap();
        let expect = Matrix3::from_diagonal(&nalgebra::Vector3::new(
            (-6.0f64).exp(),
            1f64.exp(),
            4f64.exp(),
        ));
        assert!(rel_err(&e, &expect) < 1e-14);
    }

    #[test]
    fn nilpotent_truncates() {
        let mut a = Matrix6::zeros();
        a[(0, 3)] = 0.5;
        a[(1, 4)] = 0.5;
        a[(2, 5)] = 0.5;
        assert_eq!(a * a, Matrix6::zeros());
        let dt = 37.5;
        let e = expm(&a, dt).unwrap();
        assert!((e - (Matrix6::identity() + a * dt)).abs().max() < 1e-14);
    }

    #[test]
    fn matches_taylor_on_each_pade_branch() {
        let base = Matrix3::new(0.2, -0.7, 0.1, 0.4, 0.3, -0.5, -0.2, 0.6, 0.1);
        let n = one_norm(&base);
        for target in [0.01, 0.2, 0.8, 1.8, 4.0] {
            let dt = target / n;
            let e = expm(&base, dt).unwrap();
            assert!(rel_err(&e, &taylor(&(base * dt))) < 1e-14, "norm {target}");
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = Matrix2::identity();
        a[(0, 1)] = f64::NAN;
        assert!(expm(&a, 1.0).is_err());
        assert!(expm(&Matrix2::identity(), f64::INFINITY).is_err());
        assert!(matches!(
            expm(&Matrix2::identity(), 1e300),
            Err(NumericsError::Overflow(_))
        ));
    }
}
