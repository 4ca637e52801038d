use nalgebra::SMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOrder {
    First,
    Second,
}

/// Fourth-order central difference of a matrix-valued function of time.
///
/// # Panics
///
/// If `h` is not strictly positive.
pub fn finite_diff<const R: usize, const C: usize, F>(
    f: F,
    t: f64,
    h: f64,
    order: DiffOrder,
) -> SMatrix<f64, R, C>
where
    F: Fn(f64) -> SMatrix<f64, R, C>,
{
    assert!(h > 0.0, "finite difference step must be positive, got {h}");
    let fm2 = f(t - 2.0 * h);
    let fm1 = f(t - h);
    let fp1 = f(t + h);
    let fp2 = f(t + 2.0 * h);
    match order {
        DiffOrder::First => (fm2 - fp2 + 8.0 * (fp1 - fm1)) / (12.0 * h),
        DiffOrder::Second => {
            let f0 = f(t);
            (-(fm2 + fp2) + 16.0 * (fp1 + fm1) - 30.0 * f0) / (12.0 * h * h)
        }
    }
}
