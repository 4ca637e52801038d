use nalgebra::{Matrix6, SMatrix};

use super::NumericsError;

/// Composite Simpson weights `(h/3) [1, 4, 2, 4, ..., 4, 1]` for `nodes`
/// equally spaced points on `[t0, tf]`.
pub fn simpson_weights(t0: f64, tf: f64, nodes: usize) -> Result<Vec<f64>, NumericsError> {
    if nodes < 3 || nodes.is_multiple_of(2) {
        return Err(NumericsError::InvalidNodeCount(nodes));
    }
    let h = (tf - t0) / (nodes - 1) as f64;
    Ok((0..nodes)
        .map(|i| {
            let w = if i == 0 || i == nodes - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect())
}

/// Node `i` of an `nodes`-point uniform grid on `[t0, tf]`, hitting `tf`
/// exactly at the last node.
pub(crate) fn grid_point(t0: f64, tf: f64, nodes: usize, i: usize) -> f64 {
    if i + 1 == nodes {
        tf
    } else {
        t0 + (tf - t0) * i as f64 / (nodes - 1) as f64
    }
}

/// Composite Simpson integral of a matrix-valued function. Nodes are summed
/// in increasing order.
pub fn simpson<const R: usize, const C: usize, F>(
    integrand: F,
    t0: f64,
    tf: f64,
    nodes: usize,
) -> Result<SMatrix<f64, R, C>, NumericsError>
where
    F: Fn(f64) -> SMatrix<f64, R, C>,
{
    let weights = simpson_weights(t0, tf, nodes)?;
    let mut total = SMatrix::<f64, R, C>::zeros();
    for (i, w) in weights.iter().enumerate() {
        total += *w * integrand(grid_point(t0, tf, nodes, i));
    }
    Ok(total)
}

/// Simpson integral of a symmetric 6×6 integrand, returned as `(W + Wᵀ)/2`.
pub fn gramian_quadrature<F>(
    integrand: F,
    t0: f64,
    tf: f64,
    nodes: usize,
) -> Result<Matrix6<f64>, NumericsError>
where
    F: Fn(f64) -> Matrix6<f64>,
{
    let w = simpson(integrand, t0, tf, nodes)?;
    Ok(0.5 * (w + w.transpose()))
}
