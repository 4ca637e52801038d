use nalgebra::SVector;

/// Piecewise-cubic interpolant through samples on a uniform grid.
///
/// Each interval is covered by the cubic through the four nearest samples
/// (shifted inward at the ends of the grid), which is fourth-order accurate
/// and continuous across intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformCubic<const D: usize> {
    t0: f64,
    h: f64,
    values: Vec<SVector<f64, D>>,
}

impl<const D: usize> UniformCubic<D> {
    /// # Panics
    ///
    /// If fewer than two samples are given or `tf <= t0`.
    pub fn new(t0: f64, tf: f64, values: Vec<SVector<f64, D>>) -> Self {
        assert!(values.len() >= 2, "need at least two samples");
        assert!(tf > t0, "empty interpolation interval");
        let h = (tf - t0) / (values.len() - 1) as f64;
        Self { t0, h, values }
    }

    pub fn values(&self) -> &[SVector<f64, D>] {
        &self.values
    }

    /// Value at `t`, extrapolating with the end cubics outside the grid.
    pub fn eval(&self, t: f64) -> SVector<f64, D> {
        let n = self.values.len();
        let s = (t - self.t0) / self.h;
        let width = n.min(4);
        let cell = s.floor().clamp(0.0, (n - 2) as f64) as usize;
        let start = cell.saturating_sub(1).min(n - width);
        let mut out = SVector::<f64, D>::zeros();
        for i in 0..width {
            let xi = (start + i) as f64;
            let mut basis = 1.0;
            for k in 0..width {
                if k != i {
                    let xk = (start + k) as f64;
                    basis *= (s - xk) / (xi - xk);
                }
            }
            out += basis * self.values[start + i];
        }
        out
    }
}
