use nalgebra::{Matrix6, Matrix6x3, SVector, Vector3};

use super::NumericsError;
use crate::model::StateVector;

/// Time-stamped states, endpoints included.
pub type Trajectory = Vec<(f64, StateVector)>;

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<const N: usize, F>(f: &F, t: f64, x: &SVector<f64, N>, h: f64) -> SVector<f64, N>
where
    F: Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    let half = 0.5 * h;
    let k1 = f(t, x);
    let k2 = f(t + half, &(x + half * k1));
    let k3 = f(t + half, &(x + half * k2));
    let k4 = f(t + h, &(x + h * k3));
    x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrates `x' = A x + B(t) m(t)` with `steps` fixed RK4 steps on
/// `[t0, tf]` and returns `steps + 1` samples.
pub fn propagate_ltv<F, G>(
    a: &Matrix6<f64>,
    input_fn: F,
    control_fn: G,
    x0: &StateVector,
    t0: f64,
    tf: f64,
    steps: usize,
) -> Result<Trajectory, NumericsError>
where
    F: Fn(f64) -> Matrix6x3<f64>,
    G: Fn(f64) -> Vector3<f64>,
{
    if steps == 0 {
        return Err(NumericsError::NoSteps);
    }
    if !(tf > t0) || !t0.is_finite() || !tf.is_finite() {
        return Err(NumericsError::EmptyInterval { t0, tf });
    }
    if !x0.is_finite() {
        return Err(NumericsError::DivergedState(t0));
    }

    let rhs = |t: f64, x: &SVector<f64, 6>| a * x + input_fn(t) * control_fn(t);
    let h = (tf - t0) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vector();
    out.push((t0, *x0));
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        x = rk4_step(&rhs, t, &x, h);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::DivergedState(t + h));
        }
        let t_next = if k + 1 == steps {
            tf
        } else {
            t0 + (k + 1) as f64 * h
        };
        out.push((t_next, StateVector::from_vector(&x)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{system_matrix, InertiaTensor};
    use crate::numerics::expm;
    use proptest::prelude::*;

    fn zero_input(_: f64) -> Matrix6x3<f64> {
        Matrix6x3::zeros()
    }

    fn no_control(_: f64) -> Vector3<f64> {
        Vector3::zeros()
    }

    fn reference_a() -> Matrix6<f64> {
        system_matrix(&InertiaTensor::new(5.0, 4.0, 3.0).unwrap(), 1.078e-3)
            .unwrap()
            .a
    }

    #[test]
    fn constant_without_dynamics() {
        let x0 = StateVector::from_array([0.1, -0.2, 0.3, 1e-3, 0.0, -1e-3]);
        let traj = propagate_ltv(&Matrix6::zeros(), zero_input, no_control, &x0, 0.0, 10.0, 7).unwrap();
        assert_eq!(traj.len(), 8);
        assert!(traj.iter().all(|(_, x)| *x == x0));
        assert_eq!(traj[0].0, 0.0);
        assert_eq!(traj[7].0, 10.0);
    }

    #[test]
    fn homogeneous_matches_expm() {
        let a = reference_a();
        let x0 = StateVector::from_array([0.05, 0.05, 0.05, 1e-4, 1e-4, 1e-4]);
        let period = std::f64::consts::TAU / 1.078e-3;
        let traj = propagate_ltv(&a, zero_input, no_control, &x0, 0.0, period, 10_000).unwrap();
        let exact = expm(&a, period).unwrap() * x0.to_vector();
        let end = traj.last().unwrap().1.to_vector();
        assert!((end - exact).norm() / exact.norm() < 1e-8);
    }

    #[test]
    fn fourth_order_convergence() {
        let a = reference_a();
        let x0 = StateVector::from_array([0.05, -0.02, 0.03, 1e-4, -2e-4, 1e-4]);
        let tf = 2.0 * std::f64::consts::TAU / 1.078e-3;
        let exact = expm(&a, tf).unwrap() * x0.to_vector();
        let err = |steps| {
            let traj = propagate_ltv(&a, zero_input, no_control, &x0, 0.0, tf, steps).unwrap();
            (traj.last().unwrap().1.to_vector() - exact).norm()
        };
        let (e1, e2) = (err(40), err(80));
        let ratio = e1 / e2;
        assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio}");
    }

    #[test]
    fn forced_scalar_case() {
        // x4' = m2 with unit input gain, m2 = cos t: x4 = sin t, x1' = x4/2.
        let mut b = Matrix6x3::zeros();
        b[(3, 1)] = 1.0;
        let traj = propagate_ltv(
            &Matrix6::zeros(),
            |_| b,
            |t| Vector3::new(0.0, t.cos(), 0.0),
            &StateVector::default(),
            0.0,
            2.0,
            200,
        )
        .unwrap();
        let end = traj.last().unwrap().1;
        assert!((end.w1 - 2f64.sin()).abs() < 1e-10);
        assert_eq!(end.q1, 0.0);
    }

    #[test]
    fn argument_errors() {
        let x0 = StateVector::default();
        assert_eq!(
            propagate_ltv(&Matrix6::zeros(), zero_input, no_control, &x0, 0.0, 1.0, 0),
            Err(NumericsError::NoSteps)
        );
        assert!(matches!(
            propagate_ltv(&Matrix6::zeros(), zero_input, no_control, &x0, 1.0, 1.0, 3),
            Err(NumericsError::EmptyInterval { .. })
        ));
        let bad = Matrix6::from_element(1e300);
        let x0 = StateVector::from_array([1.0; 6]);
        assert!(matches!(
            propagate_ltv(&bad, zero_input, no_control, &x0, 0.0, 1e10, 5),
            Err(NumericsError::DivergedState(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn homogeneous_linearity(
            x in proptest::array::uniform6(-0.1f64..0.1),
            y in proptest::array::uniform6(-0.1f64..0.1),
        ) {
            let a = reference_a();
            let run = |v: [f64; 6]| {
                propagate_ltv(&a, zero_input, no_control, &StateVector::from_array(v), 0.0, 3000.0, 300).unwrap()
            };
            let mut sum = [0.0; 6];
            for i in 0..6 { sum[i] = x[i] + y[i]; }
            let (tx, ty, ts) = (run(x), run(y), run(sum));
            for ((a, b), c) in tx.iter().zip(&ty).zip(&ts) {
                let lhs = c.1.to_vector();
                let rhs = a.1.to_vector() + b.1.to_vector();
                prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1e-300) + 1e-300);
            }
        }
    }
}
