//! Minimum-energy open-loop steering to the origin.
//!
//! With `W = W(t0, tf)` invertible the input
//!
//! ```text
//! m(tau) = -B(tau)ᵀ Phi(t0, tau)ᵀ W⁻¹ x0
//! ```
//!
//! drives the linear model from `x0` to zero at `tf` with the smallest
//! `∫ |m|² dt`. The control is sampled on the Gramian quadrature nodes and
//! interpolated piecewise-cubically when the dynamics are propagated.

use nalgebra::{Matrix6, Vector3, Vector6};
use serde::Serialize;
use thiserror::Error;

use crate::controllability::{gramian, ControllabilityError, Gramian, GRAMIAN_SINGULAR_RATIO};
use crate::model::{
    input_matrix_at, quaternion_rate, system_matrix, InertiaTensor, ModelError, OrbitConfig,
    StateVector,
};
use crate::numerics::{
    expm, propagate_ltv, rk4_step, simpson_weights, NumericsError, UniformCubic,
};

pub const DEFAULT_STEPS_PER_ORBIT: usize = 10_000;
pub const DEFAULT_GRAMIAN_NODES: usize = 4001;

/// Small-state bound for the linearization check: `|q| <= 0.1` and
/// `|w| / omega0 <= 0.1` along the whole trajectory.
pub const SMALL_STATE_BOUND: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManeuverError {
    #[error(transparent)]
    Controllability(#[from] ControllabilityError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(
        "controllability Gramian is numerically singular over the window \
         (lambda_min / lambda_max = {ratio:e} <= {cutoff:e}); the state cannot be steered"
    )]
    SingularGramian { ratio: f64, cutoff: f64 },
    #[error(
        "trajectory leaves the small-state region (max |q| = {max_q:.3e}, max |w|/w0 = {max_rate_ratio:.3e})"
    )]
    StateTooLarge { max_q: f64, max_rate_ratio: f64 },
    #[error("trajectory samples must be non-empty, equally long and uniformly spaced")]
    MalformedTrajectory,
}

/// Sampled minimum-energy input together with the Gramian it came from.
#[derive(Debug, Clone)]
pub struct MinEnergyControl {
    pub times: Vec<f64>,
    pub controls: Vec<Vector3<f64>>,
    /// `W⁻¹ x0`
    pub costate: Vector6<f64>,
    pub gramian: Gramian,
    interp: UniformCubic<3>,
}

impl MinEnergyControl {
    /// Piecewise-cubic interpolation of the sampled input, A·m².
    pub fn at(&self, t: f64) -> Vector3<f64> {
        self.interp.eval(t)
    }

    /// `∫ |m|² dt` by Simpson over the control nodes.
    pub fn energy(&self) -> f64 {
        let (t0, tf) = (self.times[0], *self.times.last().unwrap());
        simpson_weights(t0, tf, self.times.len())
            .map(|w| {
                w.iter()
                    .zip(&self.controls)
                    .map(|(w, m)| w * m.norm_squared())
                    .sum()
            })
            .unwrap_or(f64::NAN)
    }
}

/// `W⁻¹ v` through the eigendecomposition of `W`, refusing to invert when
/// `lambda_min <= 1e-10 lambda_max`.
pub fn gramian_solve(w: &Gramian, v: &Vector6<f64>) -> Result<Vector6<f64>, ManeuverError> {
    let ratio = w.condition_ratio();
    if !(ratio > GRAMIAN_SINGULAR_RATIO) {
        return Err(ManeuverError::SingularGramian {
            ratio,
            cutoff: GRAMIAN_SINGULAR_RATIO,
        });
    }
    let vecs = &w.eigenvectors;
    let coords = vecs.transpose() * v;
    let scaled = Vector6::from_fn(|i, _| coords[i] / w.eigenvalues[i]);
    Ok(vecs * scaled)
}

fn node_time(t0: f64, tf: f64, nodes: usize, i: usize) -> f64 {
    if i + 1 == nodes {
        tf
    } else {
        t0 + (tf - t0) * i as f64 / (nodes - 1) as f64
    }
}

/// Minimum-energy input steering `x0` at `t0` to the origin at `tf`.
pub fn min_energy_control(
    j: &InertiaTensor,
    orbit: &OrbitConfig,
    x0: &StateVector,
    t0: f64,
    tf: f64,
    nodes: usize,
) -> Result<MinEnergyControl, ManeuverError> {
    let w = gramian(j, orbit, t0, tf, nodes)?;
    let costate = gramian_solve(&w, &x0.to_vector())?;
    let a = system_matrix(j, orbit.omega0())?.a;

    let times: Vec<f64> = (0..nodes).map(|i| node_time(t0, tf, nodes, i)).collect();
    let controls = times
        .iter()
        .map(|&tau| {
            let phi_b = expm(&a, t0 - tau)? * input_matrix_at(j, orbit, tau);
            Ok(-(phi_b.transpose() * costate))
        })
        .collect::<Result<Vec<_>, NumericsError>>()?;
    let interp = UniformCubic::new(t0, tf, controls.clone());
    Ok(MinEnergyControl {
        times,
        controls,
        costate,
        gramian: w,
        interp,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManeuverResult {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// A·m²
    pub controls: Vec<[f64; 3]>,
    /// `|x(tf)| / |x0|`, zero when `x0 = 0`.
    pub final_norm_ratio: f64,
    /// `∫ |m|² dt`, A²·m⁴·s.
    pub energy: f64,
}

/// `∫ y dt` over uniformly spaced samples: Simpson for an odd sample count,
/// trapezoid otherwise.
fn integrate_samples(t0: f64, tf: f64, values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    if let Ok(w) = simpson_weights(t0, tf, n) {
        return w.iter().zip(values).map(|(w, v)| w * v).sum();
    }
    let h = (tf - t0) / (n - 1) as f64;
    h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]))
}

/// Propagates the linear model under an arbitrary input history.
pub fn simulate_with_control<F>(
    j: &InertiaTensor,
    orbit: &OrbitConfig,
    x0: &StateVector,
    t0: f64,
    tf: f64,
    steps: usize,
    control: F,
) -> Result<ManeuverResult, ManeuverError>
where
    F: Fn(f64) -> Vector3<f64>,
{
    let a = system_matrix(j, orbit.omega0())?.a;
    let traj = propagate_ltv(&a, |t| input_matrix_at(j, orbit, t), &control, x0, t0, tf, steps)?;
    let times: Vec<f64> = traj.iter().map(|(t, _)| *t).collect();
    let states: Vec<StateVector> = traj.iter().map(|(_, x)| *x).collect();
    let controls: Vec<Vector3<f64>> = times.iter().map(|&t| control(t)).collect();
    let power: Vec<f64> = controls.iter().map(|m| m.norm_squared()).collect();

    let start = x0.to_vector().norm();
    let end = states.last().unwrap().to_vector().norm();
    let final_norm_ratio = if start > 0.0 { end / start } else { 0.0 };

    Ok(ManeuverResult {
        energy: integrate_samples(t0, tf, &power),
        controls: controls.iter().map(|m| [m.x, m.y, m.z]).collect(),
        times,
        states,
        final_norm_ratio,
    })
}

/// Steers `x0` towards the origin over `[t0, tf]` with the minimum-energy
/// input and `steps` RK4 steps.
pub fn simulate_maneuver(
    j: &InertiaTensor,
    orbit: &OrbitConfig,
    x0: &StateVector,
    t0: f64,
    tf: f64,
    steps: usize,
    nodes: usize,
) -> Result<ManeuverResult, ManeuverError> {
    let control = min_energy_control(j, orbit, x0, t0, tf, nodes)?;
    simulate_with_control(j, orbit, x0, t0, tf, steps, |t| control.at(t))
}

fn check_uniform(times: &[f64]) -> Result<(), ManeuverError> {
    if times.len() < 2 {
        return Err(ManeuverError::MalformedTrajectory);
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let uniform = h > 0.0
        && times
            .iter()
            .enumerate()
            .all(|(i, t)| (t - (times[0] + i as f64 * h)).abs() <= 1e-9 * h.max(t.abs()));
    if uniform {
        Ok(())
    } else {
        Err(ManeuverError::MalformedTrajectory)
    }
}

/// Re-integrates the attitude through the nonlinear reduced kinematics,
/// driven by the trajectory's own body-rate history, and returns the largest
/// distance from the linear attitude.
pub fn nonlinear_consistency(
    orbit: &OrbitConfig,
    result: &ManeuverResult,
) -> Result<f64, ManeuverError> {
    let n = result.times.len();
    if result.states.len() != n {
        return Err(ManeuverError::MalformedTrajectory);
    }
    check_uniform(&result.times)?;

    let max_q = result
        .states
        .iter()
        .map(|x| x.quaternion().norm())
        .fold(0.0, f64::max);
    let max_rate_ratio = result
        .states
        .iter()
        .map(|x| x.rate().norm())
        .fold(0.0, f64::max)
        / orbit.omega0();
    if !(max_q <= SMALL_STATE_BOUND && max_rate_ratio <= SMALL_STATE_BOUND) {
        return Err(ManeuverError::StateTooLarge {
            max_q,
            max_rate_ratio,
        });
    }

    let (t0, tf) = (result.times[0], result.times[n - 1]);
    let rates = UniformCubic::new(t0, tf, result.states.iter().map(|x| x.rate()).collect());
    let h = (tf - t0) / (n - 1) as f64;

    // The kinematics only fail beyond |q| = 1, far outside the bound above.
    let rhs = |t: f64, q: &Vector3<f64>| {
        quaternion_rate(q, &rates.eval(t)).unwrap_or_else(|_| Vector3::repeat(f64::NAN))
    };
    let mut q = result.states[0].quaternion();
    let mut deviation: f64 = 0.0;
    for k in 1..n {
        q = rk4_step(&rhs, result.times[k - 1], &q, h);
        if q.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::QuaternionNormExceedsOne(f64::NAN).into());
        }
        deviation = deviation.max((q - result.states[k].quaternion()).norm());
    }
    Ok(deviation)
}

/// Homogeneous solution `e^(A (t - t0)) x0` at the given times.
pub fn free_response(
    j: &InertiaTensor,
    orbit: &OrbitConfig,
    x0: &StateVector,
    t0: f64,
    times: &[f64],
) -> Result<Vec<StateVector>, ManeuverError> {
    let a: Matrix6<f64> = system_matrix(j, orbit.omega0())?.a;
    times
        .iter()
        .map(|&t| Ok(StateVector::from_vector(&(expm(&a, t - t0)? * x0.to_vector()))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn j543() -> InertiaTensor {
        InertiaTensor::new(5.0, 4.0, 3.0).unwrap()
    }

    fn orbit(im: f64) -> OrbitConfig {
        OrbitConfig::new(1.078e-3, 7.0e6, im, 7.9e15).unwrap()
    }

    fn x0() -> StateVector {
        StateVector::from_array([0.05, 0.05, 0.05, 1e-4, 1e-4, 1e-4])
    }

    #[test]
    fn zero_initial_state_needs_no_control() {
        let o = orbit(FRAC_PI_4);
        let c = min_energy_control(&j543(), &o, &StateVector::default(), 0.0, o.period(), 201).unwrap();
        assert!(c.controls.iter().all(|m| *m == Vector3::zeros()));
        let r = simulate_maneuver(&j543(), &o, &StateVector::default(), 0.0, o.period(), 400, 201).unwrap();
        assert!(r.states.iter().all(|x| *x == StateVector::default()));
        assert_eq!(r.final_norm_ratio, 0.0);
        assert_eq!(r.energy, 0.0);
        assert_eq!(nonlinear_consistency(&o, &r).unwrap(), 0.0);
    }

    #[test]
    fn control_is_linear_in_initial_state() {
        let o = orbit(FRAC_PI_4);
        let x = x0();
        let x2 = StateVector::from_vector(&(2.0 * x.to_vector()));
        let c1 = min_energy_control(&j543(), &o, &x, 0.0, o.period(), 401).unwrap();
        let c2 = min_energy_control(&j543(), &o, &x2, 0.0, o.period(), 401).unwrap();
        for (a, b) in c1.controls.iter().zip(&c2.controls) {
            assert!((2.0 * a - b).norm() <= 1e-12 * b.norm().max(1e-300));
        }
    }

    #[test]
    fn steering_reaches_origin() {
        let o = orbit(FRAC_PI_4);
        let r = simulate_maneuver(&j543(), &o, &x0(), 0.0, o.period(), 4000, 2001).unwrap();
        assert!(r.final_norm_ratio <= 1e-3, "ratio {}", r.final_norm_ratio);
        assert!(r.energy > 0.0);
        assert!(r.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(r.times.len(), r.states.len());
        assert_eq!(r.times.len(), r.controls.len());
    }

    #[test]
    fn zero_control_override_is_free_response() {
        let o = orbit(0.7);
        let r = simulate_with_control(&j543(), &o, &x0(), 0.0, o.period(), 10_000, |_| Vector3::zeros()).unwrap();
        let free = free_response(&j543(), &o, &x0(), 0.0, &r.times).unwrap();
        for (a, b) in r.states.iter().zip(&free) {
            let (a, b) = (a.to_vector(), b.to_vector());
            assert!((a - b).norm() <= 1e-8 * b.norm());
        }
        assert_eq!(r.energy, 0.0);
    }

    #[test]
    fn equatorial_gramian_refuses_to_steer() {
        let o = orbit(0.0);
        let x = StateVector::from_array([0.0, 0.05, 0.0, 0.0, 1e-4, 0.0]);
        let err = min_energy_control(&j543(), &o, &x, 0.0, o.period(), 401).unwrap_err();
        assert!(matches!(err, ManeuverError::SingularGramian { .. }));
    }

    #[test]
    fn energy_matches_control_node_quadrature() {
        let o = orbit(FRAC_PI_4);
        let c = min_energy_control(&j543(), &o, &x0(), 0.0, o.period(), 2001).unwrap();
        let r = simulate_with_control(&j543(), &o, &x0(), 0.0, o.period(), 4000, |t| c.at(t)).unwrap();
        // Minimum energy equals x0ᵀ W⁻¹ x0.
        let expected = x0().to_vector().dot(&c.costate);
        assert!((c.energy() - expected).abs() <= 1e-8 * expected);
        assert!((r.energy - expected).abs() <= 1e-6 * expected);
    }

    #[test]
    fn nonlinear_check_rejects_large_states() {
        let o = orbit(FRAC_PI_4);
        let r = ManeuverResult {
            times: vec![0.0, 1.0, 2.0],
            states: vec![StateVector::from_array([0.5, 0.0, 0.0, 0.0, 0.0, 0.0]); 3],
            controls: vec![[0.0; 3]; 3],
            final_norm_ratio: 1.0,
            energy: 0.0,
        };
        assert!(matches!(
            nonlinear_consistency(&o, &r),
            Err(ManeuverError::StateTooLarge { .. })
        ));
    }

    #[test]
    fn frozen_rates_give_zero_deviation() {
        let o = orbit(FRAC_PI_4);
        let x = StateVector::from_array([0.02, -0.03, 0.01, 0.0, 0.0, 0.0]);
        let r = ManeuverResult {
            times: (0..11).map(|i| i as f64 * 10.0).collect(),
            states: vec![x; 11],
            controls: vec![[0.0; 3]; 11],
            final_norm_ratio: 1.0,
            energy: 0.0,
        };
        assert_eq!(nonlinear_consistency(&o, &r).unwrap(), 0.0);
    }

    #[test]
    fn nonuniform_times_rejected() {
        let o = orbit(FRAC_PI_4);
        let r = ManeuverResult {
            times: vec![0.0, 1.0, 3.0],
            states: vec![StateVector::default(); 3],
            controls: vec![[0.0; 3]; 3],
            final_norm_ratio: 0.0,
            energy: 0.0,
        };
        assert_eq!(nonlinear_consistency(&o, &r), Err(ManeuverError::MalformedTrajectory));
    }

    #[test]
    fn repeated_runs_are_bit_identical() {
        let o = orbit(0.9);
        let run = || simulate_maneuver(&j543(), &o, &x0(), 0.0, o.period(), 1000, 401).unwrap();
        assert_eq!(run(), run());
    }
}
