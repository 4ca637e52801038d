//! Linearized attitude model of a nadir-pointing spacecraft actuated by
//! magnetic coils.
//!
//! The state is the reduced quaternion `(q1, q2, q3)` of the body frame with
//! respect to the LVLH frame, followed by the body rate `(w1, w2, w3)`
//! relative to LVLH. The scalar quaternion part is never stored; it is
//! rebuilt as `sqrt(1 - |q|^2)` wherever the nonlinear kinematics need it.
//!
//! All quantities are SI: m, s, kg·m², T, A·m², N·m. The dipole strength is
//! in Wb·m so that `mu_f / a^3` is a flux density in tesla.

use nalgebra::{Matrix3, Matrix6, Matrix6x3, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Earth dipole strength, Wb·m.
pub const DEFAULT_DIPOLE_STRENGTH: f64 = 7.9e15;

/// Earth gravitational parameter, m³/s².
pub const EARTH_MU: f64 = 3.986004418e14;

/// Slack allowed on `|q|^2 <= 1` before the kinematics reject a state.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("magnetic inclination must lie in [0, pi], got {0} rad")]
    InclinationOutOfRange(f64),
    #[error("dipole strength must be non-negative, got {0}")]
    NegativeDipole(f64),
    #[error("vector quaternion norm squared {0} exceeds one")]
    QuaternionNormExceedsOne(f64),
}

fn finite(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ModelError::NonFinite { name, value })
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, ModelError> {
    finite(name, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(ModelError::NonPositive { name, value })
    }
}

/// Diagonal inertia matrix `diag(J11, J22, J33)` in kg·m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InertiaTensor {
    j11: f64,
    j22: f64,
    j33: f64,
}

impl InertiaTensor {
    pub fn new(j11: f64, j22: f64, j33: f64) -> Result<Self, ModelError> {
        Ok(Self {
            j11: positive("J11", j11)?,
            j22: positive("J22", j22)?,
            j33: positive("J33", j33)?,
        })
    }

    pub fn j11(&self) -> f64 {
        self.j11
    }

    pub fn j22(&self) -> f64 {
        self.j22
    }

    pub fn j33(&self) -> f64 {
        self.j33
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.j11, self.j22, self.j33]
    }

    /// Largest principal moment; used to scale zero thresholds.
    pub fn max_moment(&self) -> f64 {
        self.j11.max(self.j22).max(self.j33)
    }
}

/// Circular orbit and dipole field parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitConfig {
    omega0: f64,
    semi_major_axis: f64,
    inclination_mag: f64,
    dipole_strength: f64,
}

impl OrbitConfig {
    pub fn new(
        omega0: f64,
        semi_major_axis: f64,
        inclination_mag: f64,
        dipole_strength: f64,
    ) -> Result<Self, ModelError> {
        let orbit = Self::with_any_dipole(omega0, semi_major_axis, inclination_mag, dipole_strength)?;
        positive("dipole strength", dipole_strength)?;
        Ok(orbit)
    }

    /// Like [`OrbitConfig::new`] but also accepts a zero dipole strength.
    ///
    /// A field-free orbit is physically meaningless but is the natural
    /// degenerate case for checking that every input-dependent quantity
    /// vanishes.
    pub fn with_any_dipole(
        omega0: f64,
        semi_major_axis: f64,
        inclination_mag: f64,
        dipole_strength: f64,
    ) -> Result<Self, ModelError> {
        positive("orbit rate", omega0)?;
        positive("semi-major axis", semi_major_axis)?;
        finite("magnetic inclination", inclination_mag)?;
        if !(0.0..=std::f64::consts::PI).contains(&inclination_mag) {
            return Err(ModelError::InclinationOutOfRange(inclination_mag));
        }
        finite("dipole strength", dipole_strength)?;
        if dipole_strength < 0.0 {
            return Err(ModelError::NegativeDipole(dipole_strength));
        }
        Ok(Self {
            omega0,
            semi_major_axis,
            inclination_mag,
            dipole_strength,
        })
    }

    /// Orbit with the Keplerian rate `sqrt(mu_earth / a^3)`.
    pub fn with_keplerian_rate(
        semi_major_axis: f64,
        inclination_mag: f64,
        dipole_strength: f64,
    ) -> Result<Self, ModelError> {
        let a = positive("semi-major axis", semi_major_axis)?;
        Self::new(keplerian_rate(a), a, inclination_mag, dipole_strength)
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn semi_major_axis(&self) -> f64 {
        self.semi_major_axis
    }

    pub fn inclination_mag(&self) -> f64 {
        self.inclination_mag
    }

    pub fn dipole_strength(&self) -> f64 {
        self.dipole_strength
    }

    /// Orbital period `2 pi / omega0`, s.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega0
    }

    /// Field magnitude scale `mu_f / a^3`, T.
    pub fn field_scale(&self) -> f64 {
        self.dipole_strength / self.semi_major_axis.powi(3)
    }

    /// The time `t_c` with `omega0 * t_c = pi / 2`.
    pub fn quarter_orbit_time(&self) -> f64 {
        std::f64::consts::FRAC_PI_2 / self.omega0
    }

    /// Whether the orbit lies in the magnetic equatorial plane, so that the
    /// field is constant along the orbit.
    pub fn is_equatorial(&self) -> bool {
        self.inclination_mag.sin().abs() <= 1e-12
    }
}

pub fn keplerian_rate(semi_major_axis: f64) -> f64 {
    (EARTH_MU / semi_major_axis.powi(3)).sqrt()
}

/// Gravity-gradient coefficients of the linearized model.
///
/// `f41`, `f52`, `f63` are in 1/s², `f46`, `f64` in 1/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GravityGradientCoefficients {
    pub f41: f64,
    pub f46: f64,
    pub f64: f64,
    pub f52: f64,
    pub f63: f64,
}

pub fn gravity_coefficients(
    j: &InertiaTensor,
    omega0: f64,
) -> Result<GravityGradientCoefficients, ModelError> {
    let w = positive("orbit rate", omega0)?;
    let (j11, j22, j33) = (j.j11, j.j22, j.j33);
    let w2 = w * w;
    Ok(GravityGradientCoefficients {
        f41: 8.0 * (j33 - j22) * w2 / j11,
        f46: (-j11 + j22 - j33) * w / j11,
        f64: (j11 - j22 + j33) * w / j33,
        f52: 6.0 * (j33 - j11) * w2 / j22,
        f63: 2.0 * (j11 - j22) * w2 / j33,
    })
}

/// The constant state matrix together with its lower blocks.
///
/// ```text
/// A = | 0      I/2    |
///     | Lambda1 Sigma1 |
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemMatrices {
    pub a: Matrix6<f64>,
    /// `diag(f41, f52, f63)`
    pub lambda1: Matrix3<f64>,
    /// `f46` at (1,3), `f64` at (3,1)
    pub sigma1: Matrix3<f64>,
}

pub fn system_matrix(j: &InertiaTensor, omega0: f64) -> Result<SystemMatrices, ModelError> {
    let f = gravity_coefficients(j, omega0)?;
    let lambda1 = Matrix3::from_diagonal(&Vector3::new(f.f41, f.f52, f.f63));
    let mut sigma1 = Matrix3::zeros();
    sigma1[(0, 2)] = f.f46;
    sigma1[(2, 0)] = f.f64;

    let mut a = Matrix6::zeros();
    a.fixed_view_mut::<3, 3>(0, 3).fill_with_identity();
    a.fixed_view_mut::<3, 3>(0, 3).scale_mut(0.5);
    a.fixed_view_mut::<3, 3>(3, 0).copy_from(&lambda1);
    a.fixed_view_mut::<3, 3>(3, 3).copy_from(&sigma1);
    Ok(SystemMatrices { a, lambda1, sigma1 })
}

/// Geomagnetic field in orbit coordinates, T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl FieldSample {
    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.b1, self.b2, self.b3)
    }
}

/// Tilted-dipole field along a circular orbit, with `t = 0` at the
/// ascending crossing of the magnetic equator.
pub fn magnetic_field(orbit: &OrbitConfig, t: f64) -> FieldSample {
    let k = orbit.field_scale();
    let (s, c) = (orbit.omega0 * t).sin_cos();
    let (si, ci) = orbit.inclination_mag.sin_cos();
    FieldSample {
        b1: k * c * si,
        b2: -k * ci,
        b3: 2.0 * k * s * si,
    }
}

/// Lower 3×3 block `B2(t)` of the input matrix and its first two time
/// derivatives. Units are T/(kg·m²) (and per s, per s² for the derivatives).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluenceMatrices {
    pub b2_matrix: Matrix3<f64>,
    pub b2_dot: Matrix3<f64>,
    pub b2_ddot: Matrix3<f64>,
}

impl InfluenceMatrices {
    pub fn b42(&self) -> f64 {
        self.b2_matrix[(0, 1)]
    }
    pub fn b43(&self) -> f64 {
        self.b2_matrix[(0, 2)]
    }
    pub fn b51(&self) -> f64 {
        self.b2_matrix[(1, 0)]
    }
    pub fn b53(&self) -> f64 {
        self.b2_matrix[(1, 2)]
    }
    pub fn b61(&self) -> f64 {
        self.b2_matrix[(2, 0)]
    }
    pub fn b62(&self) -> f64 {
        self.b2_matrix[(2, 1)]
    }
}

/// Entries `b42, b43, b51, b53, b61, b62` placed in their 3×3 slots.
fn off_diagonal(b42: f64, b43: f64, b51: f64, b53: f64, b61: f64, b62: f64) -> Matrix3<f64> {
    Matrix3::new(0.0, b42, b43, b51, 0.0, b53, b61, b62, 0.0)
}

/// `B2(t)`, `B2'(t)` and `B2''(t)` from the closed-form entries.
///
/// The derivatives are differentiated by hand; nothing here is numerical.
pub fn influence_matrix(j: &InertiaTensor, orbit: &OrbitConfig, t: f64) -> InfluenceMatrices {
    let k = orbit.field_scale();
    let w = orbit.omega0;
    let (si, ci) = orbit.inclination_mag.sin_cos();
    let (s, c) = (w * t).sin_cos();
    let (j11, j22, j33) = (j.j11, j.j22, j.j33);

    // Amplitudes of the sin(w t) and cos(w t) carrying entries.
    let a42 = 2.0 * k * si / j11;
    let a51 = -2.0 * k * si / j22;
    let a53 = k * si / j22;
    let a62 = -k * si / j33;
    let b43 = k * ci / j11;
    let b61 = -k * ci / j33;

    let b2_matrix = off_diagonal(a42 * s, b43, a51 * s, a53 * c, b61, a62 * c);
    let b2_dot = off_diagonal(
        a42 * w * c,
        0.0,
        a51 * w * c,
        -a53 * w * s,
        0.0,
        -a62 * w * s,
    );
    let w2 = w * w;
    let b2_ddot = off_diagonal(
        -a42 * w2 * s,
        0.0,
        -a51 * w2 * s,
        -a53 * w2 * c,
        0.0,
        -a62 * w2 * c,
    );
    InfluenceMatrices {
        b2_matrix,
        b2_dot,
        b2_ddot,
    }
}

/// Stack a 3×3 lower block under three zero rows.
pub fn lift_lower_block(block: &Matrix3<f64>) -> Matrix6x3<f64> {
    let mut out = Matrix6x3::zeros();
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(block);
    out
}

/// The 6×3 input matrix `B(t) = [0; B2(t)]`.
pub fn full_input_matrix(infl: &InfluenceMatrices) -> Matrix6x3<f64> {
    lift_lower_block(&infl.b2_matrix)
}

/// Convenience: `B(t)` straight from the physical parameters.
pub fn input_matrix_at(j: &InertiaTensor, orbit: &OrbitConfig, t: f64) -> Matrix6x3<f64> {
    full_input_matrix(&influence_matrix(j, orbit, t))
}

/// Coil torque `u = m × b`, N·m.
pub fn magnetic_torque(m: &Vector3<f64>, b: &FieldSample) -> Vector3<f64> {
    m.cross(&b.to_vector())
}

/// Reduced-quaternion attitude and body rate relative to LVLH.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl StateVector {
    pub fn new(q: Vector3<f64>, w: Vector3<f64>) -> Self {
        Self {
            q1: q.x,
            q2: q.y,
            q3: q.z,
            w1: w.x,
            w2: w.y,
            w3: w.z,
        }
    }

    pub fn from_array(x: [f64; 6]) -> Self {
        Self::from_vector(&Vector6::from(x))
    }

    pub fn from_vector(x: &Vector6<f64>) -> Self {
        Self {
            q1: x[0],
            q2: x[1],
            q3: x[2],
            w1: x[3],
            w2: x[4],
            w3: x[5],
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.q1, self.q2, self.q3, self.w1, self.w2, self.w3)
    }

    pub fn quaternion(&self) -> Vector3<f64> {
        Vector3::new(self.q1, self.q2, self.q3)
    }

    pub fn rate(&self) -> Vector3<f64> {
        Vector3::new(self.w1, self.w2, self.w3)
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Scalar quaternion part `sqrt(1 - |q|^2)`.
pub fn scalar_part(q: &Vector3<f64>) -> Result<f64, ModelError> {
    let n2 = q.norm_squared();
    if !(n2 <= 1.0 + QUATERNION_NORM_TOLERANCE) {
        return Err(ModelError::QuaternionNormExceedsOne(n2));
    }
    Ok((1.0 - n2).max(0.0).sqrt())
}

/// Nonlinear reduced kinematics `q_dot = M(q) w / 2` with
///
/// ```text
///        | q0  -q3   q2 |
/// M(q) = | q3   q0  -q1 |
///        |-q2   q1   q0 |
/// ```
pub fn reduced_kinematics(x: &StateVector) -> Result<Vector3<f64>, ModelError> {
    quaternion_rate(&x.quaternion(), &x.rate())
}

pub(crate) fn quaternion_rate(q: &Vector3<f64>, w: &Vector3<f64>) -> Result<Vector3<f64>, ModelError> {
    let q0 = scalar_part(q)?;
    let m = Matrix3::new(q0, -q.z, q.y, q.z, q0, -q.x, -q.y, q.x, q0);
    Ok(0.5 * m * w)
}
