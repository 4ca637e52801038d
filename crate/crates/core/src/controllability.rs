//! Controllability of the magnetically actuated attitude model.
//!
//! Three independent routes are provided:
//!
//! * the rank of `[K0 | K1 | K2]`, where `K_j` is the `j`-th derivative of
//!   `Phi(t, tau) B(tau)` with respect to `tau` at `tau = t`;
//! * the determinant of a fixed 6×6 submatrix of that concatenation at the
//!   quarter-orbit time `omega0 t_c = pi/2`, both assembled numerically and
//!   in factored form, which reduces to two conditions on the inertia;
//! * the finite-horizon controllability Gramian.
//!
//! For an orbit in the magnetic equatorial plane the field is constant and
//! the pitch axis receives no torque, so the system is never controllable.

use nalgebra::{Matrix3, Matrix6, Matrix6x3, SMatrix, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::model::{
    gravity_coefficients, influence_matrix, input_matrix_at, lift_lower_block, system_matrix,
    InertiaTensor, InfluenceMatrices, ModelError, OrbitConfig, SystemMatrices,
};
use crate::numerics::{expm, gramian_quadrature, svd_rank, NumericsError, RankResult};

pub type Matrix6x9 = SMatrix<f64, 6, 9>;
pub type Matrix6x18 = SMatrix<f64, 6, 18>;

/// Columns (zero-based) of `[K0 | K1 | K2]` used for the determinant test:
/// the first two columns of each block.
pub const SUBMATRIX_COLUMNS: [usize; 6] = [0, 1, 3, 4, 6, 7];

/// Eigenvalue ratio below which a Gramian is treated as singular.
pub const GRAMIAN_SINGULAR_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllabilityError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("orbit is not in the magnetic equatorial plane (i_m = {0} rad)")]
    NotEquatorial(f64),
    #[error("sin(i_m) cos(i_m) vanishes at i_m = {0} rad; the determinant test is degenerate")]
    DegenerateInclination(f64),
}

/// `K0(t)`, `K1(t)`, `K2(t)` of the rank criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMatrices {
    pub k0: Matrix6x3<f64>,
    pub k1: Matrix6x3<f64>,
    pub k2: Matrix6x3<f64>,
    pub t: f64,
}

impl KMatrices {
    /// `[K0 | K1 | K2]`
    pub fn concatenated(&self) -> Matrix6x9 {
        let mut out = Matrix6x9::zeros();
        out.fixed_view_mut::<6, 3>(0, 0).copy_from(&self.k0);
        out.fixed_view_mut::<6, 3>(0, 3).copy_from(&self.k1);
        out.fixed_view_mut::<6, 3>(0, 6).copy_from(&self.k2);
        out
    }
}

/// Matrix-product forms `K0 = B`, `K1 = -A B + B'`,
/// `K2 = A² B - 2 A B' + B''`.
pub fn k_matrices(
    j: &InertiaTensor,
    orbit: &OrbitConfig,
    t: f64,
) -> Result<KMatrices, ControllabilityError> {
    let sys = system_matrix(j, orbit.omega0())?;
    let infl = influence_matrix(j, orbit, t);
    Ok(k_matrices_product_form(&sys, &infl, t))
}

pub fn k_matrices_product_form(sys: &SystemMatrices, infl: &InfluenceMatrices, t: f64) -> KMatrices {
    let a = &sys.a;
    let b = lift_lower_block(&infl.b2_matrix);
    let bd = lift_lower_block(&infl.b2_dot);
    let bdd = lift_lower_block(&infl.b2_ddot);
    KMatrices {
        k0: b,
        k1: -a * b + bd,
        k2: a * a * b - 2.0 * a * bd + bdd,
        t,
    }
}

/// Block forms built from `Lambda1`, `Sigma1` and `B2` directly:
///
/// ```text
/// K1 = [ -B2/2              ;  -Sigma1 B2 + B2'                              ]
/// K2 = [ Sigma1 B2/2 - B2'  ;  Lambda1 B2/2 + Sigma1² B2 - 2 Sigma1 B2' + B2'' ]
/// ```
pub fn k_matrices_block_form(sys: &SystemMatrices, infl: &InfluenceMatrices, t: f64) -> KMatrices {
    let (l, s) = (&sys.lambda1, &sys.sigma1);
    let (b2, b2d, b2dd) = (&infl.b2_matrix, &infl.b2_dot, &infl.b2_ddot);
    let stack = |top: Matrix3<f64>, bottom: Matrix3<f64>| {
        let mut out = Matrix6x3::zeros();
        out.fixed_view_mut::<3, 3>(0, 0).copy_from(&top);
        out.fixed_view_mut::<3, 3>(3, 0).copy_from(&bottom);
        out
    };
    KMatrices {
        k0: stack(Matrix3::zeros(), *b2),
        k1: stack(-0.5 * b2, -s * b2 + b2d),
        k2: stack(
            0.5 * s * b2 - b2d,
            0.5 * l * b2 + s * s * b2 - 2.0 * s * b2d + b2dd,
        ),
        t,
    }
}

/// Numerical rank of `[K0 | K1 | K2]`.
pub fn rank_test(k: &KMatrices, rel_tol: f64) -> RankResult {
    svd_rank(&k.concatenated(), rel_tol)
}

fn lower_transform(sigma1: &Matrix3<f64>) -> Matrix6<f64> {
    let mut t = Matrix6::identity();
    t.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-2.0 * sigma1));
    t
}

/// `[[I, 0], [-2 Sigma1, I]] · [K0 | K1 | K2]`.
///
/// The left factor is unit lower-triangular, so the rank is unchanged. It
/// removes every `Sigma1` term from the lower blocks of `K1` and `K2`.
pub fn row_reduce(k: &KMatrices, sigma1: &Matrix3<f64>) -> Matrix6x9 {
    lower_transform(sigma1) * k.concatenated()
}

/// The row-reduced matrix with its upper three rows doubled:
///
/// ```text
/// | 0   -B2    Sigma1 B2 - 2 B2'   |
/// | B2   B2'   Lambda1 B2 / 2 + B2'' |
/// ```
///
/// Its determinant over [`SUBMATRIX_COLUMNS`] is eight times that of the
/// same columns of `[K0 | K1 | K2]`.
pub fn reduced_rank_matrix(k: &KMatrices, sigma1: &Matrix3<f64>) -> Matrix6x9 {
    let mut m = row_reduce(k, sigma1);
    m.fixed_view_mut::<3, 9>(0, 0).scale_mut(2.0);
    m
}

fn rel_close(a: &Matrix3<f64>, b: &Matrix3<f64>, tol: f64, scale: f64) -> bool {
    (a - b).abs().max() <= tol * scale
}

/// Checks that the row reduction preserves the rank of `[K0 | K1 | K2]` and
/// leaves `B2'` and `Lambda1 B2 / 2 + B2''` as the lower middle and lower
/// right blocks.
pub fn row_reduction_identity(
    k: &KMatrices,
    sys: &SystemMatrices,
    infl: &InfluenceMatrices,
    rel_tol: f64,
) -> bool {
    let reduced = row_reduce(k, &sys.sigma1);
    let original_rank = svd_rank(&k.concatenated(), rel_tol).rank;
    let reduced_rank = svd_rank(&reduced, rel_tol).rank;

    let middle = reduced.fixed_view::<3, 3>(3, 3).into_owned();
    let right = reduced.fixed_view::<3, 3>(3, 6).into_owned();
    let expected_right = 0.5 * sys.lambda1 * infl.b2_matrix + infl.b2_ddot;
    let scale = k.concatenated().abs().max().max(f64::MIN_POSITIVE);

    original_rank == reduced_rank
        && rel_close(&middle, &infl.b2_dot, 1e-12, scale)
        && rel_close(&right, &expected_right, 1e-12, scale)
}

/// `[B, AB, A²B, A³B, A⁴B, A⁵B]` for a constant pair.
pub fn controllability_matrix(a: &Matrix6<f64>, b: &Matrix6x3<f64>) -> Matrix6x18 {
    let mut out = Matrix6x18::zeros();
    let mut block = *b;
    for i in 0..6 {
        out.fixed_view_mut::<6, 3>(0, 3 * i).copy_from(&block);
        block = a * block;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquatorialCheck {
    /// Largest magnitude in the pitch-attitude row of the controllability matrix.
    pub second_row_max: f64,
    /// Largest magnitude anywhere in the controllability matrix.
    pub max_entry: f64,
    pub rank: RankResult,
    pub degenerate: bool,
}

/// Controllability-matrix test for an orbit in the magnetic equatorial
/// plane, where `B` is constant.
pub fn equatorial_check(
    j: &InertiaTensor,
    orbit: &OrbitConfig,
) -> Result<EquatorialCheck, ControllabilityError> {
    if !orbit.is_equatorial() {
        return Err(ControllabilityError::NotEquatorial(orbit.inclination_mag()));
    }
    let sys = system_matrix(j, orbit.omega0())?;
    let b = input_matrix_at(j, orbit, 0.0);
    let ctrb = controllability_matrix(&sys.a, &b);
    let second_row_max = ctrb.row(1).abs().max();
    let max_entry = ctrb.abs().max();
    let rank = svd_rank(&ctrb, crate::numerics::DEFAULT_RANK_TOL);
    let degenerate = second_row_max <= 1e-14 * max_entry && rank.rank <= 5;
    Ok(EquatorialCheck {
        second_row_max,
        max_entry,
        rank,
        degenerate,
    })
}

/// True iff the pitch-attitude row of `[B, AB, ..., A⁵B]` vanishes and the
/// matrix is rank deficient.
pub fn equatorial_degeneracy(
    j: &InertiaTensor,
    orbit: &OrbitConfig,
) -> Result<bool, ControllabilityError> {
    Ok(equatorial_check(j, orbit)?.degenerate)
}

/// Signed residuals of the two inertia conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticConditions {
    /// `J33 - J22`, kg·m².
    pub cond1_residual: f64,
    /// `J22 (J11 - J22 + J33) - 6 J33 (J33 - J11)`, (kg·m²)².
    pub cond2_residual: f64,
    pub cond1_holds: bool,
    pub cond2_holds: bool,
}

impl AnalyticConditions {
    pub fn both_hold(&self) -> bool {
        self.cond1_holds && self.cond2_holds
    }
}

pub fn analytic_conditions(j: &InertiaTensor) -> AnalyticConditions {
    let (j11, j22, j33) = (j.j11(), j.j22(), j.j33());
    let cond1_residual = j33 - j22;
    let cond2_residual = j22 * (j11 - j22 + j33) - 6.0 * j33 * (j33 - j11);
    let jmax = j.max_moment();
    AnalyticConditions {
        cond1_residual,
        cond2_residual,
        cond1_holds: cond1_residual.abs() > 1e-12 * jmax,
        cond2_holds: cond2_residual.abs() > 1e-12 * jmax * jmax,
    }
}

fn require_nondegenerate(orbit: &OrbitConfig) -> Result<(), ControllabilityError> {
    let (s, c) = orbit.inclination_mag().sin_cos();
    if (s * c).abs() <= 1e-12 {
        Err(ControllabilityError::DegenerateInclination(orbit.inclination_mag()))
    } else {
        Ok(())
    }
}

fn submatrix(m: &Matrix6x9) -> Matrix6<f64> {
    let mut out = Matrix6::zeros();
    for (dst, &src) in SUBMATRIX_COLUMNS.iter().enumerate() {
        out.set_column(dst, &m.column(src));
    }
    out
}

/// Determinant of [`SUBMATRIX_COLUMNS`] of the raw `[K0 | K1 | K2]` at the
/// quarter-orbit time.
pub fn raw_submatrix_determinant(
    j: &InertiaTensor,
    orbit: &OrbitConfig,
) -> Result<f64, ControllabilityError> {
    require_nondegenerate(orbit)?;
    let k = k_matrices(j, orbit, orbit.quarter_orbit_time())?;
    Ok(submatrix(&k.concatenated()).determinant())
}

/// Determinant of the selected columns of [`reduced_rank_matrix`] at the
/// quarter-orbit time, computed two ways: numerically by LU, and from the
/// factored product
///
/// ```text
/// -b42 (f64 b42 - 2 b62') b51 [ b51 b62' f46 b61
///                               - b42 (f52 b51 / 2 + b51'') b61
///                               + f63 b61 b42 b51 / 2 ]
/// ```
///
/// Returns `(numeric, factored)`.
pub fn submatrix_determinant(
    j: &InertiaTensor,
    orbit: &OrbitConfig,
) -> Result<(f64, f64), ControllabilityError> {
    require_nondegenerate(orbit)?;
    let tc = orbit.quarter_orbit_time();
    let sys = system_matrix(j, orbit.omega0())?;
    let infl = influence_matrix(j, orbit, tc);
    let k = k_matrices_product_form(&sys, &infl, tc);
    let numeric = submatrix(&reduced_rank_matrix(&k, &sys.sigma1)).determinant();

    let f = gravity_coefficients(j, orbit.omega0())?;
    let (b42, b51) = (infl.b42(), infl.b51());
    let b62_dot = infl.b2_dot[(2, 1)];
    let factored =
        -b42 * (f.f64 * b42 - 2.0 * b62_dot) * b51 * bracket_from_entries(&f, &infl);
    Ok((numeric, factored))
}

fn bracket_from_entries(
    f: &crate::model::GravityGradientCoefficients,
    infl: &InfluenceMatrices,
) -> f64 {
    let (b42, b51, b61) = (infl.b42(), infl.b51(), infl.b61());
    let b62_dot = infl.b2_dot[(2, 1)];
    let b51_ddot = infl.b2_ddot[(1, 0)];
    b51 * b62_dot * f.f46 * b61 - b42 * (0.5 * f.f52 * b51 + b51_ddot) * b61
        + 0.5 * f.f63 * b61 * b42 * b51
}

/// The second determinant factor
/// `b51 b62' f46 b61 - b42 (f52 b51/2 + b51'') b61 + f63 b61 b42 b51/2`
/// evaluated from the matrix entries at the quarter-orbit time.
pub fn bracket_term(j: &InertiaTensor, orbit: &OrbitConfig) -> Result<f64, ControllabilityError> {
    let f = gravity_coefficients(j, orbit.omega0())?;
    let infl = influence_matrix(j, orbit, orbit.quarter_orbit_time());
    Ok(bracket_from_entries(&f, &infl))
}

/// Closed form of [`bracket_term`]:
/// `2 mu^3 w0^2 / (a^9 J11 J22^2 J33^2) sin^2(i) cos(i) [J22 (J11 - J22 + J33) - 6 J33 (J33 - J11)]`.
pub fn closed_form_combination(j: &InertiaTensor, orbit: &OrbitConfig) -> f64 {
    let (j11, j22, j33) = (j.j11(), j.j22(), j.j33());
    let (s, c) = orbit.inclination_mag().sin_cos();
    let k = orbit.field_scale();
    let w = orbit.omega0();
    2.0 * k.powi(3) * w * w / (j11 * j22 * j22 * j33 * j33)
        * s
        * s
        * c
        * analytic_conditions(j).cond2_residual
}

/// Closed form of `f64 b42(t_c) - 2 b62'(t_c)`:
/// `2 mu w0 sin(i) (J33 - J22) / (a^3 J11 J33)`.
pub fn condition1_value(j: &InertiaTensor, orbit: &OrbitConfig) -> f64 {
    let (j11, j22, j33) = (j.j11(), j.j22(), j.j33());
    2.0 * orbit.field_scale() * orbit.omega0() * orbit.inclination_mag().sin() * (j33 - j22)
        / (j11 * j33)
}

/// `f64 b42(t_c) - 2 b62'(t_c)` from the matrix entries.
pub fn condition1_from_entries(
    j: &InertiaTensor,
    orbit: &OrbitConfig,
) -> Result<f64, ControllabilityError> {
    let f = gravity_coefficients(j, orbit.omega0())?;
    let infl = influence_matrix(j, orbit, orbit.quarter_orbit_time());
    Ok(f.f64 * infl.b42() - 2.0 * infl.b2_dot[(2, 1)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gramian {
    pub matrix: Matrix6<f64>,
    /// Descending.
    pub eigenvalues: [f64; 6],
    pub eigenvectors: Matrix6<f64>,
    pub t0: f64,
    pub tf: f64,
}

impl Gramian {
    /// `lambda_min / lambda_max`, or 0 for a zero Gramian.
    pub fn condition_ratio(&self) -> f64 {
        if self.eigenvalues[0] > 0.0 {
            self.eigenvalues[5] / self.eigenvalues[0]
        } else {
            0.0
        }
    }

    pub fn is_singular(&self) -> bool {
        self.condition_ratio() <= GRAMIAN_SINGULAR_RATIO
    }
}

/// Sorted symmetric eigendecomposition.
pub(crate) fn sorted_eigen(m: &Matrix6<f64>) -> ([f64; 6], Matrix6<f64>) {
    let eig = SymmetricEigen::new(*m);
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut values = [0.0; 6];
    let mut vectors = Matrix6::zeros();
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `W(t0, tf) = ∫ Phi(t0, tau) B(tau) B(tau)ᵀ Phi(t0, tau)ᵀ dtau` by
/// composite Simpson on `nodes` points.
pub fn gramian(
    j: &InertiaTensor,
    orbit: &OrbitConfig,
    t0: f64,
    tf: f64,
    nodes: usize,
) -> Result<Gramian, ControllabilityError> {
    if !(tf > t0) {
        return Err(NumericsError::EmptyInterval { t0, tf }.into());
    }
    let sys = system_matrix(j, orbit.omega0())?;
    // Validate the expm input once so the integrand itself cannot fail.
    expm(&sys.a, t0 - tf)?;
    let integrand = |tau: f64| {
        let p = expm(&sys.a, t0 - tau).expect("validated above") * input_matrix_at(j, orbit, tau);
        p * p.transpose()
    };
    let matrix = gramian_quadrature(integrand, t0, tf, nodes)?;
    let (eigenvalues, eigenvectors) = sorted_eigen(&matrix);
    Ok(Gramian {
        matrix,
        eigenvalues,
        eigenvectors,
        t0,
        tf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Controllable,
    NotControllableEquatorial,
    ConditionsViolated,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Controllable => "Controllable",
            Verdict::NotControllableEquatorial => "NotControllableEquatorial",
            Verdict::ConditionsViolated => "ConditionsViolated",
            Verdict::Inconclusive => "Inconclusive",
        };
        f.write_str(s)
    }
}

/// Numerical settings of a full analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisSettings {
    pub rank_tol: f64,
    pub gramian_nodes: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            rank_tol: crate::numerics::DEFAULT_RANK_TOL,
            gramian_nodes: 4001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControllabilityReport {
    pub cond1_residual: f64,
    pub cond2_residual: f64,
    pub cond1_holds: bool,
    pub cond2_holds: bool,
    pub equatorial: bool,
    /// Evaluation time of the rank test, `omega0 t_c = pi/2`.
    pub t_c: f64,
    pub k_rank: RankResult,
    /// `None` when `sin(i_m) cos(i_m) = 0`.
    pub submatrix_det: Option<f64>,
    pub factored_det: Option<f64>,
    /// Closed-form value of the bracketed determinant factor.
    pub closed_form_det_factor: f64,
    pub condition1_value: f64,
    pub gramian_eigs: [f64; 6],
    pub gramian_ratio: f64,
    pub verdict: Verdict,
}

/// Runs every check over one orbit starting at `t = 0`.
pub fn analyze(
    j: &InertiaTensor,
    orbit: &OrbitConfig,
    settings: &AnalysisSettings,
) -> Result<ControllabilityReport, ControllabilityError> {
    let conditions = analytic_conditions(j);
    let equatorial = orbit.is_equatorial();
    let t_c = orbit.quarter_orbit_time();
    let k_rank = rank_test(&k_matrices(j, orbit, t_c)?, settings.rank_tol);

    let (submatrix_det, factored_det) = match submatrix_determinant(j, orbit) {
        Ok((n, f)) => (Some(n), Some(f)),
        Err(ControllabilityError::DegenerateInclination(_)) => (None, None),
        Err(e) => return Err(e),
    };
    let w = gramian(j, orbit, 0.0, orbit.period(), settings.gramian_nodes)?;

    let verdict = if equatorial {
        Verdict::NotControllableEquatorial
    } else if conditions.both_hold() {
        if k_rank.rank == 6 {
            Verdict::Controllable
        } else {
            Verdict::Inconclusive
        }
    } else if w.is_singular() {
        Verdict::ConditionsViolated
    } else {
        Verdict::Inconclusive
    };

    Ok(ControllabilityReport {
        cond1_residual: conditions.cond1_residual,
        cond2_residual: conditions.cond2_residual,
        cond1_holds: conditions.cond1_holds,
        cond2_holds: conditions.cond2_holds,
        equatorial,
        t_c,
        k_rank,
        submatrix_det,
        factored_det,
        closed_form_det_factor: closed_form_combination(j, orbit),
        condition1_value: condition1_value(j, orbit),
        gramian_eigs: w.eigenvalues,
        gramian_ratio: w.condition_ratio(),
        verdict,
    })
}
