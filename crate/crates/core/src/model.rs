//! Rigid-body model of a four-wheel independently driven and steered (4WIDS)
//! mobile robot with coupled axle steering.
//!
//! The configuration lives in `R^6`: planar pose `(x, y, theta)`, a common
//! wheel-rotation angle `phi` shared by the four driven wheels, and two axle
//! steering angles `(delta_f, delta_r)`. Rolling without slipping removes
//! three degrees of freedom, leaving a body-velocity vector in `R^3`:
//! wheel speed `v_w` and the two steering rates `(omega_f, omega_r)`.
//!
//! Everything downstream (control, certification, simulation) works with the
//! reduced dynamics
//!
//! ```text
//!     M~(q) v_dot + C~(q, q_dot) v = B~(q) tau - f~(q, q_dot)
//! ```
//!
//! produced by projecting the full constrained dynamics through the
//! kinematic distribution `q_dot = J(q) v`. This module provides `J`, the
//! constraint matrix annihilating it, the full-coordinate inertia and input
//! matrices, and closed forms for the reduced matrices together with the
//! projection of generalized disturbance forces.

use nalgebra::{Matrix3, SMatrix, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Physical parameters of the robot platform.
///
/// `coupling` is the steering-to-yaw coupling coefficient `a / (2a^2 + 2b^2)`
/// and `i_yaw` the total yaw inertia about the body center (chassis plus the
/// four wheel assemblies at their mounting offsets). Both are stored
/// explicitly rather than recomputed so that a parameter set read from a
/// datasheet is reproduced exactly; [`RobotParams::consistency_warnings`]
/// reports when the stored values drift from the geometric ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotParams {
    /// Wheel radius `r` (m).
    pub r: f64,
    /// Half the longitudinal wheel separation `a` (m).
    pub a: f64,
    /// Half the lateral wheel separation `b` (m).
    pub b: f64,
    /// Total platform mass `m`, wheels included (kg).
    pub m: f64,
    /// Mass of a single wheel assembly (kg).
    pub m_w: f64,
    /// Yaw inertia of the chassis alone (kg m^2).
    pub i_theta: f64,
    /// Spin inertia of a single wheel about its drive axis (kg m^2).
    pub i_phi: f64,
    /// Steering inertia of one axle pair about the vertical (kg m^2).
    pub i_delta: f64,
    /// Steering-to-yaw coupling coefficient `a / (2a^2 + 2b^2)` (1/m).
    pub coupling: f64,
    /// Total yaw inertia `I` used by the reduced model (kg m^2).
    pub i_yaw: f64,
}

impl RobotParams {
    /// Parameters of the reference experimental platform.
    pub fn reference_platform() -> Self {
        Self {
            r: 0.0254,
            a: 0.1125,
            b: 0.1125,
            m: 3.50,
            m_w: 0.03203,
            i_theta: 0.03333,
            i_phi: 1.03e-5,
            i_delta: 0.002,
            coupling: 20.0 / 9.0,
            i_yaw: 0.0365,
        }
    }

    /// Rejects parameter sets that make the reduced model singular or
    /// meaningless (non-positive masses, inertias, or geometry).
    pub fn validate(&self) -> Result<(), ModelError> {
        let checks = [
            ("r", self.r),
            ("a", self.a),
            ("b", self.b),
            ("m", self.m),
            ("m_w", self.m_w),
            ("i_theta", self.i_theta),
            ("i_phi", self.i_phi),
            ("i_delta", self.i_delta),
            ("coupling", self.coupling),
            ("i_yaw", self.i_yaw),
        ];
        for (name, value) in checks {
            if !value.is_finite() || value <= 0.0 {
                return Err(ModelError::NonPositiveParameter {
                    name,
                    value,
                });
            }
        }
        Ok(())
    }

    /// Compares the stored derived quantities (`coupling`, `i_yaw`) against
    /// the values implied by the geometry and returns a human-readable
    /// warning for each that differs by more than 0.1% relative. The stored
    /// values stay authoritative either way.
    pub fn consistency_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        let coupling_geom = self.a / (2.0 * (self.a * self.a + self.b * self.b));
        let rel = ((self.coupling - coupling_geom) / coupling_geom).abs();
        if rel > 1e-3 {
            warnings.push(format!(
                "coupling coefficient {} differs from geometric value {} by {:.2}% relative",
                self.coupling,
                coupling_geom,
                rel * 100.0
            ));
        }
        let i_geom =
            self.i_theta + 4.0 * self.m_w * (self.a * self.a + self.b * self.b);
        let rel = ((self.i_yaw - i_geom) / i_geom).abs();
        if rel > 1e-3 {
            warnings.push(format!(
                "yaw inertia {} differs from chassis-plus-wheels value {} by {:.2}% relative",
                self.i_yaw,
                i_geom,
                rel * 100.0
            ));
        }
        warnings
    }
}

/// Errors produced when validating model inputs.
#[derive(Debug, Error)]
pub enum ModelError {
    /// A physical parameter was zero, negative, or non-finite.
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    NonPositiveParameter {
        /// Field name within [`RobotParams`].
        name: &'static str,
        /// Offending value.
        value: f64,
    },
}

/// Full configuration `q = (x, y, theta, phi, delta_f, delta_r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigState {
    /// Body position, world frame (m).
    pub x: f64,
    /// Body position, world frame (m).
    pub y: f64,
    /// Heading (rad).
    pub theta: f64,
    /// Common wheel rotation angle (rad).
    pub phi: f64,
    /// Front-axle steering angle (rad).
    pub delta_f: f64,
    /// Rear-axle steering angle (rad).
    pub delta_r: f64,
}

impl ConfigState {
    /// All coordinates zero.
    pub fn zero() -> Self {
        Self::from_vector(Vector6::zeros())
    }

    /// Packs the configuration into a column vector.
    pub fn to_vector(self) -> Vector6<f64> {
        Vector6::new(
            self.x,
            self.y,
            self.theta,
            self.phi,
            self.delta_f,
            self.delta_r,
        )
    }

    /// Unpacks a column vector into named coordinates.
    pub fn from_vector(q: Vector6<f64>) -> Self {
        Self {
            x: q[0],
            y: q[1],
            theta: q[2],
            phi: q[3],
            delta_f: q[4],
            delta_r: q[5],
        }
    }
}

/// Reduced body velocity `v = (v_w, omega_f, omega_r)`: common wheel speed
/// (m/s at the contact point) and the two steering rates (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyVelocity {
    /// Common wheel ground speed (m/s).
    pub v_w: f64,
    /// Front steering rate (rad/s).
    pub omega_f: f64,
    /// Rear steering rate (rad/s).
    pub omega_r: f64,
}

impl BodyVelocity {
    /// All components zero.
    pub fn zero() -> Self {
        Self::from_vector(Vector3::zeros())
    }

    /// Packs the velocity into a column vector.
    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.v_w, self.omega_f, self.omega_r)
    }

    /// Unpacks a column vector into named components.
    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self {
            v_w: v[0],
            omega_f: v[1],
            omega_r: v[2],
        }
    }
}

/// Actuation wrench `tau = (tau_w, tau_f, tau_r)`: drive torque per wheel
/// and steering torque per axle motor (N m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wrench {
    /// Drive torque applied at each of the four wheels (N m).
    pub tau_w: f64,
    /// Torque of each of the two front steering motors (N m).
    pub tau_f: f64,
    /// Torque of each of the two rear steering motors (N m).
    pub tau_r: f64,
}

impl Wrench {
    /// All components zero.
    pub fn zero() -> Self {
        Self::from_vector(Vector3::zeros())
    }

    /// Packs the wrench into a column vector.
    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.tau_w, self.tau_f, self.tau_r)
    }

    /// Unpacks a column vector into named components.
    pub fn from_vector(tau: Vector3<f64>) -> Self {
        Self {
            tau_w: tau[0],
            tau_f: tau[1],
            tau_r: tau[2],
        }
    }
}

/// Direction cosines shared by the kinematic maps: with `sigma = delta + theta`
/// the first column of `J` is built from averages of `cos sigma` / `sin sigma`
/// over the two axles and the steering-to-yaw coupling term.
fn column_terms(q: &ConfigState, p: &RobotParams) -> (f64, f64, f64) {
    let sigma_f = q.delta_f + q.theta;
    let sigma_r = q.delta_r + q.theta;
    let a1 = 0.5 * (sigma_f.sin() + sigma_r.sin());
    let a2 = 0.5 * (sigma_f.cos() + sigma_r.cos());
    let a3 = p.coupling * (q.delta_f.sin() - q.delta_r.sin());
    (a1, a2, a3)
}

/// Kinematic distribution `J(q)` mapping body velocity to configuration
/// rates, `q_dot = J(q) v`. Its first column carries the wheel-speed channel
/// (planar translation, coupled yaw, and wheel spin at `1/r`); the remaining
/// columns pass the steering rates straight through.
pub fn jacobian(q: &ConfigState, p: &RobotParams) -> SMatrix<f64, 6, 3> {
    let (a1, a2, a3) = column_terms(q, p);
    let mut j = SMatrix::<f64, 6, 3>::zeros();
    j[(0, 0)] = a2;
    j[(1, 0)] = a1;
    j[(2, 0)] = a3;
    j[(3, 0)] = 1.0 / p.r;
    j[(4, 1)] = 1.0;
    j[(5, 2)] = 1.0;
    j
}

/// Time derivative of [`jacobian`] along the motion `(q, v)`. The heading
/// rate is recovered from the kinematics itself (`theta_dot = a3 * v_w`), so
/// the result is a function of the reduced state alone.
pub fn jacobian_rate(q: &ConfigState, v: &BodyVelocity, p: &RobotParams) -> SMatrix<f64, 6, 3> {
    let (_, _, a3) = column_terms(q, p);
    let theta_dot = a3 * v.v_w;
    let sigma_f = q.delta_f + q.theta;
    let sigma_r = q.delta_r + q.theta;
    let sigma_f_dot = v.omega_f + theta_dot;
    let sigma_r_dot = v.omega_r + theta_dot;
    let mut jd = SMatrix::<f64, 6, 3>::zeros();
    // d/dt of the averaged direction cosines and of the coupling term.
    jd[(0, 0)] = -0.5 * (sigma_f.sin() * sigma_f_dot + sigma_r.sin() * sigma_r_dot);
    jd[(1, 0)] = 0.5 * (sigma_f.cos() * sigma_f_dot + sigma_r.cos() * sigma_r_dot);
    jd[(2, 0)] = p.coupling * (q.delta_f.cos() * v.omega_f - q.delta_r.cos() * v.omega_r);
    jd
}

/// Pfaffian constraint matrix `A(q)` of the rolling constraints, chosen so
/// that `A(q) J(q) = 0` identically. Its three rows annihilate the
/// wheel-speed column of `J` pairwise; the steering columns are annihilated
/// because the last three entries of every row vanish.
pub fn constraint_matrix(q: &ConfigState, p: &RobotParams) -> SMatrix<f64, 3, 6> {
    let (a1, a2, a3) = column_terms(q, p);
    let mut am = SMatrix::<f64, 3, 6>::zeros();
    am[(0, 0)] = a1;
    am[(0, 1)] = -a2;
    am[(1, 0)] = a3;
    am[(1, 2)] = -a2;
    am[(2, 1)] = a3;
    am[(2, 2)] = -a1;
    am
}

/// Full-coordinate inertia matrix `M = diag(m, m, I, 4 I_phi, 2 I_delta,
/// 2 I_delta)`: planar mass, yaw inertia, four spinning wheels sharing one
/// rotation coordinate, and two wheels per steered axle.
pub fn mass_matrix_full(p: &RobotParams) -> SMatrix<f64, 6, 6> {
    SMatrix::<f64, 6, 6>::from_diagonal(&Vector6::new(
        p.m,
        p.m,
        p.i_yaw,
        4.0 * p.i_phi,
        2.0 * p.i_delta,
        2.0 * p.i_delta,
    ))
}

/// Full-coordinate input matrix `B(q)` mapping the three motor torques to
/// generalized forces: drive torque pushes the chassis along the averaged
/// wheel directions and spins all four wheels; each steering torque drives
/// its axle pair directly.
pub fn input_matrix_full(q: &ConfigState, p: &RobotParams) -> SMatrix<f64, 6, 3> {
    let sigma_f = q.delta_f + q.theta;
    let sigma_r = q.delta_r + q.theta;
    let mut b = SMatrix::<f64, 6, 3>::zeros();
    b[(0, 0)] = (2.0 / p.r) * (sigma_f.cos() + sigma_r.cos());
    b[(1, 0)] = (2.0 / p.r) * (sigma_f.sin() + sigma_r.sin());
    b[(2, 0)] = (2.0 * p.a / p.r) * (q.delta_f.sin() - q.delta_r.sin());
    b[(3, 0)] = 4.0;
    b[(4, 1)] = 2.0;
    b[(5, 2)] = 2.0;
    b
}

/// Leading entry of the reduced inertia matrix: the effective inertia seen
/// by the wheel-speed channel. It is largest with the axles parallel and
/// shrinks as they oppose, because opposed axles cancel translation.
pub fn m_tilde_11(q: &ConfigState, p: &RobotParams) -> f64 {
    let spread = q.delta_f - q.delta_r;
    let sdiff = q.delta_f.sin() - q.delta_r.sin();
    4.0 * p.i_phi / (p.r * p.r)
        + 0.5 * p.m * (1.0 + spread.cos())
        + p.i_yaw * p.coupling * p.coupling * sdiff * sdiff
}

/// Reduced inertia matrix `M~ = J^T M J`, diagonal by construction: the
/// wheel-speed channel inertia and one `2 I_delta` per steering axle.
pub fn m_tilde(q: &ConfigState, p: &RobotParams) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(
        m_tilde_11(q, p),
        2.0 * p.i_delta,
        2.0 * p.i_delta,
    ))
}

/// Leading entry of the reduced Coriolis matrix. Equal to half the time
/// derivative of [`m_tilde_11`] along the steering motion, which is what
/// makes `d/dt M~ - 2 C~` skew-symmetric.
pub fn c_tilde_11(
    q: &ConfigState,
    delta_dot_f: f64,
    delta_dot_r: f64,
    p: &RobotParams,
) -> f64 {
    let spread = q.delta_f - q.delta_r;
    let sdiff = q.delta_f.sin() - q.delta_r.sin();
    p.i_yaw
        * p.coupling
        * p.coupling
        * sdiff
        * (q.delta_f.cos() * delta_dot_f - q.delta_r.cos() * delta_dot_r)
        - 0.25 * p.m * spread.sin() * (delta_dot_f - delta_dot_r)
}

/// Reduced Coriolis matrix `C~ = J^T M dJ/dt`; only the wheel-speed channel
/// picks up a velocity-dependent term, and only through the steering rates.
pub fn c_tilde(
    q: &ConfigState,
    delta_dot_f: f64,
    delta_dot_r: f64,
    p: &RobotParams,
) -> Matrix3<f64> {
    let mut c = Matrix3::zeros();
    c[(0, 0)] = c_tilde_11(q, delta_dot_f, delta_dot_r, p);
    c
}

/// Leading entry of the reduced input matrix; see [`b_tilde`].
pub fn b_tilde_11(q: &ConfigState, p: &RobotParams) -> f64 {
    let spread = q.delta_f - q.delta_r;
    let sdiff = q.delta_f.sin() - q.delta_r.sin();
    let ratio = p.a * p.a / (p.a * p.a + p.b * p.b);
    (2.0 * (1.0 + spread.cos()) + ratio * sdiff * sdiff + 4.0) / p.r
}

/// Reduced input matrix `B~ = J^T B`, diagonal, with the steering channels
/// at gain 2 (two wheels per axle). Its leading entry is bounded below by
/// `4 / r` for every steering geometry, so the reduced input map is always
/// invertible.
pub fn b_tilde(q: &ConfigState, p: &RobotParams) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(b_tilde_11(q, p), 2.0, 2.0))
}

/// Projects a generalized force `f` on the full coordinates into the reduced
/// velocity space, `f~ = J^T f`. This is how resistive and environmental
/// forces enter the reduced dynamics.
pub fn f_tilde_project(q: &ConfigState, f: &Vector6<f64>, p: &RobotParams) -> Vector3<f64> {
    jacobian(q, p).transpose() * f
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn random_state(rng: &mut ChaCha8Rng) -> (ConfigState, BodyVelocity) {
        let q = ConfigState {
            x: rng.gen_range(-5.0..5.0),
            y: rng.gen_range(-5.0..5.0),
            theta: rng.gen_range(-10.0..10.0),
            phi: rng.gen_range(-100.0..100.0),
            delta_f: rng.gen_range(-FRAC_PI_2..FRAC_PI_2),
            delta_r: rng.gen_range(-FRAC_PI_2..FRAC_PI_2),
        };
        let v = BodyVelocity {
            v_w: rng.gen_range(-0.5..0.5),
            omega_f: rng.gen_range(-2.0..2.0),
            omega_r: rng.gen_range(-2.0..2.0),
        };
        (q, v)
    }

    #[test]
    fn reference_platform_validates() {
        let p = RobotParams::reference_platform();
        p.validate().unwrap();
    }

    #[test]
    fn validate_rejects_nonpositive() {
        let mut p = RobotParams::reference_platform();
        p.r = 0.0;
        assert!(p.validate().is_err());
        p.r = -0.01;
        assert!(p.validate().is_err());
        p.r = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn consistency_flags_stored_yaw_inertia() {
        let p = RobotParams::reference_platform();
        // The platform's stored yaw inertia (0.0365) sits 0.2% below the
        // chassis-plus-wheels value 0.03657304, so exactly one warning fires.
        let warnings = p.consistency_warnings();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("yaw inertia"));
    }

    #[test]
    fn jacobian_at_origin() {
        let p = RobotParams::reference_platform();
        let j = jacobian(&ConfigState::zero(), &p);
        let expected_col0 = [1.0, 0.0, 0.0, 1.0 / 0.0254, 0.0, 0.0];
        for (i, e) in expected_col0.iter().enumerate() {
            assert_abs_diff_eq!(j[(i, 0)], *e, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(j[(4, 1)], 1.0);
        assert_abs_diff_eq!(j[(5, 2)], 1.0);
        assert_abs_diff_eq!(j[(4, 2)], 0.0);
    }

    #[test]
    fn jacobian_at_sample_pose() {
        // Hand-computed at theta = 0.7, delta_f = 0.3, delta_r = -0.2:
        // sigma_f = 1.0, sigma_r = 0.5.
        let p = RobotParams::reference_platform();
        let q = ConfigState {
            theta: 0.7,
            delta_f: 0.3,
            delta_r: -0.2,
            ..ConfigState::zero()
        };
        let j = jacobian(&q, &p);
        assert_relative_eq!(j[(0, 0)], 0.708_942_4, epsilon = 1e-6);
        assert_relative_eq!(j[(1, 0)], 0.660_448_2, epsilon = 1e-6);
        assert_relative_eq!(j[(2, 0)], 1.098_199_0, epsilon = 1e-6);
        assert_relative_eq!(j[(3, 0)], 39.370_078_7, epsilon = 1e-6);
    }

    #[test]
    fn constraints_annihilate_kinematics() {
        let p = RobotParams::reference_platform();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let (q, _) = random_state(&mut rng);
            let product = constraint_matrix(&q, &p) * jacobian(&q, &p);
            assert!(product.amax() <= 1e-12, "A(q) J(q) != 0 at {q:?}");
        }
    }

    #[test]
    fn reduced_inertia_matches_projection() {
        let p = RobotParams::reference_platform();
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let m_full = mass_matrix_full(&p);
        for _ in 0..1000 {
            let (q, _) = random_state(&mut rng);
            let j = jacobian(&q, &p);
            let projected = j.transpose() * m_full * j;
            let closed = m_tilde(&q, &p);
            assert!((projected - closed).amax() <= 1e-12);
        }
    }

    #[test]
    fn reduced_inertia_values() {
        let p = RobotParams::reference_platform();
        // Parallel axles at zero: 4 I_phi / r^2 + m = 0.06386008 + 3.5.
        assert_relative_eq!(
            m_tilde_11(&ConfigState::zero(), &p),
            3.563_860_1,
            epsilon = 1e-7
        );
        // Fully opposed axles: translation cancels, leaving wheel spin and
        // the yaw coupling term.
        let opposed = ConfigState {
            delta_f: FRAC_PI_2,
            delta_r: -FRAC_PI_2,
            ..ConfigState::zero()
        };
        assert_relative_eq!(m_tilde_11(&opposed, &p), 0.784_847_7, epsilon = 1e-6);
    }

    #[test]
    fn coriolis_matches_projection() {
        let p = RobotParams::reference_platform();
        let m_full = mass_matrix_full(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..1000 {
            let (q, v) = random_state(&mut rng);
            let projected =
                jacobian(&q, &p).transpose() * m_full * jacobian_rate(&q, &v, &p);
            let closed = c_tilde(&q, v.omega_f, v.omega_r, &p);
            assert!((projected - closed).amax() <= 1e-12);
        }
    }

    #[test]
    fn coriolis_sample_value() {
        let p = RobotParams::reference_platform();
        let q = ConfigState {
            delta_f: 0.1,
            ..ConfigState::zero()
        };
        assert_relative_eq!(
            c_tilde_11(&q, 0.5, 0.0, &p),
            -0.034_724_9,
            epsilon = 1e-5
        );
    }

    #[test]
    fn coriolis_is_half_inertia_rate() {
        // Finite-difference d/dt m_tilde_11 along the steering motion and
        // compare against 2 * c_tilde_11 (the skew-symmetry identity for a
        // scalar channel).
        let p = RobotParams::reference_platform();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let h = 1e-6;
        for _ in 0..200 {
            let (q, v) = random_state(&mut rng);
            let shift = |s: f64| ConfigState {
                delta_f: q.delta_f + s * v.omega_f,
                delta_r: q.delta_r + s * v.omega_r,
                ..q
            };
            let fd = (m_tilde_11(&shift(h), &p) - m_tilde_11(&shift(-h), &p)) / (2.0 * h);
            let c11 = c_tilde_11(&q, v.omega_f, v.omega_r, &p);
            assert_abs_diff_eq!(fd, 2.0 * c11, epsilon = 1e-6);
        }
    }

    #[test]
    fn reduced_input_matches_projection_and_bounds() {
        let p = RobotParams::reference_platform();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let (q, _) = random_state(&mut rng);
            let projected = jacobian(&q, &p).transpose() * input_matrix_full(&q, &p);
            let closed = b_tilde(&q, &p);
            assert!((projected - closed).amax() <= 1e-10);
            assert!(b_tilde_11(&q, &p) >= 4.0 / p.r - 1e-12);
        }
    }

    #[test]
    fn reduced_input_values() {
        let p = RobotParams::reference_platform();
        assert_relative_eq!(
            b_tilde_11(&ConfigState::zero(), &p),
            314.960_630,
            epsilon = 1e-6
        );
        let opposed = ConfigState {
            delta_f: FRAC_PI_2,
            delta_r: -FRAC_PI_2,
            ..ConfigState::zero()
        };
        assert_relative_eq!(b_tilde_11(&opposed, &p), 236.220_472, epsilon = 1e-6);
    }

    #[test]
    fn force_projection_matches_transpose() {
        let p = RobotParams::reference_platform();
        let q = ConfigState {
            theta: 0.7,
            delta_f: 0.3,
            delta_r: -0.2,
            ..ConfigState::zero()
        };
        let f = Vector6::new(1.0, -2.0, 0.5, 0.1, 0.3, -0.4);
        let ft = f_tilde_project(&q, &f, &p);
        // Wheel-speed channel: a2 f_x + a1 f_y + a3 f_theta + f_phi / r.
        let expected = 0.708_942_4 * 1.0 + 0.660_448_2 * (-2.0)
            + 1.098_199_0 * 0.5
            + 0.1 / 0.0254;
        assert_relative_eq!(ft[0], expected, epsilon = 1e-6);
        assert_abs_diff_eq!(ft[1], 0.3);
        assert_abs_diff_eq!(ft[2], -0.4);
    }

    #[test]
    fn state_vector_round_trips() {
        let q = ConfigState {
            x: 1.0,
            y: -2.0,
            theta: 0.3,
            phi: 40.0,
            delta_f: 0.2,
            delta_r: -0.1,
        };
        assert_eq!(ConfigState::from_vector(q.to_vector()), q);
        let v = BodyVelocity {
            v_w: 0.1,
            omega_f: -0.2,
            omega_r: 0.3,
        };
        assert_eq!(BodyVelocity::from_vector(v.to_vector()), v);
        let tau = Wrench {
            tau_w: 0.01,
            tau_f: -0.02,
            tau_r: 0.03,
        };
        assert_eq!(Wrench::from_vector(tau.to_vector()), tau);
    }
}
