//! Inner torque loop: a PI law on the body-velocity error plus model-based
//! feedforward evaluated along the reference.
//!
//! The commanded wrench is
//!
//! ```text
//!     tau = B~(q)^-1 ( -K_P e_v - K_I eta + M~(q_d) v_dot_d + C~(q_d, w_d) v_d )
//! ```
//!
//! where `e_v = v - v_d` and `eta` is the clamped running integral of `e_v`.
//! Gains are configured in the current domain, the way a motor-current loop
//! would be tuned, and scaled into torque through the motor constant `K_t`.
//! The feedforward matrices are evaluated at the reference configuration and
//! reference steering rates, not the measured ones; the mismatch this causes
//! is exactly the residual the gain certification budgets for.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::kincontrol::ReferenceState;
use crate::model::{b_tilde_11, c_tilde, m_tilde, BodyVelocity, ConfigState, RobotParams, Wrench};

fn default_eta_limit() -> [f64; 3] {
    [10.0; 3]
}

/// PI gains of the torque loop, expressed in the current domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PIGains {
    /// Diagonal proportional gains (A s/m, A s/rad).
    pub kp: [f64; 3],
    /// Diagonal integral gains (A/m, A/rad).
    pub ki: [f64; 3],
    /// Motor torque constant (N m/A) mapping current gains to torque gains.
    pub k_t: f64,
    /// Per-channel clamp on the error integral (anti-windup).
    #[serde(default = "default_eta_limit")]
    pub eta_limit: [f64; 3],
    /// Optional per-channel torque clamp (N m); unlimited when absent, so
    /// the unclamped law can be verified first.
    #[serde(default)]
    pub tau_limit: Option<[f64; 3]>,
}

impl PIGains {
    /// The gain set used on the reference platform. Its smallest
    /// proportional gain sits a few percent above the certification
    /// threshold, which is what makes the closed loop finite-gain stable
    /// with a small margin rather than a comfortable one.
    pub fn reference_gains() -> Self {
        Self {
            kp: [1.563, 2.344, 2.344],
            ki: [0.061, 0.092, 0.092],
            k_t: 1.923,
            eta_limit: default_eta_limit(),
            tau_limit: None,
        }
    }

    /// Rejects gain sets the loop cannot run with: the torque constant and
    /// every clamp must be positive, and no gain may be negative or
    /// non-finite.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.k_t > 0.0 && self.k_t.is_finite()) {
            return Err(format!("k_t must be positive and finite, got {}", self.k_t));
        }
        for (name, triple) in [("kp", &self.kp), ("ki", &self.ki)] {
            for v in triple {
                if !(*v >= 0.0 && v.is_finite()) {
                    return Err(format!("{name} entries must be non-negative, got {v}"));
                }
            }
        }
        // Infinite limits are legal (an explicit "no clamp"); NaN is not.
        for v in &self.eta_limit {
            if v.is_nan() || *v <= 0.0 {
                return Err(format!("eta_limit entries must be positive, got {v}"));
            }
        }
        if let Some(lim) = &self.tau_limit {
            for v in lim {
                if v.is_nan() || *v <= 0.0 {
                    return Err(format!("tau_limit entries must be positive, got {v}"));
                }
            }
        }
        Ok(())
    }

    /// Proportional gains in the torque domain, `K_t * kp`.
    pub fn kp_torque(&self) -> Vector3<f64> {
        self.k_t * Vector3::new(self.kp[0], self.kp[1], self.kp[2])
    }

    /// Integral gains in the torque domain, `K_t * ki`.
    pub fn ki_torque(&self) -> Vector3<f64> {
        self.k_t * Vector3::new(self.ki[0], self.ki[1], self.ki[2])
    }
}

/// State the torque loop carries between steps.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerState {
    /// Clamped integral of the velocity error (m, rad).
    pub eta: Vector3<f64>,
    /// Velocity error from the previous step, for the trapezoidal update.
    pub last_e_v: Vector3<f64>,
}

impl ControllerState {
    /// Fresh state: zero integral, zero remembered error.
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the state to its fresh condition. Applying it twice changes
    /// nothing further.
    pub fn reset(&mut self) {
        *self = Self::new();
    }
}

/// Assembles the commanded wrench from an explicit error integral and
/// feedforward inputs: PI feedback plus reference-evaluated feedforward,
/// mapped through the inverse of the reduced input matrix at the measured
/// configuration, then clamped if a torque limit is set.
#[allow(clippy::too_many_arguments)]
pub fn commanded_wrench(
    q: &ConfigState,
    q_d: &ConfigState,
    e_v: &Vector3<f64>,
    eta: &Vector3<f64>,
    v_d: &Vector3<f64>,
    v_dot_d: &Vector3<f64>,
    omega_f_d: f64,
    omega_r_d: f64,
    gains: &PIGains,
    p: &RobotParams,
) -> Wrench {
    let feedback = -gains.kp_torque().component_mul(e_v) - gains.ki_torque().component_mul(eta);
    let feedforward = m_tilde(q_d, p) * v_dot_d + c_tilde(q_d, omega_f_d, omega_r_d, p) * v_d;
    let u = feedback + feedforward;

    // The reduced input matrix is diag(B~11, 2, 2) with B~11 >= 4/r, so the
    // inversion is three scalar divisions and never singular.
    let mut tau = Vector3::new(u[0] / b_tilde_11(q, p), 0.5 * u[1], 0.5 * u[2]);
    if let Some(lim) = &gains.tau_limit {
        for k in 0..3 {
            tau[k] = tau[k].clamp(-lim[k], lim[k]);
        }
    }
    Wrench::from_vector(tau)
}

/// One step of the torque loop.
///
/// Advances the error integral by the trapezoidal rule, clamps it per
/// channel, and maps the control effort through the inverse of the reduced
/// input matrix at the measured configuration. Returns the wrench, the
/// successor state, and the velocity error it acted on. The integral clamp
/// is applied before the wrench is formed, so a saturated integrator
/// contributes its clamped value rather than the raw sum.
// Measured state, reference pair, gains, platform, loop state, and step are
// all genuinely independent inputs of the loop; bundling them would only
// move the argument list into a struct literal at the single call site.
#[allow(clippy::too_many_arguments)]
pub fn control_step(
    q: &ConfigState,
    v: &BodyVelocity,
    reference: &ReferenceState,
    q_d: &ConfigState,
    gains: &PIGains,
    p: &RobotParams,
    state: &ControllerState,
    dt: f64,
) -> (Wrench, ControllerState, Vector3<f64>) {
    let v_d = reference.v_d.to_vector();
    let e_v = v.to_vector() - v_d;

    let mut eta = state.eta + 0.5 * dt * (state.last_e_v + e_v);
    for k in 0..3 {
        eta[k] = eta[k].clamp(-gains.eta_limit[k], gains.eta_limit[k]);
    }

    let tau = commanded_wrench(
        q,
        q_d,
        &e_v,
        &eta,
        &v_d,
        &reference.v_dot_d,
        reference.omega_f_d,
        reference.omega_r_d,
        gains,
        p,
    );

    (tau, ControllerState { eta, last_e_v: e_v }, e_v)
}
