//! Closed-form structural constants of the reduced model over an operating
//! envelope, the residual coefficients they imply, and the sufficient
//! gain condition for certified L2 stability of the torque loop.
//!
//! All constants are conservative closed-form upper bounds on quantities the
//! stability argument needs (inertia eigenvalue range, Coriolis growth,
//! kinematic gains, Lipschitz moduli, disturbance projections). Each one is
//! paired with a sampled counterpart in the tests, which must never exceed
//! the formula value.
//!
//! Velocity-space norms are weighted: `||q_dot||_W^2` counts the wheel-spin
//! rate as `(r * phi_dot)^2`, i.e. the ground speed it produces, which keeps
//! every constant dimensionally consistent.

use nalgebra::{Matrix3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyncontrol::PIGains;
use crate::model::{jacobian, BodyVelocity, ConfigState, RobotParams};
use crate::uncertainty::UncertaintyModel;

/// Operating envelope over which the structural constants are valid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvelopeSpec {
    /// Admissible steering angle interval (rad).
    pub delta_range: [f64; 2],
    /// Steering rate limit (rad/s).
    pub delta_dot_max: f64,
    /// Wheel speed limit (m/s).
    pub v_w_max: f64,
    /// Supremum of the weighted reference-velocity norm (m/s); auto-derived
    /// from the speed and rate limits when absent.
    pub v_d: Option<f64>,
    /// Supremum of the reference-acceleration norm (m/s^2).
    pub a_d: f64,
}

impl Default for EnvelopeSpec {
    fn default() -> Self {
        Self {
            delta_range: [-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2],
            delta_dot_max: std::f64::consts::FRAC_PI_2,
            v_w_max: 0.13,
            v_d: None,
            a_d: 0.5,
        }
    }
}

impl EnvelopeSpec {
    /// Rejects envelopes the constants cannot be formed over; every limit
    /// must be finite (non-NaN) and the steering interval proper.
    pub fn validate(&self) -> Result<(), String> {
        let proper = self.delta_range[0].is_finite()
            && self.delta_range[1].is_finite()
            && self.delta_range[0] < self.delta_range[1];
        if !proper {
            return Err(format!(
                "delta_range must be a proper interval, got {:?}",
                self.delta_range
            ));
        }
        if !self.delta_dot_max.is_finite() || self.delta_dot_max <= 0.0 {
            return Err(format!(
                "delta_dot_max must be positive, got {}",
                self.delta_dot_max
            ));
        }
        if !self.v_w_max.is_finite() || self.v_w_max <= 0.0 {
            return Err(format!("v_w_max must be positive, got {}", self.v_w_max));
        }
        if let Some(v_d) = self.v_d {
            if !v_d.is_finite() || v_d <= 0.0 {
                return Err(format!("v_d must be positive when declared, got {v_d}"));
            }
        }
        if !self.a_d.is_finite() || self.a_d < 0.0 {
            return Err(format!("a_d must be non-negative, got {}", self.a_d));
        }
        Ok(())
    }

    /// Supremum of the weighted reference-velocity norm: the declared value,
    /// or `sqrt(v_w_max^2 + 2 (a * delta_dot_max)^2)` where `a` weights the
    /// steering rates by the axle offset.
    pub fn v_d_sup(&self, p: &RobotParams) -> f64 {
        self.v_d.unwrap_or_else(|| {
            (self.v_w_max * self.v_w_max
                + 2.0 * (p.a * self.delta_dot_max) * (p.a * self.delta_dot_max))
                .sqrt()
        })
    }
}

/// Draws one `(q, v)` pair from the envelope; configuration rates are
/// realized through the kinematics, so samples always satisfy the rolling
/// constraints.
pub fn sample_envelope(
    env: &EnvelopeSpec,
    _p: &RobotParams,
    rng: &mut ChaCha8Rng,
) -> (ConfigState, BodyVelocity) {
    let q = ConfigState {
        x: rng.gen_range(-2.0..2.0),
        y: rng.gen_range(-2.0..2.0),
        theta: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        phi: rng.gen_range(-40.0..40.0),
        delta_f: rng.gen_range(env.delta_range[0]..env.delta_range[1]),
        delta_r: rng.gen_range(env.delta_range[0]..env.delta_range[1]),
    };
    let v = BodyVelocity {
        v_w: rng.gen_range(-env.v_w_max..env.v_w_max),
        omega_f: rng.gen_range(-env.delta_dot_max..env.delta_dot_max),
        omega_r: rng.gen_range(-env.delta_dot_max..env.delta_dot_max),
    };
    (q, v)
}

/// The diagonal of the velocity-space weight `W` (wheel spin weighted by
/// `r^2`, everything else unweighted).
fn weight_diagonal(p: &RobotParams) -> Vector6<f64> {
    Vector6::new(1.0, 1.0, 1.0, p.r * p.r, 1.0, 1.0)
}

/// Uniform bounds `a1 <= eig(M~(q)) <= a2` on the reduced inertia, valid
/// for every steering geometry.
pub fn mass_bounds(p: &RobotParams) -> (f64, f64) {
    let spin = 4.0 * p.i_phi / (p.r * p.r);
    let steer = 2.0 * p.i_delta;
    let a_sq = p.coupling * p.coupling;
    let a1 = spin.min(steer);
    let a2 = (spin + p.m + 4.0 * p.i_yaw * a_sq).max(steer);
    (a1, a2)
}

/// Quadratic growth bound on the reduced Coriolis term:
/// `||C~(q, v) v|| <= b_c ||v||^2` for all envelope states.
pub fn coriolis_bound(p: &RobotParams) -> f64 {
    2.0 * p.i_yaw * p.coupling * p.coupling + 0.25 * p.m
}

/// How [`jacobian_gain`] is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainMode {
    /// The closed-form envelope-independent bound `sqrt(2 + 4 A^2)`.
    Formula,
    /// The supremum of the exact per-configuration gain over envelope
    /// samples; never exceeds the formula value.
    Sampled,
}

/// Exact weighted induced gain of the kinematics at one configuration:
/// `sup ||q_dot||_W / ||v||` over body velocities at `q`.
pub fn weighted_jacobian_gain_at(q: &ConfigState, p: &RobotParams) -> f64 {
    let j = jacobian(q, p);
    let w = weight_diagonal(p);
    let mut jtwj = Matrix3::<f64>::zeros();
    for row in 0..6 {
        for i in 0..3 {
            for k in 0..3 {
                jtwj[(i, k)] += j[(row, i)] * w[row] * j[(row, k)];
            }
        }
    }
    jtwj.symmetric_eigenvalues().max().max(0.0).sqrt()
}

/// Induced gain `sigma_J` of the kinematic map in the weighted metric:
/// bounds `||q_dot||_W <= sigma_J ||v||` over the whole envelope.
pub fn jacobian_gain(p: &RobotParams, env: &EnvelopeSpec, mode: GainMode) -> f64 {
    match mode {
        GainMode::Formula => (2.0 + 4.0 * p.coupling * p.coupling).sqrt(),
        GainMode::Sampled => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x9a1b_0051);
            let mut sup: f64 = 0.0;
            for _ in 0..2000 {
                let (q, _) = sample_envelope(env, p, &mut rng);
                sup = sup.max(weighted_jacobian_gain_at(&q, p));
            }
            sup
        }
    }
}

/// Sensitivity `sigma_dJ` of the kinematics to configuration changes:
/// bounds the weighted induced norm of `J(q) - J(q')` by
/// `sigma_dJ ||q - q'||`.
pub fn jacobian_sensitivity(p: &RobotParams) -> f64 {
    (1.5 + 2.0 * p.coupling * p.coupling).sqrt()
}

/// Lipschitz moduli of the reduced matrices over the envelope:
/// `L_M` for `M~` in `q`, `L_C1` for `C~` in `q` at envelope rates, and
/// `L_C2` for `C~` in the rates.
pub fn lipschitz_constants(p: &RobotParams, env: &EnvelopeSpec) -> (f64, f64, f64) {
    let sqrt2 = std::f64::consts::SQRT_2;
    let a_sq = p.coupling * p.coupling;
    let l_m = sqrt2 * (0.5 * p.m + 4.0 * p.i_yaw * a_sq);
    let l_c1 = sqrt2 * (0.25 * p.m + 4.0 * p.i_yaw * a_sq) * env.delta_dot_max;
    let l_c2 = sqrt2 * (0.25 * p.m + 2.0 * p.i_yaw * a_sq);
    (l_m, l_c1, l_c2)
}

/// Sensitivity `d_v` of the projected disturbance to body-velocity changes:
/// `||f~(q, v) - f~(q, v')|| <= d_v ||v - v'||`, from the rate-sensitivity
/// cap of the disturbance and the squared kinematic gain.
pub fn velocity_sensitivity(p: &RobotParams, l_f2: f64) -> f64 {
    let sigma_j = (2.0 + 4.0 * p.coupling * p.coupling).sqrt();
    sigma_j * sigma_j * l_f2
}

/// Projected disturbance bounds `(c~, d~)`: `||f~|| <= c~ + d~ ||v||` over
/// the envelope, from the per-coordinate bounds of the model pushed through
/// the kinematics (weighted-metric scaling on the wheel-spin coordinate).
pub fn projected_uncertainty(p: &RobotParams, model: &UncertaintyModel) -> (f64, f64) {
    let sigma_j = (2.0 + 4.0 * p.coupling * p.coupling).sqrt();
    let w = weight_diagonal(p);
    let c = model.bound_c(p);
    let d = model.bound_d(p);
    let mut c_hat_sq = 0.0;
    let mut d_hat_sq = 0.0;
    for k in 0..6 {
        let ch = c[k] / w[k].sqrt();
        let dh = d[k] / w[k];
        c_hat_sq += ch * ch;
        d_hat_sq += dh * dh;
    }
    (sigma_j * c_hat_sq.sqrt(), sigma_j * sigma_j * d_hat_sq.sqrt())
}

/// The complete set of structural constants for one platform, envelope, and
/// disturbance model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSet {
    /// Lower inertia eigenvalue bound (kg or kg m^2).
    pub a1: f64,
    /// Upper inertia eigenvalue bound.
    pub a2: f64,
    /// Coriolis quadratic-growth bound (kg).
    pub b_c: f64,
    /// Kinematic induced gain (dimensionless, weighted metric).
    pub sigma_j: f64,
    /// Kinematic configuration-sensitivity bound.
    pub sigma_dj: f64,
    /// Lipschitz modulus of the reduced inertia in `q` (kg/rad).
    pub l_m: f64,
    /// Lipschitz modulus of the reduced Coriolis in `q` at envelope rates.
    pub l_c1: f64,
    /// Lipschitz modulus of the reduced Coriolis in the rates (kg).
    pub l_c2: f64,
    /// Constant part of the projected disturbance bound (N).
    pub c_tilde: f64,
    /// Velocity-proportional part of the projected disturbance bound.
    pub d_tilde: f64,
    /// Velocity sensitivity of the projected disturbance (N s/m).
    pub d_v: f64,
    /// Residual sensitivity to configuration error (N/m).
    pub a_q: f64,
    /// Residual sensitivity to velocity error (N s/m).
    pub a_v: f64,
    /// Constant residual ceiling (N).
    pub a_c: f64,
}

/// Residual coefficients `(A_q, A_v, A_c)` bounding the feedforward
/// mismatch `||r|| <= A_q ||q - q_d|| + A_v ||e_v|| + A_c` over the
/// envelope. With `reduce_conservatism` the Coriolis growth bound replaces
/// the (larger) Lipschitz modulus in the velocity-sensitive terms.
pub fn residual_coeffs(
    partial: &BoundSet,
    env: &EnvelopeSpec,
    p: &RobotParams,
    reduce_conservatism: bool,
) -> (f64, f64, f64) {
    let v_d = env.v_d_sup(p);
    let l_c2 = if reduce_conservatism {
        partial.b_c
    } else {
        partial.l_c2
    };
    let a_q = partial.l_m * env.a_d + partial.l_c1 * v_d + l_c2 * partial.sigma_dj * v_d * v_d;
    let a_v = l_c2 * partial.sigma_j * v_d;
    let a_c = partial.c_tilde + partial.d_tilde * v_d;
    (a_q, a_v, a_c)
}

impl BoundSet {
    /// Computes every constant for the given platform, envelope, and
    /// disturbance model.
    pub fn compute(
        p: &RobotParams,
        env: &EnvelopeSpec,
        model: &UncertaintyModel,
        reduce_conservatism: bool,
    ) -> Self {
        let (a1, a2) = mass_bounds(p);
        let b_c = coriolis_bound(p);
        let sigma_j = jacobian_gain(p, env, GainMode::Formula);
        let sigma_dj = jacobian_sensitivity(p);
        let (l_m, l_c1, l_c2) = lipschitz_constants(p, env);
        let (c_tilde, d_tilde) = projected_uncertainty(p, model);
        let d_v = velocity_sensitivity(p, model.lipschitz_rate(p));
        let mut set = Self {
            a1,
            a2,
            b_c,
            sigma_j,
            sigma_dj,
            l_m,
            l_c1,
            l_c2,
            c_tilde,
            d_tilde,
            d_v,
            a_q: 0.0,
            a_v: 0.0,
            a_c: 0.0,
        };
        let (a_q, a_v, a_c) = residual_coeffs(&set, env, p, reduce_conservatism);
        set.a_q = a_q;
        set.a_v = a_v;
        set.a_c = a_c;
        set
    }
}

/// Outcome of the sufficient gain condition for one gain set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainCertificate {
    /// Smallest diagonal proportional gain, current domain (A s/m).
    pub lambda_min_kp: f64,
    /// Torque constant mapping current gains to torque gains (N m/A).
    pub k_t: f64,
    /// Margin slack `epsilon` the condition is evaluated with (torque
    /// domain).
    pub epsilon: f64,
    /// Current-domain gain threshold `(d_v + A_v) / K_t` the smallest gain
    /// must exceed.
    pub threshold: f64,
    /// Certified dissipation margin `K_t lambda_min - d_v - A_v - epsilon`
    /// (torque domain).
    pub mu: f64,
    /// The same margin in the limit of vanishing slack.
    pub mu_at_zero_epsilon: f64,
    /// True when `mu > 0`, i.e. the gain condition holds with the requested
    /// slack.
    pub pass: bool,
    /// Certified bound `1/mu` on the L2 gain from the projected disturbance
    /// to the velocity error; absent when uncertified.
    pub l2_gain_bound: Option<f64>,
}

/// Evaluates the sufficient gain condition: the smallest torque-domain
/// proportional gain must dominate the disturbance velocity-sensitivity
/// plus the residual velocity coefficient with slack `epsilon`.
pub fn certify(bounds: &BoundSet, gains: &PIGains, epsilon: f64) -> GainCertificate {
    debug_assert!(epsilon > 0.0, "certification slack must be positive");
    let lambda_min_kp = gains.kp.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda_torque = gains.k_t * lambda_min_kp;
    let demand = bounds.d_v + bounds.a_v;
    let mu = lambda_torque - demand - epsilon;
    let pass = mu > 0.0;
    GainCertificate {
        lambda_min_kp,
        k_t: gains.k_t,
        epsilon,
        threshold: demand / gains.k_t,
        mu,
        mu_at_zero_epsilon: lambda_torque - demand,
        pass,
        l2_gain_bound: pass.then(|| 1.0 / mu),
    }
}
