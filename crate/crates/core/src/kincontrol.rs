//! Outer-loop kinematic controller: converts a reference path into the body
//! velocity reference `v_d = (v_w_d, omega_f_d, omega_r_d)` tracked by the
//! torque loop.
//!
//! The chain per control step is
//!
//! 1. body-frame pose errors,
//! 2. a tracking law producing the wheel-speed demand and a virtual yaw rate,
//! 3. a steering map that seeds both axle angles from the demanded velocity
//!    direction and then splits the normalized yaw demand between the axles
//!    (saturating gracefully when the demand exceeds the steering authority),
//! 4. first-order steering-rate laws driving the physical axles to the
//!    demanded angles,
//! 5. a filtered backward difference providing the acceleration feedforward
//!    `v_dot_d` for the torque loop.

use serde::{Deserialize, Serialize};

use crate::model::{BodyVelocity, ConfigState, RobotParams};
use nalgebra::Vector3;

/// Time constant (s) of the low-pass applied to the backward-difference
/// estimate of `v_dot_d`. A pure finite difference would inject `1/dt`
/// spikes into the feedforward whenever the reference kinks (steering
/// saturation entry/exit); the filter trades that for a bounded, smooth
/// estimate with a short settling time.
pub const TAU_FF: f64 = 0.05;

/// Front axle angle demand clamped (sine split out of range or mechanical
/// limit).
pub const CLAMP_FRONT_ANGLE: u8 = 1;
/// Rear axle angle demand clamped.
pub const CLAMP_REAR_ANGLE: u8 = 2;
/// Front axle rate demand clamped by the rate limit.
pub const CLAMP_FRONT_RATE: u8 = 4;
/// Rear axle rate demand clamped by the rate limit.
pub const CLAMP_REAR_RATE: u8 = 8;

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = x.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w - two_pi
    } else {
        w
    }
}

/// One sample of the reference path: pose, path velocity, and yaw rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRef {
    /// Reference position (m).
    pub x_d: f64,
    /// Reference position (m).
    pub y_d: f64,
    /// Reference heading (rad).
    pub theta_d: f64,
    /// Reference velocity, world frame (m/s).
    pub x_dot_d: f64,
    /// Reference velocity, world frame (m/s).
    pub y_dot_d: f64,
    /// Path speed `sqrt(x_dot_d^2 + y_dot_d^2)` (m/s).
    pub v_t: f64,
    /// Reference yaw rate `d/dt theta_d` (rad/s).
    pub omega_d: f64,
}

impl PoseRef {
    /// Builds a reference sample with the heading auto-derived from the
    /// velocity direction (`theta_d = atan2(y_dot_d, x_dot_d)`), the natural
    /// choice for a path-following heading.
    pub fn from_path_sample(
        x_d: f64,
        y_d: f64,
        x_dot_d: f64,
        y_dot_d: f64,
        omega_d: f64,
    ) -> Self {
        Self {
            x_d,
            y_d,
            theta_d: y_dot_d.atan2(x_dot_d),
            x_dot_d,
            y_dot_d,
            v_t: x_dot_d.hypot(y_dot_d),
            omega_d,
        }
    }

    /// Builds a reference sample with an explicitly prescribed heading,
    /// possibly different from the velocity direction (crab motion).
    pub fn with_heading(
        x_d: f64,
        y_d: f64,
        theta_d: f64,
        x_dot_d: f64,
        y_dot_d: f64,
        omega_d: f64,
    ) -> Self {
        Self {
            x_d,
            y_d,
            theta_d,
            x_dot_d,
            y_dot_d,
            v_t: x_dot_d.hypot(y_dot_d),
            omega_d,
        }
    }
}

/// Gains and limits of the kinematic controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KinGains {
    /// Longitudinal error gain (1/s).
    pub k_x: f64,
    /// Lateral error gain (1/(m s), multiplies `v_t * e_y`).
    pub k_y: f64,
    /// Heading error gain (1/s).
    pub k_theta: f64,
    /// Steering-angle tracking gain (1/s).
    pub k_delta: f64,
    /// Wheel-speed floor (m/s) used when normalizing the yaw demand, so the
    /// steering map stays well defined through zero crossings of `v_w_d`.
    pub eps_v: f64,
    /// Steering angle limit (rad), in `(0, pi/2]`.
    pub delta_max: f64,
    /// Steering rate limit (rad/s).
    pub delta_dot_max: f64,
}

impl Default for KinGains {
    fn default() -> Self {
        Self {
            k_x: 5.0,
            k_y: 5.0,
            k_theta: 5.0,
            k_delta: 5.0,
            eps_v: 0.01,
            delta_max: std::f64::consts::FRAC_PI_2,
            delta_dot_max: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl KinGains {
    /// Rejects gain sets outside the domain the stability argument covers.
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("k_x", self.k_x),
            ("k_y", self.k_y),
            ("k_theta", self.k_theta),
            ("k_delta", self.k_delta),
            ("eps_v", self.eps_v),
            ("delta_dot_max", self.delta_dot_max),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(format!("kinematic gain `{name}` must be positive, got {value}"));
            }
        }
        if !(self.delta_max > 0.0 && self.delta_max <= std::f64::consts::FRAC_PI_2) {
            return Err(format!(
                "delta_max must lie in (0, pi/2], got {}",
                self.delta_max
            ));
        }
        Ok(())
    }
}

/// Output of the kinematic controller for one step: the velocity reference,
/// its filtered derivative, and the intermediate demands (useful for traces
/// and for the torque-loop feedforward evaluated at the reference state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceState {
    /// Demanded wheel speed (m/s).
    pub v_w_d: f64,
    /// Demanded front steering angle (rad).
    pub delta_f_d: f64,
    /// Demanded rear steering angle (rad).
    pub delta_r_d: f64,
    /// Demanded front steering rate (rad/s).
    pub omega_f_d: f64,
    /// Demanded rear steering rate (rad/s).
    pub omega_r_d: f64,
    /// The assembled body-velocity reference `(v_w_d, omega_f_d, omega_r_d)`.
    pub v_d: BodyVelocity,
    /// Filtered derivative of `v_d`, the torque-loop feedforward (m/s^2,
    /// rad/s^2).
    pub v_dot_d: Vector3<f64>,
    /// Effective virtual yaw-rate demand (rad/s) after any steering
    /// saturation has reduced it to what the axles can realize.
    pub omega_virt: f64,
    /// Bitmask of the clamps active this step ([`CLAMP_FRONT_ANGLE`] ..
    /// [`CLAMP_REAR_RATE`]); zero when every demand was within limits. The
    /// reference signals kink (or cusp, leaving a sine clamp) exactly when
    /// this pattern changes, so derivative-based checks key on it.
    pub clamp: u8,
}

impl ReferenceState {
    /// True when any demand was clamped this step.
    pub fn saturated(&self) -> bool {
        self.clamp != 0
    }
}

/// Body-frame pose errors `(e_x, e_y, e_theta)` between the robot and the
/// reference. The heading error is returned raw (`theta_d - theta`);
/// consumers wrap it so that a full accumulated turn is not treated as an
/// error.
pub fn pose_error(q: &ConfigState, reference: &PoseRef) -> (f64, f64, f64) {
    let dx = reference.x_d - q.x;
    let dy = reference.y_d - q.y;
    let (s, c) = q.theta.sin_cos();
    let e_x = dx * c + dy * s;
    let e_y = -dx * s + dy * c;
    let e_theta = reference.theta_d - q.theta;
    (e_x, e_y, e_theta)
}

/// Kinematic tracking law: wheel-speed demand from the longitudinal error
/// and a virtual yaw-rate demand from heading and lateral errors.
pub fn tracking_law(
    err: (f64, f64, f64),
    reference: &PoseRef,
    g: &KinGains,
) -> (f64, f64) {
    let (e_x, e_y, e_theta) = err;
    let e_theta = wrap_angle(e_theta);
    let v_w_d = reference.v_t * e_theta.cos() + g.k_x * e_x;
    let omega_virt = reference.omega_d + g.k_theta * e_theta + g.k_y * reference.v_t * e_y;
    (v_w_d, omega_virt)
}

/// Sign with a pinned value at zero, used to keep the normalized yaw demand
/// well defined when the wheel-speed demand crosses zero.
fn sgn_eps(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Recovers `asin(s)` for `s` clamped to `[-1, 1]`, returning the principal
/// steering angle in `[-pi/2, pi/2]`.
fn principal_steer(s: f64) -> f64 {
    let s = s.clamp(-1.0, 1.0);
    s.atan2((1.0 - s * s).max(0.0).sqrt())
}

/// Maps the demanded motion to the two axle steering angles.
///
/// Both axles are seeded from the demanded velocity expressed in the body
/// frame (the reference velocity direction rotated by the heading error,
/// plus the error-feedback terms), then the normalized yaw demand
/// `s = omega_virt / (A * sgn(v_w_d) * max(|v_w_d|, eps_v))` is split evenly
/// across the axle sine difference. Sines are clamped to `[-1, 1]`, angles
/// recovered on the principal branch, and both angles clamped to
/// `delta_max`. The returned bitmask reports per axle whether a clamp
/// engaged; the caller then recomputes the effectively realizable yaw
/// demand from the achieved sines, which preserves the turn direction.
pub fn steering_map(
    err: (f64, f64, f64),
    reference: &PoseRef,
    g: &KinGains,
    p: &RobotParams,
    v_w_d: f64,
    omega_virt: f64,
) -> (f64, f64, u8) {
    let (e_x, e_y, e_theta) = err;
    let e_theta = wrap_angle(e_theta);
    // Demanded velocity direction in the body frame: the reference velocity
    // direction relative to the reference heading, shifted by the heading
    // error. On a path whose heading follows the velocity this reduces to
    // the heading error itself; for a fixed-heading (crab) reference it is
    // the velocity direction seen from the body.
    let psi = wrap_angle(
        e_theta + wrap_angle(reference.y_dot_d.atan2(reference.x_dot_d) - reference.theta_d),
    );
    let fwd = reference.v_t * psi.cos() + g.k_x * e_x;
    let lat = reference.v_t * psi.sin() + g.k_y * reference.v_t * e_y;
    let lat_f = lat - g.k_theta * p.a * e_theta;
    let lat_r = lat + g.k_theta * p.a * e_theta;
    let delta_f0 = lat_f.atan2(fwd);
    let delta_r0 = lat_r.atan2(fwd);

    let floor = v_w_d.abs().max(g.eps_v) * sgn_eps(v_w_d);
    let s = omega_virt / (p.coupling * floor);
    let d_req = s - (delta_f0.sin() - delta_r0.sin());
    let s_f = delta_f0.sin() + 0.5 * d_req;
    let s_r = delta_r0.sin() - 0.5 * d_req;

    let mut clamp = 0u8;
    if s_f.abs() > 1.0 {
        clamp |= CLAMP_FRONT_ANGLE;
    }
    if s_r.abs() > 1.0 {
        clamp |= CLAMP_REAR_ANGLE;
    }
    let mut delta_f_d = principal_steer(s_f);
    let mut delta_r_d = principal_steer(s_r);
    if delta_f_d.abs() > g.delta_max {
        delta_f_d = delta_f_d.clamp(-g.delta_max, g.delta_max);
        clamp |= CLAMP_FRONT_ANGLE;
    }
    if delta_r_d.abs() > g.delta_max {
        delta_r_d = delta_r_d.clamp(-g.delta_max, g.delta_max);
        clamp |= CLAMP_REAR_ANGLE;
    }
    (delta_f_d, delta_r_d, clamp)
}

/// First-order steering tracking: rate demands proportional to the angle
/// errors, clamped to the rate limit. The bitmask reports per axle whether
/// the rate limit engaged.
pub fn steering_rate_law(
    delta_f: f64,
    delta_r: f64,
    delta_f_d: f64,
    delta_r_d: f64,
    g: &KinGains,
) -> (f64, f64, u8) {
    let lim = g.delta_dot_max;
    let raw_f = -g.k_delta * (delta_f - delta_f_d);
    let raw_r = -g.k_delta * (delta_r - delta_r_d);
    let mut clamp = 0u8;
    if raw_f.abs() > lim {
        clamp |= CLAMP_FRONT_RATE;
    }
    if raw_r.abs() > lim {
        clamp |= CLAMP_REAR_RATE;
    }
    (raw_f.clamp(-lim, lim), raw_r.clamp(-lim, lim), clamp)
}

/// The yaw rate the achieved steering angles actually realize under the
/// demand normalization; equals `omega_virt` whenever nothing saturated.
fn realized_yaw_demand(
    delta_f_d: f64,
    delta_r_d: f64,
    v_w_d: f64,
    g: &KinGains,
    p: &RobotParams,
) -> f64 {
    let floor = v_w_d.abs().max(g.eps_v) * sgn_eps(v_w_d);
    p.coupling * (delta_f_d.sin() - delta_r_d.sin()) * floor
}

/// Shifts `angle` by whole turns so it lands as close as possible to
/// `anchor`; a no-op whenever the two already agree to within half a turn.
fn unwrap_towards(angle: f64, anchor: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    angle + two_pi * ((anchor - angle) / two_pi).round()
}

/// Everything the kinematic chain determines algebraically at one instant:
/// wheel-speed demand, steering demands (unwrapped toward the caller's
/// anchors), steering-rate demands, the effective yaw demand, and whether
/// anything saturated. The acceleration feedforward is deliberately absent;
/// callers pair these demands with their own derivative estimate (the
/// discrete filter in [`reference_step`], or a continuous filter state in a
/// continuous-time integration).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinDemands {
    pub v_w_d: f64,
    pub delta_f_d: f64,
    pub delta_r_d: f64,
    pub omega_f_d: f64,
    pub omega_r_d: f64,
    pub omega_virt: f64,
    /// Active-clamp bitmask, as in [`ReferenceState::clamp`].
    pub clamp: u8,
}

impl KinDemands {
    /// The demanded body velocity `(v_w_d, omega_f_d, omega_r_d)`.
    pub fn v_d(&self) -> BodyVelocity {
        BodyVelocity {
            v_w: self.v_w_d,
            omega_f: self.omega_f_d,
            omega_r: self.omega_r_d,
        }
    }
}

/// Runs the memoryless part of the kinematic controller: errors, tracking
/// law, steering map (with demands unwrapped toward `anchor_f`/`anchor_r`),
/// and the steering-rate law.
pub fn reference_demands(
    q: &ConfigState,
    reference: &PoseRef,
    g: &KinGains,
    p: &RobotParams,
    anchor_f: f64,
    anchor_r: f64,
) -> KinDemands {
    let err = pose_error(q, reference);
    let (v_w_d, omega_virt) = tracking_law(err, reference, g);
    let (delta_f_d, delta_r_d, angle_clamp) =
        steering_map(err, reference, g, p, v_w_d, omega_virt);
    // Keep the emitted steering demands on the same turn as the anchors, so
    // a caller feeding multi-turn state never sees a 2 pi jump.
    let delta_f_d = unwrap_towards(delta_f_d, anchor_f);
    let delta_r_d = unwrap_towards(delta_r_d, anchor_r);
    let omega_virt = if angle_clamp != 0 {
        realized_yaw_demand(delta_f_d, delta_r_d, v_w_d, g, p)
    } else {
        omega_virt
    };
    let (omega_f_d, omega_r_d, rate_clamp) =
        steering_rate_law(q.delta_f, q.delta_r, delta_f_d, delta_r_d, g);
    KinDemands {
        v_w_d,
        delta_f_d,
        delta_r_d,
        omega_f_d,
        omega_r_d,
        omega_virt,
        clamp: angle_clamp | rate_clamp,
    }
}

impl ReferenceState {
    fn from_demands(demands: KinDemands, v_dot_d: Vector3<f64>) -> Self {
        Self {
            v_w_d: demands.v_w_d,
            delta_f_d: demands.delta_f_d,
            delta_r_d: demands.delta_r_d,
            omega_f_d: demands.omega_f_d,
            omega_r_d: demands.omega_r_d,
            v_d: demands.v_d(),
            v_dot_d,
            omega_virt: demands.omega_virt,
            clamp: demands.clamp,
        }
    }

    /// Builds the initial reference for a run: the full kinematic chain at
    /// the initial state with the derivative filter starting settled
    /// (`v_dot_d = 0`). The steering demands this produces are also the
    /// natural initial axle angles for an on-path start.
    pub fn initialize(
        q: &ConfigState,
        reference: &PoseRef,
        g: &KinGains,
        p: &RobotParams,
    ) -> Self {
        let demands = reference_demands(q, reference, g, p, q.delta_f, q.delta_r);
        Self::from_demands(demands, Vector3::zeros())
    }
}

/// Advances the kinematic controller by one step: the full error/tracking/
/// steering chain plus the filtered backward-difference estimate of
/// `v_dot_d`.
///
/// The derivative estimate is the implicit-Euler discretization of a
/// dirty derivative with time constant [`TAU_FF`]: with filter state
/// `w` (recovered from the previous output as `v_d - tau * v_dot_d`),
/// the new estimate is `(v_d_new - w) / (tau + dt)`.
pub fn reference_step(
    q: &ConfigState,
    reference: &PoseRef,
    g: &KinGains,
    p: &RobotParams,
    prev: &ReferenceState,
    dt: f64,
) -> ReferenceState {
    let demands = reference_demands(q, reference, g, p, prev.delta_f_d, prev.delta_r_d);
    let w_prev = prev.v_d.to_vector() - TAU_FF * prev.v_dot_d;
    let v_dot_d = (demands.v_d().to_vector() - w_prev) / (TAU_FF + dt);
    ReferenceState::from_demands(demands, v_dot_d)
}
