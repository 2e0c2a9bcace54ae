//! Closed-loop fixed-step simulation of the reduced dynamics driven by the
//! kinematic and torque controllers, with disturbance injection and trace
//! recording.
//!
//! Two integration modes are provided:
//!
//! * `rk4` integrates the **whole closed loop as one smooth ODE** — plant,
//!   error integral, derivative-filter state, and reference configuration
//!   flow together — so every recorded quantity converges at fourth order.
//!   This is the mode for verifying continuous-time energy identities,
//!   whose finite-difference residuals must shrink 16x when the step halves.
//! * `euler` is the discrete zero-order-hold pipeline an embedded target
//!   would run: sample the trajectory, update the reference and the PI state,
//!   hold the wrench across the step, forward-Euler the plant.
//!
//! Controller gains and rates are shared between the modes; on smooth
//! stretches they agree to first order in the step size.

use nalgebra::{SVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dyncontrol::{commanded_wrench, control_step, ControllerState, PIGains};
use crate::kincontrol::{
    pose_error, reference_demands, reference_step, wrap_angle, KinDemands, KinGains, PoseRef,
    ReferenceState, TAU_FF,
};
use crate::model::{
    b_tilde_11, c_tilde_11, jacobian, m_tilde_11, BodyVelocity, ConfigState, RobotParams, Wrench,
};
use crate::traj::TrajectorySpec;
use crate::uncertainty::{eval_f, UncertaintyModel};

/// Absolute bound on any state component before a run aborts as diverged.
const DIVERGENCE_GUARD: f64 = 1e6;

/// Errors a simulation run can produce.
#[derive(Debug, Error)]
pub enum SimError {
    /// The configuration failed validation before the run started.
    #[error("invalid simulation setup: {0}")]
    Config(String),
    /// A state component left the guarded region (or stopped being finite).
    #[error("state diverged at t = {t} s: {what} = {value}")]
    Diverged { t: f64, what: String, value: f64 },
    /// A trace file could not be parsed.
    #[error("trace parse error at line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

/// Which integration scheme a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Classical fourth-order Runge-Kutta over the combined closed-loop
    /// state (plant, integral action, derivative filter, reference flow).
    Rk4,
    /// Zero-order-hold discrete pipeline with forward-Euler plant updates.
    Euler,
}

/// Explicit initial plant state; omit to start exactly on the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub q: ConfigState,
    pub v: BodyVelocity,
}

/// Fixed-step run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Control and integration step (s); the loops share the rate.
    pub dt: f64,
    /// Run length (s). Zero records just the initial sample.
    pub t_end: f64,
    pub integrator: Integrator,
    /// Steps per recorded trace row.
    pub record_stride: usize,
    /// Initial plant state; `None` seeds the robot on the reference with
    /// the steering aligned to the initial demands.
    pub initial: Option<InitialState>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 70.0,
            integrator: Integrator::Rk4,
            record_stride: 1,
            initial: None,
        }
    }
}

impl SimConfig {
    /// Rejects step sizes and strides a run cannot use.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if self.record_stride == 0 {
            return Err("record_stride must be at least 1".into());
        }
        if let Some(init) = &self.initial {
            let vals = [
                init.q.x,
                init.q.y,
                init.q.theta,
                init.q.phi,
                init.q.delta_f,
                init.q.delta_r,
                init.v.v_w,
                init.v.omega_f,
                init.v.omega_r,
            ];
            if !vals.iter().all(|v| v.is_finite()) {
                return Err("initial state must be finite".into());
            }
        }
        Ok(())
    }

    fn n_steps(&self) -> usize {
        (self.t_end / self.dt + 1e-9).floor() as usize
    }
}

/// One recorded sample of a run. Carries more than the CSV columns: the full
/// reference state (including the acceleration feedforward actually used),
/// the integral state, and both reference configurations — the algebraic one
/// the feedforward was evaluated at and the flowed one obtained by
/// integrating the reference velocity through the kinematics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub q: ConfigState,
    pub v: BodyVelocity,
    pub reference: ReferenceState,
    /// Reference configuration used by the torque-loop feedforward:
    /// trajectory pose plus demanded steering angles.
    pub q_d: ConfigState,
    /// Reference configuration flow, integrated as `q_dot = J(q) v_d` from
    /// the trajectory start; the configuration-mismatch term of the
    /// disturbance budget is measured against this.
    pub q_flow: ConfigState,
    pub tau: Wrench,
    pub e_v: Vector3<f64>,
    /// Body-frame pose errors `(e_x, e_y, e_theta)`, heading wrapped.
    pub e_pose: Vector3<f64>,
    /// Projected disturbance force actually applied this step.
    pub f_tilde: Vector3<f64>,
    /// Integral of the velocity error at this step.
    pub eta: Vector3<f64>,
    /// Storage-function value at this step.
    pub storage: f64,
    /// Bitmask of the reference clamps active this step (front/rear angle,
    /// front/rear rate); see [`ReferenceState::clamp`]. Zero when nothing
    /// clamped. The reference signals are smooth between changes of this
    /// pattern.
    pub clamp: u8,
}

/// Fixed header of the trace CSV schema.
pub const CSV_HEADER: &str = "t,x,y,theta,phi,delta_f,delta_r,v_w,omega_f,omega_r,vwd,omfd,omrd,delta_fd,delta_rd,tau_w,tau_f,tau_r,ev1,ev2,ev3,ex,ey,etheta,ft1,ft2,ft3,V,clamp";

/// Number of columns in the trace CSV schema.
pub const CSV_COLUMNS: usize = 29;

impl TraceRow {
    /// True when any reference clamp was active this step.
    pub fn saturated(&self) -> bool {
        self.clamp != 0
    }

    /// The row's CSV values in schema order; the clamp bitmask maps to its
    /// integer value.
    pub fn csv_values(&self) -> [f64; CSV_COLUMNS] {
        [
            self.t,
            self.q.x,
            self.q.y,
            self.q.theta,
            self.q.phi,
            self.q.delta_f,
            self.q.delta_r,
            self.v.v_w,
            self.v.omega_f,
            self.v.omega_r,
            self.reference.v_d.v_w,
            self.reference.v_d.omega_f,
            self.reference.v_d.omega_r,
            self.reference.delta_f_d,
            self.reference.delta_r_d,
            self.tau.tau_w,
            self.tau.tau_f,
            self.tau.tau_r,
            self.e_v[0],
            self.e_v[1],
            self.e_v[2],
            self.e_pose[0],
            self.e_pose[1],
            self.e_pose[2],
            self.f_tilde[0],
            self.f_tilde[1],
            self.f_tilde[2],
            self.storage,
            self.clamp as f64,
        ]
    }
}

/// A completed run: the recorded rows plus the grid they were recorded on.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    /// Integration step of the run (s).
    pub dt: f64,
    /// Steps per recorded row.
    pub record_stride: usize,
    pub rows: Vec<TraceRow>,
}

impl SimTrace {
    /// Time between recorded rows (s).
    pub fn sample_period(&self) -> f64 {
        self.dt * self.record_stride as f64
    }

    /// Writes the trace in the fixed CSV schema. Values are printed in the
    /// shortest form that parses back to the identical float, so a write +
    /// parse round trip is exact.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        use std::fmt::Write as _;
        let mut line = String::with_capacity(512);
        writeln!(out, "{CSV_HEADER}")?;
        for row in &self.rows {
            line.clear();
            for (i, v) in row.csv_values().iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                let _ = write!(line, "{v}");
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// The trace as a CSV string.
    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }

    /// Parses CSV text in the trace schema back into raw rows.
    pub fn parse_csv(text: &str) -> Result<Vec<[f64; CSV_COLUMNS]>, SimError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim_end() == CSV_HEADER => {}
            Some((_, header)) => {
                return Err(SimError::Csv {
                    line: 1,
                    msg: format!("unexpected header {header:?}"),
                })
            }
            None => {
                return Err(SimError::Csv {
                    line: 1,
                    msg: "empty file".into(),
                })
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let mut row = [0.0; CSV_COLUMNS];
            let mut fields = line.split(',');
            for (col, slot) in row.iter_mut().enumerate() {
                let field = fields.next().ok_or(SimError::Csv {
                    line: idx + 1,
                    msg: format!("expected {CSV_COLUMNS} fields, found {col}"),
                })?;
                *slot = field.trim().parse::<f64>().map_err(|e| SimError::Csv {
                    line: idx + 1,
                    msg: format!("column {}: {e}", col + 1),
                })?;
            }
            if fields.next().is_some() {
                return Err(SimError::Csv {
                    line: idx + 1,
                    msg: format!("more than {CSV_COLUMNS} fields"),
                });
            }
            rows.push(row);
        }
        Ok(rows)
    }
}

/// Open-loop reduced dynamics: `q_dot = J(q) v` and
/// `v_dot = M~(q)^-1 (B~(q) tau - C~(q, q_dot) v - f~)`, with the projected
/// disturbance evaluated at the current state and time.
pub fn dynamics_rhs(
    q: &ConfigState,
    v: &BodyVelocity,
    tau: &Wrench,
    model: &UncertaintyModel,
    p: &RobotParams,
    t: f64,
) -> (Vector6<f64>, Vector3<f64>) {
    let (q_dot, v_dot, _) = dynamics_forces(q, v, tau, model, p, t);
    (q_dot, v_dot)
}

/// Dynamics plus the projected disturbance it applied, for recording.
fn dynamics_forces(
    q: &ConfigState,
    v: &BodyVelocity,
    tau: &Wrench,
    model: &UncertaintyModel,
    p: &RobotParams,
    t: f64,
) -> (Vector6<f64>, Vector3<f64>, Vector3<f64>) {
    let j = jacobian(q, p);
    let q_dot = j * v.to_vector();
    let f_full = eval_f(model, q, &q_dot, t, p);
    let f_t = j.transpose() * f_full;

    let forcing = Vector3::new(
        b_tilde_11(q, p) * tau.tau_w - c_tilde_11(q, v.omega_f, v.omega_r, p) * v.v_w - f_t[0],
        2.0 * tau.tau_f - f_t[1],
        2.0 * tau.tau_r - f_t[2],
    );
    let steer_inertia = 2.0 * p.i_delta;
    let v_dot = Vector3::new(
        forcing[0] / m_tilde_11(q, p),
        forcing[1] / steer_inertia,
        forcing[2] / steer_inertia,
    );
    (q_dot, v_dot, f_t)
}

/// One classical fourth-order Runge-Kutta step of `x_dot = rhs(t, x)`.
pub fn rk4_step<const N: usize, F>(
    x: &SVector<f64, N>,
    t: f64,
    dt: f64,
    rhs: &mut F,
) -> SVector<f64, N>
where
    F: FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    let k1 = rhs(t, x);
    let k2 = rhs(t + 0.5 * dt, &(x + 0.5 * dt * k1));
    let k3 = rhs(t + 0.5 * dt, &(x + 0.5 * dt * k2));
    let k4 = rhs(t + dt, &(x + dt * k3));
    x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Builds the canonical on-reference start: pose from the trajectory,
/// steering axles aligned to the initial demands, body velocity equal to the
/// initial reference, so the run begins with zero velocity error.
pub fn on_reference_start(
    traj: &TrajectorySpec,
    g: &KinGains,
    p: &RobotParams,
) -> (ConfigState, BodyVelocity, ReferenceState) {
    let pose = traj.sample(0.0);
    let mut q = ConfigState {
        x: pose.x_d,
        y: pose.y_d,
        theta: pose.theta_d,
        phi: 0.0,
        delta_f: 0.0,
        delta_r: 0.0,
    };
    let seed = ReferenceState::initialize(&q, &pose, g, p);
    q.delta_f = seed.delta_f_d;
    q.delta_r = seed.delta_r_d;
    // With the axles on the demanded angles the rate demands vanish, so the
    // initial reference velocity is purely the wheel-speed demand.
    let reference = ReferenceState::initialize(&q, &pose, g, p);
    (q, reference.v_d, reference)
}

fn reference_config(pose: &PoseRef, delta_f_d: f64, delta_r_d: f64) -> ConfigState {
    ConfigState {
        x: pose.x_d,
        y: pose.y_d,
        theta: pose.theta_d,
        phi: 0.0,
        delta_f: delta_f_d,
        delta_r: delta_r_d,
    }
}

fn guard_component(t: f64, what: &str, value: f64) -> Result<(), SimError> {
    if !value.is_finite() || value.abs() > DIVERGENCE_GUARD {
        return Err(SimError::Diverged {
            t,
            what: what.to_string(),
            value,
        });
    }
    Ok(())
}

fn guard_state(t: f64, q: &ConfigState, v: &BodyVelocity, eta: &Vector3<f64>) -> Result<(), SimError> {
    let named = [
        ("x", q.x),
        ("y", q.y),
        ("theta", q.theta),
        ("phi", q.phi),
        ("delta_f", q.delta_f),
        ("delta_r", q.delta_r),
        ("v_w", v.v_w),
        ("omega_f", v.omega_f),
        ("omega_r", v.omega_r),
    ];
    for (what, value) in named {
        guard_component(t, what, value)?;
    }
    for k in 0..3 {
        guard_component(t, "eta", eta[k])?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn make_row(
    t: f64,
    q: &ConfigState,
    v: &BodyVelocity,
    reference: &ReferenceState,
    q_d: &ConfigState,
    q_flow: &ConfigState,
    tau: &Wrench,
    e_v: &Vector3<f64>,
    pose: &PoseRef,
    f_tilde: &Vector3<f64>,
    eta: &Vector3<f64>,
    pi: &PIGains,
    p: &RobotParams,
) -> TraceRow {
    let (e_x, e_y, e_theta) = pose_error(q, pose);
    let storage = crate::analysis::storage(e_v, eta, q, &pi.ki_torque(), p);
    TraceRow {
        t,
        q: *q,
        v: *v,
        reference: *reference,
        q_d: *q_d,
        q_flow: *q_flow,
        tau: *tau,
        e_v: *e_v,
        e_pose: Vector3::new(e_x, e_y, wrap_angle(e_theta)),
        f_tilde: *f_tilde,
        eta: *eta,
        storage,
        clamp: reference.clamp,
    }
}

/// Combined closed-loop state for the continuous mode: plant configuration,
/// body velocity, error integral, reference configuration flow, derivative
/// filter state.
type LoopState = SVector<f64, 21>;

fn pack(
    q: &ConfigState,
    v: &BodyVelocity,
    eta: &Vector3<f64>,
    q_flow: &ConfigState,
    w: &Vector3<f64>,
) -> LoopState {
    let mut x = LoopState::zeros();
    x.fixed_rows_mut::<6>(0).copy_from(&q.to_vector());
    x.fixed_rows_mut::<3>(6).copy_from(&v.to_vector());
    x.fixed_rows_mut::<3>(9).copy_from(eta);
    x.fixed_rows_mut::<6>(12).copy_from(&q_flow.to_vector());
    x.fixed_rows_mut::<3>(18).copy_from(w);
    x
}

fn unpack(x: &LoopState) -> (ConfigState, BodyVelocity, Vector3<f64>, ConfigState, Vector3<f64>) {
    (
        ConfigState::from_vector(x.fixed_rows::<6>(0).into_owned()),
        BodyVelocity::from_vector(x.fixed_rows::<3>(6).into_owned()),
        x.fixed_rows::<3>(9).into_owned(),
        ConfigState::from_vector(x.fixed_rows::<6>(12).into_owned()),
        x.fixed_rows::<3>(18).into_owned(),
    )
}

struct ClosedLoop<'a> {
    traj: &'a TrajectorySpec,
    kin: &'a KinGains,
    pi: &'a PIGains,
    model: &'a UncertaintyModel,
    p: &'a RobotParams,
}

/// Algebraic quantities of the closed loop at one instant of the continuous
/// mode.
struct Instant {
    pose: PoseRef,
    demands: KinDemands,
    v_d: Vector3<f64>,
    /// Continuous derivative-filter output, the acceleration feedforward.
    z: Vector3<f64>,
    q_d: ConfigState,
    e_v: Vector3<f64>,
    tau: Wrench,
}

impl ClosedLoop<'_> {
    fn instant(
        &self,
        t: f64,
        q: &ConfigState,
        v: &BodyVelocity,
        eta: &Vector3<f64>,
        w: &Vector3<f64>,
        anchor: (f64, f64),
    ) -> Instant {
        let pose = self.traj.sample(t);
        let demands = reference_demands(q, &pose, self.kin, self.p, anchor.0, anchor.1);
        let v_d = demands.v_d().to_vector();
        let z = (v_d - w) / TAU_FF;
        let q_d = reference_config(&pose, demands.delta_f_d, demands.delta_r_d);
        let e_v = v.to_vector() - v_d;
        let tau = commanded_wrench(
            q,
            &q_d,
            &e_v,
            eta,
            &v_d,
            &z,
            demands.omega_f_d,
            demands.omega_r_d,
            self.pi,
            self.p,
        );
        Instant {
            pose,
            demands,
            v_d,
            z,
            q_d,
            e_v,
            tau,
        }
    }

    fn derivative(&self, t: f64, x: &LoopState, anchor: (f64, f64)) -> LoopState {
        let (q, v, eta, q_flow, w) = unpack(x);
        let inst = self.instant(t, &q, &v, &eta, &w, anchor);
        let (q_dot, v_dot, _) = dynamics_forces(&q, &v, &inst.tau, self.model, self.p, t);
        let q_flow_dot = jacobian(&q_flow, self.p) * inst.v_d;
        let mut dx = LoopState::zeros();
        dx.fixed_rows_mut::<6>(0).copy_from(&q_dot);
        dx.fixed_rows_mut::<3>(6).copy_from(&v_dot);
        dx.fixed_rows_mut::<3>(9).copy_from(&inst.e_v);
        dx.fixed_rows_mut::<6>(12).copy_from(&q_flow_dot);
        dx.fixed_rows_mut::<3>(18).copy_from(&inst.z);
        dx
    }
}

/// Runs the closed loop and records a trace.
///
/// Deterministic for a fixed configuration. Aborts with a diagnostic as soon
/// as any state component leaves the guarded region or stops being finite.
pub fn run(
    cfg: &SimConfig,
    traj: &TrajectorySpec,
    kin: &KinGains,
    pi: &PIGains,
    model: &UncertaintyModel,
    p: &RobotParams,
) -> Result<SimTrace, SimError> {
    cfg.validate().map_err(SimError::Config)?;
    traj.validate().map_err(SimError::Config)?;
    kin.validate().map_err(SimError::Config)?;
    pi.validate().map_err(SimError::Config)?;
    p.validate()
        .map_err(|e| SimError::Config(e.to_string()))?;

    let pose0 = traj.sample(0.0);
    let (q0, v0, ref0) = match &cfg.initial {
        Some(init) => (
            init.q,
            init.v,
            ReferenceState::initialize(&init.q, &pose0, kin, p),
        ),
        None => on_reference_start(traj, kin, p),
    };
    let q_flow0 = reference_config(&pose0, ref0.delta_f_d, ref0.delta_r_d);

    let n_steps = cfg.n_steps();
    let mut rows = Vec::with_capacity(n_steps / cfg.record_stride + 2);

    match cfg.integrator {
        Integrator::Euler => {
            let mut q = q0;
            let mut v = v0;
            let mut q_flow = q_flow0;
            let mut prev_ref = ref0;
            let mut ctrl = ControllerState::new();
            for k in 0..=n_steps {
                let t = k as f64 * cfg.dt;
                let pose = traj.sample(t);
                let reference = reference_step(&q, &pose, kin, p, &prev_ref, cfg.dt);
                let q_d = reference_config(&pose, reference.delta_f_d, reference.delta_r_d);
                let (tau, ctrl_next, e_v) =
                    control_step(&q, &v, &reference, &q_d, pi, p, &ctrl, cfg.dt);
                let (q_dot, v_dot, f_t) = dynamics_forces(&q, &v, &tau, model, p, t);
                if k % cfg.record_stride == 0 {
                    rows.push(make_row(
                        t, &q, &v, &reference, &q_d, &q_flow, &tau, &e_v, &pose, &f_t,
                        &ctrl_next.eta, pi, p,
                    ));
                }
                guard_state(t, &q, &v, &ctrl_next.eta)?;
                if k < n_steps {
                    q = ConfigState::from_vector(q.to_vector() + cfg.dt * q_dot);
                    v = BodyVelocity::from_vector(v.to_vector() + cfg.dt * v_dot);
                    let q_flow_dot = jacobian(&q_flow, p) * reference.v_d.to_vector();
                    q_flow = ConfigState::from_vector(q_flow.to_vector() + cfg.dt * q_flow_dot);
                    prev_ref = reference;
                    ctrl = ctrl_next;
                }
            }
        }
        Integrator::Rk4 => {
            let closed = ClosedLoop {
                traj,
                kin,
                pi,
                model,
                p,
            };
            let mut x = pack(&q0, &v0, &Vector3::zeros(), &q_flow0, &v0.to_vector());
            let mut anchor = (ref0.delta_f_d, ref0.delta_r_d);
            for k in 0..=n_steps {
                let t = k as f64 * cfg.dt;
                let (q, v, eta, q_flow, w) = unpack(&x);
                let inst = closed.instant(t, &q, &v, &eta, &w, anchor);
                if k % cfg.record_stride == 0 {
                    let (_, _, f_t) = dynamics_forces(&q, &v, &inst.tau, model, p, t);
                    let reference = ReferenceState {
                        v_w_d: inst.demands.v_w_d,
                        delta_f_d: inst.demands.delta_f_d,
                        delta_r_d: inst.demands.delta_r_d,
                        omega_f_d: inst.demands.omega_f_d,
                        omega_r_d: inst.demands.omega_r_d,
                        v_d: BodyVelocity::from_vector(inst.v_d),
                        v_dot_d: inst.z,
                        omega_virt: inst.demands.omega_virt,
                        clamp: inst.demands.clamp,
                    };
                    rows.push(make_row(
                        t, &q, &v, &reference, &inst.q_d, &q_flow, &inst.tau, &inst.e_v,
                        &inst.pose, &f_t, &eta, pi, p,
                    ));
                }
                guard_state(t, &q, &v, &eta)?;
                if k < n_steps {
                    let mut rhs =
                        |tt: f64, xx: &LoopState| closed.derivative(tt, xx, anchor);
                    x = rk4_step(&x, t, cfg.dt, &mut rhs);
                    // Mirror the discrete loop's anti-windup on the
                    // continuously integrated error integral.
                    for i in 0..3 {
                        x[9 + i] = x[9 + i].clamp(-pi.eta_limit[i], pi.eta_limit[i]);
                    }
                    anchor = (inst.demands.delta_f_d, inst.demands.delta_r_d);
                }
            }
        }
    }

    Ok(SimTrace {
        dt: cfg.dt,
        record_stride: cfg.record_stride,
        rows,
    })
}
