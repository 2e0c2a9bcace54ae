//! Memoryless disturbance-force models and their declared envelope bounds.
//!
//! Every model evaluates to a generalized force `f(q, q_dot, t)` on the six
//! configuration coordinates — the resistive side of the dynamics — and
//! carries per-coordinate bound parameters `(c, d)` such that
//! `|f_k| <= c_k + d_k |q_dot_k|` everywhere on the operating envelope,
//! plus Lipschitz caps on the state sensitivity. Bounds are auto-derived per
//! model kind and may be overridden (an override is only trusted after
//! [`verify_assumption_bounds`] has sampled it against the model).

use nalgebra::Vector6;
use serde::{Deserialize, Serialize};

use crate::bounds::{sample_envelope, EnvelopeSpec};
use crate::model::{jacobian, ConfigState, RobotParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Components with magnitude below this are snapped to exactly zero when a
/// force direction is resolved from an angle, so that axis-aligned
/// configurations produce axis-aligned forces instead of `1e-16` residue
/// that would defeat exact zero declared bounds.
const DIRECTION_SNAP: f64 = 1e-12;

fn default_gravity() -> f64 {
    9.81
}

/// Viscous drag in the drive train: torque opposing wheel spin and/or the
/// steering motion, proportional to the respective rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ViscousParams {
    /// Drag coefficient on the wheel-spin rate (N m s/rad).
    pub b_phi: f64,
    /// Drag coefficient on each steering rate (N m s/rad).
    pub b_delta: f64,
}

/// Constant generalized force on every coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasParams {
    /// The constant force vector (N or N m per coordinate).
    pub c_bias: [f64; 6],
}

/// In-plane constant force of magnitude `m g`, for operation on a vertical
/// surface where gravity acts within the motion plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GravityPlaneParams {
    /// Gravitational acceleration (m/s^2).
    #[serde(default = "default_gravity")]
    pub g: f64,
    /// Direction angle (rad) of the resulting force vector in the world
    /// x-y plane; the net pull on the body is opposite to this vector
    /// because the force enters on the resistive side of the dynamics.
    pub direction: f64,
}

/// One scheduled force pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    /// Pulse start (s), inclusive.
    pub t_start: f64,
    /// Pulse end (s), exclusive.
    pub t_end: f64,
    /// Force applied while active (N or N m per coordinate).
    pub force: [f64; 6],
}

/// Scheduled force pulses (e.g. thruster assistance). Time-dependent, so
/// excluded from the state-sensitivity (Lipschitz) bookkeeping and intended
/// for robustness simulations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSchedule {
    /// The pulses; overlapping pulses add.
    pub pulses: Vec<Pulse>,
}

/// The disturbance model kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyKind {
    /// No disturbance.
    None,
    /// Viscous drag on wheel spin and/or steering.
    Viscous(ViscousParams),
    /// Constant generalized force.
    ConstantBias(BiasParams),
    /// In-plane gravity for vertical-surface operation.
    GravityPlane(GravityPlaneParams),
    /// Scheduled force pulses.
    ThrusterPulse(PulseSchedule),
    /// Sum of independent parts.
    Composite { parts: Vec<UncertaintyModel> },
}

/// A disturbance model together with its declared envelope bounds. Declared
/// values override the auto-derived ones; `None` means auto.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyModel {
    /// Which force law applies.
    pub kind: UncertaintyKind,
    /// Declared per-coordinate constant bounds (N or N m).
    #[serde(default)]
    pub c: Option<[f64; 6]>,
    /// Declared per-coordinate rate-proportional bounds (N s/m or N m s/rad).
    #[serde(default)]
    pub d: Option<[f64; 6]>,
    /// Declared cap on the configuration sensitivity of `f`.
    #[serde(default)]
    pub l_f1: Option<f64>,
    /// Declared cap on the rate sensitivity of `f`.
    #[serde(default)]
    pub l_f2: Option<f64>,
}

impl Default for UncertaintyModel {
    fn default() -> Self {
        Self::none()
    }
}

impl UncertaintyModel {
    /// No disturbance.
    pub fn none() -> Self {
        Self {
            kind: UncertaintyKind::None,
            c: None,
            d: None,
            l_f1: None,
            l_f2: None,
        }
    }

    /// Viscous drag with the given wheel-spin and steering coefficients.
    pub fn viscous(b_phi: f64, b_delta: f64) -> Self {
        Self {
            kind: UncertaintyKind::Viscous(ViscousParams { b_phi, b_delta }),
            ..Self::none()
        }
    }

    /// Constant force vector.
    pub fn constant_bias(c_bias: [f64; 6]) -> Self {
        Self {
            kind: UncertaintyKind::ConstantBias(BiasParams { c_bias }),
            ..Self::none()
        }
    }

    /// In-plane gravity with force direction `direction` (rad).
    pub fn gravity_plane(g: f64, direction: f64) -> Self {
        Self {
            kind: UncertaintyKind::GravityPlane(GravityPlaneParams { g, direction }),
            ..Self::none()
        }
    }

    /// Scheduled pulses.
    pub fn thruster_pulse(pulses: Vec<Pulse>) -> Self {
        Self {
            kind: UncertaintyKind::ThrusterPulse(PulseSchedule { pulses }),
            ..Self::none()
        }
    }

    /// Sum of parts.
    pub fn composite(parts: Vec<UncertaintyModel>) -> Self {
        Self {
            kind: UncertaintyKind::Composite { parts },
            ..Self::none()
        }
    }

    /// Whether the evaluated force depends on time (scheduled pulses
    /// anywhere in the tree).
    pub fn time_dependent(&self) -> bool {
        match &self.kind {
            UncertaintyKind::ThrusterPulse(_) => true,
            UncertaintyKind::Composite { parts } => parts.iter().any(|m| m.time_dependent()),
            _ => false,
        }
    }

    /// Effective per-coordinate constant bounds: declared if present,
    /// otherwise auto-derived from the model parameters. A composite sums
    /// its parts' effective bounds component-wise.
    pub fn bound_c(&self, p: &RobotParams) -> [f64; 6] {
        if let Some(c) = self.c {
            return c;
        }
        match &self.kind {
            UncertaintyKind::None | UncertaintyKind::Viscous(_) => [0.0; 6],
            UncertaintyKind::ConstantBias(b) => b.c_bias.map(f64::abs),
            UncertaintyKind::GravityPlane(gp) => {
                let (fx, fy) = gravity_components(gp, p);
                [fx.abs(), fy.abs(), 0.0, 0.0, 0.0, 0.0]
            }
            UncertaintyKind::ThrusterPulse(sched) => pulse_envelope(&sched.pulses),
            UncertaintyKind::Composite { parts } => {
                let mut sum = [0.0; 6];
                for part in parts {
                    for (s, c) in sum.iter_mut().zip(part.bound_c(p)) {
                        *s += c;
                    }
                }
                sum
            }
        }
    }

    /// Effective per-coordinate rate-proportional bounds; see [`Self::bound_c`].
    // The platform parameters are threaded through for the same reason they
    // exist on `bound_c`: declared overrides and future kinds may need them,
    // even though today only the recursive arm passes them along.
    #[allow(clippy::only_used_in_recursion)]
    pub fn bound_d(&self, p: &RobotParams) -> [f64; 6] {
        if let Some(d) = self.d {
            return d;
        }
        match &self.kind {
            UncertaintyKind::Viscous(v) => {
                [0.0, 0.0, 0.0, v.b_phi.abs(), v.b_delta.abs(), v.b_delta.abs()]
            }
            UncertaintyKind::Composite { parts } => {
                let mut sum = [0.0; 6];
                for part in parts {
                    for (s, d) in sum.iter_mut().zip(part.bound_d(p)) {
                        *s += d;
                    }
                }
                sum
            }
            _ => [0.0; 6],
        }
    }

    /// Effective cap on the configuration sensitivity of `f`. Zero for all
    /// built-in kinds (none of them read the configuration); stored because
    /// the assumption defines it, but no downstream bound consumes it.
    pub fn lipschitz_q(&self, _p: &RobotParams) -> f64 {
        if let Some(l) = self.l_f1 {
            return l;
        }
        match &self.kind {
            UncertaintyKind::Composite { parts } => {
                parts.iter().map(|m| m.lipschitz_q(_p)).sum()
            }
            _ => 0.0,
        }
    }

    /// Effective cap on the rate sensitivity of `f`, measured in the
    /// wheel-speed-weighted metric used by all the projection bounds (the
    /// wheel-spin coordinate is weighted by `r`, so a drag coefficient on
    /// the spin rate contributes at `b_phi / r^2`). Time-dependent models
    /// contribute nothing: their force ignores the rates.
    pub fn lipschitz_rate(&self, p: &RobotParams) -> f64 {
        if let Some(l) = self.l_f2 {
            return l;
        }
        match &self.kind {
            UncertaintyKind::Viscous(v) => {
                (v.b_phi.abs() / (p.r * p.r)).max(v.b_delta.abs())
            }
            UncertaintyKind::Composite { parts } => {
                parts.iter().map(|m| m.lipschitz_rate(p)).sum()
            }
            _ => 0.0,
        }
    }
}

fn gravity_components(gp: &GravityPlaneParams, p: &RobotParams) -> (f64, f64) {
    let snap = |x: f64| if x.abs() < DIRECTION_SNAP { 0.0 } else { x };
    let magnitude = p.m * gp.g;
    (
        magnitude * snap(gp.direction.cos()),
        magnitude * snap(gp.direction.sin()),
    )
}

/// Per-coordinate envelope of a pulse schedule: the largest magnitude the
/// summed active forces reach over any time, zero baseline included.
fn pulse_envelope(pulses: &[Pulse]) -> [f64; 6] {
    let mut boundaries: Vec<f64> = pulses
        .iter()
        .flat_map(|pl| [pl.t_start, pl.t_end])
        .collect();
    boundaries.sort_by(f64::total_cmp);
    boundaries.dedup();
    let mut envelope = [0.0_f64; 6];
    for window in boundaries.windows(2) {
        let t_mid = 0.5 * (window[0] + window[1]);
        let mut active = [0.0; 6];
        for pl in pulses {
            if t_mid >= pl.t_start && t_mid < pl.t_end {
                for (a, f) in active.iter_mut().zip(pl.force) {
                    *a += f;
                }
            }
        }
        for (e, a) in envelope.iter_mut().zip(active) {
            *e = e.max(a.abs());
        }
    }
    envelope
}

/// Evaluates the disturbance force on the six configuration coordinates.
/// Pure in `(q, q_dot, t)`: no internal state, identical inputs give
/// identical outputs.
// The configuration is part of the force-model signature even though no
// built-in kind reads it today (the assumption allows configuration-dependent
// forces); only the recursive arm forwards it.
#[allow(clippy::only_used_in_recursion)]
pub fn eval_f(
    model: &UncertaintyModel,
    q: &ConfigState,
    q_dot: &Vector6<f64>,
    t: f64,
    p: &RobotParams,
) -> Vector6<f64> {
    match &model.kind {
        UncertaintyKind::None => Vector6::zeros(),
        UncertaintyKind::Viscous(v) => Vector6::new(
            0.0,
            0.0,
            0.0,
            v.b_phi * q_dot[3],
            v.b_delta * q_dot[4],
            v.b_delta * q_dot[5],
        ),
        UncertaintyKind::ConstantBias(b) => Vector6::from_row_slice(&b.c_bias),
        UncertaintyKind::GravityPlane(gp) => {
            let (fx, fy) = gravity_components(gp, p);
            Vector6::new(fx, fy, 0.0, 0.0, 0.0, 0.0)
        }
        UncertaintyKind::ThrusterPulse(sched) => {
            let mut f = Vector6::zeros();
            for pl in &sched.pulses {
                if t >= pl.t_start && t < pl.t_end {
                    f += Vector6::from_row_slice(&pl.force);
                }
            }
            f
        }
        UncertaintyKind::Composite { parts } => {
            let mut f = Vector6::zeros();
            for part in parts {
                f += eval_f(part, q, q_dot, t, p);
            }
            f
        }
    }
}

/// Result of sampling a model against its effective bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionCheck {
    /// True when no sampled violation was found.
    pub pass: bool,
    /// Largest `|f_k| - (c_k + d_k |q_dot_k|)` over all samples and
    /// coordinates; at most zero when the bounds cover the model.
    pub max_component_violation: f64,
    /// Largest `||f|| - (||c|| + ||d|| ||q_dot||)` over all samples.
    pub max_aggregate_violation: f64,
    /// Number of `(q, v)` samples drawn.
    pub n_samples: usize,
    /// Description of the worst sample when the check fails.
    pub worst_sample: Option<String>,
}

/// Samples `(q, v)` from the operating envelope (rates realized through the
/// kinematics, `q_dot = J(q) v`) and checks the effective bounds of the
/// model, per coordinate and in the aggregate. Time-dependent models are
/// additionally sampled across their pulse schedule, including instants
/// outside every pulse.
pub fn verify_assumption_bounds(
    model: &UncertaintyModel,
    envelope: &EnvelopeSpec,
    p: &RobotParams,
    n_samples: usize,
) -> AssumptionCheck {
    let c = model.bound_c(p);
    let d = model.bound_d(p);
    let c_norm = Vector6::from_row_slice(&c).norm();
    let d_norm = Vector6::from_row_slice(&d).norm();

    let times = sample_times(model);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_b0d5);
    let mut check = AssumptionCheck {
        pass: true,
        max_component_violation: f64::NEG_INFINITY,
        max_aggregate_violation: f64::NEG_INFINITY,
        n_samples,
        worst_sample: None,
    };
    for _ in 0..n_samples {
        let (q, v) = sample_envelope(envelope, p, &mut rng);
        let q_dot = jacobian(&q, p) * v.to_vector();
        for &t in &times {
            let f = eval_f(model, &q, &q_dot, t, p);
            let mut worst_here = f64::NEG_INFINITY;
            for k in 0..6 {
                let violation = f[k].abs() - (c[k] + d[k] * q_dot[k].abs());
                worst_here = worst_here.max(violation);
            }
            let aggregate = f.norm() - (c_norm + d_norm * q_dot.norm());
            check.max_component_violation = check.max_component_violation.max(worst_here);
            check.max_aggregate_violation = check.max_aggregate_violation.max(aggregate);
            if worst_here > 0.0 || aggregate > 0.0 {
                check.pass = false;
                if check.worst_sample.is_none()
                    || worst_here >= check.max_component_violation
                {
                    check.worst_sample = Some(format!(
                        "t={t}, q={q:?}, v={v:?}: component violation {worst_here:.6e}, aggregate violation {aggregate:.6e}"
                    ));
                }
            }
        }
    }
    check
}

/// Time instants at which to probe a model: a single instant for
/// time-invariant models, otherwise the pulse boundaries, interval
/// midpoints, and a point beyond the whole schedule.
fn sample_times(model: &UncertaintyModel) -> Vec<f64> {
    fn collect(model: &UncertaintyModel, out: &mut Vec<f64>) {
        match &model.kind {
            UncertaintyKind::ThrusterPulse(sched) => {
                for pl in &sched.pulses {
                    out.push(pl.t_start);
                    out.push(0.5 * (pl.t_start + pl.t_end));
                    out.push(pl.t_end);
                }
            }
            UncertaintyKind::Composite { parts } => {
                for part in parts {
                    collect(part, out);
                }
            }
            _ => {}
        }
    }
    let mut ts = vec![0.0];
    collect(model, &mut ts);
    if let Some(max) = ts.iter().copied().max_by(f64::total_cmp) {
        ts.push(max + 1.0);
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}
