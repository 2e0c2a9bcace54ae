//! Modeling, control, simulation, and stability certification for a
//! four-wheel independently driven and steered mobile platform.
//!
//! The library covers the full chain from constrained rigid-body modeling to
//! verified closed-loop behavior:
//!
//! * [`model`] — rolling-constraint kinematics and the reduced (projected)
//!   dynamics of the platform: admissible-velocity Jacobian, reduced
//!   inertia/Coriolis/input operators, and the reference parameter set.
//! * [`uncertainty`] — disturbance models (viscous drag, constant bias,
//!   in-plane gravity, thruster pulses, composites) with declared affine
//!   bounds and sampled verification of those bounds.
//! * [`bounds`] — structural constants over an operating envelope: inertia
//!   eigenvalue bounds, Coriolis growth, kinematic gains, Lipschitz moduli,
//!   residual coefficients, and the sufficient gain condition producing a
//!   [`bounds::GainCertificate`].
//! * [`kincontrol`] — the outer kinematic loop: pose-error tracking law,
//!   steering split with saturation handling, rate limits, and the filtered
//!   acceleration feedforward.
//! * [`dyncontrol`] — the inner torque loop: PI feedback on the velocity
//!   error with anti-windup plus reference-configuration feedforward.
//! * [`traj`] — analytic reference paths (flower, Lissajous) and sampled
//!   paths with linear or cubic interpolation.
//! * [`sim`] — fixed-step closed-loop simulation (fourth-order continuous
//!   mode and zero-order-hold discrete mode), trace recording, CSV I/O.
//! * [`analysis`] — post-run verification of the storage-function
//!   identities and inequalities the certificate rests on, plus tracking
//!   metrics.
//! * [`config`] — the experiment document format and shipped presets.
//! * [`fixtures`] — frozen golden values revalidated against the library.

pub mod analysis;
pub mod bounds;
pub mod config;
pub mod dyncontrol;
pub mod fixtures;
pub mod kincontrol;
pub mod model;
pub mod sim;
pub mod traj;
pub mod uncertainty;

pub use analysis::{
    exact_passivity_check, full_report, l2_gain_check, lyap_bound_check, residual_bound_check,
    storage, tracking_metrics, tracking_metrics_from, StabilityReport, TrackingMetrics,
};
pub use bounds::{certify, BoundSet, EnvelopeSpec, GainCertificate};
pub use config::{preset, ExperimentConfig, PRESET_NAMES};
pub use dyncontrol::{commanded_wrench, control_step, ControllerState, PIGains};
pub use kincontrol::{KinGains, PoseRef, ReferenceState};
pub use model::{BodyVelocity, ConfigState, RobotParams, Wrench};
pub use sim::{
    dynamics_rhs, on_reference_start, rk4_step, run, Integrator, SimConfig, SimError, SimTrace,
    TraceRow,
};
pub use traj::{flower_ref, lissajous_ref, TrajectorySpec};
pub use uncertainty::{eval_f, UncertaintyModel};
