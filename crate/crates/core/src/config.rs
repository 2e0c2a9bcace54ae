//! Experiment configuration: one schema-validated document tying together
//! the platform, operating envelope, gains, trajectory, disturbance, and run
//! parameters, plus the shipped preset scenarios.

use serde::{Deserialize, Serialize};

use crate::analysis::{full_report, StabilityReport};
use crate::bounds::{certify, BoundSet, EnvelopeSpec, GainCertificate};
use crate::dyncontrol::PIGains;
use crate::kincontrol::KinGains;
use crate::model::RobotParams;
use crate::sim::{run, SimConfig, SimError, SimTrace};
use crate::traj::TrajectorySpec;
use crate::uncertainty::{Pulse, UncertaintyModel};

fn default_robot() -> RobotParams {
    RobotParams::reference_platform()
}

fn default_pi_gains() -> PIGains {
    PIGains::reference_gains()
}

fn default_seeds() -> Vec<u64> {
    vec![7]
}

fn default_epsilon() -> f64 {
    1e-3
}

/// One complete experiment: everything a run, a certificate, and a report
/// need. Parses strictly (unknown keys rejected); every field has a default,
/// so `{}` is the nominal flower experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub robot: RobotParams,
    pub envelope: EnvelopeSpec,
    pub kin_gains: KinGains,
    pub pi_gains: PIGains,
    pub trajectory: TrajectorySpec,
    pub disturbance: UncertaintyModel,
    pub sim: SimConfig,
    /// Seeds for sampled (randomized) checks run against this experiment.
    pub seeds: Vec<u64>,
    /// Slack the gain certificate is evaluated with (torque domain).
    pub certification_epsilon: f64,
    /// When set, the sharper velocity-growth constant replaces the larger
    /// rate-Lipschitz modulus in the residual coefficients.
    pub reduce_conservatism: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            robot: default_robot(),
            envelope: EnvelopeSpec::default(),
            kin_gains: KinGains::default(),
            pi_gains: default_pi_gains(),
            trajectory: TrajectorySpec::Flower,
            disturbance: UncertaintyModel::none(),
            sim: SimConfig::default(),
            seeds: default_seeds(),
            certification_epsilon: default_epsilon(),
            reduce_conservatism: false,
        }
    }
}

impl ExperimentConfig {
    /// Validates every part of the experiment.
    pub fn validate(&self) -> Result<(), String> {
        self.robot.validate().map_err(|e| e.to_string())?;
        self.envelope.validate()?;
        self.kin_gains.validate()?;
        self.pi_gains.validate()?;
        self.trajectory.validate()?;
        self.sim.validate()?;
        if !(self.certification_epsilon > 0.0 && self.certification_epsilon.is_finite()) {
            return Err(format!(
                "certification_epsilon must be positive, got {}",
                self.certification_epsilon
            ));
        }
        Ok(())
    }

    /// Structural constants for this platform, envelope, and disturbance.
    pub fn bounds(&self) -> BoundSet {
        BoundSet::compute(
            &self.robot,
            &self.envelope,
            &self.disturbance,
            self.reduce_conservatism,
        )
    }

    /// Evaluates the gain condition for this experiment.
    pub fn certificate(&self) -> GainCertificate {
        certify(&self.bounds(), &self.pi_gains, self.certification_epsilon)
    }

    /// Runs the closed-loop simulation this experiment describes.
    pub fn run(&self) -> Result<SimTrace, SimError> {
        run(
            &self.sim,
            &self.trajectory,
            &self.kin_gains,
            &self.pi_gains,
            &self.disturbance,
            &self.robot,
        )
    }

    /// Full stability report for a trace produced by this experiment.
    pub fn report(&self, trace: &SimTrace) -> StabilityReport {
        full_report(
            trace,
            &self.bounds(),
            &self.certificate(),
            &self.pi_gains,
            &self.disturbance,
            &self.robot,
        )
    }
}

/// Names of the shipped preset experiments.
pub const PRESET_NAMES: [&str; 2] = ["table1-floor-flower", "table1-wall-lissajous"];

/// Returns a shipped preset by name, or `None` for unknown names.
///
/// * `table1-floor-flower` — reference platform on the floor tracking the
///   four-petal flower for 70 s, steering bearings viscous, certified
///   reference gains.
/// * `table1-wall-lissajous` — the same platform on a vertical plane
///   tracking one Lissajous period (63 s) with in-plane gravity, a thruster
///   holding 98 % of the weight, and the same viscous steering drag.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    match name {
        "table1-floor-flower" => Some(ExperimentConfig {
            envelope: EnvelopeSpec {
                a_d: 2.0,
                ..EnvelopeSpec::default()
            },
            trajectory: TrajectorySpec::Flower,
            disturbance: UncertaintyModel::viscous(0.0, 0.0305),
            sim: SimConfig {
                t_end: 70.0,
                ..SimConfig::default()
            },
            ..ExperimentConfig::default()
        }),
        "table1-wall-lissajous" => {
            let robot = default_robot();
            let hold = 0.98 * robot.m * 9.81;
            Some(ExperimentConfig {
                envelope: EnvelopeSpec {
                    a_d: 2.0,
                    ..EnvelopeSpec::default()
                },
                trajectory: TrajectorySpec::Lissajous,
                disturbance: UncertaintyModel::composite(vec![
                    // In-plane weight: the pull on the body is toward -y.
                    UncertaintyModel::gravity_plane(9.81, std::f64::consts::FRAC_PI_2),
                    // Thruster holding 98 % of the weight for the whole run.
                    UncertaintyModel::thruster_pulse(vec![Pulse {
                        t_start: 0.0,
                        t_end: 64.0,
                        force: [0.0, -hold, 0.0, 0.0, 0.0, 0.0],
                    }]),
                    UncertaintyModel::viscous(0.0, 0.0305),
                ]),
                sim: SimConfig {
                    t_end: 63.0,
                    ..SimConfig::default()
                },
                ..ExperimentConfig::default()
            })
        }
        _ => None,
    }
}
