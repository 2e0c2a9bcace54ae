//! Reference trajectories: the two named experiment paths (a flower-shaped
//! rosette and a Lissajous figure) with analytic derivatives, plus an
//! interpolated time-stamped sample list for externally supplied paths.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::kincontrol::{wrap_angle, PoseRef};

/// Flower-shaped rosette: a cosine-modulated radius swept at half the
/// modulation rate, offset from the origin. The speed stays within
/// `[pi/70, pi/35]` m/s, so the path-following heading `atan2(y_dot, x_dot)`
/// and its rate are defined everywhere. Period 70 s.
pub fn flower_ref(t: f64) -> PoseRef {
    let (alpha_dot, beta_dot) = (TAU / 35.0, TAU / 70.0);
    let (alpha, beta) = (alpha_dot * t, beta_dot * t);
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();

    let x = 0.5 * ca * cb + 0.1;
    let y = 0.5 * ca * sb + 0.2;
    let x_dot = 0.5 * (-alpha_dot * sa * cb - beta_dot * ca * sb);
    let y_dot = 0.5 * (-alpha_dot * sa * sb + beta_dot * ca * cb);
    let rate_sq = alpha_dot * alpha_dot + beta_dot * beta_dot;
    let x_ddot = 0.5 * (-rate_sq * ca * cb + 2.0 * alpha_dot * beta_dot * sa * sb);
    let y_ddot = 0.5 * (-rate_sq * ca * sb - 2.0 * alpha_dot * beta_dot * sa * cb);
    // Curvature rate of the velocity direction; the denominator is bounded
    // below by (beta_dot/2)^2 > 0.
    let omega_d = (x_dot * y_ddot - y_dot * x_ddot) / (x_dot * x_dot + y_dot * y_dot);

    PoseRef::from_path_sample(x, y, x_dot, y_dot, omega_d)
}

/// Lissajous figure at a 1:2 frequency ratio, tracked at constant zero
/// heading (pure crab motion: the body axes stay world-aligned while the
/// steering does the work). Period 2*pi/0.1 ~ 62.8 s.
pub fn lissajous_ref(t: f64) -> PoseRef {
    let phase_x = 0.1 * t - std::f64::consts::FRAC_PI_2 + 0.75;
    let phase_y = 0.2 * t - std::f64::consts::PI;
    let x = 0.75 * phase_x.cos();
    let y = -0.5 * phase_y.sin();
    let x_dot = -0.075 * phase_x.sin();
    let y_dot = -0.1 * phase_y.cos();
    PoseRef::with_heading(x, y, 0.0, x_dot, y_dot, 0.0)
}

/// One stored sample of an externally supplied path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajSample {
    /// Sample time (s).
    pub t: f64,
    /// Reference position (m).
    pub x_d: f64,
    /// Reference position (m).
    pub y_d: f64,
    /// Reference heading (rad).
    pub theta_d: f64,
}

/// A time-stamped path with its interpolation order: 1 for piecewise-linear,
/// 3 for cubic Hermite with finite-difference tangents. Outside the sampled
/// window the path holds the nearest endpoint at zero velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledPath {
    pub points: Vec<TrajSample>,
    pub order: u8,
}

/// Which reference path an experiment follows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectorySpec {
    /// The flower-shaped planar path, heading along the velocity.
    Flower,
    /// The Lissajous path at constant zero heading.
    Lissajous,
    /// An externally supplied sample list.
    Samples(SampledPath),
}

impl TrajectorySpec {
    /// Rejects sample lists the interpolators cannot handle.
    pub fn validate(&self) -> Result<(), String> {
        let path = match self {
            TrajectorySpec::Flower | TrajectorySpec::Lissajous => return Ok(()),
            TrajectorySpec::Samples(path) => path,
        };
        if path.points.len() < 2 {
            return Err("sampled trajectory needs at least two points".into());
        }
        if !matches!(path.order, 1 | 3) {
            return Err(format!(
                "interpolation order must be 1 (linear) or 3 (cubic), got {}",
                path.order
            ));
        }
        for s in &path.points {
            if ![s.t, s.x_d, s.y_d, s.theta_d].iter().all(|v| v.is_finite()) {
                return Err(format!("non-finite trajectory sample at t = {}", s.t));
            }
        }
        for pair in path.points.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(format!(
                    "sample times must increase strictly, got {} then {}",
                    pair[0].t, pair[1].t
                ));
            }
        }
        Ok(())
    }

    /// Evaluates the reference pose, velocity, and yaw rate at time `t`.
    pub fn sample(&self, t: f64) -> PoseRef {
        match self {
            TrajectorySpec::Flower => flower_ref(t),
            TrajectorySpec::Lissajous => lissajous_ref(t),
            TrajectorySpec::Samples(path) => path.eval(t),
        }
    }
}

impl SampledPath {
    fn hold(&self, idx: usize) -> PoseRef {
        let s = &self.points[idx];
        PoseRef::with_heading(s.x_d, s.y_d, wrap_angle(s.theta_d), 0.0, 0.0, 0.0)
    }

    /// Heading of point `j` unwrapped to the branch nearest `base`, so
    /// interpolation never runs the long way around the circle.
    fn theta_near(&self, j: usize, base: f64) -> f64 {
        base + wrap_angle(self.points[j].theta_d - base)
    }

    fn eval(&self, t: f64) -> PoseRef {
        let pts = &self.points;
        let n = pts.len();
        if t <= pts[0].t {
            return self.hold(0);
        }
        if t >= pts[n - 1].t {
            return self.hold(n - 1);
        }
        let i = pts.partition_point(|s| s.t <= t) - 1;
        let (p0, p1) = (&pts[i], &pts[i + 1]);
        let h = p1.t - p0.t;
        let u = (t - p0.t) / h;

        let th0 = p0.theta_d;
        let th1 = self.theta_near(i + 1, th0);

        if self.order == 1 {
            let x = p0.x_d + u * (p1.x_d - p0.x_d);
            let y = p0.y_d + u * (p1.y_d - p0.y_d);
            let theta = th0 + u * (th1 - th0);
            return PoseRef::with_heading(
                x,
                y,
                wrap_angle(theta),
                (p1.x_d - p0.x_d) / h,
                (p1.y_d - p0.y_d) / h,
                (th1 - th0) / h,
            );
        }

        // Cubic Hermite with central-difference tangents (one-sided at the
        // ends); headings of the stencil neighbours are unwrapped onto the
        // segment's branch before differencing.
        let tangent = |j: usize, base: f64| -> (f64, f64, f64) {
            let (lo, hi) = (j.saturating_sub(1), (j + 1).min(n - 1));
            let dt = pts[hi].t - pts[lo].t;
            (
                (pts[hi].x_d - pts[lo].x_d) / dt,
                (pts[hi].y_d - pts[lo].y_d) / dt,
                (self.theta_near(hi, base) - self.theta_near(lo, base)) / dt,
            )
        };
        let m0 = tangent(i, th0);
        let m1 = tangent(i + 1, th0);

        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let d00 = (6.0 * u2 - 6.0 * u) / h;
        let d10 = (3.0 * u2 - 4.0 * u + 1.0) / h;
        let d01 = (-6.0 * u2 + 6.0 * u) / h;
        let d11 = (3.0 * u2 - 2.0 * u) / h;

        let hermite = |a: f64, ma: f64, b: f64, mb: f64| -> (f64, f64) {
            (
                h00 * a + h10 * h * ma + h01 * b + h11 * h * mb,
                d00 * a + d10 * h * ma + d01 * b + d11 * h * mb,
            )
        };
        let (x, x_dot) = hermite(p0.x_d, m0.0, p1.x_d, m1.0);
        let (y, y_dot) = hermite(p0.y_d, m0.1, p1.y_d, m1.1);
        let (theta, omega) = hermite(th0, m0.2, th1, m1.2);

        PoseRef::with_heading(x, y, wrap_angle(theta), x_dot, y_dot, omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    #[test]
    fn flower_start_and_petal_tip_positions() {
        let start = flower_ref(0.0);
        assert_relative_eq!(start.x_d, 0.6, max_relative = 1e-12);
        assert_relative_eq!(start.y_d, 0.2, max_relative = 1e-12);
        // At t = 0 the path moves straight up: x_dot = 0, y_dot = pi/70.
        assert_abs_diff_eq!(start.x_dot_d, 0.0, epsilon = 1e-15);
        assert_relative_eq!(start.y_dot_d, PI / 70.0, max_relative = 1e-12);
        assert_relative_eq!(start.theta_d, PI / 2.0, max_relative = 1e-12);

        // Half the outer period: the modulation has flipped sign and the
        // sweep is a quarter turn around.
        let mid = flower_ref(17.5);
        assert_abs_diff_eq!(mid.x_d, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(mid.y_d, -0.3, epsilon = 1e-12);
    }

    #[test]
    fn flower_repeats_every_seventy_seconds() {
        for &t in &[0.3, 5.7, 21.9, 33.3] {
            let a = flower_ref(t);
            let b = flower_ref(t + 70.0);
            assert_abs_diff_eq!(a.x_d, b.x_d, epsilon = 1e-12);
            assert_abs_diff_eq!(a.y_d, b.y_d, epsilon = 1e-12);
            assert_abs_diff_eq!(a.x_dot_d, b.x_dot_d, epsilon = 1e-12);
            assert_abs_diff_eq!(a.y_dot_d, b.y_dot_d, epsilon = 1e-12);
            assert_abs_diff_eq!(a.omega_d, b.omega_d, epsilon = 1e-10);
        }
    }

    #[test]
    fn flower_speed_stays_within_analytic_band() {
        // |v|^2 = ((2pi/35)^2 sin^2 + (2pi/70)^2 cos^2)/4, so the speed
        // runs between pi/70 and pi/35 and never vanishes.
        let (alpha_dot, beta_dot) = (TAU / 35.0, TAU / 70.0);
        for k in 0..=7000 {
            let t = 0.01 * k as f64;
            let r = flower_ref(t);
            let alpha = alpha_dot * t;
            let expected_sq = 0.25
                * (alpha_dot * alpha_dot * alpha.sin().powi(2)
                    + beta_dot * beta_dot * alpha.cos().powi(2));
            assert_relative_eq!(r.v_t * r.v_t, expected_sq, max_relative = 1e-12);
            assert!(r.v_t >= PI / 70.0 - 1e-12 && r.v_t <= PI / 35.0 + 1e-12);
        }
    }

    #[test]
    fn flower_derivatives_match_finite_differences() {
        let h = 1e-5;
        for &t in &[0.0, 1.7, 8.4, 17.0, 29.2, 44.4, 61.3] {
            let r = flower_ref(t);
            let plus = flower_ref(t + h);
            let minus = flower_ref(t - h);
            assert_abs_diff_eq!(r.x_dot_d, (plus.x_d - minus.x_d) / (2.0 * h), epsilon = 1e-9);
            assert_abs_diff_eq!(r.y_dot_d, (plus.y_d - minus.y_d) / (2.0 * h), epsilon = 1e-9);
            let omega_fd = wrap_angle(plus.theta_d - minus.theta_d) / (2.0 * h);
            assert_abs_diff_eq!(r.omega_d, omega_fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn lissajous_start_pose_and_velocity() {
        let r = lissajous_ref(0.0);
        assert_relative_eq!(r.x_d, 0.5112287, max_relative = 1e-6);
        assert_abs_diff_eq!(r.y_d, 0.0, epsilon = 1e-15);
        assert_relative_eq!(r.x_dot_d, 0.0548767, max_relative = 1e-5);
        assert_relative_eq!(r.y_dot_d, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn lissajous_holds_zero_heading_throughout() {
        for k in 0..=630 {
            let r = lissajous_ref(0.1 * k as f64);
            assert_eq!(r.theta_d, 0.0);
            assert_eq!(r.omega_d, 0.0);
        }
    }

    #[test]
    fn lissajous_derivatives_match_finite_differences() {
        let h = 1e-5;
        for &t in &[0.0, 3.3, 15.7, 31.4, 47.1, 62.8] {
            let r = lissajous_ref(t);
            let plus = lissajous_ref(t + h);
            let minus = lissajous_ref(t - h);
            assert_abs_diff_eq!(r.x_dot_d, (plus.x_d - minus.x_d) / (2.0 * h), epsilon = 1e-9);
            assert_abs_diff_eq!(r.y_dot_d, (plus.y_d - minus.y_d) / (2.0 * h), epsilon = 1e-9);
        }
    }

    fn flower_samples(dt: f64, t_end: f64) -> Vec<TrajSample> {
        let n = (t_end / dt).round() as usize;
        (0..=n)
            .map(|k| {
                let t = dt * k as f64;
                let r = flower_ref(t);
                TrajSample {
                    t,
                    x_d: r.x_d,
                    y_d: r.y_d,
                    theta_d: r.theta_d,
                }
            })
            .collect()
    }

    #[test]
    fn cubic_sampled_path_reproduces_its_source() {
        let path = TrajectorySpec::Samples(SampledPath {
            points: flower_samples(2e-3, 2.0),
            order: 3,
        });
        path.validate().unwrap();
        for &t in &[0.0513, 0.7513, 1.2201, 1.9007] {
            let got = path.sample(t);
            let want = flower_ref(t);
            assert_abs_diff_eq!(got.x_d, want.x_d, epsilon = 1e-9);
            assert_abs_diff_eq!(got.y_d, want.y_d, epsilon = 1e-9);
            assert_abs_diff_eq!(got.x_dot_d, want.x_dot_d, epsilon = 1e-7);
            assert_abs_diff_eq!(got.y_dot_d, want.y_dot_d, epsilon = 1e-7);
            assert_abs_diff_eq!(got.theta_d, want.theta_d, epsilon = 1e-7);
            assert_abs_diff_eq!(got.omega_d, want.omega_d, epsilon = 1e-5);
        }
    }

    #[test]
    fn linear_sampled_path_approximates_with_first_order_error() {
        let path = TrajectorySpec::Samples(SampledPath {
            points: flower_samples(2e-3, 2.0),
            order: 1,
        });
        path.validate().unwrap();
        for &t in &[0.0513, 0.7513, 1.2201, 1.9007] {
            let got = path.sample(t);
            let want = flower_ref(t);
            assert_abs_diff_eq!(got.x_d, want.x_d, epsilon = 1e-6);
            assert_abs_diff_eq!(got.y_d, want.y_d, epsilon = 1e-6);
            assert_abs_diff_eq!(got.x_dot_d, want.x_dot_d, epsilon = 1e-3);
            assert_abs_diff_eq!(got.y_dot_d, want.y_dot_d, epsilon = 1e-3);
        }
    }

    #[test]
    fn sampled_path_interpolates_across_the_heading_seam() {
        let path = TrajectorySpec::Samples(SampledPath {
            points: vec![
                TrajSample { t: 0.0, x_d: 0.0, y_d: 0.0, theta_d: 3.10 },
                TrajSample { t: 1.0, x_d: 0.1, y_d: 0.0, theta_d: 3.135 },
                TrajSample { t: 2.0, x_d: 0.2, y_d: 0.0, theta_d: -3.13 },
            ],
            order: 1,
        });
        path.validate().unwrap();
        let r = path.sample(1.5);
        // Crossing pi must take the short way: 3.135 -> 3.1441 (= -3.1391
        // wrapped), at a small positive rate, not a 2*pi jump.
        assert_abs_diff_eq!(r.theta_d, wrap_angle(3.135 + 0.5 * wrap_angle(-3.13 - 3.135)), epsilon = 1e-12);
        let seg_rate = wrap_angle(-3.13 - 3.135);
        assert_relative_eq!(r.omega_d, seg_rate, max_relative = 1e-12);
        assert!(r.omega_d > 0.0 && r.omega_d < 0.02);
    }

    #[test]
    fn sampled_path_holds_endpoints_outside_window() {
        let path = TrajectorySpec::Samples(SampledPath {
            points: flower_samples(0.1, 1.0),
            order: 3,
        });
        let before = path.sample(-5.0);
        let first = flower_ref(0.0);
        assert_eq!(before.x_d, first.x_d);
        assert_eq!(before.v_t, 0.0);
        assert_eq!(before.omega_d, 0.0);
        let after = path.sample(7.0);
        let last = flower_ref(1.0);
        assert_eq!(after.x_d, last.x_d);
        assert_eq!(after.y_d, last.y_d);
        assert_eq!(after.v_t, 0.0);
    }

    #[test]
    fn validate_rejects_malformed_sample_lists() {
        let one_point = TrajectorySpec::Samples(SampledPath {
            points: flower_samples(0.1, 0.0),
            order: 1,
        });
        assert!(one_point.validate().is_err());

        let bad_order = TrajectorySpec::Samples(SampledPath {
            points: flower_samples(0.1, 1.0),
            order: 2,
        });
        assert!(bad_order.validate().is_err());

        let mut pts = flower_samples(0.1, 1.0);
        pts[3].t = pts[2].t;
        let stalled = TrajectorySpec::Samples(SampledPath { points: pts, order: 1 });
        assert!(stalled.validate().is_err());
    }

    #[test]
    fn trajectory_spec_parses_strictly() {
        assert_eq!(
            serde_json::from_str::<TrajectorySpec>("\"flower\"").unwrap(),
            TrajectorySpec::Flower
        );
        assert_eq!(
            serde_json::from_str::<TrajectorySpec>("\"lissajous\"").unwrap(),
            TrajectorySpec::Lissajous
        );
        let sampled: TrajectorySpec = serde_json::from_str(
            r#"{"samples": {"points": [
                {"t": 0.0, "x_d": 0.0, "y_d": 0.0, "theta_d": 0.0},
                {"t": 1.0, "x_d": 0.1, "y_d": 0.0, "theta_d": 0.0}
            ], "order": 1}}"#,
        )
        .unwrap();
        sampled.validate().unwrap();

        let unknown = serde_json::from_str::<TrajectorySpec>(
            r#"{"samples": {"points": [], "order": 1, "loop": true}}"#,
        );
        assert!(unknown.is_err());

        let round: TrajectorySpec =
            serde_json::from_str(&serde_json::to_string(&sampled).unwrap()).unwrap();
        assert_eq!(round, sampled);
    }
}
