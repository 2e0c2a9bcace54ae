//! Golden fixtures: frozen numeric expectations, shipped preset configs,
//! and a short golden trace, each revalidated against the live library.
//!
//! The fixture suite is the single source of truth for the acceptance
//! numbers: every expected value is recomputed through the public API and
//! compared within its stated tolerance. Files live under `fixtures/` next
//! to this crate and regenerate deterministically (see the ignored
//! `regenerate_golden_fixtures` test).

use std::path::PathBuf;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::analysis::storage;
use crate::config::{preset, ExperimentConfig, PRESET_NAMES};
use crate::model::{b_tilde_11, m_tilde_11, ConfigState};
use crate::sim::SimTrace;

/// One frozen numeric expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedValue {
    /// Key identifying which library quantity to recompute.
    pub name: String,
    pub expected: f64,
    /// Relative tolerance of the comparison (an absolute floor of 1e-12
    /// covers exact zeros).
    pub rel_tol: f64,
    /// Where the number comes from: a published constant, a value
    /// recomputed independently of the library, or a direct definition.
    pub basis: String,
}

/// A named bundle of expectations evaluated against one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenFixture {
    pub name: String,
    pub config: ExperimentConfig,
    pub expected: Vec<ExpectedValue>,
}

/// Outcome of revalidating fixtures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureReport {
    /// Individual comparisons performed.
    pub checked: usize,
    /// One line per mismatch, naming the offending value.
    pub failures: Vec<String>,
    pub pass: bool,
}

impl FixtureReport {
    fn merge(&mut self, other: FixtureReport) {
        self.checked += other.checked;
        self.failures.extend(other.failures);
        self.pass = self.failures.is_empty();
    }
}

/// Directory the shipped fixture files live in.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Resolves one fixture key against the library.
fn computed_value(cfg: &ExperimentConfig, key: &str) -> Option<f64> {
    let bounds = cfg.bounds();
    let cert = cfg.certificate();
    let q0 = ConfigState::zero();
    Some(match key {
        "a1" => bounds.a1,
        "a2" => bounds.a2,
        "b_c" => bounds.b_c,
        "sigma_j" => bounds.sigma_j,
        "sigma_dj" => bounds.sigma_dj,
        "l_m" => bounds.l_m,
        "l_c1" => bounds.l_c1,
        "l_c2" => bounds.l_c2,
        "c_tilde" => bounds.c_tilde,
        "d_tilde" => bounds.d_tilde,
        "d_v" => bounds.d_v,
        "a_q" => bounds.a_q,
        "a_v" => bounds.a_v,
        "a_c" => bounds.a_c,
        "threshold" => cert.threshold,
        "mu" => cert.mu,
        "mu_at_zero_epsilon" => cert.mu_at_zero_epsilon,
        "lambda_min_kp" => cert.lambda_min_kp,
        "v_d_sup" => cfg.envelope.v_d_sup(&cfg.robot),
        "m_tilde_11_straight" => m_tilde_11(&q0, &cfg.robot),
        "b_tilde_11_straight" => b_tilde_11(&q0, &cfg.robot),
        "storage_unit_wheel_error" => storage(
            &Vector3::new(1.0, 0.0, 0.0),
            &Vector3::zeros(),
            &q0,
            &cfg.pi_gains.ki_torque(),
            &cfg.robot,
        ),
        _ => return None,
    })
}

/// Recomputes every expectation of one fixture through the library.
pub fn evaluate_fixture(fix: &GoldenFixture) -> FixtureReport {
    let mut failures = Vec::new();
    for item in &fix.expected {
        match computed_value(&fix.config, &item.name) {
            Some(got) => {
                let tol = item.rel_tol * item.expected.abs() + 1e-12;
                // A NaN recomputation must count as a mismatch, so the
                // comparison is phrased as within-tolerance and negated.
                let within = (got - item.expected).abs() <= tol;
                if !within {
                    failures.push(format!(
                        "{}/{}: expected {} within {:.1e} rel, got {}",
                        fix.name, item.name, item.expected, item.rel_tol, got
                    ));
                }
            }
            None => failures.push(format!("{}/{}: unknown fixture key", fix.name, item.name)),
        }
    }
    FixtureReport {
        checked: fix.expected.len(),
        pass: failures.is_empty(),
        failures,
    }
}

fn expect(name: &str, expected: f64, rel_tol: f64, basis: &str) -> ExpectedValue {
    ExpectedValue {
        name: name.into(),
        expected,
        rel_tol,
        basis: basis.into(),
    }
}

/// The built-in constants fixture: the floor scenario's structural
/// constants and certificate numbers.
pub fn builtin_fixture() -> GoldenFixture {
    let config = preset("table1-floor-flower").expect("shipped preset");
    GoldenFixture {
        name: "floor-scenario-constants".into(),
        config,
        expected: vec![
            expect("sigma_j", 4.6640, 1e-4, "published constant"),
            expect("l_c2", 1.7479, 1e-3, "published constant"),
            expect("v_d_sup", 0.2817, 1e-3, "published constant"),
            expect("a_v", 2.2964, 1e-3, "published constant"),
            expect("d_v", 0.6635, 1e-3, "published constant"),
            expect("threshold", 1.539, 1e-3, "published constant"),
            expect("lambda_min_kp", 1.563, 1e-12, "definition"),
            expect("a1", 0.004, 1e-9, "recomputed"),
            expect("a2", 4.2848478, 1e-6, "recomputed"),
            expect("b_c", 1.2354938, 1e-6, "recomputed"),
            expect("l_m", 3.49450510, 1e-6, "recomputed"),
            expect("sigma_dj", 3.3729139, 1e-6, "recomputed"),
            expect("c_tilde", 0.0, 1e-12, "definition"),
            expect("d_tilde", 0.93828, 1e-4, "recomputed"),
            expect("a_q", 8.4554, 1e-3, "recomputed"),
            expect("mu", 0.045526, 1e-3, "recomputed"),
            expect("m_tilde_11_straight", 3.5638601, 1e-6, "recomputed"),
            expect("b_tilde_11_straight", 314.960630, 1e-6, "recomputed"),
            expect("storage_unit_wheel_error", 1.78193006, 1e-6, "recomputed"),
        ],
    }
}

/// Configuration of the shipped golden trace: the floor scenario truncated
/// to its first second, recorded every 50 steps (21 rows).
pub fn golden_trace_config() -> ExperimentConfig {
    let mut cfg = preset("table1-floor-flower").expect("shipped preset");
    cfg.sim.t_end = 1.0;
    cfg.sim.record_stride = 50;
    cfg
}

const CONSTANTS_FILE: &str = "constants.json";
const GOLDEN_TRACE_FILE: &str = "golden-floor-flower-1s.csv";

/// Writes every shipped fixture file from the live library (used to
/// regenerate `fixtures/` after intentional changes).
pub fn write_fixtures() -> std::io::Result<()> {
    let dir = fixtures_dir();
    std::fs::create_dir_all(&dir)?;
    let constants = serde_json::to_string_pretty(&builtin_fixture()).expect("serializable");
    std::fs::write(dir.join(CONSTANTS_FILE), constants + "\n")?;
    for name in PRESET_NAMES {
        let cfg = preset(name).expect("shipped preset");
        let text = serde_json::to_string_pretty(&cfg).expect("serializable");
        std::fs::write(dir.join(format!("{name}.json")), text + "\n")?;
    }
    let trace = golden_trace_config()
        .run()
        .expect("golden run must complete");
    std::fs::write(dir.join(GOLDEN_TRACE_FILE), trace.to_csv())?;
    Ok(())
}

/// Revalidates everything under `fixtures/`: the constants fixture (both
/// the built-in copy and the shipped file), the preset files against the
/// code presets, and the golden trace against a fresh deterministic rerun.
pub fn validate_fixtures() -> FixtureReport {
    let mut report = evaluate_fixture(&builtin_fixture());
    let dir = fixtures_dir();

    // Shipped constants file must match the built-in fixture and reevaluate.
    match std::fs::read_to_string(dir.join(CONSTANTS_FILE)) {
        Ok(text) => match serde_json::from_str::<GoldenFixture>(&text) {
            Ok(fix) => {
                if fix != builtin_fixture() {
                    report
                        .failures
                        .push(format!("{CONSTANTS_FILE}: differs from the built-in fixture"));
                }
                report.merge(evaluate_fixture(&fix));
            }
            Err(e) => report.failures.push(format!("{CONSTANTS_FILE}: {e}")),
        },
        Err(e) => report.failures.push(format!("{CONSTANTS_FILE}: {e}")),
    }

    // Preset files must parse to exactly the code presets.
    for name in PRESET_NAMES {
        let path = dir.join(format!("{name}.json"));
        report.checked += 1;
        match std::fs::read_to_string(&path) {
            Ok(text) => match serde_json::from_str::<ExperimentConfig>(&text) {
                Ok(cfg) => {
                    if Some(&cfg) != preset(name).as_ref() {
                        report
                            .failures
                            .push(format!("{name}.json: differs from the code preset"));
                    }
                }
                Err(e) => report.failures.push(format!("{name}.json: {e}")),
            },
            Err(e) => report.failures.push(format!("{name}.json: {e}")),
        }
    }

    // Golden trace: a fresh run must reproduce the stored rows closely
    // (values are compared numerically, not textually, to stay robust to
    // formatting).
    report.checked += 1;
    match std::fs::read_to_string(dir.join(GOLDEN_TRACE_FILE)) {
        Ok(text) => match (SimTrace::parse_csv(&text), golden_trace_config().run()) {
            (Ok(stored), Ok(fresh)) => {
                if stored.len() != fresh.rows.len() {
                    report.failures.push(format!(
                        "{GOLDEN_TRACE_FILE}: {} stored rows, fresh run has {}",
                        stored.len(),
                        fresh.rows.len()
                    ));
                } else {
                    'rows: for (i, (raw, row)) in stored.iter().zip(&fresh.rows).enumerate() {
                        for (a, b) in raw.iter().zip(row.csv_values()) {
                            if (a - b).abs() > 1e-9 * b.abs().max(1.0) {
                                report.failures.push(format!(
                                    "{GOLDEN_TRACE_FILE}: row {i} drifted ({a} vs {b})"
                                ));
                                break 'rows;
                            }
                        }
                    }
                }
            }
            (Err(e), _) => report.failures.push(format!("{GOLDEN_TRACE_FILE}: {e}")),
            (_, Err(e)) => report
                .failures
                .push(format!("{GOLDEN_TRACE_FILE}: fresh run failed: {e}")),
        },
        Err(e) => report.failures.push(format!("{GOLDEN_TRACE_FILE}: {e}")),
    }

    report.pass = report.failures.is_empty();
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_fixture_revalidates() {
        let report = evaluate_fixture(&builtin_fixture());
        assert!(report.pass, "failures: {:?}", report.failures);
        assert_eq!(report.checked, builtin_fixture().expected.len());
    }

    #[test]
    fn corrupted_fixture_fails_with_named_mismatch() {
        let mut fix = builtin_fixture();
        fix.expected[0].expected *= 1.01;
        let name = fix.expected[0].name.clone();
        let report = evaluate_fixture(&fix);
        assert!(!report.pass);
        assert!(
            report.failures[0].contains(&name),
            "failure must name the mismatched value: {:?}",
            report.failures
        );
    }

    #[test]
    fn unknown_fixture_keys_are_reported() {
        let mut fix = builtin_fixture();
        fix.expected.push(expect("no_such_quantity", 1.0, 1e-3, "definition"));
        let report = evaluate_fixture(&fix);
        assert!(!report.pass);
        assert!(report
            .failures
            .iter()
            .any(|f| f.contains("unknown fixture key")));
    }

    #[test]
    fn shipped_fixture_files_revalidate() {
        let report = validate_fixtures();
        assert!(report.pass, "failures: {:?}", report.failures);
        assert!(report.checked > builtin_fixture().expected.len());
    }

    #[test]
    #[ignore = "regenerates the shipped fixture files in place"]
    fn regenerate_golden_fixtures() {
        write_fixtures().unwrap();
        let report = validate_fixtures();
        assert!(report.pass, "failures: {:?}", report.failures);
    }
}
