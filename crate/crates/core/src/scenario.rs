//! Scenario ingestion: the single input record for every analysis, its
//! defaults, validation, and (de)serialisation.
//!
//! Scenario files are TOML documents with `[network]`, `[converter]`,
//! `[fault]` and `[solver]` sections (JSON is accepted as an alternate
//! encoding, selected by a `.json` extension). Unknown keys are rejected.
//! Every omitted value falls back to the documented default set and the
//! applied defaults are reported to the caller for the run manifest.

use crate::error::{Error, Result};
use crate::limiter::ConverterParams;
use crate::network::{FaultKind, FaultSpec, NetworkParams};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// Numerical settings for the solvers and simulators.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Bisection tolerance on the equivalent resistance, pu.
    pub r_eq_tol: f64,
    /// Number of uniform power-angle samples over (-pi, pi].
    pub delta_points: usize,
    /// Bisection tolerance for equilibrium refinement, rad.
    pub equilibrium_tol: f64,
    /// Fixed step of the reduced-order swing integration, s.
    pub swing_dt: f64,
    /// Study horizon, s.
    pub horizon: f64,
    /// Clearing-time search resolution, s.
    pub cct_resolution: f64,
    /// Convergence band around the post-fault equilibrium, rad.
    pub settle_band: f64,
    /// Fixed step of the time-domain circuit integration, s.
    pub sim_dt: f64,
    /// Discrete controller period of the time-domain model, s.
    pub ctrl_dt: f64,
    /// Voltage-loop integral gain of the time-domain model, pu/s.
    pub voltage_integrator_gain: f64,
    /// First-order current-loop lag time constant, s; 0 keeps the ideal
    /// unity-gain current loop.
    pub current_loop_lag: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            r_eq_tol: 1e-12,
            delta_points: 1000,
            equilibrium_tol: 1e-9,
            swing_dt: 1e-4,
            horizon: 5.0,
            cct_resolution: 1e-3,
            settle_band: 0.05,
            sim_dt: 1e-5,
            ctrl_dt: 1e-4,
            voltage_integrator_gain: 50.0,
            current_loop_lag: 0.0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &'static str, constraint: &'static str, value: f64| {
            if ok {
                Ok(())
            } else {
                Err(Error::Validation {
                    field,
                    constraint,
                    value,
                })
            }
        };
        check(self.r_eq_tol > 0.0, "solver.r_eq_tol", "> 0", self.r_eq_tol)?;
        check(
            self.delta_points >= 64,
            "solver.delta_points",
            ">= 64",
            self.delta_points as f64,
        )?;
        check(self.equilibrium_tol > 0.0, "solver.equilibrium_tol", "> 0", self.equilibrium_tol)?;
        check(
            self.swing_dt > 0.0 && self.swing_dt <= 1e-3,
            "solver.swing_dt",
            "in (0, 1e-3]",
            self.swing_dt,
        )?;
        check(self.horizon > 0.0, "solver.horizon", "> 0", self.horizon)?;
        check(self.cct_resolution > 0.0, "solver.cct_resolution", "> 0", self.cct_resolution)?;
        check(self.settle_band > 0.0, "solver.settle_band", "> 0", self.settle_band)?;
        check(
            self.sim_dt > 0.0 && self.sim_dt <= 1e-5,
            "solver.sim_dt",
            "in (0, 1e-5]",
            self.sim_dt,
        )?;
        check(
            self.ctrl_dt >= self.sim_dt && self.ctrl_dt <= 1e-4,
            "solver.ctrl_dt",
            "in [sim_dt, 1e-4]",
            self.ctrl_dt,
        )?;
        check(
            self.voltage_integrator_gain >= 0.0,
            "solver.voltage_integrator_gain",
            ">= 0",
            self.voltage_integrator_gain,
        )?;
        check(
            self.current_loop_lag >= 0.0,
            "solver.current_loop_lag",
            ">= 0",
            self.current_loop_lag,
        )?;
        Ok(())
    }
}

/// Complete description of one study case.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub network: NetworkParams,
    pub converter: ConverterParams,
    pub fault: FaultSpec,
    pub solver: SolverSettings,
}

impl Scenario {
    /// The reference parameter set: E_ref = 1.1, X_g = 0.2, R_g = 0.04,
    /// I_lim = 1.2, P_ref = 0.7, K_APC = 0.02, omega_c = 2*pi*0.3,
    /// omega_n = 2*pi*60, healthy network, split 0.5.
    pub fn paper_defaults() -> Self {
        Self {
            network: NetworkParams {
                v_g_mag: 1.0,
                x_g: 0.2,
                r_g: 0.04,
                split: 0.5,
                l_f: 0.1,
                c_f: 0.05,
                omega_n: 2.0 * PI * 60.0,
            },
            converter: ConverterParams {
                e_ref_mag: 1.1,
                i_lim: 1.2,
                k_pv: 1.0,
                p_ref: 0.7,
                k_apc: 0.02,
                omega_c: 2.0 * PI * 0.3,
                omega_n: 2.0 * PI * 60.0,
            },
            fault: FaultSpec::none(),
            solver: SolverSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.converter.validate()?;
        self.fault.validate()?;
        self.solver.validate()?;
        let rel = (self.network.omega_n - self.converter.omega_n).abs()
            / self.network.omega_n.max(self.converter.omega_n);
        if rel > 1e-9 {
            return Err(Error::Validation {
                field: "converter.omega_n",
                constraint: "equal to network.omega_n",
                value: self.converter.omega_n,
            });
        }
        Ok(())
    }
}

/// A validated scenario plus the list of fields that fell back to their
/// defaults (for the run manifest).
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub applied_defaults: Vec<String>,
}

// Raw mirror with optional fields so defaults can be detected per key.
// Unknown keys anywhere are a parse error.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawScenario {
    network: RawNetwork,
    converter: RawConverter,
    fault: RawFault,
    solver: RawSolver,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawNetwork {
    v_g_mag: Option<f64>,
    x_g: Option<f64>,
    r_g: Option<f64>,
    split: Option<f64>,
    l_f: Option<f64>,
    c_f: Option<f64>,
    omega_n: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawConverter {
    e_ref_mag: Option<f64>,
    i_lim: Option<f64>,
    k_pv: Option<f64>,
    p_ref: Option<f64>,
    k_apc: Option<f64>,
    omega_c: Option<f64>,
    omega_n: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawFault {
    kind: Option<FaultKind>,
    r_f: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSolver {
    r_eq_tol: Option<f64>,
    delta_points: Option<usize>,
    equilibrium_tol: Option<f64>,
    swing_dt: Option<f64>,
    horizon: Option<f64>,
    cct_resolution: Option<f64>,
    settle_band: Option<f64>,
    sim_dt: Option<f64>,
    ctrl_dt: Option<f64>,
    voltage_integrator_gain: Option<f64>,
    current_loop_lag: Option<f64>,
}

macro_rules! take {
    ($raw:expr, $dst:expr, $defaults:expr, $section:literal, $field:ident) => {
        match $raw.$field {
            Some(v) => $dst.$field = v,
            None => $defaults.push(format!(
                concat!($section, ".", stringify!($field), " = {} (default)"),
                fmt_default($dst.$field)
            )),
        }
    };
}

fn fmt_default<T: std::fmt::Debug>(v: T) -> String {
    format!("{v:?}")
}

fn resolve(raw: RawScenario) -> (Scenario, Vec<String>) {
    let mut sc = Scenario::paper_defaults();
    let mut defaults = Vec::new();
    {
        let n = &mut sc.network;
        take!(raw.network, n, defaults, "network", v_g_mag);
        take!(raw.network, n, defaults, "network", x_g);
        take!(raw.network, n, defaults, "network", r_g);
        take!(raw.network, n, defaults, "network", split);
        take!(raw.network, n, defaults, "network", l_f);
        take!(raw.network, n, defaults, "network", c_f);
        take!(raw.network, n, defaults, "network", omega_n);
    }
    {
        let c = &mut sc.converter;
        take!(raw.converter, c, defaults, "converter", e_ref_mag);
        take!(raw.converter, c, defaults, "converter", i_lim);
        take!(raw.converter, c, defaults, "converter", k_pv);
        take!(raw.converter, c, defaults, "converter", p_ref);
        take!(raw.converter, c, defaults, "converter", k_apc);
        take!(raw.converter, c, defaults, "converter", omega_c);
        take!(raw.converter, c, defaults, "converter", omega_n);
    }
    {
        let f = &mut sc.fault;
        take!(raw.fault, f, defaults, "fault", kind);
        take!(raw.fault, f, defaults, "fault", r_f);
    }
    {
        let s = &mut sc.solver;
        take!(raw.solver, s, defaults, "solver", r_eq_tol);
        take!(raw.solver, s, defaults, "solver", delta_points);
        take!(raw.solver, s, defaults, "solver", equilibrium_tol);
        take!(raw.solver, s, defaults, "solver", swing_dt);
        take!(raw.solver, s, defaults, "solver", horizon);
        take!(raw.solver, s, defaults, "solver", cct_resolution);
        take!(raw.solver, s, defaults, "solver", settle_band);
        take!(raw.solver, s, defaults, "solver", sim_dt);
        take!(raw.solver, s, defaults, "solver", ctrl_dt);
        take!(raw.solver, s, defaults, "solver", voltage_integrator_gain);
        take!(raw.solver, s, defaults, "solver", current_loop_lag);
    }
    (sc, defaults)
}

/// Parse scenario text. `json` selects the alternate encoding.
pub fn parse_scenario(text: &str, json: bool, origin: &str) -> Result<LoadedScenario> {
    let raw: RawScenario = if text.trim().is_empty() {
        RawScenario::default()
    } else if json {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            detail: e.to_string(),
        })?
    } else {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            detail: e.to_string(),
        })?
    };
    let (scenario, applied_defaults) = resolve(raw);
    scenario.validate()?;
    Ok(LoadedScenario {
        scenario,
        applied_defaults,
    })
}

/// Load and validate a scenario file, applying the documented defaults to
/// every omitted key.
pub fn load_scenario(path: &Path) -> Result<LoadedScenario> {
    let text = std::fs::read_to_string(path)?;
    let json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    parse_scenario(&text, json, &path.display().to_string())
}

/// Serialise a scenario as a canonical TOML document.
pub fn scenario_to_toml(scenario: &Scenario) -> String {
    toml::to_string_pretty(scenario).expect("scenario serialises")
}

/// Write a scenario file next to other run outputs.
pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    std::fs::write(path, scenario_to_toml(scenario))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_pure_defaults() {
        let loaded = parse_scenario("", false, "<empty>").unwrap();
        let d = Scenario::paper_defaults();
        assert_eq!(loaded.scenario.converter.e_ref_mag, d.converter.e_ref_mag);
        assert_eq!(loaded.scenario.network.x_g, 0.2);
        assert_eq!(loaded.scenario.network.r_g, 0.04);
        assert_eq!(loaded.scenario.converter.i_lim, 1.2);
        assert_eq!(loaded.scenario.converter.p_ref, 0.7);
        assert_eq!(loaded.scenario.converter.k_apc, 0.02);
        assert_eq!(loaded.scenario.converter.omega_c, 2.0 * PI * 0.3);
        assert_eq!(loaded.scenario.network.omega_n, 2.0 * PI * 60.0);
        // every field is reported as defaulted
        assert_eq!(loaded.applied_defaults.len(), 7 + 7 + 2 + 11);
    }

    #[test]
    fn partial_file_reports_only_missing_keys() {
        let text = "[network]\nx_g = 0.3\n[fault]\nkind = \"slg\"\nr_f = 0.05\n";
        let loaded = parse_scenario(text, false, "<test>").unwrap();
        assert_eq!(loaded.scenario.network.x_g, 0.3);
        assert_eq!(loaded.scenario.fault.kind, FaultKind::Slg);
        assert_eq!(loaded.scenario.fault.r_f, 0.05);
        assert!(loaded
            .applied_defaults
            .iter()
            .any(|d| d.starts_with("network.r_g")));
        assert!(!loaded.applied_defaults.iter().any(|d| d.starts_with("network.x_g")));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_scenario("[network]\nxg_typo = 1.0\n", false, "<test>").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        let err = parse_scenario("{\"network\": {\"bogus\": 1}}", true, "<test>").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn split_constraint_is_enforced() {
        let err = parse_scenario("[network]\nsplit = 1.5\n", false, "<test>").unwrap_err();
        match err {
            Error::Validation { field, constraint, value } => {
                assert_eq!(field, "network.split");
                assert_eq!(constraint, "in (0, 1)");
                assert_eq!(value, 1.5);
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn power_loop_bandwidth_cap_is_enforced() {
        let text = "[converter]\nomega_c = 40.0\n"; // > 2*pi*5
        let err = parse_scenario(text, false, "<test>").unwrap_err();
        assert!(matches!(err, Error::Validation { field: "converter.omega_c", .. }));
    }

    #[test]
    fn toml_round_trip_is_identity() {
        let mut sc = Scenario::paper_defaults();
        sc.fault = FaultSpec {
            kind: FaultKind::Dlg,
            r_f: 0.07,
        };
        sc.network.split = 0.35;
        let text = scenario_to_toml(&sc);
        let again = parse_scenario(&text, false, "<roundtrip>").unwrap();
        assert_eq!(again.applied_defaults.len(), 0);
        assert_eq!(format!("{sc:?}"), format!("{:?}", again.scenario));
    }

    #[test]
    fn json_alternate_encoding_loads() {
        let text = r#"{"converter": {"i_lim": 1.5}, "fault": {"kind": "ll"}}"#;
        let loaded = parse_scenario(text, true, "<json>").unwrap();
        assert_eq!(loaded.scenario.converter.i_lim, 1.5);
        assert_eq!(loaded.scenario.fault.kind, FaultKind::Ll);
    }
}
