//! Deterministic CSV emission, the clearing-time record, and the run
//! manifest written beside every output.
//!
//! All CSV output is UTF-8 with LF line endings and a fixed float format
//! of 12 significant digits, so identical inputs produce byte-identical
//! files.

use crate::error::Result;
use crate::power_angle::PdeltaCurve;
use crate::scenario::Scenario;
use crate::sim::SimTrace;
use crate::swing::{CctOutcome, CctReport, SwingTrace};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;

/// Stable short hash of a scenario: identical scenario, command and tool
/// version always map to the same hash.
pub fn scenario_hash(scenario: &Scenario) -> String {
    let canonical = serde_json::to_string(scenario).expect("scenario serialises");
    let digest = Sha256::digest(canonical.as_bytes());
    hex::encode(&digest[..8])
}

/// Fixed-width float formatting: 12 significant digits, scientific.
pub fn fmt_num(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v }; // normalise -0.0
    format!("{v:.11e}")
}

/// Curve CSV: `delta_rad,r_eq_pu,c,p_pos_pu,p_neg_pu,p_total_pu,p2w_pu,limiting`.
pub fn write_curve_csv<W: Write>(curve: &PdeltaCurve, mut out: W) -> Result<()> {
    writeln!(
        out,
        "delta_rad,r_eq_pu,c,p_pos_pu,p_neg_pu,p_total_pu,p2w_pu,limiting"
    )?;
    for s in &curve.samples {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_num(s.delta),
            fmt_num(s.r_eq),
            fmt_num(s.c),
            fmt_num(s.p_pos),
            fmt_num(s.p_neg),
            fmt_num(s.p_total),
            fmt_num(s.p_2w_amp),
            s.limiting
        )?;
    }
    Ok(())
}

/// Swing trace CSV: `t_s,delta_rad,omega_pu,p_o_pu,phase`.
pub fn write_swing_csv<W: Write>(trace: &SwingTrace, mut out: W) -> Result<()> {
    writeln!(out, "t_s,delta_rad,omega_pu,p_o_pu,phase")?;
    for s in &trace.samples {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_num(s.t),
            fmt_num(s.state.delta),
            fmt_num(s.state.omega),
            fmt_num(s.p_o),
            s.phase.label()
        )?;
    }
    Ok(())
}

/// Waveform CSV: `t_s,va,vb,vc,ia,ib,ic,p_inst,c,theta_ref`, optionally
/// keeping every n-th row.
pub fn write_sim_csv<W: Write>(trace: &SimTrace, downsample: usize, mut out: W) -> Result<()> {
    writeln!(out, "t_s,va,vb,vc,ia,ib,ic,p_inst,c,theta_ref")?;
    let stride = downsample.max(1);
    for s in trace.rows.iter().step_by(stride) {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_num(s.t),
            fmt_num(s.v_o[0]),
            fmt_num(s.v_o[1]),
            fmt_num(s.v_o[2]),
            fmt_num(s.i_o[0]),
            fmt_num(s.i_o[1]),
            fmt_num(s.i_o[2]),
            fmt_num(s.p_inst),
            fmt_num(s.c),
            fmt_num(s.theta_ref)
        )?;
    }
    Ok(())
}

/// Single-line structured clearing-time record.
#[derive(Debug, Serialize)]
pub struct CctRecord {
    pub scenario_hash: String,
    pub cct_s: Option<f64>,
    pub unbounded: bool,
    pub resolution_s: f64,
}

impl CctRecord {
    pub fn new(scenario: &Scenario, report: &CctReport) -> Self {
        let (cct_s, unbounded) = match report.outcome {
            CctOutcome::Bounded(s) => (Some(s), false),
            CctOutcome::Unbounded => (None, true),
        };
        Self {
            scenario_hash: scenario_hash(scenario),
            cct_s,
            unbounded,
            resolution_s: report.resolution,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serialises")
    }
}

/// Run manifest written beside every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub scenario_hash: String,
    pub command: String,
    pub tool_version: String,
    pub timestamp_utc: String,
    pub output_paths: Vec<String>,
    /// Fields that fell back to their documented defaults.
    pub applied_defaults: Vec<String>,
    /// Command-line overrides applied on top of the scenario file.
    pub overrides: Vec<String>,
}

impl RunManifest {
    pub fn new(
        scenario: &Scenario,
        command: &str,
        output_paths: Vec<String>,
        applied_defaults: Vec<String>,
        overrides: Vec<String>,
    ) -> Self {
        Self {
            scenario_hash: scenario_hash(scenario),
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_utc: chrono::Utc::now().to_rfc3339(),
            output_paths,
            applied_defaults,
            overrides,
        }
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{FaultKind, FaultSpec};
    use crate::power_angle::p_delta_curve;

    #[test]
    fn fmt_num_has_12_significant_digits() {
        assert_eq!(fmt_num(0.05), "5.00000000000e-2");
        assert_eq!(fmt_num(-1.25), "-1.25000000000e0");
        assert_eq!(fmt_num(0.0), "0.00000000000e0");
        assert_eq!(fmt_num(-0.0), "0.00000000000e0");
        assert_eq!(fmt_num(123456.789), "1.23456789000e5");
    }

    #[test]
    fn scenario_hash_is_stable_and_sensitive() {
        let a = Scenario::paper_defaults();
        let b = Scenario::paper_defaults();
        assert_eq!(scenario_hash(&a), scenario_hash(&b));
        let mut c = Scenario::paper_defaults();
        c.fault = FaultSpec {
            kind: FaultKind::Slg,
            r_f: 0.0,
        };
        assert_ne!(scenario_hash(&a), scenario_hash(&c));
    }

    #[test]
    fn curve_csv_is_byte_identical_across_runs() {
        let mut sc = Scenario::paper_defaults();
        sc.fault = FaultSpec {
            kind: FaultKind::Slg,
            r_f: 0.05,
        };
        let mut bufs = Vec::new();
        for _ in 0..2 {
            let curve = p_delta_curve(&sc, 96).unwrap();
            let mut buf = Vec::new();
            write_curve_csv(&curve, &mut buf).unwrap();
            bufs.push(buf);
        }
        assert_eq!(bufs[0], bufs[1]);
        let text = String::from_utf8(bufs[0].clone()).unwrap();
        assert!(text.starts_with("delta_rad,r_eq_pu,c,p_pos_pu,p_neg_pu,p_total_pu,p2w_pu,limiting\n"));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 97);
    }
}
