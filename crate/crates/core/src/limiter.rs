//! Elliptical current limiter: per-phase peak reconstruction from sequence
//! phasors, the common scaling factor, the saturation-equivalent
//! resistance, and the root solve that places the worst phase current
//! exactly at the limit.
//!
//! `phase_peaks` takes synchronous-frame (dq) reference phasors: the
//! waveform reconstructed from a pair `(i+, i-)` has, for the phase with
//! shift `s`, the form `|i+| cos(th + arg i+) + |i-| cos(th - arg i- - s)`.
//! A standard negative-sequence network phasor is the complex conjugate of
//! the corresponding dq value, and `max_phase_current` performs that
//! conversion when it chains the sequence-network solution into the peak
//! formula.

use crate::error::{Error, Result};
use crate::network::{converter_currents, fault_point_voltages};
use crate::phasor::{arg_or_zero, Phasor};
use crate::scenario::Scenario;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Converter ratings and control constants, per unit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConverterParams {
    /// Internal voltage reference magnitude.
    pub e_ref_mag: f64,
    /// Maximum allowable phase current (peak).
    pub i_lim: f64,
    /// Voltage-controller proportional gain.
    pub k_pv: f64,
    /// Active-power reference.
    pub p_ref: f64,
    /// Active-power controller gain.
    pub k_apc: f64,
    /// Power-filter cutoff in rad/s.
    pub omega_c: f64,
    /// Nominal angular frequency in rad/s.
    pub omega_n: f64,
}

impl ConverterParams {
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
        check(self.e_ref_mag.is_finite() && self.e_ref_mag > 0.0, "converter.e_ref_mag", "> 0", self.e_ref_mag)?;
        check(self.i_lim.is_finite() && self.i_lim > 0.0, "converter.i_lim", "> 0", self.i_lim)?;
        check(self.k_pv.is_finite() && self.k_pv > 0.0, "converter.k_pv", "> 0", self.k_pv)?;
        check(self.p_ref.is_finite(), "converter.p_ref", "finite", self.p_ref)?;
        check(self.k_apc.is_finite() && self.k_apc > 0.0, "converter.k_apc", "> 0", self.k_apc)?;
        check(self.omega_c.is_finite() && self.omega_c > 0.0, "converter.omega_c", "> 0", self.omega_c)?;
        // The synchronisation loop bandwidth stays below 5 Hz.
        check(
            self.omega_c / (2.0 * PI) < 5.0,
            "converter.omega_c",
            "< 2*pi*5 rad/s",
            self.omega_c,
        )?;
        check(self.omega_n.is_finite() && self.omega_n > 0.0, "converter.omega_n", "> 0", self.omega_n)?;
        Ok(())
    }
}

/// Per-phase peak magnitudes reconstructed from one sequence pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePeaks {
    pub peak_a: f64,
    pub peak_b: f64,
    pub peak_c: f64,
    /// Largest of the three.
    pub max_peak: f64,
}

/// Outcome of scaling a pair of sequence current references.
#[derive(Debug, Clone, Copy)]
pub struct LimiterResult {
    pub c_pos: f64,
    pub c_neg: f64,
    pub limited_pos: Phasor,
    pub limited_neg: Phasor,
    /// Saturation-equivalent series resistance, shared by both sequence
    /// networks; zero exactly when the coupled factor is 1.
    pub r_eq: f64,
}

/// Reconstruct the three phase-current peaks from sequence reference
/// phasors. Zero phasors are legal; their angle is taken as 0.
pub fn phase_peaks(i_pos: Phasor, i_neg: Phasor) -> PhasePeaks {
    let p = i_pos.norm();
    let n = i_neg.norm();
    let phi_sum = arg_or_zero(i_pos) + arg_or_zero(i_neg);
    let peak = |shift: f64| (p * p + n * n + 2.0 * p * n * (phi_sum + shift).cos()).sqrt();
    let (peak_a, peak_b, peak_c) = (peak(0.0), peak(-2.0 * PI / 3.0), peak(2.0 * PI / 3.0));
    PhasePeaks {
        peak_a,
        peak_b,
        peak_c,
        max_peak: peak_a.max(peak_b).max(peak_c),
    }
}

/// Common scaling factor: `min(1, i_lim / max_peak)`, with the degenerate
/// zero-peak case defined as 1.
pub fn scaling_factor(max_peak: f64, i_lim: f64) -> f64 {
    debug_assert!(i_lim > 0.0);
    if max_peak == 0.0 {
        1.0
    } else {
        (i_lim / max_peak).min(1.0)
    }
}

/// Scale each sequence reference by its factor, leaving angles unchanged.
/// Factors outside (0, 1] are contract violations.
pub fn apply_limit(
    refs_pos: Phasor,
    refs_neg: Phasor,
    c_pos: f64,
    c_neg: f64,
) -> Result<(Phasor, Phasor)> {
    for c in [c_pos, c_neg] {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidScalingFactor(c));
        }
    }
    Ok((refs_pos * c_pos, refs_neg * c_neg))
}

/// Saturation-equivalent resistance `(1 - c) / (c * k_pv)`, identical for
/// both sequence networks.
pub fn equivalent_resistance(c: f64, k_pv: f64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidScalingFactor(c));
    }
    debug_assert!(k_pv > 0.0);
    Ok((1.0 - c) / (c * k_pv))
}

/// Inverse of [`equivalent_resistance`]: the scaling factor implied by a
/// solved resistance, `c = 1 / (1 + r_eq * k_pv)`.
pub fn scaling_from_resistance(r_eq: f64, k_pv: f64) -> f64 {
    1.0 / (1.0 + r_eq * k_pv)
}

/// Coupled-mode limiting: both sequences share the factor derived from the
/// worst phase peak.
pub fn limit_coupled(
    refs_pos: Phasor,
    refs_neg: Phasor,
    i_lim: f64,
    k_pv: f64,
) -> Result<LimiterResult> {
    let peaks = phase_peaks(refs_pos, refs_neg);
    let c = scaling_factor(peaks.max_peak, i_lim);
    let (limited_pos, limited_neg) = apply_limit(refs_pos, refs_neg, c, c)?;
    Ok(LimiterResult {
        c_pos: c,
        c_neg: c,
        limited_pos,
        limited_neg,
        r_eq: equivalent_resistance(c, k_pv)?,
    })
}

/// Decoupled scaling with caller-chosen per-sequence factors (sequence
/// priority). This path only scales references; it has no single
/// equivalent resistance and is excluded from the phasor pipeline.
pub fn scale_decoupled(
    refs_pos: Phasor,
    refs_neg: Phasor,
    c_pos: f64,
    c_neg: f64,
) -> Result<(Phasor, Phasor)> {
    apply_limit(refs_pos, refs_neg, c_pos, c_neg)
}

/// Worst phase peak of the converter output current at one power angle,
/// as a function of the equivalent resistance. Chains the fault-point
/// solution and the converter currents into the peak formula (conjugating
/// the negative sequence into its dq representation).
pub fn max_phase_current(scenario: &Scenario, delta: f64, r_eq: f64) -> Result<f64> {
    let e_ref = Phasor::from_polar(scenario.converter.e_ref_mag, delta);
    let v_g = Phasor::new(scenario.network.v_g_mag, 0.0);
    let v_f = fault_point_voltages(&scenario.fault, &scenario.network, e_ref, v_g, r_eq)?;
    let i_o = converter_currents(&scenario.network, e_ref, &v_f, r_eq)?;
    Ok(phase_peaks(i_o.pos, i_o.neg.conj()).max_peak)
}

/// Upper cap for the bracket expansion, in pu.
const R_HI_CAP: f64 = (1u64 << 20) as f64;

/// Solve for the equivalent resistance that brings the worst phase current
/// exactly to the limit at power angle `delta`.
///
/// Returns `(0.0, false)` when the unsaturated current is already within
/// the limit. Otherwise brackets the root by doubling from 1 pu and
/// bisects to the scenario's tolerance; a bracket that cannot be
/// established is reported as an error, never clamped.
pub fn solve_equivalent_resistance(scenario: &Scenario, delta: f64) -> Result<(f64, bool)> {
    solve_equivalent_resistance_hinted(scenario, delta, None)
}

/// Same as [`solve_equivalent_resistance`] but optionally seeded with a
/// nearby previous solution, which narrows the initial bracket. Used by
/// the swing integrator, where the angle moves slowly between calls.
pub fn solve_equivalent_resistance_hinted(
    scenario: &Scenario,
    delta: f64,
    hint: Option<f64>,
) -> Result<(f64, bool)> {
    let i_lim = scenario.converter.i_lim;
    let tol = scenario.solver.r_eq_tol;
    let excess = |r: f64| -> Result<f64> { Ok(max_phase_current(scenario, delta, r)? - i_lim) };

    if excess(0.0)? <= 0.0 {
        return Ok((0.0, false));
    }

    let (mut lo, mut hi);
    match hint {
        Some(h) if h > 0.0 => {
            lo = (h - 0.05).max(0.0);
            hi = h + 0.05;
            if !(excess(lo)? > 0.0 && excess(hi)? < 0.0) {
                (lo, hi) = expand_bracket(&excess, i_lim)?;
            }
        }
        _ => (lo, hi) = expand_bracket(&excess, i_lim)?,
    }

    for _ in 0..256 {
        if hi - lo < tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), true))
}

fn expand_bracket(excess: &dyn Fn(f64) -> Result<f64>, i_lim: f64) -> Result<(f64, f64)> {
    let mut hi = 1.0;
    loop {
        let e = excess(hi)?;
        if e < 0.0 {
            return Ok((0.0, hi));
        }
        if hi >= R_HI_CAP {
            return Err(Error::RootNotBracketed {
                r_hi: hi,
                i_max: e + i_lim,
                i_lim,
            });
        }
        hi *= 2.0;
    }
}
