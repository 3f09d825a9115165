//! Limiter-aware operating points and power-angle curves.
//!
//! At each power angle the equivalent saturation resistance is re-solved,
//! the sequence networks are evaluated, and the delivered power is split
//! into its positive-sequence and negative-sequence DC components plus the
//! double-frequency oscillation amplitude. Equilibria are the refined
//! intersections of the total DC power with the power reference.

use crate::error::{Error, Result};
use crate::limiter::scaling_from_resistance;
use crate::network::{converter_currents, fault_point_voltages, pcc_voltages, NetworkParams};
use crate::phasor::{arg_or_zero, polar, wrap_angle, Phasor, SequenceSet};
use crate::scenario::Scenario;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Fully solved state at one power angle.
#[derive(Debug, Clone, Copy)]
pub struct OperatingPoint {
    /// Power angle between the converter internal source and the grid, rad.
    pub delta: f64,
    /// Saturation-equivalent resistance, pu.
    pub r_eq: f64,
    /// Scaling factor implied by `r_eq`.
    pub c: f64,
    /// Fault-point sequence voltages.
    pub v_f: SequenceSet,
    /// Converter output sequence currents.
    pub i_o: SequenceSet,
    /// PCC sequence voltages.
    pub v_o: SequenceSet,
    /// Angle between the internal source and the positive-sequence
    /// fault-point voltage: `delta - arg(V_f+)`, rad.
    pub delta_f_pos: f64,
    /// Positive-sequence DC active power, pu.
    pub p_pos: f64,
    /// Negative-sequence DC active power, pu (never positive).
    pub p_neg: f64,
    /// Total DC active power, pu.
    pub p_total: f64,
    /// Amplitude of the double-frequency power oscillation, pu.
    pub p_2w_amp: f64,
    /// Whether the current limiter is active at this angle.
    pub limiting: bool,
}

/// Ordered limiter-aware samples over a uniform power-angle grid covering
/// (-pi, pi].
#[derive(Debug, Clone)]
pub struct PdeltaCurve {
    pub scenario: Scenario,
    pub samples: Vec<OperatingPoint>,
    /// Hash of the producing scenario (see `report::scenario_hash`).
    pub scenario_hash: String,
    pub grid_points: usize,
}

/// Classification of a power/reference intersection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    /// Positive local slope of the power curve.
    Sep,
    /// Negative local slope, or a tangency (conservative tie-break).
    Uep,
}

#[derive(Debug, Clone, Copy)]
pub struct Equilibrium {
    pub delta: f64,
    pub kind: EquilibriumKind,
}

/// Closed-form positive-sequence power, evaluated from the solved
/// magnitudes and the source/fault-voltage angle difference. Must agree
/// with `Re(V_o+ conj(i_o+))` to machine accuracy; the identity is part of
/// the acceptance suite.
pub fn active_power_pos(op: &OperatingPoint, net: &NetworkParams) -> f64 {
    let z1 = net.z_g1();
    let (r_g1, x_g1) = (z1.re, z1.im);
    // The internal source is recoverable exactly from the PCC relation.
    let e = (op.v_o.pos + op.r_eq * op.i_o.pos).norm();
    let v = op.v_f.pos.norm();
    let den = (op.r_eq + r_g1).powi(2) + x_g1 * x_g1;
    (r_g1 * e * e + (op.r_eq - r_g1) * e * v * op.delta_f_pos.cos()
        + e * v * x_g1 * op.delta_f_pos.sin()
        - op.r_eq * v * v)
        / den
}

/// Closed-form negative-sequence power: `-r_eq |V_f-|^2 / |r_eq + Z_g1|^2`.
/// Non-positive for every angle, fault class and fault resistance.
pub fn active_power_neg(op: &OperatingPoint, net: &NetworkParams) -> f64 {
    let z1 = net.z_g1();
    let den = (op.r_eq + z1.re).powi(2) + z1.im * z1.im;
    -op.r_eq * op.v_f.neg.norm_sqr() / den
}

/// Amplitude of the double-frequency power oscillation produced by the
/// cross-sequence terms. With standard sequence phasors the phase-domain
/// instantaneous power works out to
/// `P_dc + Re[(V+ i- + V- i+) e^{j 2 theta}]`, so the amplitude is the
/// magnitude of the plain product sum. Reported as metadata only; the
/// synchronisation loop bandwidth sits far below double frequency, so the
/// oscillation never enters the swing dynamics.
pub fn double_frequency_power(op: &OperatingPoint) -> f64 {
    (op.v_o.pos * op.i_o.neg + op.v_o.neg * op.i_o.pos).norm()
}

/// Solve the full operating point at one power angle. Angles outside
/// (-pi, pi] are wrapped.
pub fn operating_point(scenario: &Scenario, delta: f64) -> Result<OperatingPoint> {
    operating_point_hinted(scenario, delta, None)
}

/// [`operating_point`] with a warm-start hint for the resistance solve
/// (used by the exact-mode swing integration).
pub fn operating_point_hinted(
    scenario: &Scenario,
    delta: f64,
    r_eq_hint: Option<f64>,
) -> Result<OperatingPoint> {
    let delta = wrap_angle(delta);
    let (r_eq, limiting) =
        crate::limiter::solve_equivalent_resistance_hinted(scenario, delta, r_eq_hint)?;
    let e_ref = polar(scenario.converter.e_ref_mag, delta);
    let v_g = Phasor::new(scenario.network.v_g_mag, 0.0);
    let v_f = fault_point_voltages(&scenario.fault, &scenario.network, e_ref, v_g, r_eq)?;
    let i_o = converter_currents(&scenario.network, e_ref, &v_f, r_eq)?;
    let v_o = pcc_voltages(e_ref, &i_o, r_eq);
    let delta_f_pos = delta - arg_or_zero(v_f.pos);
    let mut op = OperatingPoint {
        delta,
        r_eq,
        c: scaling_from_resistance(r_eq, scenario.converter.k_pv),
        v_f,
        i_o,
        v_o,
        delta_f_pos,
        p_pos: 0.0,
        p_neg: 0.0,
        p_total: 0.0,
        p_2w_amp: 0.0,
        limiting,
    };
    op.p_pos = active_power_pos(&op, &scenario.network);
    op.p_neg = active_power_neg(&op, &scenario.network);
    op.p_total = op.p_pos + op.p_neg;
    op.p_2w_amp = double_frequency_power(&op);
    Ok(op)
}

/// Uniform grid over (-pi, pi]: the k-th of `points` samples sits at
/// `-pi + 2 pi k / points`, k = 1..=points.
pub fn delta_grid(points: usize) -> impl Iterator<Item = f64> {
    (1..=points).map(move |k| -PI + 2.0 * PI * k as f64 / points as f64)
}

/// Sample the limiter-aware power-angle curve on a uniform grid.
/// Deterministic for a given scenario; a failed sample aborts the curve
/// and reports the offending angle.
pub fn p_delta_curve(scenario: &Scenario, points: usize) -> Result<PdeltaCurve> {
    assert!(points >= 64, "grid resolution below 64 points");
    let deltas: Vec<f64> = delta_grid(points).collect();
    let samples: Vec<OperatingPoint> = deltas
        .par_iter()
        .map(|&d| {
            operating_point(scenario, d).map_err(|e| Error::CurveSample {
                delta: d,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PdeltaCurve {
        scenario: scenario.clone(),
        scenario_hash: crate::report::scenario_hash(scenario),
        samples,
        grid_points: points,
    })
}

impl PdeltaCurve {
    /// Largest total-power sample on the grid.
    pub fn max_p_total(&self) -> f64 {
        self.samples.iter().map(|s| s.p_total).fold(f64::MIN, f64::max)
    }
}

/// Slopes flatter than this are treated as tangencies and classified UEP.
const TANGENCY_SLOPE: f64 = 1e-6;

/// Find all intersections of the curve's total power with `p_ref`,
/// refined by bisection and classified by the local slope sign. An empty
/// result is legal: it signals equilibrium disappearance, not an error.
pub fn find_equilibria(curve: &PdeltaCurve, p_ref: f64) -> Result<Vec<Equilibrium>> {
    let sc = &curve.scenario;
    let g = |delta: f64| -> Result<f64> { Ok(operating_point(sc, delta)?.p_total - p_ref) };
    // (angle, found as a double root)
    let mut roots: Vec<(f64, bool)> = Vec::new();
    let samples = &curve.samples;
    let tol = sc.solver.equilibrium_tol;
    for pair in samples.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let (ga, gb) = (a.p_total - p_ref, b.p_total - p_ref);
        if ga == 0.0 {
            roots.push((a.delta, false));
            continue;
        }
        if ga * gb < 0.0 {
            let (mut lo, mut hi, mut glo) = (a.delta, b.delta, ga);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid)?;
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if gm.signum() == glo.signum() {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            roots.push((0.5 * (lo + hi), false));
        }
    }
    if let Some(last) = samples.last() {
        if last.p_total - p_ref == 0.0 {
            roots.push((last.delta, false));
        }
    }

    // Tangencies (double roots) produce no sign change: refine interior
    // extrema of the residual that sit close to zero and accept them as
    // roots when the extremal residual is within tolerance.
    for w in samples.windows(3) {
        let g0 = w[0].p_total - p_ref;
        let g1 = w[1].p_total - p_ref;
        let g2 = w[2].p_total - p_ref;
        let near_max = g1 > g0 && g1 > g2 && g1 < 0.0 && g1 > -1e-4;
        let near_min = g1 < g0 && g1 < g2 && g1 > 0.0 && g1 < 1e-4;
        if !(near_max || near_min) {
            continue;
        }
        let (mut lo, mut hi) = (w[0].delta, w[2].delta);
        for _ in 0..80 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            let f1 = g(m1)?;
            let f2 = g(m2)?;
            let keep_right = if near_max { f1 < f2 } else { f1 > f2 };
            if keep_right {
                lo = m1;
            } else {
                hi = m2;
            }
            if hi - lo < tol {
                break;
            }
        }
        let ext = 0.5 * (lo + hi);
        if g(ext)?.abs() <= 1e-9 {
            roots.push((ext, true));
        }
    }

    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    roots.dedup_by(|a, b| (a.0 - b.0).abs() < 2.0 * tol);

    let mut out = Vec::with_capacity(roots.len());
    for (root, double_root) in roots {
        // A double root is a tangency: conservatively unstable. Simple
        // roots classify by the local slope sign (central secant), with
        // near-flat slopes treated as tangencies too.
        let h = 1e-4;
        let slope = (g(root + h)? - g(root - h)?) / (2.0 * h);
        let kind = if double_root || slope.abs() < TANGENCY_SLOPE || slope < 0.0 {
            EquilibriumKind::Uep
        } else {
            EquilibriumKind::Sep
        };
        out.push(Equilibrium { delta: root, kind });
    }
    Ok(out)
}

/// Convenience: curve and equilibria for the scenario with its fault
/// removed (the pre-/post-fault network).
pub fn healthy_scenario(scenario: &Scenario) -> Scenario {
    let mut sc = scenario.clone();
    sc.fault = crate::network::FaultSpec::none();
    sc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{FaultKind, FaultSpec};
    use approx::assert_relative_eq;

    fn slg_scenario() -> Scenario {
        let mut sc = Scenario::paper_defaults();
        sc.fault = FaultSpec {
            kind: FaultKind::Slg,
            r_f: 0.0,
        };
        sc
    }

    /// Direct two-source transfer: P at the PCC of E behind Z with the
    /// grid at V, no limiter.
    fn unconstrained_transfer(sc: &Scenario, delta: f64) -> f64 {
        let e = polar(sc.converter.e_ref_mag, delta);
        let vg = Phasor::new(sc.network.v_g_mag, 0.0);
        let z = sc.network.z_g1() + sc.network.z_g2();
        let i = (e - vg) / z;
        (e * i.conj()).re
    }

    #[test]
    fn healthy_small_angle_matches_two_source_transfer() {
        let sc = Scenario::paper_defaults();
        for delta in [0.0, 0.05, 0.1, -0.1] {
            let op = operating_point(&sc, delta).unwrap();
            assert!(!op.limiting);
            assert_eq!(op.r_eq, 0.0);
            assert_eq!(op.p_neg, 0.0);
            assert_relative_eq!(
                op.p_total,
                unconstrained_transfer(&sc, delta),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn unbounded_limit_reduces_to_unconstrained_fault_solution() {
        let mut sc = slg_scenario();
        sc.converter.i_lim = 1e9;
        for delta in [-2.0, -0.5, 0.3, 1.4, 3.0] {
            let op = operating_point(&sc, delta).unwrap();
            assert!(!op.limiting);
            assert_eq!(op.r_eq, 0.0);
            // with r_eq = 0 the PCC voltage equals the source and the
            // negative-sequence power vanishes
            assert_relative_eq!((op.v_o.pos - polar(1.1, delta)).norm(), 0.0, epsilon = 1e-12);
            assert_eq!(op.p_neg, 0.0);
        }
    }

    #[test]
    fn slg_fault_at_zero_angle_has_negative_sequence_power() {
        let sc = slg_scenario();
        let op = operating_point(&sc, 0.0).unwrap();
        assert!(op.limiting, "bolted slg at paper parameters saturates");
        assert!(op.p_neg < 0.0);
    }

    #[test]
    fn closed_forms_match_circuit_products() {
        let sc = slg_scenario();
        for delta in [-3.0, -1.2, -0.2, 0.4, 1.1, 2.2, 3.1] {
            let op = operating_point(&sc, delta).unwrap();
            let p_pos_circuit = (op.v_o.pos * op.i_o.pos.conj()).re;
            let p_neg_circuit = (op.v_o.neg * op.i_o.neg.conj()).re;
            assert_relative_eq!(op.p_pos, p_pos_circuit, max_relative = 1e-10);
            if p_neg_circuit != 0.0 {
                assert_relative_eq!(op.p_neg, p_neg_circuit, max_relative = 1e-10);
            } else {
                assert!(op.p_neg.abs() < 1e-14);
            }
            assert_relative_eq!(op.p_total, op.p_pos + op.p_neg, epsilon = 1e-12);
        }
    }

    #[test]
    fn lossless_unsaturated_form_reduces_to_sine_law() {
        // r_eq = 0, R_g1 = 0: P+ = E V_f sin(delta_f) / X_g1.
        let mut sc = Scenario::paper_defaults();
        sc.network.r_g = 0.0;
        let op = operating_point(&sc, 0.1).unwrap();
        assert_eq!(op.r_eq, 0.0);
        let x1 = sc.network.z_g1().im;
        let expect = sc.converter.e_ref_mag * op.v_f.pos.norm() * op.delta_f_pos.sin() / x1;
        assert_relative_eq!(op.p_pos, expect, max_relative = 1e-12);
    }

    #[test]
    fn no_drop_means_no_positive_power() {
        // V_f+ = E∠delta: zero current, and the circuit product vanishes.
        let sc = Scenario::paper_defaults();
        let e = polar(sc.converter.e_ref_mag, 0.7);
        let v_f = SequenceSet::new(e, Phasor::new(0.0, 0.0));
        let i_o = converter_currents(&sc.network, e, &v_f, 0.0).unwrap();
        let v_o = pcc_voltages(e, &i_o, 0.0);
        assert_eq!((v_o.pos * i_o.pos.conj()).re, 0.0);
    }

    #[test]
    fn double_frequency_amplitude_cases() {
        let sc = slg_scenario();
        // balanced: no negative sequence anywhere
        let healthy = operating_point(&Scenario::paper_defaults(), 0.1).unwrap();
        assert_eq!(healthy.p_2w_amp, 0.0);
        // r_eq = 0 leaves only the V_o+ term
        let mut open = slg_scenario();
        open.converter.i_lim = 1e9;
        let op = operating_point(&open, 0.4).unwrap();
        assert_relative_eq!(
            op.p_2w_amp,
            (op.v_o.pos * op.i_o.neg.conj()).norm(),
            max_relative = 1e-12
        );
        // saturated case is nonzero
        let op = operating_point(&sc, 0.4).unwrap();
        assert!(op.p_2w_amp > 0.0);
    }

    #[test]
    fn curve_is_deterministic_and_ordered() {
        let sc = slg_scenario();
        let a = p_delta_curve(&sc, 128).unwrap();
        let b = p_delta_curve(&sc, 128).unwrap();
        assert_eq!(a.samples.len(), 128);
        for (x, y) in a.samples.iter().zip(b.samples.iter()) {
            assert_eq!(x.p_total.to_bits(), y.p_total.to_bits());
            assert_eq!(x.r_eq.to_bits(), y.r_eq.to_bits());
        }
        for pair in a.samples.windows(2) {
            assert!(pair[0].delta < pair[1].delta);
        }
        assert_relative_eq!(a.samples.last().unwrap().delta, PI, epsilon = 1e-12);
        assert!(a.samples[0].delta > -PI);
    }

    #[test]
    fn prefault_has_exactly_one_sep_and_one_uep() {
        let sc = Scenario::paper_defaults();
        let curve = p_delta_curve(&sc, sc.solver.delta_points).unwrap();
        assert!(curve.max_p_total() > sc.converter.p_ref);
        let eq = find_equilibria(&curve, sc.converter.p_ref).unwrap();
        let seps: Vec<_> = eq.iter().filter(|e| e.kind == EquilibriumKind::Sep).collect();
        let ueps: Vec<_> = eq.iter().filter(|e| e.kind == EquilibriumKind::Uep).collect();
        assert_eq!(seps.len(), 1, "{eq:?}");
        assert_eq!(ueps.len(), 1, "{eq:?}");
        let sep = seps[0].delta;
        let op = operating_point(&sc, sep).unwrap();
        assert!((op.p_total - sc.converter.p_ref).abs() < 1e-6);
    }

    #[test]
    fn reference_above_curve_max_has_no_equilibria() {
        let sc = slg_scenario();
        let curve = p_delta_curve(&sc, 256).unwrap();
        let eq = find_equilibria(&curve, curve.max_p_total() + 0.5).unwrap();
        assert!(eq.is_empty());
    }

    #[test]
    fn tangency_reports_single_uep() {
        let sc = Scenario::paper_defaults();
        let curve = p_delta_curve(&sc, sc.solver.delta_points).unwrap();
        // Locate the curve maximum precisely, then intersect exactly there.
        let (k, _) = curve
            .samples
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.p_total.total_cmp(&b.1.p_total))
            .unwrap();
        let mut lo = curve.samples[k].delta - 2.0 * PI / 1000.0;
        let mut hi = curve.samples[k].delta + 2.0 * PI / 1000.0;
        for _ in 0..60 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            let p1 = operating_point(&sc, m1).unwrap().p_total;
            let p2 = operating_point(&sc, m2).unwrap().p_total;
            if p1 < p2 {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let apex = 0.5 * (lo + hi);
        let p_max = operating_point(&sc, apex).unwrap().p_total;
        let eq = find_equilibria(&curve, p_max).unwrap();
        assert_eq!(eq.len(), 1, "{eq:?}");
        assert_eq!(eq[0].kind, EquilibriumKind::Uep);
    }

    #[test]
    fn limiter_activation_is_continuous() {
        // Find a straddling pair on the coarse grid, refine with 1e-4
        // steps, and bound the largest refined jump by the local secant
        // slope times the refined spacing.
        let sc = Scenario::paper_defaults();
        let curve = p_delta_curve(&sc, sc.solver.delta_points).unwrap();
        let pair = curve
            .samples
            .windows(2)
            .find(|w| !w[0].limiting && w[1].limiting)
            .expect("activation inside the grid");
        let (a, b) = (pair[0].delta, pair[1].delta);
        let h = 1e-4;
        let mut prev = operating_point(&sc, a).unwrap().p_total;
        let mut max_jump = 0.0f64;
        let mut d = a + h;
        let mut slope_est = 0.0f64;
        while d <= b + 1e-12 {
            let cur = operating_point(&sc, d).unwrap().p_total;
            max_jump = max_jump.max((cur - prev).abs());
            slope_est = slope_est.max((cur - prev).abs() / h);
            prev = cur;
            d += h;
        }
        assert!(
            max_jump <= slope_est * h * 1.5 + 1e-12,
            "jump {max_jump:.3e} exceeds secant bound {:.3e}",
            slope_est * h
        );
    }
}
