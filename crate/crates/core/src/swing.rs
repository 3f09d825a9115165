//! Reduced-order synchronisation dynamics over a fault-on/fault-cleared
//! timeline, stability classification, and the critical-clearing-time
//! search.
//!
//! The state is the power angle and the per-unit frequency deviation:
//! `d(delta)/dt = omega_n * omega`,
//! `d(omega)/dt = omega_c * (k_apc * (p_ref - P(delta)) - omega)`.
//! Integration is classical fourth-order with a fixed step; the active
//! power evaluator switches at fault application and clearing, with a
//! shortened landing step so the switch happens exactly on the event.

use crate::error::{Error, Result};
use crate::numeric::{rk4_step2, PeriodicCubic};
use crate::phasor::wrap_angle;
use crate::power_angle::{
    find_equilibria, healthy_scenario, operating_point_hinted, p_delta_curve, EquilibriumKind,
    PdeltaCurve,
};
use crate::scenario::Scenario;
use rayon::prelude::*;
use std::cell::Cell;

/// Swing state: power angle (rad, left unwrapped during integration) and
/// per-unit frequency deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingState {
    pub delta: f64,
    pub omega: f64,
}

/// Fault application window inside a study horizon.
#[derive(Debug, Clone, Copy)]
pub struct EventTimeline {
    pub fault_on: f64,
    pub fault_duration: f64,
    pub horizon: f64,
}

impl EventTimeline {
    pub fn validate(&self) -> Result<()> {
        let ok = self.fault_on >= 0.0
            && self.fault_duration >= 0.0
            && self.horizon > self.fault_on + self.fault_duration;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation {
                field: "timeline.horizon",
                constraint: "> fault_on + fault_duration (and both nonnegative)",
                value: self.horizon,
            })
        }
    }

    pub fn clear_time(&self) -> f64 {
        self.fault_on + self.fault_duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwingVerdict {
    Stable,
    Unstable,
}

/// Which network the evaluator represented at a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwingPhase {
    Pre,
    Fault,
    Post,
}

impl SwingPhase {
    pub fn label(&self) -> &'static str {
        match self {
            SwingPhase::Pre => "pre",
            SwingPhase::Fault => "fault",
            SwingPhase::Post => "post",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SwingSample {
    pub t: f64,
    pub state: SwingState,
    pub p_o: f64,
    pub phase: SwingPhase,
}

/// Recorded trajectory with its stability verdict.
#[derive(Debug, Clone)]
pub struct SwingTrace {
    pub dt: f64,
    pub samples: Vec<SwingSample>,
    pub verdict: SwingVerdict,
    /// First time after clearing at which the angle crossed the
    /// post-fault UEP while accelerating.
    pub first_uep_crossing: Option<f64>,
}

/// Post-fault equilibria used for classification. A missing SEP means the
/// post-fault curve no longer intersects the reference.
#[derive(Debug, Clone, Copy, Default)]
pub struct PostFaultAnchors {
    pub sep: Option<f64>,
    pub uep: Option<f64>,
}

/// Active-power evaluator over the wrapped angle.
pub enum PowerEvaluator<'a> {
    /// Re-solves the limiter-aware operating point on every call; the
    /// previous resistance seeds the next bracket.
    Exact {
        scenario: &'a Scenario,
        hint: Cell<Option<f64>>,
    },
    /// Periodic cubic interpolation of a precomputed curve.
    Interpolated(PeriodicCubic),
    /// Fixed power, independent of angle (test and characterisation aid).
    Constant(f64),
}

impl<'a> PowerEvaluator<'a> {
    pub fn exact(scenario: &'a Scenario) -> Self {
        PowerEvaluator::Exact {
            scenario,
            hint: Cell::new(None),
        }
    }

    pub fn interpolated(curve: &PdeltaCurve) -> Self {
        let n = curve.samples.len();
        let step = 2.0 * std::f64::consts::PI / n as f64;
        let values = curve.samples.iter().map(|s| s.p_total).collect();
        PowerEvaluator::Interpolated(PeriodicCubic::new(-std::f64::consts::PI, step, values))
    }

    /// Total DC active power at the (wrapped) angle.
    pub fn eval(&self, delta: f64) -> Result<f64> {
        match self {
            PowerEvaluator::Exact { scenario, hint } => {
                let op = operating_point_hinted(scenario, wrap_angle(delta), hint.get())?;
                hint.set(if op.limiting { Some(op.r_eq) } else { None });
                Ok(op.p_total)
            }
            PowerEvaluator::Interpolated(cubic) => Ok(cubic.eval(wrap_angle(delta))),
            PowerEvaluator::Constant(p) => Ok(*p),
        }
    }
}

/// Classify a recorded trajectory against the post-fault equilibria:
/// unstable if the angle crosses the UEP while accelerating at any time
/// after clearing, or if it fails to end inside the settle band around the
/// SEP by the horizon; a missing SEP is unstable by definition.
pub fn classify_stability(
    samples: &[SwingSample],
    clear_time: f64,
    anchors: &PostFaultAnchors,
    settle_band: f64,
) -> (SwingVerdict, Option<f64>) {
    let mut first_crossing = None;
    if let Some(uep) = anchors.uep {
        for pair in samples.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.t < clear_time {
                continue;
            }
            // Crossing the UEP while accelerating, or arriving at
            // clearing already beyond it and still accelerating.
            let crossed = a.state.delta <= uep && b.state.delta > uep;
            let already_past = a.t < clear_time && b.state.delta > uep;
            if (crossed || already_past) && b.state.omega > 0.0 {
                first_crossing = Some(b.t);
                break;
            }
        }
    }
    let sep = match anchors.sep {
        Some(s) => s,
        None => return (SwingVerdict::Unstable, first_crossing),
    };
    if first_crossing.is_some() {
        return (SwingVerdict::Unstable, first_crossing);
    }
    let settled = samples
        .last()
        .map(|s| (s.state.delta - sep).abs() <= settle_band)
        .unwrap_or(false);
    if settled {
        (SwingVerdict::Stable, None)
    } else {
        (SwingVerdict::Unstable, None)
    }
}

struct SegmentPlan<'a, 'b> {
    evaluator: &'b PowerEvaluator<'a>,
    end: f64,
    phase: SwingPhase,
}

/// Integrate the swing dynamics across the timeline, recording every step.
///
/// `pre`, `fault` and `post` evaluate the active power on the respective
/// networks; `anchors` supplies the post-fault equilibria for the verdict.
#[allow(clippy::too_many_arguments)]
pub fn integrate_swing(
    scenario: &Scenario,
    pre: &PowerEvaluator,
    fault: &PowerEvaluator,
    post: &PowerEvaluator,
    timeline: &EventTimeline,
    init: SwingState,
    dt: f64,
    anchors: &PostFaultAnchors,
) -> Result<SwingTrace> {
    assert!(dt > 0.0 && dt <= 1e-3, "swing step must be in (0, 1e-3] s");
    timeline.validate()?;
    let conv = &scenario.converter;
    let (omega_n, omega_c, k_apc, p_ref) = (conv.omega_n, conv.omega_c, conv.k_apc, conv.p_ref);

    let segments = [
        SegmentPlan { evaluator: pre, end: timeline.fault_on, phase: SwingPhase::Pre },
        SegmentPlan { evaluator: fault, end: timeline.clear_time(), phase: SwingPhase::Fault },
        SegmentPlan { evaluator: post, end: timeline.horizon, phase: SwingPhase::Post },
    ];

    let mut samples = Vec::with_capacity((timeline.horizon / dt) as usize + 8);
    let mut t = 0.0;
    let mut y = [init.delta, init.omega];
    samples.push(SwingSample {
        t,
        state: init,
        p_o: segments
            .iter()
            .find(|s| s.end > 0.0)
            .unwrap_or(&segments[2])
            .evaluator
            .eval(init.delta)?,
        phase: SwingPhase::Pre,
    });

    for seg in &segments {
        while t < seg.end - 1e-12 {
            let step = dt.min(seg.end - t);
            let eval_err: Cell<Option<Error>> = Cell::new(None);
            let f = |_tt: f64, s: [f64; 2]| -> [f64; 2] {
                match seg.evaluator.eval(s[0]) {
                    Ok(p) => [omega_n * s[1], omega_c * (k_apc * (p_ref - p) - s[1])],
                    Err(e) => {
                        eval_err.set(Some(e));
                        [f64::NAN, f64::NAN]
                    }
                }
            };
            y = rk4_step2(f, t, y, step);
            t += step;
            if let Some(e) = eval_err.take() {
                return Err(e);
            }
            if !(y[0].is_finite() && y[1].is_finite()) {
                return Err(Error::Divergence { t });
            }
            samples.push(SwingSample {
                t,
                state: SwingState { delta: y[0], omega: y[1] },
                p_o: seg.evaluator.eval(y[0])?,
                phase: seg.phase,
            });
        }
    }

    let (verdict, first_uep_crossing) = classify_stability(
        &samples,
        timeline.clear_time(),
        anchors,
        scenario.solver.settle_band,
    );
    Ok(SwingTrace {
        dt,
        samples,
        verdict,
        first_uep_crossing,
    })
}

/// Trace-free integration used by the clearing-time sweep. Exits early
/// once the verdict is decided: an accelerating UEP crossing after
/// clearing is unstable; a state deep inside the attraction basin
/// (|delta - sep| <= 0.02 rad and |omega| <= 1e-6 after clearing) can no
/// longer reach the settle band boundary, because the swing energy
/// `omega^2/2 + (omega_c k_apc / omega_n) * int(P - p_ref)` only ever
/// decreases.
fn integrate_verdict(
    scenario: &Scenario,
    fault: &PowerEvaluator,
    healthy: &PowerEvaluator,
    duration: f64,
    post_window: f64,
    init: SwingState,
    anchors: &PostFaultAnchors,
) -> Result<SwingVerdict> {
    let conv = &scenario.converter;
    let (omega_n, omega_c, k_apc, p_ref) = (conv.omega_n, conv.omega_c, conv.k_apc, conv.p_ref);
    let dt = scenario.solver.swing_dt;
    let band = scenario.solver.settle_band;
    let sep = match anchors.sep {
        Some(s) => s,
        None => return Ok(SwingVerdict::Unstable),
    };
    let uep = anchors.uep;
    let horizon = duration + post_window;

    let mut t = 0.0;
    let mut y = [init.delta, init.omega];
    let mut prev_delta = y[0];
    while t < horizon - 1e-12 {
        let on_fault = t < duration - 1e-12;
        let evaluator = if on_fault { fault } else { healthy };
        let step = if on_fault { dt.min(duration - t) } else { dt.min(horizon - t) };
        let eval_err: Cell<Option<Error>> = Cell::new(None);
        let f = |_tt: f64, s: [f64; 2]| -> [f64; 2] {
            match evaluator.eval(s[0]) {
                Ok(p) => [omega_n * s[1], omega_c * (k_apc * (p_ref - p) - s[1])],
                Err(e) => {
                    eval_err.set(Some(e));
                    [f64::NAN, f64::NAN]
                }
            }
        };
        y = rk4_step2(f, t, y, step);
        t += step;
        if let Some(e) = eval_err.take() {
            return Err(e);
        }
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(Error::Divergence { t });
        }
        if t >= duration {
            if let Some(u) = uep {
                if prev_delta <= u && y[0] > u && y[1] > 0.0 {
                    return Ok(SwingVerdict::Unstable);
                }
            }
            if (y[0] - sep).abs() <= 0.02_f64.min(band) && y[1].abs() <= 1e-6 {
                return Ok(SwingVerdict::Stable);
            }
        }
        prev_delta = y[0];
    }
    Ok(if (y[0] - sep).abs() <= band {
        SwingVerdict::Stable
    } else {
        SwingVerdict::Unstable
    })
}

/// Outcome of a clearing-time search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CctOutcome {
    /// Largest fault duration (s) on the resolution grid that keeps the
    /// converter synchronised.
    Bounded(f64),
    /// Still stable when the fault lasts the full horizon.
    Unbounded,
}

/// How the swing integration evaluates the power curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Re-solve the limiter-aware operating point at every integration
    /// stage.
    Exact,
    /// Periodic cubic interpolation of precomputed curves.
    Interpolated,
}

/// Clearing-time search report.
#[derive(Debug, Clone)]
pub struct CctReport {
    pub outcome: CctOutcome,
    pub resolution: f64,
    /// Every evaluated (duration, verdict) pair, in duration order.
    pub evaluated: Vec<(f64, SwingVerdict)>,
    /// Stable durations observed above the first unstable one. Reported
    /// as a diagnostic, never hidden.
    pub monotonicity_violations: Vec<f64>,
    pub prefault_sep: f64,
    pub anchors: PostFaultAnchors,
}

/// Search the largest fault duration that keeps the converter stable.
///
/// Durations are swept upward on the `resolution` grid from zero (the
/// procedure of repeated integration with increasing fault length). Each
/// candidate starts at the pre-fault SEP, applies the scenario fault for
/// the candidate duration, and then observes the healthy network for
/// `post_window` seconds. Returns [`CctOutcome::Unbounded`] when every
/// duration up to `post_window`-capped horizon-length faults stays
/// stable.
pub fn critical_clearing_time(
    scenario: &Scenario,
    resolution: f64,
    post_window: f64,
    mode: EvalMode,
) -> Result<CctReport> {
    assert!(resolution > 0.0, "resolution must be positive");
    let healthy_sc = healthy_scenario(scenario);
    let points = scenario.solver.delta_points;
    let healthy_curve = p_delta_curve(&healthy_sc, points)?;
    let p_ref = scenario.converter.p_ref;
    let eq = find_equilibria(&healthy_curve, p_ref)?;
    let sep = eq
        .iter()
        .find(|e| e.kind == EquilibriumKind::Sep)
        .map(|e| e.delta)
        .ok_or(Error::NoPreFaultSep { p_ref })?;
    let uep = eq
        .iter()
        .filter(|e| e.kind == EquilibriumKind::Uep && e.delta > sep)
        .map(|e| e.delta)
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))));
    let anchors = PostFaultAnchors {
        sep: Some(sep),
        uep,
    };
    let init = SwingState {
        delta: sep,
        omega: 0.0,
    };

    // Evaluators hold per-call state (the warm-start hint), so parallel
    // workers each build their own from shared read-only inputs.
    enum EvalSpec<'a> {
        Exact {
            fault: &'a Scenario,
            healthy: &'a Scenario,
        },
        Interp {
            fault: PeriodicCubic,
            healthy: PeriodicCubic,
        },
    }
    let spec = match mode {
        EvalMode::Exact => EvalSpec::Exact {
            fault: scenario,
            healthy: &healthy_sc,
        },
        EvalMode::Interpolated => {
            let fault_curve = p_delta_curve(scenario, points)?;
            let cubic_of = |curve: &PdeltaCurve| match PowerEvaluator::interpolated(curve) {
                PowerEvaluator::Interpolated(c) => c,
                _ => unreachable!(),
            };
            EvalSpec::Interp {
                fault: cubic_of(&fault_curve),
                healthy: cubic_of(&healthy_curve),
            }
        }
    };
    fn make_pair<'b>(spec: &'b EvalSpec<'b>) -> (PowerEvaluator<'b>, PowerEvaluator<'b>) {
        match spec {
            EvalSpec::Exact { fault, healthy } => {
                (PowerEvaluator::exact(fault), PowerEvaluator::exact(healthy))
            }
            EvalSpec::Interp { fault, healthy } => (
                PowerEvaluator::Interpolated(fault.clone()),
                PowerEvaluator::Interpolated(healthy.clone()),
            ),
        }
    }

    let max_k = (post_window / resolution).ceil() as usize;
    let batch = (2 * rayon::current_num_threads()).max(8);
    let mut evaluated: Vec<(f64, SwingVerdict)> = Vec::new();
    let mut first_unstable: Option<usize> = None;

    let mut k0 = 0usize;
    while k0 <= max_k && first_unstable.is_none() {
        let hi = (k0 + batch).min(max_k + 1);
        let chunk: Vec<(f64, Result<SwingVerdict>)> = (k0..hi)
            .into_par_iter()
            .map(|k| {
                let duration = k as f64 * resolution;
                let (f_eval, h_eval) = make_pair(&spec);
                let v = integrate_verdict(
                    scenario, &f_eval, &h_eval, duration, post_window, init, &anchors,
                );
                (duration, v)
            })
            .collect();
        for (duration, v) in chunk {
            let v = v?;
            evaluated.push((duration, v));
            if v == SwingVerdict::Unstable && first_unstable.is_none() {
                first_unstable = Some(evaluated.len() - 1);
            }
        }
        k0 = hi;
    }

    let monotonicity_violations: Vec<f64> = match first_unstable {
        Some(i) => evaluated[i..]
            .iter()
            .filter(|(_, v)| *v == SwingVerdict::Stable)
            .map(|(d, _)| *d)
            .collect(),
        None => Vec::new(),
    };

    let outcome = match first_unstable {
        None => CctOutcome::Unbounded,
        Some(0) => CctOutcome::Bounded(0.0),
        Some(i) => CctOutcome::Bounded(evaluated[i - 1].0),
    };

    Ok(CctReport {
        outcome,
        resolution,
        evaluated,
        monotonicity_violations,
        prefault_sep: sep,
        anchors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{FaultKind, FaultSpec};
    use approx::assert_relative_eq;

    fn timeline(fault_on: f64, dur: f64, horizon: f64) -> EventTimeline {
        EventTimeline {
            fault_on,
            fault_duration: dur,
            horizon,
        }
    }

    /// Polish the healthy SEP to ~1e-13 rad for equilibrium-hold tests.
    fn polished_sep(sc: &Scenario) -> f64 {
        let curve = p_delta_curve(&crate::power_angle::healthy_scenario(sc), 256).unwrap();
        let eq = find_equilibria(&curve, sc.converter.p_ref).unwrap();
        let rough = eq
            .iter()
            .find(|e| e.kind == EquilibriumKind::Sep)
            .unwrap()
            .delta;
        let g = |d: f64| {
            crate::power_angle::operating_point(sc, d).unwrap().p_total - sc.converter.p_ref
        };
        crate::numeric::bisect(rough - 1e-3, rough + 1e-3, g, 1e-14, 200).unwrap()
    }

    #[test]
    fn flat_power_keeps_angle_constant() {
        let sc = Scenario::paper_defaults();
        let p = PowerEvaluator::Constant(sc.converter.p_ref);
        let trace = integrate_swing(
            &sc,
            &p,
            &p,
            &p,
            &timeline(0.1, 0.2, 1.0),
            SwingState { delta: 0.4, omega: 0.0 },
            1e-4,
            &PostFaultAnchors { sep: Some(0.4), uep: None },
        )
        .unwrap();
        for s in &trace.samples {
            assert_eq!(s.state.delta, 0.4);
            assert_eq!(s.state.omega, 0.0);
        }
        assert_eq!(trace.verdict, SwingVerdict::Stable);
    }

    #[test]
    fn equilibrium_holds_for_five_seconds() {
        let sc = Scenario::paper_defaults();
        let sep = polished_sep(&sc);
        let eval = PowerEvaluator::exact(&sc);
        let trace = integrate_swing(
            &sc,
            &eval,
            &eval,
            &eval,
            &timeline(0.0, 0.0, 5.0),
            SwingState { delta: sep, omega: 0.0 },
            1e-3,
            &PostFaultAnchors { sep: Some(sep), uep: None },
        )
        .unwrap();
        for s in &trace.samples {
            assert!(
                (s.state.delta - sep).abs() < 1e-9,
                "drifted to {} at t = {}",
                s.state.delta,
                s.t
            );
        }
    }

    #[test]
    fn frequency_deviation_decays_at_filter_rate() {
        // A constant shortfall held long enough settles omega at
        // k_apc * dP; removing it at t = 0 leaves a pure exponential
        // decay through the power filter.
        let sc = Scenario::paper_defaults();
        let d_p = 0.005;
        let omega0 = sc.converter.k_apc * d_p;
        let p = PowerEvaluator::Constant(sc.converter.p_ref);
        let horizon = 5.0 / sc.converter.omega_c;
        let trace = integrate_swing(
            &sc,
            &p,
            &p,
            &p,
            &timeline(0.0, 0.0, horizon),
            SwingState { delta: 0.0, omega: omega0 },
            1e-4,
            &PostFaultAnchors::default(),
        )
        .unwrap();
        let last = trace.samples.last().unwrap();
        assert!(last.state.omega.abs() < 1e-6, "omega = {}", last.state.omega);
        assert_relative_eq!(
            last.state.omega,
            omega0 * (-5.0f64).exp(),
            max_relative = 1e-3
        );
    }

    #[test]
    fn rk4_error_ratio_on_affine_power() {
        // P affine in delta makes the system linear with a known
        // fundamental solution; halving dt must shrink the global error
        // by at least 14x.
        let sc = Scenario::paper_defaults();
        let conv = &sc.converter;
        let slope = 2.0;
        let p0 = conv.p_ref;
        let d0 = 0.2;
        // exact solution via dense reference integration at tiny step
        let f = |s: [f64; 2]| {
            [
                conv.omega_n * s[1],
                conv.omega_c * (conv.k_apc * (p0 - (p0 + slope * (s[0] - d0))) - s[1]),
            ]
        };
        let integrate = |dt: f64| {
            let mut y = [d0 + 0.3, 0.0];
            let steps = (1.0 / dt).round() as usize;
            for k in 0..steps {
                y = rk4_step2(|_, s| f(s), k as f64 * dt, y, dt);
            }
            y
        };
        // Steps chosen so truncation error sits far above rounding noise.
        let reference = integrate(1e-5);
        let coarse = integrate(4e-3);
        let fine = integrate(2e-3);
        let err_coarse = ((coarse[0] - reference[0]).powi(2) + (coarse[1] - reference[1]).powi(2)).sqrt();
        let err_fine = ((fine[0] - reference[0]).powi(2) + (fine[1] - reference[1]).powi(2)).sqrt();
        assert!(
            err_coarse / err_fine >= 14.0,
            "ratio {}",
            err_coarse / err_fine
        );
    }

    #[test]
    fn wrapped_evaluation_is_periodic() {
        let mut sc = Scenario::paper_defaults();
        sc.fault = FaultSpec { kind: FaultKind::Slg, r_f: 0.0 };
        let eval = PowerEvaluator::exact(&sc);
        for d in [-3.0, -1.0, 0.5, 2.0, std::f64::consts::PI] {
            let a = eval.eval(d).unwrap();
            let b = eval.eval(d + 2.0 * std::f64::consts::PI).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        // the curve closes exactly across the wrap point
        let a = eval.eval(-std::f64::consts::PI).unwrap();
        let b = eval.eval(std::f64::consts::PI).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn monotone_runaway_is_unstable() {
        let sc = Scenario::paper_defaults();
        // Fault power far below reference forces steady acceleration.
        let pre = PowerEvaluator::Constant(sc.converter.p_ref);
        let fault = PowerEvaluator::Constant(0.0);
        let post = PowerEvaluator::Constant(0.0);
        let trace = integrate_swing(
            &sc,
            &pre,
            &fault,
            &post,
            &timeline(0.0, 1.0, 3.0),
            SwingState { delta: 0.1, omega: 0.0 },
            1e-3,
            &PostFaultAnchors { sep: Some(0.1), uep: Some(2.0) },
        )
        .unwrap();
        assert_eq!(trace.verdict, SwingVerdict::Unstable);
        assert!(trace.first_uep_crossing.is_some());
    }

    #[test]
    fn missing_post_fault_sep_is_unstable_by_definition() {
        let samples = vec![SwingSample {
            t: 0.0,
            state: SwingState { delta: 0.0, omega: 0.0 },
            p_o: 0.0,
            phase: SwingPhase::Post,
        }];
        let (v, _) = classify_stability(&samples, 0.0, &PostFaultAnchors::default(), 0.05);
        assert_eq!(v, SwingVerdict::Unstable);
    }

    #[test]
    fn interpolated_mode_tracks_exact_mode() {
        let mut sc = Scenario::paper_defaults();
        sc.fault = FaultSpec { kind: FaultKind::Slg, r_f: 0.05 };
        let curve = p_delta_curve(&sc, 1000).unwrap();
        let interp = PowerEvaluator::interpolated(&curve);
        let exact = PowerEvaluator::exact(&sc);
        for d in [-2.4, -0.9, 0.0, 0.7, 1.9, 3.0] {
            let a = interp.eval(d).unwrap();
            let b = exact.eval(d).unwrap();
            assert!(
                (a - b).abs() < 2e-4,
                "interp {a} vs exact {b} at delta = {d}"
            );
        }
    }

    #[test]
    fn shallow_fault_keeps_cct_unbounded() {
        // A very resistive fault barely dents the curve: the fault-on
        // network keeps an equilibrium and the angle never leaves the
        // basin, whatever the duration.
        let mut sc = Scenario::paper_defaults();
        sc.fault = FaultSpec { kind: FaultKind::Slg, r_f: 5.0 };
        let report =
            critical_clearing_time(&sc, 0.05, 0.25, EvalMode::Interpolated).unwrap();
        assert_eq!(report.outcome, CctOutcome::Unbounded);
        assert!(report.monotonicity_violations.is_empty());
    }

    #[test]
    fn halving_resolution_moves_cct_by_at_most_one_coarse_step() {
        let mut sc = Scenario::paper_defaults();
        sc.fault = FaultSpec { kind: FaultKind::Slg, r_f: 0.0 };
        sc.solver.delta_points = 500;
        let coarse = critical_clearing_time(&sc, 0.02, 3.0, EvalMode::Interpolated).unwrap();
        let fine = critical_clearing_time(&sc, 0.01, 3.0, EvalMode::Interpolated).unwrap();
        let (CctOutcome::Bounded(a), CctOutcome::Bounded(b)) = (coarse.outcome, fine.outcome)
        else {
            panic!("expected bounded outcomes");
        };
        assert!((a - b).abs() <= 0.02 + 1e-12, "coarse {a} fine {b}");
    }
}
