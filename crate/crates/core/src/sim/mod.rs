//! Average-model time-domain simulator of the full converter control
//! structure: DSOGI sequence extraction, dual-sequence voltage loops with
//! the integrator held at zero while the limiter is active, the elliptical
//! current limiter, the active-power synchronisation loop, and the
//! switchable three-phase fault circuit. The converter bridge is an ideal
//! controllable source (no switching, ideal DC link) and the current loop
//! tracks its reference within one controller step (an optional
//! first-order lag stress-tests that assumption).
//!
//! Cross-validates the phasor pipeline: at a frozen power angle the
//! settled waveforms must reproduce the limiter-aware operating point.

pub mod circuit;
pub mod dsogi;

use crate::error::{Error, Result};
use crate::limiter::{phase_peaks, scaling_factor};
use crate::phasor::Phasor;
use crate::scenario::Scenario;
use crate::swing::EventTimeline;
use circuit::{CircuitParams, CircuitState};
use dsogi::{synthesize_abc, Dsogi};

/// Full mutable state of one simulation instance.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub circuit: CircuitState,
    /// Sequence filters for the PCC voltage and the grid-side current.
    pub dsogi_v: Dsogi,
    pub dsogi_i: Dsogi,
    /// Voltage-loop integrator states; held at zero while the limiter is
    /// active.
    pub integ_pos: Phasor,
    pub integ_neg: Phasor,
    pub integ_hold: bool,
    /// Power-filter state of the synchronisation loop (pu deviation).
    pub omega: f64,
    pub theta_ref: f64,
    /// Limited current references held over the controller period.
    pub ref_pos: Phasor,
    pub ref_neg: Phasor,
    pub c: f64,
}

/// One recorded sample.
#[derive(Debug, Clone, Copy)]
pub struct SimRow {
    pub t: f64,
    pub v_o: [f64; 3],
    pub i_o: [f64; 3],
    /// DSOGI sequence estimates of the PCC voltage (synchronous frames).
    pub v_pos: Phasor,
    pub v_neg: Phasor,
    /// DSOGI sequence estimates of the grid-side current.
    pub i_g_pos: Phasor,
    pub i_g_neg: Phasor,
    pub p_inst: f64,
    pub c: f64,
    pub theta_ref: f64,
}

/// Recorded waveforms at uniform spacing `dt_row`.
#[derive(Debug, Clone)]
pub struct SimTrace {
    pub rows: Vec<SimRow>,
    pub dt_row: f64,
    pub omega_n: f64,
}

/// Simulation options beyond the scenario record.
#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Pin the power angle: disables the synchronisation loop and keeps
    /// `theta_ref = omega_n t + delta`. Used for phasor cross-validation.
    pub frozen_delta: Option<f64>,
    /// Initial angle of the synchronisation loop when not frozen.
    pub init_delta: f64,
    /// Record one row every this many circuit steps.
    pub record_every: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            frozen_delta: None,
            init_delta: 0.0,
            record_every: 10,
        }
    }
}

fn instantaneous_power(v: [f64; 3], i: [f64; 3]) -> f64 {
    2.0 / 3.0 * (v[0] * i[0] + v[1] * i[1] + v[2] * i[2])
}

/// Run the average model across the timeline. Fault application and
/// clearing are snapped to the circuit step grid.
pub fn simulate(
    scenario: &Scenario,
    timeline: &EventTimeline,
    options: &SimOptions,
) -> Result<SimTrace> {
    timeline.validate()?;
    scenario.validate()?;
    let solver = &scenario.solver;
    let conv = &scenario.converter;
    let net = &scenario.network;
    let dt = solver.sim_dt;
    let n_sub = (solver.ctrl_dt / dt).round() as usize;
    assert!(
        n_sub >= 1 && (solver.ctrl_dt - n_sub as f64 * dt).abs() < 1e-12,
        "controller period must be a multiple of the circuit step"
    );
    let params = CircuitParams::from_network(net, scenario.fault.r_f);
    let omega_n = net.omega_n;
    let lag_tau = solver.current_loop_lag;
    let has_lag = lag_tau > 0.0;

    let v_g_mag = net.v_g_mag;
    let v_g_at = move |t: f64| synthesize_abc(Phasor::new(v_g_mag, 0.0), Phasor::new(0.0, 0.0), omega_n * t);

    let mut state = SimState {
        t: 0.0,
        circuit: CircuitState::at_rest(has_lag),
        dsogi_v: Dsogi::default(),
        dsogi_i: Dsogi::default(),
        integ_pos: Phasor::new(0.0, 0.0),
        integ_neg: Phasor::new(0.0, 0.0),
        integ_hold: false,
        omega: 0.0,
        theta_ref: options.frozen_delta.unwrap_or(options.init_delta),
        ref_pos: Phasor::new(0.0, 0.0),
        ref_neg: Phasor::new(0.0, 0.0),
        c: 1.0,
    };

    let total_steps = (timeline.horizon / dt).round() as usize;
    let fault_on_step = (timeline.fault_on / dt).round() as usize;
    let clear_step = ((timeline.fault_on + timeline.fault_duration) / dt).round() as usize;

    let mut rows = Vec::with_capacity(total_steps / options.record_every.max(1) + 2);
    let mut fault_applied = false;
    let mut fault_cleared = false;

    let mut step = 0usize;
    while step < total_steps {
        // ---- discrete controller at the frame start ----
        let theta = state.theta_ref;
        let v_o_abc = state.circuit.v_o;
        let i_g_abc = state.circuit.branch.conv_side();
        let i_o_abc = state
            .circuit
            .i_o_lag
            .unwrap_or_else(|| synthesize_abc(state.ref_pos, state.ref_neg, theta));
        let (v_pos, v_neg) = state.dsogi_v.step(v_o_abc, omega_n, theta, solver.ctrl_dt);
        let (ig_pos, ig_neg) = state.dsogi_i.step(i_g_abc, omega_n, theta, solver.ctrl_dt);
        let p_inst = instantaneous_power(v_o_abc, i_o_abc);

        let e_ref = Phasor::new(conv.e_ref_mag, 0.0);
        let w_pu = 1.0 + state.omega;
        let jcf = Phasor::new(0.0, net.c_f * w_pu);
        let raw_pos = conv.k_pv * (e_ref - v_pos) + state.integ_pos + ig_pos + jcf * v_pos;
        let raw_neg = conv.k_pv * (-v_neg) + state.integ_neg + ig_neg - jcf * v_neg;

        let peaks = phase_peaks(raw_pos, raw_neg);
        let c = scaling_factor(peaks.max_peak, conv.i_lim);
        state.c = c;
        state.ref_pos = raw_pos * c;
        state.ref_neg = raw_neg * c;

        if c < 1.0 {
            // anti-windup: the integrator output is held at zero for the
            // whole limiting period
            state.integ_hold = true;
            state.integ_pos = Phasor::new(0.0, 0.0);
            state.integ_neg = Phasor::new(0.0, 0.0);
        } else {
            state.integ_hold = false;
            let ki = solver.voltage_integrator_gain;
            state.integ_pos += ki * solver.ctrl_dt * (e_ref - v_pos);
            state.integ_neg += ki * solver.ctrl_dt * (-v_neg);
        }

        if options.frozen_delta.is_none() {
            let target = conv.k_apc * (conv.p_ref - p_inst);
            let decay = (-conv.omega_c * solver.ctrl_dt).exp();
            state.omega = target + (state.omega - target) * decay;
        } else {
            state.omega = 0.0;
        }

        // ---- circuit substeps with the held references ----
        let frame_t0 = state.t;
        let frame_theta0 = state.theta_ref;
        let theta_rate = match options.frozen_delta {
            Some(_) => omega_n,
            None => omega_n * (1.0 + state.omega),
        };
        let (ref_pos, ref_neg) = (state.ref_pos, state.ref_neg);
        let theta_at = move |t: f64| frame_theta0 + theta_rate * (t - frame_t0);
        let i_ref_at = move |t: f64| synthesize_abc(ref_pos, ref_neg, theta_at(t));

        for _ in 0..n_sub {
            if step >= total_steps {
                break;
            }
            if !fault_applied && step == fault_on_step && scenario.fault.kind != crate::network::FaultKind::None {
                state.circuit.branch = state.circuit.branch.apply_fault(scenario.fault.kind);
                fault_applied = true;
            }
            if fault_applied && !fault_cleared && step == clear_step {
                state.circuit.branch = state.circuit.branch.clear_fault(&params);
                fault_cleared = true;
            }
            state
                .circuit
                .rk4_step(&params, state.t, dt, i_ref_at, v_g_at, lag_tau);
            state.t += dt;
            step += 1;
            if !state.circuit.is_finite() {
                return Err(Error::Divergence { t: state.t });
            }
            if step % options.record_every.max(1) == 0 {
                let t = state.t;
                let i_o = state
                    .circuit
                    .i_o_lag
                    .unwrap_or_else(|| i_ref_at(t));
                rows.push(SimRow {
                    t,
                    v_o: state.circuit.v_o,
                    i_o,
                    v_pos,
                    v_neg,
                    i_g_pos: ig_pos,
                    i_g_neg: ig_neg,
                    p_inst: instantaneous_power(state.circuit.v_o, i_o),
                    c,
                    theta_ref: theta_at(t),
                });
            }
        }
        state.theta_ref = theta_at(state.t);
    }

    Ok(SimTrace {
        rows,
        dt_row: dt * options.record_every.max(1) as f64,
        omega_n,
    })
}

/// DC component and double-frequency amplitude of the instantaneous power
/// over the trailing `window` seconds of a trace. The window must cover at
/// least ten fundamental cycles and be settled: the means of its two
/// halves may differ by at most 1% (with a 0.01 pu floor).
pub fn steady_state_power(trace: &SimTrace, window: f64) -> Result<(f64, f64)> {
    let f0 = trace.omega_n / (2.0 * std::f64::consts::PI);
    assert!(
        window >= 10.0 / f0,
        "window must cover at least ten fundamental cycles"
    );
    let n_window = (window / trace.dt_row).round() as usize;
    assert!(trace.rows.len() >= n_window, "trace shorter than the window");
    let rows = &trace.rows[trace.rows.len() - n_window..];

    let half = n_window / 2;
    let mean = |r: &[SimRow]| r.iter().map(|s| s.p_inst).sum::<f64>() / r.len() as f64;
    let (m1, m2) = (mean(&rows[..half]), mean(&rows[half..]));
    let drift = (m2 - m1).abs();
    if drift > 0.01 * m1.abs().max(m2.abs()).max(0.01) {
        return Err(Error::NotSettled { drift });
    }

    // Trim to an integer count of double-frequency cycles so the bin is
    // exact, then correlate against e^{-j 2 w t}.
    let samples_per_cycle = 1.0 / (2.0 * f0 * trace.dt_row);
    let cycles = (n_window as f64 / samples_per_cycle).floor().max(1.0);
    let n_use = (cycles * samples_per_cycle).round() as usize;
    let rows = &rows[rows.len() - n_use..];
    let p_dc = mean(rows);
    let mut acc = Phasor::new(0.0, 0.0);
    for r in rows {
        let ph = Phasor::from_polar(1.0, -2.0 * trace.omega_n * r.t);
        acc += (r.p_inst - p_dc) * ph;
    }
    let p_2w = 2.0 * acc.norm() / n_use as f64;
    Ok((p_dc, p_2w))
}

/// Standard sequence phasors of a recorded three-phase quantity over the
/// trailing `cycles` fundamental cycles, referenced to the grid angle
/// `omega_n t`.
///
/// Fits the space vector to `P e^{j theta} + Q e^{-j theta}` by least
/// squares, which is exact for pure two-tone waveforms regardless of how
/// the sample grid divides the period. The synchronous-frame
/// negative-sequence estimate `Q` is conjugated into the standard
/// (network) phasor convention.
pub fn waveform_sequence_phasors<F>(
    trace: &SimTrace,
    select: F,
    cycles: usize,
) -> (Phasor, Phasor)
where
    F: Fn(&SimRow) -> [f64; 3],
{
    let f0 = trace.omega_n / (2.0 * std::f64::consts::PI);
    let n = ((cycles as f64 / f0) / trace.dt_row).round() as usize;
    assert!(trace.rows.len() >= n && n > 8, "trace shorter than requested window");
    let rows = &trace.rows[trace.rows.len() - n..];
    let third = Phasor::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let mut xp = Phasor::new(0.0, 0.0); // sum x e^{-j theta}
    let mut xn = Phasor::new(0.0, 0.0); // sum x e^{+j theta}
    let mut s = Phasor::new(0.0, 0.0); // sum e^{-2j theta}
    for r in rows {
        let x = select(r);
        let vec = (x[0] + third * x[1] + third * third * x[2]) * (2.0 / 3.0);
        let rot = Phasor::from_polar(1.0, trace.omega_n * r.t);
        xp += vec * rot.conj();
        xn += vec * rot;
        s += rot.conj() * rot.conj();
    }
    // normal equations: [n s; conj(s) n] [P Q]^T = [xp xn]^T
    let nf = n as f64;
    let det = nf * nf - (s * s.conj()).re;
    let p = (nf * xp - s * xn) / det;
    let q = (nf * xn - s.conj() * xp) / det;
    (p, q.conj())
}

/// Largest instantaneous phase-current magnitude over the trailing
/// `cycles` fundamental cycles.
pub fn trailing_peak_current(trace: &SimTrace, cycles: usize) -> f64 {
    let f0 = trace.omega_n / (2.0 * std::f64::consts::PI);
    let per_cycle = (1.0 / (f0 * trace.dt_row)).round() as usize;
    let n = (per_cycle * cycles).min(trace.rows.len());
    trace.rows[trace.rows.len() - n..]
        .iter()
        .flat_map(|r| r.i_o.iter().map(|x| x.abs()))
        .fold(0.0, f64::max)
}
