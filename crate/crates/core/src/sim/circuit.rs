//! Three-phase average-model circuit between the converter current
//! injection and the infinite bus: filter capacitor at the PCC, the
//! converter-side and grid-side impedance halves, and switchable shunt
//! faults at the split node.
//!
//! Each fault topology gets its own reduced state space so the system
//! stays an explicit ODE: phases without a shunt path keep a single
//! series current, faulted phases split into independent currents on
//! either side of the shunt, and the line-to-line fault is handled in
//! sum/difference coordinates of the faulted phase pair. Topology changes
//! conserve inductor flux, so series merges use the reactance-weighted
//! current.

use crate::network::{FaultKind, NetworkParams};

/// Per-unit circuit constants derived from the scenario.
#[derive(Debug, Clone, Copy)]
pub struct CircuitParams {
    pub r1: f64,
    pub x1: f64,
    pub r2: f64,
    pub x2: f64,
    pub c_f: f64,
    pub omega_n: f64,
    pub r_f: f64,
}

impl CircuitParams {
    pub fn from_network(net: &NetworkParams, r_f: f64) -> Self {
        Self {
            r1: net.r_g * net.split,
            x1: net.x_g * net.split,
            r2: net.r_g * (1.0 - net.split),
            x2: net.x_g * (1.0 - net.split),
            c_f: net.c_f,
            omega_n: net.omega_n,
            r_f,
        }
    }
}

/// Grid-branch states for the active topology.
///
/// Each fault class realises exactly the shunt interconnection its phasor
/// closed form solves, so the frozen-angle steady state of the simulator
/// reproduces the analytical operating point:
/// - `Slg` -> phase a through r_f to ground ([`PhaseAGround`]),
/// - `Dlg` -> r_f between phases b and c ([`LineToLine`]),
/// - `Ll`  -> phases b and c joined, then a common r_f to ground
///   ([`PairToGround`]).
///
/// [`PhaseAGround`]: GridBranch::PhaseAGround
/// [`LineToLine`]: GridBranch::LineToLine
/// [`PairToGround`]: GridBranch::PairToGround
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridBranch {
    /// Healthy network: one series current per phase.
    Series { i: [f64; 3] },
    /// Phase a shunted to ground through r_f at the split node.
    PhaseAGround { i1a: f64, i2a: f64, ib: f64, ic: f64 },
    /// r_f between phases b and c: common mode `s = i_b + i_c` stays a
    /// series state, the difference splits across the fault.
    LineToLine { ia: f64, s: f64, d1: f64, d2: f64 },
    /// Phases b and c tied together at the split node, with one common
    /// r_f to ground.
    PairToGround { ia: f64, i1b: f64, i2b: f64, i1c: f64, i2c: f64 },
}

impl GridBranch {
    pub fn at_rest() -> Self {
        GridBranch::Series { i: [0.0; 3] }
    }

    /// Converter-side line currents (through the converter-side half).
    pub fn conv_side(&self) -> [f64; 3] {
        match *self {
            GridBranch::Series { i } => i,
            GridBranch::PhaseAGround { i1a, ib, ic, .. } => [i1a, ib, ic],
            GridBranch::LineToLine { ia, s, d1, .. } => [ia, 0.5 * (s + d1), 0.5 * (s - d1)],
            GridBranch::PairToGround { ia, i1b, i1c, .. } => [ia, i1b, i1c],
        }
    }

    /// Grid-side line currents (through the grid-side half).
    pub fn grid_side(&self) -> [f64; 3] {
        match *self {
            GridBranch::Series { i } => i,
            GridBranch::PhaseAGround { i2a, ib, ic, .. } => [i2a, ib, ic],
            GridBranch::LineToLine { ia, s, d2, .. } => [ia, 0.5 * (s + d2), 0.5 * (s - d2)],
            GridBranch::PairToGround { ia, i2b, i2c, .. } => [ia, i2b, i2c],
        }
    }

    fn series_phase(p: &CircuitParams, v_o: f64, v_g: f64, i: f64) -> f64 {
        p.omega_n * (v_o - v_g - (p.r1 + p.r2) * i) / (p.x1 + p.x2)
    }

    /// Branch state derivatives given PCC and grid phase voltages.
    pub fn derivs(&self, p: &CircuitParams, v_o: [f64; 3], v_g: [f64; 3]) -> GridBranch {
        match *self {
            GridBranch::Series { i } => GridBranch::Series {
                i: [
                    Self::series_phase(p, v_o[0], v_g[0], i[0]),
                    Self::series_phase(p, v_o[1], v_g[1], i[1]),
                    Self::series_phase(p, v_o[2], v_g[2], i[2]),
                ],
            },
            GridBranch::PhaseAGround { i1a, i2a, ib, ic } => {
                let v_fa = p.r_f * (i1a - i2a);
                GridBranch::PhaseAGround {
                    i1a: p.omega_n * (v_o[0] - p.r1 * i1a - v_fa) / p.x1,
                    i2a: p.omega_n * (v_fa - v_g[0] - p.r2 * i2a) / p.x2,
                    ib: Self::series_phase(p, v_o[1], v_g[1], ib),
                    ic: Self::series_phase(p, v_o[2], v_g[2], ic),
                }
            }
            GridBranch::LineToLine { ia, s, d1, d2 } => {
                // fault current between phases b and c
                let v_fd = p.r_f * 0.5 * (d1 - d2);
                GridBranch::LineToLine {
                    ia: Self::series_phase(p, v_o[0], v_g[0], ia),
                    s: p.omega_n * (v_o[1] + v_o[2] - v_g[1] - v_g[2] - (p.r1 + p.r2) * s)
                        / (p.x1 + p.x2),
                    d1: p.omega_n * (v_o[1] - v_o[2] - p.r1 * d1 - v_fd) / p.x1,
                    d2: p.omega_n * (v_fd - (v_g[1] - v_g[2]) - p.r2 * d2) / p.x2,
                }
            }
            GridBranch::PairToGround { ia, i1b, i2b, i1c, i2c } => {
                // both faulted phases share the fault-node voltage, and
                // their net injection flows through the common resistance
                let v_x = p.r_f * (i1b + i1c - i2b - i2c);
                GridBranch::PairToGround {
                    ia: Self::series_phase(p, v_o[0], v_g[0], ia),
                    i1b: p.omega_n * (v_o[1] - p.r1 * i1b - v_x) / p.x1,
                    i2b: p.omega_n * (v_x - v_g[1] - p.r2 * i2b) / p.x2,
                    i1c: p.omega_n * (v_o[2] - p.r1 * i1c - v_x) / p.x1,
                    i2c: p.omega_n * (v_x - v_g[2] - p.r2 * i2c) / p.x2,
                }
            }
        }
    }

    fn zip(&self, k: &GridBranch, h: f64) -> GridBranch {
        match (*self, *k) {
            (GridBranch::Series { i }, GridBranch::Series { i: di }) => GridBranch::Series {
                i: [i[0] + h * di[0], i[1] + h * di[1], i[2] + h * di[2]],
            },
            (
                GridBranch::PhaseAGround { i1a, i2a, ib, ic },
                GridBranch::PhaseAGround { i1a: d1, i2a: d2, ib: d3, ic: d4 },
            ) => GridBranch::PhaseAGround {
                i1a: i1a + h * d1,
                i2a: i2a + h * d2,
                ib: ib + h * d3,
                ic: ic + h * d4,
            },
            (
                GridBranch::LineToLine { ia, s, d1, d2 },
                GridBranch::LineToLine { ia: k0, s: k1, d1: k2, d2: k3 },
            ) => GridBranch::LineToLine {
                ia: ia + h * k0,
                s: s + h * k1,
                d1: d1 + h * k2,
                d2: d2 + h * k3,
            },
            (
                GridBranch::PairToGround { ia, i1b, i2b, i1c, i2c },
                GridBranch::PairToGround { ia: d0, i1b: d1, i2b: d2, i1c: d3, i2c: d4 },
            ) => GridBranch::PairToGround {
                ia: ia + h * d0,
                i1b: i1b + h * d1,
                i2b: i2b + h * d2,
                i1c: i1c + h * d3,
                i2c: i2c + h * d4,
            },
            _ => unreachable!("branch shapes must match within a segment"),
        }
    }

    /// Split the healthy series states into the faulted topology. Branch
    /// currents are continuous across fault application.
    pub fn apply_fault(&self, kind: FaultKind) -> GridBranch {
        let i = match *self {
            GridBranch::Series { i } => i,
            _ => self.conv_side(),
        };
        match kind {
            FaultKind::None => GridBranch::Series { i },
            FaultKind::Slg => {
                GridBranch::PhaseAGround { i1a: i[0], i2a: i[0], ib: i[1], ic: i[2] }
            }
            FaultKind::Dlg => GridBranch::LineToLine {
                ia: i[0],
                s: i[1] + i[2],
                d1: i[1] - i[2],
                d2: i[1] - i[2],
            },
            FaultKind::Ll => GridBranch::PairToGround {
                ia: i[0],
                i1b: i[1],
                i2b: i[1],
                i1c: i[2],
                i2c: i[2],
            },
        }
    }

    /// Collapse back to the healthy topology. Where the shunt leaves the
    /// two halves at different currents, the merged series current keeps
    /// the total flux: `i = (x1 i1 + x2 i2) / (x1 + x2)`.
    pub fn clear_fault(&self, p: &CircuitParams) -> GridBranch {
        let merge = |i1: f64, i2: f64| (p.x1 * i1 + p.x2 * i2) / (p.x1 + p.x2);
        match *self {
            GridBranch::Series { i } => GridBranch::Series { i },
            GridBranch::PhaseAGround { i1a, i2a, ib, ic } => {
                GridBranch::Series { i: [merge(i1a, i2a), ib, ic] }
            }
            GridBranch::LineToLine { ia, s, d1, d2 } => {
                let d = merge(d1, d2);
                GridBranch::Series { i: [ia, 0.5 * (s + d), 0.5 * (s - d)] }
            }
            GridBranch::PairToGround { ia, i1b, i2b, i1c, i2c } => {
                GridBranch::Series { i: [ia, merge(i1b, i2b), merge(i1c, i2c)] }
            }
        }
    }
}

/// Circuit state: PCC capacitor voltages plus the active branch states,
/// plus the converter current when the optional first-order current-loop
/// lag is enabled.
#[derive(Debug, Clone, Copy)]
pub struct CircuitState {
    pub v_o: [f64; 3],
    pub branch: GridBranch,
    pub i_o_lag: Option<[f64; 3]>,
}

impl CircuitState {
    pub fn at_rest(lag: bool) -> Self {
        Self {
            v_o: [0.0; 3],
            branch: GridBranch::at_rest(),
            i_o_lag: lag.then_some([0.0; 3]),
        }
    }

    fn derivs(
        &self,
        p: &CircuitParams,
        i_ref: [f64; 3],
        v_g: [f64; 3],
        lag_tau: f64,
    ) -> CircuitState {
        let i_o = self.i_o_lag.unwrap_or(i_ref);
        let i_g = self.branch.conv_side();
        CircuitState {
            v_o: [
                p.omega_n * (i_o[0] - i_g[0]) / p.c_f,
                p.omega_n * (i_o[1] - i_g[1]) / p.c_f,
                p.omega_n * (i_o[2] - i_g[2]) / p.c_f,
            ],
            branch: self.branch.derivs(p, self.v_o, v_g),
            i_o_lag: self.i_o_lag.map(|i| {
                [
                    (i_ref[0] - i[0]) / lag_tau,
                    (i_ref[1] - i[1]) / lag_tau,
                    (i_ref[2] - i[2]) / lag_tau,
                ]
            }),
        }
    }

    fn zip(&self, k: &CircuitState, h: f64) -> CircuitState {
        CircuitState {
            v_o: [
                self.v_o[0] + h * k.v_o[0],
                self.v_o[1] + h * k.v_o[1],
                self.v_o[2] + h * k.v_o[2],
            ],
            branch: self.branch.zip(&k.branch, h),
            i_o_lag: match (self.i_o_lag, k.i_o_lag) {
                (Some(i), Some(di)) => {
                    Some([i[0] + h * di[0], i[1] + h * di[1], i[2] + h * di[2]])
                }
                _ => self.i_o_lag,
            },
        }
    }

    /// Classical fourth-order step. The converter reference and grid
    /// voltage are supplied as functions of absolute time so the stage
    /// evaluations stay consistent.
    pub fn rk4_step<FR, FG>(
        &mut self,
        p: &CircuitParams,
        t: f64,
        dt: f64,
        i_ref: FR,
        v_g: FG,
        lag_tau: f64,
    ) where
        FR: Fn(f64) -> [f64; 3],
        FG: Fn(f64) -> [f64; 3],
    {
        let k1 = self.derivs(p, i_ref(t), v_g(t), lag_tau);
        let s2 = self.zip(&k1, 0.5 * dt);
        let k2 = s2.derivs(p, i_ref(t + 0.5 * dt), v_g(t + 0.5 * dt), lag_tau);
        let s3 = self.zip(&k2, 0.5 * dt);
        let k3 = s3.derivs(p, i_ref(t + 0.5 * dt), v_g(t + 0.5 * dt), lag_tau);
        let s4 = self.zip(&k3, dt);
        let k4 = s4.derivs(p, i_ref(t + dt), v_g(t + dt), lag_tau);
        let sum = k1
            .zip(&k2, 2.0)
            .zip(&k3, 2.0)
            .zip(&k4, 1.0);
        // sum = k1 + 2k2 + 2k3 + k4 built by chained accumulation
        *self = self.zip(&sum, dt / 6.0);
    }

    pub fn is_finite(&self) -> bool {
        let branch_ok = match self.branch {
            GridBranch::Series { i } => i.iter().all(|x| x.is_finite()),
            GridBranch::PhaseAGround { i1a, i2a, ib, ic } => {
                [i1a, i2a, ib, ic].iter().all(|x| x.is_finite())
            }
            GridBranch::LineToLine { ia, s, d1, d2 } => {
                [ia, s, d1, d2].iter().all(|x| x.is_finite())
            }
            GridBranch::PairToGround { ia, i1b, i2b, i1c, i2c } => {
                [ia, i1b, i2b, i1c, i2c].iter().all(|x| x.is_finite())
            }
        };
        branch_ok
            && self.v_o.iter().all(|x| x.is_finite())
            && self
                .i_o_lag
                .map(|i| i.iter().all(|x| x.is_finite()))
                .unwrap_or(true)
    }
}
