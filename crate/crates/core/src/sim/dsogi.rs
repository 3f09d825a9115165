//! Dual second-order generalized integrator for sequence separation.
//!
//! One SOGI per stationary-frame channel produces an in-phase and a
//! quadrature signal; the quadrature combination splits the input into
//! positive- and negative-sequence components, which are then rotated
//! into their synchronous frames. The centre frequency is fixed at the
//! nominal value (no frequency adaptation).

use crate::phasor::Phasor;

/// SOGI gain k = sqrt(2): the usual trade-off between selectivity and
/// settling.
const SOGI_K: f64 = std::f64::consts::SQRT_2;

/// Second-order generalized integrator tracking one scalar channel.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sogi {
    /// In-phase (band-pass) state.
    pub v: f64,
    /// Quadrature (90 degrees lagging) state.
    pub qv: f64,
}

impl Sogi {
    fn derivs(&self, u: f64, omega0: f64) -> (f64, f64) {
        (
            omega0 * (SOGI_K * (u - self.v) - self.qv),
            omega0 * self.v,
        )
    }

    /// One classical fourth-order step from the previous input sample to
    /// the new one. The input is interpolated linearly across the step so
    /// a sampled sinusoid carries no staircase phase lag into the
    /// estimates.
    pub fn step(&mut self, u_prev: f64, u_next: f64, omega0: f64, dt: f64) {
        let u_mid = 0.5 * (u_prev + u_next);
        let y0 = *self;
        let k1 = y0.derivs(u_prev, omega0);
        let mid1 = Sogi { v: y0.v + 0.5 * dt * k1.0, qv: y0.qv + 0.5 * dt * k1.1 };
        let k2 = mid1.derivs(u_mid, omega0);
        let mid2 = Sogi { v: y0.v + 0.5 * dt * k2.0, qv: y0.qv + 0.5 * dt * k2.1 };
        let k3 = mid2.derivs(u_mid, omega0);
        let end = Sogi { v: y0.v + dt * k3.0, qv: y0.qv + dt * k3.1 };
        let k4 = end.derivs(u_next, omega0);
        self.v = y0.v + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        self.qv = y0.qv + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
}

/// Amplitude-invariant Clarke transform of a three-phase sample.
pub fn clarke(x: [f64; 3]) -> (f64, f64) {
    (
        (2.0 * x[0] - x[1] - x[2]) / 3.0,
        (x[1] - x[2]) / 3.0_f64.sqrt(),
    )
}

/// DSOGI filter pair for one three-phase quantity.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dsogi {
    pub alpha: Sogi,
    pub beta: Sogi,
    prev_input: Option<(f64, f64)>,
}

impl Dsogi {
    /// Advance one controller period with the sample taken at the end of
    /// the period, and return the synchronous-frame sequence estimates at
    /// that instant: the positive sequence rotated by `-theta`, the
    /// negative sequence (its own frame) rotated by `+theta`.
    /// Steady-state exact for sinusoids at the centre frequency.
    pub fn step(
        &mut self,
        x_abc: [f64; 3],
        omega_ff: f64,
        theta: f64,
        dt: f64,
    ) -> (Phasor, Phasor) {
        let (a, b) = clarke(x_abc);
        let (pa, pb) = self.prev_input.unwrap_or((a, b));
        self.alpha.step(pa, a, omega_ff, dt);
        self.beta.step(pb, b, omega_ff, dt);
        self.prev_input = Some((a, b));
        self.sequences(theta)
    }

    /// Sequence estimates from the current filter states.
    pub fn sequences(&self, theta: f64) -> (Phasor, Phasor) {
        let (va, qa) = (self.alpha.v, self.alpha.qv);
        let (vb, qb) = (self.beta.v, self.beta.qv);
        let pos_ab = Phasor::new(0.5 * (va - qb), 0.5 * (qa + vb));
        let neg_ab = Phasor::new(0.5 * (va + qb), 0.5 * (vb - qa));
        let rot = Phasor::from_polar(1.0, theta);
        (pos_ab * rot.conj(), neg_ab * rot)
    }
}

/// Three-phase waveform of a synchronous-frame sequence pair at angle
/// `theta`: the inverse of what [`Dsogi::step`] estimates.
pub fn synthesize_abc(pos: Phasor, neg: Phasor, theta: f64) -> [f64; 3] {
    let rot = Phasor::from_polar(1.0, theta);
    let vec = pos * rot + neg * rot.conj();
    let shift = Phasor::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    [
        vec.re,
        (vec * shift.conj()).re,
        (vec * shift).re,
    ]
}
