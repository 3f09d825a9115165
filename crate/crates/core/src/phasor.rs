//! Complex per-unit phasors and sequence-component sets.
//!
//! All fundamental-frequency quantities are space-vector amplitudes in a
//! common synchronous reference, normalised so that active power is
//! `Re(V * conj(I))` with no 3/2 factor. Sequence phasors follow the
//! standard convention: the phase-a waveform of a positive- or
//! negative-sequence phasor `X` is `|X| cos(theta + arg X)`, with the b/c
//! phases shifted by -/+ 2pi/3 for the positive sequence and +/- 2pi/3 for
//! the negative sequence.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Complex per-unit fundamental-frequency amplitude.
pub type Phasor = Complex64;

/// Build a phasor from magnitude and angle in radians.
pub fn polar(mag: f64, angle: f64) -> Phasor {
    Phasor::from_polar(mag, angle)
}

/// Angle of a phasor, with `arg(0)` defined as 0 so zero phasors never
/// produce an undefined angle.
pub fn arg_or_zero(p: Phasor) -> f64 {
    if p.norm() == 0.0 {
        0.0
    } else {
        p.arg()
    }
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let mut a = (x + PI).rem_euclid(2.0 * PI) - PI;
    if a == -PI {
        a = PI;
    }
    a
}

/// Positive/negative/zero sequence components of one quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceSet {
    pub pos: Phasor,
    pub neg: Phasor,
    /// Identically zero for converter-side currents: the three-wire
    /// converter leaves the zero-sequence network open.
    pub zero: Phasor,
}

impl SequenceSet {
    pub const ZERO: SequenceSet = SequenceSet {
        pos: Phasor::new(0.0, 0.0),
        neg: Phasor::new(0.0, 0.0),
        zero: Phasor::new(0.0, 0.0),
    };

    /// A set with zero-sequence forced to zero.
    pub fn new(pos: Phasor, neg: Phasor) -> Self {
        Self {
            pos,
            neg,
            zero: Phasor::new(0.0, 0.0),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.pos, self.neg, self.zero]
            .iter()
            .all(|p| p.re.is_finite() && p.im.is_finite())
    }
}
