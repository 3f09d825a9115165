//! Error types shared across the toolkit.

use thiserror::Error;

/// Errors produced by the phasor pipeline, the solvers, the simulator and
/// scenario I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// The series path r_eq + Z_g1 + Z_g2 has zero magnitude, so the
    /// source divider is undefined.
    #[error("singular network: |r_eq + z_g1 + z_g2| = 0")]
    SingularNetwork,

    /// A fault-point denominator vanished (e.g. bolted fault with a
    /// degenerate parallel impedance).
    #[error("singular fault network: zero denominator for {kind} with r_f = {r_f} pu")]
    SingularFault { kind: &'static str, r_f: f64 },

    /// A scaling factor outside (0, 1] was supplied to the limiter.
    #[error("scaling factor {0} outside (0, 1]")]
    InvalidScalingFactor(f64),

    /// The equivalent-resistance root could not be bracketed even after
    /// expanding the upper bound to its cap.
    #[error(
        "current-limit root not bracketed: i_max({r_hi} pu) = {i_max} pu still exceeds {i_lim} pu"
    )]
    RootNotBracketed { r_hi: f64, i_max: f64, i_lim: f64 },

    /// A non-finite value appeared during ODE integration.
    #[error("integration diverged at t = {t} s")]
    Divergence { t: f64 },

    /// A P-delta curve sample failed; the offending angle is reported.
    #[error("curve sample at delta = {delta} rad failed: {source}")]
    CurveSample {
        delta: f64,
        #[source]
        source: Box<Error>,
    },

    /// No stable pre-fault equilibrium exists, so a swing study cannot
    /// be initialised.
    #[error("no pre-fault stable equilibrium at p_ref = {p_ref} pu")]
    NoPreFaultSep { p_ref: f64 },

    /// The analysis window of a trace has not settled.
    #[error("trace window not settled: half-window means differ by {drift} pu")]
    NotSettled { drift: f64 },

    /// A scenario field violated its constraint.
    #[error("invalid scenario: {field} must satisfy {constraint} (got {value})")]
    Validation {
        field: &'static str,
        constraint: &'static str,
        value: f64,
    },

    /// A scenario file could not be parsed.
    #[error("cannot parse scenario {path}: {detail}")]
    Parse { path: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
