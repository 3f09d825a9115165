//! Transient-stability toolkit for grid-forming converters under
//! asymmetrical grid faults.
//!
//! The toolkit models a grid-forming voltage-source converter with an
//! elliptical current limiter as a source behind a saturation-equivalent
//! resistance in both the positive- and negative-sequence networks. From
//! that model it computes limiter-aware power-angle curves, locates
//! equilibria, integrates the reduced-order synchronisation dynamics to
//! find critical clearing times, and cross-validates the whole phasor
//! pipeline against an average-model time-domain simulation of the full
//! control structure.
//!
//! Modules:
//! - [`phasor`]: complex per-unit quantities and sequence sets.
//! - [`network`]: sequence networks with shunt faults at a split point.
//! - [`limiter`]: elliptical current limiter and the resistance solve.
//! - [`power_angle`]: operating points, curves, equilibria.
//! - [`swing`]: reduced-order dynamics and clearing-time search.
//! - [`sim`]: average-model time-domain simulator.
//! - [`scenario`]: configuration files, defaults, validation.
//! - [`report`]: deterministic CSV emission and run manifests.

pub mod error;
pub mod limiter;
pub mod network;
pub mod numeric;
pub mod phasor;
pub mod power_angle;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod swing;

pub use error::{Error, Result};
pub use phasor::{Phasor, SequenceSet};
pub use scenario::Scenario;
