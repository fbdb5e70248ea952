//! Labeled chip-firing on the integer line.
//!
//! * [`engine`] runs labeled chip-firing under pluggable strategies and
//!   records replayable traces.
//! * [`closedform`] holds firing counts, terminal shapes and labels for the
//!   supported variants.
//! * [`poset`] enumerates reachable fire-count vectors and the precedence
//!   order between individual moves.
//! * [`explorer`] searches every labeled run for unsorted terminals.
//! * [`analysis`] checks per-step chip bounds along recorded traces.

pub mod analysis;
pub mod closedform;
pub mod engine;
pub mod explorer;
pub mod poset;

pub use closedform::{FiringCountTable, OracleError, Regime, TerminalSpec};
pub use engine::{
    run_to_completion, Chip, ChipId, EngineError, LabeledConfiguration, Preset, Runner, Site,
    Strategy, Trace, Value, Variant,
};
