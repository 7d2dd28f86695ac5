//! Theorem constants, critical-point classification and bound checkers.

pub mod battery;
mod checks;
mod classify;
mod constants;

pub use checks::{check_wedge_area, ids, Checker, Status, TheoremReport};
pub use classify::{classify_critical, CriticalPointClass, CriticalTag, DEAD_CONE_SLACK, GLOBAL_MIN_TOL};
pub use constants::*;
