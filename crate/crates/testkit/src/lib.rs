//! Test support for dlg-core: brute-force oracles written independently of
//! the engine, proptest strategies and seeded random generators.

pub mod fixture;
pub mod oracle;
pub mod random;
pub mod strategy;

use dlg_core::constraint::{ContextUniverse, Date};
use dlg_core::policy::Subject;

pub const LOCATIONS: [&str; 2] = ["lab", "office"];
pub const ATTRIBUTES: [&str; 2] = ["tenured", "on-call"];

pub fn date(text: &str) -> Date {
    text.parse().expect("fixture date")
}

pub fn subject(id: &str) -> Subject {
    Subject::new(id).expect("fixture subject")
}

/// 5 days (06/01/25 to 10/01/25) x 2 locations x 2 attributes: 80 contexts.
pub fn small_universe() -> ContextUniverse {
    ContextUniverse::new(date("06/01/25"), date("10/01/25"), LOCATIONS, ATTRIBUTES).expect("small universe")
}
