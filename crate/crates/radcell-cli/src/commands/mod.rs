pub mod bench;
pub mod dist;
pub mod sweep;

pub use bench::detect_bench;
pub use dist::validate_dist;
pub use sweep::sweep;

use crate::output::{Check, Table};

/// What a subcommand produced: named tables and its verdicts.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub tables: Vec<(&'static str, Table)>,
    pub checks: Vec<Check>,
}
