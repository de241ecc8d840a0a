//! Scenario runner for multi-observables and multi-instruments: parse a JSON
//! scenario, run its tasks, report the outcome.

pub mod literal;
pub mod report;
pub mod run;
pub mod sample;
pub mod scenario;

pub use report::{Format, Report, Status, TaskReport};
pub use run::{run_scenario, run_task};
pub use sample::{sample_outcomes, sample_trajectory, summarize, SampleError, SampleSummary, TrajectorySample};
pub use scenario::{parse_scenario, Item, Kind, ParseError, Scenario, Task, TaskArgs};
