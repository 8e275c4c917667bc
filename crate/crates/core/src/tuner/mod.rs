//! Budgeted random search over layer counts and widths.

mod space;
mod study;

pub use space::{apply_config, hidden_count, ParamKind, ParamSpec, SearchSpace, TrialConfig};
pub use study::{run_study, Study, StudyConfig, TrialRecord, TrialStatus};
