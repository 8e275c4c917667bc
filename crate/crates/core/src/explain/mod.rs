//! KernelSHAP attribution, importance ranking, top-k feature selection and
//! the feature-selected retrain/prune stage.

mod kernel;
mod lars;
mod pipeline;
mod report;

pub use kernel::{kernel_shap, lstm_window_shap, Explanation, Regularization, SamplingMode, ShapConfig};
pub use pipeline::{explain_model, fs_prune_from_report, fs_prune_pipeline, pick_rows, FsOutcome, FsPruneConfig};
pub use report::{select_topk, AttributionReport};
