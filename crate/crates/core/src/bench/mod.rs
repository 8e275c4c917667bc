//! Weighted classification metrics, per-sample latency, weight payload
//! size and the three-stage report.

mod latency;
mod metrics;
mod report;
mod size;

pub use latency::{latency_rows, measure_latency, Latency, LatencyConfig};
pub use metrics::{compute_metrics, confusion, Metrics};
pub use report::{BenchReport, BenchRow, Stage, REPORT_COLUMNS};
pub use size::{detect_format, measure_size, weight_payload_bytes, ModelFormat};
