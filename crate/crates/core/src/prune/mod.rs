//! Gradual magnitude pruning: cubic sparsity schedule, per-tensor masks and
//! the prune/fine-tune loop.

mod finetune;
mod mask;
mod schedule;

pub use finetune::{prune_and_finetune, PruneEvent, PruneOutcome};
pub use mask::{compute_mask, SparsityMask, TensorMask};
pub use schedule::PruneSchedule;
