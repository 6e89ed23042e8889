//! Nearest-neighbor supervised learning over box partitions.

mod nn;
mod partition;
mod schedule;

pub use nn::{nn_fit, nn_predict, CellFit, NnModel, TrainingDatum};
pub use partition::{build_partition, is_representative, Cell, Partition};
pub use schedule::{knn_parameters, knn_sample_count, knn_schedule, policy_generalization_constant, KnnSchedule};
