//! Batch evaluation of the exemplar-based clustering objective.
//!
//! Optimizers such as Greedy score many candidate sets per step. This crate
//! evaluates such batches with three interchangeable backends, one of which
//! reproduces a GPU execution model on the host: an `l × n` work matrix of
//! per-point losses, a block/grid launch configuration bounded by thread and
//! shared-memory limits, a round-robin packed layout for coalesced loads, and
//! chunking under a memory budget. Binary16 is emulated in software.
//!
//! ```
//! use exemplar_core::{Backend, EvaluationBatch, Evaluator, GroundSet, Precision, SquaredEuclidean};
//!
//! let ground = GroundSet::build(&[vec![1.0], vec![3.0]], None, Precision::Binary32, &SquaredEuclidean)?;
//! let batch = EvaluationBatch::new(1, &[vec![vec![3.0]], vec![vec![1.0], vec![3.0]]])?;
//! let values = Evaluator::new(Backend::Tiled, 2)?.evaluate_batch(&ground, &batch, &SquaredEuclidean)?;
//! assert_eq!(values, vec![4.5, 5.0]);
//! # Ok::<(), exemplar_core::Error>(())
//! ```

pub mod bench;
pub mod coalescing;
pub mod error;
pub mod eval;
pub mod io;
pub mod kernel;
pub mod layout;
pub mod objective;
pub mod optimize;
pub mod precision;

pub use error::{Error, Result};
pub use eval::{
    estimate_set_memory, evaluate_chunked, evaluate_single, plan_chunks, Backend, ChunkPlan, Evaluator, LaunchStats,
    WorkMatrix,
};
pub use kernel::{compute_kernel_config, DeviceLimits, KernelConfig};
pub use layout::{pack_batch, packed_address, EvaluationBatch, GroundSet, PackedBatch};
pub use objective::{
    exemplar_value, kmedoids_loss, marginal_gain, point_loss, squared_euclidean, Dissimilarity, SquaredEuclidean,
};
pub use optimize::{assign_clusters, brute_force_optimum, greedy_maximize, BruteForceOptimum, OptimizationResult};
pub use precision::{Element, Precision, Values};
