//! Batch evaluation of the exemplar objective.
//!
//! Three backends compute `f(S_j)` for every set of a batch:
//!
//! * `Reference` evaluates one set at a time on the calling thread: per-point
//!   nearest dissimilarity, then a sequential sum and a single division by `n`.
//! * `Parallel` spreads work-matrix cells over a thread pool, by rows when there
//!   are at least as many sets as workers, by column blocks otherwise.
//! * `Tiled` emulates the device kernel: the batch is packed round-robin, a
//!   launch configuration is derived from the device limits, every block stages
//!   its ground vectors in a private buffer and each lane fills one work-matrix
//!   cell.
//!
//! `Parallel` and `Tiled` reduce each work-matrix row in ascending column
//! order, so their results do not depend on the worker count, the launch shape
//! or on how a batch is chunked.

mod chunking;
mod parallel;
mod reference;
mod tiled;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::NumCast;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

pub use chunking::{estimate_set_memory, evaluate_chunked, plan_chunks, ChunkPlan};
pub use tiled::LaunchStats;

use crate::error::{Error, Result};
use crate::kernel::DeviceLimits;
use crate::layout::{pack_batch, EvaluationBatch, GroundSet, PackedBatch};
use crate::objective::{check_dissimilarity, dispatch, Dissimilarity};
use crate::precision::Element;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Reference,
    Parallel,
    Tiled,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Reference, Backend::Parallel, Backend::Tiled];

    pub const fn name(self) -> &'static str {
        match self {
            Backend::Reference => "reference",
            Backend::Parallel => "parallel",
            Backend::Tiled => "tiled",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "reference" | "ref" | "st" => Ok(Backend::Reference),
            "parallel" | "mt" => Ok(Backend::Parallel),
            "tiled" | "gpu" => Ok(Backend::Tiled),
            other => Err(Error::Format(format!("unknown backend `{other}`"))),
        }
    }
}

/// A configured batch evaluator. Evaluation runs at the ground set's precision.
#[derive(Clone)]
pub struct Evaluator {
    backend: Backend,
    limits: DeviceLimits,
    workers: usize,
    pool: Option<Arc<ThreadPool>>,
}

impl fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Evaluator")
            .field("backend", &self.backend)
            .field("limits", &self.limits)
            .field("workers", &self.workers)
            .finish()
    }
}

impl Evaluator {
    pub fn new(backend: Backend, workers: usize) -> Result<Self> {
        Self::with_limits(backend, workers, DeviceLimits::default())
    }

    pub fn reference() -> Self {
        Self::new(Backend::Reference, 1).expect("reference evaluator needs no pool")
    }

    pub fn with_limits(backend: Backend, workers: usize, limits: DeviceLimits) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidData("worker count must be at least 1".into()));
        }
        limits.validate()?;
        let pool = match backend {
            Backend::Reference => None,
            Backend::Parallel | Backend::Tiled => Some(Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .thread_name(|i| format!("exemplar-worker-{i}"))
                    .build()
                    .map_err(|e| Error::InvalidData(format!("cannot start worker pool: {e}")))?,
            )),
        };
        let workers = if backend == Backend::Reference { 1 } else { workers };
        Ok(Evaluator { backend, limits, workers, pool })
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn limits(&self) -> &DeviceLimits {
        &self.limits
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    /// `f(S_j)` for every set of `batch`.
    pub fn evaluate_batch<D: Dissimilarity>(
        &self,
        ground: &GroundSet,
        batch: &EvaluationBatch,
        d: &D,
    ) -> Result<Vec<f64>> {
        check_inputs(ground, batch, d)?;
        match self.backend {
            Backend::Reference => {
                (0..batch.l()).map(|j| evaluate_single_flat(ground, batch.set(j), d)).collect()
            }
            Backend::Parallel => self.install(|| dispatch!(ground, run_parallel(ground, batch, d, self.workers))),
            Backend::Tiled => {
                let packed = pack_batch(batch, ground.precision())?;
                Ok(self.evaluate_packed(ground, &packed, d)?.0)
            }
        }
    }

    /// Runs the tiled kernel on an already packed batch, regardless of the
    /// configured backend, and reports the launch statistics.
    pub fn evaluate_packed<D: Dissimilarity>(
        &self,
        ground: &GroundSet,
        packed: &PackedBatch,
        d: &D,
    ) -> Result<(Vec<f64>, LaunchStats)> {
        check_dissimilarity(ground, d)?;
        if packed.d() != ground.d() {
            return Err(Error::DimensionMismatch { expected: ground.d(), found: packed.d() });
        }
        if packed.precision() != ground.precision() {
            return Err(Error::InvalidData(format!(
                "packed batch is {} but the ground set is {}",
                packed.precision(),
                ground.precision()
            )));
        }
        self.install(|| dispatch!(ground, run_tiled(ground, packed, d, &self.limits)))
    }

    /// Materializes the `l × n` work matrix with the tiled kernel.
    pub fn work_matrix<D: Dissimilarity>(
        &self,
        ground: &GroundSet,
        batch: &EvaluationBatch,
        d: &D,
    ) -> Result<WorkMatrix> {
        check_inputs(ground, batch, d)?;
        let packed = pack_batch(batch, ground.precision())?;
        self.install(|| dispatch!(ground, tiled_work_matrix(ground, &packed, d, &self.limits)))
    }
}

fn check_inputs<D: Dissimilarity>(ground: &GroundSet, batch: &EvaluationBatch, d: &D) -> Result<()> {
    check_dissimilarity(ground, d)?;
    batch.validate()?;
    if batch.d() != ground.d() {
        return Err(Error::DimensionMismatch { expected: ground.d(), found: batch.d() });
    }
    Ok(())
}

fn run_parallel<T: Element, D: Dissimilarity>(
    ground: &GroundSet,
    batch: &EvaluationBatch,
    d: &D,
    workers: usize,
) -> Result<Vec<f64>> {
    parallel::evaluate::<T, D>(ground, batch, d, workers)
}

fn run_tiled<T: Element, D: Dissimilarity>(
    ground: &GroundSet,
    packed: &PackedBatch,
    d: &D,
    limits: &DeviceLimits,
) -> Result<(Vec<f64>, LaunchStats)> {
    tiled::evaluate::<T, D>(ground, packed, d, limits)
}

fn tiled_work_matrix<T: Element, D: Dissimilarity>(
    ground: &GroundSet,
    packed: &PackedBatch,
    d: &D,
    limits: &DeviceLimits,
) -> Result<WorkMatrix> {
    tiled::work_matrix::<T, D>(ground, packed, d, limits)
}

/// `f(set)` for one set, following the single-threaded host algorithm.
pub fn evaluate_single<D: Dissimilarity>(ground: &GroundSet, set: &[Vec<f64>], d: &D) -> Result<f64> {
    check_dissimilarity(ground, d)?;
    let mut flat = Vec::with_capacity(set.len() * ground.d());
    for v in set {
        if v.len() != ground.d() {
            return Err(Error::DimensionMismatch { expected: ground.d(), found: v.len() });
        }
        flat.extend_from_slice(v);
    }
    evaluate_single_flat(ground, &flat, d)
}

fn evaluate_single_flat<D: Dissimilarity>(ground: &GroundSet, set: &[f64], d: &D) -> Result<f64> {
    if set.is_empty() {
        return Ok(0.0);
    }
    dispatch!(ground, evaluate_single_typed(ground, set, d))
}

fn evaluate_single_typed<T: Element, D: Dissimilarity>(ground: &GroundSet, set: &[f64], d: &D) -> Result<f64> {
    let set: Vec<T> = set.iter().map(|&v| T::from_f64(v)).collect();
    reference::evaluate_set::<T, D>(ground, &set, d)
}

/// Widens the ground set's `L({e0})` to the accumulator type. Exact, since the
/// value was produced at accumulator precision.
pub(crate) fn aux_loss_acc<T: Element>(ground: &GroundSet) -> T::Acc {
    <T::Acc as NumCast>::from(ground.aux_loss()).expect("finite auxiliary loss")
}

/// One work-matrix cell: the per-point nearest value (auxiliary vector
/// included) scaled by `1/n`, stored at the element precision.
#[inline(always)]
pub(crate) fn scaled_cell<T: Element>(nearest: T, n: T::Acc) -> T {
    T::narrow(nearest.widen() / n)
}

/// The `l × n` matrix of per-point losses `L_{v_i}(S_j ∪ {e0})`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl WorkMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.cells[j * self.cols + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.cells[j * self.cols..(j + 1) * self.cols]
    }

    /// Row sum in ascending column order: `L(S_j ∪ {e0})`.
    pub fn row_sum(&self, j: usize) -> f64 {
        self.row(j).iter().sum()
    }
}
