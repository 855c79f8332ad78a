//! Splitting a batch into groups of sets that fit a memory budget.

use super::Evaluator;
use crate::error::{Error, Result};
use crate::layout::{EvaluationBatch, GroundSet};
use crate::objective::Dissimilarity;
use crate::precision::Precision;

/// Bytes of bookkeeping per set: one cardinality entry and one result slot.
const SET_METADATA_BYTES: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkPlan {
    pub chunk_size: usize,
    pub chunk_count: usize,
    pub per_set_bytes: u64,
    pub free_bytes: u64,
}

/// `μ_s`: device bytes one evaluation set needs, excluding the ground set:
/// its packed slice, its work-matrix row and its metadata.
pub fn estimate_set_memory(n: usize, k_max: usize, d: usize, precision: Precision) -> u64 {
    (k_max as u64 * d as u64 + n as u64) * precision.bytes_per_value() as u64 + SET_METADATA_BYTES
}

pub fn plan_chunks(free_bytes: u64, per_set_bytes: u64, l: usize) -> Result<ChunkPlan> {
    if per_set_bytes == 0 || l == 0 {
        return Err(Error::InvalidData(format!(
            "cannot plan chunks for {l} sets of {per_set_bytes} bytes"
        )));
    }
    let fit = free_bytes / per_set_bytes;
    if fit == 0 {
        return Err(Error::OutOfMemory { per_set_bytes, free_bytes });
    }
    let chunk_size = usize::try_from(fit).unwrap_or(usize::MAX).min(l);
    Ok(ChunkPlan { chunk_size, chunk_count: l.div_ceil(chunk_size), per_set_bytes, free_bytes })
}

/// Evaluates `batch` in budget-sized groups of consecutive sets and
/// concatenates the results in the original order.
pub fn evaluate_chunked<D: Dissimilarity>(
    evaluator: &Evaluator,
    ground: &GroundSet,
    batch: &EvaluationBatch,
    d: &D,
    budget: u64,
) -> Result<Vec<f64>> {
    batch.validate()?;
    let per_set = estimate_set_memory(ground.n(), batch.k_max(), batch.d(), ground.precision());
    let plan = plan_chunks(budget, per_set, batch.l())?;
    if plan.chunk_count == 1 {
        return evaluator.evaluate_batch(ground, batch, d);
    }
    let mut out = Vec::with_capacity(batch.l());
    for c in 0..plan.chunk_count {
        let range = c * plan.chunk_size..((c + 1) * plan.chunk_size).min(batch.l());
        out.extend(evaluator.evaluate_batch(ground, &batch.sub_batch(range), d)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_memory_examples() {
        assert_eq!(estimate_set_memory(50_000, 10, 100, Precision::Binary32), 204_016);
        assert_eq!(estimate_set_memory(1, 1, 1, Precision::Binary16), 20);
        let base = estimate_set_memory(10, 3, 4, Precision::Binary32);
        assert!(estimate_set_memory(11, 3, 4, Precision::Binary32) >= base);
        assert!(estimate_set_memory(10, 4, 4, Precision::Binary32) >= base);
        assert!(estimate_set_memory(10, 3, 5, Precision::Binary32) >= base);
    }

    #[test]
    fn plan_examples() {
        let plan = plan_chunks(1000, 300, 10).unwrap();
        assert_eq!((plan.chunk_size, plan.chunk_count), (3, 4));
        assert!(matches!(
            plan_chunks(100, 300, 10),
            Err(Error::OutOfMemory { per_set_bytes: 300, free_bytes: 100 })
        ));
        let plan = plan_chunks(1_000_000_000, 300, 10).unwrap();
        assert_eq!((plan.chunk_size, plan.chunk_count), (10, 1));
        assert!(plan.chunk_size as u64 * plan.per_set_bytes <= plan.free_bytes);
    }
}
