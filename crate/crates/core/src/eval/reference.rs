use std::ops::Range;

use num_traits::Zero;

use super::aux_loss_acc;
use crate::error::{Error, Result};
use crate::layout::GroundSet;
use crate::objective::{checked_distance, is_separable, Dissimilarity};
use crate::precision::Element;

/// Ground points processed together when the dissimilarity is separable.
const POINT_TILE: usize = 1024;

/// Writes `min_{s in set} d(v_i, s)` for every `i` in `columns` into `out`,
/// starting from the largest finite value of `T`. `set` is flat row-major.
pub(super) fn nearest_into<T: Element, D: Dissimilarity>(
    ground: &GroundSet,
    set: &[T],
    d: &D,
    columns: Range<usize>,
    out: &mut [T],
) -> Result<()> {
    debug_assert_eq!(out.len(), columns.len());
    let dim = ground.d();
    out.fill(T::max_value());
    if !is_separable(d) {
        let mut point = vec![T::zero(); dim];
        for (slot, i) in out.iter_mut().zip(columns) {
            ground.gather_point_into(i, &mut point);
            for s in set.chunks_exact(dim) {
                *slot = slot.min(checked_distance(d, &point, s)?);
            }
        }
        return Ok(());
    }

    let n = ground.n();
    let data = ground.data_typed::<T>();
    let term = |x: T, y: T| d.term(x, y).unwrap_or_else(T::nan);
    let mut dist = vec![T::zero(); POINT_TILE.min(columns.len())];
    let mut start = columns.start;
    let mut saw_nan = false;
    while start < columns.end {
        let len = POINT_TILE.min(columns.end - start);
        let tile_out = &mut out[start - columns.start..][..len];
        let dist = &mut dist[..len];
        for s in set.chunks_exact(dim) {
            dist.fill(T::zero());
            for (k, &sv) in s.iter().enumerate() {
                let column = &data[k * n + start..][..len];
                for (acc, &v) in dist.iter_mut().zip(column) {
                    *acc = *acc + term(v, sv);
                }
            }
            for (best, &value) in tile_out.iter_mut().zip(dist.iter()) {
                saw_nan |= value.is_nan();
                *best = best.min(value);
            }
        }
        start += len;
    }
    if saw_nan {
        return Err(Error::NonFiniteDissimilarity);
    }
    Ok(())
}

/// Single-threaded evaluation of one non-empty set: nearest dissimilarity per
/// point (auxiliary vector included), sequential sum, one division by `n`.
pub(super) fn evaluate_set<T: Element, D: Dissimilarity>(ground: &GroundSet, set: &[T], d: &D) -> Result<f64> {
    let n = ground.n();
    let mut nearest = vec![T::zero(); n];
    nearest_into(ground, set, d, 0..n, &mut nearest)?;
    let aux = ground.aux_distances_typed::<T>();
    let mut sum = T::Acc::zero();
    for (&t, &a) in nearest.iter().zip(aux) {
        sum += t.min(a).widen();
    }
    let loss = sum / T::acc_from_usize(n);
    Ok(T::acc_to_f64(aux_loss_acc::<T>(ground) - loss))
}
