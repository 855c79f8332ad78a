use num_traits::Zero;
use rayon::prelude::*;

use super::reference::nearest_into;
use super::{aux_loss_acc, scaled_cell};
use crate::error::Result;
use crate::layout::{EvaluationBatch, GroundSet};
use crate::objective::Dissimilarity;
use crate::precision::Element;

/// Work-matrix evaluation on the current rayon pool.
///
/// Rows are distributed when `l >= workers`; otherwise each worker takes a
/// contiguous block of columns for every row. Either way each cell is computed
/// the same way and each row is summed in ascending column order, so both
/// partitions give identical bits.
pub(super) fn evaluate<T: Element, D: Dissimilarity>(
    ground: &GroundSet,
    batch: &EvaluationBatch,
    d: &D,
    workers: usize,
) -> Result<Vec<f64>> {
    let n = ground.n();
    let l = batch.l();
    let n_acc = T::acc_from_usize(n);
    let aux = ground.aux_distances_typed::<T>();
    let aux_loss = aux_loss_acc::<T>(ground);

    let row_sums: Vec<T::Acc> = if l >= workers {
        (0..l)
            .into_par_iter()
            .map_init(
                || vec![T::zero(); n],
                |nearest, j| {
                    nearest_into(ground, &batch.set_typed::<T>(j), d, 0..n, nearest)?;
                    let mut sum = T::Acc::zero();
                    for (&t, &a) in nearest.iter().zip(aux) {
                        sum += scaled_cell(t.min(a), n_acc).widen();
                    }
                    Ok(sum)
                },
            )
            .collect::<Result<_>>()?
    } else {
        let sets: Vec<Vec<T>> = (0..l).map(|j| batch.set_typed::<T>(j)).collect();
        let width = n.div_ceil(workers);
        // blocks[b][j * len + c]: cell (j, b * width + c)
        let blocks: Vec<Vec<T>> = (0..n.div_ceil(width))
            .into_par_iter()
            .map(|b| {
                let columns = b * width..((b + 1) * width).min(n);
                let len = columns.len();
                let mut cells = vec![T::zero(); l * len];
                for (j, set) in sets.iter().enumerate() {
                    let row = &mut cells[j * len..(j + 1) * len];
                    nearest_into(ground, set, d, columns.clone(), row)?;
                    for (cell, &a) in row.iter_mut().zip(&aux[columns.clone()]) {
                        *cell = scaled_cell(cell.min(a), n_acc);
                    }
                }
                Ok(cells)
            })
            .collect::<Result<_>>()?;
        (0..l)
            .map(|j| {
                let mut sum = T::Acc::zero();
                for cells in &blocks {
                    let len = cells.len() / l;
                    for &c in &cells[j * len..(j + 1) * len] {
                        sum += c.widen();
                    }
                }
                sum
            })
            .collect()
    };
    Ok(row_sums.into_iter().map(|s| T::acc_to_f64(aux_loss - s)).collect())
}
