//! Host emulation of the device kernel.
//!
//! The grid is walked in panels of consecutive block columns. Within a panel,
//! neighbouring blocks of one block row run together as a host task, the way
//! co-resident blocks share a cache on a device. Lane row 0 of every block
//! stages the block's ground vectors into a private buffer (shared memory),
//! then each lane `(t_x, t_y)` computes work-matrix cell
//! `(j, i) = (j0 + t_y, i0 + t_x)` by looping over the `cardinalities[j]`
//! elements of its set in the packed buffer. Lanes are processed in chunks
//! one dimension at a time, which reads the packed buffer exactly as a
//! coalesced warp would and leaves each lane's arithmetic unchanged. Panel
//! cells are folded into the row sums in ascending column order before the
//! next panel starts.

use std::sync::atomic::{AtomicU32, Ordering};

use num_traits::Zero;
use rayon::prelude::*;

use super::{aux_loss_acc, scaled_cell, WorkMatrix};
use crate::error::{Error, Result};
use crate::kernel::{compute_kernel_config, DeviceLimits, KernelConfig};
use crate::layout::{GroundSet, PackedBatch};
use crate::objective::{checked_distance, is_separable, Dissimilarity};
use crate::precision::Element;

/// Upper bound on the work-matrix cells held by one panel.
const PANEL_CELLS: usize = 1 << 22;
/// Ground vectors processed together by one host task.
const GROUP_VECTORS: usize = 64;
/// Lanes of a block row walked together, sized so one element slice of a
/// chunk stays in cache while every staged vector is applied to it.
const LANE_CHUNK: usize = 512;

/// What one launch did, for checking the staging discipline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaunchStats {
    pub config: KernelConfig,
    pub blocks_run: usize,
    /// How many times each ground vector was staged.
    pub staging_loads: Vec<u32>,
}

struct BlockCells<T> {
    width: usize,
    cells: Vec<T>,
}

struct GroupScratch<T> {
    staging: Vec<T>,
    best: Vec<T>,
}

impl<T> Default for GroupScratch<T> {
    fn default() -> Self {
        GroupScratch { staging: Vec::new(), best: Vec::new() }
    }
}

struct Launch<'a, T, D> {
    ground: &'a GroundSet,
    packed: &'a PackedBatch,
    d: &'a D,
    config: KernelConfig,
    loads: Vec<AtomicU32>,
    _marker: std::marker::PhantomData<T>,
}

impl<'a, T: Element, D: Dissimilarity> Launch<'a, T, D> {
    fn new(ground: &'a GroundSet, packed: &'a PackedBatch, d: &'a D, limits: &DeviceLimits) -> Result<Self> {
        let config = compute_kernel_config(ground.n(), packed.l(), ground.bytes_per_vector(), limits)?;
        Ok(Launch {
            ground,
            packed,
            d,
            config,
            loads: (0..ground.n()).map(|_| AtomicU32::new(0)).collect(),
            _marker: std::marker::PhantomData,
        })
    }

    fn blocks_per_panel(&self) -> usize {
        let cells_per_block_column = self.config.block_x() * self.packed.l();
        (PANEL_CELLS / cells_per_block_column).max(1)
    }

    /// Blocks of one block row run together as a group, like co-resident
    /// blocks sharing a cache on a device.
    fn blocks_per_group(&self) -> usize {
        GROUP_VECTORS.div_ceil(self.config.block_x()).max(1)
    }

    /// Runs every block of the panel covering block columns `bx_range`.
    /// Result index: `by * panel_width + (bx - bx_range.start)`.
    fn run_panel(&self, bx_range: std::ops::Range<usize>) -> Result<Vec<BlockCells<T>>> {
        let width = bx_range.len();
        let start = bx_range.start;
        let group = self.blocks_per_group();
        let groups_per_row = width.div_ceil(group);
        let groups: Vec<Vec<BlockCells<T>>> = (0..groups_per_row * self.config.grid_y())
            .into_par_iter()
            .map_init(GroupScratch::default, |scratch, idx| {
                let g = idx % groups_per_row;
                let first = start + g * group;
                let last = (first + group).min(bx_range.end);
                self.run_group(first..last, idx / groups_per_row, scratch)
            })
            .collect::<Result<_>>()?;
        Ok(groups.into_iter().flatten().collect())
    }

    /// Runs blocks `bxs` of block row `by`. Each block stages its own ground
    /// vectors; the lanes of all blocks then walk the block row's sets in
    /// chunks of `LANE_CHUNK` lanes.
    fn run_group(
        &self,
        bxs: std::ops::Range<usize>,
        by: usize,
        scratch: &mut GroupScratch<T>,
    ) -> Result<Vec<BlockCells<T>>> {
        let ground = self.ground;
        let packed = self.packed;
        let (n, l, dim) = (ground.n(), packed.l(), ground.d());
        let (bx_dim, by_dim) = (self.config.block_x(), self.config.block_y());
        let j0 = by * by_dim;
        let height = by_dim.min(l - j0);
        let i_first = bxs.start * bx_dim;
        let i_end = (bxs.end * bx_dim).min(n);
        let vectors = i_end - i_first;

        // Lane row 0 of every block stages that block's ground vectors; the
        // rest of the block waits at the barrier, which here is program order.
        let data = ground.data_typed::<T>();
        let staging = &mut scratch.staging;
        staging.clear();
        staging.resize(vectors * dim, T::zero());
        for t in 0..vectors {
            for k in 0..dim {
                staging[t * dim + k] = data[k * n + i_first + t];
            }
            self.loads[i_first + t].fetch_add(1, Ordering::Relaxed);
        }

        let values = packed.values_typed::<T>();
        let stride_e = l;
        let stride_dim = packed.k_max() * l;
        let aux = ground.aux_distances_typed::<T>();
        let n_acc = T::acc_from_usize(n);
        let separable = is_separable(self.d);
        let term = |x: T, y: T| self.d.term(x, y).unwrap_or_else(T::nan);

        let mut cells = vec![T::zero(); vectors * height];
        let mut acc = vec![T::zero(); LANE_CHUNK];
        let mut element = vec![T::zero(); dim];
        let mut saw_nan = false;
        let best = &mut scratch.best;

        for c0 in (0..height).step_by(LANE_CHUNK) {
            let chunk = LANE_CHUNK.min(height - c0);
            let cards = &packed.cardinalities()[j0 + c0..j0 + c0 + chunk];
            let min_card = cards.iter().copied().min().unwrap_or(0);
            let max_card = cards.iter().copied().max().unwrap_or(0);
            best.clear();
            best.resize(vectors * chunk, T::max_value());
            for e in 0..max_card {
                let base = e * stride_e + j0 + c0;
                if !separable {
                    for t in 0..vectors {
                        let v = &staging[t * dim..(t + 1) * dim];
                        for jj in 0..chunk {
                            if e < cards[jj] {
                                for (k, x) in element.iter_mut().enumerate() {
                                    *x = values[k * stride_dim + base + jj];
                                }
                                let slot = &mut best[t * chunk + jj];
                                *slot = slot.min(checked_distance(self.d, v, &element)?);
                            }
                        }
                    }
                    continue;
                }
                let all_active = e < min_card;
                for t in 0..vectors {
                    let v = &staging[t * dim..(t + 1) * dim];
                    let best = &mut best[t * chunk..(t + 1) * chunk];
                    let acc = &mut acc[..chunk];
                    acc.fill(T::zero());
                    for (k, &vk) in v.iter().enumerate() {
                        let row = &values[k * stride_dim + base..][..chunk];
                        if all_active {
                            for (a, &s) in acc.iter_mut().zip(row) {
                                *a = *a + term(vk, s);
                            }
                        } else {
                            // Lanes whose set is exhausted skip the load.
                            for ((a, &s), &card) in acc.iter_mut().zip(row).zip(cards) {
                                if e < card {
                                    *a = *a + term(vk, s);
                                }
                            }
                        }
                    }
                    for ((b, &a), &card) in best.iter_mut().zip(acc.iter()).zip(cards) {
                        if e < card {
                            saw_nan |= a.is_nan();
                            *b = b.min(a);
                        }
                    }
                }
            }
            for t in 0..vectors {
                let a = aux[i_first + t];
                for jj in 0..chunk {
                    cells[t * height + c0 + jj] = scaled_cell(best[t * chunk + jj].min(a), n_acc);
                }
            }
        }
        if saw_nan {
            return Err(Error::NonFiniteDissimilarity);
        }

        // Split the group's cells back into per-block row-major tiles.
        Ok(bxs
            .map(|bx| {
                let i0 = bx * bx_dim;
                let width = bx_dim.min(n - i0);
                let mut tile = vec![T::zero(); width * height];
                for t in 0..width {
                    let column = &cells[(i0 - i_first + t) * height..][..height];
                    for (jj, &c) in column.iter().enumerate() {
                        tile[jj * width + t] = c;
                    }
                }
                BlockCells { width, cells: tile }
            })
            .collect())
    }

    /// Walks all panels, handing each block row's cells to `visit` in
    /// ascending column order: `visit(j, i, cell)`.
    fn run(&self, mut visit: impl FnMut(usize, usize, T)) -> Result<usize> {
        let grid_x = self.config.grid_x();
        let grid_y = self.config.grid_y();
        let (bx_dim, by_dim) = (self.config.block_x(), self.config.block_y());
        let step = self.blocks_per_panel();
        let mut blocks_run = 0;
        let mut start = 0;
        while start < grid_x {
            let end = (start + step).min(grid_x);
            let width = end - start;
            let panel = self.run_panel(start..end)?;
            blocks_run += panel.len();
            for by in 0..grid_y {
                let row_blocks = &panel[by * width..(by + 1) * width];
                let height = row_blocks[0].cells.len() / row_blocks[0].width;
                for jj in 0..height {
                    let j = by * by_dim + jj;
                    for (offset, block) in row_blocks.iter().enumerate() {
                        let i0 = (start + offset) * bx_dim;
                        let row = &block.cells[jj * block.width..(jj + 1) * block.width];
                        for (t, &c) in row.iter().enumerate() {
                            visit(j, i0 + t, c);
                        }
                    }
                }
            }
            start = end;
        }
        Ok(blocks_run)
    }

    fn stats(self, blocks_run: usize) -> LaunchStats {
        LaunchStats {
            config: self.config,
            blocks_run,
            staging_loads: self.loads.into_iter().map(AtomicU32::into_inner).collect(),
        }
    }
}

pub(super) fn evaluate<T: Element, D: Dissimilarity>(
    ground: &GroundSet,
    packed: &PackedBatch,
    d: &D,
    limits: &DeviceLimits,
) -> Result<(Vec<f64>, LaunchStats)> {
    let launch = Launch::<T, D>::new(ground, packed, d, limits)?;
    let mut sums = vec![T::Acc::zero(); packed.l()];
    let blocks_run = launch.run(|j, _, cell| sums[j] += cell.widen())?;
    let aux_loss = aux_loss_acc::<T>(ground);
    let values = sums.into_iter().map(|s| T::acc_to_f64(aux_loss - s)).collect();
    Ok((values, launch.stats(blocks_run)))
}

pub(super) fn work_matrix<T: Element, D: Dissimilarity>(
    ground: &GroundSet,
    packed: &PackedBatch,
    d: &D,
    limits: &DeviceLimits,
) -> Result<WorkMatrix> {
    let launch = Launch::<T, D>::new(ground, packed, d, limits)?;
    let (rows, cols) = (packed.l(), ground.n());
    let mut cells = vec![0.0; rows * cols];
    launch.run(|j, i, cell| cells[j * cols + i] = cell.to_f64())?;
    Ok(WorkMatrix { rows, cols, cells })
}
