//! Memory-transaction model: a warp's loads are served by fixed-size aligned
//! segments, and all lane accesses falling into one segment coalesce into a
//! single transaction.

use std::collections::BTreeSet;

use crate::kernel::DeviceLimits;

/// One lane's load: byte offset and width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaneAccess {
    pub offset: u64,
    pub width: u64,
}

impl LaneAccess {
    pub fn new(offset: u64, width: u64) -> Self {
        LaneAccess { offset, width }
    }
}

/// Number of distinct `segment_bytes`-aligned segments touched by the lanes.
pub fn count_transactions(lanes: &[LaneAccess], limits: &DeviceLimits) -> usize {
    debug_assert!(lanes.len() <= limits.warp_size, "more lanes than a warp holds");
    let seg = limits.segment_bytes as u64;
    let mut segments = BTreeSet::new();
    for lane in lanes {
        debug_assert!(lane.width > 0);
        let first = lane.offset / seg;
        let last = (lane.offset + lane.width - 1) / seg;
        segments.extend(first..=last);
    }
    segments.len()
}

/// Lanes `j0..j0 + lanes` reading element `e`, dimension `dim` of consecutive
/// sets in the packed (round-robin, dimension-major) layout.
pub fn packed_warp(
    j0: usize,
    lanes: usize,
    e: usize,
    dim: usize,
    l: usize,
    k_max: usize,
    bytes_per_value: usize,
) -> Vec<LaneAccess> {
    (j0..j0 + lanes)
        .map(|j| {
            let index = dim * (k_max * l) + e * l + j;
            LaneAccess::new((index * bytes_per_value) as u64, bytes_per_value as u64)
        })
        .collect()
}

/// The same lanes when every set is stored as its own contiguous block of
/// `k_max * d` row-major values.
pub fn per_set_warp(
    j0: usize,
    lanes: usize,
    e: usize,
    dim: usize,
    k_max: usize,
    d: usize,
    bytes_per_value: usize,
) -> Vec<LaneAccess> {
    (j0..j0 + lanes)
        .map(|j| {
            let index = j * (k_max * d) + e * d + dim;
            LaneAccess::new((index * bytes_per_value) as u64, bytes_per_value as u64)
        })
        .collect()
}

/// Lanes reading dimension `dim` of ground vectors `i0..i0 + lanes` from the
/// column-major ground buffer.
pub fn column_major_warp(i0: usize, lanes: usize, dim: usize, n: usize, bytes_per_value: usize) -> Vec<LaneAccess> {
    (i0..i0 + lanes)
        .map(|i| LaneAccess::new(((dim * n + i) * bytes_per_value) as u64, bytes_per_value as u64))
        .collect()
}
