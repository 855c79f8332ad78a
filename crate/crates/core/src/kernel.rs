//! Device limits and the block/grid dimensioning of the tiled kernel.
//!
//! Each lane of the kernel owns one cell `(j, i)` of the `l × n` work matrix.
//! Blocks grow along `y` (evaluation sets) first so that one staged ground
//! vector is shared by as many lanes as possible; the remaining thread budget
//! and the shared-memory budget bound the `x` extent (ground vectors).

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviceLimits {
    pub max_threads_per_block: usize,
    /// Shared memory per block, `β`, in bytes.
    pub shared_memory_bytes: usize,
    pub segment_bytes: usize,
    pub warp_size: usize,
    /// Free global memory, `φ`, in bytes.
    pub global_memory_bytes: u64,
}

impl Default for DeviceLimits {
    fn default() -> Self {
        DeviceLimits {
            max_threads_per_block: 1024,
            shared_memory_bytes: 48 * 1024,
            segment_bytes: 32,
            warp_size: 32,
            global_memory_bytes: 16 << 30,
        }
    }
}

impl DeviceLimits {
    pub fn validate(&self) -> Result<()> {
        if self.max_threads_per_block == 0
            || self.shared_memory_bytes == 0
            || self.segment_bytes == 0
            || self.warp_size == 0
            || self.global_memory_bytes == 0
        {
            return Err(Error::InvalidLimits("all device limits must be positive".into()));
        }
        if self.max_threads_per_block % self.warp_size != 0 {
            return Err(Error::InvalidLimits(format!(
                "warp size {} does not divide {} threads per block",
                self.warp_size, self.max_threads_per_block
            )));
        }
        Ok(())
    }
}

impl fmt::Display for DeviceLimits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "max_threads_per_block = {}", self.max_threads_per_block)?;
        writeln!(f, "shared_memory_bytes   = {}", self.shared_memory_bytes)?;
        writeln!(f, "segment_bytes         = {}", self.segment_bytes)?;
        writeln!(f, "warp_size             = {}", self.warp_size)?;
        write!(f, "global_memory_bytes   = {}", self.global_memory_bytes)
    }
}

/// Block and grid dimensions of one kernel launch. `z` extents are always 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelConfig {
    pub block: (usize, usize, usize),
    pub grid: (usize, usize, usize),
    pub shared_bytes_per_block: usize,
}

impl KernelConfig {
    pub fn block_x(&self) -> usize {
        self.block.0
    }

    pub fn block_y(&self) -> usize {
        self.block.1
    }

    pub fn grid_x(&self) -> usize {
        self.grid.0
    }

    pub fn grid_y(&self) -> usize {
        self.grid.1
    }

    pub fn block_count(&self) -> usize {
        self.grid.0 * self.grid.1
    }
}

/// Derives the launch configuration for an `l × n` work matrix whose ground
/// vectors take `gamma` bytes each.
pub fn compute_kernel_config(n: usize, l: usize, gamma: usize, limits: &DeviceLimits) -> Result<KernelConfig> {
    limits.validate()?;
    if n == 0 || l == 0 || gamma == 0 {
        return Err(Error::InvalidData(format!(
            "kernel shape must be positive (n = {n}, l = {l}, gamma = {gamma})"
        )));
    }
    let threads = limits.max_threads_per_block;
    let block_y = threads.min(l);
    let block_x = (threads / block_y).min(limits.shared_memory_bytes / gamma);
    if block_x == 0 {
        return Err(Error::SharedMemoryOverflow { gamma, beta: limits.shared_memory_bytes });
    }
    Ok(KernelConfig {
        block: (block_x, block_y, 1),
        grid: (n.div_ceil(block_x), l.div_ceil(block_y), 1),
        shared_bytes_per_block: block_x * gamma,
    })
}
