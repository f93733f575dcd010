//! Execution policy for ensemble work.
//!
//! Every parallel map in the crate goes through [`map_indexed`], which always
//! returns results in index order. Reductions are then folded sequentially, so
//! the output does not depend on thread scheduling or on the policy chosen.

/// How independent jobs are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Data-parallel over a rayon pool. Falls back to sequential when the
    /// `parallel` feature is disabled.
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// True when this build can actually run jobs concurrently.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f(0..n)` and returns the results in index order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Splits `n` items into contiguous blocks of at most `block` items and maps
/// each block range. Useful when per-item work is tiny.
pub fn map_blocks<T, F>(exec: Execution, n: usize, block: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, std::ops::Range<usize>) -> T + Sync + Send,
{
    let block = block.max(1);
    let n_blocks = n.div_ceil(block);
    map_indexed(exec, n_blocks, |b| {
        let start = b * block;
        f(b, start..(start + block).min(n))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let a = map_indexed(Execution::Parallel, 1000, |i| i * i);
        let b = map_indexed(Execution::Sequential, 1000, |i| i * i);
        assert_eq!(a, b);
        assert_eq!(a[999], 998001);
    }

    #[test]
    fn blocks_cover_range() {
        let r = map_blocks(Execution::Parallel, 10, 3, |_, r| r.len());
        assert_eq!(r, vec![3, 3, 3, 1]);
    }
}
