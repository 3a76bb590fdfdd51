//! Sequential or data-parallel evaluation with schedule-independent results.

use std::ops::Range;

/// How batch work is executed. Without the `parallel` feature both variants
/// run sequentially.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Chunk length used by the reductions; fixed so sums are bit-reproducible.
pub const CHUNK: usize = 1024;

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// `(0..n).map(f)` in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Applies `f` to consecutive ranges of length `chunk` and returns the
    /// results in range order.
    pub fn map_chunks<T, F>(self, n: usize, chunk: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(Range<usize>) -> T + Sync + Send,
    {
        let chunk = chunk.max(1);
        let count = n.div_ceil(chunk);
        self.map(count, |c| f(c * chunk..((c + 1) * chunk).min(n)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = Execution::Sequential.map(5000, f);
        let b = Execution::Parallel.map(5000, f);
        assert_eq!(a, b);
        let s = |r: Range<usize>| r.map(f).sum::<f64>();
        let ca = Execution::Sequential.map_chunks(5000, CHUNK, s);
        let cb = Execution::Parallel.map_chunks(5000, CHUNK, s);
        assert_eq!(ca, cb);
        assert_eq!(ca.len(), 5);
    }
}
