//! Data-parallel kernels with a sequential fallback.
//!
//! With the `parallel` feature the kernels run on the rayon pool; without it
//! they run on the calling thread. Reductions are always evaluated as a fixed
//! sequence of fixed-size chunks summed left to right, so both builds produce
//! bit-identical results on identical input.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for reductions and row blocks.
pub const CHUNK: usize = 2048;

/// Below this length the parallel build also stays on the calling thread.
#[cfg_attr(not(feature = "parallel"), allow(dead_code))]
const PAR_THRESHOLD: usize = 4 * CHUNK;

fn chunk_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    if a.len() >= PAR_THRESHOLD {
        let partial: Vec<f64> = a
            .par_chunks(CHUNK)
            .zip(b.par_chunks(CHUNK))
            .map(|(x, y)| chunk_dot(x, y))
            .collect();
        return partial.into_iter().sum();
    }
    a.chunks(CHUNK)
        .zip(b.chunks(CHUNK))
        .map(|(x, y)| chunk_dot(x, y))
        .sum()
}

/// Compressed sparse rows, square.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    pub fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    fn row_dot(&self, row: usize, x: &[f64]) -> f64 {
        let (lo, hi) = (self.row_ptr[row], self.row_ptr[row + 1]);
        self.col[lo..hi]
            .iter()
            .zip(&self.val[lo..hi])
            .map(|(&c, &v)| v * x[c])
            .sum()
    }

    /// `y = A x`
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        #[cfg(feature = "parallel")]
        if y.len() >= PAR_THRESHOLD {
            y.par_chunks_mut(CHUNK).enumerate().for_each(|(k, block)| {
                for (j, out) in block.iter_mut().enumerate() {
                    *out = self.row_dot(k * CHUNK + j, x);
                }
            });
            return;
        }
        for (row, out) in y.iter_mut().enumerate() {
            *out = self.row_dot(row, x);
        }
    }
}

/// Evaluates `f` on every index and collects the results in order.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if len >= PAR_THRESHOLD {
        return (0..len).into_par_iter().map(f).collect();
    }
    (0..len).map(f).collect()
}

/// Runs independent jobs (whole instances, probes of a sweep) and returns
/// their results in input order.
pub fn map_jobs<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
