//! Execution helpers with deterministic floating-point reductions.
//!
//! Every sum in this crate goes through [`pairwise_sum`] over a slice in a
//! fixed order, so results are bit-identical between runs, between thread
//! counts, and between the parallel and sequential builds.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Pairwise (cascade) summation over a slice. The reduction tree depends
/// only on the slice length, never on chunking or thread count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Evaluate `f` over `0..n` into an index-ordered vector. Parallel when the
/// `parallel` feature is on; the output is identical either way.
pub fn map_indexed<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().with_min_len(512).map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Always-sequential twin of [`map_indexed`], kept for benchmarks and for
/// asserting the parallel path is bit-identical.
pub fn map_indexed_seq<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64,
{
    (0..n).map(f).collect()
}

/// Map-and-reduce `0..n` with the deterministic pairwise tree.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    pairwise_sum(&map_indexed(n, f))
}

/// Sequential twin of [`sum_indexed`].
pub fn sum_indexed_seq<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    pairwise_sum(&map_indexed_seq(n, f))
}
