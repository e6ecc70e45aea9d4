//! Data-parallel mapping helpers. With the `parallel` feature (default),
//! `pmap` fans out over rayon; without it, both helpers are sequential.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn pmap<T: Sync, R: Send, F: Fn(&T) -> R + Sync>(items: &[T], f: F) -> Vec<R> {
    items.par_iter().map(&f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn pmap<T, R, F: Fn(&T) -> R>(items: &[T], f: F) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Always-sequential variant, kept public so benchmarks can compare.
pub fn seq_map<T, R, F: Fn(&T) -> R>(items: &[T], f: F) -> Vec<R> {
    items.iter().map(f).collect()
}
