//! Thin indirection over rayon so every data-parallel code path has a
//! sequential twin.
//!
//! With the default `parallel` feature, [`map_indexed`] fans work out over
//! the rayon global pool; without it the same call degrades to a plain
//! iterator. [`map_indexed_seq`] is always sequential, which lets the
//! benchmark suite compare both paths inside one binary. Results are
//! returned in input order either way, so callers observe identical output
//! regardless of feature flags or thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving input order in the result.
/// Runs on the rayon pool when the `parallel` feature is enabled.
pub fn map_indexed<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Sequential twin of [`map_indexed`], available in every build.
pub fn map_indexed_seq<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}
