//! Data-parallel helpers. With the `parallel` feature (default) the job grids
//! run on rayon; without it the same helpers degrade to plain iterators so the
//! crate builds on targets where a thread pool is unwanted. Output ordering is
//! identical either way.

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

/// Map over `0..n` preserving index order.
pub(crate) fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    map_collect((0..n).collect(), f)
}
