//! Data-parallel map helper with a sequential fallback.
//!
//! Built with the `parallel` feature (the default), independent work items
//! run on the rayon thread pool. Without it, the same items run on the
//! calling thread. Results are always collected into an index-ordered `Vec`,
//! so output is identical in both modes.

#[cfg(feature = "parallel")]
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Like [`map_indices`] for fallible items. The first error by index wins,
/// matching what a sequential loop would report.
pub(crate) fn try_map_indices<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    let mut out = Vec::with_capacity(n);
    for item in map_indices(n, f) {
        out.push(item?);
    }
    Ok(out)
}
