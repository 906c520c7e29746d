//! Data-parallel helpers. With the `parallel` feature the work is spread over
//! the rayon pool; without it the same functions run sequentially. Results
//! never depend on which path ran or on the number of workers.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluates `f(i)` for `i in 0..n`, keeping index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Same as [`map_indexed`] over the items of a slice.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
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

/// Folds `fold(acc, i)` over `0..n` and merges partial accumulators with
/// `combine`, which must be associative and commutative for the result to be
/// schedule independent.
pub fn fold_indexed<A, Id, Fo, Co>(n: usize, identity: Id, fold: Fo, combine: Co) -> A
where
    A: Send,
    Id: Fn() -> A + Sync + Send,
    Fo: Fn(A, usize) -> A + Sync + Send,
    Co: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().fold(&identity, &fold).reduce(&identity, &combine)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = &combine;
        (0..n).fold(identity(), fold)
    }
}

/// Sets the size of the global worker pool. Only the first call has any
/// effect; later calls report an error.
pub fn configure_threads(threads: usize) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(())
    }
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
