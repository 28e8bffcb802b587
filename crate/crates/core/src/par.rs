//! Row-chunked execution helpers.
//!
//! Every data-parallel loop in the crate goes through these functions so the
//! sequential and rayon paths visit exactly the same rows and reduce partial
//! sums in the same order; results are bitwise identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution policy carried by a [`Grid`](crate::spectral::Grid).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Falls back to sequential when the `parallel` feature is disabled.
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Applies `f(row_index, row)` to consecutive rows of length `row_len`.
pub(crate) fn for_rows<T, F>(exec: Exec, data: &mut [T], row_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        data.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
        return;
    }
    let _ = exec;
    data.chunks_mut(row_len)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

/// Like [`for_rows`] but with a per-worker scratch value.
pub(crate) fn for_rows_with<T, S, I, F>(exec: Exec, data: &mut [T], row_len: usize, init: I, f: F)
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        data.par_chunks_mut(row_len)
            .enumerate()
            .for_each_init(&init, |s, (i, row)| f(s, i, row));
        return;
    }
    let _ = exec;
    let mut s = init();
    data.chunks_mut(row_len)
        .enumerate()
        .for_each(|(i, row)| f(&mut s, i, row));
}

/// Sum of `f(row_index, row)` over rows, reduced in row order.
pub(crate) fn sum_rows<T, F>(exec: Exec, data: &[T], row_len: usize, f: F) -> f64
where
    T: Sync,
    F: Fn(usize, &[T]) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        let partial: Vec<f64> = data
            .par_chunks(row_len)
            .enumerate()
            .map(|(i, row)| f(i, row))
            .collect();
        return partial.iter().sum();
    }
    let _ = exec;
    let partial: Vec<f64> = data
        .chunks(row_len)
        .enumerate()
        .map(|(i, row)| f(i, row))
        .collect();
    partial.iter().sum()
}

/// Runs independent jobs, in parallel when allowed; output order matches input.
pub fn map_jobs<T, R, F>(exec: Exec, jobs: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return jobs.into_par_iter().map(f).collect();
    }
    let _ = exec;
    jobs.into_iter().map(f).collect()
}

/// Applies `f` to every item, in parallel when allowed.
pub fn for_each_mut<T, F>(exec: Exec, items: &mut [T], f: F)
where
    T: Send,
    F: Fn(&mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        items.par_iter_mut().for_each(f);
        return;
    }
    let _ = exec;
    items.iter_mut().for_each(f);
}
