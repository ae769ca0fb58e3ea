//! Sample-loop execution: rayon data-parallel with a sequential
//! fallback. Everything routed through here must be a pure function of
//! the sample index, so both modes produce identical results.

use serde::Serialize;

/// How to run a batch of independent samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Sequential,
    /// Rayon on the global thread pool. Without the `parallel` feature
    /// this behaves exactly like `Sequential`.
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        ExecMode::Parallel
    }
}

/// Configures the global rayon pool to `n` threads. Must be called
/// before any parallel work; later calls are ignored by rayon. A no-op
/// without the `parallel` feature.
pub fn configure_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

/// Maps `f` over sample indices `0..n`, preserving index order.
pub fn map_collect<T, F>(mode: ExecMode, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    map_collect_init(mode, n, || (), move |(), s| f(s))
}

/// Like `map_collect`, with per-worker scratch state created by `init`.
/// The scratch must be observationally invisible: `f(scratch, s)` must
/// return the same value for a given `s` no matter how samples are
/// batched.
pub fn map_collect_init<S, T, I, F>(mode: ExecMode, n: u64, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map_init(&init, |s, i| f(s, i)).collect();
    }
    let _ = mode;
    let mut scratch = init();
    (0..n).map(|s| f(&mut scratch, s)).collect()
}

/// Sums `f` over sample indices `0..n`. Integer addition commutes, so
/// the result is independent of batching.
pub fn sum_u64<S, I, F>(mode: ExecMode, n: u64, init: I, f: F) -> u64
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> u64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map_init(&init, |s, i| f(s, i)).sum();
    }
    let _ = mode;
    let mut scratch = init();
    (0..n).map(|s| f(&mut scratch, s)).sum()
}

/// Accumulates per-sample contributions into a `width`-wide vector of
/// counters. `f` must only add to the slice it is handed.
pub fn accumulate_counts<S, I, F>(mode: ExecMode, n: u64, width: usize, init: I, f: F) -> Vec<u64>
where
    S: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64, &mut [u64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        use rayon::prelude::*;
        return (0..n)
            .into_par_iter()
            .fold(
                || (init(), vec![0u64; width]),
                |(mut scratch, mut acc), s| {
                    f(&mut scratch, s, &mut acc);
                    (scratch, acc)
                },
            )
            .map(|(_, acc)| acc)
            .reduce(
                || vec![0u64; width],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            );
    }
    let _ = mode;
    let mut scratch = init();
    let mut acc = vec![0u64; width];
    for s in 0..n {
        f(&mut scratch, s, &mut acc);
    }
    acc
}
