//! Execution policy for the data-parallel loops (grid cells, batch
//! gradients, Monte Carlo trials).
//!
//! Every parallel path collects results in index order, so a reduction done
//! afterwards is bit-identical to the sequential path regardless of thread
//! count. Without the `parallel` feature, [`Exec::Parallel`] runs sequentially.

use std::env;

/// Environment variable capping harness parallelism (`0` or unset = auto).
pub const THREADS_ENV: &str = "OILCAST_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `(0..n).map(f)` collected in index order.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
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
}

/// Thread cap from `OILCAST_THREADS`; `None` means "let rayon decide".
pub fn threads_from_env() -> Option<usize> {
    parse_threads(env::var(THREADS_ENV).ok().as_deref())
}

fn parse_threads(raw: Option<&str>) -> Option<usize> {
    match raw.map(str::trim).and_then(|s| s.parse::<usize>().ok()) {
        Some(0) | None => None,
        Some(n) => Some(n),
    }
}

/// Runs `f` with at most `threads` workers (all available when `None`).
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_env_parsing() {
        assert_eq!(parse_threads(None), None);
        assert_eq!(parse_threads(Some("0")), None);
        assert_eq!(parse_threads(Some(" 3 ")), Some(3));
        assert_eq!(parse_threads(Some("many")), None);
    }

    #[test]
    fn both_policies_preserve_order() {
        let seq = Exec::Sequential.map_indexed(1000, |i| (i as f64).sqrt());
        let par = with_threads(Some(4), || {
            Exec::Parallel.map_indexed(1000, |i| (i as f64).sqrt())
        });
        assert_eq!(seq, par);
    }
}
