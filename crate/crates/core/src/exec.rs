//! Execution strategy for independent work items.
//!
//! Results always come back in input order, so outputs never depend on the
//! strategy or thread count.

/// How independent experiment cells are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Data-parallel over all available cores. Falls back to sequential when
    /// built without the `parallel` feature.
    #[default]
    Parallel,
    /// Data-parallel over a pool of the given size.
    Threads(usize),
}

impl Execution {
    /// Strategy for a `--jobs`-style thread bound.
    pub fn from_jobs(jobs: Option<usize>) -> Self {
        match jobs {
            Some(0) | None => Execution::Parallel,
            Some(1) => Execution::Sequential,
            Some(n) => Execution::Threads(n),
        }
    }

    /// Applies `f` to every item, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            Execution::Parallel => parallel_map(items, 0, f),
            Execution::Threads(n) => parallel_map(items, n, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(items: &[T], _threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree_and_keep_order() {
        let items: Vec<u64> = (0..257).collect();
        let f = |x: &u64| x * x + 1;
        let seq = Execution::Sequential.map(&items, f);
        assert_eq!(Execution::Parallel.map(&items, f), seq);
        assert_eq!(Execution::Threads(3).map(&items, f), seq);
        assert_eq!(seq[16], 257);
    }

    #[test]
    fn jobs_mapping() {
        assert_eq!(Execution::from_jobs(Some(1)), Execution::Sequential);
        assert_eq!(Execution::from_jobs(None), Execution::Parallel);
        assert_eq!(Execution::from_jobs(Some(4)), Execution::Threads(4));
    }
}
