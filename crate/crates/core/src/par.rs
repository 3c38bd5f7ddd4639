//! Order-preserving parallel map. Runs on a rayon pool when the `parallel`
//! feature is enabled and more than one worker is requested, sequentially
//! otherwise.

#[cfg(feature = "parallel")]
mod pool {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};

    use rayon::prelude::*;

    fn pool(workers: usize) -> Arc<rayon::ThreadPool> {
        static POOLS: OnceLock<Mutex<HashMap<usize, Arc<rayon::ThreadPool>>>> = OnceLock::new();
        let mut pools = POOLS.get_or_init(Default::default).lock().expect("pool registry");
        pools
            .entry(workers)
            .or_insert_with(|| {
                Arc::new(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(workers)
                        .build()
                        .expect("thread pool"),
                )
            })
            .clone()
    }

    pub fn map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        pool(workers).install(|| items.par_iter().map(f).collect())
    }
}

pub fn map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if workers > 1 && items.len() > 1 {
        return pool::map(items, workers, f);
    }
    let _ = workers;
    items.iter().map(f).collect()
}
