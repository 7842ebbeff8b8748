//! Execution strategy for the data-parallel loops (Monte Carlo trials,
//! grid sweeps, dense matrix panels).
//!
//! With the `parallel` feature the work fans out over a rayon pool; without
//! it every strategy runs sequentially. Results are always returned in index
//! order, so reductions performed by callers are deterministic regardless of
//! the worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon pool with the given number of threads; `0` uses the global pool.
    #[default]
    Parallel,
    Workers(usize),
}

impl Execution {
    /// `1` maps to [`Execution::Sequential`], `0` to the global pool.
    pub fn from_workers(workers: usize) -> Self {
        match workers {
            0 => Execution::Parallel,
            1 => Execution::Sequential,
            n => Execution::Workers(n),
        }
    }

    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && !matches!(self, Execution::Sequential)
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            match *self {
                Execution::Sequential => {}
                Execution::Parallel => return (0..n).into_par_iter().map(f).collect(),
                Execution::Workers(w) => {
                    return with_pool(w, || (0..n).into_par_iter().map(&f).collect())
                }
            }
        }
        (0..n).map(f).collect()
    }

    /// Runs `f(chunk_index, chunk)` over consecutive `chunk_len`-sized chunks.
    pub fn for_each_chunk_mut<T, F>(&self, data: &mut [T], chunk_len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        let chunk_len = chunk_len.max(1);
        #[cfg(feature = "parallel")]
        {
            match *self {
                Execution::Sequential => {}
                Execution::Parallel => {
                    data.par_chunks_mut(chunk_len)
                        .enumerate()
                        .for_each(|(i, c)| f(i, c));
                    return;
                }
                Execution::Workers(w) => {
                    with_pool(w, || {
                        data.par_chunks_mut(chunk_len)
                            .enumerate()
                            .for_each(|(i, c)| f(i, c))
                    });
                    return;
                }
            }
        }
        data.chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
}

#[cfg(feature = "parallel")]
fn with_pool<R: Send>(workers: usize, op: impl FnOnce() -> R + Send) -> R {
    // Already inside a pool of the requested size: reuse it.
    if rayon::current_thread_index().is_some() && rayon::current_num_threads() == workers {
        return op();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(op),
        Err(e) => {
            log::warn!("could not build a {workers}-thread pool ({e}); using the global pool");
            op()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order_for_every_strategy() {
        let expect: Vec<usize> = (0..1000).map(|i| i * i).collect();
        for exec in [
            Execution::Sequential,
            Execution::Parallel,
            Execution::Workers(3),
        ] {
            assert_eq!(exec.map(1000, |i| i * i), expect);
        }
    }

    #[test]
    fn chunks_cover_slice() {
        let mut v = vec![0usize; 103];
        Execution::Workers(4).for_each_chunk_mut(&mut v, 10, |ci, c| {
            for (k, x) in c.iter_mut().enumerate() {
                *x = ci * 10 + k;
            }
        });
        assert!(v.iter().enumerate().all(|(i, &x)| i == x));
    }

    #[test]
    fn worker_mapping() {
        assert_eq!(Execution::from_workers(1), Execution::Sequential);
        assert_eq!(Execution::from_workers(0), Execution::Parallel);
        assert_eq!(Execution::from_workers(8), Execution::Workers(8));
    }
}
