//! Execution policy for the data-parallel inner loops.
//!
//! With the `parallel` feature (default) [`Exec::Parallel`] runs on the rayon
//! global pool. Without it every policy degrades to a plain sequential loop,
//! so callers never need to cfg-gate. Every kernel routed through here is a
//! pure per-index map, so results are identical under either policy.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Exec {
    /// Parallel when the `parallel` feature is compiled in, else sequential.
    #[default]
    Auto,
    Sequential,
    Parallel,
}

impl Exec {
    /// Whether this policy actually fans out across threads in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && !matches!(self, Exec::Sequential)
    }

    /// Collects `f(i)` for `i in 0..n`, in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Overwrites `out[i] = f(i)`.
    pub fn fill<T, F>(self, out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            out.par_iter_mut()
                .enumerate()
                .with_min_len(256)
                .for_each(|(i, slot)| *slot = f(i));
            return;
        }
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = f(i);
        }
    }
}
