//! Execution policy for the data-parallel loops.
//!
//! With the `parallel` feature off, [`Exec::Parallel`] silently runs
//! sequentially, so results never depend on the build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when work is actually spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `(0..n).map(f).collect()`, order preserved.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    pub fn for_each_mut<T, F>(self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
            return;
        }
        items.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
    }

    /// Runs `a` and `b`, concurrently when parallel.
    pub fn join<A, B, RA, RB>(self, a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return rayon::join(a, b);
        }
        (a(), b())
    }
}
