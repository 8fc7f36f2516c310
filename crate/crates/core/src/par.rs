//! Execution strategy for the batch loops.
//!
//! Every batch entry point accepts an [`Execution`]. `Parallel` uses rayon
//! when the `parallel` feature is enabled and silently degrades to the
//! sequential path otherwise, so callers never need their own `cfg`.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Whether this strategy actually fans out across threads in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps every item, preserving input order in the output.
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }

    /// Like [`Execution::map`] but fails with the first error in input
    /// order, whichever strategy ran.
    pub fn try_map<T, U, E, F>(self, items: &[T], f: F) -> Result<Vec<U>, E>
    where
        T: Sync,
        U: Send,
        E: Send,
        F: Fn(&T) -> Result<U, E> + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                let results: Vec<Result<U, E>> = items.par_iter().map(f).collect();
                results.into_iter().collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    /// Folds every item into an accumulator and merges the partial results.
    /// `merge` must be associative and `identity()` its neutral element.
    pub fn map_reduce<T, A, I, F, M>(self, items: &[T], identity: I, fold: F, merge: M) -> A
    where
        T: Sync,
        A: Send,
        I: Fn() -> A + Sync + Send,
        F: Fn(A, &T) -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().fold(&identity, &fold).reduce(&identity, merge),
            _ => {
                let _ = &merge;
                items.iter().fold(identity(), fold)
            }
        }
    }
}
