//! Order-preserving batch evaluation.
//!
//! Training loops evaluate independent rollouts through a [`BatchExecutor`].
//! Implementations may run items concurrently but must return results in
//! input order; callers reduce them sequentially, so results do not depend on
//! the executor.

use alloc::vec::Vec;

pub trait BatchExecutor {
    /// Map `f` over `items`. `init` builds per-worker scratch state.
    fn map_with<T, S, R, I, F>(&self, items: &[T], init: I, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, &T) -> R + Sync + Send;
}

/// Runs every item on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl BatchExecutor for Sequential {
    fn map_with<T, S, R, I, F>(&self, items: &[T], init: I, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, &T) -> R + Sync + Send,
    {
        let mut state = init();
        items.iter().map(|t| f(&mut state, t)).collect()
    }
}
