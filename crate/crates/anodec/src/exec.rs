use anodec_core::batch::BatchExecutor;
use rayon::prelude::*;

/// Order-preserving parallel map on the rayon global pool.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl BatchExecutor for Rayon {
    fn map_with<T, S, R, I, F>(&self, items: &[T], init: I, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, &T) -> R + Sync + Send,
    {
        items.par_iter().map_init(init, |s, item| f(s, item)).collect()
    }
}
