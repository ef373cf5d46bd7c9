//! Replica execution.
//!
//! Replica indices `0..n` are cut into fixed-size blocks that depend only on
//! `n`. Each block is folded sequentially; block results are merged in block
//! order. The output is therefore identical for any worker count, and for the
//! sequential fallback used when the `parallel` feature is off.

use serde::{Deserialize, Serialize};

/// Replicas per block.
pub const BLOCK: u64 = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exec {
    Sequential,
    /// Falls back to [`Exec::Sequential`] without the `parallel` feature.
    Parallel { workers: usize },
}

impl Default for Exec {
    fn default() -> Self {
        Exec::Parallel { workers: 0 }
    }
}

impl Exec {
    pub fn with_workers(workers: usize) -> Self {
        if workers == 1 {
            Exec::Sequential
        } else {
            Exec::Parallel { workers }
        }
    }

    /// Folds `step` over replicas `0..n` with per-block scratch and accumulator.
    pub fn fold<S, A, MS, MA, F, M>(
        &self,
        n: u64,
        make_scratch: MS,
        identity: MA,
        step: F,
        merge: M,
    ) -> A
    where
        S: Send,
        A: Send,
        MS: Fn() -> S + Sync,
        MA: Fn() -> A + Sync,
        F: Fn(&mut S, &mut A, u64) + Sync,
        M: Fn(A, A) -> A,
    {
        let blocks = n.div_ceil(BLOCK);
        let run_block = |b: u64| {
            let mut scratch = make_scratch();
            let mut acc = identity();
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(n);
            for i in lo..hi {
                step(&mut scratch, &mut acc, i);
            }
            acc
        };
        let parts: Vec<A> = match *self {
            Exec::Sequential => (0..blocks).map(run_block).collect(),
            Exec::Parallel { workers } => parallel_blocks(blocks, workers, &run_block),
        };
        parts.into_iter().fold(identity(), merge)
    }

    /// Maps `f` over `0..n`, preserving order.
    pub fn map<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync,
    {
        self.fold(
            n,
            || (),
            Vec::new,
            |_, acc, i| acc.push(f(i)),
            |mut a, mut b| {
                a.append(&mut b);
                a
            },
        )
    }
}

#[cfg(feature = "parallel")]
fn parallel_blocks<A, R>(blocks: u64, workers: usize, run_block: &R) -> Vec<A>
where
    A: Send,
    R: Fn(u64) -> A + Sync,
{
    use rayon::prelude::*;
    let work = || (0..blocks).into_par_iter().map(run_block).collect();
    if workers == 0 {
        return work();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(work),
        Err(_) => (0..blocks).map(run_block).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_blocks<A, R>(blocks: u64, _workers: usize, run_block: &R) -> Vec<A>
where
    R: Fn(u64) -> A,
{
    (0..blocks).map(run_block).collect()
}
