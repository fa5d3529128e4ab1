//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature these fan out over rayon; without it (or with
//! [`Execution::Sequential`]) the same chunking runs on the calling thread.
//! Reductions always split into fixed-size chunks and combine the partial
//! sums in order, so both paths produce bit-identical floating-point results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used by every reduction and row-blocked kernel.
pub const CHUNK: usize = 4096;
/// Vector kernels shorter than this stay on the calling thread.
const PAR_MIN_LEN: usize = 8 * CHUNK;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work is actually fanned out to the thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Dot product with deterministic chunked summation.
pub fn dot(exec: Execution, a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let partial = |(x, y): (&[f64], &[f64])| -> f64 { x.iter().zip(y).map(|(p, q)| p * q).sum() };
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && a.len() > PAR_MIN_LEN {
        let parts: Vec<f64> = a
            .par_chunks(CHUNK)
            .zip(b.par_chunks(CHUNK))
            .map(partial)
            .collect();
        return parts.iter().sum();
    }
    let _ = exec;
    a.chunks(CHUNK).zip(b.chunks(CHUNK)).map(partial).collect::<Vec<_>>().iter().sum()
}

pub fn norm(exec: Execution, a: &[f64]) -> f64 {
    dot(exec, a, a).sqrt()
}

/// y ← y + alpha·x
pub fn axpy(exec: Execution, alpha: f64, x: &[f64], y: &mut [f64]) {
    let kernel = |(yc, xc): (&mut [f64], &[f64])| {
        for (yi, xi) in yc.iter_mut().zip(xc) {
            *yi += alpha * xi;
        }
    };
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && y.len() > PAR_MIN_LEN {
        y.par_chunks_mut(CHUNK).zip(x.par_chunks(CHUNK)).for_each(kernel);
        return;
    }
    let _ = exec;
    y.chunks_mut(CHUNK).zip(x.chunks(CHUNK)).for_each(kernel);
}

pub fn scale(exec: Execution, alpha: f64, y: &mut [f64]) {
    let kernel = |yc: &mut [f64]| yc.iter_mut().for_each(|v| *v *= alpha);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && y.len() > PAR_MIN_LEN {
        y.par_chunks_mut(CHUNK).for_each(kernel);
        return;
    }
    let _ = exec;
    y.chunks_mut(CHUNK).for_each(kernel);
}

/// Fill `out` block by block; `f(start, block)` writes rows `start..start+block.len()`.
pub fn fill_blocks<F>(exec: Execution, out: &mut [f64], f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && out.len() > CHUNK {
        out.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(b, block)| f(b * CHUNK, block));
        return;
    }
    let _ = exec;
    out.chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(b, block)| f(b * CHUNK, block));
}

/// Order-preserving map over independent work items (sweep points, mode indices).
pub fn map_collect<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}
