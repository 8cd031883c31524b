//! Data-parallel helpers.
//!
//! Every hot loop in the crate (ray sums, pixel backprojection, ensemble
//! probes) goes through these helpers. With the `parallel` feature they run
//! on the rayon pool; without it, or with [`Exec::Sequential`], they run in
//! order on the calling thread. Work items never share accumulators, and
//! reductions use fixed-size chunks summed in index order, so results are
//! bit-identical across thread counts for a given chunk size.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default chunk length for reductions.
pub const DEFAULT_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    #[default]
    Parallel,
    Sequential,
}

impl Exec {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Evaluates `f(i)` for `i in 0..n` and collects the results in index order.
pub fn map_collect<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Writes `f(i)` into `out[i]`.
pub fn fill<T, F>(exec: Exec, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
        return;
    }
    let _ = exec;
    for (i, o) in out.iter_mut().enumerate() {
        *o = f(i);
    }
}

/// Runs `f(chunk_index, chunk)` over disjoint mutable chunks of `out`.
pub fn for_each_chunk_mut<T, F>(exec: Exec, out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    for (i, c) in out.chunks_mut(chunk).enumerate() {
        f(i, c);
    }
}

/// Sum of `f(i)` over `0..n`, reduced in fixed chunks and then in chunk order.
pub fn sum_by<F>(exec: Exec, n: usize, chunk: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunk = chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    let partials = map_collect(exec, n_chunks, |c| {
        let lo = c * chunk;
        let hi = (lo + chunk).min(n);
        (lo..hi).map(&f).sum::<f64>()
    });
    partials.iter().sum()
}

/// Chunked dot product `sum a[i] * b[i]`.
pub fn dot(exec: Exec, a: &[f64], b: &[f64], chunk: usize) -> f64 {
    assert_eq!(a.len(), b.len());
    sum_by(exec, a.len(), chunk, |i| a[i] * b[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_is_independent_of_exec() {
        let v: Vec<f64> = (0..10_001).map(|i| ((i as f64) * 0.37).sin()).collect();
        let a = sum_by(Exec::Parallel, v.len(), 64, |i| v[i]);
        let b = sum_by(Exec::Sequential, v.len(), 64, |i| v[i]);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn map_collect_preserves_order() {
        let v = map_collect(Exec::Parallel, 1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }

    #[test]
    fn chunks_cover_everything() {
        let mut out = vec![0usize; 103];
        for_each_chunk_mut(Exec::Parallel, &mut out, 10, |c, s| {
            for (k, o) in s.iter_mut().enumerate() {
                *o = c * 10 + k;
            }
        });
        assert!(out.iter().enumerate().all(|(i, &x)| x == i));
    }
}
