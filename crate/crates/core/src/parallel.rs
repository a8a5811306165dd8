//! Data-parallel dispatch helpers.
//!
//! Each helper takes an explicit `parallel` flag so benchmarks can compare
//! both paths in one run. The flag only selects rayon when the crate is
//! built with the `parallel` feature; without it every call is sequential.
//! All helpers hand disjoint output regions to independent closures, so the
//! parallel and sequential paths produce bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default mode for public entry points: parallel iff the feature is on.
#[inline]
pub fn default_mode() -> bool {
    cfg!(feature = "parallel")
}

/// Runs `f(chunk_index, chunk)` over consecutive `chunk_len` slices of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk_len: usize, parallel: bool, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    assert!(chunk_len > 0, "chunk_len must be positive");
    #[cfg(feature = "parallel")]
    if parallel {
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = parallel;
    for (i, c) in data.chunks_mut(chunk_len).enumerate() {
        f(i, c);
    }
}

/// Maps `f` over `0..n`, collecting the results in index order.
pub fn map_indexed<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// Maps a fallible `f` over `0..n`, short-circuiting on the first error.
pub fn try_map_indexed<T, E, F>(n: usize, parallel: bool, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_fill_matches_both_modes() {
        let run = |parallel| {
            let mut out = vec![0.0f64; 12];
            for_each_chunk_mut(&mut out, 3, parallel, |i, c| {
                for (j, v) in c.iter_mut().enumerate() {
                    *v = (i * 10 + j) as f64;
                }
            });
            out
        };
        assert_eq!(run(true), run(false));
    }

    #[test]
    fn map_indexed_preserves_order() {
        assert_eq!(map_indexed(5, true, |i| i * i), vec![0, 1, 4, 9, 16]);
    }
}
