//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) these fan work out over rayon's
//! global pool; without it they run on the calling thread. Every helper
//! keeps output order fixed, and reductions are folded over fixed-size
//! chunks in index order, so results are bitwise identical in both modes
//! and for any thread count.

/// Chunk width used for deterministic reductions.
pub const REDUCE_CHUNK: usize = 64;

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Calls `f(i, row)` for every row of a row-major buffer with `width` columns.
pub fn for_each_row_mut<F>(data: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        data.par_chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
}

/// Sums `f(i)` (each a vector of length `len`) over `0..n`.
///
/// Partial sums are formed over consecutive chunks of [`REDUCE_CHUNK`]
/// indices and then added in chunk order.
pub fn sum_vectors<F>(n: usize, len: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let chunks = n.div_ceil(REDUCE_CHUNK);
    let partials = map_range(chunks, |c| {
        let mut acc = vec![0.0; len];
        let start = c * REDUCE_CHUNK;
        let end = (start + REDUCE_CHUNK).min(n);
        for i in start..end {
            f(i, &mut acc);
        }
        acc
    });
    let mut total = vec![0.0; len];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_range_preserves_order() {
        let v = map_range(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }

    #[test]
    fn sum_vectors_matches_serial_fold() {
        let n = 1000;
        let got = sum_vectors(n, 2, |i, acc| {
            acc[0] += (i as f64).sqrt();
            acc[1] += 1.0;
        });
        let mut chunked = [0.0f64; 2];
        for c in 0..n.div_ceil(REDUCE_CHUNK) {
            let mut part = [0.0f64; 2];
            for i in c * REDUCE_CHUNK..((c + 1) * REDUCE_CHUNK).min(n) {
                part[0] += (i as f64).sqrt();
                part[1] += 1.0;
            }
            chunked[0] += part[0];
            chunked[1] += part[1];
        }
        assert_eq!(got, chunked.to_vec());
    }

    #[test]
    fn row_visitor_touches_every_row() {
        let mut data = vec![0.0; 12];
        for_each_row_mut(&mut data, 3, |i, row| row.iter_mut().for_each(|x| *x = i as f64));
        assert_eq!(data[9..], [3.0, 3.0, 3.0]);
    }
}
