//! Deterministic reductions.
//!
//! Sums are pairwise with a fixed block layout, so the result depends only
//! on the input order and never on how many worker threads took part.

use rayon::prelude::*;

use crate::Real;

const LEAF: usize = 32;
const PAR_CHUNK: usize = 1 << 14;

/// Pairwise (cascade) summation.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    if xs.len() <= LEAF {
        let mut acc = T::zero();
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sums `f(i)` for `i in 0..len`.
///
/// Fixed-size chunks are reduced in parallel and their partial sums are
/// combined pairwise, so the bits of the result are independent of the
/// thread pool.
pub fn sum_map<T, F>(len: usize, f: F) -> T
where
    T: Real,
    F: Fn(usize) -> T + Sync,
{
    let partials: Vec<T> = (0..len.div_ceil(PAR_CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * PAR_CHUNK;
            let hi = (lo + PAR_CHUNK).min(len);
            let vals: Vec<T> = (lo..hi).map(&f).collect();
            pairwise_sum(&vals)
        })
        .collect();
    pairwise_sum(&partials)
}

/// Maximum of `f(i)` over `0..len`; zero for an empty range.
pub fn max_map<T, F>(len: usize, f: F) -> T
where
    T: Real,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len)
        .into_par_iter()
        .map(f)
        .reduce(T::zero, |a, b| if b > a { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_integers() {
        let xs: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 49_995_000.0);
        assert_eq!(sum_map(xs.len(), |i| xs[i]), 49_995_000.0);
    }

    #[test]
    fn sum_map_is_thread_count_independent() {
        let xs: Vec<f64> = (0..100_000).map(|i| ((i as f64) * 0.37).sin()).collect();
        let a = sum_map(xs.len(), |i| xs[i]);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| sum_map(xs.len(), |i| xs[i]));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn empty_reductions() {
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
        assert_eq!(max_map::<f64, _>(0, |_| 1.0), 0.0);
    }
}
