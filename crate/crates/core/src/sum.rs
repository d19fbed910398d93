//! Deterministic parallel summation.
//!
//! Inputs are split into fixed-size chunks; each chunk is summed left to
//! right and the partial sums are then added in chunk order. The result
//! depends only on the input, never on the thread count.

use rayon::prelude::*;

pub const CHUNK: usize = 1 << 14;

pub fn chunked_sum(values: &[f64]) -> f64 {
    chunked_sum_by(values, |&v| v)
}

pub fn chunked_sum_by<T: Sync>(values: &[T], f: impl Fn(&T) -> f64 + Sync) -> f64 {
    let partials: Vec<f64> = values
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(&f).sum::<f64>())
        .collect();
    partials.iter().sum()
}
