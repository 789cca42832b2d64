//! Seeded, order-independent stratified resampling.
//!
//! Every draw stream is keyed by a 64-bit hash of
//! `(seed, label, stratum, replicate, side)` and feeds a ChaCha8 generator,
//! so replicate `i` produces the same draws whether replicates run
//! sequentially or on a rayon pool. Columns are sorted before resampling so
//! the replicate distribution does not depend on the input run order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// How replicate loops are executed.
///
/// `Parallel` needs the `parallel` feature; without it the loop silently
/// runs sequentially. Both produce bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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

/// Evaluates `f` for every index in `0..n`, keeping index order in the output.
pub fn map_indices<T, F>(n: usize, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

// splitmix64 finaliser
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit key for one draw stream.
pub fn stream_key(seed: u64, label: &str, stratum: u64, replicate: u64, side: u64) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &seed.to_le_bytes());
    h = fnv1a(h, label.as_bytes());
    h = fnv1a(h, &[0xff]);
    h = fnv1a(h, &stratum.to_le_bytes());
    h = fnv1a(h, &replicate.to_le_bytes());
    h = fnv1a(h, &side.to_le_bytes());
    mix(h)
}

pub fn stream_rng(seed: u64, label: &str, stratum: u64, replicate: u64, side: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_key(seed, label, stratum, replicate, side))
}

/// Columns in canonical (ascending) order.
pub fn sorted_columns(columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
    columns
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.sort_by(f64::total_cmp);
            c
        })
        .collect()
}

/// Draws `column.len()` entries from `column` with replacement, appending
/// them to `out`.
pub fn resample_into<R: Rng>(column: &[f64], rng: &mut R, out: &mut Vec<f64>) {
    let n = column.len();
    out.extend((0..n).map(|_| column[rng.random_range(0..n)]));
}

/// One stratified replicate: every column resampled independently, returned
/// column by column.
pub fn stratified_replicate(
    sorted: &[Vec<f64>],
    seed: u64,
    label: &str,
    replicate: usize,
    side: u64,
) -> Vec<Vec<f64>> {
    sorted
        .iter()
        .enumerate()
        .map(|(t, column)| {
            let mut rng = stream_rng(seed, label, t as u64, replicate as u64, side);
            let mut out = Vec::with_capacity(column.len());
            resample_into(column, &mut rng, &mut out);
            out
        })
        .collect()
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = rank - lo as f64;
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Central percentile interval at `level` of a replicate distribution.
/// Sorting first makes the result independent of evaluation order.
pub fn percentile_interval(mut replicates: Vec<f64>, level: f64) -> Result<(f64, f64)> {
    if replicates.is_empty() {
        return Err(Error::EmptyInput("no bootstrap replicates".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("ci level {level} must lie in (0, 1)")));
    }
    replicates.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok((
        quantile_sorted(&replicates, alpha),
        quantile_sorted(&replicates, 1.0 - alpha),
    ))
}
