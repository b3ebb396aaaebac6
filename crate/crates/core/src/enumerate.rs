//! Exhaustive enumeration of datasets of a fixed length.
//!
//! Datasets of length `n` over an alphabet of size `k` are ranked
//! lexicographically: the first entry is the most significant base-`k` digit.

use std::sync::Arc;

use crate::empirical::Dataset;
use crate::error::{Error, Result};
use crate::measure::{Alphabet, DiscreteMeasure};

/// Default maximum number of datasets an exact enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// `k^n`, or `EnumerationCapExceeded` when it is above `cap`.
pub fn dataset_count(alphabet_size: usize, n: usize, cap: u64) -> Result<usize> {
    let required = (alphabet_size as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if required > cap as u128 {
        return Err(Error::EnumerationCapExceeded { required, cap });
    }
    Ok(required as usize)
}

pub fn entries_of_rank(rank: usize, alphabet_size: usize, n: usize) -> Vec<usize> {
    let mut entries = vec![0; n];
    let mut r = rank;
    for slot in entries.iter_mut().rev() {
        *slot = r % alphabet_size;
        r /= alphabet_size;
    }
    entries
}

pub fn rank_of(entries: &[usize], alphabet_size: usize) -> usize {
    entries.iter().fold(0, |acc, &e| acc * alphabet_size + e)
}

pub fn dataset_of_rank(alphabet: &Arc<Alphabet>, rank: usize, n: usize) -> Dataset {
    Dataset::new(alphabet.clone(), entries_of_rank(rank, alphabet.size(), n)).expect("rank decodes to valid indices")
}

/// `Π_t pz(z_t)`.
pub fn product_weight(pz: &DiscreteMeasure, entries: &[usize]) -> f64 {
    entries.iter().map(|&i| pz.weight(i)).product()
}

/// Pairwise (binary tree) sum with a fixed split, independent of threading.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
