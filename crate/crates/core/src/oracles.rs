//! Exhaustive enumeration over arrival orders for short paths.
//!
//! The basic policy only ever reacts when a new distinct edge arrives, so its
//! outcome is a function of the arrival permutation alone: it fails exactly
//! when some proper prefix of length `2 <= k <= n-1` of the permutation is the
//! set `{1, ..., k}`. Summing permutation probabilities over that set gives
//! its exact success probability.

use itertools::Itertools;

use crate::analytics::{ordering_probability, OrderingQuery};
use crate::error::{Error, Result};
use crate::model::AttackModel;

/// Largest `n` for which `n!` orderings are enumerated.
pub const MAX_ENUMERATION_N: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationReport {
    pub n: u32,
    pub total_probability: f64,
    /// Permutations in lexicographic order with their probabilities.
    pub per_permutation: Vec<(Vec<u32>, f64)>,
}

impl EnumerationReport {
    /// Most likely ordering; the first in lexicographic order on ties.
    pub fn argmax(&self) -> &[u32] {
        let mut best = &self.per_permutation[0];
        for entry in &self.per_permutation[1..] {
            if entry.1 > best.1 {
                best = entry;
            }
        }
        &best.0
    }

    pub fn argmin(&self) -> &[u32] {
        let mut best = &self.per_permutation[0];
        for entry in &self.per_permutation[1..] {
            if entry.1 < best.1 {
                best = entry;
            }
        }
        &best.0
    }
}

fn check_size(model: &AttackModel) -> Result<()> {
    if model.n() > MAX_ENUMERATION_N {
        return Err(Error::EnumerationTooLarge {
            n: model.n(),
            limit: MAX_ENUMERATION_N,
        });
    }
    Ok(())
}

fn permutations(n: u32) -> impl Iterator<Item = Vec<u32>> {
    (1..=n).permutations(n as usize)
}

pub fn enumerate_orderings(model: &AttackModel) -> Result<EnumerationReport> {
    check_size(model)?;
    let per_permutation: Vec<(Vec<u32>, f64)> = permutations(model.n())
        .map(|perm| {
            let query = OrderingQuery::new(perm).expect("itertools yields permutations");
            let prob = ordering_probability(model, &query).expect("length matches n");
            (query.as_slice().to_vec(), prob)
        })
        .collect();
    let total_probability = per_permutation.iter().map(|(_, pr)| pr).sum();
    Ok(EnumerationReport {
        n: model.n(),
        total_probability,
        per_permutation,
    })
}

/// Does some prefix of `perm` with length in `lengths` equal `{1, ..., k}`?
fn hits_prefix(perm: &[u32], lengths: &[u32]) -> bool {
    let mut max_seen = 0;
    for (k, &edge) in perm.iter().enumerate() {
        max_seen = max_seen.max(edge);
        let len = k as u32 + 1;
        // The first `len` entries are distinct, so they form {1..len} iff max == len.
        if max_seen == len && lengths.contains(&len) {
            return true;
        }
    }
    false
}

/// Probability that no arrival prefix of a length in `stop_lengths` is the
/// set of the nearest edges.
pub fn prefix_avoidance_probability(model: &AttackModel, stop_lengths: &[u32]) -> Result<f64> {
    let report = enumerate_orderings(model)?;
    Ok(report
        .per_permutation
        .iter()
        .filter(|(perm, _)| !hits_prefix(perm, stop_lengths))
        .map(|(_, pr)| pr)
        .sum())
}

/// Exact probability that the basic policy returns the whole path.
pub fn alg1_success_exact(model: &AttackModel) -> Result<f64> {
    let lengths: Vec<u32> = (2..model.n()).collect();
    prefix_avoidance_probability(model, &lengths)
}

fn location_of(perm: &[u32], i: u32) -> usize {
    perm.iter().position(|&e| e == i).expect("edge present") + 1
}

fn disruptions_of(perm: &[u32], i: u32) -> usize {
    let at = location_of(perm, i) - 1;
    let before = perm[..at].iter().filter(|&&e| e > i).count();
    let after = perm[at + 1..].iter().filter(|&&e| e < i).count();
    before + after
}

fn bruteforce_expectation(
    model: &AttackModel,
    i: u32,
    statistic: fn(&[u32], u32) -> usize,
) -> Result<f64> {
    if i == 0 || i > model.n() {
        return Err(Error::domain("edge index", i));
    }
    let report = enumerate_orderings(model)?;
    Ok(report
        .per_permutation
        .iter()
        .map(|(perm, pr)| statistic(perm, i) as f64 * pr)
        .sum())
}

pub fn location_expectation_bruteforce(model: &AttackModel, i: u32) -> Result<f64> {
    bruteforce_expectation(model, i, location_of)
}

pub fn disruption_expectation_bruteforce(model: &AttackModel, i: u32) -> Result<f64> {
    bruteforce_expectation(model, i, disruptions_of)
}
