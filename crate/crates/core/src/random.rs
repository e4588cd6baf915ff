//! Seeded generators for positions, measures and filtrations.
//!
//! The seed can be overridden with the `TCRISK_SEED` environment variable.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::measure::{Filtration, Measure, Partition, Position, Space};
use crate::rational::{q, qi, Q};
use crate::risk::RiskMeasure;

pub const SEED_ENV: &str = "TCRISK_SEED";

pub fn seed_from_env(default: u64) -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(default)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integer payoffs in `lo..=hi`.
pub fn random_position(space: &Arc<Space>, rng: &mut impl Rng, lo: i64, hi: i64) -> Position {
    let x = (0..space.len()).map(|_| qi(rng.gen_range(lo..=hi))).collect();
    Position::new(space, x).expect("length matches")
}

/// Payoffs `k/d` with `k` in `lo..=hi` and one `d` in `1..=max_den`.
pub fn random_fractional_position(space: &Arc<Space>, rng: &mut impl Rng, lo: i64, hi: i64, max_den: i64) -> Position {
    let den = rng.gen_range(1..=max_den);
    let x = (0..space.len()).map(|_| q(rng.gen_range(lo..=hi), den)).collect();
    Position::new(space, x).expect("length matches")
}

/// A measure on the ℙ⁰-support with small integer weights; with probability
/// `sparsity` each weight is set to zero (at least one stays positive).
pub fn random_measure(space: &Arc<Space>, rng: &mut impl Rng, sparsity: f64) -> Measure {
    let support = space.support();
    let mut w = vec![0i64; space.len()];
    for &i in &support {
        if !rng.gen_bool(sparsity) {
            w[i] = rng.gen_range(1..=6);
        }
    }
    if w.iter().all(|&v| v == 0) {
        w[*support.choose(rng).expect("nonempty support")] = 1;
    }
    let total: i64 = w.iter().sum();
    Measure::new(space, w.iter().map(|&v| q(v, total)).collect()).expect("valid by construction")
}

pub fn random_risk_measure(space: &Arc<Space>, rng: &mut impl Rng, max_gens: usize, sparsity: f64) -> RiskMeasure {
    let k = rng.gen_range(1..=max_gens);
    let gens = (0..k).map(|_| random_measure(space, rng, sparsity)).collect();
    RiskMeasure::new(space, gens).expect("same space")
}

/// A reference measure with random weights, occasionally with null outcomes.
pub fn random_space(n: usize, rng: &mut impl Rng, null_prob: f64) -> Arc<Space> {
    let mut w: Vec<i64> = (0..n)
        .map(|_| if rng.gen_bool(null_prob) { 0 } else { rng.gen_range(1..=4) })
        .collect();
    if w.iter().all(|&v| v == 0) {
        w[rng.gen_range(0..n)] = 1;
    }
    let total: i64 = w.iter().sum();
    Space::labelled(w.iter().map(|&v| q(v, total)).collect())
}

pub fn random_partition(n: usize, rng: &mut impl Rng) -> Partition {
    let k = rng.gen_range(1..=n);
    let mut blocks = vec![Vec::new(); k];
    for i in 0..n {
        blocks[rng.gen_range(0..k)].push(i);
    }
    blocks.retain(|b| !b.is_empty());
    Partition::new(n, blocks).expect("covers every outcome")
}

/// Trivial, then random refinements, then discrete.
pub fn random_filtration(n: usize, rng: &mut impl Rng) -> Filtration {
    let mut levels = vec![Partition::trivial(n)];
    loop {
        let last = levels.last().expect("nonempty");
        if last.is_discrete() {
            break;
        }
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for b in last.blocks() {
            if b.len() > 1 && rng.gen_bool(0.5) {
                let mut b = b.clone();
                b.shuffle(rng);
                let cut = rng.gen_range(1..b.len());
                blocks.push(b[..cut].to_vec());
                blocks.push(b[cut..].to_vec());
            } else {
                blocks.push(b.clone());
            }
        }
        let next = Partition::new(n, blocks).expect("refinement");
        if next != *last {
            levels.push(next);
        }
    }
    Filtration::new(levels).expect("refining chain")
}

/// A nonempty proper subset.
pub fn random_proper_subset(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    loop {
        let a: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if !a.is_empty() && a.len() < n {
            return a;
        }
    }
}

/// Random positive convex weights.
pub fn random_weights(k: usize, rng: &mut impl Rng) -> Vec<Q> {
    let w: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=5)).collect();
    let total: i64 = w.iter().sum();
    w.iter().map(|&v| q(v, total)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let s = Space::uniform(4);
        let a: Vec<_> = (0..5).map(|_| ()).scan(rng(9), |r, _| Some(random_position(&s, r, -3, 3))).collect();
        let b: Vec<_> = (0..5).map(|_| ()).scan(rng(9), |r, _| Some(random_position(&s, r, -3, 3))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn generated_objects_are_valid() {
        let mut r = rng(1);
        for n in 1..6 {
            for _ in 0..20 {
                let s = random_space(n, &mut r, 0.2);
                let _ = random_risk_measure(&s, &mut r, 4, 0.3);
                let f = random_filtration(n, &mut r);
                assert!(f.levels()[0].is_trivial());
                assert!(f.levels().last().unwrap().is_discrete());
                let _ = random_partition(n, &mut r);
            }
        }
    }
}
