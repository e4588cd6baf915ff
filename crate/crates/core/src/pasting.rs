//! Pasting of test measures across a partition and the rectangle test for
//! time consistency.
//!
//! For a partition π the *rectangle* of 𝒫 is the set of measures whose block
//! marginals come from some element of 𝒫 and whose conditional law inside
//! each block comes, independently per block, from some (possibly different)
//! element of 𝒫. It is convex: mixing two rectangle members mixes their
//! marginals, and each block conditional of the mixture is a convex
//! combination of the two block conditionals. Every p ∈ 𝒫 is its own paste,
//! so 𝒫 ⊆ R always, and 𝒫 is stable under pasting at π exactly when every
//! extreme point of R lies in 𝒫. Those extreme points are among the
//! products of marginal vertices with per-block conditional vertices.

use num::{Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::measure::{same_space, Filtration, Measure, MeasureError, Partition, Position};
use crate::rational::Q;
use crate::risk::{MembershipCertificate, RiskMeasure};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PasteError {
    #[error("paste undefined: block {block:?} has target mass but zero source mass")]
    IllDefinedPaste { block: Vec<usize> },
    #[error("block {block:?} is polar: no test measure charges it")]
    PolarBlock { block: Vec<usize> },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// 𝓕^A: trivial, then σ(A), then full information.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleFiltration {
    pub a: Vec<usize>,
}

impl SimpleFiltration {
    pub fn new(a: Vec<usize>) -> Self {
        SimpleFiltration { a }
    }

    pub fn partition(&self, n: usize) -> Result<Partition, MeasureError> {
        Partition::from_set(n, &self.a)
    }

    pub fn filtration(&self, n: usize) -> Result<Filtration, MeasureError> {
        Filtration::simple(n, &self.a)
    }
}

/// The measure with `p_prime`'s block marginals and `p`'s conditionals.
///
/// In density form this is `Z · E[Z'|π] / E[Z|π]`. Blocks that `p_prime`
/// leaves empty stay empty.
pub fn paste(p: &Measure, p_prime: &Measure, pi: &Partition) -> Result<Measure, PasteError> {
    if !same_space(p.space(), p_prime.space()) {
        return Err(MeasureError::SpaceMismatch.into());
    }
    crate::measure::check_partition(p.space(), pi)?;
    let mut out = vec![Q::zero(); p.probs().len()];
    for b in pi.blocks() {
        let target = p_prime.mass(b);
        if target.is_zero() {
            continue;
        }
        let source = p.mass(b);
        if source.is_zero() {
            return Err(PasteError::IllDefinedPaste { block: b.clone() });
        }
        let ratio = target / source;
        for &i in b {
            out[i] = p.prob(i) * &ratio;
        }
    }
    Ok(Measure::from_parts_unchecked(p.space(), out))
}

/// Vertices of the closure of `{p(·|block) : p ∈ 𝒫, p(block) > 0}`.
///
/// A conditioned mixture is a mixture of the conditioned generators that
/// charge the block, weighted by their block masses; generators with zero
/// block mass drop out. So the conditioned charging generators span the set.
pub fn conditional_polytope(rm: &RiskMeasure, block: &[usize]) -> Result<Vec<Measure>, PasteError> {
    let conditioned: Vec<Measure> = rm.gens().iter().filter_map(|g| g.conditioned(block)).collect();
    if conditioned.is_empty() {
        return Err(PasteError::PolarBlock {
            block: block.to_vec(),
        });
    }
    let hull = RiskMeasure::new(rm.space(), conditioned)?;
    Ok(hull.reduce_to_vertices().gens().to_vec())
}

/// Vertex-reduced block-mass vectors `(g(B₁), …, g(B_k))`.
pub fn marginal_polytope(rm: &RiskMeasure, pi: &Partition) -> Vec<Vec<Q>> {
    let rows: Vec<Vec<Q>> = rm
        .gens()
        .iter()
        .map(|g| pi.blocks().iter().map(|b| g.mass(b)).collect())
        .collect();
    crate::lp::reduce_points(&rows)
        .into_iter()
        .map(|i| rows[i].clone())
        .collect()
}

/// Per-block conditional vertices; polar blocks get an empty list.
fn conditional_table(rm: &RiskMeasure, pi: &Partition) -> Result<Vec<Vec<Measure>>, PasteError> {
    pi.blocks()
        .iter()
        .map(|b| match conditional_polytope(rm, b) {
            Ok(v) => Ok(v),
            Err(PasteError::PolarBlock { .. }) => Ok(Vec::new()),
            Err(e) => Err(e),
        })
        .collect()
}

fn assemble(
    rm: &RiskMeasure,
    pi: &Partition,
    marginals: &[Vec<Q>],
    conditionals: &[Vec<Measure>],
) -> Result<Vec<Measure>, PasteError> {
    let n = rm.space().len();
    let mut out: Vec<Measure> = Vec::new();
    for m in marginals {
        let charged: Vec<usize> = (0..m.len()).filter(|&k| m[k].is_positive()).collect();
        if let Some(&k) = charged.iter().find(|&&k| conditionals[k].is_empty()) {
            return Err(PasteError::PolarBlock {
                block: pi.blocks()[k].clone(),
            });
        }
        let radices: Vec<usize> = charged.iter().map(|&k| conditionals[k].len()).collect();
        let total: usize = radices.iter().product();
        for index in 0..total {
            // mixed radix, last charged block varying fastest
            let mut rest = index;
            let mut choice = vec![0usize; charged.len()];
            for slot in (0..charged.len()).rev() {
                choice[slot] = rest % radices[slot];
                rest /= radices[slot];
            }
            let mut p = vec![Q::zero(); n];
            for (slot, &k) in charged.iter().enumerate() {
                for (i, v) in conditionals[k][choice[slot]].probs().iter().enumerate() {
                    if !v.is_zero() {
                        p[i] += &m[k] * v;
                    }
                }
            }
            let q = Measure::from_parts_unchecked(rm.space(), p);
            if !out.contains(&q) {
                out.push(q);
            }
        }
    }
    Ok(out)
}

/// All pastes of marginal vertices with per-block conditional vertices.
pub fn rectangle_vertices(rm: &RiskMeasure, pi: &Partition) -> Result<Vec<Measure>, PasteError> {
    crate::measure::check_partition(rm.space(), pi)?;
    let marginals = marginal_polytope(rm, pi);
    let conditionals = conditional_table(rm, pi)?;
    assemble(rm, pi, &marginals, &conditionals)
}

/// Upper bound on the number of rectangle vertices, before deduplication.
pub fn rectangle_size_bound(rm: &RiskMeasure, pi: &Partition) -> u128 {
    let g = rm.gens().len() as u128;
    let blocks = pi.len() as u32;
    g.saturating_mul(g.saturating_pow(blocks))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectangleFailure {
    pub vertex: Measure,
    pub certificate: MembershipCertificate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectangleReport {
    pub partition: Partition,
    pub marginal_vertices: Vec<Vec<Q>>,
    pub conditional_vertices: Vec<Vec<Measure>>,
    pub failures: Vec<RectangleFailure>,
}

impl RectangleReport {
    pub fn is_consistent(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks that every rectangle vertex at `pi` lies in 𝒫.
pub fn is_step_consistent(rm: &RiskMeasure, pi: &Partition) -> Result<RectangleReport, PasteError> {
    crate::measure::check_partition(rm.space(), pi)?;
    let marginal_vertices = marginal_polytope(rm, pi);
    let conditional_vertices = conditional_table(rm, pi)?;
    let vertices = assemble(rm, pi, &marginal_vertices, &conditional_vertices)?;
    let checked: Vec<Option<RectangleFailure>> = vertices
        .into_par_iter()
        .map(|v| {
            let certificate = rm.membership(&v).expect("same space");
            (!certificate.is_inside()).then_some(RectangleFailure {
                vertex: v,
                certificate,
            })
        })
        .collect();
    Ok(RectangleReport {
        partition: pi.clone(),
        marginal_vertices,
        conditional_vertices,
        failures: checked.into_iter().flatten().collect(),
    })
}

/// One report per level; consistent iff all pass.
pub fn is_filtration_consistent(
    rm: &RiskMeasure,
    f: &Filtration,
) -> Result<Vec<RectangleReport>, PasteError> {
    f.levels().iter().map(|pi| is_step_consistent(rm, pi)).collect()
}

pub fn all_consistent(reports: &[RectangleReport]) -> bool {
    reports.iter().all(RectangleReport::is_consistent)
}

/// `max |ρ_s(−ρ_{s+1}(x)) − ρ_s(x)|` over adjacent levels and outcomes, with
/// ρ_t the blockwise conditional risk of [`RiskMeasure::conditional_rho`].
pub fn recursion_residual(rm: &RiskMeasure, x: &Position, f: &Filtration) -> Result<Q, MeasureError> {
    let mut worst = Q::zero();
    let levels = f.levels();
    let values = levels
        .iter()
        .map(|pi| rm.conditional_rho(x, pi))
        .collect::<Result<Vec<_>, _>>()?;
    for s in 0..levels.len().saturating_sub(1) {
        let composed = rm.conditional_rho(&values[s + 1].neg(), &levels[s])?;
        let gap = composed.max_abs_diff(&values[s])?;
        if gap > worst {
            worst = gap;
        }
    }
    Ok(worst)
}
