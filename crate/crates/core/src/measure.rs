//! Finite probability spaces, measures, positions, partitions and filtrations.
//!
//! The σ-algebra is always the power set of the outcome list, so atoms are
//! single outcomes and every sub-σ-algebra is described by a [`Partition`].

use std::collections::BTreeSet;
use std::sync::Arc;

use num::{Signed, Zero};
use thiserror::Error;

use crate::rational::{fmt_q, q, qi, sum, Q};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeasureError {
    #[error("operands live on different spaces")]
    SpaceMismatch,
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("length mismatch: expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),
    #[error("internal inconsistency: every outcome is polar")]
    AllPolar,
}

/// Outcome labels plus the reference measure ℙ⁰.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Space {
    outcomes: Vec<String>,
    p0: Vec<Q>,
}

impl Space {
    pub fn new(outcomes: Vec<String>, p0: Vec<Q>) -> Result<Arc<Self>, MeasureError> {
        if outcomes.is_empty() {
            return Err(MeasureError::InvalidSpace("no outcomes".into()));
        }
        if outcomes.len() != p0.len() {
            return Err(MeasureError::LengthMismatch {
                expected: outcomes.len(),
                got: p0.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for l in &outcomes {
            if !seen.insert(l.as_str()) {
                return Err(MeasureError::InvalidSpace(format!("duplicate outcome label {l:?}")));
            }
        }
        if let Some(v) = p0.iter().find(|v| v.is_negative()) {
            return Err(MeasureError::InvalidSpace(format!(
                "negative reference probability {}",
                fmt_q(v)
            )));
        }
        let total = sum(&p0);
        if total != qi(1) {
            return Err(MeasureError::InvalidSpace(format!(
                "reference probabilities sum to {}, not 1",
                fmt_q(&total)
            )));
        }
        Ok(Arc::new(Space { outcomes, p0 }))
    }

    /// `n` outcomes labelled `w1..wn` with uniform ℙ⁰.
    pub fn uniform(n: usize) -> Arc<Self> {
        Self::labelled(vec![q(1, n as i64); n])
    }

    /// Labels `w1..wn` over the given reference probabilities.
    pub fn labelled(p0: Vec<Q>) -> Arc<Self> {
        let outcomes = (1..=p0.len()).map(|i| format!("w{i}")).collect();
        Self::new(outcomes, p0).expect("labelled space")
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn label(&self, i: usize) -> &str {
        &self.outcomes[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|l| l == label)
    }

    pub fn p0(&self) -> &[Q] {
        &self.p0
    }

    pub fn p0_mass(&self, set: &[usize]) -> Q {
        sum(set.iter().map(|&i| &self.p0[i]))
    }

    /// Outcomes carrying positive reference mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.p0[i].is_positive()).collect()
    }
}

pub(crate) fn same_space(a: &Arc<Space>, b: &Arc<Space>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

fn ensure_same(a: &Arc<Space>, b: &Arc<Space>) -> Result<(), MeasureError> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(MeasureError::SpaceMismatch)
    }
}

/// A probability vector absolutely continuous with respect to ℙ⁰.
#[derive(Debug, Clone)]
pub struct Measure {
    space: Arc<Space>,
    p: Vec<Q>,
}

impl PartialEq for Measure {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && same_space(&self.space, &other.space)
    }
}

impl Eq for Measure {}

impl Measure {
    pub fn new(space: &Arc<Space>, p: Vec<Q>) -> Result<Self, MeasureError> {
        if p.len() != space.len() {
            return Err(MeasureError::LengthMismatch {
                expected: space.len(),
                got: p.len(),
            });
        }
        for (i, v) in p.iter().enumerate() {
            if v.is_negative() {
                return Err(MeasureError::InvalidMeasure(format!(
                    "negative mass {} on {}",
                    fmt_q(v),
                    space.label(i)
                )));
            }
            if v.is_positive() && space.p0[i].is_zero() {
                return Err(MeasureError::InvalidMeasure(format!(
                    "mass on reference-null outcome {} (not absolutely continuous)",
                    space.label(i)
                )));
            }
        }
        let total = sum(&p);
        if total != qi(1) {
            return Err(MeasureError::InvalidMeasure(format!(
                "masses sum to {}, not 1",
                fmt_q(&total)
            )));
        }
        Ok(Measure {
            space: Arc::clone(space),
            p,
        })
    }

    /// ℙ⁰ itself.
    pub fn reference(space: &Arc<Space>) -> Self {
        Measure {
            space: Arc::clone(space),
            p: space.p0.clone(),
        }
    }

    pub fn point_mass(space: &Arc<Space>, i: usize) -> Result<Self, MeasureError> {
        let mut p = vec![Q::zero(); space.len()];
        if i >= p.len() {
            return Err(MeasureError::InvalidMeasure(format!("outcome index {i} out of range")));
        }
        p[i] = qi(1);
        Self::new(space, p)
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn probs(&self) -> &[Q] {
        &self.p
    }

    pub fn prob(&self, i: usize) -> &Q {
        &self.p[i]
    }

    pub fn mass(&self, set: &[usize]) -> Q {
        sum(set.iter().map(|&i| &self.p[i]))
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.p.len()).filter(|&i| self.p[i].is_positive()).collect()
    }

    /// ℙ(·|block) as a measure on the whole space; `None` if the block is null.
    pub fn conditioned(&self, block: &[usize]) -> Option<Measure> {
        let m = self.mass(block);
        if m.is_zero() {
            return None;
        }
        let mut p = vec![Q::zero(); self.p.len()];
        for &i in block {
            p[i] = &self.p[i] / &m;
        }
        Some(Measure {
            space: Arc::clone(&self.space),
            p,
        })
    }

    /// Conditional probability ℙ(a | given); `None` when ℙ(given) = 0.
    pub fn cond_prob(&self, a: &[usize], given: &[usize]) -> Option<Q> {
        let g = self.mass(given);
        if g.is_zero() {
            return None;
        }
        let inter: Vec<usize> = a.iter().copied().filter(|i| given.contains(i)).collect();
        Some(self.mass(&inter) / g)
    }

    /// Builds a measure without re-validating; callers guarantee the invariants.
    pub(crate) fn from_parts_unchecked(space: &Arc<Space>, p: Vec<Q>) -> Self {
        debug_assert_eq!(sum(&p), qi(1));
        Measure {
            space: Arc::clone(space),
            p,
        }
    }
}

/// A payoff X, one exact value per outcome.
#[derive(Debug, Clone)]
pub struct Position {
    space: Arc<Space>,
    x: Vec<Q>,
}

impl PartialEq for Position {
    fn eq(&self, other: &Self) -> bool {
        self.x == other.x && same_space(&self.space, &other.space)
    }
}

impl Eq for Position {}

impl Position {
    pub fn new(space: &Arc<Space>, x: Vec<Q>) -> Result<Self, MeasureError> {
        if x.len() != space.len() {
            return Err(MeasureError::LengthMismatch {
                expected: space.len(),
                got: x.len(),
            });
        }
        Ok(Position {
            space: Arc::clone(space),
            x,
        })
    }

    pub fn constant(space: &Arc<Space>, c: Q) -> Self {
        Position {
            space: Arc::clone(space),
            x: vec![c; space.len()],
        }
    }

    pub fn indicator(space: &Arc<Space>, set: &[usize]) -> Self {
        let mut x = vec![Q::zero(); space.len()];
        for &i in set {
            x[i] = qi(1);
        }
        Position {
            space: Arc::clone(space),
            x,
        }
    }

    /// Block-constant position taking `values[k]` on block `k`.
    pub fn from_blocks(space: &Arc<Space>, pi: &Partition, values: &[Q]) -> Self {
        let mut x = vec![Q::zero(); space.len()];
        for (block, v) in pi.blocks().iter().zip(values) {
            for &i in block {
                x[i] = v.clone();
            }
        }
        Position {
            space: Arc::clone(space),
            x,
        }
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn values(&self) -> &[Q] {
        &self.x
    }

    pub fn value(&self, i: usize) -> &Q {
        &self.x[i]
    }

    pub fn neg(&self) -> Position {
        self.map(|v| -v)
    }

    pub fn scale(&self, c: &Q) -> Position {
        self.map(|v| v * c)
    }

    pub fn shift(&self, c: &Q) -> Position {
        self.map(|v| v + c)
    }

    pub fn add(&self, other: &Position) -> Result<Position, MeasureError> {
        ensure_same(&self.space, &other.space)?;
        Ok(Position {
            space: Arc::clone(&self.space),
            x: self.x.iter().zip(&other.x).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn map(&self, f: impl Fn(&Q) -> Q) -> Position {
        Position {
            space: Arc::clone(&self.space),
            x: self.x.iter().map(f).collect(),
        }
    }

    /// Largest absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &Position) -> Result<Q, MeasureError> {
        ensure_same(&self.space, &other.space)?;
        Ok(self
            .x
            .iter()
            .zip(&other.x)
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or_else(Q::zero))
    }

    /// Values on the blocks of `pi`, taken at each block's first outcome.
    pub fn block_values(&self, pi: &Partition) -> Vec<Q> {
        pi.blocks().iter().map(|b| self.x[b[0]].clone()).collect()
    }
}

/// Disjoint nonempty blocks covering `0..n`, canonically ordered.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self, MeasureError> {
        let mut seen = vec![false; n];
        let mut canon = Vec::with_capacity(blocks.len());
        for mut b in blocks {
            if b.is_empty() {
                return Err(MeasureError::InvalidPartition("empty block".into()));
            }
            b.sort_unstable();
            for &i in &b {
                if i >= n {
                    return Err(MeasureError::InvalidPartition(format!(
                        "outcome index {i} out of range"
                    )));
                }
                if seen[i] {
                    return Err(MeasureError::InvalidPartition(format!(
                        "outcome index {i} appears in two blocks"
                    )));
                }
                seen[i] = true;
            }
            canon.push(b);
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(MeasureError::InvalidPartition(format!(
                "outcome index {i} is not covered"
            )));
        }
        canon.sort_by_key(|b| b[0]);
        Ok(Partition { n, blocks: canon })
    }

    pub fn trivial(n: usize) -> Self {
        Partition {
            n,
            blocks: vec![(0..n).collect()],
        }
    }

    pub fn discrete(n: usize) -> Self {
        Partition {
            n,
            blocks: (0..n).map(|i| vec![i]).collect(),
        }
    }

    /// σ(A) = {A, Aᶜ}, dropping whichever side is empty.
    pub fn from_set(n: usize, a: &[usize]) -> Result<Self, MeasureError> {
        let inside: BTreeSet<usize> = a.iter().copied().collect();
        let rest: Vec<usize> = (0..n).filter(|i| !inside.contains(i)).collect();
        let blocks = [inside.into_iter().collect::<Vec<_>>(), rest]
            .into_iter()
            .filter(|b| !b.is_empty())
            .collect();
        Self::new(n, blocks)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn outcome_count(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains(&i))
            .expect("partition covers every outcome")
    }

    pub fn is_trivial(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn is_discrete(&self) -> bool {
        self.blocks.len() == self.n
    }

    /// True when every block of `self` sits inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.n == coarser.n
            && self.blocks.iter().all(|b| {
                let k = coarser.block_of(b[0]);
                b.iter().all(|i| coarser.blocks[k].contains(i))
            })
    }
}

/// Increasing partitions from trivial to discrete.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Filtration {
    levels: Vec<Partition>,
}

impl Filtration {
    pub fn new(levels: Vec<Partition>) -> Result<Self, MeasureError> {
        let first = levels
            .first()
            .ok_or_else(|| MeasureError::InvalidFiltration("no levels".into()))?;
        if !first.is_trivial() {
            return Err(MeasureError::InvalidFiltration(
                "level 0 must be the trivial partition".into(),
            ));
        }
        let last = levels.last().expect("nonempty");
        if !last.is_discrete() {
            return Err(MeasureError::InvalidFiltration(
                "last level must be the discrete partition".into(),
            ));
        }
        for (t, w) in levels.windows(2).enumerate() {
            if w[0].outcome_count() != w[1].outcome_count() {
                return Err(MeasureError::InvalidFiltration(format!(
                    "level {} has a different outcome count",
                    t + 1
                )));
            }
            if !w[1].refines(&w[0]) {
                return Err(MeasureError::InvalidFiltration(format!(
                    "level {} does not refine level {t}",
                    t + 1
                )));
            }
        }
        Ok(Filtration { levels })
    }

    /// The simple filtration 𝓕^A: trivial, then σ(A), then everything.
    pub fn simple(n: usize, a: &[usize]) -> Result<Self, MeasureError> {
        Self::new(vec![
            Partition::trivial(n),
            Partition::from_set(n, a)?,
            Partition::discrete(n),
        ])
    }

    pub fn levels(&self) -> &[Partition] {
        &self.levels
    }

    pub fn level(&self, t: usize) -> Option<&Partition> {
        self.levels.get(t)
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

pub fn expectation(x: &Position, p: &Measure) -> Result<Q, MeasureError> {
    ensure_same(&x.space, &p.space)?;
    Ok(x.x.iter().zip(&p.p).map(|(a, b)| a * b).sum())
}

/// Block averages of `x` under `p`; blocks with zero `p`-mass get 0.
pub fn conditional_expectation(
    x: &Position,
    p: &Measure,
    pi: &Partition,
) -> Result<Position, MeasureError> {
    ensure_same(&x.space, &p.space)?;
    check_partition(&x.space, pi)?;
    let values: Vec<Q> = pi
        .blocks()
        .iter()
        .map(|b| block_average(&x.x, &p.p, b).unwrap_or_else(Q::zero))
        .collect();
    Ok(Position::from_blocks(&x.space, pi, &values))
}

fn block_average(x: &[Q], w: &[Q], block: &[usize]) -> Option<Q> {
    let mass: Q = block.iter().map(|&i| &w[i]).sum();
    if mass.is_zero() {
        return None;
    }
    let num: Q = block.iter().map(|&i| &x[i] * &w[i]).sum();
    Some(num / mass)
}

/// ℙ⁰-conditional average of `x` over `block`, or the plain average when the
/// block is ℙ⁰-null.
pub(crate) fn reference_average(x: &Position, block: &[usize]) -> Q {
    block_average(&x.x, x.space.p0(), block).unwrap_or_else(|| {
        let total: Q = block.iter().map(|&i| &x.x[i]).sum();
        total / qi(block.len() as i64)
    })
}

pub(crate) fn check_partition(space: &Space, pi: &Partition) -> Result<(), MeasureError> {
    if pi.outcome_count() != space.len() {
        return Err(MeasureError::LengthMismatch {
            expected: space.len(),
            got: pi.outcome_count(),
        });
    }
    Ok(())
}

/// A set is polar when every generator gives it zero mass; by convexity this
/// covers the whole hull.
pub fn is_polar(a: &[usize], gens: &[Measure]) -> bool {
    gens.iter().all(|g| g.mass(a).is_zero())
}

/// Outcomes charged by at least one generator.
pub fn non_polar_outcomes(gens: &[Measure]) -> Vec<usize> {
    let n = gens.first().map_or(0, |g| g.p.len());
    (0..n).filter(|&i| !is_polar(&[i], gens)).collect()
}

/// Least `c` such that `{x > c}` is polar: the max of `x` over non-polar outcomes.
pub fn p_esssup(x: &Position, gens: &[Measure]) -> Result<Q, MeasureError> {
    for g in gens {
        ensure_same(&x.space, &g.space)?;
    }
    non_polar_outcomes(gens)
        .into_iter()
        .map(|i| x.x[i].clone())
        .max()
        .ok_or(MeasureError::AllPolar)
}

/// Blockwise essential supremum under `p0ref`; on `p0ref`-null blocks the
/// plain block maximum.
pub fn conditional_esssup(
    x: &Position,
    pi: &Partition,
    p0ref: &Measure,
) -> Result<Position, MeasureError> {
    ensure_same(&x.space, &p0ref.space)?;
    check_partition(&x.space, pi)?;
    let values: Vec<Q> = pi
        .blocks()
        .iter()
        .map(|b| {
            let charged = b.iter().filter(|&&i| p0ref.p[i].is_positive());
            charged
                .map(|&i| x.x[i].clone())
                .max()
                .unwrap_or_else(|| b.iter().map(|&i| x.x[i].clone()).max().expect("nonempty block"))
        })
        .collect();
    Ok(Position::from_blocks(&x.space, pi, &values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};
    use proptest::prelude::*;

    fn pos(s: &Arc<Space>, v: &[i64]) -> Position {
        Position::new(s, v.iter().map(|&a| qi(a)).collect()).unwrap()
    }

    fn meas(s: &Arc<Space>, v: &[(i64, i64)]) -> Measure {
        Measure::new(s, v.iter().map(|&(a, b)| q(a, b)).collect()).unwrap()
    }

    #[test]
    fn space_validation() {
        assert!(Space::new(vec!["a".into(), "a".into()], vec![q(1, 2), q(1, 2)]).is_err());
        assert!(Space::new(vec!["a".into(), "b".into()], vec![q(1, 2), q(1, 3)]).is_err());
        assert!(Space::new(vec!["a".into(), "b".into()], vec![q(3, 2), q(-1, 2)]).is_err());
        assert!(Space::new(vec![], vec![]).is_err());
        let s = Space::new(vec!["a".into(), "b".into()], vec![qi(1), qi(0)]).unwrap();
        assert_eq!(s.support(), vec![0]);
    }

    #[test]
    fn measure_validation() {
        let s = Space::labelled(vec![q(1, 2), q(1, 2), qi(0)]);
        assert!(Measure::new(&s, vec![q(1, 2), q(1, 2), qi(0)]).is_ok());
        assert!(matches!(
            Measure::new(&s, vec![q(1, 2), q(1, 4), q(1, 4)]),
            Err(MeasureError::InvalidMeasure(_))
        ));
        assert!(Measure::new(&s, vec![q(1, 2), q(1, 4), qi(0)]).is_err());
        assert!(Measure::new(&s, vec![q(3, 2), q(-1, 2), qi(0)]).is_err());
        assert!(Measure::point_mass(&s, 2).is_err());
    }

    #[test]
    fn expectation_examples() {
        let s = Space::uniform(3);
        let p = meas(&s, &[(3, 5), (1, 5), (1, 5)]);
        assert_eq!(expectation(&pos(&s, &[1, 0, 0]), &p).unwrap(), q(3, 5));
        assert_eq!(expectation(&Position::constant(&s, q(7, 4)), &p).unwrap(), q(7, 4));
        let u = Measure::reference(&s);
        assert_eq!(expectation(&pos(&s, &[1, 4, 2]), &u).unwrap(), q(7, 3));
        let other = Space::uniform(3);
        assert_eq!(expectation(&pos(&other, &[1, 4, 2]), &u).unwrap(), q(7, 3));
        let four = Space::uniform(4);
        assert_eq!(
            expectation(&pos(&four, &[1, 4, 2, 0]), &u),
            Err(MeasureError::SpaceMismatch)
        );
    }

    #[test]
    fn conditional_expectation_examples() {
        let s = Space::uniform(3);
        let u = Measure::reference(&s);
        let x = pos(&s, &[1, 4, 2]);
        let pi = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        let ce = conditional_expectation(&x, &u, &pi).unwrap();
        assert_eq!(ce.values(), &[q(5, 2), q(5, 2), qi(2)]);
        assert_eq!(conditional_expectation(&x, &u, &Partition::discrete(3)).unwrap(), x);
        let t = conditional_expectation(&x, &u, &Partition::trivial(3)).unwrap();
        assert_eq!(t.values(), &[q(7, 3), q(7, 3), q(7, 3)]);
        // null block convention
        let p = meas(&s, &[(1, 1), (0, 1), (0, 1)]);
        let pi = Partition::new(3, vec![vec![0], vec![1, 2]]).unwrap();
        let ce = conditional_expectation(&x, &p, &pi).unwrap();
        assert_eq!(ce.values(), &[qi(1), qi(0), qi(0)]);
    }

    #[test]
    fn polar_and_esssup_examples() {
        let s = Space::uniform(3);
        let gens = vec![meas(&s, &[(1, 2), (1, 2), (0, 1)]), meas(&s, &[(1, 1), (0, 1), (0, 1)])];
        assert!(is_polar(&[2], &gens));
        assert!(!is_polar(&[0], &[meas(&s, &[(3, 5), (1, 5), (1, 5)])]));
        assert!(is_polar(&[], &gens));
        let x = pos(&s, &[5, 2, 7]);
        assert_eq!(p_esssup(&x, &gens).unwrap(), qi(5));
        assert_eq!(p_esssup(&x, &[Measure::reference(&s)]).unwrap(), qi(7));
        assert_eq!(p_esssup(&Position::constant(&s, qi(-3)), &gens).unwrap(), qi(-3));
        assert_eq!(p_esssup(&x, &[]), Err(MeasureError::AllPolar));
    }

    #[test]
    fn conditional_esssup_examples() {
        let s = Space::uniform(3);
        let u = Measure::reference(&s);
        let x = pos(&s, &[1, 4, 2]);
        let pi = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        assert_eq!(conditional_esssup(&x, &pi, &u).unwrap().values(), &[qi(4), qi(4), qi(2)]);
        assert_eq!(conditional_esssup(&x, &Partition::discrete(3), &u).unwrap(), x);
        assert_eq!(
            conditional_esssup(&x, &Partition::trivial(3), &u).unwrap(),
            Position::constant(&s, qi(4))
        );
        let s2 = Space::labelled(vec![q(1, 2), qi(0), q(1, 2)]);
        let x2 = pos(&s2, &[1, 9, 2]);
        let r = Measure::reference(&s2);
        let pi2 = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        assert_eq!(conditional_esssup(&x2, &pi2, &r).unwrap().values(), &[qi(1), qi(1), qi(2)]);
        let pi3 = Partition::new(3, vec![vec![0], vec![1], vec![2]]).unwrap();
        assert_eq!(conditional_esssup(&x2, &pi3, &r).unwrap(), x2);
    }

    #[test]
    fn partition_canonical_and_errors() {
        let a = Partition::new(4, vec![vec![3, 1], vec![2, 0]]).unwrap();
        let b = Partition::new(4, vec![vec![0, 2], vec![1, 3]]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.blocks(), &[vec![0, 2], vec![1, 3]]);
        assert!(Partition::new(3, vec![vec![0, 1]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 1, 2], vec![]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 1, 5]]).is_err());
        assert_eq!(Partition::from_set(3, &[0, 1, 2]).unwrap(), Partition::trivial(3));
        assert!(Partition::discrete(3).refines(&a_three()));
        assert!(!Partition::trivial(3).refines(&a_three()));
    }

    fn a_three() -> Partition {
        Partition::new(3, vec![vec![0], vec![1, 2]]).unwrap()
    }

    #[test]
    fn filtration_validation() {
        assert!(Filtration::simple(3, &[0]).is_ok());
        assert!(Filtration::new(vec![Partition::discrete(3)]).is_err());
        assert!(Filtration::new(vec![Partition::trivial(3)]).is_err());
        let bad = Filtration::new(vec![
            Partition::trivial(3),
            Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap(),
            Partition::new(3, vec![vec![0], vec![1, 2]]).unwrap(),
            Partition::discrete(3),
        ]);
        assert!(matches!(bad, Err(MeasureError::InvalidFiltration(_))));
        assert!(Filtration::new(vec![Partition::trivial(1)]).is_ok());
    }

    fn arb_case() -> impl Strategy<Value = (Vec<i64>, Vec<i64>, Vec<i64>, Vec<usize>)> {
        (2usize..6).prop_flat_map(|n| {
            (
                proptest::collection::vec(-20i64..20, n),
                proptest::collection::vec(-20i64..20, n),
                proptest::collection::vec(1i64..9, n),
                proptest::collection::vec(0usize..3, n),
            )
        })
    }

    fn build(w: &[i64], labels: &[usize]) -> (Arc<Space>, Measure, Partition) {
        let total: i64 = w.iter().sum();
        let s = Space::uniform(w.len());
        let p = Measure::new(&s, w.iter().map(|&a| q(a, total)).collect()).unwrap();
        let mut blocks: Vec<Vec<usize>> = vec![vec![]; 3];
        for (i, &l) in labels.iter().enumerate() {
            blocks[l].push(i);
        }
        blocks.retain(|b| !b.is_empty());
        (s.clone(), p, Partition::new(w.len(), blocks).unwrap())
    }

    proptest! {
        #[test]
        fn expectation_is_linear_and_tower_holds((x, y, w, labels) in arb_case(), c in -5i64..5) {
            let (s, p, pi) = build(&w, &labels);
            let x = pos(&s, &x);
            let y = pos(&s, &y);
            let lhs = expectation(&x.scale(&qi(c)).add(&y).unwrap(), &p).unwrap();
            let rhs = qi(c) * expectation(&x, &p).unwrap() + expectation(&y, &p).unwrap();
            prop_assert_eq!(lhs, rhs);
            let ce = conditional_expectation(&x, &p, &pi).unwrap();
            prop_assert_eq!(expectation(&ce, &p).unwrap(), expectation(&x, &p).unwrap());
            prop_assert_eq!(conditional_expectation(&ce, &p, &pi).unwrap(), ce);
        }

        #[test]
        fn esssup_dominates_expectations((x, _y, w, _l) in arb_case()) {
            let (s, p, _) = build(&w, &_l);
            let x = pos(&s, &x);
            let top = p_esssup(&x, std::slice::from_ref(&p)).unwrap();
            prop_assert!(expectation(&x, &p).unwrap() <= top);
            let u = Measure::reference(&s);
            let cs = conditional_esssup(&x, &Partition::trivial(s.len()), &u).unwrap();
            let max = x.values().iter().max().unwrap().clone();
            prop_assert_eq!(cs, Position::constant(&s, max));
        }
    }
}
