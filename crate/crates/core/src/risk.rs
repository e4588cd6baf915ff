//! Coherent risk measures given by a polytope of test measures.
//!
//! `ρ(X) = max_{ℙ∈𝒫} E_ℙ[−X]` where 𝒫 is the convex hull of finitely many
//! generators. Linearity in ℙ means every maximum over the hull is attained at
//! a generator, so evaluation never needs the hull explicitly.

use std::sync::Arc;

use num::{Signed, Zero};

use crate::lp::{self, HullMembership};
use crate::measure::{
    check_partition, expectation, reference_average, same_space, Measure, MeasureError,
    Partition, Position, Space,
};
use crate::rational::{qi, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RiskMeasure {
    space: Arc<Space>,
    gens: Vec<Measure>,
}

impl RiskMeasure {
    pub fn new(space: &Arc<Space>, gens: Vec<Measure>) -> Result<Self, MeasureError> {
        if gens.is_empty() {
            return Err(MeasureError::InvalidMeasure("a risk measure needs at least one generator".into()));
        }
        if gens.iter().any(|g| !same_space(g.space(), space)) {
            return Err(MeasureError::SpaceMismatch);
        }
        Ok(RiskMeasure {
            space: Arc::clone(space),
            gens,
        })
    }

    /// Validates each row as a measure on `space`.
    pub fn from_rows(space: &Arc<Space>, rows: Vec<Vec<Q>>) -> Result<Self, MeasureError> {
        let gens = rows
            .into_iter()
            .map(|r| Measure::new(space, r))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(space, gens)
    }

    pub fn linear(p: Measure) -> Self {
        RiskMeasure {
            space: Arc::clone(p.space()),
            gens: vec![p],
        }
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn gens(&self) -> &[Measure] {
        &self.gens
    }

    /// Generators as probability vectors.
    pub fn rows(&self) -> Vec<Vec<Q>> {
        self.gens.iter().map(|g| g.probs().to_vec()).collect()
    }

    fn check(&self, other: &Arc<Space>) -> Result<(), MeasureError> {
        if same_space(&self.space, other) {
            Ok(())
        } else {
            Err(MeasureError::SpaceMismatch)
        }
    }

    pub fn rho(&self, x: &Position) -> Result<Q, MeasureError> {
        self.check(x.space())?;
        let loss = x.neg();
        self.gens
            .iter()
            .map(|g| expectation(&loss, g))
            .try_fold(None::<Q>, |best, v| {
                let v = v?;
                Ok(Some(match best {
                    Some(b) if b >= v => b,
                    _ => v,
                }))
            })
            .map(|b| b.expect("nonempty generators"))
    }

    /// ρ_π(X): on each block the worst conditional expected loss among
    /// generators charging the block. Polar blocks fall back to ℙ⁰, and
    /// ℙ⁰-null blocks to the plain block average.
    pub fn conditional_rho(&self, x: &Position, pi: &Partition) -> Result<Position, MeasureError> {
        self.check(x.space())?;
        check_partition(&self.space, pi)?;
        let values: Vec<Q> = pi
            .blocks()
            .iter()
            .map(|b| {
                self.gens
                    .iter()
                    .filter_map(|g| {
                        let m = g.mass(b);
                        if m.is_zero() {
                            return None;
                        }
                        let num: Q = b.iter().map(|&i| x.value(i) * g.prob(i)).sum();
                        Some(-(num / m))
                    })
                    .max()
                    .unwrap_or_else(|| -reference_average(x, b))
            })
            .collect();
        Ok(Position::from_blocks(&self.space, pi, &values))
    }

    pub fn membership(&self, q: &Measure) -> Result<MembershipCertificate, MeasureError> {
        self.check(q.space())?;
        Ok(match lp::hull_membership(&self.rows(), q.probs()) {
            HullMembership::Inside(w) => MembershipCertificate {
                verdict: Verdict::Inside,
                weights: Some(w),
                separator: None,
            },
            HullMembership::Outside(y) => MembershipCertificate {
                verdict: Verdict::Outside,
                weights: None,
                separator: Some(Position::new(&self.space, y)?),
            },
        })
    }

    pub fn contains(&self, q: &Measure) -> bool {
        self.membership(q).map(|c| c.is_inside()).unwrap_or(false)
    }

    /// Drops every generator that is a convex combination of the rest.
    pub fn reduce_to_vertices(&self) -> RiskMeasure {
        let keep = lp::reduce_points(&self.rows());
        RiskMeasure {
            space: Arc::clone(&self.space),
            gens: keep.into_iter().map(|i| self.gens[i].clone()).collect(),
        }
    }

    /// Strict monotonicity holds iff every vertex charges every ℙ⁰-non-null
    /// outcome.
    ///
    /// A vertex `v` with `v(i) = 0` is the unique maximiser for some exposing
    /// `x`; lowering `x` on `i` by less than the exposure gap leaves ρ
    /// unchanged. Conversely if all vertices charge all non-null outcomes,
    /// lowering `x` on a non-null set strictly raises each vertex's loss and
    /// hence the maximum. [`RiskMeasure::strict_monotonicity_violation`]
    /// produces the explicit pair.
    pub fn is_strictly_monotone(&self) -> bool {
        let reduced = self.reduce_to_vertices();
        let support = self.space.support();
        reduced
            .gens
            .iter()
            .all(|v| support.iter().all(|&i| v.prob(i).is_positive()))
    }

    /// A concrete `(x, i, δ)` with `ρ(x − δ·1ᵢ) = ρ(x)` and ℙ⁰(i) > 0, or `None`
    /// when the measure is strictly monotone.
    pub fn strict_monotonicity_violation(&self) -> Option<MonotonicityViolation> {
        let reduced = self.reduce_to_vertices();
        let support = self.space.support();
        for (k, v) in reduced.gens.iter().enumerate() {
            let Some(&outcome) = support.iter().find(|&&i| v.prob(i).is_zero()) else {
                continue;
            };
            let others: Vec<Vec<Q>> = reduced
                .gens
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, g)| g.probs().to_vec())
                .collect();
            let (direction, delta) = if others.is_empty() {
                (vec![Q::zero(); self.space.len()], qi(1))
            } else {
                let HullMembership::Outside(y) = lp::hull_membership(&others, v.probs()) else {
                    unreachable!("vertices of a reduced set are exposed");
                };
                let top: Q = y.iter().zip(v.probs()).map(|(a, b)| a * b).sum();
                let next = others
                    .iter()
                    .map(|g| y.iter().zip(g).map(|(a, b)| a * b).sum::<Q>())
                    .max()
                    .expect("nonempty");
                (y, (top - next) / qi(2))
            };
            let x = Position::new(&self.space, direction.iter().map(|a| -a).collect()).ok()?;
            return Some(MonotonicityViolation { x, outcome, delta });
        }
        None
    }
}

/// `ρ(x − δ·1_outcome) = ρ(x)` although the perturbation is ℙ⁰-visible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotonicityViolation {
    pub x: Position,
    pub outcome: usize,
    pub delta: Q,
}

impl MonotonicityViolation {
    pub fn lowered(&self) -> Position {
        let mut v = self.x.values().to_vec();
        v[self.outcome] -= &self.delta;
        Position::new(self.x.space(), v).expect("same length")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Inside,
    Outside,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipCertificate {
    pub verdict: Verdict,
    pub weights: Option<Vec<Q>>,
    pub separator: Option<Position>,
}

impl MembershipCertificate {
    pub fn is_inside(&self) -> bool {
        self.verdict == Verdict::Inside
    }

    /// Re-checks the certificate exactly against `rm` and `q`.
    pub fn verify(&self, rm: &RiskMeasure, q: &Measure) -> bool {
        let rows = rm.rows();
        match self.verdict {
            Verdict::Inside => self
                .weights
                .as_ref()
                .is_some_and(|w| lp::reconstructs(&rows, q.probs(), w)),
            Verdict::Outside => self
                .separator
                .as_ref()
                .is_some_and(|y| lp::separates(&rows, q.probs(), y.values())),
        }
    }
}
