//! Classification of risk measures that are time consistent for every
//! filtration, and constructive counterexamples for the rest.
//!
//! On a finite space the atoms are the outcomes themselves, so the
//! refinement argument collapses: the non-polar outcomes 𝓑 determine the
//! class directly.
//!
//! * one non-polar outcome: evaluation at that outcome;
//! * a single test measure charging two or more outcomes: linear;
//! * every non-polar outcome carries a point mass in 𝒫: the worst case over
//!   non-polar outcomes;
//! * exactly two non-polar outcomes with a proper interval of weights;
//! * anything else fails pasting for some simple filtration 𝓕^A, and
//!   [`find_witness`] exhibits the failing rectangle vertex.

use num::{One, Zero};
use thiserror::Error;

use crate::measure::{is_polar, non_polar_outcomes, Measure, Partition, Space};
use crate::pasting::{is_step_consistent, paste, PasteError};
use crate::rational::{fmt_q, fmt_vec, Q};
use crate::risk::{MembershipCertificate, RiskMeasure};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("sets {a:?} and {b:?} are not disjoint")]
    NotDisjoint { a: Vec<usize>, b: Vec<usize> },
    #[error("conditional probability undefined: {0}")]
    UndefinedConditional(String),
    #[error("lemma chain precondition unmet: {0}")]
    ChainPrecondition(String),
    #[error("no failing simple filtration found for a non-universal measure")]
    NoWitnessFound,
    #[error(transparent)]
    Paste(#[from] PasteError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    OneAtomic { omega1: usize },
    TwoAtomic { omega1: usize, omega2: usize, alpha: Q, beta: Q },
    Extremal,
    Linear { p1: Measure },
    NotUniversal(Box<Witness>),
}

impl Classification {
    pub fn tag(&self) -> &'static str {
        match self {
            Classification::OneAtomic { .. } => "OneAtomic",
            Classification::TwoAtomic { .. } => "TwoAtomic",
            Classification::Extremal => "Extremal",
            Classification::Linear { .. } => "Linear",
            Classification::NotUniversal(_) => "NotUniversal",
        }
    }

    pub fn is_universal(&self) -> bool {
        !matches!(self, Classification::NotUniversal(_))
    }

    /// `OneAtomic(w1)`, `TwoAtomic(w1, w2, 1/3, 2/3)`, `Linear(1/2,1/4,1/4)`, ...
    pub fn describe(&self, space: &Space) -> String {
        match self {
            Classification::OneAtomic { omega1 } => format!("OneAtomic({})", space.label(*omega1)),
            Classification::TwoAtomic {
                omega1,
                omega2,
                alpha,
                beta,
            } => format!(
                "TwoAtomic({}, {}, {}, {})",
                space.label(*omega1),
                space.label(*omega2),
                fmt_q(alpha),
                fmt_q(beta)
            ),
            Classification::Extremal => "Extremal".into(),
            Classification::Linear { p1 } => format!("Linear({})", fmt_vec(p1.probs())),
            Classification::NotUniversal(_) => "NotUniversal".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub failing_partition: Partition,
    pub failing_vertex: Measure,
    pub certificate: MembershipCertificate,
    pub chain: Option<LemmaChain>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainSide {
    /// z6 undercuts the minimum of ℙ(a) over 𝒫.
    Min,
    /// z6 exceeds the maximum of ℙ(a) over 𝒫.
    Max,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaChain {
    pub side: ChainSide,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub z: [Measure; 6],
    pub roles: [&'static str; 6],
}

impl LemmaChain {
    pub fn z6(&self) -> &Measure {
        &self.z[5]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaCase {
    /// One of a, b, (a∪b)ᶜ is polar.
    SomePolar,
    /// ℙ(a), ℙ(b), ℙ((a∪b)ᶜ) each range over all of [0,1].
    FullRanges,
    /// ℙ(a), ℙ(b), ℙ(b|aᶜ), ℙ(a|bᶜ) constant over 𝒫.
    Fixed,
    /// None of the above: 𝒫 cannot be stable for both 𝓕^a and 𝓕^b.
    NoCase,
}

impl LemmaCase {
    pub fn label(&self) -> &'static str {
        match self {
            LemmaCase::SomePolar => "(i)",
            LemmaCase::FullRanges => "(ii)",
            LemmaCase::Fixed => "(iii)",
            LemmaCase::NoCase => "none",
        }
    }
}

fn complement(n: usize, a: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !a.contains(i)).collect()
}

fn ensure_disjoint(a: &[usize], b: &[usize]) -> Result<(), ClassifyError> {
    if a.iter().any(|i| b.contains(i)) {
        return Err(ClassifyError::NotDisjoint {
            a: a.to_vec(),
            b: b.to_vec(),
        });
    }
    Ok(())
}

/// `(min, max)` of ℙ(set) over 𝒫.
pub fn set_range(rm: &RiskMeasure, set: &[usize]) -> (Q, Q) {
    let masses: Vec<Q> = rm.gens().iter().map(|g| g.mass(set)).collect();
    let lo = masses.iter().min().expect("nonempty").clone();
    let hi = masses.iter().max().expect("nonempty").clone();
    (lo, hi)
}

pub fn atom_range(rm: &RiskMeasure, i: usize) -> (Q, Q) {
    set_range(rm, &[i])
}

/// ℙ(num|den) is the same for every generator charging `den`, compared by
/// cross-multiplication.
fn ratio_fixed(gens: &[Measure], num: &[usize], den: &[usize]) -> bool {
    let pairs: Vec<(Q, Q)> = gens.iter().map(|g| (g.mass(num), g.mass(den))).collect();
    pairs
        .iter()
        .all(|(n1, d1)| pairs.iter().all(|(n2, d2)| n1 * d2 == n2 * d1))
}

pub fn lemma_case(rm: &RiskMeasure, a: &[usize], b: &[usize]) -> Result<LemmaCase, ClassifyError> {
    ensure_disjoint(a, b)?;
    let n = rm.space().len();
    let rest: Vec<usize> = (0..n).filter(|i| !a.contains(i) && !b.contains(i)).collect();
    let gens = rm.gens();
    if [a, b, &rest[..]].iter().any(|s| is_polar(s, gens)) {
        return Ok(LemmaCase::SomePolar);
    }
    let full = |s: &[usize]| {
        let (lo, hi) = set_range(rm, s);
        lo.is_zero() && hi.is_one()
    };
    if full(a) && full(b) && full(&rest) {
        return Ok(LemmaCase::FullRanges);
    }
    let fixed = |s: &[usize]| {
        let (lo, hi) = set_range(rm, s);
        lo == hi
    };
    // ℙ(b|aᶜ) reads ℙ(b ∩ aᶜ)/ℙ(aᶜ) = ℙ(b)/ℙ(aᶜ) since b ⊆ aᶜ
    let ac = complement(n, a);
    let bc = complement(n, b);
    if fixed(a) && fixed(b) && ratio_fixed(gens, b, &ac) && ratio_fixed(gens, a, &bc) {
        return Ok(LemmaCase::Fixed);
    }
    Ok(LemmaCase::NoCase)
}

/// ℙ(a) = ℙ(a|bᶜ)(1 − ℙ(b|aᶜ)) / (1 − ℙ(a|bᶜ)ℙ(b|aᶜ)) for disjoint a, b.
pub fn disjoint_identity_check(p: &Measure, a: &[usize], b: &[usize]) -> Result<bool, ClassifyError> {
    ensure_disjoint(a, b)?;
    let n = p.probs().len();
    let ac = complement(n, a);
    let bc = complement(n, b);
    let a_given_bc = p
        .cond_prob(a, &bc)
        .ok_or_else(|| ClassifyError::UndefinedConditional("ℙ(bᶜ) = 0".into()))?;
    let b_given_ac = p
        .cond_prob(b, &ac)
        .ok_or_else(|| ClassifyError::UndefinedConditional("ℙ(aᶜ) = 0".into()))?;
    let den = Q::one() - &a_given_bc * &b_given_ac;
    if den.is_zero() {
        return Err(ClassifyError::UndefinedConditional(
            "ℙ(a|bᶜ)·ℙ(b|aᶜ) = 1".into(),
        ));
    }
    let rhs = &a_given_bc * (Q::one() - &b_given_ac) / den;
    Ok(p.mass(a) == rhs)
}

pub fn classify(rm: &RiskMeasure) -> Result<Classification, ClassifyError> {
    let rm = rm.reduce_to_vertices();
    let nonpolar = non_polar_outcomes(rm.gens());
    if nonpolar.len() == 1 {
        return Ok(Classification::OneAtomic { omega1: nonpolar[0] });
    }
    if rm.gens().len() == 1 {
        return Ok(Classification::Linear {
            p1: rm.gens()[0].clone(),
        });
    }
    if nonpolar.iter().all(|&i| atom_range(&rm, i).1.is_one()) {
        return Ok(Classification::Extremal);
    }
    if nonpolar.len() == 2 {
        let (alpha, beta) = atom_range(&rm, nonpolar[0]);
        // distinct vertices on a two-point support differ in their first weight,
        // and [0,1] itself was caught as extremal
        debug_assert!(alpha < beta && !(alpha.is_zero() && beta.is_one()));
        return Ok(Classification::TwoAtomic {
            omega1: nonpolar[0],
            omega2: nonpolar[1],
            alpha,
            beta,
        });
    }
    Ok(Classification::NotUniversal(Box::new(find_witness(&rm)?)))
}

/// Beyond this many non-polar outcomes only singleton pairs are tried before
/// the direct σ(A) scan.
const MAX_UNION_POOL: usize = 16;

/// Disjoint nonempty pairs drawn from `pool`: singletons first, then by
/// combined size, then by bitmask.
fn candidate_pairs(pool: &[usize]) -> Vec<(Vec<usize>, Vec<usize>)> {
    if pool.len() > MAX_UNION_POOL {
        let mut out = Vec::new();
        for (x, &i) in pool.iter().enumerate() {
            for &j in &pool[x + 1..] {
                out.push((vec![i], vec![j]));
            }
        }
        return out;
    }
    let k = pool.len();
    let mut out: Vec<(u32, u32, u32)> = Vec::new();
    for am in 1u32..(1 << k) {
        let rest = ((1u32 << k) - 1) & !am;
        // iterate nonempty submasks of rest greater than am to list each pair once
        let mut bm = rest;
        while bm > 0 {
            if bm > am {
                out.push(((am | bm).count_ones(), am, bm));
            }
            bm = (bm - 1) & rest;
        }
    }
    out.sort_unstable();
    let pick = |mask: u32| -> Vec<usize> { (0..k).filter(|j| mask >> j & 1 == 1).map(|j| pool[j]).collect() };
    out.into_iter().map(|(_, am, bm)| (pick(am), pick(bm))).collect()
}

pub(crate) fn first_chain(rm: &RiskMeasure, a: &[usize], b: &[usize]) -> Option<LemmaChain> {
    lemma_chain(rm, a, b)
        .or_else(|_| lemma_chain(rm, b, a))
        .or_else(|_| max_side_chain(rm, a, b))
        .or_else(|_| max_side_chain(rm, b, a))
        .ok()
}

/// A simple filtration at which pasting fails, with a verifiable certificate.
pub fn find_witness(rm: &RiskMeasure) -> Result<Witness, ClassifyError> {
    let rm = rm.reduce_to_vertices();
    let n = rm.space().len();
    let nonpolar = non_polar_outcomes(rm.gens());
    for (a, b) in candidate_pairs(&nonpolar) {
        if lemma_case(&rm, &a, &b)? != LemmaCase::NoCase {
            continue;
        }
        for side in [a.clone(), b.clone()] {
            let pi = Partition::from_set(n, &side).map_err(PasteError::from)?;
            let report = is_step_consistent(&rm, &pi)?;
            if let Some(f) = report.failures.into_iter().next() {
                return Ok(Witness {
                    chain: first_chain(&rm, &a, &b),
                    a,
                    b,
                    failing_partition: pi,
                    failing_vertex: f.vertex,
                    certificate: f.certificate,
                });
            }
        }
    }
    // No pair falls outside the lemma's cases; scan every σ(A) directly.
    if n > 30 {
        return Err(ClassifyError::NoWitnessFound);
    }
    let mut masks: Vec<u32> = (1u32..(1 << n) - 1).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for mask in masks {
        let a: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        let pi = Partition::from_set(n, &a).map_err(PasteError::from)?;
        let report = is_step_consistent(&rm, &pi)?;
        if let Some(f) = report.failures.into_iter().next() {
            return Ok(Witness {
                b: complement(n, &a),
                a,
                failing_partition: pi,
                failing_vertex: f.vertex,
                certificate: f.certificate,
                chain: None,
            });
        }
    }
    Err(ClassifyError::NoWitnessFound)
}

struct ChainSetup {
    z1: Measure,
    z2: Measure,
    z3: Measure,
    sigma_a: Partition,
    sigma_b: Partition,
}

fn chain_setup(rm: &RiskMeasure, a: &[usize], b: &[usize], side: ChainSide) -> Result<ChainSetup, ClassifyError> {
    ensure_disjoint(a, b)?;
    let gens = rm.gens();
    let n = rm.space().len();
    let pre = |m: &str| ClassifyError::ChainPrecondition(m.into());
    if is_polar(a, gens) || is_polar(b, gens) {
        return Err(pre("a and b must be non-polar"));
    }
    let (lo, hi) = set_range(rm, a);
    let z1 = match side {
        ChainSide::Min if lo.is_zero() => return Err(pre("min ℙ(a) is 0")),
        ChainSide::Max if hi.is_one() => return Err(pre("max ℙ(a) is 1")),
        ChainSide::Min => gens.iter().find(|g| g.mass(a) == lo),
        ChainSide::Max => gens.iter().find(|g| g.mass(a) == hi),
    }
    .expect("range is attained")
    .clone();
    let ac = complement(n, a);
    let conds: Vec<(Q, &Measure)> = gens
        .iter()
        .filter_map(|g| g.cond_prob(b, &ac).map(|c| (c, g)))
        .collect();
    let low = conds.iter().min_by(|x, y| x.0.cmp(&y.0)).ok_or_else(|| pre("ℙ(aᶜ) = 0 throughout"))?;
    let high = conds.iter().max_by(|x, y| x.0.cmp(&y.0)).expect("nonempty");
    if low.0 == high.0 {
        return Err(pre("ℙ(b|aᶜ) does not vary"));
    }
    Ok(ChainSetup {
        z1,
        z2: low.1.clone(),
        z3: high.1.clone(),
        sigma_a: Partition::from_set(n, a).map_err(PasteError::from)?,
        sigma_b: Partition::from_set(n, b).map_err(PasteError::from)?,
    })
}

fn paste_step(p: &Measure, target: &Measure, pi: &Partition) -> Result<Measure, ClassifyError> {
    paste(p, target, pi).map_err(|e| ClassifyError::ChainPrecondition(e.to_string()))
}

/// The minimum-side contradiction chain.
///
/// z1 minimises ℙ(a); z2, z3 have the lowest and highest ℙ(b|aᶜ). Pasting
/// z1's σ(a)-marginal onto z2 and z3 gives z4, z5 with equal ℙ(a) and
/// ℙ(z4(b)) < ℙ(z5(b)). Pasting z5's σ(b)-marginal onto z4 keeps ℙ(a|bᶜ) but
/// shrinks ℙ(bᶜ), so z6(a) < z1(a).
pub fn lemma_chain(rm: &RiskMeasure, a: &[usize], b: &[usize]) -> Result<LemmaChain, ClassifyError> {
    let s = chain_setup(rm, a, b, ChainSide::Min)?;
    let z4 = paste_step(&s.z2, &s.z1, &s.sigma_a)?;
    let z5 = paste_step(&s.z3, &s.z1, &s.sigma_a)?;
    let z6 = paste_step(&z4, &z5, &s.sigma_b)?;
    if z6.mass(a) >= s.z1.mass(a) {
        return Err(ClassifyError::ChainPrecondition("z6 does not undercut min ℙ(a)".into()));
    }
    Ok(LemmaChain {
        side: ChainSide::Min,
        a: a.to_vec(),
        b: b.to_vec(),
        z: [s.z1, s.z2, s.z3, z4, z5, z6],
        roles: [
            "argmin P(a)",
            "low P(b|a^c)",
            "high P(b|a^c)",
            "z2 conditionals, z1 marginal on sigma(a)",
            "z3 conditionals, z1 marginal on sigma(a)",
            "z4 conditionals, z5 marginal on sigma(b)",
        ],
    })
}

/// The maximum-side mirror: z1 maximises ℙ(a), and z6 takes z4's
/// σ(b)-marginal (the smaller ℙ(b)) with z5's conditionals, so
/// z6(a) = z5(a|bᶜ)·z4(bᶜ) > z5(a) = z1(a).
pub fn max_side_chain(rm: &RiskMeasure, a: &[usize], b: &[usize]) -> Result<LemmaChain, ClassifyError> {
    let s = chain_setup(rm, a, b, ChainSide::Max)?;
    let z4 = paste_step(&s.z2, &s.z1, &s.sigma_a)?;
    let z5 = paste_step(&s.z3, &s.z1, &s.sigma_a)?;
    let z6 = paste_step(&z5, &z4, &s.sigma_b)?;
    if z6.mass(a) <= s.z1.mass(a) {
        return Err(ClassifyError::ChainPrecondition("z6 does not exceed max ℙ(a)".into()));
    }
    Ok(LemmaChain {
        side: ChainSide::Max,
        a: a.to_vec(),
        b: b.to_vec(),
        z: [s.z1, s.z2, s.z3, z4, z5, z6],
        roles: [
            "argmax P(a)",
            "low P(b|a^c)",
            "high P(b|a^c)",
            "z2 conditionals, z1 marginal on sigma(a)",
            "z3 conditionals, z1 marginal on sigma(a)",
            "z5 conditionals, z4 marginal on sigma(b)",
        ],
    })
}
