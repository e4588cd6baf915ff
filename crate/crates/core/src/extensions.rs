//! Time-consistent dynamic extensions of the four universal classes, the
//! semigroup check, and the entropic contrast.
//!
//! Off the region reached by the test measures every extension falls back to
//! the ℙ⁰-conditional expectation. On ℙ⁰-null blocks the fallback is the plain
//! block average, which keeps the last level equal to `−x` and still satisfies
//! the tower property.

use num::{Signed, Zero};
use thiserror::Error;

use crate::classify::{classify, ClassifyError, Classification, Witness};
use crate::measure::{
    non_polar_outcomes, reference_average, same_space, Filtration, Measure, MeasureError,
    Partition, Position,
};
use crate::rational::{to_f64, Q};
use crate::risk::RiskMeasure;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtensionError {
    #[error("no universal extension: the measure is not time consistent for every filtration")]
    NotUniversal(Box<Witness>),
    #[error("level {level} out of range (filtration has {levels} levels)")]
    LevelOutOfRange { level: usize, levels: usize },
    #[error("levels must satisfy s <= t, got s={s}, t={t}")]
    LevelOrder { s: usize, t: usize },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

/// A classified risk measure together with its per-level conditional rule.
#[derive(Debug, Clone)]
pub struct DynamicRiskMeasure {
    base: RiskMeasure,
    filtration: Filtration,
    class: Classification,
    non_polar: Vec<usize>,
}

pub fn extend(rm: &RiskMeasure, f: &Filtration) -> Result<DynamicRiskMeasure, ExtensionError> {
    if f.levels()[0].outcome_count() != rm.space().len() {
        return Err(MeasureError::LengthMismatch {
            expected: rm.space().len(),
            got: f.levels()[0].outcome_count(),
        }
        .into());
    }
    let class = classify(rm)?;
    if let Classification::NotUniversal(w) = class {
        return Err(ExtensionError::NotUniversal(w));
    }
    Ok(DynamicRiskMeasure {
        base: rm.clone(),
        filtration: f.clone(),
        non_polar: non_polar_outcomes(rm.gens()),
        class,
    })
}

impl DynamicRiskMeasure {
    pub fn base(&self) -> &RiskMeasure {
        &self.base
    }

    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    pub fn class(&self) -> &Classification {
        &self.class
    }

    /// ρ_t(x) as a block-constant position.
    pub fn evaluate(&self, level: usize, x: &Position) -> Result<Position, ExtensionError> {
        let pi = self.filtration.level(level).ok_or(ExtensionError::LevelOutOfRange {
            level,
            levels: self.filtration.len(),
        })?;
        if !same_space(x.space(), self.base.space()) {
            return Err(MeasureError::SpaceMismatch.into());
        }
        let values: Vec<Q> = pi
            .blocks()
            .iter()
            .map(|b| self.block_value(pi, b, x))
            .collect::<Result<_, _>>()?;
        Ok(Position::from_blocks(self.base.space(), pi, &values))
    }

    fn block_value(&self, pi: &Partition, b: &[usize], x: &Position) -> Result<Q, ExtensionError> {
        let fallback = || -reference_average(x, b);
        Ok(match &self.class {
            Classification::OneAtomic { omega1 } => {
                if b.contains(omega1) {
                    -x.value(*omega1).clone()
                } else {
                    fallback()
                }
            }
            Classification::TwoAtomic { omega1, omega2, .. } => {
                let separated = pi.block_of(*omega1) != pi.block_of(*omega2);
                match (b.contains(omega1), b.contains(omega2)) {
                    (true, true) => self.base.rho(x)?,
                    (true, false) if separated => -x.value(*omega1).clone(),
                    (false, true) if separated => -x.value(*omega2).clone(),
                    _ => fallback(),
                }
            }
            Classification::Linear { p1 } => conditional_loss(x, p1, b).unwrap_or_else(fallback),
            Classification::Extremal => {
                let worst = b
                    .iter()
                    .filter(|i| self.non_polar.contains(i))
                    .map(|&i| -x.value(i))
                    .max();
                match worst {
                    Some(v) => v,
                    None => {
                        let p0 = self.base.space().p0();
                        b.iter()
                            .filter(|&&i| p0[i].is_positive())
                            .map(|&i| -x.value(i))
                            .max()
                            .unwrap_or_else(|| b.iter().map(|&i| -x.value(i)).max().expect("nonempty block"))
                    }
                }
            }
            Classification::NotUniversal(_) => unreachable!("rejected by extend"),
        })
    }
}

fn conditional_loss(x: &Position, p: &Measure, b: &[usize]) -> Option<Q> {
    let m = p.mass(b);
    if m.is_zero() {
        return None;
    }
    let num: Q = b.iter().map(|&i| x.value(i) * p.prob(i)).sum();
    Some(-(num / m))
}

/// `max |ρ_s(−ρ_t(x)) − ρ_s(x)|` over outcomes.
pub fn semigroup_residual(
    d: &DynamicRiskMeasure,
    x: &Position,
    s: usize,
    t: usize,
) -> Result<Q, ExtensionError> {
    if s > t {
        return Err(ExtensionError::LevelOrder { s, t });
    }
    let inner = d.evaluate(t, x)?;
    let composed = d.evaluate(s, &inner.neg())?;
    let direct = d.evaluate(s, x)?;
    Ok(composed.max_abs_diff(&direct)?)
}

/// Largest residual over all level pairs `s <= t`.
pub fn max_semigroup_residual(d: &DynamicRiskMeasure, x: &Position) -> Result<Q, ExtensionError> {
    let n = d.filtration.len();
    let mut worst = Q::zero();
    for t in 0..n {
        for s in 0..=t {
            let r = semigroup_residual(d, x, s, t)?;
            if r > worst {
                worst = r;
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropicError {
    #[error("gamma must be positive and finite, got {0}")]
    BadGamma(f64),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// `γ·ln Σ wᵢ exp(−xᵢ/γ) / Σ wᵢ` via log-sum-exp.
fn entropic_weighted(x: &[f64], w: &[f64], gamma: f64) -> f64 {
    let total: f64 = w.iter().sum();
    let top = x
        .iter()
        .zip(w)
        .filter(|(_, &wi)| wi > 0.0)
        .map(|(xi, _)| -xi / gamma)
        .fold(f64::NEG_INFINITY, f64::max);
    let acc: f64 = x
        .iter()
        .zip(w)
        .filter(|(_, &wi)| wi > 0.0)
        .map(|(xi, wi)| wi * (-xi / gamma - top).exp())
        .sum();
    gamma * (top + acc.ln() - total.ln())
}

fn check_gamma(gamma: f64) -> Result<(), EntropicError> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(EntropicError::BadGamma(gamma))
    }
}

/// `γ ln E_{p0}[exp(−X/γ)]`, in floating point.
pub fn entropic_rho(x: &Position, gamma: f64, p0: &Measure) -> Result<f64, EntropicError> {
    check_gamma(gamma)?;
    if !same_space(x.space(), p0.space()) {
        return Err(MeasureError::SpaceMismatch.into());
    }
    let xs: Vec<f64> = x.values().iter().map(to_f64).collect();
    let ws: Vec<f64> = p0.probs().iter().map(to_f64).collect();
    Ok(entropic_weighted(&xs, &ws, gamma))
}

/// Blockwise conditional entropic risk of a float payoff; `p0`-null blocks
/// use uniform weights.
fn conditional_entropic(x: &[f64], pi: &Partition, gamma: f64, p0: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for b in pi.blocks() {
        let xs: Vec<f64> = b.iter().map(|&i| x[i]).collect();
        let mut ws: Vec<f64> = b.iter().map(|&i| p0[i]).collect();
        if ws.iter().all(|&w| w <= 0.0) {
            ws = vec![1.0; b.len()];
        }
        let v = entropic_weighted(&xs, &ws, gamma);
        for &i in b {
            out[i] = v;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropicReport {
    pub gamma: f64,
    /// ρ_t(x) per level, one value per outcome.
    pub levels: Vec<Vec<f64>>,
    /// Largest `|ρ_s(−ρ_t(x)) − ρ_s(x)|` over `s <= t`.
    pub residual: f64,
    /// `|ρ(2x) − 2ρ(x)|`.
    pub homogeneity_gap: f64,
}

pub fn entropic_consistency_demo(
    f: &Filtration,
    gamma: f64,
    p0: &Measure,
    x: &Position,
) -> Result<EntropicReport, EntropicError> {
    check_gamma(gamma)?;
    if !same_space(x.space(), p0.space()) {
        return Err(MeasureError::SpaceMismatch.into());
    }
    let xs: Vec<f64> = x.values().iter().map(to_f64).collect();
    let ws: Vec<f64> = p0.probs().iter().map(to_f64).collect();
    let levels: Vec<Vec<f64>> = f
        .levels()
        .iter()
        .map(|pi| conditional_entropic(&xs, pi, gamma, &ws))
        .collect();
    let mut residual: f64 = 0.0;
    for t in 0..levels.len() {
        let neg: Vec<f64> = levels[t].iter().map(|v| -v).collect();
        for s in 0..=t {
            let composed = conditional_entropic(&neg, &f.levels()[s], gamma, &ws);
            for (a, b) in composed.iter().zip(&levels[s]) {
                residual = residual.max((a - b).abs());
            }
        }
    }
    let doubled: Vec<f64> = xs.iter().map(|v| 2.0 * v).collect();
    let homogeneity_gap = (entropic_weighted(&doubled, &ws, gamma) - 2.0 * entropic_weighted(&xs, &ws, gamma)).abs();
    Ok(EntropicReport {
        gamma,
        levels,
        residual,
        homogeneity_gap,
    })
}
