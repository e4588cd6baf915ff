//! Exact convex-hull membership by phase-one simplex over rationals.
//!
//! Feasibility of `Σ λᵢ pᵢ = t, Σ λᵢ = 1, λ ≥ 0` is decided with Bland's rule,
//! so the method terminates on degenerate inputs. When the system is
//! infeasible the optimal phase-one duals `(u, w)` satisfy
//! `u·pᵢ + w ≤ 0 < u·t + w`, and `u` is returned as a separating direction.

use num::{BigInt, Integer, One, Signed, Zero};

use crate::rational::Q;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HullMembership {
    /// Convex weights reproducing the target exactly.
    Inside(Vec<Q>),
    /// A direction `y` with `y·t > max_i y·pᵢ`.
    Outside(Vec<Q>),
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y·target > y·p` for every point, checked exactly.
pub fn separates(points: &[Vec<Q>], target: &[Q], y: &[Q]) -> bool {
    let lhs = dot(y, target);
    points.iter().all(|p| dot(y, p) < lhs)
}

/// Weights are nonnegative, sum to one and reproduce the target.
pub fn reconstructs(points: &[Vec<Q>], target: &[Q], weights: &[Q]) -> bool {
    if weights.len() != points.len()
        || weights.iter().any(|w| w.is_negative())
        || weights.iter().sum::<Q>() != Q::one()
    {
        return false;
    }
    (0..target.len()).all(|j| {
        let v: Q = points.iter().zip(weights).map(|(p, w)| &p[j] * w).sum();
        v == target[j]
    })
}

pub fn hull_membership(points: &[Vec<Q>], target: &[Q]) -> HullMembership {
    let d = target.len();
    if points.is_empty() {
        return HullMembership::Outside(vec![Q::zero(); d]);
    }
    match phase_one(points, target) {
        Ok(w) => HullMembership::Inside(w),
        Err(y) => {
            let sep = axis_separator(points, target).unwrap_or_else(|| primitive(y));
            debug_assert!(separates(points, target, &sep));
            HullMembership::Outside(sep)
        }
    }
}

/// Prefers `±eⱼ` (smallest `j`, `+` first) when a coordinate alone separates.
fn axis_separator(points: &[Vec<Q>], target: &[Q]) -> Option<Vec<Q>> {
    let d = target.len();
    for j in 0..d {
        for sign in [1i64, -1] {
            let mut y = vec![Q::zero(); d];
            y[j] = Q::from_integer(BigInt::from(sign));
            if separates(points, target, &y) {
                return Some(y);
            }
        }
    }
    None
}

/// Scales a direction to coprime integers.
fn primitive(y: Vec<Q>) -> Vec<Q> {
    let lcm = y
        .iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let ints: Vec<BigInt> = y.iter().map(|v| (v * Q::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if g.is_zero() {
        return y;
    }
    ints.into_iter().map(|v| Q::from_integer(v / &g)).collect()
}

/// Returns convex weights, or the unreduced dual direction on infeasibility.
fn phase_one(points: &[Vec<Q>], target: &[Q]) -> Result<Vec<Q>, Vec<Q>> {
    let k = points.len();
    let d = target.len();
    let m = d + 1;
    let cols = k + m;
    let rhs = cols;

    // rows: one per coordinate plus the normalisation row
    let mut sign = vec![Q::one(); m];
    let mut t: Vec<Vec<Q>> = Vec::with_capacity(m);
    for r in 0..m {
        let mut row = vec![Q::zero(); cols + 1];
        for (i, p) in points.iter().enumerate() {
            row[i] = if r < d { p[r].clone() } else { Q::one() };
        }
        row[k + r] = Q::one();
        row[rhs] = if r < d { target[r].clone() } else { Q::one() };
        if row[rhs].is_negative() {
            sign[r] = -Q::one();
            for (c, v) in row.iter_mut().enumerate() {
                if c != k + r {
                    *v = -v.clone();
                }
            }
        }
        t.push(row);
    }
    let mut basis: Vec<usize> = (k..k + m).collect();
    let mut obj = vec![Q::zero(); cols + 1];
    for c in (0..k).chain(std::iter::once(rhs)) {
        obj[c] = -t.iter().map(|row| &row[c]).sum::<Q>();
    }

    loop {
        let Some(enter) = (0..cols).find(|&c| obj[c].is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, Q)> = None;
        for r in 0..m {
            if t[r][enter].is_positive() {
                let ratio = &t[r][rhs] / &t[r][enter];
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        // phase one is bounded below by zero, so some row always qualifies
        let (pr, _) = leave.expect("bounded phase-one objective");
        let piv = t[pr][enter].clone();
        for v in t[pr].iter_mut() {
            *v /= &piv;
        }
        let pivot_row = t[pr].clone();
        for (r, row) in t.iter_mut().enumerate() {
            if r != pr && !row[enter].is_zero() {
                let f = row[enter].clone();
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= &f * pv;
                }
            }
        }
        let f = obj[enter].clone();
        for (v, pv) in obj.iter_mut().zip(&pivot_row) {
            *v -= &f * pv;
        }
        basis[pr] = enter;
    }

    if obj[rhs].is_zero() {
        let mut w = vec![Q::zero(); k];
        for (r, &b) in basis.iter().enumerate() {
            if b < k {
                w[b] = t[r][rhs].clone();
            }
        }
        Ok(w)
    } else {
        // reduced cost of artificial r is 1 - y_r
        let y: Vec<Q> = (0..d)
            .map(|r| (Q::one() - &obj[k + r]) * &sign[r])
            .collect();
        Err(y)
    }
}

/// Indices of the points that are not convex combinations of the others.
/// Duplicates keep their first occurrence.
pub fn reduce_points(points: &[Vec<Q>]) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !kept.iter().any(|&j| points[j] == *p) {
            kept.push(i);
        }
    }
    let mut pos = 0;
    while pos < kept.len() {
        let others: Vec<Vec<Q>> = kept
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != pos)
            .map(|(_, &j)| points[j].clone())
            .collect();
        let redundant = !others.is_empty()
            && matches!(hull_membership(&others, &points[kept[pos]]), HullMembership::Inside(_));
        if redundant {
            kept.remove(pos);
        } else {
            pos += 1;
        }
    }
    kept
}
