//! Kendall's τ-b between paired observations, and between rankings of obstacles.
//!
//! The pair counts follow Knight's algorithm: sort by `(x, y)`, count ties,
//! then count discordant pairs as the swaps a merge sort on `y` performs.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attribution::ObjectImportance;
use crate::world::ObstacleId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KendallError {
    #[error("need at least 2 elements, got {0}")]
    TooFew(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("rankings do not cover the same elements")]
    ElementMismatch,
    #[error("ranking contains a duplicate element")]
    Duplicate,
    #[error("tau undefined: one side is entirely tied")]
    Undefined,
    #[error("non-finite score")]
    NonFinite,
}

/// Number of pairs `k(k−1)/2` within each run of equal consecutive keys.
fn tied_pairs<T: PartialEq>(sorted: impl Iterator<Item = T>) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut last: Option<T> = None;
    for v in sorted {
        if last.as_ref() == Some(&v) {
            run += 1;
        } else {
            total += run * (run + 1) / 2;
            run = 0;
        }
        last = Some(v);
    }
    total + run * (run + 1) / 2
}

/// Stable merge sort on `v` returning the number of inversions (strictly greater
/// element before a smaller one).
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// τ-b = (n_c − n_d) / sqrt((n0 − n1)(n0 − n2)); equals τ-a when neither side has ties.
pub fn tau_b(x: &[f64], y: &[f64]) -> Result<f64, KendallError> {
    if x.len() != y.len() {
        return Err(KendallError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(KendallError::TooFew(n));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(KendallError::NonFinite);
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let n1 = tied_pairs(pairs.iter().map(|p| p.0));
    let joint = tied_pairs(pairs.iter().copied());
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let discordant = merge_count(&mut ys, &mut Vec::with_capacity(n));
    let n2 = tied_pairs(ys.iter().copied());

    let denom = ((n0 - n1) as f64) * ((n0 - n2) as f64);
    if denom == 0.0 {
        return Err(KendallError::Undefined);
    }
    // n_c − n_d = n0 − n1 − n2 + n3 − 2 n_d
    let numer = n0 as i64 - n1 as i64 - n2 as i64 + joint as i64 - 2 * discordant as i64;
    Ok(numer as f64 / denom.sqrt())
}

/// How the ground truth enters τ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieMode {
    /// Compare against the tie-broken ground-truth order.
    #[default]
    Strict,
    /// Compare against raw scores, so equal scores stay tied.
    TieAware,
}

fn check_permutation(submitted: &[ObstacleId], expected: &[ObstacleId]) -> Result<(), KendallError> {
    if submitted.len() != expected.len() {
        return Err(KendallError::LengthMismatch(submitted.len(), expected.len()));
    }
    let seen: HashSet<_> = submitted.iter().collect();
    if seen.len() != submitted.len() {
        return Err(KendallError::Duplicate);
    }
    if expected.iter().any(|id| !seen.contains(id)) {
        return Err(KendallError::ElementMismatch);
    }
    Ok(())
}

/// τ between two orders of the same ids, most important first.
pub fn ranking_tau(a: &[ObstacleId], b: &[ObstacleId]) -> Result<f64, KendallError> {
    check_permutation(a, b)?;
    let position = |order: &[ObstacleId], id: ObstacleId| {
        order.iter().position(|&o| o == id).expect("checked permutation") as f64
    };
    let xs: Vec<f64> = b.iter().map(|&id| -position(a, id)).collect();
    let ys: Vec<f64> = b.iter().map(|&id| -position(b, id)).collect();
    tau_b(&xs, &ys)
}

/// τ between a submitted order (most important first) and per-object scores,
/// where equal scores count as ties.
pub fn ranking_tau_scores(
    submitted: &[ObstacleId],
    scores: &[(ObstacleId, f64)],
) -> Result<f64, KendallError> {
    let ids: Vec<ObstacleId> = scores.iter().map(|s| s.0).collect();
    check_permutation(submitted, &ids)?;
    let xs: Vec<f64> = ids
        .iter()
        .map(|id| -(submitted.iter().position(|o| o == id).expect("checked") as f64))
        .collect();
    let ys: Vec<f64> = scores.iter().map(|s| s.1).collect();
    tau_b(&xs, &ys)
}

/// Scores a submitted ranking against frozen object importance.
pub fn kendall_tau(
    submitted: &[ObstacleId],
    truth: &ObjectImportance,
    mode: TieMode,
) -> Result<f64, KendallError> {
    match mode {
        TieMode::Strict => ranking_tau(submitted, &truth.ground_truth_ranking),
        TieMode::TieAware => {
            let scores: Vec<(ObstacleId, f64)> = truth.scores.iter().map(|s| (s.id, s.score)).collect();
            ranking_tau_scores(submitted, &scores)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<ObstacleId> {
        v.iter().copied().map(ObstacleId).collect()
    }

    #[test]
    fn identical_is_one() {
        let r = ids(&[3, 1, 4, 0, 2]);
        assert_eq!(ranking_tau(&r, &r).unwrap(), 1.0);
    }

    #[test]
    fn reversal_is_minus_one() {
        let r = ids(&[0, 1, 2, 3, 4]);
        let rev = ids(&[4, 3, 2, 1, 0]);
        assert_eq!(ranking_tau(&r, &rev).unwrap(), -1.0);
    }

    #[test]
    fn adjacent_swap() {
        let r = ids(&[0, 1, 2, 3, 4]);
        let s = ids(&[0, 2, 1, 3, 4]);
        assert!((ranking_tau(&s, &r).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn scipy_reference_with_ties() {
        // scipy.stats.kendalltau([12, 2, 1, 12, 2], [1, 4, 7, 1, 0]) = -0.4714045207910316
        let t = tau_b(&[12.0, 2.0, 1.0, 12.0, 2.0], &[1.0, 4.0, 7.0, 1.0, 0.0]).unwrap();
        assert!((t + 0.4714045207910316).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert_eq!(tau_b(&[1.0], &[1.0]), Err(KendallError::TooFew(1)));
        assert_eq!(tau_b(&[1.0, 2.0], &[1.0]), Err(KendallError::LengthMismatch(2, 1)));
        assert_eq!(tau_b(&[1.0, 1.0], &[1.0, 2.0]), Err(KendallError::Undefined));
        assert_eq!(
            ranking_tau(&ids(&[0, 1, 2, 3]), &ids(&[0, 1, 2, 3, 4])),
            Err(KendallError::LengthMismatch(4, 5))
        );
        assert_eq!(
            ranking_tau(&ids(&[0, 1, 1]), &ids(&[0, 1, 2])),
            Err(KendallError::Duplicate)
        );
        assert_eq!(
            ranking_tau(&ids(&[0, 1, 7]), &ids(&[0, 1, 2])),
            Err(KendallError::ElementMismatch)
        );
    }

    #[test]
    fn tie_aware_oracle_below_one_with_ties() {
        // two objects tied at zero: a strict order can't match all tied pairs
        let scores = [
            (ObstacleId(0), 0.9),
            (ObstacleId(1), 0.0),
            (ObstacleId(2), 0.0),
        ];
        let t = ranking_tau_scores(&ids(&[0, 1, 2]), &scores).unwrap();
        assert!((t - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
