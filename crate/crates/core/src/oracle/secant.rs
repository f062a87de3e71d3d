//! The second-hypersimplex point configuration, tropical secant membership,
//! star rank search and the cut-metric obstruction.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::pattern::{mixture_feasible, Feasibility, OracleConfig, OracleError, SignMode};
use crate::metric::{pairs, DissimilarityMap};
use crate::rational::Rational;

/// The points `e_i + e_j` of `Δ(2,n)`, one per pair in encoding order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointConfiguration {
    pub n: usize,
    pub points: Vec<Vec<u8>>,
    /// 1-based `"i,j"`.
    pub labels: Vec<String>,
}

impl PointConfiguration {
    /// `<a, point_t>` for a functional `a`.
    pub fn evaluate(&self, t: usize, functional: &[Rational]) -> Rational {
        self.points[t]
            .iter()
            .zip(functional)
            .filter(|(c, _)| **c == 1)
            .map(|(_, a)| a.clone())
            .sum()
    }
}

pub fn delta2n_points(n: usize) -> Result<PointConfiguration, OracleError> {
    if n < 3 {
        return Err(OracleError::TooFewTaxa(n));
    }
    let (points, labels) = pairs(n)
        .map(|(i, j)| {
            let mut p = vec![0u8; n];
            p[i] = 1;
            p[j] = 1;
            (p, format!("{},{}", i + 1, j + 1))
        })
        .unzip();
    Ok(PointConfiguration { n, points, labels })
}

/// Is `heights` in the `k`-th tropical secant of the star cone
/// (`positivity`) or of the linear span? Uses `k + 1` functionals; the
/// witness rows are the facet normals, checked against `Δ(2,n)` before
/// being returned.
pub fn secant_membership(
    n: usize,
    heights: &[Rational],
    k: usize,
    positivity: bool,
    config: &OracleConfig,
) -> Result<Feasibility, OracleError> {
    let sign = if positivity { SignMode::Positive } else { SignMode::Signed };
    let result = mixture_feasible(n, heights, k + 1, sign, config)?;
    if result.is_feasible() {
        let config = delta2n_points(n)?;
        let covered = heights.iter().enumerate().all(|(t, h)| {
            let values: Vec<Rational> = result.witness.iter().map(|a| config.evaluate(t, a)).collect();
            values.iter().all(|v| v <= h) && values.iter().any(|v| v == h)
        });
        assert!(covered, "secant functionals do not cover the lifted configuration");
    }
    Ok(result)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptStatus {
    Feasible,
    Infeasible,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankAttempt {
    pub k: usize,
    pub status: AttemptStatus,
    pub patterns_checked: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RankOutcome {
    /// Smallest feasible `k`.
    Rank { k: usize },
    /// Every `k <= k_max` was refuted.
    AboveKMax,
    /// The budget stopped the search at `k`; smaller values were refuted.
    Undetermined { k: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    pub sign_mode: SignMode,
    pub k_max: usize,
    pub outcome: RankOutcome,
    pub attempts: Vec<RankAttempt>,
    pub witness: Option<Feasibility>,
}

/// Smallest `k` in `1..=k_max` for which `d` is a `k`-star mixture.
pub fn star_rank_bounds(
    d: &DissimilarityMap,
    sign: SignMode,
    k_max: usize,
    config: &OracleConfig,
) -> RankReport {
    let mut attempts = Vec::new();
    for k in 1..=k_max {
        match mixture_feasible(d.n(), d.entries(), k, sign, config) {
            Ok(f) => {
                attempts.push(RankAttempt {
                    k,
                    status: if f.is_feasible() {
                        AttemptStatus::Feasible
                    } else {
                        AttemptStatus::Infeasible
                    },
                    patterns_checked: Some(f.patterns_checked),
                });
                if f.is_feasible() {
                    return RankReport {
                        sign_mode: sign,
                        k_max,
                        outcome: RankOutcome::Rank { k },
                        attempts,
                        witness: Some(f),
                    };
                }
            }
            Err(_) => {
                attempts.push(RankAttempt {
                    k,
                    status: AttemptStatus::BudgetExceeded,
                    patterns_checked: None,
                });
                return RankReport {
                    sign_mode: sign,
                    k_max,
                    outcome: RankOutcome::Undetermined { k },
                    attempts,
                    witness: None,
                };
            }
        }
    }
    RankReport {
        sign_mode: sign,
        k_max,
        outcome: RankOutcome::AboveKMax,
        attempts,
        witness: None,
    }
}

/// Two disjoint zero pairs with a positive cross distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CutObstruction {
    pub zero_pairs: [(usize, usize); 2],
    pub cross: (usize, usize),
}

/// First obstruction in pair order. Any nonnegative star summand is zero on
/// both pairs' taxa, so the cross distance cannot be attained.
pub fn find_cut_obstruction(d: &DissimilarityMap) -> Option<CutObstruction> {
    let zeros: Vec<(usize, usize)> = pairs(d.n()).filter(|&(i, j)| d.get(i, j).is_zero()).collect();
    for (a, &(i, j)) in zeros.iter().enumerate() {
        for &(k, l) in &zeros[a + 1..] {
            if [k, l].iter().any(|t| *t == i || *t == j) {
                continue;
            }
            let cross = [(i, k), (i, l), (j, k), (j, l)]
                .into_iter()
                .find(|&(x, y)| d.get(x, y).is_positive());
            if let Some(cross) = cross {
                return Some(CutObstruction {
                    zero_pairs: [(i, j), (k, l)],
                    cross,
                });
            }
        }
    }
    None
}

pub fn cut_obstruction(d: &DissimilarityMap) -> bool {
    find_cut_obstruction(d).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::pattern::{k_star_feasible, FeasibilityStatus};
    use crate::rational::int;
    use crate::tree::{cut_metric, DoubleStar, Regime, StarTree};

    fn cut() -> DissimilarityMap {
        cut_metric(4, &[vec![0, 1], vec![2, 3]]).unwrap()
    }

    #[test]
    fn hypersimplex_points() {
        let oct = delta2n_points(4).unwrap();
        assert_eq!(oct.points.len(), 6);
        assert_eq!(delta2n_points(5).unwrap().points.len(), 10);
        for p in &delta2n_points(6).unwrap().points {
            assert_eq!(p.iter().map(|&c| c as u32).sum::<u32>(), 2);
        }
        // octahedron: every vertex has exactly one antipode (disjoint support)
        for p in &oct.points {
            let antipodes = oct
                .points
                .iter()
                .filter(|q| p.iter().zip(q.iter()).all(|(a, b)| a + b == 1))
                .count();
            assert_eq!(antipodes, 1);
        }
        assert_eq!(delta2n_points(2), Err(OracleError::TooFewTaxa(2)));
    }

    #[test]
    fn secant_examples() {
        let cfg = OracleConfig::default();
        let q = DoubleStar::new(&[0, 1], int(2), [5, 4, 1, 1].map(int).to_vec(), Regime::Strict)
            .unwrap()
            .metric();
        let s = secant_membership(4, q.entries(), 1, true, &cfg).unwrap();
        assert_eq!(s, k_star_feasible(&q, 2, SignMode::Positive, &cfg).unwrap());
        assert_eq!(
            secant_membership(4, cut().entries(), 1, true, &cfg).unwrap().status,
            FeasibilityStatus::Infeasible
        );
        assert!(secant_membership(4, cut().entries(), 1, false, &cfg).unwrap().is_feasible());
        let star = StarTree::new([1, 2, 3, 4].map(int).to_vec(), Regime::Strict).unwrap().metric();
        assert!(secant_membership(4, star.entries(), 0, true, &cfg).unwrap().is_feasible());
        // negative heights are admissible in the signed setting
        let heights = [-1, 0, 2, -3, 1, 1].map(int);
        assert!(secant_membership(4, &heights, 0, true, &cfg).unwrap().status == FeasibilityStatus::Infeasible);
    }

    #[test]
    fn rank_examples() {
        let cfg = OracleConfig::default();
        let star = StarTree::new([1, 2, 3, 4].map(int).to_vec(), Regime::Strict).unwrap().metric();
        for sign in [SignMode::Positive, SignMode::Nonnegative, SignMode::Signed] {
            assert_eq!(star_rank_bounds(&star, sign, 3, &cfg).outcome, RankOutcome::Rank { k: 1 });
        }
        let r = star_rank_bounds(&cut(), SignMode::Positive, 3, &cfg);
        assert_eq!(r.outcome, RankOutcome::AboveKMax);
        assert_eq!(r.attempts.len(), 3);
        assert_eq!(star_rank_bounds(&cut(), SignMode::Signed, 2, &cfg).outcome, RankOutcome::Rank { k: 2 });
        let tight = OracleConfig { budget: 2, threads: None };
        assert_eq!(
            star_rank_bounds(&cut(), SignMode::Positive, 3, &tight).outcome,
            RankOutcome::Undetermined { k: 2 }
        );
    }

    #[test]
    fn obstruction_examples() {
        assert!(cut_obstruction(&cut()));
        let c5 = cut_metric(5, &[vec![0, 1], vec![2, 3, 4]]).unwrap();
        assert!(cut_obstruction(&c5));
        let d1 = cut_metric(4, &[vec![0], vec![1, 2, 3]]).unwrap();
        assert!(!cut_obstruction(&d1));
        let positive = StarTree::new([1, 1, 1, 1].map(int).to_vec(), Regime::Strict).unwrap().metric();
        assert!(!cut_obstruction(&positive));
        let o = find_cut_obstruction(&cut()).unwrap();
        assert_eq!(o.zero_pairs, [(0, 1), (2, 3)]);
        assert_eq!(o.cross, (0, 2));
    }
}
