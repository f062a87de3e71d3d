//! Dissimilarity maps and the four-point calculus on them.
//!
//! Taxa are indexed from `0` in the Rust API. File formats and reports use
//! 1-based labels. Entries are stored in row-major upper-triangular order:
//! `(0,1), (0,2), …, (0,n-1), (1,2), …, (n-2,n-1)`.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{half, max_ref, Rational};

/// Errors raised when building or querying a [`DissimilarityMap`].
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum MetricError {
    /// An entry is negative.
    #[error("entry for pair ({0},{1}) is negative")]
    NegativeEntry(usize, usize),
    /// The entry vector does not have `n(n-1)/2` values.
    #[error("expected {expected} entries for n = {n}, got {got}")]
    LengthMismatch { n: usize, expected: usize, got: usize },
    /// Fewer than three taxa.
    #[error("at least 3 taxa are required, got {0}")]
    TooFewTaxa(usize),
    /// Two maps on different taxon counts were combined.
    #[error("taxon counts differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
    /// Repeated or out-of-range taxon indices.
    #[error("invalid taxon indices {indices:?} for n = {n}")]
    BadIndices { indices: Vec<usize>, n: usize },
}

/// Number of unordered pairs on `n` taxa.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of the unordered pair `{i, j}` (`i != j`) in the row-major encoding.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j && i < n && j < n);
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// All unordered pairs `(i, j)`, `i < j`, in encoding order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Symmetric nonnegative pairwise distances on `n >= 3` taxa.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DissimilarityMap {
    n: usize,
    entries: Vec<Rational>,
}

impl DissimilarityMap {
    /// Builds a map from its upper-triangular entries.
    pub fn new(n: usize, entries: Vec<Rational>) -> Result<Self, MetricError> {
        if n < 3 {
            return Err(MetricError::TooFewTaxa(n));
        }
        let expected = pair_count(n);
        if entries.len() != expected {
            return Err(MetricError::LengthMismatch {
                n,
                expected,
                got: entries.len(),
            });
        }
        if let Some(((i, j), _)) = pairs(n).zip(&entries).find(|(_, v)| v.is_negative()) {
            return Err(MetricError::NegativeEntry(i, j));
        }
        Ok(Self { n, entries })
    }

    /// Builds a map by evaluating `f(i, j)` for every pair `i < j`.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Rational) -> Result<Self, MetricError> {
        Self::new(n, pairs(n).map(|(i, j)| f(i, j)).collect())
    }

    /// The all-zero map.
    pub fn zero(n: usize) -> Result<Self, MetricError> {
        Self::new(n, vec![Rational::zero(); pair_count(n)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Rational> {
        self.entries
    }

    /// Distance between distinct taxa `i` and `j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[pair_index(self.n, i, j)]
    }

    /// Distance with the zero diagonal included.
    pub fn dist(&self, i: usize, j: usize) -> Rational {
        if i == j {
            Rational::zero()
        } else {
            self.get(i, j).clone()
        }
    }

    /// Multiplies every entry by `factor` (which must be nonnegative).
    pub fn scale(&self, factor: &Rational) -> Result<Self, MetricError> {
        Self::new(self.n, self.entries.iter().map(|v| v * factor).collect())
    }

    fn check_indices(&self, indices: &[usize]) -> Result<(), MetricError> {
        let distinct: BTreeSet<_> = indices.iter().collect();
        if distinct.len() != indices.len() || indices.iter().any(|&i| i >= self.n) {
            return Err(MetricError::BadIndices {
                indices: indices.to_vec(),
                n: self.n,
            });
        }
        Ok(())
    }

    /// Entrywise maximum of two maps.
    pub fn tropical_mix(&self, other: &Self) -> Result<Self, MetricError> {
        if self.n != other.n {
            return Err(MetricError::SizeMismatch(self.n, other.n));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| max_ref(a, b).clone())
            .collect();
        Ok(Self { n: self.n, entries })
    }

    /// Triangle inequality over all triples of distinct taxa.
    pub fn is_metric(&self) -> bool {
        self.first_triangle_violation().is_none()
    }

    /// The first `(i, j, k)` with `D_ij > D_ik + D_kj`, if any.
    pub fn first_triangle_violation(&self) -> Option<(usize, usize, usize)> {
        let n = self.n;
        for (i, j) in pairs(n) {
            for k in (0..n).filter(|&k| k != i && k != j) {
                if self.get(i, j) > &(self.get(i, k) + self.get(k, j)) {
                    return Some((i, j, k));
                }
            }
        }
        None
    }

    /// The three pair sums of the 4-tuple `(i, j, k, l)`.
    pub fn quartet_pairing(
        &self,
        i: usize,
        j: usize,
        k: usize,
        l: usize,
    ) -> Result<QuartetPairing, MetricError> {
        self.check_indices(&[i, j, k, l])?;
        Ok(QuartetPairing::new(
            [i, j, k, l],
            [
                self.get(i, j) + self.get(k, l),
                self.get(i, k) + self.get(j, l),
                self.get(i, l) + self.get(j, k),
            ],
        ))
    }

    /// First 4-subset (in lexicographic order) whose maximum pair sum is attained once.
    pub fn first_four_point_violation(&self) -> Option<QuartetPairing> {
        quadruples(self.n)
            .map(|[i, j, k, l]| self.quartet_pairing(i, j, k, l).expect("distinct indices"))
            .find(|q| q.attaining.len() < 2)
    }

    /// Four-point condition on every 4-subset, plus the metric condition.
    pub fn is_tree_metric(&self) -> bool {
        self.is_metric() && self.first_four_point_violation().is_none()
    }

    /// Metric whose every quartet has three equal pair sums (for `n = 3`:
    /// all triangle slacks nonnegative).
    pub fn is_star_metric(&self) -> bool {
        if self.n == 3 {
            return (0..3).all(|i| {
                let (j, k) = others3(i);
                !(self.get(i, j) + self.get(i, k) - self.get(j, k)).is_negative()
            });
        }
        self.is_metric()
            && quadruples(self.n).all(|[i, j, k, l]| {
                self.quartet_pairing(i, j, k, l)
                    .expect("distinct indices")
                    .attaining
                    .len()
                    == 3
            })
    }

    /// The induced map on `subset`, relabelled `0..subset.len()` in the given order.
    pub fn restrict(&self, subset: &[usize]) -> Result<Self, MetricError> {
        self.check_indices(subset)?;
        if subset.len() < 3 {
            return Err(MetricError::TooFewTaxa(subset.len()));
        }
        Self::from_fn(subset.len(), |a, b| self.get(subset[a], subset[b]).clone())
    }

    /// Pendant weight of taxon `i` in a star realisation, read off the two
    /// smallest other indices: `(D_ij + D_ik - D_jk) / 2`.
    pub fn star_pendant(&self, i: usize) -> Rational {
        let mut others = (0..self.n).filter(|&x| x != i);
        let j = others.next().expect("n >= 3");
        let k = others.next().expect("n >= 3");
        (self.get(i, j) + self.get(i, k) - self.get(j, k)) * half()
    }
}

impl fmt::Display for DissimilarityMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.dist(i, j).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

fn others3(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// All 4-subsets `i < j < k < l` of `0..n` in lexicographic order.
pub fn quadruples(n: usize) -> impl Iterator<Item = [usize; 4]> {
    (0..n).flat_map(move |i| {
        (i + 1..n).flat_map(move |j| {
            (j + 1..n).flat_map(move |k| (k + 1..n).map(move |l| [i, j, k, l]))
        })
    })
}

/// One of the three ways to pair up a 4-tuple `(i, j, k, l)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pairing {
    #[serde(rename = "ij_kl")]
    IjKl,
    #[serde(rename = "ik_jl")]
    IkJl,
    #[serde(rename = "il_jk")]
    IlJk,
}

impl Pairing {
    pub const ALL: [Pairing; 3] = [Pairing::IjKl, Pairing::IkJl, Pairing::IlJk];
}

/// The three pair sums of a 4-tuple and where their maximum is attained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuartetPairing {
    pub taxa: [usize; 4],
    /// `D_ij + D_kl`.
    pub sum_ij_kl: Rational,
    /// `D_ik + D_jl`.
    pub sum_ik_jl: Rational,
    /// `D_il + D_jk`.
    pub sum_il_jk: Rational,
    pub attaining: BTreeSet<Pairing>,
}

impl QuartetPairing {
    fn new(taxa: [usize; 4], sums: [Rational; 3]) -> Self {
        let max = sums.iter().max().expect("three sums").clone();
        let attaining = Pairing::ALL
            .iter()
            .zip(&sums)
            .filter(|(_, s)| **s == max)
            .map(|(p, _)| *p)
            .collect();
        let [a, b, c] = sums;
        Self {
            taxa,
            sum_ij_kl: a,
            sum_ik_jl: b,
            sum_il_jk: c,
            attaining,
        }
    }

    pub fn sums(&self) -> [&Rational; 3] {
        [&self.sum_ij_kl, &self.sum_ik_jl, &self.sum_il_jk]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn ints(values: &[i64]) -> Vec<Rational> {
        values.iter().map(|&v| int(v)).collect()
    }

    fn cut_12_34() -> DissimilarityMap {
        DissimilarityMap::new(4, ints(&[0, 1, 1, 1, 1, 0])).unwrap()
    }

    #[test]
    fn pair_index_matches_row_major_order() {
        for n in 3..8 {
            for (pos, (i, j)) in pairs(n).enumerate() {
                assert_eq!(pair_index(n, i, j), pos);
                assert_eq!(pair_index(n, j, i), pos);
            }
        }
    }

    #[test]
    fn constructor_errors() {
        assert_eq!(
            DissimilarityMap::new(4, ints(&[1, -1, 1, 1, 1, 1])),
            Err(MetricError::NegativeEntry(0, 2))
        );
        assert!(matches!(
            DissimilarityMap::new(4, ints(&[1, 1])),
            Err(MetricError::LengthMismatch { expected: 6, got: 2, .. })
        ));
        assert_eq!(DissimilarityMap::new(2, ints(&[1])), Err(MetricError::TooFewTaxa(2)));
    }

    #[test]
    fn cut_metric_entries_and_predicates() {
        let d = cut_12_34();
        assert_eq!(d.get(0, 1), &int(0));
        assert_eq!(d.get(2, 3), &int(0));
        assert_eq!(d.get(0, 2), &int(1));
        assert!(d.is_metric());
        assert!(d.is_tree_metric());
        assert!(!d.is_star_metric());
        let q = d.quartet_pairing(0, 1, 2, 3).unwrap();
        assert_eq!(q.sums(), [&int(0), &int(2), &int(2)]);
        assert_eq!(q.attaining, [Pairing::IkJl, Pairing::IlJk].into_iter().collect());
    }

    #[test]
    fn zero_map_is_a_star_metric() {
        let z = DissimilarityMap::zero(4).unwrap();
        assert!(z.is_metric() && z.is_tree_metric() && z.is_star_metric());
        assert_eq!(z.quartet_pairing(0, 1, 2, 3).unwrap().attaining.len(), 3);
    }

    #[test]
    fn triangle_violation_on_three_taxa() {
        let d = DissimilarityMap::new(3, ints(&[1, 1, 5])).unwrap();
        assert!(!d.is_metric());
        assert!(!d.is_star_metric());
        assert_eq!(d.first_triangle_violation(), Some((1, 2, 0)));
    }

    #[test]
    fn star_metric_detection() {
        // star(1,2,3,4)
        let d = DissimilarityMap::new(4, ints(&[3, 4, 5, 5, 6, 7])).unwrap();
        assert!(d.is_star_metric());
        let q = d.quartet_pairing(0, 1, 2, 3).unwrap();
        assert_eq!(q.attaining.len(), 3);
        assert_eq!((0..4).map(|i| d.star_pendant(i)).collect::<Vec<_>>(), ints(&[1, 2, 3, 4]));
        // quartet (12|34) with g = 2 is not a star
        let t = DissimilarityMap::new(4, ints(&[9, 8, 8, 7, 7, 2])).unwrap();
        assert!(t.is_tree_metric() && !t.is_star_metric());
    }

    /// Brute-force search for the lexicographically first metric on four
    /// taxa with entries in {0,1,2} that violates the four-point condition.
    /// The sums are recomputed here independently of `quartet_pairing`.
    fn first_small_violation() -> Vec<i64> {
        for code in 0..3i64.pow(6) {
            let mut v = [0i64; 6];
            let mut c = code;
            for slot in v.iter_mut().rev() {
                *slot = c % 3;
                c /= 3;
            }
            let d = |i: usize, j: usize| if i == j { 0 } else { v[pair_index(4, i, j)] };
            let metric = (0..4).all(|i| {
                (0..4).all(|j| (0..4).all(|k| d(i, j) <= d(i, k) + d(k, j)))
            });
            let sums = [d(0, 1) + d(2, 3), d(0, 2) + d(1, 3), d(0, 3) + d(1, 2)];
            let max = *sums.iter().max().unwrap();
            if metric && sums.iter().filter(|&&s| s == max).count() == 1 {
                return v.to_vec();
            }
        }
        unreachable!("a violating map exists")
    }

    #[test]
    fn four_point_violation_found_by_enumeration() {
        let found = first_small_violation();
        // Frozen from the enumeration above.
        assert_eq!(found, vec![1, 1, 1, 1, 1, 2]);
        let d = DissimilarityMap::new(4, ints(&found)).unwrap();
        assert!(d.is_metric());
        assert!(!d.is_tree_metric());
        // The hand-built instance (6,3,3,3,3,2): sums 8, 6, 6.
        let d = DissimilarityMap::new(4, ints(&[6, 3, 3, 3, 3, 2])).unwrap();
        assert!(d.is_metric() && !d.is_tree_metric());
        let v = d.first_four_point_violation().unwrap();
        assert_eq!(v.sums(), [&int(8), &int(6), &int(6)]);
    }

    #[test]
    fn mix_of_stars() {
        let a = DissimilarityMap::new(4, ints(&[2, 2, 2, 2, 2, 2])).unwrap();
        let b = DissimilarityMap::new(4, ints(&[3, 3, 3, 2, 2, 2])).unwrap();
        assert_eq!(a.tropical_mix(&b).unwrap(), b);
        assert_eq!(a.tropical_mix(&a).unwrap(), a);
        let c = DissimilarityMap::zero(5).unwrap();
        assert_eq!(a.tropical_mix(&c), Err(MetricError::SizeMismatch(4, 5)));
        // star(2,6,1,1) ⊕ star(15/2,3/2,1/2,1/2) = quartet e=(5,4,1,1), g=2
        let d = DissimilarityMap::new(4, ints(&[8, 3, 3, 7, 7, 2])).unwrap();
        let dbar = DissimilarityMap::new(
            4,
            vec![int(9), int(8), int(8), int(2), int(2), int(1)],
        )
        .unwrap();
        assert_eq!(
            d.tropical_mix(&dbar).unwrap().entries(),
            ints(&[9, 8, 8, 7, 7, 2]).as_slice()
        );
    }

    #[test]
    fn restrict_relabels_in_order() {
        // cut metric {1,2} ⊔ {3,4,5}
        let d = DissimilarityMap::from_fn(5, |i, j| int(((i < 2) != (j < 2)) as i64)).unwrap();
        assert_eq!(d.restrict(&[0, 1, 2, 3]).unwrap(), cut_12_34());
        assert_eq!(d.restrict(&[0, 1, 2, 3, 4]).unwrap(), d);
        let r = d.restrict(&[3, 0, 1]).unwrap();
        assert_eq!(r.get(0, 1), &int(1));
        assert_eq!(r.get(1, 2), &int(0));
        assert!(matches!(d.restrict(&[0, 0, 1]), Err(MetricError::BadIndices { .. })));
        assert!(matches!(d.restrict(&[0, 1, 9]), Err(MetricError::BadIndices { .. })));
        assert_eq!(d.restrict(&[0, 1]), Err(MetricError::TooFewTaxa(2)));
    }

    #[test]
    fn quartet_pairing_rejects_bad_indices() {
        let d = cut_12_34();
        assert!(d.quartet_pairing(0, 1, 1, 2).is_err());
        assert!(d.quartet_pairing(0, 1, 2, 4).is_err());
    }
}
