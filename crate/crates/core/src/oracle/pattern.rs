//! Exhaustive k-star feasibility by achievement-pattern enumeration.
//!
//! A pattern assigns each pair `{i,j}` to the star attaining `D_ij`. For a
//! fixed pattern the constraints decouple per star: star `m` must satisfy
//! `p_i + p_j = D_ij` on its assigned pairs and `p_i + p_j <= D_ij` on all
//! pairs. Feasibility of a star therefore depends only on its pair set, is
//! monotone under adding pairs, and is memoized on a bitmask.
//!
//! Patterns are restricted growth strings (pair `t` goes to a star index at
//! most one past the largest used so far), which removes the `k!` relabeling
//! symmetry. The depth-first search visits them in lexicographic order, so
//! the first feasible pattern found is the lexicographically smallest.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::linear::{solve_linear, LinearOutcome, LinearSystem, Relation};
use crate::metric::{pair_count, pair_index, pairs, DissimilarityMap};
use crate::rational::{int, serde_str, Rational};

/// Default cap on `k^C(n,2)`.
pub const DEFAULT_BUDGET: u64 = 65_536;

/// Pair masks are `u64`.
const MAX_PAIRS: usize = 64;

/// Number of top-level prefixes handed to the thread pool is at least this.
const MIN_TASKS: usize = 64;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    /// `k^C(n,2)` exceeds the configured budget.
    #[error("pattern space {k}^{pairs} exceeds the budget of {budget}")]
    BudgetExceeded { k: usize, pairs: usize, budget: u64 },
    #[error("the number of summands must be at least 1")]
    InvalidK,
    #[error("expected {expected} heights for n = {n}, got {got}")]
    LengthMismatch { n: usize, expected: usize, got: usize },
    #[error("at least 3 taxa are required, got {0}")]
    TooFewTaxa(usize),
    #[error("pattern has {got} entries, expected {expected}, each below k = {k}")]
    BadPattern { expected: usize, got: usize, k: usize },
    #[error("could not build a thread pool: {0}")]
    ThreadPool(String),
}

/// Sign constraint on star weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignMode {
    /// Every weight `> 0`.
    #[default]
    Positive,
    /// Every weight `>= 0`.
    Nonnegative,
    /// Unconstrained.
    Signed,
}

impl SignMode {
    pub fn admits(self, value: &Rational) -> bool {
        match self {
            SignMode::Positive => value.is_positive(),
            SignMode::Nonnegative => !value.is_negative(),
            SignMode::Signed => true,
        }
    }
}

/// Enumeration budget and parallelism.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    /// Upper bound on `k^C(n,2)`.
    pub budget: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            threads: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
}

/// Result of a k-star query.
///
/// For a feasible query `witness` holds `k` weight vectors whose entrywise
/// max of `p_i + p_j` reproduces the input, and `pattern[t]` is the star
/// attaining pair `t`. `patterns_checked` is the position of that pattern in
/// the symmetry-reduced lexicographic order, or the size of the whole
/// reduced space when infeasible.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feasibility {
    pub status: FeasibilityStatus,
    pub n: usize,
    pub k: usize,
    pub sign_mode: SignMode,
    #[serde(with = "serde_str::vec_vec")]
    pub witness: Vec<Vec<Rational>>,
    #[serde(with = "pattern_map")]
    pub pattern: Vec<usize>,
    pub patterns_checked: u64,
    pub nodes_visited: u64,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }
}

/// `{"i,j": m}` with 1-based taxa and star indices.
mod pattern_map {
    use super::*;
    use serde::{de::Error, Deserializer, Serializer};

    fn taxa_for(len: usize) -> usize {
        (2..).find(|&n| pair_count(n) >= len).unwrap_or(2)
    }

    pub fn serialize<S: Serializer>(pattern: &[usize], s: S) -> Result<S::Ok, S::Error> {
        let n = taxa_for(pattern.len());
        let map: BTreeMap<(usize, usize), usize> =
            pairs(n).zip(pattern).map(|(p, m)| (p, m + 1)).collect();
        s.collect_map(map.into_iter().map(|((i, j), m)| (format!("{},{}", i + 1, j + 1), m)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
        let raw = BTreeMap::<String, usize>::deserialize(d)?;
        let mut keyed = Vec::with_capacity(raw.len());
        for (key, m) in raw {
            let (i, j) = key
                .split_once(',')
                .and_then(|(i, j)| Some((i.trim().parse::<usize>().ok()?, j.trim().parse::<usize>().ok()?)))
                .filter(|&(i, j)| i >= 1 && j > i && m >= 1)
                .ok_or_else(|| D::Error::custom(format!("bad pattern entry {key:?}: {m}")))?;
            keyed.push(((i - 1, j - 1), m - 1));
        }
        if keyed.is_empty() {
            return Ok(Vec::new());
        }
        let n = taxa_for(keyed.len());
        if pair_count(n) != keyed.len() {
            return Err(D::Error::custom("pattern does not cover every pair"));
        }
        let mut out = vec![0; keyed.len()];
        for ((i, j), m) in keyed {
            if j >= n {
                return Err(D::Error::custom("pattern taxon out of range"));
            }
            out[pair_index(n, i, j)] = m;
        }
        Ok(out)
    }
}

/// Decides whether `d` is the tropical mixture of `k` stars in `sign` mode.
pub fn k_star_feasible(
    d: &DissimilarityMap,
    k: usize,
    sign: SignMode,
    config: &OracleConfig,
) -> Result<Feasibility, OracleError> {
    mixture_feasible(d.n(), d.entries(), k, sign, config)
}

/// [`k_star_feasible`] on raw heights, which may be negative.
pub fn mixture_feasible(
    n: usize,
    heights: &[Rational],
    k: usize,
    sign: SignMode,
    config: &OracleConfig,
) -> Result<Feasibility, OracleError> {
    if n < 3 {
        return Err(OracleError::TooFewTaxa(n));
    }
    let np = pair_count(n);
    if heights.len() != np {
        return Err(OracleError::LengthMismatch {
            n,
            expected: np,
            got: heights.len(),
        });
    }
    if k == 0 {
        return Err(OracleError::InvalidK);
    }
    check_budget(k, np, config.budget)?;
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| OracleError::ThreadPool(e.to_string()))?
            .install(|| Ok(search(n, heights, k, sign))),
        None => Ok(search(n, heights, k, sign)),
    }
}

/// Errors unless `k^pairs <= budget` (and the pairs fit a bitmask).
pub fn check_budget(k: usize, np: usize, budget: u64) -> Result<(), OracleError> {
    let size = (k as u128).checked_pow(np as u32);
    let within = np <= MAX_PAIRS && size.is_some_and(|s| s <= budget as u128);
    if within {
        Ok(())
    } else {
        Err(OracleError::BudgetExceeded { k, pairs: np, budget })
    }
}

/// Size of the symmetry-reduced pattern space: `Σ_{j<=k} S(pairs, j)`.
pub fn reduced_pattern_count(np: usize, k: usize) -> u64 {
    Completions::new(np, k).count(0, 0)
}

/// `count(t, used)`: restricted growth completions of positions `t..`.
struct Completions {
    table: Vec<Vec<u64>>,
}

impl Completions {
    fn new(np: usize, k: usize) -> Self {
        let mut table = vec![vec![0u64; k + 1]; np + 1];
        table[np].iter_mut().for_each(|c| *c = 1);
        for t in (0..np).rev() {
            for used in 0..=k {
                let stay = (used as u64).saturating_mul(table[t + 1][used]);
                let open = if used < k { table[t + 1][used + 1] } else { 0 };
                table[t][used] = stay.saturating_add(open);
            }
        }
        Self { table }
    }

    fn count(&self, t: usize, used: usize) -> u64 {
        self.table[t][used]
    }

    /// 1-based position of `pattern` in lexicographic order.
    fn rank(&self, pattern: &[usize]) -> u64 {
        let mut rank = 1u64;
        let mut used = 0;
        for (t, &m) in pattern.iter().enumerate() {
            for smaller in 0..m {
                rank += self.count(t + 1, used.max(smaller + 1));
            }
            used = used.max(m + 1);
        }
        rank
    }
}

struct Search<'a> {
    n: usize,
    heights: &'a [Rational],
    k: usize,
    sign: SignMode,
    pair_list: Vec<(usize, usize)>,
    cache: Mutex<HashMap<u64, Option<Vec<Rational>>>>,
}

impl Search<'_> {
    /// A star attaining exactly the pairs in `mask` (and below elsewhere).
    fn star(&self, mask: u64) -> Option<Vec<Rational>> {
        if let Some(hit) = self.cache.lock().unwrap().get(&mask) {
            return hit.clone();
        }
        let result = match solve_linear(&star_system(self.n, self.heights, mask, self.sign)) {
            LinearOutcome::Feasible(x) => Some(x),
            LinearOutcome::Infeasible { .. } => None,
        };
        self.cache.lock().unwrap().insert(mask, result.clone());
        result
    }

    fn feasible(&self, mask: u64) -> bool {
        if let Some(hit) = self.cache.lock().unwrap().get(&mask) {
            return hit.is_some();
        }
        self.star(mask).is_some()
    }

    /// Depth-first completion of `pattern[..t]`; returns true on success
    /// with `pattern` filled in.
    fn dfs(&self, t: usize, pattern: &mut Vec<usize>, masks: &mut [u64], used: usize, nodes: &mut u64) -> bool {
        if t == self.pair_list.len() {
            return true;
        }
        for m in 0..(used + 1).min(self.k) {
            let next = masks[m] | (1u64 << t);
            if !self.feasible(next) {
                continue;
            }
            *nodes += 1;
            let saved = masks[m];
            masks[m] = next;
            pattern.push(m);
            if self.dfs(t + 1, pattern, masks, used.max(m + 1), nodes) {
                return true;
            }
            pattern.pop();
            masks[m] = saved;
        }
        false
    }
}

/// System for one star: equality on `mask`, `<=` elsewhere, sign rows.
fn star_system(n: usize, heights: &[Rational], mask: u64, sign: SignMode) -> LinearSystem {
    let mut sys = LinearSystem::new(n);
    for (t, (i, j)) in pairs(n).enumerate() {
        let relation = if mask >> t & 1 == 1 { Relation::Eq } else { Relation::Le };
        sys.add_sparse(&[(i, int(1)), (j, int(1))], relation, heights[t].clone())
            .expect("indices in range");
    }
    add_sign_rows(&mut sys, 0, n, sign);
    sys
}

fn add_sign_rows(sys: &mut LinearSystem, offset: usize, n: usize, sign: SignMode) {
    let relation = match sign {
        SignMode::Positive => Relation::Gt,
        SignMode::Nonnegative => Relation::Ge,
        SignMode::Signed => return,
    };
    for i in 0..n {
        sys.add_sparse(&[(offset + i, int(1))], relation, Rational::zero())
            .expect("indices in range");
    }
}

/// All restricted growth prefixes of length `len` with at most `k` blocks.
fn prefixes(len: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                let used = p.iter().max().map_or(0, |m| m + 1);
                (0..(used + 1).min(k)).map(move |m| {
                    let mut q = p.clone();
                    q.push(m);
                    q
                })
            })
            .collect();
    }
    out
}

fn search(n: usize, heights: &[Rational], k: usize, sign: SignMode) -> Feasibility {
    let pair_list: Vec<(usize, usize)> = pairs(n).collect();
    let np = pair_list.len();
    let completions = Completions::new(np, k);
    let mut split = 0;
    while split < np && prefixes(split, k).len() < MIN_TASKS {
        split += 1;
    }
    let tasks = prefixes(split, k);
    let engine = Search {
        n,
        heights,
        k,
        sign,
        pair_list,
        cache: Mutex::new(HashMap::new()),
    };
    let nodes: Vec<AtomicU64> = tasks.iter().map(|_| AtomicU64::new(0)).collect();

    let found = tasks.par_iter().enumerate().find_map_first(|(idx, prefix)| {
        let mut masks = vec![0u64; k];
        let mut count = 0u64;
        for (t, &m) in prefix.iter().enumerate() {
            masks[m] |= 1u64 << t;
            if !engine.feasible(masks[m]) {
                return None;
            }
            count += 1;
        }
        let used = prefix.iter().max().map_or(0, |m| m + 1);
        let mut pattern = prefix.clone();
        let ok = engine.dfs(prefix.len(), &mut pattern, &mut masks, used, &mut count);
        nodes[idx].store(count, Ordering::Relaxed);
        ok.then_some((idx, pattern, masks))
    });

    match found {
        Some((idx, pattern, masks)) => {
            let stars: Vec<Vec<Rational>> = masks
                .iter()
                .filter(|&&mask| mask != 0)
                .map(|&mask| engine.star(mask).expect("mask was checked feasible"))
                .collect();
            let mut witness = stars.clone();
            while witness.len() < k {
                witness.push(stars[0].clone());
            }
            assert!(
                verifies(n, heights, &witness, sign),
                "oracle witness failed verification"
            );
            Feasibility {
                status: FeasibilityStatus::Feasible,
                n,
                k,
                sign_mode: sign,
                witness,
                patterns_checked: completions.rank(&pattern),
                pattern,
                nodes_visited: nodes[..=idx].iter().map(|c| c.load(Ordering::Relaxed)).sum(),
            }
        }
        None => Feasibility {
            status: FeasibilityStatus::Infeasible,
            n,
            k,
            sign_mode: sign,
            witness: Vec::new(),
            pattern: Vec::new(),
            patterns_checked: completions.count(0, 0),
            nodes_visited: nodes.iter().map(|c| c.load(Ordering::Relaxed)).sum(),
        },
    }
}

/// Does `max_m (p^m_i + p^m_j)` equal `heights` on every pair, with every
/// weight admitted by `sign`?
pub fn verifies(n: usize, heights: &[Rational], stars: &[Vec<Rational>], sign: SignMode) -> bool {
    if stars.is_empty() || heights.len() != pair_count(n) {
        return false;
    }
    if stars.iter().any(|p| p.len() != n || !p.iter().all(|v| sign.admits(v))) {
        return false;
    }
    pairs(n).zip(heights).all(|((i, j), h)| {
        stars
            .iter()
            .map(|p| &p[i] + &p[j])
            .max()
            .is_some_and(|top| &top == h)
    })
}

/// The full `k·n`-variable system of one achievement pattern; variable
/// `m·n + i` is the weight of taxon `i` in star `m`.
pub fn pattern_system(
    d: &DissimilarityMap,
    pattern: &[usize],
    k: usize,
    sign: SignMode,
) -> Result<LinearSystem, OracleError> {
    let n = d.n();
    let np = pair_count(n);
    if pattern.len() != np || pattern.iter().any(|&m| m >= k) {
        return Err(OracleError::BadPattern {
            expected: np,
            got: pattern.len(),
            k,
        });
    }
    let mut sys = LinearSystem::new(k * n);
    for m in 0..k {
        for (t, (i, j)) in pairs(n).enumerate() {
            let relation = if pattern[t] == m { Relation::Eq } else { Relation::Le };
            sys.add_sparse(&[(m * n + i, int(1)), (m * n + j, int(1))], relation, d.entries()[t].clone())
                .expect("indices in range");
        }
        add_sign_rows(&mut sys, m * n, n, sign);
    }
    Ok(sys)
}
