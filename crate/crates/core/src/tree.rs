//! Weighted trees: stars, double stars and general unrooted trees, their path
//! metrics, and reconstruction of the unique tree realising a tree metric.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{pairs, DissimilarityMap, MetricError};
use crate::rational::{half, Rational};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TreeError {
    /// A weight violates the sign constraint of the active regime.
    #[error("weight {value} of {what} is not allowed in the {regime:?} regime")]
    InvalidWeight {
        what: String,
        value: Rational,
        regime: Regime,
    },
    /// The edge list does not describe a tree with leaves `0..n`.
    #[error("not a valid tree: {0}")]
    NotATree(String),
    /// The input does not satisfy the four-point condition.
    #[error("input is not a tree metric")]
    NotTreeMetric,
    /// The requested quartet split does not match the metric.
    #[error("the metric does not display the requested split")]
    WrongSplit,
    /// Blocks are not a partition of the taxa.
    #[error("blocks do not partition the taxa: {0}")]
    NotAPartition(String),
    /// The sides of a double star are malformed.
    #[error("invalid double star sides: {0}")]
    BadSides(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Sign regime for edge weights: strictly positive or merely nonnegative.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    #[default]
    Strict,
    Closed,
}

impl Regime {
    /// Whether `value` is an admissible weight in this regime.
    pub fn admits(self, value: &Rational) -> bool {
        match self {
            Regime::Strict => value.is_positive(),
            Regime::Closed => !value.is_negative(),
        }
    }

    fn check(self, what: impl FnOnce() -> String, value: &Rational) -> Result<(), TreeError> {
        if self.admits(value) {
            Ok(())
        } else {
            Err(TreeError::InvalidWeight {
                what: what(),
                value: value.clone(),
                regime: self,
            })
        }
    }
}

/// A star tree: one pendant weight per taxon.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StarTree {
    #[serde(with = "crate::rational::serde_str::vec")]
    weights: Vec<Rational>,
    #[serde(default)]
    regime: Regime,
}

impl StarTree {
    pub fn new(weights: Vec<Rational>, regime: Regime) -> Result<Self, TreeError> {
        if weights.len() < 3 {
            return Err(MetricError::TooFewTaxa(weights.len()).into());
        }
        for (i, w) in weights.iter().enumerate() {
            regime.check(|| format!("pendant edge {}", i + 1), w)?;
        }
        Ok(Self { weights, regime })
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// True when some pendant weight is zero.
    pub fn is_degenerate(&self) -> bool {
        self.weights.iter().any(Zero::is_zero)
    }

    /// `D_ij = e_i + e_j`.
    pub fn metric(&self) -> DissimilarityMap {
        DissimilarityMap::from_fn(self.n(), |i, j| &self.weights[i] + &self.weights[j])
            .expect("nonnegative weights give a valid map")
    }

    /// The same star as a general tree: leaves `0..n`, centre `n`.
    pub fn to_tree(&self) -> WeightedTree {
        let n = self.n();
        let edges = (0..n).map(|i| (i, n, self.weights[i].clone())).collect();
        WeightedTree::new(n, 1, edges).expect("a star is a tree")
    }
}

/// A tree with a single internal edge of weight `g` separating `side_i` from `side_j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DoubleStar {
    side_i: Vec<usize>,
    side_j: Vec<usize>,
    g: Rational,
    pendant: Vec<Rational>,
    regime: Regime,
}

impl DoubleStar {
    /// Builds a double star on `pendant.len()` taxa with one side given by
    /// `side`; the result is stored in canonical form (smaller side first,
    /// ties broken by the side containing taxon 0).
    pub fn new(
        side: &[usize],
        g: Rational,
        pendant: Vec<Rational>,
        regime: Regime,
    ) -> Result<Self, TreeError> {
        let n = pendant.len();
        let side_set: BTreeSet<usize> = side.iter().copied().collect();
        if side_set.len() != side.len() || side.iter().any(|&i| i >= n) {
            return Err(TreeError::BadSides(format!("{side:?} on {n} taxa")));
        }
        let other: Vec<usize> = (0..n).filter(|i| !side_set.contains(i)).collect();
        let this: Vec<usize> = side_set.into_iter().collect();
        if this.len() < 2 || other.len() < 2 {
            return Err(TreeError::BadSides(
                "each side needs at least two taxa".to_string(),
            ));
        }
        if !g.is_positive() {
            return Err(TreeError::InvalidWeight {
                what: "internal edge".into(),
                value: g,
                regime,
            });
        }
        for (i, w) in pendant.iter().enumerate() {
            regime.check(|| format!("pendant edge {}", i + 1), w)?;
        }
        let (side_i, side_j) = if (this.len(), &this) <= (other.len(), &other) {
            (this, other)
        } else {
            (other, this)
        };
        Ok(Self {
            side_i,
            side_j,
            g,
            pendant,
            regime,
        })
    }

    pub fn n(&self) -> usize {
        self.pendant.len()
    }

    pub fn side_i(&self) -> &[usize] {
        &self.side_i
    }

    pub fn side_j(&self) -> &[usize] {
        &self.side_j
    }

    pub fn g(&self) -> &Rational {
        &self.g
    }

    pub fn pendant(&self) -> &[Rational] {
        &self.pendant
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn is_degenerate(&self) -> bool {
        self.pendant.iter().any(Zero::is_zero)
    }

    /// Whether taxa `a` and `b` lie on opposite sides of the internal edge.
    pub fn crosses(&self, a: usize, b: usize) -> bool {
        self.side_i.contains(&a) != self.side_i.contains(&b)
    }

    pub fn metric(&self) -> DissimilarityMap {
        DissimilarityMap::from_fn(self.n(), |a, b| {
            let base = &self.pendant[a] + &self.pendant[b];
            if self.crosses(a, b) {
                base + &self.g
            } else {
                base
            }
        })
        .expect("nonnegative weights give a valid map")
    }

    pub fn to_tree(&self) -> WeightedTree {
        let n = self.n();
        let (left, right) = (n, n + 1);
        let mut edges: Vec<_> = (0..n)
            .map(|a| {
                let hub = if self.side_i.contains(&a) { left } else { right };
                (a, hub, self.pendant[a].clone())
            })
            .collect();
        edges.push((left, right, self.g.clone()));
        WeightedTree::new(n, 2, edges).expect("a double star is a tree")
    }
}

/// An unrooted tree with leaves `0..n` and internal nodes `n..n+internal`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeightedTree {
    n: usize,
    internal: usize,
    edges: Vec<(usize, usize, Rational)>,
}

type Adjacency = BTreeMap<usize, BTreeMap<usize, Rational>>;

impl WeightedTree {
    /// Validates the edge list. Degree-2 internal nodes and zero weights are
    /// accepted here; [`WeightedTree::canonical`] removes them.
    pub fn new(
        n: usize,
        internal: usize,
        edges: Vec<(usize, usize, Rational)>,
    ) -> Result<Self, TreeError> {
        let bad = |msg: String| Err(TreeError::NotATree(msg));
        if n < 3 {
            return Err(MetricError::TooFewTaxa(n).into());
        }
        let nodes = n + internal;
        if edges.len() + 1 != nodes {
            return bad(format!("{} edges for {nodes} nodes", edges.len()));
        }
        let mut degree = vec![0usize; nodes];
        for (u, v, w) in &edges {
            if *u >= nodes || *v >= nodes || u == v {
                return bad(format!("bad edge ({u},{v})"));
            }
            Regime::Closed.check(|| format!("edge ({u},{v})"), w)?;
            degree[*u] += 1;
            degree[*v] += 1;
        }
        if let Some(leaf) = (0..n).find(|&i| degree[i] != 1) {
            return bad(format!("leaf {} has degree {}", leaf + 1, degree[leaf]));
        }
        if let Some(node) = (n..nodes).find(|&i| degree[i] < 2) {
            return bad(format!("internal node {} has degree {}", node + 1, degree[node]));
        }
        let tree = Self { n, internal, edges };
        let adjacency = tree.adjacency();
        let mut seen = BTreeSet::from([0usize]);
        let mut stack = vec![0usize];
        while let Some(u) = stack.pop() {
            for &v in adjacency[&u].keys() {
                if seen.insert(v) {
                    stack.push(v);
                }
            }
        }
        if seen.len() != nodes {
            return bad("graph is disconnected".to_string());
        }
        Ok(tree)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn internal(&self) -> usize {
        self.internal
    }

    pub fn edges(&self) -> &[(usize, usize, Rational)] {
        &self.edges
    }

    fn adjacency(&self) -> Adjacency {
        let mut adj: Adjacency = (0..self.n + self.internal).map(|v| (v, BTreeMap::new())).collect();
        for (u, v, w) in &self.edges {
            adj.get_mut(u).unwrap().insert(*v, w.clone());
            adj.get_mut(v).unwrap().insert(*u, w.clone());
        }
        adj
    }

    /// Leaf-to-leaf path lengths.
    pub fn metric(&self) -> DissimilarityMap {
        let adj = self.adjacency();
        let mut rows = Vec::with_capacity(self.n);
        for leaf in 0..self.n {
            let mut dist: BTreeMap<usize, Rational> = BTreeMap::from([(leaf, Rational::zero())]);
            let mut stack = vec![leaf];
            while let Some(u) = stack.pop() {
                let du = dist[&u].clone();
                for (v, w) in &adj[&u] {
                    if !dist.contains_key(v) {
                        dist.insert(*v, &du + w);
                        stack.push(*v);
                    }
                }
            }
            rows.push(dist);
        }
        DissimilarityMap::from_fn(self.n, |i, j| rows[i][&j].clone())
            .expect("path lengths are nonnegative")
    }

    /// Canonical form: zero-weight internal edges contracted, degree-2
    /// internal nodes suppressed, internal nodes numbered by
    /// (smallest leaf below, larger subtree first) when rooted at leaf 0,
    /// edges sorted. Two trees are isomorphic as leaf-labelled weighted trees
    /// exactly when their canonical forms are equal.
    pub fn canonical(&self) -> Self {
        let n = self.n;
        let mut adj = self.adjacency();
        // Contract zero-weight edges between internal nodes.
        loop {
            let zero = adj.iter().find_map(|(&u, nbrs)| {
                (u >= n)
                    .then(|| nbrs.iter().find(|(&v, w)| v >= n && w.is_zero()).map(|(&v, _)| v))
                    .flatten()
                    .map(|v| (u, v))
            });
            let Some((keep, gone)) = zero else { break };
            let moved = adj.remove(&gone).unwrap();
            adj.get_mut(&keep).unwrap().remove(&gone);
            for (v, w) in moved {
                if v == keep {
                    continue;
                }
                let nbrs = adj.get_mut(&v).unwrap();
                nbrs.remove(&gone);
                nbrs.insert(keep, w.clone());
                adj.get_mut(&keep).unwrap().insert(v, w);
            }
        }
        // Suppress degree-2 internal nodes.
        while let Some(mid) = adj.iter().find(|(&u, nbrs)| u >= n && nbrs.len() == 2).map(|(&u, _)| u) {
            let nbrs = adj.remove(&mid).unwrap();
            let mut it = nbrs.into_iter();
            let (a, wa) = it.next().unwrap();
            let (b, wb) = it.next().unwrap();
            let w = wa + wb;
            adj.get_mut(&a).unwrap().remove(&mid);
            adj.get_mut(&b).unwrap().remove(&mid);
            adj.get_mut(&a).unwrap().insert(b, w.clone());
            adj.get_mut(&b).unwrap().insert(a, w);
        }
        // Canonical numbering of the remaining internal nodes.
        let mut order: Vec<(usize, Reverse<usize>, usize)> = Vec::new();
        let mut below: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        fn walk(
            adj: &Adjacency,
            n: usize,
            u: usize,
            parent: usize,
            below: &mut BTreeMap<usize, (usize, usize)>,
        ) -> (usize, usize) {
            if u < n && u != parent {
                return (u, 1);
            }
            let mut min = usize::MAX;
            let mut size = 0;
            for &v in adj[&u].keys() {
                if v != parent {
                    let (m, s) = walk(adj, n, v, u, below);
                    min = min.min(m);
                    size += s;
                }
            }
            below.insert(u, (min, size));
            (min, size)
        }
        let root = *adj[&0].keys().next().expect("leaf 0 has a neighbour");
        if root >= n {
            walk(&adj, n, root, 0, &mut below);
        }
        for (&u, &(min, size)) in &below {
            order.push((min, Reverse(size), u));
        }
        order.sort();
        let mut relabel: BTreeMap<usize, usize> = (0..n).map(|i| (i, i)).collect();
        for (pos, (_, _, u)) in order.iter().enumerate() {
            relabel.insert(*u, n + pos);
        }
        let mut edges: Vec<(usize, usize, Rational)> = Vec::new();
        for (&u, nbrs) in &adj {
            for (&v, w) in nbrs {
                let (a, b) = (relabel[&u], relabel[&v]);
                if a < b {
                    edges.push((a, b, w.clone()));
                }
            }
        }
        edges.sort_by_key(|e| (e.0, e.1));
        Self {
            n,
            internal: order.len(),
            edges,
        }
    }

    /// Pendant weight of each leaf.
    pub fn pendants(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.n];
        for (u, v, w) in &self.edges {
            if *u < self.n {
                out[*u] = w.clone();
            } else if *v < self.n {
                out[*v] = w.clone();
            }
        }
        out
    }

    /// Internal edges as leaf splits: the side not containing leaf 0, with
    /// its edge weight.
    pub fn splits(&self) -> BTreeMap<Vec<usize>, Rational> {
        let adj = self.adjacency();
        let mut out = BTreeMap::new();
        for (u, v, w) in &self.edges {
            if *u < self.n || *v < self.n {
                continue;
            }
            let mut side = leaves_beyond(&adj, self.n, *v, *u);
            if side.contains(&0) {
                side = leaves_beyond(&adj, self.n, *u, *v);
            }
            side.sort_unstable();
            out.insert(side, w.clone());
        }
        out
    }
}

fn leaves_beyond(adj: &Adjacency, n: usize, start: usize, blocked: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![(start, blocked)];
    while let Some((u, from)) = stack.pop() {
        if u < n {
            out.push(u);
            continue;
        }
        for &v in adj[&u].keys() {
            if v != from {
                stack.push((v, u));
            }
        }
    }
    out
}

/// Recovers the unique weighted tree realising a tree metric, in canonical form.
///
/// Repeatedly picks the first pair `(a, b)` of active points that is never
/// separated by a strict quartet, joins them at a new node placed at their
/// constant Steiner offset, and recurses until three points remain.
pub fn reconstruct_tree(d: &DissimilarityMap) -> Result<WeightedTree, TreeError> {
    let n = d.n();
    let cap = 2 * n;
    let mut dist = vec![vec![Rational::zero(); cap]; cap];
    for (i, j) in pairs(n) {
        dist[i][j] = d.get(i, j).clone();
        dist[j][i] = d.get(i, j).clone();
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut next = n;
    let mut edges = Vec::new();
    let nonneg = |w: Rational| if w.is_negative() { Err(TreeError::NotTreeMetric) } else { Ok(w) };

    while active.len() > 3 {
        let (a, b) = find_cherry(&dist, &active).ok_or(TreeError::NotTreeMetric)?;
        let rest: Vec<usize> = active.iter().copied().filter(|&c| c != a && c != b).collect();
        let offsets: BTreeSet<Rational> = rest
            .iter()
            .map(|&c| (&dist[a][b] + &dist[a][c] - &dist[b][c]) * half())
            .collect();
        if offsets.len() != 1 {
            return Err(TreeError::NotTreeMetric);
        }
        let wa = nonneg(offsets.into_iter().next().unwrap())?;
        let wb = nonneg(&dist[a][b] - &wa)?;
        let x = next;
        next += 1;
        for &c in &rest {
            let dx = nonneg(&dist[a][c] - &wa)?;
            dist[x][c] = dx.clone();
            dist[c][x] = dx;
        }
        edges.push((a, x, wa));
        edges.push((b, x, wb));
        active.retain(|&c| c != a && c != b);
        active.push(x);
    }
    let [a, b, c] = [active[0], active[1], active[2]];
    let hub = next;
    next += 1;
    edges.push((a, hub, nonneg((&dist[a][b] + &dist[a][c] - &dist[b][c]) * half())?));
    edges.push((b, hub, nonneg((&dist[a][b] + &dist[b][c] - &dist[a][c]) * half())?));
    edges.push((c, hub, nonneg((&dist[a][c] + &dist[b][c] - &dist[a][b]) * half())?));

    let tree = WeightedTree::new(n, next - n, edges)?.canonical();
    if &tree.metric() != d {
        return Err(TreeError::NotTreeMetric);
    }
    Ok(tree)
}

fn find_cherry(dist: &[Vec<Rational>], active: &[usize]) -> Option<(usize, usize)> {
    for (pa, &a) in active.iter().enumerate() {
        for &b in &active[pa + 1..] {
            let rest: Vec<usize> = active.iter().copied().filter(|&c| c != a && c != b).collect();
            let compatible = rest.iter().enumerate().all(|(pc, &c)| {
                rest[pc + 1..].iter().all(|&e| {
                    let ab = &dist[a][b] + &dist[c][e];
                    ab <= &dist[a][c] + &dist[b][e] && ab <= &dist[a][e] + &dist[b][c]
                })
            });
            if compatible {
                return Some((a, b));
            }
        }
    }
    None
}

/// Topology of a dissimilarity map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TopologyClass {
    /// A star metric; `degenerate` when some recovered pendant weight is zero.
    Star { star: StarTree, degenerate: bool },
    /// Exactly one internal edge.
    DoubleStar { tree: DoubleStar, degenerate: bool },
    /// Two or more internal edges.
    OtherTree { tree: WeightedTree },
    /// Fails the metric or four-point condition.
    NotTreeMetric {
        triangle: Option<[usize; 3]>,
        quartet: Option<[usize; 4]>,
    },
}

impl TopologyClass {
    pub fn label(&self) -> &'static str {
        match self {
            TopologyClass::Star { .. } => "star",
            TopologyClass::DoubleStar { .. } => "double_star",
            TopologyClass::OtherTree { .. } => "other_tree",
            TopologyClass::NotTreeMetric { .. } => "not_tree_metric",
        }
    }
}

/// Classifies `d` as star, double star, other tree, or not a tree metric.
pub fn classify_topology(d: &DissimilarityMap) -> TopologyClass {
    if let Some((i, j, k)) = d.first_triangle_violation() {
        return TopologyClass::NotTreeMetric {
            triangle: Some([i, j, k]),
            quartet: None,
        };
    }
    if let Some(q) = d.first_four_point_violation() {
        return TopologyClass::NotTreeMetric {
            triangle: None,
            quartet: Some(q.taxa),
        };
    }
    if d.is_star_metric() {
        let weights: Vec<Rational> = (0..d.n()).map(|i| d.star_pendant(i)).collect();
        let degenerate = weights.iter().any(Zero::is_zero);
        let regime = if degenerate { Regime::Closed } else { Regime::Strict };
        let star = StarTree::new(weights, regime).expect("star pendants of a metric are nonnegative");
        return TopologyClass::Star { star, degenerate };
    }
    let tree = reconstruct_tree(d).expect("four-point condition holds");
    let splits = tree.splits();
    if splits.len() == 1 {
        let (side, g) = splits.into_iter().next().unwrap();
        let pendant = tree.pendants();
        let degenerate = pendant.iter().any(Zero::is_zero);
        let regime = if degenerate { Regime::Closed } else { Regime::Strict };
        let tree = DoubleStar::new(&side, g, pendant, regime).expect("split of a canonical tree");
        return TopologyClass::DoubleStar { tree, degenerate };
    }
    TopologyClass::OtherTree { tree }
}

/// The three quartet topologies on taxa `0,1,2,3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuartetSplit {
    #[serde(rename = "12|34")]
    S12_34,
    #[serde(rename = "13|24")]
    S13_24,
    #[serde(rename = "14|23")]
    S14_23,
}

impl QuartetSplit {
    fn order(self) -> [usize; 4] {
        match self {
            QuartetSplit::S12_34 => [0, 1, 2, 3],
            QuartetSplit::S13_24 => [0, 2, 1, 3],
            QuartetSplit::S14_23 => [0, 3, 1, 2],
        }
    }
}

/// Internal weight `g` and pendant weights of a 4-taxon tree metric for the given split.
pub fn quartet_edge_weights(
    d: &DissimilarityMap,
    split: QuartetSplit,
) -> Result<(Rational, [Rational; 4]), TreeError> {
    if d.n() != 4 {
        return Err(MetricError::LengthMismatch {
            n: d.n(),
            expected: 6,
            got: d.entries().len(),
        }
        .into());
    }
    if !d.is_tree_metric() {
        return Err(TreeError::NotTreeMetric);
    }
    let order = split.order();
    let t = |a: usize, b: usize| d.get(order[a], order[b]).clone();
    let g = (t(0, 3) + t(1, 2) - t(0, 1) - t(2, 3)) * half();
    if g.is_negative() {
        return Err(TreeError::WrongSplit);
    }
    let two_g = &g + &g;
    let local = [
        (t(0, 3) + t(0, 2) - &two_g - t(2, 3)) * half(),
        (t(1, 3) + t(1, 2) - &two_g - t(2, 3)) * half(),
        (t(0, 2) + t(1, 2) - &two_g - t(0, 1)) * half(),
        (t(0, 3) + t(1, 3) - &two_g - t(0, 1)) * half(),
    ];
    let mut e: [Rational; 4] = Default::default();
    for (pos, w) in local.into_iter().enumerate() {
        e[order[pos]] = w;
    }
    let rebuilt = DissimilarityMap::from_fn(4, |a, b| {
        let cross = (order[0] == a || order[1] == a) != (order[0] == b || order[1] == b);
        let base = &e[a] + &e[b];
        if cross {
            base + &g
        } else {
            base
        }
    });
    match rebuilt {
        Ok(m) if &m == d => Ok((g, e)),
        _ => Err(TreeError::WrongSplit),
    }
}

/// Cut metric of a set partition: 0 within blocks, 1 across.
pub fn cut_metric(n: usize, blocks: &[Vec<usize>]) -> Result<DissimilarityMap, TreeError> {
    let mut block_of = vec![None; n];
    for (b, block) in blocks.iter().enumerate() {
        if block.is_empty() {
            return Err(TreeError::NotAPartition("empty block".into()));
        }
        for &t in block {
            if t >= n {
                return Err(TreeError::NotAPartition(format!("taxon {} out of range", t + 1)));
            }
            if block_of[t].replace(b).is_some() {
                return Err(TreeError::NotAPartition(format!("taxon {} repeated", t + 1)));
            }
        }
    }
    if let Some(t) = block_of.iter().position(Option::is_none) {
        return Err(TreeError::NotAPartition(format!("taxon {} missing", t + 1)));
    }
    Ok(DissimilarityMap::from_fn(n, |i, j| {
        if block_of[i] == block_of[j] {
            Rational::zero()
        } else {
            num_traits::One::one()
        }
    })?)
}
