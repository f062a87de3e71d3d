//! File formats: dissimilarity maps, trees, stars and double stars as JSON,
//! plus whitespace square matrices. Taxa are 1-based in every document.

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::metric::{pairs, DissimilarityMap, MetricError, Pairing, QuartetPairing};
use crate::rational::{parse_rational, serde_str, Rational};
use crate::tree::{DoubleStar, Regime, StarTree, TopologyClass, TreeError, WeightedTree};

#[derive(Error, Debug)]
pub enum IoError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

fn parse_err(msg: impl Into<String>) -> IoError {
    IoError::Parse(msg.into())
}

/// `{"n", "entries"}` with entries in row-major upper-triangular order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDoc {
    pub n: usize,
    #[serde(with = "serde_str::vec")]
    pub entries: Vec<Rational>,
}

impl From<&DissimilarityMap> for MetricDoc {
    fn from(d: &DissimilarityMap) -> Self {
        Self { n: d.n(), entries: d.entries().to_vec() }
    }
}

impl TryFrom<MetricDoc> for DissimilarityMap {
    type Error = IoError;

    fn try_from(doc: MetricDoc) -> Result<Self, IoError> {
        Ok(DissimilarityMap::new(doc.n, doc.entries)?)
    }
}

/// `{"n", "nodes", "edges": [[u, v, "w"], ...]}`; `nodes` counts leaves and
/// internal nodes, leaves are `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDoc {
    pub n: usize,
    pub nodes: usize,
    pub edges: Vec<(usize, usize, String)>,
}

impl From<&WeightedTree> for TreeDoc {
    fn from(t: &WeightedTree) -> Self {
        Self {
            n: t.n(),
            nodes: t.n() + t.internal(),
            edges: t.edges().iter().map(|(u, v, w)| (u + 1, v + 1, w.to_string())).collect(),
        }
    }
}

impl TryFrom<TreeDoc> for WeightedTree {
    type Error = IoError;

    fn try_from(doc: TreeDoc) -> Result<Self, IoError> {
        if doc.nodes < doc.n {
            return Err(parse_err(format!("{} nodes for {} leaves", doc.nodes, doc.n)));
        }
        let mut edges = Vec::with_capacity(doc.edges.len());
        for (u, v, w) in &doc.edges {
            if *u == 0 || *v == 0 {
                return Err(parse_err("node labels are 1-based"));
            }
            let w = parse_rational(w).map_err(|e| parse_err(format!("edge ({u},{v}): {e}")))?;
            edges.push((u - 1, v - 1, w));
        }
        Ok(WeightedTree::new(doc.n, doc.nodes - doc.n, edges)?)
    }
}

/// `{"weights": [...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarDoc {
    #[serde(with = "serde_str::vec")]
    pub weights: Vec<Rational>,
}

/// `{"I": [...], "g", "pendant": [...]}` with `I` the smaller side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleStarDoc {
    #[serde(rename = "I")]
    pub side: Vec<usize>,
    #[serde(with = "serde_str")]
    pub g: Rational,
    #[serde(with = "serde_str::vec")]
    pub pendant: Vec<Rational>,
}

impl From<&DoubleStar> for DoubleStarDoc {
    fn from(t: &DoubleStar) -> Self {
        Self {
            side: t.side_i().iter().map(|i| i + 1).collect(),
            g: t.g().clone(),
            pendant: t.pendant().to_vec(),
        }
    }
}

impl DoubleStarDoc {
    pub fn build(&self, regime: Regime) -> Result<DoubleStar, IoError> {
        if self.side.contains(&0) {
            return Err(parse_err("taxa are 1-based"));
        }
        let side: Vec<usize> = self.side.iter().map(|i| i - 1).collect();
        Ok(DoubleStar::new(&side, self.g.clone(), self.pendant.clone(), regime)?)
    }
}

/// Any accepted input document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Input {
    Metric(DissimilarityMap),
    Tree(WeightedTree),
    Star(StarTree),
    DoubleStar(DoubleStar),
}

impl Input {
    pub fn kind(&self) -> &'static str {
        match self {
            Input::Metric(_) => "metric",
            Input::Tree(_) => "tree",
            Input::Star(_) => "star",
            Input::DoubleStar(_) => "double_star",
        }
    }

    /// The dissimilarity map the document denotes.
    pub fn metric(&self) -> DissimilarityMap {
        match self {
            Input::Metric(d) => d.clone(),
            Input::Tree(t) => t.metric(),
            Input::Star(s) => s.metric(),
            Input::DoubleStar(t) => t.metric(),
        }
    }
}

/// Parses any input document, detecting its kind from its keys. Text that
/// does not start with `{` is read as a square matrix. Star and double star
/// weights are checked against `regime`.
pub fn parse_input(text: &str, regime: Regime) -> Result<Input, IoError> {
    let trimmed = text.trim_start();
    if !trimmed.starts_with('{') {
        return parse_matrix(trimmed).map(Input::Metric);
    }
    let value: Value = serde_json::from_str(trimmed)?;
    let has = |key: &str| value.get(key).is_some();
    if has("entries") {
        let doc: MetricDoc = serde_json::from_value(value)?;
        Ok(Input::Metric(doc.try_into()?))
    } else if has("edges") {
        let doc: TreeDoc = serde_json::from_value(value)?;
        Ok(Input::Tree(doc.try_into()?))
    } else if has("I") {
        let doc: DoubleStarDoc = serde_json::from_value(value)?;
        Ok(Input::DoubleStar(doc.build(regime)?))
    } else if has("weights") {
        let doc: StarDoc = serde_json::from_value(value)?;
        Ok(Input::Star(StarTree::new(doc.weights, regime)?))
    } else {
        Err(parse_err("expected one of the keys entries, edges, I, weights"))
    }
}

/// A whitespace-separated full square matrix with zero diagonal.
pub fn parse_matrix(text: &str) -> Result<DissimilarityMap, IoError> {
    let rows: Vec<Vec<Rational>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(r, line)| {
            line.split_whitespace()
                .map(|tok| parse_rational(tok).map_err(|e| parse_err(format!("row {}: {e}", r + 1))))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if let Some(r) = rows.iter().position(|row| row.len() != n) {
        return Err(parse_err(format!("row {} has {} values, expected {n}", r + 1, rows[r].len())));
    }
    for i in 0..n {
        if !rows[i][i].is_zero() {
            return Err(parse_err(format!("diagonal entry {} is nonzero", i + 1)));
        }
        for j in i + 1..n {
            if rows[i][j] != rows[j][i] {
                return Err(parse_err(format!("entries ({},{}) and ({},{}) differ", i + 1, j + 1, j + 1, i + 1)));
            }
        }
    }
    Ok(DissimilarityMap::new(n, pairs(n).map(|(i, j)| rows[i][j].clone()).collect())?)
}

/// Serializable form of [`TopologyClass`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum TopologyDoc {
    Star { star: StarTree, degenerate: bool },
    DoubleStar { tree: DoubleStarDoc, degenerate: bool },
    OtherTree { tree: TreeDoc },
    NotTreeMetric { triangle: Option<[usize; 3]>, quartet: Option<[usize; 4]> },
}

impl From<&TopologyClass> for TopologyDoc {
    fn from(c: &TopologyClass) -> Self {
        match c {
            TopologyClass::Star { star, degenerate } => TopologyDoc::Star { star: star.clone(), degenerate: *degenerate },
            TopologyClass::DoubleStar { tree, degenerate } => TopologyDoc::DoubleStar {
                tree: tree.into(),
                degenerate: *degenerate,
            },
            TopologyClass::OtherTree { tree } => TopologyDoc::OtherTree { tree: tree.into() },
            TopologyClass::NotTreeMetric { triangle, quartet } => TopologyDoc::NotTreeMetric {
                triangle: triangle.map(|t| t.map(|i| i + 1)),
                quartet: quartet.map(|q| q.map(|i| i + 1)),
            },
        }
    }
}

/// Four-point diagnostics of one 4-subset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuartetDoc {
    pub taxa: [usize; 4],
    #[serde(with = "serde_str::vec")]
    pub sums: Vec<Rational>,
    pub attaining: Vec<Pairing>,
    pub four_point: bool,
}

impl From<&QuartetPairing> for QuartetDoc {
    fn from(q: &QuartetPairing) -> Self {
        Self {
            taxa: q.taxa.map(|i| i + 1),
            sums: q.sums().into_iter().cloned().collect(),
            attaining: q.attaining.iter().copied().collect(),
            four_point: q.attaining.len() >= 2,
        }
    }
}
