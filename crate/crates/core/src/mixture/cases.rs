//! The eight parametrized families of two-star decompositions.
//!
//! Tables are written once for the reference labeling: the cherry side
//! `I = {P1, P2}` (sorted), and for the `2.x` families the far side
//! `J = {P3, P4}` (sorted, quartets only). For `n >= 5` every taxon of `J`
//! follows the same `J` row of a `1.x` table. Each star weight is the
//! taxon's own pendant `e` plus a combination of `g`, `u`, `w`; each domain
//! constraint is an affine expression compared with zero.

use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::MixtureError;
use crate::metric::DissimilarityMap;
use crate::rational::{int, rat, serde_str, Rational};
use crate::tree::{DoubleStar, Regime, StarTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CaseId {
    #[serde(rename = "1.1")]
    C11,
    #[serde(rename = "1.2")]
    C12,
    #[serde(rename = "1.3")]
    C13,
    #[serde(rename = "1.4")]
    C14,
    #[serde(rename = "2.1")]
    C21,
    #[serde(rename = "2.2")]
    C22,
    #[serde(rename = "2.3")]
    C23,
    #[serde(rename = "2.4")]
    C24,
}

impl CaseId {
    pub const ALL: [CaseId; 8] = [
        CaseId::C11,
        CaseId::C12,
        CaseId::C13,
        CaseId::C14,
        CaseId::C21,
        CaseId::C22,
        CaseId::C23,
        CaseId::C24,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::C11 => "1.1",
            CaseId::C12 => "1.2",
            CaseId::C13 => "1.3",
            CaseId::C14 => "1.4",
            CaseId::C21 => "2.1",
            CaseId::C22 => "2.2",
            CaseId::C23 => "2.3",
            CaseId::C24 => "2.4",
        }
    }

    /// `1.x` families split the cherry side `I`; `2.x` the far side.
    pub fn uses_far_side(self) -> bool {
        matches!(self, CaseId::C21 | CaseId::C22 | CaseId::C23 | CaseId::C24)
    }

    fn table(self) -> &'static Table {
        &TABLES[self as usize]
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = MixtureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| MixtureError::UnknownCase(s.to_string()))
    }
}

#[derive(Clone, Copy)]
enum Slot {
    P(usize),
    EachJ,
}

#[derive(Clone, Copy)]
enum Sym {
    E(Slot),
    G,
    U,
    W,
}

use Slot::{EachJ, P};
use Sym::{E, G, U, W};

/// `Σ coef·sym (> | >=) 0` with integer coefficients.
struct ConstraintT {
    terms: &'static [(Sym, i64)],
    strict: bool,
}

/// Offsets from the own pendant, in halves: `(g, u, w)`.
type Halves = (i64, i64, i64);

struct Table {
    /// Per role (P1, P2, then J or P3, P4): the `D` and `D̄` offsets.
    weights: &'static [[Halves; 2]],
    constraints: &'static [ConstraintT],
}

const fn gt(terms: &'static [(Sym, i64)]) -> ConstraintT {
    ConstraintT { terms, strict: true }
}

const fn ge(terms: &'static [(Sym, i64)]) -> ConstraintT {
    ConstraintT { terms, strict: false }
}

static TABLES: [Table; 8] = [
    // 1.1
    Table {
        weights: &[[(-2, -2, 0), (2, 0, -1)], [(2, 0, 0), (-2, 0, 1)], [(0, 0, 0), (0, 0, 1)]],
        constraints: &[
            ge(&[(U, 1)]),
            gt(&[(E(P(0)), 1), (G, -1), (U, -1)]),
            gt(&[(W, -1)]),
            gt(&[(W, 1), (E(P(1)), 2), (G, -2)]),
            gt(&[(W, 1), (E(EachJ), 2)]),
        ],
    },
    // 1.2
    Table {
        weights: &[[(-2, 0, -1), (2, 0, 0)], [(2, 0, 1), (-2, 2, 0)], [(0, 0, -1), (0, 0, 0)]],
        constraints: &[
            gt(&[(U, -1)]),
            gt(&[(U, 1), (G, -1), (E(P(1)), 1)]),
            ge(&[(W, 1)]),
            gt(&[(E(EachJ), 2), (W, -1)]),
            gt(&[(E(P(0)), 2), (G, -2), (W, -1)]),
        ],
    },
    // 1.3
    Table {
        weights: &[[(-2, -2, -1), (2, 0, 0)], [(2, 0, 1), (-2, 0, 0)], [(0, 0, -1), (0, 0, 0)]],
        constraints: &[
            ge(&[(U, 1)]),
            gt(&[(E(P(0)), 2), (G, -2), (W, -1), (U, -2)]),
            ge(&[(W, 1)]),
            gt(&[(E(EachJ), 2), (W, -1)]),
            gt(&[(E(P(0)), 2), (G, -2), (W, -1)]),
        ],
    },
    // 1.4
    Table {
        weights: &[[(-2, 0, 0), (2, 0, -1)], [(2, 0, 0), (-2, 2, 1)], [(0, 0, 0), (0, 0, 1)]],
        constraints: &[
            gt(&[(U, -1)]),
            gt(&[(U, 2), (G, -2), (E(P(1)), 2), (W, 1)]),
            gt(&[(W, -1)]),
            gt(&[(W, 1), (E(EachJ), 2)]),
            gt(&[(W, 1), (E(P(1)), 2), (G, -2)]),
        ],
    },
    // 2.1
    Table {
        weights: &[
            [(0, -1, 0), (0, 0, 0)],
            [(0, -1, 0), (0, 0, 0)],
            [(-2, -1, 0), (2, 0, 0)],
            [(2, 1, 0), (-2, 0, 2)],
        ],
        constraints: &[
            ge(&[(U, 1)]),
            gt(&[(E(P(0)), 2), (U, -1)]),
            gt(&[(E(P(1)), 2), (U, -1)]),
            gt(&[(E(P(2)), 2), (G, -2), (U, -1)]),
            gt(&[(W, -1)]),
            gt(&[(W, 1), (G, -1), (E(P(3)), 1)]),
        ],
    },
    // 2.2
    Table {
        weights: &[
            [(0, 0, 0), (0, 1, 0)],
            [(0, 0, 0), (0, 1, 0)],
            [(-2, 0, -2), (2, -1, 0)],
            [(2, 0, 0), (-2, 1, 0)],
        ],
        constraints: &[
            gt(&[(U, -1)]),
            gt(&[(U, 1), (E(P(3)), 2), (G, -2)]),
            gt(&[(U, 1), (E(P(0)), 2)]),
            gt(&[(U, 1), (E(P(1)), 2)]),
            ge(&[(W, 1)]),
            gt(&[(E(P(2)), 1), (G, -1), (W, -1)]),
        ],
    },
    // 2.3
    Table {
        weights: &[
            [(0, -1, 0), (0, 0, 0)],
            [(0, -1, 0), (0, 0, 0)],
            [(-2, -1, -2), (2, 0, 0)],
            [(2, 1, 0), (-2, 0, 0)],
        ],
        constraints: &[
            ge(&[(U, 1)]),
            gt(&[(E(P(0)), 2), (U, -1)]),
            gt(&[(E(P(1)), 2), (U, -1)]),
            gt(&[(E(P(2)), 2), (G, -2), (U, -1)]),
            ge(&[(W, 1)]),
            gt(&[(E(P(2)), 2), (G, -2), (U, -1), (W, -2)]),
        ],
    },
    // 2.4
    Table {
        weights: &[
            [(0, 0, 0), (0, 1, 0)],
            [(0, 0, 0), (0, 1, 0)],
            [(-2, 0, 0), (2, -1, 0)],
            [(2, 0, 0), (-2, 1, 2)],
        ],
        constraints: &[
            gt(&[(U, -1)]),
            gt(&[(U, 1), (E(P(0)), 2)]),
            gt(&[(U, 1), (E(P(1)), 2)]),
            gt(&[(U, 1), (E(P(3)), 2), (G, -2)]),
            gt(&[(W, -1)]),
            gt(&[(W, 2), (G, -2), (E(P(3)), 2), (U, 1)]),
        ],
    },
];

/// `c + u·U + w·W`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineUw {
    #[serde(with = "serde_str")]
    pub c: Rational,
    #[serde(with = "serde_str")]
    pub u: Rational,
    #[serde(with = "serde_str")]
    pub w: Rational,
}

impl AffineUw {
    pub fn eval(&self, u: &Rational, w: &Rational) -> Rational {
        &self.c + &self.u * u + &self.w * w
    }
}

/// One instantiated domain constraint `c + a_u·u + a_w·w (> | >=) 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainConstraint {
    /// Symbolic form with 1-based taxon labels, e.g. `"e1 - g - u > 0"`.
    pub formula: String,
    pub lhs: AffineUw,
    pub strict: bool,
}

impl DomainConstraint {
    fn holds(&self, u: &Rational, w: &Rational, closed: bool) -> bool {
        let v = self.lhs.eval(u, w);
        if self.strict && !closed {
            v.is_positive()
        } else {
            !v.is_negative()
        }
    }
}

/// An interval endpoint pair with open/closed markers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "serde_str")]
    pub lo: Rational,
    pub lo_open: bool,
    #[serde(with = "serde_str")]
    pub hi: Rational,
    pub hi_open: bool,
}

impl Interval {
    fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && (self.lo_open || self.hi_open))
    }

    /// `lo + (hi - lo)·num/den`.
    fn at(&self, num: i64, den: i64) -> Rational {
        &self.lo + (&self.hi - &self.lo) * rat(num, den)
    }
}

/// Star weights of one taxon in both summands, affine in `(u, w)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonWeights {
    pub taxon: usize,
    pub d_formula: String,
    pub dbar_formula: String,
    pub d: AffineUw,
    pub dbar: AffineUw,
}

/// A fiber family instantiated on a concrete double star.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseFamily {
    pub id: CaseId,
    /// The `(D, D̄)` swap of the family as printed.
    pub swapped: bool,
    pub regime: Regime,
    /// 1-based taxa in role order `P1, P2, …`.
    pub roles: Vec<usize>,
    pub constraints: Vec<DomainConstraint>,
    /// Projection of the domain on `u`.
    pub u_range: Interval,
    /// Projection of the domain on `w`.
    pub w_range: Interval,
    pub weights: Vec<TaxonWeights>,
    #[serde(skip)]
    target: Option<DissimilarityMap>,
}

/// A sampled point of a family with its verified star pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub case: CaseId,
    pub swapped: bool,
    #[serde(with = "serde_str")]
    pub u: Rational,
    #[serde(with = "serde_str")]
    pub w: Rational,
    pub d: StarTree,
    pub dbar: StarTree,
    pub degenerate: bool,
}

impl CaseFamily {
    /// Instantiates `id` on `tree`; errors if the tree shape does not fit.
    pub fn instantiate(id: CaseId, tree: &DoubleStar, regime: Regime) -> Result<Self, MixtureError> {
        let n = tree.n();
        let (i_side, j_side) = (tree.side_i(), tree.side_j());
        if i_side.len() != 2 || (id.uses_far_side() && j_side.len() != 2) {
            return Err(MixtureError::CaseNotApplicable {
                case: id,
                reason: "shape does not match the family".into(),
            });
        }
        let mut roles: Vec<usize> = i_side.to_vec();
        if id.uses_far_side() {
            roles.extend_from_slice(j_side);
        }
        let e = tree.pendant();
        let g = tree.g();
        let table = id.table();

        let mut constraints = Vec::new();
        for ct in table.constraints {
            let quantified = ct.terms.iter().any(|(s, _)| matches!(s, E(EachJ)));
            let targets: Vec<Option<usize>> = if quantified {
                j_side.iter().map(|&j| Some(j)).collect()
            } else {
                vec![None]
            };
            for each_j in targets {
                let taxon_of = |slot: &Slot| match slot {
                    P(r) => roles[*r],
                    EachJ => each_j.expect("quantified constraint"),
                };
                let mut lhs = AffineUw {
                    c: Rational::zero(),
                    u: Rational::zero(),
                    w: Rational::zero(),
                };
                let mut symbolic = Vec::new();
                for (sym, coef) in ct.terms {
                    let c = int(*coef);
                    match sym {
                        E(slot) => {
                            let taxon = taxon_of(slot);
                            lhs.c += &c * &e[taxon];
                            symbolic.push((c, format!("e{}", taxon + 1)));
                        }
                        G => {
                            lhs.c += &c * g;
                            symbolic.push((c, "g".into()));
                        }
                        U => {
                            lhs.u += &c;
                            symbolic.push((c, "u".into()));
                        }
                        W => {
                            lhs.w += &c;
                            symbolic.push((c, "w".into()));
                        }
                    }
                }
                let op = if ct.strict { ">" } else { ">=" };
                constraints.push(DomainConstraint {
                    formula: format!("{} {op} 0", render(&symbolic)),
                    lhs,
                    strict: ct.strict,
                });
            }
        }

        let mut weights = Vec::with_capacity(n);
        for taxon in 0..n {
            let row = match roles.iter().position(|&r| r == taxon) {
                Some(r) => &table.weights[r],
                None => &table.weights[2],
            };
            let make = |(hg, hu, hw): Halves| {
                let (cg, cu, cw) = (rat(hg, 2), rat(hu, 2), rat(hw, 2));
                let formula = render(&[
                    (int(1), format!("e{}", taxon + 1)),
                    (cg.clone(), "g".into()),
                    (cu.clone(), "u".into()),
                    (cw.clone(), "w".into()),
                ]);
                let affine = AffineUw {
                    c: &e[taxon] + cg * g,
                    u: cu,
                    w: cw,
                };
                (formula, affine)
            };
            let (d_formula, d) = make(row[0]);
            let (dbar_formula, dbar) = make(row[1]);
            weights.push(TaxonWeights {
                taxon: taxon + 1,
                d_formula,
                dbar_formula,
                d,
                dbar,
            });
        }

        let closed = regime == Regime::Closed;
        let u_range = project(&constraints, Axis::U, closed)?;
        let w_range = project(&constraints, Axis::W, closed)?;
        Ok(Self {
            id,
            swapped: false,
            regime,
            roles: roles.iter().map(|r| r + 1).collect(),
            constraints,
            u_range,
            w_range,
            weights,
            target: Some(tree.metric()),
        })
    }

    /// True when some `(u, w)` satisfies every constraint.
    pub fn is_nonempty(&self) -> bool {
        !self.u_range.is_empty() && !self.w_range.is_empty()
    }

    /// The same family with `D` and `D̄` exchanged.
    pub fn orbit_mate(&self) -> Self {
        let mut mate = self.clone();
        mate.swapped = !self.swapped;
        mate
    }

    pub fn contains(&self, u: &Rational, w: &Rational) -> bool {
        let closed = self.regime == Regime::Closed;
        self.constraints.iter().all(|c| c.holds(u, w, closed))
    }

    /// The two stars at `(u, w)`, verified against the target before return.
    pub fn sample(&self, u: &Rational, w: &Rational) -> Result<Decomposition, MixtureError> {
        let closed = self.regime == Regime::Closed;
        if let Some(bad) = self.constraints.iter().find(|c| !c.holds(u, w, closed)) {
            return Err(MixtureError::OutOfDomain {
                case: self.id,
                u: u.to_string(),
                w: w.to_string(),
                violated: bad.formula.clone(),
            });
        }
        let build = |pick: fn(&TaxonWeights) -> &AffineUw| {
            let ws: Vec<Rational> = self.weights.iter().map(|t| pick(t).eval(u, w)).collect();
            StarTree::new(ws, self.regime).map_err(|e| MixtureError::PostconditionViolation(e.to_string()))
        };
        let mut d = build(|t| &t.d)?;
        let mut dbar = build(|t| &t.dbar)?;
        if self.swapped {
            std::mem::swap(&mut d, &mut dbar);
        }
        if let Some(target) = &self.target {
            let mix = d.metric().tropical_mix(&dbar.metric())?;
            if &mix != target {
                return Err(MixtureError::PostconditionViolation(format!(
                    "case {} at u = {u}, w = {w} does not reproduce the input",
                    self.id
                )));
            }
        }
        let degenerate = d.is_degenerate() || dbar.is_degenerate();
        Ok(Decomposition {
            case: self.id,
            swapped: self.swapped,
            u: u.clone(),
            w: w.clone(),
            d,
            dbar,
            degenerate,
        })
    }

    /// A 5×5 grid: `w` at sixths of its range, then `u` at sixths of the
    /// `u`-section over that `w`. Interior when the domain has interior.
    pub fn grid(&self) -> Vec<(Rational, Rational)> {
        let closed = self.regime == Regime::Closed;
        let mut out = Vec::with_capacity(25);
        for k in 1..=5 {
            let w = self.w_range.at(k, 6);
            if let Some(section) = section_at(&self.constraints, &w, closed) {
                for l in 1..=5 {
                    out.push((section.at(l, 6), w.clone()));
                }
            }
        }
        out
    }

    /// The grid's middle point.
    pub fn center(&self) -> Option<(Rational, Rational)> {
        let w = self.w_range.at(1, 2);
        let section = section_at(&self.constraints, &w, self.regime == Regime::Closed)?;
        Some((section.at(1, 2), w))
    }
}

fn render(terms: &[(Rational, String)]) -> String {
    let mut out = String::new();
    for (c, name) in terms.iter().filter(|(c, _)| !c.is_zero()) {
        let mag = c.abs();
        let body = if mag == int(1) {
            name.clone()
        } else if mag.is_integer() {
            format!("{mag}{name}")
        } else if mag.numer() == &1.into() {
            format!("{name}/{}", mag.denom())
        } else {
            format!("{}{name}/{}", mag.numer(), mag.denom())
        };
        if out.is_empty() {
            if c.is_negative() {
                out.push('-');
            }
        } else {
            out.push_str(if c.is_negative() { " - " } else { " + " });
        }
        out.push_str(&body);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Axis {
    U,
    W,
}

/// `(coef on the kept axis, coef on the other, constant, strict)`.
type Row1 = (Rational, Rational, Rational, bool);

/// Projection of the polygon on one axis by eliminating the other.
fn project(constraints: &[DomainConstraint], keep: Axis, closed: bool) -> Result<Interval, MixtureError> {
    let rows: Vec<Row1> = constraints
        .iter()
        .map(|c| {
            let (a, b) = match keep {
                Axis::U => (c.lhs.u.clone(), c.lhs.w.clone()),
                Axis::W => (c.lhs.w.clone(), c.lhs.u.clone()),
            };
            (a, b, c.lhs.c.clone(), c.strict && !closed)
        })
        .collect();
    let mut derived: Vec<(Rational, Rational, bool)> = Vec::new();
    for (a, b, c, s) in &rows {
        if b.is_zero() {
            derived.push((a.clone(), c.clone(), *s));
        }
    }
    for (a1, b1, c1, s1) in rows.iter().filter(|r| r.1.is_positive()) {
        for (a2, b2, c2, s2) in rows.iter().filter(|r| r.1.is_negative()) {
            let m1 = -b2;
            let m2 = b1;
            derived.push((a1 * &m1 + a2 * m2, c1 * &m1 + c2 * m2, *s1 || *s2));
        }
    }
    interval_from(&derived).ok_or(MixtureError::UnboundedDomain)
}

/// Solution set of `a·x + c (> | >=) 0` rows; `None` if unbounded.
fn interval_from(rows: &[(Rational, Rational, bool)]) -> Option<Interval> {
    let mut lo: Option<(Rational, bool)> = None;
    let mut hi: Option<(Rational, bool)> = None;
    let mut infeasible = false;
    for (a, c, strict) in rows {
        if a.is_zero() {
            let ok = if *strict { c.is_positive() } else { !c.is_negative() };
            infeasible |= !ok;
            continue;
        }
        let bound = -c / a;
        if a.is_positive() {
            let tighter = match &lo {
                Some((v, s)) => bound > *v || (bound == *v && *strict && !*s),
                None => true,
            };
            if tighter {
                lo = Some((bound, *strict));
            }
        } else {
            let tighter = match &hi {
                Some((v, s)) => bound < *v || (bound == *v && *strict && !*s),
                None => true,
            };
            if tighter {
                hi = Some((bound, *strict));
            }
        }
    }
    let ((lo, lo_open), (hi, hi_open)) = (lo?, hi?);
    let mut out = Interval {
        lo,
        lo_open,
        hi,
        hi_open,
    };
    if infeasible {
        // Encode emptiness as an open empty interval at the lower endpoint.
        out.hi = out.lo.clone();
        out.lo_open = true;
    }
    Some(out)
}

/// The `u`-interval of the polygon over a fixed `w`.
fn section_at(constraints: &[DomainConstraint], w: &Rational, closed: bool) -> Option<Interval> {
    let rows: Vec<(Rational, Rational, bool)> = constraints
        .iter()
        .map(|c| (c.lhs.u.clone(), &c.lhs.c + &c.lhs.w * w, c.strict && !closed))
        .collect();
    interval_from(&rows).filter(|i| !i.is_empty())
}

/// Families with nonempty domain on `tree`: `1.x` when both cherry-side
/// pendants exceed `g`, and on quartets `2.x` when both far-side ones do.
pub fn families_for(tree: &DoubleStar, regime: Regime) -> Result<Vec<CaseFamily>, MixtureError> {
    if tree.side_i().len() != 2 {
        return Err(MixtureError::NoParametrization);
    }
    let exceeds = |side: &[usize]| {
        side.iter().all(|&t| match regime {
            Regime::Strict => tree.pendant()[t] > *tree.g(),
            Regime::Closed => tree.pendant()[t] >= *tree.g(),
        })
    };
    let mut ids = Vec::new();
    if exceeds(tree.side_i()) {
        ids.extend_from_slice(&CaseId::ALL[..4]);
    }
    if tree.n() == 4 && exceeds(tree.side_j()) {
        ids.extend_from_slice(&CaseId::ALL[4..]);
    }
    let mut out = Vec::new();
    for id in ids {
        let family = CaseFamily::instantiate(id, tree, regime)?;
        if family.is_nonempty() && family.center().is_some() {
            out.push(family);
        }
    }
    Ok(out)
}
