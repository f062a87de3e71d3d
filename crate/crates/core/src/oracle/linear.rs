//! Exact feasibility of small linear systems with strict inequalities.
//!
//! Equalities are eliminated by substitution; the remaining inequalities go
//! through Fourier–Motzkin elimination with a strictness flag per row (a
//! combined row is strict iff one of its parents is). Back-substitution then
//! picks a rational value inside each variable's interval, and the witness is
//! checked against every original constraint before it is returned.

use std::collections::HashMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum LinearError {
    #[error("constraint has {got} coefficients, system has {expected} variables")]
    WrongArity { expected: usize, got: usize },
    #[error("variable index {0} out of range")]
    UnknownVariable(usize),
}

/// Relation between `coeffs · x` and the right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Lt,
    Eq,
    Ge,
    Gt,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn is_strict(&self) -> bool {
        matches!(self.relation, Relation::Lt | Relation::Gt)
    }

    /// Exact evaluation at `x`.
    pub fn holds(&self, x: &[Rational]) -> bool {
        let lhs: Rational = self
            .coeffs
            .iter()
            .zip(x)
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, v)| c * v)
            .sum();
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Lt => lhs < self.rhs,
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
            Relation::Gt => lhs > self.rhs,
        }
    }
}

/// A conjunction of linear constraints over `num_vars` rational unknowns.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinearSystem {
    num_vars: usize,
    constraints: Vec<Constraint>,
}

impl LinearSystem {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn add(
        &mut self,
        coeffs: Vec<Rational>,
        relation: Relation,
        rhs: Rational,
    ) -> Result<(), LinearError> {
        if coeffs.len() != self.num_vars {
            return Err(LinearError::WrongArity {
                expected: self.num_vars,
                got: coeffs.len(),
            });
        }
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        Ok(())
    }

    /// Adds `Σ coef · x_var  relation  rhs` from a sparse term list.
    pub fn add_sparse(
        &mut self,
        terms: &[(usize, Rational)],
        relation: Relation,
        rhs: Rational,
    ) -> Result<(), LinearError> {
        let mut coeffs = vec![Rational::zero(); self.num_vars];
        for (var, c) in terms {
            *coeffs.get_mut(*var).ok_or(LinearError::UnknownVariable(*var))? += c;
        }
        self.add(coeffs, relation, rhs)
    }

    pub fn is_satisfied_by(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars && self.constraints.iter().all(|c| c.holds(x))
    }
}

/// Outcome of [`solve_linear`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LinearOutcome {
    /// A point satisfying every constraint.
    Feasible(Vec<Rational>),
    /// The system is empty; `contradiction` is the derived constant row
    /// `0 < rhs` / `0 <= rhs` / `0 = rhs` that fails.
    Infeasible { contradiction: String },
}

impl LinearOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LinearOutcome::Feasible(_))
    }
}

/// `coeffs · x <= rhs`, or `<` when `strict`.
#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<Rational>,
    rhs: Rational,
    strict: bool,
}

impl Row {
    /// Scales so that the first nonzero coefficient is ±1.
    fn normalized(mut self) -> Self {
        if let Some(lead) = self.coeffs.iter().find(|c| !c.is_zero()).map(|c| c.abs()) {
            if !lead.is_one() {
                for c in &mut self.coeffs {
                    *c /= &lead;
                }
                self.rhs /= &lead;
            }
        }
        self
    }

    fn is_constant(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// For a constant row: does `0 (<|<=) rhs` hold?
    fn constant_holds(&self) -> bool {
        if self.strict {
            self.rhs.is_positive()
        } else {
            !self.rhs.is_negative()
        }
    }
}

struct Substitution {
    var: usize,
    /// `x_var = constant - Σ coeffs[q] · x_q`.
    coeffs: Vec<Rational>,
    constant: Rational,
}

/// Decides feasibility exactly and returns a verified witness when one exists.
pub fn solve_linear(system: &LinearSystem) -> LinearOutcome {
    let nv = system.num_vars;
    let mut equalities: Vec<(Vec<Rational>, Rational)> = Vec::new();
    let mut rows: Vec<Row> = Vec::new();
    for c in &system.constraints {
        match c.relation {
            Relation::Eq => equalities.push((c.coeffs.clone(), c.rhs.clone())),
            Relation::Le | Relation::Lt => rows.push(Row {
                coeffs: c.coeffs.clone(),
                rhs: c.rhs.clone(),
                strict: c.relation == Relation::Lt,
            }),
            Relation::Ge | Relation::Gt => rows.push(Row {
                coeffs: c.coeffs.iter().map(|v| -v).collect(),
                rhs: -&c.rhs,
                strict: c.relation == Relation::Gt,
            }),
        }
    }

    // Gaussian elimination of the equalities.
    let mut substitutions: Vec<Substitution> = Vec::new();
    while let Some((coeffs, rhs)) = equalities.pop() {
        let Some(var) = coeffs.iter().position(|c| !c.is_zero()) else {
            if rhs.is_zero() {
                continue;
            }
            return LinearOutcome::Infeasible {
                contradiction: format!("0 = {rhs}"),
            };
        };
        let pivot = coeffs[var].clone();
        let sub = Substitution {
            var,
            coeffs: coeffs
                .iter()
                .enumerate()
                .map(|(q, c)| if q == var { Rational::zero() } else { c / &pivot })
                .collect(),
            constant: &rhs / &pivot,
        };
        for (other, other_rhs) in equalities.iter_mut() {
            apply_substitution(other, other_rhs, &sub);
        }
        for row in rows.iter_mut() {
            apply_substitution(&mut row.coeffs, &mut row.rhs, &sub);
        }
        substitutions.push(sub);
    }

    // Fourier–Motzkin on the remaining inequalities.
    let mut levels: Vec<(usize, Vec<Row>)> = Vec::new();
    let mut current = dedup(rows);
    loop {
        if let Some(bad) = current.iter().find(|r| r.is_constant() && !r.constant_holds()) {
            return LinearOutcome::Infeasible {
                contradiction: format!("0 {} {}", if bad.strict { "<" } else { "<=" }, bad.rhs),
            };
        }
        current.retain(|r| !r.is_constant());
        let Some(var) = pick_variable(&current, nv) else { break };
        let (involved, mut rest): (Vec<Row>, Vec<Row>) =
            current.into_iter().partition(|r| !r.coeffs[var].is_zero());
        let (uppers, lowers): (Vec<&Row>, Vec<&Row>) =
            involved.iter().partition(|r| r.coeffs[var].is_positive());
        for lo in &lowers {
            for up in &uppers {
                let a = up.coeffs[var].clone();
                let b = -&lo.coeffs[var];
                let coeffs = lo
                    .coeffs
                    .iter()
                    .zip(&up.coeffs)
                    .map(|(l, u)| l * &a + u * &b)
                    .collect();
                rest.push(Row {
                    coeffs,
                    rhs: &lo.rhs * &a + &up.rhs * &b,
                    strict: lo.strict || up.strict,
                });
            }
        }
        levels.push((var, involved));
        current = dedup(rest);
    }

    // Back-substitution, last eliminated variable first.
    let mut x = vec![Rational::zero(); nv];
    for (var, involved) in levels.iter().rev() {
        let mut lower: Option<(Rational, bool)> = None;
        let mut upper: Option<(Rational, bool)> = None;
        for row in involved {
            let c = &row.coeffs[*var];
            let rest: Rational = row
                .coeffs
                .iter()
                .enumerate()
                .filter(|(q, v)| q != var && !v.is_zero())
                .map(|(q, v)| v * &x[q])
                .sum();
            let bound = (&row.rhs - rest) / c;
            if c.is_positive() {
                tighten(&mut upper, bound, row.strict, |new, old| new < old);
            } else {
                tighten(&mut lower, bound, row.strict, |new, old| new > old);
            }
        }
        x[*var] = choose_value(lower, upper);
    }
    for sub in substitutions.iter().rev() {
        let dependent: Rational = sub
            .coeffs
            .iter()
            .zip(&x)
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, v)| c * v)
            .sum();
        x[sub.var] = &sub.constant - dependent;
    }
    assert!(
        system.is_satisfied_by(&x),
        "Fourier-Motzkin back-substitution produced a non-witness"
    );
    LinearOutcome::Feasible(x)
}

fn apply_substitution(coeffs: &mut [Rational], rhs: &mut Rational, sub: &Substitution) {
    let c = std::mem::take(&mut coeffs[sub.var]);
    if c.is_zero() {
        return;
    }
    for (q, s) in sub.coeffs.iter().enumerate() {
        if !s.is_zero() {
            coeffs[q] -= &c * s;
        }
    }
    *rhs -= &c * &sub.constant;
}

/// Keeps the tightest row for each normalized coefficient vector.
fn dedup(rows: Vec<Row>) -> Vec<Row> {
    let mut best: HashMap<Vec<Rational>, (Rational, bool)> = HashMap::new();
    let mut order: Vec<Vec<Rational>> = Vec::new();
    for row in rows.into_iter().map(Row::normalized) {
        match best.get_mut(&row.coeffs) {
            Some((rhs, strict)) => {
                if row.rhs < *rhs || (row.rhs == *rhs && row.strict) {
                    *rhs = row.rhs;
                    *strict = row.strict;
                }
            }
            None => {
                order.push(row.coeffs.clone());
                best.insert(row.coeffs, (row.rhs, row.strict));
            }
        }
    }
    order
        .into_iter()
        .map(|coeffs| {
            let (rhs, strict) = best.remove(&coeffs).unwrap();
            Row {
                coeffs,
                rhs,
                strict,
            }
        })
        .collect()
}

/// Variable whose elimination creates the fewest new rows.
fn pick_variable(rows: &[Row], nv: usize) -> Option<usize> {
    (0..nv)
        .filter_map(|v| {
            let pos = rows.iter().filter(|r| r.coeffs[v].is_positive()).count();
            let neg = rows.iter().filter(|r| r.coeffs[v].is_negative()).count();
            (pos + neg > 0).then(|| ((pos * neg) as isize - (pos + neg) as isize, v))
        })
        .min()
        .map(|(_, v)| v)
}

fn tighten(
    slot: &mut Option<(Rational, bool)>,
    bound: Rational,
    strict: bool,
    tighter: impl Fn(&Rational, &Rational) -> bool,
) {
    match slot {
        Some((old, old_strict)) => {
            if tighter(&bound, old) {
                *slot = Some((bound, strict));
            } else if bound == *old && strict {
                *old_strict = true;
            }
        }
        None => *slot = Some((bound, strict)),
    }
}

/// Picks a value inside the interval: `0` if admissible, else a closed
/// endpoint, else the midpoint or the next integer past an open endpoint.
fn choose_value(lower: Option<(Rational, bool)>, upper: Option<(Rational, bool)>) -> Rational {
    let zero = Rational::zero();
    let above = |v: &Rational| match &lower {
        Some((lo, strict)) => {
            if *strict {
                v > lo
            } else {
                v >= lo
            }
        }
        None => true,
    };
    let below = |v: &Rational| match &upper {
        Some((hi, strict)) => {
            if *strict {
                v < hi
            } else {
                v <= hi
            }
        }
        None => true,
    };
    if above(&zero) && below(&zero) {
        return zero;
    }
    match (&lower, &upper) {
        (_, Some((hi, false))) => hi.clone(),
        (Some((lo, false)), _) => lo.clone(),
        (Some((lo, true)), Some((hi, true))) => (lo + hi) / Rational::from_integer(2.into()),
        (Some((lo, true)), None) => lo.floor() + Rational::one(),
        (None, Some((hi, true))) => hi.ceil() - Rational::one(),
        (None, None) => zero,
    }
}
