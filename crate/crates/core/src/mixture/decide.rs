//! Deciding whether a dissimilarity map is the mixture of two stars.

use serde::{Deserialize, Serialize};

use super::cases::{families_for, CaseFamily, CaseId, Decomposition};
use super::MixtureError;
use crate::metric::DissimilarityMap;
use crate::oracle::{k_star_feasible, Feasibility, OracleConfig, SignMode};
use crate::tree::{classify_topology, DoubleStar, Regime, StarTree, TopologyClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
}

impl From<bool> for Verdict {
    fn from(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    StarTrivial,
    Quartet,
    DoubleStarI2,
    DoubleStarI3plus,
    TopologyExcluded,
    WeightConditionFailed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    TheoremOnly,
    OracleConfirmed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DecideOptions {
    pub regime: Regime,
    /// Run the exhaustive oracle and let it take precedence.
    pub cross_check: bool,
    pub oracle: OracleConfig,
}

/// Outcome of [`decide_two_star_mixture`].
///
/// `theorem_verdict` is `None` when the characterization does not cover the
/// input (zero pendant weights in the strict regime); the oracle then
/// decides. `disagreement` is set when both verdicts exist and differ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixtureDecision {
    pub verdict: Verdict,
    pub basis: Basis,
    pub families: Vec<CaseId>,
    pub provenance: Provenance,
    pub witness: Option<(StarTree, StarTree)>,
    pub theorem_verdict: Option<Verdict>,
    pub oracle: Option<Feasibility>,
    pub disagreement: bool,
    pub degenerate: bool,
    pub regime: Regime,
    pub notes: Vec<String>,
}

struct TheoremAnswer {
    verdict: Verdict,
    basis: Basis,
    families: Vec<CaseFamily>,
    witness: Option<(StarTree, StarTree)>,
    degenerate: bool,
}

fn theorem(d: &DissimilarityMap, regime: Regime) -> Result<TheoremAnswer, MixtureError> {
    let no = |basis| TheoremAnswer {
        verdict: Verdict::No,
        basis,
        families: Vec::new(),
        witness: None,
        degenerate: false,
    };
    match classify_topology(d) {
        TopologyClass::NotTreeMetric { .. } | TopologyClass::OtherTree { .. } => Ok(no(Basis::TopologyExcluded)),
        TopologyClass::Star { star, degenerate } => {
            let star = StarTree::new(star.weights().to_vec(), regime)
                .unwrap_or_else(|_| StarTree::new(star.weights().to_vec(), Regime::Closed).expect("nonnegative"));
            Ok(TheoremAnswer {
                verdict: Verdict::Yes,
                basis: Basis::StarTrivial,
                families: Vec::new(),
                witness: Some((star.clone(), star)),
                degenerate,
            })
        }
        TopologyClass::DoubleStar { tree, degenerate } => {
            let tree = DoubleStar::new(tree.side_i(), tree.g().clone(), tree.pendant().to_vec(), Regime::Closed)?;
            let exceeds = |t: usize| match regime {
                Regime::Strict => tree.pendant()[t] > *tree.g(),
                Regime::Closed => tree.pendant()[t] >= *tree.g(),
            };
            let (holds, basis) = if tree.n() == 4 {
                let cherry = tree.side_i().iter().all(|&t| exceeds(t));
                let far = tree.side_j().iter().all(|&t| exceeds(t));
                (cherry || far, Basis::Quartet)
            } else if tree.side_i().len() == 2 {
                (tree.side_i().iter().all(|&t| exceeds(t)), Basis::DoubleStarI2)
            } else {
                ((0..tree.n()).all(exceeds), Basis::DoubleStarI3plus)
            };
            if !holds {
                let mut answer = no(Basis::WeightConditionFailed);
                answer.degenerate = degenerate;
                return Ok(answer);
            }
            let families = if basis == Basis::DoubleStarI3plus {
                Vec::new()
            } else {
                families_for(&tree, regime)?
            };
            let witness = families
                .first()
                .and_then(|f| f.center().map(|(u, w)| f.sample(&u, &w)))
                .transpose()?
                .map(|s: Decomposition| (s.d, s.dbar));
            Ok(TheoremAnswer {
                verdict: Verdict::Yes,
                basis,
                families,
                witness,
                degenerate,
            })
        }
    }
}

/// Decides membership of `d` in the image of the two-star mixture map.
///
/// Errors only when a requested cross-check exceeds the oracle budget.
pub fn decide_two_star_mixture(d: &DissimilarityMap, opts: &DecideOptions) -> Result<MixtureDecision, MixtureError> {
    let answer = theorem(d, opts.regime)?;
    let uncovered = opts.regime == Regime::Strict && answer.degenerate;
    let mut notes = Vec::new();
    let mut decision = MixtureDecision {
        verdict: answer.verdict,
        basis: answer.basis,
        families: answer.families.iter().map(|f| f.id).collect(),
        provenance: Provenance::TheoremOnly,
        witness: answer.witness,
        theorem_verdict: (!uncovered).then_some(answer.verdict),
        oracle: None,
        disagreement: false,
        degenerate: answer.degenerate,
        regime: opts.regime,
        notes: Vec::new(),
    };
    if uncovered {
        notes.push("zero pendant weight: the characterization assumes positive weights".to_string());
    }
    if answer.basis == Basis::DoubleStarI3plus && answer.verdict == Verdict::Yes {
        notes.push("no parametrized witness for |I| >= 3; verdict rests on the characterization".to_string());
    }

    if opts.cross_check || uncovered {
        let sign = match opts.regime {
            Regime::Strict => SignMode::Positive,
            Regime::Closed => SignMode::Nonnegative,
        };
        match k_star_feasible(d, 2, sign, &opts.oracle) {
            Ok(f) => {
                let oracle_verdict = Verdict::from(f.is_feasible());
                decision.disagreement = decision.theorem_verdict.is_some_and(|t| t != oracle_verdict);
                if decision.disagreement {
                    notes.push(format!(
                        "characterization says {:?}, exhaustive search says {:?}; the search takes precedence",
                        answer.verdict, oracle_verdict
                    ));
                }
                decision.verdict = oracle_verdict;
                decision.provenance = Provenance::OracleConfirmed;
                match oracle_verdict {
                    Verdict::Yes if decision.witness.is_none() || decision.disagreement || uncovered => {
                        let star = |w: &Vec<_>| StarTree::new(w.clone(), opts.regime).expect("oracle respects sign mode");
                        decision.witness = Some((star(&f.witness[0]), star(&f.witness[1])));
                    }
                    Verdict::Yes => {}
                    Verdict::No => {
                        decision.witness = None;
                        decision.families.clear();
                    }
                }
                decision.oracle = Some(f);
            }
            Err(err) if opts.cross_check => return Err(err.into()),
            Err(err) => notes.push(format!("{err}; verdict not confirmed")),
        }
    }
    if let Some((a, b)) = &decision.witness {
        debug_assert!(verify_decomposition(d, a, b, opts.regime).unwrap_or(false));
    }
    decision.notes = notes;
    Ok(decision)
}

/// Does `D ⊕ D̄ = T` hold exactly, with both stars admitted by `regime`?
pub fn verify_decomposition(
    t: &DissimilarityMap,
    d: &StarTree,
    dbar: &StarTree,
    regime: Regime,
) -> Result<bool, MixtureError> {
    if d.n() != t.n() || dbar.n() != t.n() {
        return Err(MixtureError::SizeMismatch {
            expected: t.n(),
            got: if d.n() != t.n() { d.n() } else { dbar.n() },
        });
    }
    let admitted = d.weights().iter().chain(dbar.weights()).all(|w| regime.admits(w));
    Ok(admitted && &d.metric().tropical_mix(&dbar.metric())? == t)
}

/// Fiber families of a non-star map in the image.
pub fn enumerate_fiber_cases(t: &DissimilarityMap, regime: Regime) -> Result<Vec<CaseFamily>, MixtureError> {
    match classify_topology(t) {
        TopologyClass::Star { .. } => Err(MixtureError::StarInput),
        TopologyClass::NotTreeMetric { .. } | TopologyClass::OtherTree { .. } => Err(MixtureError::NotInImage),
        TopologyClass::DoubleStar { tree, .. } => {
            let tree = DoubleStar::new(tree.side_i(), tree.g().clone(), tree.pendant().to_vec(), Regime::Closed)?;
            if tree.side_i().len() != 2 {
                return Err(MixtureError::NoParametrization);
            }
            let families = families_for(&tree, regime)?;
            if families.is_empty() {
                Err(MixtureError::NotInImage)
            } else {
                Ok(families)
            }
        }
    }
}

/// The star pair of family `case` at `(u, w)`, verified before return.
pub fn sample_decomposition(
    t: &DissimilarityMap,
    case: CaseId,
    u: &crate::Rational,
    w: &crate::Rational,
    regime: Regime,
) -> Result<Decomposition, MixtureError> {
    let families = enumerate_fiber_cases(t, regime)?;
    let family = families
        .iter()
        .find(|f| f.id == case)
        .ok_or_else(|| MixtureError::CaseNotApplicable {
            case,
            reason: "the weight condition for this family fails".into(),
        })?;
    let sample = family.sample(u, w)?;
    if !verify_decomposition(t, &sample.d, &sample.dbar, regime)? {
        return Err(MixtureError::PostconditionViolation(format!(
            "case {case} sample failed verification"
        )));
    }
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use crate::tree::WeightedTree;

    fn quartet(e: [i64; 4], g: i64) -> DissimilarityMap {
        DoubleStar::new(&[0, 1], int(g), e.map(int).to_vec(), Regime::Strict)
            .unwrap()
            .metric()
    }

    fn decide(d: &DissimilarityMap, cross_check: bool) -> MixtureDecision {
        decide_two_star_mixture(
            d,
            &DecideOptions {
                cross_check,
                ..DecideOptions::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn quartet_examples() {
        let yes = decide(&quartet([5, 4, 1, 1], 2), false);
        assert_eq!(yes.verdict, Verdict::Yes);
        assert_eq!(yes.basis, Basis::Quartet);
        assert_eq!(yes.families, &CaseId::ALL[..4]);
        let (a, b) = yes.witness.clone().unwrap();
        assert!(verify_decomposition(&quartet([5, 4, 1, 1], 2), &a, &b, Regime::Strict).unwrap());

        let no = decide(&quartet([1, 1, 1, 1], 2), true);
        assert_eq!(no.verdict, Verdict::No);
        assert_eq!(no.basis, Basis::WeightConditionFailed);
        assert_eq!(no.oracle.as_ref().unwrap().patterns_checked, 32);
        assert!(!no.disagreement);
    }

    #[test]
    fn caterpillar_is_excluded() {
        let tree = WeightedTree::new(
            5,
            3,
            vec![
                (0, 5, int(1)),
                (1, 5, int(1)),
                (5, 6, int(1)),
                (2, 6, int(1)),
                (6, 7, int(1)),
                (3, 7, int(1)),
                (4, 7, int(1)),
            ],
        )
        .unwrap();
        let dec = decide(&tree.metric(), true);
        assert_eq!((dec.verdict, dec.basis), (Verdict::No, Basis::TopologyExcluded));
        assert!(!dec.disagreement);
    }

    #[test]
    fn star_input_is_trivial() {
        let s = StarTree::new([1, 2, 3, 4].map(int).to_vec(), Regime::Strict).unwrap();
        let dec = decide(&s.metric(), false);
        assert_eq!((dec.verdict, dec.basis), (Verdict::Yes, Basis::StarTrivial));
        assert_eq!(dec.witness, Some((s.clone(), s)));
    }

    #[test]
    fn degenerate_inputs_go_to_the_oracle() {
        let zero = DissimilarityMap::zero(4).unwrap();
        let dec = decide(&zero, false);
        assert_eq!(dec.verdict, Verdict::No);
        assert_eq!(dec.provenance, Provenance::OracleConfirmed);
        assert_eq!(dec.theorem_verdict, None);
        let closed = decide_two_star_mixture(
            &zero,
            &DecideOptions {
                regime: Regime::Closed,
                ..DecideOptions::default()
            },
        )
        .unwrap();
        assert_eq!(closed.verdict, Verdict::Yes);
    }

    #[test]
    fn verification_is_exact() {
        let t = quartet([5, 4, 1, 1], 2);
        let d = StarTree::new([2, 6, 1, 1].map(int).to_vec(), Regime::Strict).unwrap();
        let dbar = StarTree::new(vec![rat(15, 2), rat(3, 2), rat(1, 2), rat(1, 2)], Regime::Strict).unwrap();
        assert!(verify_decomposition(&t, &d, &dbar, Regime::Strict).unwrap());
        assert!(verify_decomposition(&t, &dbar, &d, Regime::Strict).unwrap());
        let bumped = StarTree::new([2, 7, 1, 1].map(int).to_vec(), Regime::Strict).unwrap();
        assert!(!verify_decomposition(&t, &bumped, &dbar, Regime::Strict).unwrap());
        // a weight strictly inside the dominated region can move without effect
        let slack = StarTree::new([3, 6, 1, 1].map(int).to_vec(), Regime::Strict).unwrap();
        assert!(verify_decomposition(&t, &slack, &dbar, Regime::Strict).unwrap());
    }

    #[test]
    fn sampling_examples() {
        let t = quartet([5, 4, 1, 1], 2);
        let s = sample_decomposition(&t, CaseId::C11, &int(1), &int(-1), Regime::Strict).unwrap();
        assert_eq!(s.d.weights(), [2, 6, 1, 1].map(int));
        assert!(matches!(
            sample_decomposition(&t, CaseId::C21, &int(1), &int(-1), Regime::Strict),
            Err(MixtureError::CaseNotApplicable { .. })
        ));
        assert!(matches!(
            enumerate_fiber_cases(&DissimilarityMap::zero(4).unwrap(), Regime::Strict),
            Err(MixtureError::StarInput)
        ));
        assert!(matches!(
            enumerate_fiber_cases(&quartet([1, 1, 1, 1], 2), Regime::Strict),
            Err(MixtureError::NotInImage)
        ));
    }
}
