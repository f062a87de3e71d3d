//! Offsets between two 4-taxon stars and the quartet test on them.
//!
//! With `D` and `D̄` on leaves `1,2,3,4`, each offset is `D̄ - D` on one
//! pair: `s` on `13`, `t` on `24`, `x` on `14`, `y` on `23`, `u` on `12`,
//! `w` on `34`. Since both maps are star metrics every pairing sum of the
//! difference is the same, hence `s + t = x + y = u + w`.

use serde::{Deserialize, Serialize};

use super::MixtureError;
use crate::rational::{positive_part, serde_str, Rational};
use crate::tree::StarTree;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Offsets {
    #[serde(with = "serde_str")]
    pub s: Rational,
    #[serde(with = "serde_str")]
    pub t: Rational,
    #[serde(with = "serde_str")]
    pub x: Rational,
    #[serde(with = "serde_str")]
    pub y: Rational,
    #[serde(with = "serde_str")]
    pub u: Rational,
    #[serde(with = "serde_str")]
    pub w: Rational,
}

impl Offsets {
    /// `s + t = x + y = u + w`.
    pub fn identity_holds(&self) -> bool {
        let st = &self.s + &self.t;
        st == &self.x + &self.y && st == &self.u + &self.w
    }
}

pub fn offsets_from_stars(d: &StarTree, dbar: &StarTree) -> Result<Offsets, MixtureError> {
    if d.n() != 4 || dbar.n() != 4 {
        return Err(MixtureError::SizeMismatch {
            expected: 4,
            got: if d.n() != 4 { d.n() } else { dbar.n() },
        });
    }
    let p = d.weights();
    let q = dbar.weights();
    let diff = |i: usize, j: usize| (&q[i] + &q[j]) - (&p[i] + &p[j]);
    Ok(Offsets {
        s: diff(0, 2),
        t: diff(1, 3),
        x: diff(0, 3),
        y: diff(1, 2),
        u: diff(0, 1),
        w: diff(2, 3),
    })
}

/// Whether the mixture of the two stars is the quartet `(12|34)`:
/// `u⁺ + w⁺ < s⁺ + t⁺ = x⁺ + y⁺`.
pub fn quartet_is_12_34(o: &Offsets) -> bool {
    let uw = positive_part(&o.u) + positive_part(&o.w);
    let st = positive_part(&o.s) + positive_part(&o.t);
    let xy = positive_part(&o.x) + positive_part(&o.y);
    uw < st && st == xy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use crate::tree::Regime;

    fn star(w: Vec<Rational>) -> StarTree {
        StarTree::new(w, Regime::Strict).unwrap()
    }

    #[test]
    fn fixtures() {
        let a = star([1, 1, 1, 1].map(int).to_vec());
        let b = star([2, 1, 1, 1].map(int).to_vec());
        let o = offsets_from_stars(&a, &b).unwrap();
        assert_eq!(
            [&o.s, &o.t, &o.x, &o.y, &o.u, &o.w],
            [&int(1), &int(0), &int(1), &int(0), &int(1), &int(0)]
        );
        assert!(!quartet_is_12_34(&o));

        let zero = offsets_from_stars(&a, &a).unwrap();
        assert!(zero.identity_holds() && !quartet_is_12_34(&zero));

        let d = star([2, 6, 1, 1].map(int).to_vec());
        let dbar = star(vec![rat(15, 2), rat(3, 2), rat(1, 2), rat(1, 2)]);
        let o = offsets_from_stars(&d, &dbar).unwrap();
        assert_eq!(
            [&o.s, &o.t, &o.x, &o.y, &o.u, &o.w],
            [&int(5), &int(-5), &int(5), &int(-5), &int(1), &int(-1)]
        );
        assert!(o.identity_holds());
        assert!(quartet_is_12_34(&o));
    }

    #[test]
    fn rejects_other_sizes() {
        let a = star([1, 1, 1, 1, 1].map(int).to_vec());
        let b = star([1, 1, 1, 1].map(int).to_vec());
        assert!(matches!(offsets_from_stars(&a, &b), Err(MixtureError::SizeMismatch { .. })));
    }
}
