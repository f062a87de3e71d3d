//! Random generators shared by the integration and acceptance tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use startreemix::rational::{rat, Rational};
use startreemix::tree::{DoubleStar, Regime, StarTree, WeightedTree};
use startreemix::DissimilarityMap;

/// `k / den` with `k` uniform in `lo..=hi`.
pub fn grid_rational(rng: &mut impl Rng, lo: i64, hi: i64, den: i64) -> Rational {
    rat(rng.gen_range(lo..=hi), den)
}

/// A weight in `(0, 4]` on an eighth grid.
pub fn weight(rng: &mut impl Rng) -> Rational {
    grid_rational(rng, 1, 32, 8)
}

pub fn random_star(rng: &mut impl Rng, n: usize) -> StarTree {
    StarTree::new((0..n).map(|_| weight(rng)).collect(), Regime::Strict).unwrap()
}

pub fn random_map(rng: &mut impl Rng, n: usize) -> DissimilarityMap {
    let entries = (0..n * (n - 1) / 2).map(|_| grid_rational(rng, 0, 16, 4)).collect();
    DissimilarityMap::new(n, entries).unwrap()
}

/// Random topology by repeated edge subdivision, with weights in `(0, 4]`.
pub fn random_tree(rng: &mut impl Rng, n: usize) -> WeightedTree {
    // Internal nodes are numbered from `n` as they are created.
    let hub = n;
    let mut edges: Vec<(usize, usize, Rational)> = (0..3).map(|l| (l, hub, weight(rng))).collect();
    let mut next = n + 1;
    for leaf in 3..n {
        let pick = rng.gen_range(0..edges.len());
        let (a, b, _) = edges.swap_remove(pick);
        let x = next;
        next += 1;
        edges.push((a, x, weight(rng)));
        edges.push((x, b, weight(rng)));
        edges.push((leaf, x, weight(rng)));
    }
    WeightedTree::new(n, next - n, edges).unwrap()
}

/// The 5-leaf caterpillar with random labels and weights.
pub fn random_caterpillar5(rng: &mut impl Rng) -> WeightedTree {
    let mut labels: Vec<usize> = (0..5).collect();
    labels.shuffle(rng);
    let (x, y) = (5, 6);
    let edges = vec![
        (labels[0], x, weight(rng)),
        (labels[1], x, weight(rng)),
        (x, y, weight(rng)),
        (labels[2], y, weight(rng)),
        (y, 7, weight(rng)),
        (labels[3], 7, weight(rng)),
        (labels[4], 7, weight(rng)),
    ];
    WeightedTree::new(5, 3, edges).unwrap()
}

/// A double star with a random 2-element side whose pendants exceed `g`.
pub fn random_i2_double_star(rng: &mut impl Rng, n: usize) -> DoubleStar {
    let mut taxa: Vec<usize> = (0..n).collect();
    taxa.shuffle(rng);
    let side = [taxa[0], taxa[1]];
    let g = weight(rng);
    let pendant = (0..n)
        .map(|t| {
            if side.contains(&t) {
                &g + weight(rng)
            } else {
                weight(rng)
            }
        })
        .collect();
    DoubleStar::new(&side, g, pendant, Regime::Strict).unwrap()
}

/// A quartet on a random split with random weights (no condition imposed).
pub fn random_quartet(rng: &mut impl Rng) -> DoubleStar {
    let partner = rng.gen_range(1..4);
    DoubleStar::new(
        &[0, partner],
        weight(rng),
        (0..4).map(|_| weight(rng)).collect(),
        Regime::Strict,
    )
    .unwrap()
}
