//! Seeded random instances.
//!
//! The generator is ChaCha8 seeded with `seed_from_u64`, and every draw is a
//! `gen_range` over a small integer interval, so a seed produces the same
//! instance on every platform. All values are dyadic: payoffs are `n/d`
//! with `d ∈ {1, 2, 4}` and `|n/d| ≤ 8`, and edge probabilities are
//! multiples of `1/4`. On trees of depth ≤ 10 every distinct pair of
//! conditional expectations therefore differs by at least `4^-11`, far above
//! the float-mode tolerance.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynkin::{DynkinGame, TieConvention};
use crate::error::Result;
use crate::gcc::{GameClaim, UtilityFunction};
use crate::tree::{AdaptedProcess, FiltrationTree, NodeSpec};

pub type InstanceRng = ChaCha8Rng;

pub fn rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

const DENOMINATORS: [i64; 3] = [1, 2, 4];

/// Uniform point of the value grid.
fn grid_value(rng: &mut impl Rng) -> BigRational {
    let d = DENOMINATORS[rng.gen_range(0..DENOMINATORS.len())];
    ratio(rng.gen_range(-8 * d..=8 * d), d)
}

/// Nonnegative gap; zero with probability 1/3 when allowed.
fn gap(rng: &mut impl Rng, allow_zero: bool) -> BigRational {
    if allow_zero && rng.gen_range(0..3) == 0 {
        return BigRational::zero();
    }
    let d = DENOMINATORS[rng.gen_range(0..DENOMINATORS.len())];
    ratio(rng.gen_range(1..=4 * d), d)
}

/// Up-probability of a binomial tree: one of 1/4, 1/2, 3/4.
pub fn random_p_up(rng: &mut impl Rng) -> BigRational {
    ratio(rng.gen_range(1..=3), 4)
}

/// Tree with one to three children per node and dyadic edge probabilities.
pub fn random_tree(rng: &mut impl Rng, depth: usize) -> Result<FiltrationTree> {
    const SPLITS: [&[i64]; 6] = [&[4], &[2, 2], &[1, 3], &[3, 1], &[1, 1, 2], &[2, 1, 1]];
    let mut nodes = vec![NodeSpec {
        parent: None,
        prob: ratio(1, 1),
    }];
    let mut frontier = vec![0usize];
    for _ in 0..depth {
        let mut next = Vec::new();
        for &v in &frontier {
            for &w in SPLITS[rng.gen_range(0..SPLITS.len())] {
                nodes.push(NodeSpec {
                    parent: Some(v),
                    prob: ratio(w, 4),
                });
                next.push(nodes.len() - 1);
            }
        }
        frontier = next;
    }
    FiltrationTree::from_parents(depth, &nodes)
}

/// Game with player-one priority that satisfies the standing assumptions:
/// `X^i ≤ Y^i`, player 2's gap is strict wherever player 1's is, and
/// `Y¹ = X¹` on leaves.
pub fn random_game(
    rng: &mut impl Rng,
    tree: Arc<FiltrationTree>,
) -> Result<DynkinGame<BigRational>> {
    let n = tree.node_count();
    let (mut x1, mut y1, mut x2, mut y2) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for v in tree.nodes() {
        let a = grid_value(rng);
        let b = &a - gap(rng, true);
        let strict = b < a;
        let c = grid_value(rng);
        let d = &c - gap(rng, !strict);
        let (x, y) = if tree.is_leaf(v) {
            (b.clone(), b)
        } else {
            (b, a)
        };
        x1.push(x);
        y1.push(y);
        x2.push(d);
        y2.push(c);
    }
    DynkinGame::new(
        Arc::clone(&tree),
        AdaptedProcess::new(&tree, x1)?,
        AdaptedProcess::new(&tree, y1)?,
        AdaptedProcess::new(&tree, x2)?,
        AdaptedProcess::new(&tree, y2)?,
        TieConvention::P1Priority,
    )
}

/// A valid game with the requested tie convention. Player-two priority
/// instances are player-one instances with the roles swapped.
pub fn random_game_with_tie(
    rng: &mut impl Rng,
    tree: Arc<FiltrationTree>,
    tie: TieConvention,
) -> Result<DynkinGame<BigRational>> {
    let g = random_game(rng, tree)?;
    Ok(match tie {
        TieConvention::P1Priority => g,
        TieConvention::P2Priority => g.swap_players(),
    })
}

/// The instance behind `gen --depth d --seed s`: a binomial tree with a
/// random up-probability and a random valid game on it.
pub fn generate_game(
    depth: usize,
    seed: u64,
    tie: TieConvention,
) -> Result<(DynkinGame<BigRational>, BigRational)> {
    let mut r = rng(seed);
    let p_up = random_p_up(&mut r);
    let tree = Arc::new(FiltrationTree::binomial(depth, &p_up)?);
    Ok((random_game_with_tie(&mut r, tree, tie)?, p_up))
}

/// Zero-sum game: `X¹ ≤ Y¹`, `Y¹ = X¹` on leaves, `X² = −Y¹`, `Y² = −X¹`.
pub fn random_zero_sum_game(
    rng: &mut impl Rng,
    tree: Arc<FiltrationTree>,
) -> Result<DynkinGame<BigRational>> {
    let mut x1 = Vec::with_capacity(tree.node_count());
    let mut y1 = Vec::with_capacity(tree.node_count());
    for v in tree.nodes() {
        let a = grid_value(rng);
        let b = &a - gap(rng, true);
        y1.push(if tree.is_leaf(v) { b.clone() } else { a });
        x1.push(b);
    }
    let x1 = AdaptedProcess::new(&tree, x1)?;
    let y1 = AdaptedProcess::new(&tree, y1)?;
    let x2 = y1.map(|v| -v.clone());
    let y2 = x1.map(|v| -v.clone());
    DynkinGame::new(tree, x1, y1, x2, y2, TieConvention::P1Priority)
}

/// Claim with `L ≤ U`, `ξ` between `L` and `U` on leaves, and the given
/// utilities.
pub fn random_claim(
    rng: &mut impl Rng,
    tree: Arc<FiltrationTree>,
    phi1: UtilityFunction,
    phi2: UtilityFunction,
) -> Result<GameClaim> {
    let mut lower = Vec::with_capacity(tree.node_count());
    let mut upper = Vec::with_capacity(tree.node_count());
    let mut xi = BTreeMap::new();
    for v in tree.nodes() {
        let l = grid_value(rng);
        let u = &l + gap(rng, true);
        if tree.is_leaf(v) {
            let share = ratio(rng.gen_range(0..=4), 4);
            xi.insert(v, &l + (&u - &l) * share);
        }
        lower.push(l);
        upper.push(u);
    }
    GameClaim::new(
        Arc::clone(&tree),
        AdaptedProcess::new(&tree, lower)?,
        AdaptedProcess::new(&tree, upper)?,
        xi,
        phi1,
        phi2,
    )
}
