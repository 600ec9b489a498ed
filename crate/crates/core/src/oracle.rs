//! Brute-force and minimax oracles for small instances.
//!
//! Nothing here calls into the equilibrium construction; these routines
//! exist to check it.

use num_rational::BigRational;
use num_traits::Zero;

use crate::dynkin::{evaluate_j, DynkinGame};
use crate::error::{Error, Result};
use crate::gcc::GameClaim;
use crate::scalar::Scalar;
use crate::tree::{FiltrationTree, NodeId, StoppingTime};

/// Largest stopping-time family the enumerator will materialize.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// Number of canonical stopping times, `s(leaf) = 1`,
/// `s(v) = 1 + Π s(child)`. `None` once the count passes `u64::MAX`.
pub fn stopping_time_count(tree: &FiltrationTree) -> Option<u64> {
    let mut count = vec![Some(1u64); tree.node_count()];
    for &v in tree.top_down().iter().rev() {
        let kids = tree.children(v);
        if kids.is_empty() {
            continue;
        }
        count[v.index()] = kids
            .iter()
            .try_fold(1u64, |acc, c| {
                count[c.index()].and_then(|k| acc.checked_mul(k))
            })
            .and_then(|p| p.checked_add(1));
    }
    count[0]
}

/// Same count for a full binary tree of the given depth, without building it.
pub fn binomial_stopping_time_count(depth: usize) -> Option<u64> {
    (0..depth).try_fold(1u64, |s, _| s.checked_mul(s).and_then(|p| p.checked_add(1)))
}

pub(crate) fn too_large(count: Option<u64>) -> Error {
    Error::EnumerationTooLarge {
        count: count.map_or_else(|| "more than 2^64".to_string(), |c| c.to_string()),
        limit: ENUMERATION_LIMIT,
    }
}

/// Every canonical stopping time on the tree, each once, ordered
/// lexicographically by region.
pub fn enumerate_stopping_times(tree: &FiltrationTree) -> Result<Vec<StoppingTime>> {
    let count = stopping_time_count(tree);
    if count.is_none_or(|c| c > ENUMERATION_LIMIT) {
        return Err(too_large(count));
    }
    // Stop here, or combine one choice per child.
    let mut options: Vec<Vec<Vec<NodeId>>> = vec![Vec::new(); tree.node_count()];
    for &v in tree.top_down().iter().rev() {
        let mut here = vec![vec![v]];
        let kids = tree.children(v);
        if !kids.is_empty() {
            let mut product: Vec<Vec<NodeId>> = vec![Vec::new()];
            for &c in kids {
                let child_opts = std::mem::take(&mut options[c.index()]);
                product = product
                    .iter()
                    .flat_map(|prefix| {
                        child_opts.iter().map(move |o| {
                            let mut r = prefix.clone();
                            r.extend_from_slice(o);
                            r
                        })
                    })
                    .collect();
            }
            here.extend(product);
        }
        options[v.index()] = here;
    }
    let mut out = std::mem::take(&mut options[0])
        .into_iter()
        .map(|r| StoppingTime::canonicalize(tree, r))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.region().cmp(b.region()));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nep<S> {
    pub tau1: StoppingTime,
    pub tau2: StoppingTime,
    pub j1: S,
    pub j2: S,
}

#[derive(Debug, Clone)]
pub struct NepList<S> {
    pub stopping_times: usize,
    pub pairs_scanned: usize,
    pub entries: Vec<Nep<S>>,
}

impl<S> NepList<S> {
    pub fn contains_pair(&self, tau1: &StoppingTime, tau2: &StoppingTime) -> bool {
        self.entries
            .iter()
            .any(|e| &e.tau1 == tau1 && &e.tau2 == tau2)
    }
}

/// `J_1[i][j]` and `J_2[i][j]` indexed by enumerated stopping times.
pub type PayoffTables<S> = (Vec<Vec<S>>, Vec<Vec<S>>);

/// Payoff tables over all enumerated pairs.
pub fn payoff_tables<S: Scalar>(
    game: &DynkinGame<S>,
    times: &[StoppingTime],
) -> Result<PayoffTables<S>> {
    let m = times.len();
    let mut j1 = vec![Vec::with_capacity(m); m];
    let mut j2 = vec![Vec::with_capacity(m); m];
    for (i, a) in times.iter().enumerate() {
        for b in times {
            let (x, y) = evaluate_j(game, a, b)?;
            j1[i].push(x);
            j2[i].push(y);
        }
    }
    Ok((j1, j2))
}

/// All pure stopping pairs no player can strictly improve on unilaterally.
pub fn brute_force_neps<S: Scalar>(game: &DynkinGame<S>) -> Result<NepList<S>> {
    let times = enumerate_stopping_times(game.tree())?;
    let m = times.len();
    let (j1, j2) = payoff_tables(game, &times)?;
    let tol = game.tolerance;
    let best1: Vec<S> = (0..m)
        .map(|j| (1..m).fold(j1[0][j].clone(), |b, i| S::max_of(b, j1[i][j].clone())))
        .collect();
    let best2: Vec<S> = (0..m)
        .map(|i| (1..m).fold(j2[i][0].clone(), |b, j| S::max_of(b, j2[i][j].clone())))
        .collect();
    let mut entries = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if !best1[j].exceeds(&j1[i][j], tol) && !best2[i].exceeds(&j2[i][j], tol) {
                entries.push(Nep {
                    tau1: times[i].clone(),
                    tau2: times[j].clone(),
                    j1: j1[i][j].clone(),
                    j2: j2[i][j].clone(),
                });
            }
        }
    }
    Ok(NepList {
        stopping_times: m,
        pairs_scanned: m * m,
        entries,
    })
}

/// Whether `X² = −Y¹` and `Y² = −X¹` hold at every node.
pub fn is_zero_sum<S: Scalar>(game: &DynkinGame<S>) -> bool {
    zero_sum_defect(game).is_none()
}

fn zero_sum_defect<S: Scalar>(game: &DynkinGame<S>) -> Option<String> {
    let tol = game.tolerance;
    for v in game.tree().nodes() {
        if !game.x2[v].approx_eq(&-game.y1[v].clone(), tol) {
            return Some(format!("X2 ≠ −Y1 at node {v}"));
        }
        if !game.y2[v].approx_eq(&-game.x1[v].clone(), tol) {
            return Some(format!("Y2 ≠ −X1 at node {v}"));
        }
    }
    None
}

/// Value of a zero-sum game by the minimax recursion
/// `V = X¹` on leaves, `V = max(X¹, min(Y¹, E[V | node]))` above.
pub fn zero_sum_value<S: Scalar>(game: &DynkinGame<S>) -> Result<S> {
    if let Some(why) = zero_sum_defect(game) {
        return Err(Error::NotZeroSum(why));
    }
    let tree = game.tree();
    for v in tree.nodes() {
        if game.x1[v].exceeds(&game.y1[v], game.tolerance) {
            return Err(Error::NotZeroSum(format!("X1 > Y1 at node {v}")));
        }
    }
    let mut value: Vec<S> = vec![S::zero(); tree.node_count()];
    for &v in tree.top_down().iter().rev() {
        let kids = tree.children(v);
        value[v.index()] = if kids.is_empty() {
            game.x1[v].clone()
        } else {
            let cont = kids.iter().fold(S::zero(), |acc, &c| {
                acc + S::from_rational(tree.edge_prob(c)) * value[c.index()].clone()
            });
            S::max_of(game.x1[v].clone(), S::min_of(game.y1[v].clone(), cont))
        };
    }
    Ok(value[0].clone())
}

/// Saddle value of `E[Γ(τ, σ)]`: the buyer maximizes, the seller minimizes,
/// exercise wins ties. `V = ξ` on leaves, `V = max(L, min(U, E[V | node]))`.
pub fn claim_saddle_value(claim: &GameClaim) -> BigRational {
    let tree = claim.tree();
    let mut value = vec![BigRational::zero(); tree.node_count()];
    for &v in tree.top_down().iter().rev() {
        let kids = tree.children(v);
        value[v.index()] = if kids.is_empty() {
            claim.xi(v).clone()
        } else {
            let cont: BigRational = kids
                .iter()
                .map(|&c| tree.edge_prob(c) * &value[c.index()])
                .sum();
            let capped = if claim.upper[v] < cont {
                claim.upper[v].clone()
            } else {
                cont
            };
            if claim.lower[v] > capped {
                claim.lower[v].clone()
            } else {
                capped
            }
        };
    }
    value.swap_remove(0)
}
