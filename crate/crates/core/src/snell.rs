//! Snell envelopes and optimal stopping by backward induction.

use crate::error::{Error, Result};
use crate::scalar::{Scalar, DEFAULT_TOLERANCE};
use crate::tree::{AdaptedProcess, FiltrationTree, NodeId, StoppingTime};

#[derive(Debug, Clone)]
pub struct SnellResult<S> {
    /// Smallest supermartingale dominating the reward.
    pub envelope: AdaptedProcess<S>,
    /// First contact of the envelope with the reward.
    pub first_hit: StoppingTime,
    pub value_at_root: S,
}

/// One-step conditional expectation `Σ p(child) · proc(child)` at a
/// non-leaf node.
pub fn conditional_expectation<S: Scalar>(
    tree: &FiltrationTree,
    proc: &AdaptedProcess<S>,
    node: NodeId,
) -> Result<S> {
    proc.check_against(tree)?;
    if !tree.contains(node) {
        return Err(Error::UnknownNode(node));
    }
    if tree.is_leaf(node) {
        return Err(Error::LeafNode(node));
    }
    Ok(one_step(tree, proc.values(), node))
}

pub(crate) fn one_step<S: Scalar>(tree: &FiltrationTree, values: &[S], node: NodeId) -> S {
    tree.children(node).iter().fold(S::zero(), |acc, &c| {
        acc + S::from_rational(tree.edge_prob(c)) * values[c.index()].clone()
    })
}

pub fn snell_envelope<S: Scalar>(
    tree: &FiltrationTree,
    reward: &AdaptedProcess<S>,
) -> Result<SnellResult<S>> {
    snell_envelope_with_tolerance(tree, reward, DEFAULT_TOLERANCE)
}

/// Backward induction `W = U` on leaves, `W = max(U, E[W | node])` above.
/// `tol` only matters in float mode, where it widens the `W = U` test.
pub fn snell_envelope_with_tolerance<S: Scalar>(
    tree: &FiltrationTree,
    reward: &AdaptedProcess<S>,
    tol: f64,
) -> Result<SnellResult<S>> {
    reward.check_against(tree)?;
    let u = reward.values();
    let mut w: Vec<S> = u.to_vec();
    for &v in tree.top_down().iter().rev() {
        if !tree.is_leaf(v) {
            let cont = one_step(tree, &w, v);
            w[v.index()] = S::max_of(u[v.index()].clone(), cont);
        }
    }
    let hits = tree
        .nodes()
        .filter(|v| w[v.index()].touches(&u[v.index()], tol));
    let first_hit = StoppingTime::canonicalize(tree, hits)?;
    let value_at_root = w[0].clone();
    Ok(SnellResult {
        envelope: AdaptedProcess::new(tree, w)?,
        first_hit,
        value_at_root,
    })
}

/// `E[proc_τ]` by summing over leaf paths.
pub fn expected_stopped_value<S: Scalar>(
    tree: &FiltrationTree,
    proc: &AdaptedProcess<S>,
    tau: &StoppingTime,
) -> Result<S> {
    proc.check_against(tree)?;
    let stops = tau.stop_map(tree)?;
    let probs = tree.path_probabilities::<S>();
    Ok(tree.leaves().iter().fold(S::zero(), |acc, l| {
        let s = stops[l.index()].expect("stopping time covers every leaf");
        acc + probs[l.index()].clone() * proc[s].clone()
    }))
}

/// Checks that stopping the reward at `result.first_hit` earns the root
/// value of the envelope.
pub fn optimal_value_check<S: Scalar>(
    tree: &FiltrationTree,
    reward: &AdaptedProcess<S>,
    result: &SnellResult<S>,
) -> Result<bool> {
    let earned = expected_stopped_value(tree, reward, &result.first_hit)?;
    Ok(earned.approx_eq(&result.value_at_root, DEFAULT_TOLERANCE))
}
