//! Nonzero-sum Dynkin games on a filtration tree.
//!
//! Player `i` chooses a stopping time `τ_i`. The player who stops first
//! receives `X^i` at the stop node; the other receives `Y^i` there. The
//! [`TieConvention`] decides who counts as stopping first when
//! `τ_1 = τ_2`.

mod construction;
mod verify;

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

pub use construction::{half_step, iterate_equilibrium, HalfStep};
pub use verify::{
    best_response_value, verify_equilibrium, verify_pair, EquilibriumIssue, EquilibriumReport,
};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, DEFAULT_TOLERANCE};
use crate::tree::{AdaptedProcess, FiltrationTree, NodeId, StoppingTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Player::One => 1,
            Player::Two => 2,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "player {}", self.number())
    }
}

/// Who is charged with stopping the game when both stop at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TieConvention {
    #[serde(rename = "p1")]
    P1Priority,
    #[serde(rename = "p2")]
    P2Priority,
}

impl TieConvention {
    pub fn priority(self) -> Player {
        match self {
            TieConvention::P1Priority => Player::One,
            TieConvention::P2Priority => Player::Two,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TieConvention::P1Priority => "p1",
            TieConvention::P2Priority => "p2",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DynkinGame<S> {
    tree: Arc<FiltrationTree>,
    pub x1: AdaptedProcess<S>,
    pub y1: AdaptedProcess<S>,
    pub x2: AdaptedProcess<S>,
    pub y2: AdaptedProcess<S>,
    pub tie: TieConvention,
    /// Hit-test tolerance; ignored in exact mode.
    pub tolerance: f64,
}

impl<S: Scalar> DynkinGame<S> {
    pub fn new(
        tree: Arc<FiltrationTree>,
        x1: AdaptedProcess<S>,
        y1: AdaptedProcess<S>,
        x2: AdaptedProcess<S>,
        y2: AdaptedProcess<S>,
        tie: TieConvention,
    ) -> Result<Self> {
        if tree.horizon() < 1 {
            return Err(Error::InvalidParameter(
                "game horizon must be at least 1".into(),
            ));
        }
        for p in [&x1, &y1, &x2, &y2] {
            p.check_against(&tree)?;
        }
        Ok(DynkinGame {
            tree,
            x1,
            y1,
            x2,
            y2,
            tie,
            tolerance: DEFAULT_TOLERANCE,
        })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn tree(&self) -> &FiltrationTree {
        &self.tree
    }

    pub fn shared_tree(&self) -> &Arc<FiltrationTree> {
        &self.tree
    }

    /// `(X^i, Y^i)` for one player.
    pub fn payoffs(&self, player: Player) -> (&AdaptedProcess<S>, &AdaptedProcess<S>) {
        match player {
            Player::One => (&self.x1, &self.y1),
            Player::Two => (&self.x2, &self.y2),
        }
    }

    /// The same game with the players' roles exchanged. The tie convention
    /// flips with them, so payoffs are unchanged up to relabelling.
    pub fn swap_players(&self) -> Self {
        DynkinGame {
            tree: Arc::clone(&self.tree),
            x1: self.x2.clone(),
            y1: self.y2.clone(),
            x2: self.x1.clone(),
            y2: self.y1.clone(),
            tie: match self.tie {
                TieConvention::P1Priority => TieConvention::P2Priority,
                TieConvention::P2Priority => TieConvention::P1Priority,
            },
            tolerance: self.tolerance,
        }
    }

    /// Converts every payoff to another number type.
    pub fn map_values<T: Scalar>(&self, f: impl Fn(&S) -> T) -> DynkinGame<T> {
        DynkinGame {
            tree: Arc::clone(&self.tree),
            x1: self.x1.map(&f),
            y1: self.y1.map(&f),
            x2: self.x2.map(&f),
            y2: self.y2.map(&f),
            tie: self.tie,
            tolerance: self.tolerance,
        }
    }

    /// Sets the priority player's `Y` to its `X` on leaves. The overwritten
    /// values never enter either payoff: the priority player cannot be
    /// preempted at the horizon.
    pub fn normalize_terminal(&self) -> Self {
        let mut out = self.clone();
        let (x, y) = match self.tie {
            TieConvention::P1Priority => (&self.x1, &mut out.y1),
            TieConvention::P2Priority => (&self.x2, &mut out.y2),
        };
        for &l in self.tree.leaves() {
            y.set(l, x[l].clone());
        }
        out
    }

    pub(crate) fn is_terminal_normalized(&self) -> bool {
        let (x, y) = self.payoffs(self.tie.priority());
        self.tree.leaves().iter().all(|&l| x[l] == y[l])
    }
}

impl DynkinGame<BigRational> {
    pub fn to_float(&self) -> DynkinGame<f64> {
        self.map_values(<f64 as Scalar>::from_rational)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssumptionIssue {
    /// `X^i > Y^i` at a node.
    PenaltyOrder { node: NodeId, player: Player },
    /// The priority player's gap `X < Y` is open while the other's is not.
    GapConsistency { node: NodeId },
}

impl fmt::Display for AssumptionIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssumptionIssue::PenaltyOrder { node, player } => {
                let i = player.number();
                write!(f, "penalty order violated at node {node}: X{i} > Y{i}")
            }
            AssumptionIssue::GapConsistency { node } => {
                write!(f, "gap consistency violated at node {node}: priority player has X < Y but the other has X = Y")
            }
        }
    }
}

/// Outcome of [`check_assumptions`]. Uniform integrability and jump
/// regularity hold trivially on a finite tree and are not listed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssumptionReport {
    pub issues: Vec<AssumptionIssue>,
}

impl AssumptionReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return f.write_str("no violations");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Node-by-node check of `X^i ≤ Y^i` and of gap consistency: wherever the
/// priority player's `X < Y`, the other player's must be strict too.
pub fn check_assumptions<S: Scalar>(game: &DynkinGame<S>) -> AssumptionReport {
    let mut issues = Vec::new();
    let tol = game.tolerance;
    let lead = game.tie.priority();
    let (xl, yl) = game.payoffs(lead);
    let (xo, yo) = game.payoffs(lead.other());
    for v in game.tree.nodes() {
        for player in [Player::One, Player::Two] {
            let (x, y) = game.payoffs(player);
            if x[v].exceeds(&y[v], tol) {
                issues.push(AssumptionIssue::PenaltyOrder { node: v, player });
            }
        }
        if yl[v].exceeds(&xl[v], tol) && !yo[v].exceeds(&xo[v], tol) {
            issues.push(AssumptionIssue::GapConsistency { node: v });
        }
    }
    AssumptionReport { issues }
}

/// `(J_1, J_2)` of a stopping pair, by summing over leaf paths.
pub fn evaluate_j<S: Scalar>(
    game: &DynkinGame<S>,
    tau1: &StoppingTime,
    tau2: &StoppingTime,
) -> Result<(S, S)> {
    let tree = game.tree();
    let s1 = tau1.stop_map(tree)?;
    let s2 = tau2.stop_map(tree)?;
    let probs = tree.path_probabilities::<S>();
    let (mut j1, mut j2) = (S::zero(), S::zero());
    for &l in tree.leaves() {
        let a = s1[l.index()].expect("covers leaf");
        let b = s2[l.index()].expect("covers leaf");
        let (da, db) = (tree.depth(a), tree.depth(b));
        let one_stops_first = match game.tie {
            TieConvention::P1Priority => da <= db,
            TieConvention::P2Priority => da < db,
        };
        let (p1, p2) = if one_stops_first {
            (game.x1[a].clone(), game.y2[a].clone())
        } else {
            (game.y1[b].clone(), game.x2[b].clone())
        };
        let p = probs[l.index()].clone();
        j1 = j1 + p.clone() * p1;
        j2 = j2 + p * p2;
    }
    Ok((j1, j2))
}

/// The reward a player faces against a fixed opponent stopping time:
/// `X` strictly before the opponent stops, and from then on the player's
/// `Y` frozen at the opponent's stop node.
pub fn frozen_payoff<S: Scalar>(
    game: &DynkinGame<S>,
    player: Player,
    opponent_tau: &StoppingTime,
) -> Result<AdaptedProcess<S>> {
    let stops = opponent_tau.stop_map(game.tree())?;
    let (x, y) = game.payoffs(player);
    Ok(AdaptedProcess::from_fn(game.tree(), |v| {
        match stops[v.index()] {
            None => x[v].clone(),
            Some(s) => y[s].clone(),
        }
    }))
}

#[derive(Debug, Clone)]
pub struct TraceEntry<S> {
    pub index: usize,
    pub tau: StoppingTime,
    /// Capped first hit of the envelope with `X`; absent for the two
    /// starting entries.
    pub tilde_tau: Option<StoppingTime>,
    pub envelope_root: Option<S>,
}

/// Every `τ_n` produced by the alternating construction, from `τ_1 = τ_2 ≡ T`.
#[derive(Debug, Clone)]
pub struct IterationTrace<S> {
    pub entries: Vec<TraceEntry<S>>,
}

impl<S> IterationTrace<S> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `τ_n`, one-based.
    pub fn tau(&self, n: usize) -> &StoppingTime {
        &self.entries[n - 1].tau
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult<S> {
    pub tau1_star: StoppingTime,
    pub tau2_star: StoppingTime,
    pub j1_star: S,
    pub j2_star: S,
    /// Trace of the priority-one game actually iterated. When the input
    /// gave priority to player 2 this is the player-swapped game, and the
    /// odd entries belong to the original player 2.
    pub trace: IterationTrace<S>,
    /// Number of odd/even rounds until the pair stabilized.
    pub iterations: usize,
    pub players_swapped: bool,
}
