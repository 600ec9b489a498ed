//! Alternating Snell-envelope construction of an equilibrium pair.
//!
//! Starting from `τ_1 = τ_2 ≡ T`, each round lets player 1 stop optimally
//! against the frozen payoff induced by `τ_{2n}`, giving `τ_{2n+1}`, then
//! player 2 against `τ_{2n+1}`, giving `τ_{2n+2}`. Both sequences decrease
//! pathwise, so on a finite tree they stabilize after finitely many rounds
//! and the stable pair is the equilibrium.

use super::{
    check_assumptions, evaluate_j, frozen_payoff, DynkinGame, EquilibriumResult, IterationTrace,
    Player, TieConvention, TraceEntry,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::snell::snell_envelope_with_tolerance;
use crate::tree::StoppingTime;

#[derive(Debug, Clone)]
pub struct HalfStep<S> {
    /// First instant the envelope meets the player's `X`, capped at the
    /// opponent's stop.
    pub tilde_tau: StoppingTime,
    pub next_tau: StoppingTime,
    pub envelope_root: S,
}

/// One half of a round for `player` (player 1 on odd indices, player 2 on
/// even ones). Takes the latest opponent time and the player's own previous
/// time, which is kept on paths where the envelope does not meet `X`
/// strictly before the opponent stops.
///
/// The game must have player-one priority, be terminal-normalized and pass
/// [`check_assumptions`].
pub fn half_step<S: Scalar>(
    game: &DynkinGame<S>,
    player: Player,
    opponent_tau: &StoppingTime,
    fallback_tau: &StoppingTime,
) -> Result<HalfStep<S>> {
    if game.tie != TieConvention::P1Priority {
        return Err(Error::InvalidParameter(
            "the construction runs on player-one priority games; swap players first".into(),
        ));
    }
    if !game.is_terminal_normalized() {
        return Err(Error::InvalidParameter(
            "game is not terminal-normalized; call normalize_terminal first".into(),
        ));
    }
    let report = check_assumptions(game);
    if !report.is_empty() {
        return Err(Error::AssumptionViolation(report));
    }
    step(game, player, opponent_tau, fallback_tau)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum PathState {
    /// Neither the envelope hit nor the opponent stop has happened yet.
    Open,
    /// The opponent stopped first (or together with the hit); waiting for
    /// the fallback region.
    AwaitFallback,
    Done,
}

fn step<S: Scalar>(
    game: &DynkinGame<S>,
    player: Player,
    opponent_tau: &StoppingTime,
    fallback_tau: &StoppingTime,
) -> Result<HalfStep<S>> {
    let tree = game.tree();
    fallback_tau.check_tree(tree)?;
    let reward = frozen_payoff(game, player, opponent_tau)?;
    let snell = snell_envelope_with_tolerance(tree, &reward, game.tolerance)?;
    let w = snell.envelope;
    let (x, _) = game.payoffs(player);
    let fallback_stops = fallback_tau.stop_map(tree)?;

    let mut state = vec![PathState::Open; tree.node_count()];
    let mut tilde = Vec::new();
    let mut next = Vec::new();
    for &v in tree.top_down() {
        let inherited = tree.parent(v).map_or(PathState::Open, |p| state[p.index()]);
        state[v.index()] = match inherited {
            PathState::Done => PathState::Done,
            PathState::AwaitFallback => {
                if fallback_tau.contains(v) {
                    next.push(v);
                    PathState::Done
                } else {
                    PathState::AwaitFallback
                }
            }
            PathState::Open if opponent_tau.contains(v) => {
                tilde.push(v);
                match fallback_stops[v.index()] {
                    Some(s) if s == v => {
                        next.push(v);
                        PathState::Done
                    }
                    // The fallback stopped earlier on this path, yet nothing hit
                    // before the opponent: the case split would not be adapted.
                    Some(s) => {
                        return Err(Error::Internal(format!(
                            "fallback stopped at node {s} before the cap at node {v} was reached"
                        )))
                    }
                    None => PathState::AwaitFallback,
                }
            }
            PathState::Open if w[v].touches(&x[v], game.tolerance) => {
                tilde.push(v);
                next.push(v);
                PathState::Done
            }
            PathState::Open => PathState::Open,
        };
    }

    Ok(HalfStep {
        tilde_tau: StoppingTime::canonicalize(tree, tilde)?,
        next_tau: StoppingTime::canonicalize(tree, next)?,
        envelope_root: snell.value_at_root,
    })
}

/// Hard cap on rounds: each non-final round lowers some leaf's stop depth
/// in one of the two monotone sequences.
pub(crate) fn round_bound(game_horizon: usize, leaf_count: usize) -> usize {
    2 * (game_horizon + 1) * leaf_count + 4
}

/// Runs the alternating construction to its fixed point and returns the
/// equilibrium pair with its payoffs and the full trace.
///
/// Games with player-two priority are solved on the player-swapped game and
/// mapped back.
pub fn iterate_equilibrium<S: Scalar>(game: &DynkinGame<S>) -> Result<EquilibriumResult<S>> {
    let normalized = game.normalize_terminal();
    let report = check_assumptions(&normalized);
    if !report.is_empty() {
        return Err(Error::AssumptionViolation(report));
    }
    let swapped = normalized.tie == TieConvention::P2Priority;
    let work = if swapped {
        normalized.swap_players()
    } else {
        normalized
    };

    let (first, second, trace, iterations) = construct(&work)?;
    let (tau1_star, tau2_star) = if swapped {
        (second, first)
    } else {
        (first, second)
    };
    let (j1_star, j2_star) = evaluate_j(game, &tau1_star, &tau2_star)?;
    Ok(EquilibriumResult {
        tau1_star,
        tau2_star,
        j1_star,
        j2_star,
        trace,
        iterations,
        players_swapped: swapped,
    })
}

type Construction<S> = (StoppingTime, StoppingTime, IterationTrace<S>, usize);

fn construct<S: Scalar>(game: &DynkinGame<S>) -> Result<Construction<S>> {
    let tree = game.tree();
    let horizon = StoppingTime::terminal(tree);
    let mut entries = vec![
        TraceEntry {
            index: 1,
            tau: horizon.clone(),
            tilde_tau: None,
            envelope_root: None,
        },
        TraceEntry {
            index: 2,
            tau: horizon.clone(),
            tilde_tau: None,
            envelope_root: None,
        },
    ];
    let bound = round_bound(tree.horizon(), tree.leaves().len());
    let mut prev_odd = horizon.clone();
    let mut prev_even = horizon;
    let mut round = 0;
    loop {
        round += 1;
        if round > bound {
            return Err(Error::Internal(format!(
                "construction did not stabilize within {bound} rounds"
            )));
        }
        let odd = step(game, Player::One, &prev_even, &prev_odd)?;
        let even = step(game, Player::Two, &odd.next_tau, &prev_even)?;
        let stable = odd.next_tau == prev_odd && even.next_tau == prev_even;
        entries.push(TraceEntry {
            index: 2 * round + 1,
            tau: odd.next_tau.clone(),
            tilde_tau: Some(odd.tilde_tau),
            envelope_root: Some(odd.envelope_root),
        });
        entries.push(TraceEntry {
            index: 2 * round + 2,
            tau: even.next_tau.clone(),
            tilde_tau: Some(even.tilde_tau),
            envelope_root: Some(even.envelope_root),
        });
        if stable {
            return Ok((
                odd.next_tau,
                even.next_tau,
                IterationTrace { entries },
                round,
            ));
        }
        prev_odd = odd.next_tau;
        prev_even = even.next_tau;
    }
}
