//! Equilibrium certification by independent best responses.

use std::fmt;

use super::{evaluate_j, DynkinGame, EquilibriumResult, Player};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::tree::StoppingTime;

/// Best value `player` can reach against a fixed opponent stopping time.
///
/// Runs backward induction on the payoff process itself: the player earns
/// `X` at nodes where stopping now counts as stopping first under the
/// game's tie convention, and otherwise `Y` frozen at the opponent's stop
/// node. Shares no code with the construction.
pub fn best_response_value<S: Scalar>(
    game: &DynkinGame<S>,
    player: Player,
    opponent_tau: &StoppingTime,
) -> Result<S> {
    let tree = game.tree();
    let stops = opponent_tau.stop_map(tree)?;
    let (x, y) = game.payoffs(player);
    let has_priority = game.tie.priority() == player;
    let reward = |v: crate::tree::NodeId| -> S {
        match stops[v.index()] {
            None => x[v].clone(),
            Some(s) if s == v && has_priority => x[v].clone(),
            Some(s) => y[s].clone(),
        }
    };
    let mut value: Vec<S> = vec![S::zero(); tree.node_count()];
    for &v in tree.top_down().iter().rev() {
        let here = reward(v);
        let kids = tree.children(v);
        value[v.index()] = if kids.is_empty() {
            here
        } else {
            let cont = kids.iter().fold(S::zero(), |acc, &c| {
                acc + S::from_rational(tree.edge_prob(c)) * value[c.index()].clone()
            });
            S::max_of(here, cont)
        };
    }
    Ok(value[0].clone())
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquilibriumIssue<S> {
    /// The stored payoff differs from a fresh path-sum.
    ValueMismatch {
        player: Player,
        reported: S,
        recomputed: S,
    },
    /// A unilateral deviation strictly improves the player.
    ProfitableDeviation { player: Player, current: S, best: S },
}

impl<S: fmt::Display> fmt::Display for EquilibriumIssue<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquilibriumIssue::ValueMismatch {
                player,
                reported,
                recomputed,
            } => {
                write!(
                    f,
                    "{player}: reported J = {reported} but the pair yields {recomputed}"
                )
            }
            EquilibriumIssue::ProfitableDeviation {
                player,
                current,
                best,
            } => {
                write!(f, "{player} improves {current}→{best}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport<S> {
    pub j1: S,
    pub j2: S,
    pub best_response1: S,
    pub best_response2: S,
    pub issues: Vec<EquilibriumIssue<S>>,
}

impl<S> EquilibriumReport<S> {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Checks that neither player can gain by deviating from `(tau1, tau2)`.
pub fn verify_pair<S: Scalar>(
    game: &DynkinGame<S>,
    tau1: &StoppingTime,
    tau2: &StoppingTime,
) -> Result<EquilibriumReport<S>> {
    let (j1, j2) = evaluate_j(game, tau1, tau2)?;
    let best_response1 = best_response_value(game, Player::One, tau2)?;
    let best_response2 = best_response_value(game, Player::Two, tau1)?;
    let mut issues = Vec::new();
    for (player, current, best) in [
        (Player::One, &j1, &best_response1),
        (Player::Two, &j2, &best_response2),
    ] {
        if best.exceeds(current, game.tolerance) {
            issues.push(EquilibriumIssue::ProfitableDeviation {
                player,
                current: current.clone(),
                best: best.clone(),
            });
        }
    }
    Ok(EquilibriumReport {
        j1,
        j2,
        best_response1,
        best_response2,
        issues,
    })
}

/// [`verify_pair`] on the result's pair, plus a check of its stored payoffs.
pub fn verify_equilibrium<S: Scalar>(
    game: &DynkinGame<S>,
    result: &EquilibriumResult<S>,
) -> Result<EquilibriumReport<S>> {
    let mut report = verify_pair(game, &result.tau1_star, &result.tau2_star)?;
    let mut mismatches = Vec::new();
    for (player, reported, recomputed) in [
        (Player::One, &result.j1_star, &report.j1),
        (Player::Two, &result.j2_star, &report.j2),
    ] {
        if !reported.approx_eq(recomputed, game.tolerance) {
            mismatches.push(EquilibriumIssue::ValueMismatch {
                player,
                reported: reported.clone(),
                recomputed: recomputed.clone(),
            });
        }
    }
    mismatches.append(&mut report.issues);
    report.issues = mismatches;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::iterate_equilibrium;
    use super::*;

    #[test]
    fn best_response_examples() {
        let g = g1();
        let t = g.tree();
        let end = StoppingTime::terminal(t);
        let now = StoppingTime::immediate(t);
        assert_eq!(best_response_value(&g, Player::One, &end).unwrap(), q(2, 1));
        assert_eq!(best_response_value(&g, Player::Two, &now).unwrap(), q(1, 1));
        let c = constant(2, q(4, 1));
        let ct = c.tree();
        for tau in [StoppingTime::terminal(ct), StoppingTime::immediate(ct)] {
            for p in [Player::One, Player::Two] {
                assert_eq!(best_response_value(&c, p, &tau).unwrap(), q(4, 1));
            }
        }
    }

    #[test]
    fn g1_result_verifies() {
        let g = g1();
        let r = iterate_equilibrium(&g).unwrap();
        let report = verify_equilibrium(&g, &r).unwrap();
        assert!(report.is_empty(), "{:?}", report.issues);
    }

    #[test]
    fn replacing_tau1_by_horizon_is_caught() {
        let g = g1();
        let mut r = iterate_equilibrium(&g).unwrap();
        let end = StoppingTime::terminal(g.tree());
        r.tau1_star = end.clone();
        let (j1, j2) = evaluate_j(&g, &end, &end).unwrap();
        r.j1_star = j1;
        r.j2_star = j2;
        let report = verify_equilibrium(&g, &r).unwrap();
        assert_eq!(
            report.issues,
            vec![EquilibriumIssue::ProfitableDeviation {
                player: Player::One,
                current: q(3, 2),
                best: q(2, 1)
            }]
        );
        assert_eq!(report.issues[0].to_string(), "player 1 improves 3/2→2");
    }

    #[test]
    fn stale_values_are_reported() {
        let g = g1();
        let mut r = iterate_equilibrium(&g).unwrap();
        r.j2_star = q(9, 1);
        let report = verify_equilibrium(&g, &r).unwrap();
        assert!(matches!(
            report.issues[0],
            EquilibriumIssue::ValueMismatch {
                player: Player::Two,
                ..
            }
        ));
    }

    #[test]
    fn constant_game_verifies() {
        let g = constant(2, q(1, 3));
        let r = iterate_equilibrium(&g).unwrap();
        assert!(verify_equilibrium(&g, &r).unwrap().is_empty());
    }
}
