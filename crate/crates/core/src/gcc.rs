//! Utility-based pricing of game contingent claims (Israeli options).
//!
//! The seller may cancel at `τ` and pay `U_τ`; the buyer may exercise at `σ`
//! and receive `L_σ`; if neither acts before the horizon the buyer receives
//! `ξ`. The buyer wins ties. Each side maximizes expected utility of its
//! cash flow, which makes the pair a nonzero-sum Dynkin game with
//! player-two priority (player 1 the seller, player 2 the buyer).

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::dynkin::{
    check_assumptions, iterate_equilibrium, DynkinGame, EquilibriumResult, TieConvention,
};
use crate::error::{Error, Result};
use crate::scalar::{Mode, Scalar};
use crate::tree::{AdaptedProcess, FiltrationTree, NodeId, StoppingTime};

/// Strictly increasing utility with a closed-form inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum UtilityFunction {
    /// `x ↦ a·x + b`, `a > 0`.
    Linear {
        #[serde(with = "rational_string")]
        a: BigRational,
        #[serde(with = "rational_string")]
        b: BigRational,
    },
    /// `x ↦ (1 − exp(−α·x)) / α`, `α > 0`.
    Cara {
        #[serde(with = "rational_string")]
        alpha: BigRational,
    },
}

impl UtilityFunction {
    pub fn identity() -> Self {
        UtilityFunction::Linear {
            a: BigRational::from_integer(1.into()),
            b: BigRational::zero(),
        }
    }

    pub fn check(&self) -> Result<()> {
        let ok = match self {
            UtilityFunction::Linear { a, .. } => a.is_positive(),
            UtilityFunction::Cara { alpha } => alpha.is_positive(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "utility must be strictly increasing: {self:?}"
            )))
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, UtilityFunction::Linear { .. })
    }

    pub fn apply<S: Scalar>(&self, x: &S) -> Result<S> {
        match self {
            UtilityFunction::Linear { a, b } => {
                Ok(S::from_rational(a) * x.clone() + S::from_rational(b))
            }
            UtilityFunction::Cara { alpha } => {
                let alpha = S::from_rational(alpha);
                let e = (-(alpha.clone() * x.clone()))
                    .exp()
                    .ok_or_else(|| Error::NeedsFloat("CARA utility".into()))?;
                Ok((S::one() - e) / alpha)
            }
        }
    }
}

/// Closed-form inverse of `phi`.
pub fn invert_utility<S: Scalar>(phi: &UtilityFunction, y: &S) -> Result<S> {
    match phi {
        UtilityFunction::Linear { a, b } => {
            Ok((y.clone() - S::from_rational(b)) / S::from_rational(a))
        }
        UtilityFunction::Cara { alpha } => {
            if S::MODE == Mode::Exact {
                return Err(Error::NeedsFloat("CARA inverse".into()));
            }
            let alpha = S::from_rational(alpha);
            let inner = S::one() - alpha.clone() * y.clone();
            if inner.partial_cmp(&S::zero()) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::UtilityDomain(format!(
                    "{y} (CARA range is below 1/α = {})",
                    S::one() / alpha
                )));
            }
            let log = inner
                .ln()
                .ok_or_else(|| Error::UtilityDomain(y.to_string()))?;
            Ok(-log / alpha)
        }
    }
}

#[derive(Debug, Clone)]
pub struct GameClaim {
    tree: Arc<FiltrationTree>,
    /// Paid to the buyer on exercise.
    pub lower: AdaptedProcess<BigRational>,
    /// Paid by the seller on cancellation.
    pub upper: AdaptedProcess<BigRational>,
    terminal: Vec<Option<BigRational>>,
    pub phi1: UtilityFunction,
    pub phi2: UtilityFunction,
}

impl GameClaim {
    pub fn new(
        tree: Arc<FiltrationTree>,
        lower: AdaptedProcess<BigRational>,
        upper: AdaptedProcess<BigRational>,
        xi: BTreeMap<NodeId, BigRational>,
        phi1: UtilityFunction,
        phi2: UtilityFunction,
    ) -> Result<Self> {
        lower.check_against(&tree)?;
        upper.check_against(&tree)?;
        phi1.check()?;
        phi2.check()?;
        let mut terminal = vec![None; tree.node_count()];
        for (v, x) in xi {
            if !tree.contains(v) {
                return Err(Error::UnknownNode(v));
            }
            if !tree.is_leaf(v) {
                return Err(Error::InvalidClaim(format!(
                    "terminal value given at inner node {v}"
                )));
            }
            terminal[v.index()] = Some(x);
        }
        for v in tree.nodes() {
            if lower[v] > upper[v] {
                return Err(Error::InvalidClaim(format!("L > U at node {v}")));
            }
        }
        for &l in tree.leaves() {
            let x = terminal[l.index()]
                .as_ref()
                .ok_or_else(|| Error::InvalidClaim(format!("no terminal value at leaf {l}")))?;
            if x < &lower[l] || x > &upper[l] {
                return Err(Error::InvalidClaim(format!("ξ outside [L, U] at leaf {l}")));
            }
        }
        Ok(GameClaim {
            tree,
            lower,
            upper,
            terminal,
            phi1,
            phi2,
        })
    }

    pub fn tree(&self) -> &FiltrationTree {
        &self.tree
    }

    /// Terminal settlement at a leaf.
    pub fn xi(&self, leaf: NodeId) -> &BigRational {
        self.terminal[leaf.index()]
            .as_ref()
            .expect("terminal value exists at every leaf")
    }

    pub fn needs_float(&self) -> bool {
        !(self.phi1.is_exact() && self.phi2.is_exact())
    }
}

/// `E[Γ(τ, σ)]` for seller time `τ` and buyer time `σ`.
pub fn claim_payoff_expectation(
    claim: &GameClaim,
    tau_seller: &StoppingTime,
    sigma_buyer: &StoppingTime,
) -> Result<BigRational> {
    let tree = claim.tree();
    let seller = tau_seller.stop_map(tree)?;
    let buyer = sigma_buyer.stop_map(tree)?;
    let probs = tree.path_probabilities::<BigRational>();
    let horizon = tree.horizon();
    let mut total = BigRational::zero();
    for &l in tree.leaves() {
        let t = seller[l.index()].expect("covers leaf");
        let s = buyer[l.index()].expect("covers leaf");
        let (dt, ds) = (tree.depth(t), tree.depth(s));
        let pay = if ds <= dt && ds < horizon {
            &claim.lower[s]
        } else if dt < ds {
            &claim.upper[t]
        } else {
            claim.xi(l)
        };
        total += &probs[l.index()] * pay;
    }
    Ok(total)
}

/// The Dynkin game whose equilibria price the claim: seller payoffs
/// `X¹ = φ₁(−U)`, `Y¹ = φ₁(−L)`, buyer payoffs `X² = φ₂(L)`, `Y² = φ₂(U)`
/// before the horizon, and `φ₁(−ξ)`, `φ₂(ξ)` on leaves.
pub fn build_dynkin_from_claim<S: Scalar>(claim: &GameClaim) -> Result<DynkinGame<S>> {
    let tree = claim.tree();
    let build = |phi: &UtilityFunction, inner: &AdaptedProcess<BigRational>, sign: bool| {
        let mut vals = Vec::with_capacity(tree.node_count());
        for v in tree.nodes() {
            let raw = if tree.is_leaf(v) {
                claim.xi(v)
            } else {
                &inner[v]
            };
            let x = S::from_rational(raw);
            vals.push(phi.apply(&if sign { -x } else { x })?);
        }
        AdaptedProcess::new(tree, vals)
    };
    let x1 = build(&claim.phi1, &claim.upper, true)?;
    let y1 = build(&claim.phi1, &claim.lower, true)?;
    let x2 = build(&claim.phi2, &claim.lower, false)?;
    let y2 = build(&claim.phi2, &claim.upper, false)?;
    let game = DynkinGame::new(
        Arc::clone(&claim.tree),
        x1,
        y1,
        x2,
        y2,
        TieConvention::P2Priority,
    )?;
    let report = check_assumptions(&game);
    if !report.is_empty() {
        return Err(Error::Internal(format!(
            "claim produced an invalid game: {report}"
        )));
    }
    Ok(game)
}

#[derive(Debug, Clone)]
pub struct PriceQuote<S> {
    pub seller_price: S,
    pub buyer_price: S,
    /// Player 1 is the seller, player 2 the buyer.
    pub equilibrium: EquilibriumResult<S>,
    pub mode: Mode,
}

/// Indifference prices `−φ₁⁻¹(J₁*)` for the seller and `φ₂⁻¹(J₂*)` for
/// the buyer at the constructed equilibrium.
pub fn price_claim<S: Scalar>(claim: &GameClaim, tolerance: f64) -> Result<PriceQuote<S>> {
    if S::MODE == Mode::Exact && claim.needs_float() {
        return Err(Error::NeedsFloat("CARA utilities need float mode".into()));
    }
    let game = build_dynkin_from_claim::<S>(claim)?.with_tolerance(tolerance);
    let equilibrium = iterate_equilibrium(&game)?;
    let seller_price = -invert_utility(&claim.phi1, &equilibrium.j1_star)?;
    let buyer_price = invert_utility(&claim.phi2, &equilibrium.j2_star)?;
    Ok(PriceQuote {
        seller_price,
        buyer_price,
        equilibrium,
        mode: S::MODE,
    })
}

mod rational_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::scalar::parse_rational;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}
