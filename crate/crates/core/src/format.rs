//! JSON file formats and report shapes.
//!
//! Game file:
//!
//! ```json
//! {
//!   "horizon": 1,
//!   "tree": {"kind": "binomial", "depth": 1, "p_up": "1/2"},
//!   "processes": {"X1": {"0": "2", "1": "3", "2": "0"}, "Y1": {...}, "X2": {...}, "Y2": {...}},
//!   "tie": "p1"
//! }
//! ```
//!
//! An explicit tree lists `{"id": k, "parent": j, "prob": "num/den"}` with
//! dense ids `0..n` and root `0` (parent `null`, prob optional). Rationals
//! are `"num/den"` strings, exact decimal strings, or JSON integers. Every
//! node map must give a value for every node. A claim file replaces
//! `processes`/`tie` by `"L"`, `"U"` node maps, an `"xi"` leaf map and the
//! utilities `"phi1"`, `"phi2"`. A stopping-time file is `{"region": [ids]}`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynkin::{
    DynkinGame, EquilibriumReport, EquilibriumResult, IterationTrace, TieConvention,
};
use crate::error::{Error, Result};
use crate::gcc::{GameClaim, PriceQuote, UtilityFunction};
use crate::oracle::{self, NepList};
use crate::scalar::{parse_rational, Mode, Scalar};
use crate::tree::{validate, AdaptedProcess, FiltrationTree, NodeId, NodeSpec, StoppingTime};

/// A rational as it appears in files.
#[derive(Debug, Clone, PartialEq)]
pub struct Rational(pub BigRational);

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Rational;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational as \"num/den\", a decimal string, or an integer")
            }
            fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<Rational, E> {
                parse_rational(s).map(Rational).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, n: i64) -> std::result::Result<Rational, E> {
                Ok(Rational(BigRational::from_integer(n.into())))
            }
            fn visit_u64<E: de::Error>(self, n: u64) -> std::result::Result<Rational, E> {
                Ok(Rational(BigRational::from_integer(n.into())))
            }
            fn visit_f64<E: de::Error>(self, x: f64) -> std::result::Result<Rational, E> {
                Err(E::custom(format!(
                    "non-integer number {x}; write decimals as strings"
                )))
            }
        }
        d.deserialize_any(V)
    }
}

/// Values keyed by node id, written in numeric key order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeMap(pub BTreeMap<u32, BigRational>);

impl Serialize for NodeMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(&k.to_string(), &Rational(v.clone()))?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for NodeMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = NodeMap;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object from node ids to rationals")
            }
            fn visit_map<A: MapAccess<'de>>(
                self,
                mut a: A,
            ) -> std::result::Result<NodeMap, A::Error> {
                let mut out = BTreeMap::new();
                while let Some((k, v)) = a.next_entry::<String, Rational>()? {
                    let id: u32 = k
                        .parse()
                        .map_err(|_| de::Error::custom(format!("node key {k:?} is not an id")))?;
                    if out.insert(id, v.0).is_some() {
                        return Err(de::Error::custom(format!("node {id} given twice")));
                    }
                }
                Ok(NodeMap(out))
            }
        }
        d.deserialize_map(V)
    }
}

impl NodeMap {
    pub fn from_process(p: &AdaptedProcess<BigRational>) -> Self {
        NodeMap(
            p.values()
                .iter()
                .enumerate()
                .map(|(i, v)| (i as u32, v.clone()))
                .collect(),
        )
    }

    /// Requires exactly one value per node.
    pub fn to_process(
        &self,
        tree: &FiltrationTree,
        name: &str,
    ) -> Result<AdaptedProcess<BigRational>> {
        if let Some((&k, _)) = self.0.iter().find(|(k, _)| !tree.contains(NodeId(**k))) {
            return Err(Error::Parse(format!("{name}: node {k} is not in the tree")));
        }
        let values = tree
            .nodes()
            .map(|v| {
                self.0
                    .get(&v.0)
                    .cloned()
                    .ok_or_else(|| Error::Parse(format!("{name}: no value for node {v}")))
            })
            .collect::<Result<Vec<_>>>()?;
        AdaptedProcess::new(tree, values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: usize,
    #[serde(default)]
    pub parent: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TreeSpec {
    Binomial { depth: usize, p_up: Rational },
    Explicit { nodes: Vec<NodeEntry> },
}

impl TreeSpec {
    /// Stopping-time count of the described tree, computed without building
    /// it for binomial trees. `None` when it overflows `u64`.
    pub fn stopping_time_count(&self, horizon: usize) -> Result<Option<u64>> {
        match self {
            TreeSpec::Binomial { depth, .. } => Ok(oracle::binomial_stopping_time_count(*depth)),
            TreeSpec::Explicit { .. } => Ok(oracle::stopping_time_count(&self.build(horizon)?)),
        }
    }

    /// Builds and validates the tree; `horizon` must equal its depth.
    pub fn build(&self, horizon: usize) -> Result<FiltrationTree> {
        let tree = match self {
            TreeSpec::Binomial { depth, p_up } => {
                if *depth != horizon {
                    return Err(Error::Parse(format!(
                        "horizon {horizon} differs from binomial depth {depth}"
                    )));
                }
                FiltrationTree::binomial(*depth, &p_up.0)?
            }
            TreeSpec::Explicit { nodes } => {
                let mut sorted: Vec<&NodeEntry> = nodes.iter().collect();
                sorted.sort_by_key(|e| e.id);
                let mut specs = Vec::with_capacity(sorted.len());
                for (i, e) in sorted.iter().enumerate() {
                    if e.id != i {
                        return Err(Error::Parse(format!(
                            "node ids must be 0..{} without gaps or repeats",
                            nodes.len()
                        )));
                    }
                    let prob = match (&e.parent, &e.prob) {
                        (_, Some(p)) => p.0.clone(),
                        (None, None) => BigRational::from_integer(1.into()),
                        (Some(_), None) => {
                            return Err(Error::Parse(format!("node {i} has no edge probability")))
                        }
                    };
                    specs.push(NodeSpec {
                        parent: e.parent,
                        prob,
                    });
                }
                FiltrationTree::from_parents(horizon, &specs)?
            }
        };
        let violations = validate(&tree);
        if !violations.is_empty() {
            let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::MalformedTree(text.join("; ")));
        }
        Ok(tree)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Processes {
    #[serde(rename = "X1")]
    pub x1: NodeMap,
    #[serde(rename = "Y1")]
    pub y1: NodeMap,
    #[serde(rename = "X2")]
    pub x2: NodeMap,
    #[serde(rename = "Y2")]
    pub y2: NodeMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub horizon: usize,
    pub tree: TreeSpec,
    pub processes: Processes,
    #[serde(default = "default_tie")]
    pub tie: TieConvention,
}

fn default_tie() -> TieConvention {
    TieConvention::P1Priority
}

impl GameFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_game(&self) -> Result<DynkinGame<BigRational>> {
        let tree = Arc::new(self.tree.build(self.horizon)?);
        let p = &self.processes;
        DynkinGame::new(
            Arc::clone(&tree),
            p.x1.to_process(&tree, "X1")?,
            p.y1.to_process(&tree, "Y1")?,
            p.x2.to_process(&tree, "X2")?,
            p.y2.to_process(&tree, "Y2")?,
            self.tie,
        )
    }

    /// File for a game on a binomial tree with the given up-probability.
    pub fn binomial(game: &DynkinGame<BigRational>, p_up: &BigRational) -> Self {
        let depth = game.tree().horizon();
        GameFile {
            horizon: depth,
            tree: TreeSpec::Binomial {
                depth,
                p_up: Rational(p_up.clone()),
            },
            processes: Processes {
                x1: NodeMap::from_process(&game.x1),
                y1: NodeMap::from_process(&game.y1),
                x2: NodeMap::from_process(&game.x2),
                y2: NodeMap::from_process(&game.y2),
            },
            tie: game.tie,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimFile {
    pub horizon: usize,
    pub tree: TreeSpec,
    #[serde(rename = "L")]
    pub lower: NodeMap,
    #[serde(rename = "U")]
    pub upper: NodeMap,
    pub xi: NodeMap,
    pub phi1: UtilityFunction,
    pub phi2: UtilityFunction,
}

impl ClaimFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_claim(&self) -> Result<GameClaim> {
        let tree = Arc::new(self.tree.build(self.horizon)?);
        let lower = self.lower.to_process(&tree, "L")?;
        let upper = self.upper.to_process(&tree, "U")?;
        let xi = self
            .xi
            .0
            .iter()
            .map(|(&k, v)| (NodeId(k), v.clone()))
            .collect();
        GameClaim::new(tree, lower, upper, xi, self.phi1.clone(), self.phi2.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingTimeFile {
    pub region: Vec<u32>,
}

impl StoppingTimeFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_stopping_time(&self, tree: &FiltrationTree) -> Result<StoppingTime> {
        StoppingTime::canonicalize(tree, self.region.iter().map(|&i| NodeId(i)))
    }
}

fn region(t: &StoppingTime) -> Vec<u32> {
    t.region().iter().map(|v| v.0).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub n: usize,
    pub tau: Vec<u32>,
    pub tilde_tau: Option<Vec<u32>>,
    pub envelope_root: Option<Value>,
}

fn trace_rows<S: Scalar>(trace: &IterationTrace<S>) -> Vec<TraceRow> {
    trace
        .entries
        .iter()
        .map(|e| TraceRow {
            n: e.index,
            tau: region(&e.tau),
            tilde_tau: e.tilde_tau.as_ref().map(region),
            envelope_root: e.envelope_root.as_ref().map(Scalar::to_json),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub mode: Mode,
    pub tie: TieConvention,
    pub tau1_star: Vec<u32>,
    pub tau2_star: Vec<u32>,
    #[serde(rename = "J1_star")]
    pub j1_star: Value,
    #[serde(rename = "J2_star")]
    pub j2_star: Value,
    pub iterations: usize,
    pub players_swapped: bool,
    pub trace: Vec<TraceRow>,
}

impl SolveReport {
    pub fn new<S: Scalar>(tie: TieConvention, r: &EquilibriumResult<S>) -> Self {
        SolveReport {
            mode: S::MODE,
            tie,
            tau1_star: region(&r.tau1_star),
            tau2_star: region(&r.tau2_star),
            j1_star: r.j1_star.to_json(),
            j2_star: r.j2_star.to_json(),
            iterations: r.iterations,
            players_swapped: r.players_swapped,
            trace: trace_rows(&r.trace),
        }
    }
}

/// Trace as CSV: `n,tau,tilde_tau,envelope_root`, node lists separated by
/// spaces, absent fields empty.
pub fn trace_csv<S: Scalar>(trace: &IterationTrace<S>) -> String {
    let list = |t: &StoppingTime| {
        region(t)
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = String::from("n,tau,tilde_tau,envelope_root\n");
    for e in &trace.entries {
        let tilde = e.tilde_tau.as_ref().map(list).unwrap_or_default();
        let root = e
            .envelope_root
            .as_ref()
            .map(|v| v.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.index,
            list(&e.tau),
            tilde,
            root
        ));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub mode: Mode,
    pub tau1: Vec<u32>,
    pub tau2: Vec<u32>,
    #[serde(rename = "J1")]
    pub j1: Value,
    #[serde(rename = "J2")]
    pub j2: Value,
    pub best_response_1: Value,
    pub best_response_2: Value,
    pub equilibrium: bool,
    pub violations: Vec<String>,
}

impl VerifyReport {
    pub fn new<S: Scalar>(
        tau1: &StoppingTime,
        tau2: &StoppingTime,
        r: &EquilibriumReport<S>,
    ) -> Self {
        VerifyReport {
            mode: S::MODE,
            tau1: region(tau1),
            tau2: region(tau2),
            j1: r.j1.to_json(),
            j2: r.j2.to_json(),
            best_response_1: r.best_response1.to_json(),
            best_response_2: r.best_response2.to_json(),
            equilibrium: r.is_empty(),
            violations: r.issues.iter().map(|i| i.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NepRow {
    pub tau1: Vec<u32>,
    pub tau2: Vec<u32>,
    #[serde(rename = "J1")]
    pub j1: Value,
    #[serde(rename = "J2")]
    pub j2: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub mode: Mode,
    pub stopping_times: usize,
    pub pairs_scanned: usize,
    pub neps: Vec<NepRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_sum_value: Option<Value>,
}

impl OracleReport {
    pub fn new<S: Scalar>(list: &NepList<S>, zero_sum_value: Option<S>) -> Self {
        OracleReport {
            mode: S::MODE,
            stopping_times: list.stopping_times,
            pairs_scanned: list.pairs_scanned,
            neps: list
                .entries
                .iter()
                .map(|e| NepRow {
                    tau1: region(&e.tau1),
                    tau2: region(&e.tau2),
                    j1: e.j1.to_json(),
                    j2: e.j2.to_json(),
                })
                .collect(),
            zero_sum_value: zero_sum_value.map(|v| v.to_json()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PriceReport {
    pub mode: Mode,
    pub seller_price: Value,
    pub buyer_price: Value,
    pub tau_seller: Vec<u32>,
    pub sigma_buyer: Vec<u32>,
    #[serde(rename = "J1_star")]
    pub j1_star: Value,
    #[serde(rename = "J2_star")]
    pub j2_star: Value,
    pub iterations: usize,
}

impl PriceReport {
    pub fn new<S: Scalar>(q: &PriceQuote<S>) -> Self {
        let e = &q.equilibrium;
        PriceReport {
            mode: q.mode,
            seller_price: q.seller_price.to_json(),
            buyer_price: q.buyer_price.to_json(),
            tau_seller: region(&e.tau1_star),
            sigma_buyer: region(&e.tau2_star),
            j1_star: e.j1_star.to_json(),
            j2_star: e.j2_star.to_json(),
            iterations: e.iterations,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_text<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynkin::fixtures::q;
    use crate::dynkin::iterate_equilibrium;

    const G1: &str = r#"{
        "horizon": 1,
        "tree": {"kind": "binomial", "depth": 1, "p_up": "1/2"},
        "processes": {
            "X1": {"0": "2", "1": "3", "2": "0"},
            "Y1": {"0": "3", "1": "3", "2": "0"},
            "X2": {"0": 0, "1": "2", "2": "2"},
            "Y2": {"0": "1", "1": "2", "2": "2"}
        }
    }"#;

    #[test]
    fn g1_file_round_trip() {
        let f = GameFile::parse(G1).unwrap();
        let g = f.to_game().unwrap();
        assert_eq!(g.tie, TieConvention::P1Priority);
        assert_eq!(g.x1[NodeId(0)], q(2, 1));
        let again =
            GameFile::parse(&to_json_text(&GameFile::binomial(&g, &q(1, 2))).unwrap()).unwrap();
        assert_eq!(again.to_game().unwrap().y1, g.y1);
    }

    #[test]
    fn missing_values_and_bad_rationals_are_rejected() {
        let missing = G1.replace(
            r#""X1": {"0": "2", "1": "3", "2": "0"}"#,
            r#""X1": {"0": "2", "1": "3"}"#,
        );
        assert!(matches!(
            GameFile::parse(&missing).unwrap().to_game(),
            Err(Error::Parse(_))
        ));
        let float = G1.replace(r#""X2": {"0": 0"#, r#""X2": {"0": 0.5"#);
        assert!(matches!(GameFile::parse(&float), Err(Error::Parse(_))));
        let extra = G1.replace(r#""0": "2","#, r#""0": "2", "7": "1","#);
        assert!(GameFile::parse(&extra).unwrap().to_game().is_err());
        let depth = G1.replace(r#""horizon": 1"#, r#""horizon": 2"#);
        assert!(GameFile::parse(&depth).unwrap().to_game().is_err());
    }

    #[test]
    fn explicit_tree_with_bad_sum_is_malformed() {
        let text = r#"{"horizon": 1, "tree": {"kind": "explicit", "nodes": [
            {"id": 0, "parent": null},
            {"id": 1, "parent": 0, "prob": "1/2"},
            {"id": 2, "parent": 0, "prob": "1/3"}]},
            "processes": {"X1": {"0":0,"1":0,"2":0}, "Y1": {"0":0,"1":0,"2":0},
                          "X2": {"0":0,"1":0,"2":0}, "Y2": {"0":0,"1":0,"2":0}}}"#;
        let err = GameFile::parse(text).unwrap().to_game().unwrap_err();
        assert!(matches!(err, Error::MalformedTree(_)), "{err}");
    }

    #[test]
    fn node_maps_serialize_in_numeric_order() {
        let m = NodeMap((0..12).map(|i| (i, q(i as i64, 1))).collect());
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.starts_with(r#"{"0":"0","1":"1","2":"2""#), "{text}");
    }

    #[test]
    fn trace_csv_shape() {
        let g = GameFile::parse(G1).unwrap().to_game().unwrap();
        let r = iterate_equilibrium(&g).unwrap();
        let csv = trace_csv(&r.trace);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,tau,tilde_tau,envelope_root"));
        assert_eq!(lines.next(), Some("1,1 2,,"));
        assert_eq!(lines.next(), Some("2,1 2,,"));
        assert!(lines.next().unwrap().starts_with("3,0,0,"));
    }

    #[test]
    fn stopping_time_file() {
        let t = FiltrationTree::binomial(1, &q(1, 2)).unwrap();
        let f = StoppingTimeFile::parse(r#"{"region": [1]}"#).unwrap();
        assert!(matches!(
            f.to_stopping_time(&t),
            Err(Error::NotAStoppingTime { .. })
        ));
        let f = StoppingTimeFile::parse(r#"{"region": [0, 2]}"#).unwrap();
        assert_eq!(f.to_stopping_time(&t).unwrap(), StoppingTime::immediate(&t));
    }
}
