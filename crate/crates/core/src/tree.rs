//! Finite non-recombining filtration trees.
//!
//! Every node is an atom of the filtration at its depth, so an adapted
//! process is one value per node and a stopping time is the first hit of a
//! node set along each root-to-leaf path.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::Index;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{is_strictly_between_zero_and_one, Scalar};

/// Binary trees are expanded path-wise, so their size is capped.
pub const MAX_BINOMIAL_DEPTH: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("node index exceeds u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One node of a tree as declared by the caller: parent and the probability
/// of the edge from the parent. The root has no parent and its `prob` is
/// ignored.
#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub parent: Option<usize>,
    pub prob: BigRational,
}

#[derive(Debug, Clone)]
pub struct FiltrationTree {
    horizon: usize,
    parent: Vec<Option<NodeId>>,
    depth: Vec<u32>,
    // Edge probabilities are interned; trees usually repeat a handful of values.
    prob_idx: Vec<u32>,
    prob_table: Vec<BigRational>,
    child_start: Vec<u32>,
    child_list: Vec<NodeId>,
    order: Vec<NodeId>,
    leaves: Vec<NodeId>,
    key: u64,
}

impl FiltrationTree {
    /// Builds a tree from per-node parent links; node `i` of the slice gets
    /// id `i`. Only structural defects are rejected here (root placement,
    /// dangling parents, cycles); probability and depth defects are left to
    /// [`validate`].
    pub fn from_parents(horizon: usize, nodes: &[NodeSpec]) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(Error::MalformedTree("tree has no nodes".into()));
        }
        if u32::try_from(n).is_err() {
            return Err(Error::MalformedTree(format!("{n} nodes is too many")));
        }
        if nodes[0].parent.is_some() {
            return Err(Error::MalformedTree("node 0 must be the root".into()));
        }
        let mut parent = Vec::with_capacity(n);
        let mut child_count = vec![0u32; n];
        for (i, spec) in nodes.iter().enumerate() {
            match spec.parent {
                None if i == 0 => parent.push(None),
                None => {
                    return Err(Error::MalformedTree(format!(
                        "node {i} has no parent but is not the root"
                    )))
                }
                Some(p) if p >= n => {
                    return Err(Error::MalformedTree(format!(
                        "node {i} names missing parent {p}"
                    )))
                }
                Some(p) if p == i => {
                    return Err(Error::MalformedTree(format!("node {i} is its own parent")))
                }
                Some(p) => {
                    child_count[p] += 1;
                    parent.push(Some(NodeId::from(p)));
                }
            }
        }

        let mut child_start = Vec::with_capacity(n + 1);
        let mut acc = 0u32;
        for c in &child_count {
            child_start.push(acc);
            acc += c;
        }
        child_start.push(acc);
        let mut fill = child_start.clone();
        let mut child_list = vec![NodeId(0); acc as usize];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                let slot = &mut fill[p.index()];
                child_list[*slot as usize] = NodeId::from(i);
                *slot += 1;
            }
        }

        let mut depth = vec![0u32; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([NodeId::ROOT]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let (s, e) = (child_start[v.index()], child_start[v.index() + 1]);
            for &c in &child_list[s as usize..e as usize] {
                depth[c.index()] = depth[v.index()] + 1;
                queue.push_back(c);
            }
        }
        if order.len() != n {
            return Err(Error::MalformedTree(format!(
                "{} nodes are not reachable from the root",
                n - order.len()
            )));
        }

        let mut table: Vec<BigRational> = vec![BigRational::one()];
        let mut lookup: HashMap<BigRational, u32> = HashMap::from([(BigRational::one(), 0)]);
        let mut prob_idx = Vec::with_capacity(n);
        for (i, spec) in nodes.iter().enumerate() {
            if i == 0 {
                prob_idx.push(0);
                continue;
            }
            let idx = *lookup.entry(spec.prob.clone()).or_insert_with(|| {
                table.push(spec.prob.clone());
                (table.len() - 1) as u32
            });
            prob_idx.push(idx);
        }

        let leaves = order
            .iter()
            .copied()
            .filter(|v| child_count[v.index()] == 0)
            .collect();

        let mut tree = FiltrationTree {
            horizon,
            parent,
            depth,
            prob_idx,
            prob_table: table,
            child_start,
            child_list,
            order,
            leaves,
            key: 0,
        };
        tree.key = tree.fingerprint();
        Ok(tree)
    }

    /// Full binary path tree of the given depth. Node `i` has children
    /// `2i+1` (up, probability `p_up`) and `2i+2` (down).
    pub fn binomial(depth: usize, p_up: &BigRational) -> Result<Self> {
        if depth == 0 || depth > MAX_BINOMIAL_DEPTH {
            return Err(Error::InvalidParameter(format!(
                "binomial depth must be in 1..={MAX_BINOMIAL_DEPTH}, got {depth}"
            )));
        }
        if !is_strictly_between_zero_and_one(p_up) {
            return Err(Error::InvalidParameter(format!(
                "p_up must lie strictly between 0 and 1, got {p_up}"
            )));
        }
        let p_down = BigRational::one() - p_up;
        let n = (1usize << (depth + 1)) - 1;
        let internal = (1usize << depth) - 1;

        let parent = (0..n)
            .map(|i| (i > 0).then(|| NodeId::from((i - 1) / 2)))
            .collect();
        let depth_of = (0..n)
            .map(|i| usize::BITS - (i + 1).leading_zeros() - 1)
            .collect();
        let (up, down) = if *p_up == p_down { (1, 1) } else { (1, 2) };
        let prob_idx = (0..n)
            .map(|i| match i {
                0 => 0,
                _ if i % 2 == 1 => up,
                _ => down,
            })
            .collect();
        let mut prob_table = vec![BigRational::one(), p_up.clone()];
        if up != down {
            prob_table.push(p_down);
        }
        let mut child_start = Vec::with_capacity(n + 1);
        for i in 0..=n {
            child_start.push((2 * i.min(internal)) as u32);
        }
        let child_list = (1..n).map(NodeId::from).collect();
        let order = (0..n).map(NodeId::from).collect();
        let leaves = (internal..n).map(NodeId::from).collect();

        let mut tree = FiltrationTree {
            horizon: depth,
            parent,
            depth: depth_of,
            prob_idx,
            prob_table,
            child_start,
            child_list,
            order,
            leaves,
            key: 0,
        };
        tree.key = tree.fingerprint();
        Ok(tree)
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.horizon.hash(&mut h);
        self.parent.hash(&mut h);
        for &i in &self.prob_idx {
            self.prob_table[i as usize].hash(&mut h);
        }
        h.finish()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        (0..self.node_count()).map(NodeId::from)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.index() < self.node_count()
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.index()]
    }

    pub fn depth(&self, v: NodeId) -> usize {
        self.depth[v.index()] as usize
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        let s = self.child_start[v.index()] as usize;
        let e = self.child_start[v.index() + 1] as usize;
        &self.child_list[s..e]
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.children(v).is_empty()
    }

    /// Probability of the edge into `v`; one for the root.
    pub fn edge_prob(&self, v: NodeId) -> &BigRational {
        &self.prob_table[self.prob_idx[v.index()] as usize]
    }

    /// Nodes in breadth-first order: every parent precedes its children.
    pub fn top_down(&self) -> &[NodeId] {
        &self.order
    }

    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    /// Structural fingerprint used to detect objects from different trees.
    pub fn key(&self) -> u64 {
        self.key
    }

    /// Unconditional probability of reaching each node.
    pub fn path_probabilities<S: Scalar>(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.node_count()];
        out[0] = S::one();
        for &v in self.order.iter().skip(1) {
            let p = self.parent[v.index()].expect("non-root has a parent");
            out[v.index()] = out[p.index()].clone() * S::from_rational(self.edge_prob(v));
        }
        out
    }

    /// Root-to-`v` path, root first.
    pub fn path_to(&self, v: NodeId) -> Vec<NodeId> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent(cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }
}

/// One failed tree invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    HorizonTooSmall {
        horizon: usize,
    },
    ProbabilityOutOfRange {
        node: NodeId,
        prob: BigRational,
    },
    ProbabilitySum {
        node: NodeId,
        sum: BigRational,
    },
    LeafDepth {
        node: NodeId,
        depth: usize,
        horizon: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::HorizonTooSmall { horizon } => {
                write!(f, "horizon {horizon} is below 1")
            }
            Violation::ProbabilityOutOfRange { node, prob } => {
                write!(
                    f,
                    "edge probability {prob} into node {node} is outside (0,1]"
                )
            }
            Violation::ProbabilitySum { node, sum } => {
                write!(f, "probability sum {sum} ≠ 1 below node {node}")
            }
            Violation::LeafDepth {
                node,
                depth,
                horizon,
            } => {
                write!(f, "leaf {node} at wrong depth {depth} (horizon {horizon})")
            }
        }
    }
}

/// Lists every violated tree invariant; empty iff the tree is usable.
pub fn validate(tree: &FiltrationTree) -> Vec<Violation> {
    let mut out = Vec::new();
    if tree.horizon < 1 {
        out.push(Violation::HorizonTooSmall {
            horizon: tree.horizon,
        });
    }
    for &v in tree.top_down() {
        if v != NodeId::ROOT {
            let p = tree.edge_prob(v);
            if !(p > &BigRational::zero() && p <= &BigRational::one()) {
                out.push(Violation::ProbabilityOutOfRange {
                    node: v,
                    prob: p.clone(),
                });
            }
        }
        let kids = tree.children(v);
        if kids.is_empty() {
            if tree.depth(v) != tree.horizon {
                out.push(Violation::LeafDepth {
                    node: v,
                    depth: tree.depth(v),
                    horizon: tree.horizon,
                });
            }
        } else {
            let sum: BigRational = kids.iter().map(|&c| tree.edge_prob(c).clone()).sum();
            if !sum.is_one() {
                out.push(Violation::ProbabilitySum { node: v, sum });
            }
        }
    }
    out
}

/// A process adapted to the tree filtration: one value per node.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedProcess<S> {
    values: Vec<S>,
}

impl<S: Clone> AdaptedProcess<S> {
    pub fn new(tree: &FiltrationTree, values: Vec<S>) -> Result<Self> {
        if values.len() != tree.node_count() {
            return Err(Error::IncompleteProcess {
                expected: tree.node_count(),
                found: values.len(),
            });
        }
        Ok(AdaptedProcess { values })
    }

    pub fn from_fn(tree: &FiltrationTree, f: impl FnMut(NodeId) -> S) -> Self {
        AdaptedProcess {
            values: tree.nodes().map(f).collect(),
        }
    }

    pub fn constant(tree: &FiltrationTree, c: S) -> Self {
        AdaptedProcess {
            values: vec![c; tree.node_count()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn set(&mut self, v: NodeId, value: S) {
        self.values[v.index()] = value;
    }

    pub fn map<T>(&self, f: impl FnMut(&S) -> T) -> AdaptedProcess<T> {
        AdaptedProcess {
            values: self.values.iter().map(f).collect(),
        }
    }

    pub(crate) fn check_against(&self, tree: &FiltrationTree) -> Result<()> {
        if self.values.len() == tree.node_count() {
            Ok(())
        } else {
            Err(Error::IncompleteProcess {
                expected: tree.node_count(),
                found: self.values.len(),
            })
        }
    }
}

impl<S> Index<NodeId> for AdaptedProcess<S> {
    type Output = S;

    fn index(&self, v: NodeId) -> &S {
        &self.values[v.index()]
    }
}

/// A stopping time in canonical region form: the set of nodes at which it
/// stops, with no region node strictly below another.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StoppingTime {
    region: Vec<NodeId>,
    tree_key: u64,
}

impl StoppingTime {
    /// Drops region nodes that lie strictly below another region node and
    /// checks that every root-to-leaf path meets the region.
    pub fn canonicalize(
        tree: &FiltrationTree,
        region: impl IntoIterator<Item = NodeId>,
    ) -> Result<Self> {
        let mut marked = vec![false; tree.node_count()];
        for v in region {
            if !tree.contains(v) {
                return Err(Error::UnknownNode(v));
            }
            marked[v.index()] = true;
        }
        let mut covered = vec![false; tree.node_count()];
        let mut kept = Vec::new();
        for &v in tree.top_down() {
            let above = tree.parent(v).is_some_and(|p| covered[p.index()]);
            if above {
                covered[v.index()] = true;
            } else if marked[v.index()] {
                covered[v.index()] = true;
                kept.push(v);
            }
        }
        if let Some(&leaf) = tree.leaves().iter().find(|l| !covered[l.index()]) {
            return Err(Error::NotAStoppingTime { leaf });
        }
        kept.sort_unstable();
        Ok(StoppingTime {
            region: kept,
            tree_key: tree.key(),
        })
    }

    /// τ ≡ T: stop at every leaf.
    pub fn terminal(tree: &FiltrationTree) -> Self {
        let mut region = tree.leaves().to_vec();
        region.sort_unstable();
        StoppingTime {
            region,
            tree_key: tree.key(),
        }
    }

    /// τ ≡ 0: stop at the root.
    pub fn immediate(tree: &FiltrationTree) -> Self {
        StoppingTime {
            region: vec![NodeId::ROOT],
            tree_key: tree.key(),
        }
    }

    pub fn region(&self) -> &[NodeId] {
        &self.region
    }

    pub fn tree_key(&self) -> u64 {
        self.tree_key
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.region.binary_search(&v).is_ok()
    }

    pub(crate) fn check_tree(&self, tree: &FiltrationTree) -> Result<()> {
        if self.tree_key == tree.key() {
            Ok(())
        } else {
            Err(Error::TreeMismatch)
        }
    }

    /// For each node, the region node at or above it, if the path has
    /// already stopped by that node's depth.
    pub fn stop_map(&self, tree: &FiltrationTree) -> Result<Vec<Option<NodeId>>> {
        self.check_tree(tree)?;
        let mut map = vec![None; tree.node_count()];
        for &v in tree.top_down() {
            map[v.index()] = match tree.parent(v).and_then(|p| map[p.index()]) {
                Some(s) => Some(s),
                None => self.contains(v).then_some(v),
            };
        }
        Ok(map)
    }

    /// Stop node and stop depth on the path ending at `leaf`.
    pub fn stop_instant(&self, tree: &FiltrationTree, leaf: NodeId) -> Result<(NodeId, usize)> {
        self.check_tree(tree)?;
        if !tree.contains(leaf) {
            return Err(Error::UnknownNode(leaf));
        }
        if !tree.is_leaf(leaf) {
            return Err(Error::NotALeaf(leaf));
        }
        tree.path_to(leaf)
            .into_iter()
            .find(|&v| self.contains(v))
            .map(|v| (v, tree.depth(v)))
            .ok_or(Error::NotAStoppingTime { leaf })
    }

    /// Stop depth on each leaf path, in `tree.leaves()` order.
    pub fn leaf_depths(&self, tree: &FiltrationTree) -> Result<Vec<usize>> {
        let map = self.stop_map(tree)?;
        Ok(tree
            .leaves()
            .iter()
            .map(|l| tree.depth(map[l.index()].expect("canonical regions cover every leaf")))
            .collect())
    }

    /// `self ≤ other` on every path.
    pub fn pointwise_leq(&self, other: &StoppingTime, tree: &FiltrationTree) -> Result<bool> {
        if self.tree_key != other.tree_key {
            return Err(Error::TreeMismatch);
        }
        let a = self.leaf_depths(tree)?;
        let b = other.leaf_depths(tree)?;
        Ok(a.iter().zip(&b).all(|(x, y)| x <= y))
    }

    pub fn is_terminal(&self, tree: &FiltrationTree) -> bool {
        self.region.len() == tree.leaves().len() && self.region.iter().all(|&v| tree.is_leaf(v))
    }
}

impl fmt::Display for StoppingTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.region.iter().map(|v| v.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}
