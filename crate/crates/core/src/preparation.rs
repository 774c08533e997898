//! Preparation records and their statistical decompositions.
//!
//! A [`PreparationNode`] is the tree of random choices that produced a
//! state. Two trees can resolve to the same operator while recording
//! different decompositions (the maximally mixed qubit prepared from the
//! z basis or from the x basis), so the tree is kept alongside the state
//! and never reconstructed from it.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{partial_trace, tensor_product, DenseMatrix, Subsystem};
use crate::state_space::{convex_combine, StateOperator, EQ_TOL};

/// Tolerance on the sum of the weights of one mixture.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Leaves closer than this (max entry) with the same label are merged.
pub const MERGE_TOL: f64 = 1e-12;

const WEIGHT_EQ_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Leaf { label: String, state: StateOperator },
    Mix(Vec<(f64, PreparationNode)>),
}

/// A validated, immutable preparation tree.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparationNode {
    kind: NodeKind,
    dim: usize,
}

/// One entry of a flattened decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafEntry {
    pub weight: f64,
    pub label: String,
    pub state: StateOperator,
}

/// Flattened, merged and canonically ordered leaves of a tree.
///
/// Reassociating or permuting mixtures leaves this unchanged, which is how
/// commutativity and associativity of the mixing operation show up.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafDecomposition {
    pub entries: Vec<LeafEntry>,
}

impl PreparationNode {
    pub fn leaf(label: impl Into<String>, state: StateOperator) -> Self {
        let dim = state.dim();
        Self { kind: NodeKind::Leaf { label: label.into(), state }, dim }
    }

    /// Random choice among `children`, child `i` used with probability `wᵢ`.
    ///
    /// Nested mixtures are kept as given. A single child of weight 1 is
    /// returned unchanged.
    pub fn mix(children: Vec<(f64, PreparationNode)>) -> Result<Self> {
        let dim = children.first().ok_or(Error::EmptyMix)?.1.dim;
        let mut sum = 0.0;
        for (w, child) in &children {
            if !(w.is_finite() && *w > 0.0 && *w <= 1.0) {
                return Err(Error::InvalidWeight { weight: *w });
            }
            if child.dim != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: child.dim });
            }
            sum += w;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightSum { sum });
        }
        let mut children = children;
        if children.len() == 1 {
            return Ok(children.pop().expect("one child").1);
        }
        Ok(Self { kind: NodeKind::Mix(children), dim })
    }

    pub fn kind(&self) -> &NodeKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    pub fn depth(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf { .. } => 0,
            NodeKind::Mix(ch) => 1 + ch.iter().map(|(_, c)| c.depth()).max().unwrap_or(0),
        }
    }

    /// Leaves in depth-first order with the product of branch weights.
    pub fn leaves(&self) -> Vec<(f64, &str, &StateOperator)> {
        let mut out = Vec::new();
        self.collect_leaves(1.0, &mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, w: f64, out: &mut Vec<(f64, &'a str, &'a StateOperator)>) {
        match &self.kind {
            NodeKind::Leaf { label, state } => out.push((w, label, state)),
            NodeKind::Mix(ch) => {
                for (cw, c) in ch {
                    c.collect_leaves(w * cw, out);
                }
            }
        }
    }

    /// The state this preparation produces.
    pub fn resolve_state(&self) -> Result<StateOperator> {
        match &self.kind {
            NodeKind::Leaf { state, .. } => Ok(state.clone()),
            NodeKind::Mix(ch) => {
                let parts = ch
                    .iter()
                    .map(|(w, c)| Ok((*w, c.resolve_state()?)))
                    .collect::<Result<Vec<_>>>()?;
                convex_combine(&parts)
            }
        }
    }

    pub fn leaf_decomposition(&self) -> LeafDecomposition {
        let mut entries: Vec<LeafEntry> = Vec::new();
        for (w, label, state) in self.leaves() {
            match entries
                .iter_mut()
                .find(|e| e.label == label && e.state.distance(state) <= MERGE_TOL)
            {
                Some(e) => e.weight += w,
                None => entries.push(LeafEntry { weight: w, label: label.to_string(), state: state.clone() }),
            }
        }
        entries.sort_by(canonical_order);
        LeafDecomposition { entries }
    }

    /// True when the preparation is a nontrivial random choice between
    /// different states.
    pub fn is_decomposable(&self) -> bool {
        self.leaf_decomposition().distinct_states() >= 2
    }

    /// Applies `T ↦ U·T·U†` at every leaf.
    pub fn evolve(&self, u: &DenseMatrix) -> Result<Self> {
        if u.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: u.dim() });
        }
        let deviation = u.adjoint().matmul(u)?.max_abs_diff(&DenseMatrix::identity(u.dim()));
        if deviation > EQ_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        self.map_leaves(&|label, state| Ok((label.to_string(), state.evolve(u)?)))
    }

    /// Independent preparation of two systems: each leaf of `a` is paired
    /// with every leaf of `b` and the weights multiply.
    pub fn compose(a: &Self, b: &Self) -> Result<Self> {
        match &a.kind {
            NodeKind::Leaf { label, state } => b.map_leaves(&|lb, tb| {
                let m = tensor_product(state.matrix(), tb.matrix())?;
                let tol = state.tol().max(tb.tol());
                Ok((format!("{label}\u{2297}{lb}"), StateOperator::with_tolerance(m, tol)?))
            }),
            NodeKind::Mix(ch) => {
                let children = ch
                    .iter()
                    .map(|(w, c)| Ok((*w, Self::compose(c, b)?)))
                    .collect::<Result<Vec<_>>>()?;
                let dim = children[0].1.dim;
                Ok(Self { kind: NodeKind::Mix(children), dim })
            }
        }
    }

    /// Partial trace at every leaf; weights and labels are kept.
    pub fn reduce_subsystem(&self, dims: (usize, usize), over: Subsystem) -> Result<Self> {
        self.map_leaves(&|label, state| {
            let m = partial_trace(state.matrix(), dims, over)?;
            Ok((label.to_string(), StateOperator::with_tolerance(m, state.tol())?))
        })
    }

    fn map_leaves(&self, f: &dyn Fn(&str, &StateOperator) -> Result<(String, StateOperator)>) -> Result<Self> {
        match &self.kind {
            NodeKind::Leaf { label, state } => {
                let (label, state) = f(label, state)?;
                Ok(Self::leaf(label, state))
            }
            NodeKind::Mix(ch) => {
                let children =
                    ch.iter().map(|(w, c)| Ok((*w, c.map_leaves(f)?))).collect::<Result<Vec<_>>>()?;
                let dim = children[0].1.dim;
                Ok(Self { kind: NodeKind::Mix(children), dim })
            }
        }
    }

    /// Runs the preparation once: one uniform draw per mixture on the path
    /// from the root.
    pub fn sample_leaf<R: Rng + ?Sized>(&self, rng: &mut R) -> (&str, &StateOperator) {
        let mut node = self;
        loop {
            match &node.kind {
                NodeKind::Leaf { label, state } => return (label, state),
                NodeKind::Mix(ch) => node = &ch[pick(ch.iter().map(|(w, _)| *w), rng.random())].1,
            }
        }
    }

    /// Flattened form of the tree for repeated sampling.
    pub fn sampler(&self) -> TreeSampler<'_> {
        let mut s = TreeSampler { nodes: Vec::new(), leaves: Vec::new() };
        s.push(self);
        s
    }
}

fn pick(weights: impl Iterator<Item = f64>, u: f64) -> usize {
    let mut cum = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        cum += w;
        last = i;
        if u < cum {
            return i;
        }
    }
    last
}

fn canonical_order(a: &LeafEntry, b: &LeafEntry) -> Ordering {
    let quantize = |w: f64| (w * 1e9).round() as i64;
    a.label
        .cmp(&b.label)
        .then(quantize(a.weight).cmp(&quantize(b.weight)))
        .then_with(|| {
            a.state
                .matrix()
                .entries()
                .iter()
                .zip(b.state.matrix().entries())
                .map(|(x, y)| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

impl LeafDecomposition {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    /// Number of entries with pairwise different states, labels ignored.
    pub fn distinct_states(&self) -> usize {
        let mut reps: Vec<&StateOperator> = Vec::new();
        for e in &self.entries {
            if e.weight > 0.0 && !reps.iter().any(|r| r.distance(&e.state) <= MERGE_TOL) {
                reps.push(&e.state);
            }
        }
        reps.len()
    }

    /// Equality of canonical forms up to floating-point rounding of weights.
    pub fn same_as(&self, other: &Self) -> bool {
        self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|(a, b)| {
                a.label == b.label
                    && (a.weight - b.weight).abs() <= WEIGHT_EQ_TOL
                    && a.state.distance(&b.state) <= MERGE_TOL
            })
    }
}

/// Flattened tree; draws the same leaves as [`PreparationNode::sample_leaf`]
/// for the same generator.
#[derive(Debug, Clone)]
pub struct TreeSampler<'a> {
    nodes: Vec<SamplerNode>,
    leaves: Vec<(&'a str, &'a StateOperator)>,
}

#[derive(Debug, Clone)]
enum SamplerNode {
    Leaf(usize),
    Mix { weights: Vec<f64>, children: Vec<usize> },
}

impl<'a> TreeSampler<'a> {
    fn push(&mut self, node: &'a PreparationNode) -> usize {
        let idx = self.nodes.len();
        match &node.kind {
            NodeKind::Leaf { label, state } => {
                self.nodes.push(SamplerNode::Leaf(self.leaves.len()));
                self.leaves.push((label, state));
            }
            NodeKind::Mix(ch) => {
                self.nodes.push(SamplerNode::Mix { weights: Vec::new(), children: Vec::new() });
                let weights = ch.iter().map(|(w, _)| *w).collect();
                let children = ch.iter().map(|(_, c)| self.push(c)).collect();
                self.nodes[idx] = SamplerNode::Mix { weights, children };
            }
        }
        idx
    }

    /// Leaves in depth-first order.
    pub fn leaves(&self) -> &[(&'a str, &'a StateOperator)] {
        &self.leaves
    }

    /// Index into [`TreeSampler::leaves`] of one draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                SamplerNode::Leaf(i) => return *i,
                SamplerNode::Mix { weights, children } => {
                    at = children[pick(weights.iter().copied(), rng.random())];
                }
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum NodeRepr {
    Leaf { label: String, state: StateOperator },
    Mix(Vec<(f64, NodeRepr)>),
}

impl From<&PreparationNode> for NodeRepr {
    fn from(n: &PreparationNode) -> Self {
        match &n.kind {
            NodeKind::Leaf { label, state } => NodeRepr::Leaf { label: label.clone(), state: state.clone() },
            NodeKind::Mix(ch) => NodeRepr::Mix(ch.iter().map(|(w, c)| (*w, c.into())).collect()),
        }
    }
}

impl TryFrom<NodeRepr> for PreparationNode {
    type Error = Error;

    fn try_from(r: NodeRepr) -> Result<Self> {
        match r {
            NodeRepr::Leaf { label, state } => Ok(PreparationNode::leaf(label, state)),
            NodeRepr::Mix(ch) => PreparationNode::mix(
                ch.into_iter().map(|(w, c)| Ok((w, c.try_into()?))).collect::<Result<Vec<_>>>()?,
            ),
        }
    }
}

impl Serialize for PreparationNode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        NodeRepr::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PreparationNode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        NodeRepr::deserialize(deserializer)?.try_into().map_err(serde::de::Error::custom)
    }
}
