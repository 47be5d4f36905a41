//! Fitness-function routing: drop links that cannot carry the demanded
//! bandwidth, then grow a shortest-path tree from the source with
//! lexicographic `(hops, cost)` labels.
//!
//! A settled node keeps its label for good. That caps each search at `n`
//! settlements, and the predecessor tree cannot contain a loop.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{NodeId, QosLink, Topology};

/// Per-unit weights for delay (ms), jitter (ms) and `-ln(1 - loss)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub delay: f64,
    pub jitter: f64,
    pub loss: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self { delay: 1.0, jitter: 1.0, loss: 1.0 }
    }
}

impl Weights {
    pub fn new(delay: f64, jitter: f64, loss: f64) -> Result<Self> {
        let w = Self { delay, jitter, loss };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.delay, self.jitter, self.loss];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidWeights(format!("weights must be finite and non-negative, got {all:?}")));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidWeights("at least one weight must be positive".into()));
        }
        Ok(())
    }
}

/// Additive cost of one link. Bandwidth is a constraint, never a cost.
pub fn edge_cost(link: &QosLink, w: &Weights) -> Result<f64> {
    if !(0.0..1.0).contains(&link.loss) {
        return Err(Error::UnusableLink { a: link.a, b: link.b, loss: link.loss });
    }
    Ok(w.delay * link.delay + w.jitter * link.jitter - w.loss * (-link.loss).ln_1p())
}

pub fn fitness_from_cost(cost: f64) -> f64 {
    1.0 / (1.0 + cost)
}

/// Sum of link costs along `path` and the matching fitness `1 / (1 + cost)`.
pub fn path_fitness(path: &[NodeId], t: &Topology, w: &Weights) -> Result<(f64, f64)> {
    let mut cost = 0.0;
    for hop in path.windows(2) {
        let link = t.link(hop[0], hop[1]).ok_or(Error::MissingLink { a: hop[0], b: hop[1] })?;
        cost += edge_cost(link, w)?;
    }
    Ok((cost, fitness_from_cost(cost)))
}

/// Search label, ordered by hops, then cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub hops: usize,
    pub cost: f64,
}

impl Label {
    fn cmp_lex(&self, other: &Self) -> Ordering {
        self.hops.cmp(&other.hops).then(self.cost.total_cmp(&other.cost))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    label: Label,
    node: NodeId,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.label.cmp_lex(&other.label).then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Predecessor tree of one search, covering the root's reachable component.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    root: NodeId,
    parent: Vec<Option<(NodeId, QosLink)>>,
    label: Vec<Option<Label>>,
    settled_order: Vec<NodeId>,
    relaxations: usize,
}

impl SpanningTree {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parent(&self, node: NodeId) -> Option<&(NodeId, QosLink)> {
        self.parent.get(node)?.as_ref()
    }

    /// Final label of a settled node.
    pub fn label(&self, node: NodeId) -> Option<Label> {
        *self.label.get(node)?
    }

    pub fn is_settled(&self, node: NodeId) -> bool {
        self.label(node).is_some()
    }

    /// Nodes in the order they were settled; the root comes first.
    pub fn settled_order(&self) -> &[NodeId] {
        &self.settled_order
    }

    pub fn settlements(&self) -> usize {
        self.settled_order.len()
    }

    pub fn relaxations(&self) -> usize {
        self.relaxations
    }

    /// Tree path from the root to `node`, if `node` was settled.
    pub fn path_to(&self, node: NodeId) -> Option<Vec<NodeId>> {
        self.label(node)?;
        let mut path = vec![node];
        let mut at = node;
        while let Some((p, _)) = self.parent(at) {
            path.push(*p);
            at = *p;
            if path.len() > self.parent.len() {
                return None;
            }
        }
        path.reverse();
        Some(path)
    }
}

/// Label-setting search from `root` over `pruned`.
///
/// The unsettled node with the smallest `(hops, cost, id)` is settled next.
/// On an exact label tie the smaller predecessor id wins.
pub fn build_spanning_tree(pruned: &Topology, root: NodeId, w: &Weights) -> Result<SpanningTree> {
    pruned.check_node(root)?;
    w.validate()?;
    let n = pruned.node_count();
    let mut parent: Vec<Option<(NodeId, QosLink)>> = vec![None; n];
    let mut tentative: Vec<Option<Label>> = vec![None; n];
    let mut settled: Vec<Option<Label>> = vec![None; n];
    let mut settled_order = Vec::with_capacity(n);
    let mut relaxations = 0;

    let start = Label { hops: 0, cost: 0.0 };
    tentative[root] = Some(start);
    let mut heap = BinaryHeap::from([Reverse(Candidate { label: start, node: root })]);

    while let Some(Reverse(Candidate { label, node })) = heap.pop() {
        if settled[node].is_some() || tentative[node] != Some(label) {
            continue;
        }
        settled[node] = Some(label);
        settled_order.push(node);

        for (m, link) in pruned.neighbors(node) {
            if settled[m].is_some() {
                continue;
            }
            relaxations += 1;
            let offer = Label { hops: label.hops + 1, cost: label.cost + edge_cost(link, w)? };
            let better = match tentative[m] {
                None => true,
                Some(current) => match offer.cmp_lex(&current) {
                    Ordering::Less => true,
                    Ordering::Equal => parent[m].is_some_and(|(p, _)| node < p),
                    Ordering::Greater => false,
                },
            };
            if better {
                tentative[m] = Some(offer);
                parent[m] = Some((node, *link));
                heap.push(Reverse(Candidate { label: offer, node: m }));
            }
        }
    }

    Ok(SpanningTree { root, parent, label: settled, settled_order, relaxations })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteRequest {
    pub src: NodeId,
    pub dst: NodeId,
    /// Mbps every link on the route must carry.
    pub demand: f64,
    pub weights: Weights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub path: Vec<NodeId>,
    pub hops: usize,
    pub fitness: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RouteOutcome {
    Route(Route),
    /// `dst` is reachable, but not over links that carry the demand.
    NoSufficientBandwidth,
    Unreachable,
}

impl RouteOutcome {
    pub fn route(&self) -> Option<&Route> {
        match self {
            RouteOutcome::Route(r) => Some(r),
            _ => None,
        }
    }

    pub fn hops(&self) -> Option<usize> {
        self.route().map(|r| r.hops)
    }
}

pub fn select_route(t: &Topology, req: &RouteRequest) -> Result<RouteOutcome> {
    t.check_node(req.src)?;
    t.check_node(req.dst)?;
    if req.demand.is_nan() || req.demand < 0.0 {
        return Err(Error::Config(format!("demand must be non-negative, got {}", req.demand)));
    }
    let pruned = t.feasible_subgraph(req.demand);
    let tree = build_spanning_tree(&pruned, req.src, &req.weights)?;
    if let (Some(label), Some(path)) = (tree.label(req.dst), tree.path_to(req.dst)) {
        let (cost, fitness) = path_fitness(&path, t, &req.weights)?;
        return Ok(RouteOutcome::Route(Route { hops: label.hops, path, fitness, cost }));
    }
    if t.bfs_hops(req.src)[req.dst].is_some() {
        Ok(RouteOutcome::NoSufficientBandwidth)
    } else {
        Ok(RouteOutcome::Unreachable)
    }
}
