//! Directed multigraph with exact rational costs and a toll/free arc
//! partition, plus shortest-path queries under the three toll regimes.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::ops::Add;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::pathmodel::{TollAssignment, TollLevel};

/// Exact rational number, always kept in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

/// Index of a node inside a [`Network`].
pub type NodeIx = usize;
/// Index of an arc inside a [`Network`] (declaration order).
pub type ArcIx = usize;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(v.into())
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(numer.into(), denom.into())
}

/// A nonnegative rational length or the distinguished `Infinite` value.
///
/// Variant order matters: the derived `Ord` puts every finite value below
/// `Infinite`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cost {
    Finite(Rational),
    Infinite,
}

impl Cost {
    pub fn zero() -> Self {
        Cost::Finite(Rational::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Cost::Finite(_))
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Cost::Finite(v) => Some(v),
            Cost::Infinite => None,
        }
    }

    pub fn into_finite(self) -> Option<Rational> {
        match self {
            Cost::Finite(v) => Some(v),
            Cost::Infinite => None,
        }
    }
}

impl From<Rational> for Cost {
    fn from(v: Rational) -> Self {
        Cost::Finite(v)
    }
}

impl Add for &Cost {
    type Output = Cost;

    fn add(self, rhs: &Cost) -> Cost {
        match (self, rhs) {
            (Cost::Finite(a), Cost::Finite(b)) => Cost::Finite(a + b),
            _ => Cost::Infinite,
        }
    }
}

impl Add for Cost {
    type Output = Cost;

    fn add(self, rhs: Cost) -> Cost {
        &self + &rhs
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(v) => write!(f, "{v}"),
            Cost::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArcKind {
    Toll,
    Free,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arc {
    pub id: String,
    pub from: String,
    pub to: String,
    pub cost: Rational,
    pub kind: ArcKind,
}

impl Arc {
    pub fn new(id: &str, from: &str, to: &str, cost: Rational, kind: ArcKind) -> Self {
        Arc {
            id: id.to_owned(),
            from: from.to_owned(),
            to: to.to_owned(),
            cost,
            kind,
        }
    }

    pub fn toll(id: &str, from: &str, to: &str, cost: Rational) -> Self {
        Arc::new(id, from, to, cost, ArcKind::Toll)
    }

    pub fn free(id: &str, from: &str, to: &str, cost: Rational) -> Self {
        Arc::new(id, from, to, cost, ArcKind::Free)
    }

    pub fn is_toll(&self) -> bool {
        self.kind == ArcKind::Toll
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("network has no arcs")]
    EmptyArcList,
    #[error("source and sink must differ (both are `{0}`)")]
    SourceIsSink(String),
    #[error("duplicate arc id `{0}`")]
    DuplicateArcId(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("`{0}` is not a declared node")]
    DanglingEndpoint(String),
    #[error("arc `{0}` has a negative cost")]
    NegativeCost(String),
    #[error("no toll-free path from source to sink")]
    NoTollFreePath,
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

/// Which price each toll arc carries during a shortest-path query.
#[derive(Clone, Copy, Debug)]
pub enum TollRegime<'a> {
    /// Toll arcs cost their fixed cost only.
    ZeroTolls,
    /// Toll arcs are removed.
    FreeOnly,
    /// Toll arcs cost fixed cost plus toll; blocked arcs are removed.
    Priced(&'a TollAssignment),
}

/// An ordered list of arcs. As an s-t path it must be connected and simple.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathSeq(Vec<ArcIx>);

impl PathSeq {
    pub fn new(arcs: Vec<ArcIx>) -> Self {
        PathSeq(arcs)
    }

    pub fn arcs(&self) -> &[ArcIx] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_arcs(self) -> Vec<ArcIx> {
        self.0
    }

    /// Node sequence starting at `start`, or `None` if consecutive arcs do
    /// not share endpoints.
    pub fn nodes_from(&self, net: &Network, start: NodeIx) -> Option<Vec<NodeIx>> {
        let mut nodes = Vec::with_capacity(self.0.len() + 1);
        nodes.push(start);
        for &a in &self.0 {
            if net.tail(a) != *nodes.last().unwrap() {
                return None;
            }
            nodes.push(net.head(a));
        }
        Some(nodes)
    }

    /// Node sequence of a non-empty path.
    pub fn nodes(&self, net: &Network) -> Option<Vec<NodeIx>> {
        let first = *self.0.first()?;
        self.nodes_from(net, net.tail(first))
    }

    /// Length with all tolls at zero.
    pub fn fixed_cost(&self, net: &Network) -> Rational {
        self.0.iter().map(|&a| &net.arc(a).cost).sum()
    }

    pub fn toll_arcs(&self, net: &Network) -> Vec<ArcIx> {
        self.0.iter().copied().filter(|&a| net.arc(a).is_toll()).collect()
    }

    pub fn ids<'n>(&self, net: &'n Network) -> Vec<&'n str> {
        self.0.iter().map(|&a| net.arc(a).id.as_str()).collect()
    }

    /// Simple s-t path check.
    pub fn is_simple_st(&self, net: &Network) -> bool {
        match self.nodes_from(net, net.source()) {
            Some(nodes) => {
                let mut seen = HashSet::new();
                *nodes.last().unwrap() == net.sink() && nodes.iter().all(|v| seen.insert(*v))
            }
            None => false,
        }
    }
}

impl From<Vec<ArcIx>> for PathSeq {
    fn from(v: Vec<ArcIx>) -> Self {
        PathSeq(v)
    }
}

/// Immutable toll network. Arcs are kept in declaration order and addressed
/// by index or id, never by endpoint pair.
#[derive(Clone, Debug)]
pub struct Network {
    nodes: Vec<String>,
    node_index: HashMap<String, NodeIx>,
    arcs: Vec<Arc>,
    arc_index: HashMap<String, ArcIx>,
    tails: Vec<NodeIx>,
    heads: Vec<NodeIx>,
    /// Outgoing arcs per node, sorted by arc id bytes.
    out_arcs: Vec<Vec<ArcIx>>,
    in_arcs: Vec<Vec<ArcIx>>,
    /// Position of each arc in byte order of ids.
    id_rank: Vec<usize>,
    source: NodeIx,
    sink: NodeIx,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.arcs == other.arcs
            && self.source_name() == other.source_name()
            && self.sink_name() == other.sink_name()
            && self.nodes.iter().collect::<HashSet<_>>() == other.nodes.iter().collect::<HashSet<_>>()
    }
}

impl Eq for Network {}

/// Builds a network whose node set is the set of arc endpoints.
pub fn build_network(arcs: Vec<Arc>, source: &str, sink: &str) -> Result<Network, NetworkError> {
    let mut nodes: Vec<String> = Vec::new();
    let mut seen = HashSet::new();
    for a in &arcs {
        for v in [&a.from, &a.to] {
            if seen.insert(v.clone()) {
                nodes.push(v.clone());
            }
        }
    }
    build_network_with_nodes(nodes, arcs, source, sink)
}

/// Builds a network over an explicitly declared node list.
pub fn build_network_with_nodes(
    nodes: Vec<String>,
    arcs: Vec<Arc>,
    source: &str,
    sink: &str,
) -> Result<Network, NetworkError> {
    if arcs.is_empty() {
        return Err(NetworkError::EmptyArcList);
    }
    if source == sink {
        return Err(NetworkError::SourceIsSink(source.to_owned()));
    }
    let mut node_index = HashMap::with_capacity(nodes.len());
    for (i, v) in nodes.iter().enumerate() {
        if node_index.insert(v.clone(), i).is_some() {
            return Err(NetworkError::DuplicateNode(v.clone()));
        }
    }
    let lookup = |v: &str| {
        node_index
            .get(v)
            .copied()
            .ok_or_else(|| NetworkError::DanglingEndpoint(v.to_owned()))
    };
    let source_ix = lookup(source)?;
    let sink_ix = lookup(sink)?;

    let mut arc_index = HashMap::with_capacity(arcs.len());
    let mut tails = Vec::with_capacity(arcs.len());
    let mut heads = Vec::with_capacity(arcs.len());
    for (i, a) in arcs.iter().enumerate() {
        if arc_index.insert(a.id.clone(), i).is_some() {
            return Err(NetworkError::DuplicateArcId(a.id.clone()));
        }
        if a.cost.is_negative() {
            return Err(NetworkError::NegativeCost(a.id.clone()));
        }
        tails.push(lookup(&a.from)?);
        heads.push(lookup(&a.to)?);
    }

    let mut order: Vec<ArcIx> = (0..arcs.len()).collect();
    order.sort_by(|&x, &y| arcs[x].id.as_bytes().cmp(arcs[y].id.as_bytes()));
    let mut id_rank = vec![0; arcs.len()];
    let mut out_arcs = vec![Vec::new(); nodes.len()];
    let mut in_arcs = vec![Vec::new(); nodes.len()];
    for (rank, &a) in order.iter().enumerate() {
        id_rank[a] = rank;
        out_arcs[tails[a]].push(a);
        in_arcs[heads[a]].push(a);
    }

    let net = Network {
        nodes,
        node_index,
        arcs,
        arc_index,
        tails,
        heads,
        out_arcs,
        in_arcs,
        id_rank,
        source: source_ix,
        sink: sink_ix,
    };
    if !net.distance_ix(net.source, net.sink, TollRegime::FreeOnly).is_finite() {
        return Err(NetworkError::NoTollFreePath);
    }
    Ok(net)
}

impl Network {
    pub fn source(&self) -> NodeIx {
        self.source
    }

    pub fn sink(&self) -> NodeIx {
        self.sink
    }

    pub fn source_name(&self) -> &str {
        &self.nodes[self.source]
    }

    pub fn sink_name(&self) -> &str {
        &self.nodes[self.sink]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_name(&self, v: NodeIx) -> &str {
        &self.nodes[v]
    }

    pub fn node_names(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_ix(&self, name: &str) -> Result<NodeIx, NetworkError> {
        self.node_index
            .get(name)
            .copied()
            .ok_or_else(|| NetworkError::UnknownNode(name.to_owned()))
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, a: ArcIx) -> &Arc {
        &self.arcs[a]
    }

    pub fn arc_ix(&self, id: &str) -> Option<ArcIx> {
        self.arc_index.get(id).copied()
    }

    pub fn tail(&self, a: ArcIx) -> NodeIx {
        self.tails[a]
    }

    pub fn head(&self, a: ArcIx) -> NodeIx {
        self.heads[a]
    }

    pub fn out_arcs(&self, v: NodeIx) -> &[ArcIx] {
        &self.out_arcs[v]
    }

    pub fn in_arcs(&self, v: NodeIx) -> &[ArcIx] {
        &self.in_arcs[v]
    }

    pub fn toll_arcs(&self) -> impl Iterator<Item = ArcIx> + '_ {
        (0..self.arcs.len()).filter(|&a| self.arcs[a].is_toll())
    }

    pub fn toll_count(&self) -> usize {
        self.toll_arcs().count()
    }

    /// `C`, the sum of every fixed cost in the network.
    pub fn total_fixed_cost(&self) -> Rational {
        self.arcs.iter().map(|a| &a.cost).sum()
    }

    /// Compares two arc sequences lexicographically by arc id bytes.
    pub fn cmp_paths(&self, x: &[ArcIx], y: &[ArcIx]) -> std::cmp::Ordering {
        let rx = x.iter().map(|&a| self.id_rank[a]);
        let ry = y.iter().map(|&a| self.id_rank[a]);
        rx.cmp(ry)
    }

    fn weight(&self, a: ArcIx, regime: TollRegime<'_>) -> Option<Rational> {
        let arc = &self.arcs[a];
        match (arc.kind, regime) {
            (ArcKind::Free, _) | (ArcKind::Toll, TollRegime::ZeroTolls) => Some(arc.cost.clone()),
            (ArcKind::Toll, TollRegime::FreeOnly) => None,
            (ArcKind::Toll, TollRegime::Priced(tolls)) => match tolls.level(a) {
                Some(TollLevel::Price(t)) => Some(&arc.cost + t),
                Some(TollLevel::Blocked) | None => None,
            },
        }
    }

    /// Dijkstra from `origin`; `reverse` runs over reversed arcs (distances
    /// *to* `origin`). Nodes flagged in `forbidden` are never entered.
    fn dijkstra(
        &self,
        origin: NodeIx,
        regime: TollRegime<'_>,
        reverse: bool,
        forbidden: Option<&[bool]>,
    ) -> Vec<Cost> {
        let n = self.nodes.len();
        let mut dist: Vec<Option<Rational>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[origin] = Some(Rational::zero());
        heap.push(Reverse((Rational::zero(), origin)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            let adj = if reverse { &self.in_arcs[u] } else { &self.out_arcs[u] };
            for &a in adj {
                let v = if reverse { self.tails[a] } else { self.heads[a] };
                if done[v] || forbidden.is_some_and(|f| f[v]) {
                    continue;
                }
                let Some(w) = self.weight(a, regime) else { continue };
                let nd = &d + w;
                if dist[v].as_ref().is_none_or(|cur| nd < *cur) {
                    dist[v] = Some(nd.clone());
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        dist.into_iter()
            .map(|d| d.map_or(Cost::Infinite, Cost::Finite))
            .collect()
    }

    /// Distances from `from` to every node under `regime`.
    pub fn distances_from(&self, from: NodeIx, regime: TollRegime<'_>) -> Vec<Cost> {
        self.dijkstra(from, regime, false, None)
    }

    pub fn distance_ix(&self, from: NodeIx, to: NodeIx, regime: TollRegime<'_>) -> Cost {
        if from == to {
            return Cost::zero();
        }
        self.dijkstra(from, regime, false, None).swap_remove(to)
    }

    /// Shortest path by node index with the deterministic tie-break: among
    /// all shortest simple paths, the lexicographically smallest arc-id
    /// sequence.
    pub fn shortest_path_ix(
        &self,
        from: NodeIx,
        to: NodeIx,
        regime: TollRegime<'_>,
    ) -> (Cost, Option<PathSeq>) {
        self.shortest_path_avoiding(from, to, regime, None)
    }

    /// As [`Network::shortest_path_ix`] but never entering nodes flagged in
    /// `forbidden` (endpoints excepted).
    pub fn shortest_path_avoiding(
        &self,
        from: NodeIx,
        to: NodeIx,
        regime: TollRegime<'_>,
        forbidden: Option<&[bool]>,
    ) -> (Cost, Option<PathSeq>) {
        if from == to {
            return (Cost::zero(), Some(PathSeq::default()));
        }
        let mut blocked = forbidden.map(|f| f.to_vec());
        if let Some(b) = blocked.as_mut() {
            b[from] = false;
            b[to] = false;
        }
        let blocked = blocked.as_deref();
        let ds = self.dijkstra(from, regime, false, blocked);
        let total = match &ds[to] {
            Cost::Finite(d) => d.clone(),
            Cost::Infinite => return (Cost::Infinite, None),
        };
        let dt = self.dijkstra(to, regime, true, blocked);

        // Arcs lying on some shortest from-to path.
        let tight = |a: ArcIx| -> bool {
            let (u, v) = (self.tails[a], self.heads[a]);
            if blocked.is_some_and(|f| f[u] || f[v]) {
                return false;
            }
            match (&ds[u], &dt[v], self.weight(a, regime)) {
                (Cost::Finite(x), Cost::Finite(y), Some(w)) => x + w + y == total,
                _ => false,
            }
        };

        // Greedy lexicographic walk; the next node must still reach `to`
        // through tight arcs without revisiting the walk.
        let n = self.nodes.len();
        let mut visited = vec![false; n];
        visited[from] = true;
        let mut arcs = Vec::new();
        let mut u = from;
        while u != to {
            let mut reach = vec![false; n];
            reach[to] = true;
            let mut queue = VecDeque::from([to]);
            while let Some(x) = queue.pop_front() {
                for &a in &self.in_arcs[x] {
                    let y = self.tails[a];
                    if !reach[y] && !visited[y] && tight(a) {
                        reach[y] = true;
                        queue.push_back(y);
                    }
                }
            }
            let next = self.out_arcs[u]
                .iter()
                .copied()
                .find(|&a| tight(a) && !visited[self.heads[a]] && reach[self.heads[a]])
                .expect("a tight continuation exists on every shortest-path prefix");
            arcs.push(next);
            u = self.heads[next];
            visited[u] = true;
        }
        (Cost::Finite(total), Some(PathSeq(arcs)))
    }

    /// Shortest path between named nodes.
    pub fn shortest_path(
        &self,
        from: &str,
        to: &str,
        regime: TollRegime<'_>,
    ) -> Result<(Cost, Option<PathSeq>), NetworkError> {
        let (f, t) = (self.node_ix(from)?, self.node_ix(to)?);
        Ok(self.shortest_path_ix(f, t, regime))
    }
}

/// Exact toll-free distances from each listed source to every node.
#[derive(Clone, Debug)]
pub struct DistanceTable {
    rows: HashMap<NodeIx, Vec<Cost>>,
}

impl DistanceTable {
    pub fn get(&self, from: NodeIx, to: NodeIx) -> Option<&Cost> {
        self.rows.get(&from).map(|row| &row[to])
    }

    pub fn row(&self, from: NodeIx) -> Option<&[Cost]> {
        self.rows.get(&from).map(Vec::as_slice)
    }
}

pub fn multi_source_free_distances(
    net: &Network,
    sources: &[&str],
) -> Result<DistanceTable, NetworkError> {
    let ixs = sources
        .iter()
        .map(|s| net.node_ix(s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(free_distances_ix(net, &ixs))
}

pub fn free_distances_ix(net: &Network, sources: &[NodeIx]) -> DistanceTable {
    let rows = sources
        .iter()
        .map(|&s| (s, net.distances_from(s, TollRegime::FreeOnly)))
        .collect();
    DistanceTable { rows }
}

/// Lazily filled toll-free distance rows, shared across many path queries
/// on one network.
#[derive(Debug)]
pub struct FreeDistances<'a> {
    net: &'a Network,
    rows: HashMap<NodeIx, Vec<Cost>>,
}

impl<'a> FreeDistances<'a> {
    pub fn new(net: &'a Network) -> Self {
        FreeDistances {
            net,
            rows: HashMap::new(),
        }
    }

    pub fn network(&self) -> &'a Network {
        self.net
    }

    pub fn row(&mut self, from: NodeIx) -> &[Cost] {
        let net = self.net;
        self.rows
            .entry(from)
            .or_insert_with(|| net.distances_from(from, TollRegime::FreeOnly))
    }

    pub fn get(&mut self, from: NodeIx, to: NodeIx) -> Cost {
        self.row(from)[to].clone()
    }
}
