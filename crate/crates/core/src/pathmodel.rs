//! Valid-path decomposition, subpath tables, revenue bounds and the
//! consistency test for toll vectors.
//!
//! A valid path is split as `υ(0,1) τ1 υ(1,2) τ2 ... τm υ(m,m+1)` where the
//! `τk` are its toll arcs and the `υ` are toll-free connecting segments.
//! Index 0 stands for the source and index `m+1` for the sink, so the "head
//! of τ0" is `s` and the "tail of τ(m+1)" is `t`.

use std::collections::{BTreeMap, HashSet};

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::graph::{
    free_distances_ix, ArcIx, Cost, FreeDistances, Network, NodeIx, PathSeq, Rational, TollRegime,
};

/// Price of one toll arc.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TollLevel {
    Price(Rational),
    /// The arc is priced out of use. Materializes as `C + 1`.
    Blocked,
}

/// One entry per toll arc of a network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TollAssignment {
    levels: BTreeMap<ArcIx, TollLevel>,
}

impl TollAssignment {
    pub fn uniform(net: &Network, level: TollLevel) -> Self {
        TollAssignment {
            levels: net.toll_arcs().map(|a| (a, level.clone())).collect(),
        }
    }

    pub fn all_blocked(net: &Network) -> Self {
        Self::uniform(net, TollLevel::Blocked)
    }

    pub fn zeros(net: &Network) -> Self {
        Self::uniform(net, TollLevel::Price(Rational::zero()))
    }

    /// Prices the listed arcs, blocks every other toll arc.
    pub fn priced_on(net: &Network, arcs: &[ArcIx], tolls: &[Rational]) -> Self {
        assert_eq!(arcs.len(), tolls.len());
        let mut out = Self::all_blocked(net);
        for (&a, t) in arcs.iter().zip(tolls) {
            out.set(a, TollLevel::Price(t.clone()));
        }
        out
    }

    /// Prices the toll arcs of `vp` in order, blocks every other toll arc.
    pub fn on_path(net: &Network, vp: &ValidPath, tolls: &[Rational]) -> Self {
        Self::priced_on(net, &vp.toll_arcs(), tolls)
    }

    /// Panics if `arc` is not a toll arc of the network this assignment was
    /// built for.
    pub fn set(&mut self, arc: ArcIx, level: TollLevel) {
        let slot = self
            .levels
            .get_mut(&arc)
            .unwrap_or_else(|| panic!("arc #{arc} is not a toll arc"));
        *slot = level;
    }

    pub fn level(&self, arc: ArcIx) -> Option<&TollLevel> {
        self.levels.get(&arc)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ArcIx, &TollLevel)> {
        self.levels.iter().map(|(&a, l)| (a, l))
    }

    /// Toll values `t1..tm` on the toll arcs of `vp`, or `None` if one of
    /// them is blocked.
    pub fn restrict(&self, vp: &ValidPath) -> Option<Vec<Rational>> {
        vp.toll_arcs()
            .iter()
            .map(|a| match self.levels.get(a) {
                Some(TollLevel::Price(t)) => Some(t.clone()),
                _ => None,
            })
            .collect()
    }

    /// Fully numeric toll vector with blocked arcs set to `C + 1`.
    pub fn materialize(&self, net: &Network) -> Vec<(ArcIx, Rational)> {
        let blocked = net.total_fixed_cost() + Rational::one();
        self.levels
            .iter()
            .map(|(&a, l)| match l {
                TollLevel::Price(t) => (a, t.clone()),
                TollLevel::Blocked => (a, blocked.clone()),
            })
            .collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("consecutive arcs do not share an endpoint at position {0}")]
    Broken(usize),
    #[error("path does not run from source to sink")]
    NotSourceSink,
    #[error("path repeats a node")]
    NotSimple,
    #[error("path has no toll arc")]
    NoTollArc,
    #[error("path is not shortest under zero tolls (window {i}..{j})")]
    NotValid { i: usize, j: usize },
}

/// U(i,j) for all windows and prefix sums for L(k,l) along one path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubpathTable {
    m: usize,
    u: Vec<Cost>,
    prefix: Vec<Rational>,
    /// Path position of head(τi), i in 0..=m.
    term_pos: Vec<usize>,
    /// Path position of tail(τj), j in 1..=m+1; entry 0 unused.
    init_pos: Vec<usize>,
    toll_costs: Vec<Rational>,
}

impl SubpathTable {
    fn build(
        net: &Network,
        path: &PathSeq,
        nodes: &[NodeIx],
        toll_positions: &[usize],
        free: &mut dyn FnMut(NodeIx, NodeIx) -> Cost,
    ) -> Self {
        let m = toll_positions.len();
        let mut prefix = Vec::with_capacity(path.len() + 1);
        prefix.push(Rational::zero());
        for &a in path.arcs() {
            let next = prefix.last().unwrap() + &net.arc(a).cost;
            prefix.push(next);
        }
        let mut term_pos = vec![0; m + 1];
        let mut init_pos = vec![0; m + 2];
        for (k, &p) in toll_positions.iter().enumerate() {
            term_pos[k + 1] = p + 1;
            init_pos[k + 1] = p;
        }
        init_pos[m + 1] = path.len();
        let width = m + 2;
        let mut u = vec![Cost::Infinite; width * width];
        for i in 0..=m {
            for j in i + 1..=m + 1 {
                u[i * width + j] = free(nodes[term_pos[i]], nodes[init_pos[j]]);
            }
        }
        let toll_costs = toll_positions
            .iter()
            .map(|&p| net.arc(path.arcs()[p]).cost.clone())
            .collect();
        SubpathTable {
            m,
            u,
            prefix,
            term_pos,
            init_pos,
            toll_costs,
        }
    }

    /// Number of toll arcs on the path.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Toll-free distance from head(τi) to tail(τj), `0 <= i < j <= m+1`.
    pub fn u(&self, i: usize, j: usize) -> &Cost {
        debug_assert!(i < j && j <= self.m + 1);
        &self.u[i * (self.m + 2) + j]
    }

    /// Fixed-cost length of the path between head(τk) and tail(τl).
    pub fn l(&self, k: usize, l: usize) -> Rational {
        debug_assert!(k < l && l <= self.m + 1);
        &self.prefix[self.init_pos[l]] - &self.prefix[self.term_pos[k]]
    }

    /// Fixed cost of toll arc τk, `1 <= k <= m`.
    pub fn toll_cost(&self, k: usize) -> &Rational {
        &self.toll_costs[k - 1]
    }

    /// `U(i,j) - L(i,j)` when `U(i,j)` is finite.
    pub fn slack(&self, i: usize, j: usize) -> Option<Rational> {
        self.u(i, j).finite().map(|u| u - self.l(i, j))
    }
}

/// A simple s-t path with at least one toll arc that is shortest in its own
/// network under zero tolls.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidPath {
    path: PathSeq,
    nodes: Vec<NodeIx>,
    toll_positions: Vec<usize>,
    table: SubpathTable,
}

impl ValidPath {
    pub fn path(&self) -> &PathSeq {
        &self.path
    }

    pub fn nodes(&self) -> &[NodeIx] {
        &self.nodes
    }

    /// `m`, the number of toll arcs.
    pub fn toll_count(&self) -> usize {
        self.toll_positions.len()
    }

    /// Positions of τ1..τm inside the arc list.
    pub fn toll_positions(&self) -> &[usize] {
        &self.toll_positions
    }

    pub fn toll_arcs(&self) -> Vec<ArcIx> {
        self.toll_positions.iter().map(|&p| self.path.arcs()[p]).collect()
    }

    /// Arcs of υ(k,k+1), `0 <= k <= m`.
    pub fn free_segment(&self, k: usize) -> &[ArcIx] {
        let start = self.table.term_pos[k];
        let end = self.table.init_pos[k + 1];
        &self.path.arcs()[start..end]
    }

    /// head(τi); the source for `i = 0`.
    pub fn term_node(&self, i: usize) -> NodeIx {
        self.nodes[self.table.term_pos[i]]
    }

    /// tail(τj); the sink for `j = m + 1`.
    pub fn init_node(&self, j: usize) -> NodeIx {
        self.nodes[self.table.init_pos[j]]
    }

    /// Position in the arc list where head(τi) is reached.
    pub fn term_pos(&self, i: usize) -> usize {
        self.table.term_pos[i]
    }

    /// Position in the arc list where tail(τj) is reached.
    pub fn init_pos(&self, j: usize) -> usize {
        self.table.init_pos[j]
    }

    pub fn table(&self) -> &SubpathTable {
        &self.table
    }
}

fn check_shape(net: &Network, path: &PathSeq) -> Result<(Vec<NodeIx>, Vec<usize>), PathError> {
    if path.is_empty() || net.tail(path.arcs()[0]) != net.source() {
        return Err(PathError::NotSourceSink);
    }
    let mut nodes = vec![net.source()];
    for (pos, &a) in path.arcs().iter().enumerate() {
        if net.tail(a) != *nodes.last().unwrap() {
            return Err(PathError::Broken(pos));
        }
        nodes.push(net.head(a));
    }
    if *nodes.last().unwrap() != net.sink() {
        return Err(PathError::NotSourceSink);
    }
    let mut seen = HashSet::with_capacity(nodes.len());
    if !nodes.iter().all(|v| seen.insert(*v)) {
        return Err(PathError::NotSimple);
    }
    let toll_positions: Vec<usize> = path
        .arcs()
        .iter()
        .enumerate()
        .filter(|(_, &a)| net.arc(a).is_toll())
        .map(|(p, _)| p)
        .collect();
    if toll_positions.is_empty() {
        return Err(PathError::NoTollArc);
    }
    Ok((nodes, toll_positions))
}

/// Decomposes an s-t path, rejecting it unless it is valid.
pub fn decompose(net: &Network, path: &PathSeq) -> Result<ValidPath, PathError> {
    decompose_cached(&mut FreeDistances::new(net), path)
}

/// [`decompose`] drawing toll-free distances from a shared cache.
pub fn decompose_cached(cache: &mut FreeDistances<'_>, path: &PathSeq) -> Result<ValidPath, PathError> {
    let net = cache.network();
    let (nodes, toll_positions) = check_shape(net, path)?;
    let table = SubpathTable::build(net, path, &nodes, &toll_positions, &mut |a, b| cache.get(a, b));
    let m = table.m();
    for i in 0..=m {
        for j in i + 1..=m + 1 {
            if let Some(slack) = table.slack(i, j) {
                if slack.is_negative() {
                    return Err(PathError::NotValid { i, j });
                }
            }
        }
    }
    Ok(ValidPath {
        path: path.clone(),
        nodes,
        toll_positions,
        table,
    })
}

/// Recomputes the subpath table of `vp` from scratch, one toll-free search
/// per distinct window origin.
pub fn subpath_table(net: &Network, vp: &ValidPath) -> SubpathTable {
    let origins: Vec<NodeIx> = (0..=vp.toll_count()).map(|i| vp.term_node(i)).collect();
    let dist = free_distances_ix(net, &origins);
    SubpathTable::build(net, &vp.path, &vp.nodes, &vp.toll_positions, &mut |a, b| {
        dist.get(a, b).expect("origin row present").clone()
    })
}

/// Window sums: `T(i,j) = t(i+1) + ... + t(j-1)` read off prefix sums.
fn toll_prefix(tolls: &[Rational]) -> Vec<Rational> {
    let mut prefix = Vec::with_capacity(tolls.len() + 1);
    prefix.push(Rational::zero());
    for t in tolls {
        let next = prefix.last().unwrap() + t;
        prefix.push(next);
    }
    prefix
}

/// `T(i,j)` for a toll vector `t1..tm`.
pub fn window_toll(tolls: &[Rational], i: usize, j: usize) -> Rational {
    tolls[i..j.saturating_sub(1).max(i)].iter().sum()
}

/// Pairwise window test: `L(i,j) + T(i,j) <= U(i,j)` for every window with
/// a finite toll-free alternative.
pub fn is_consistent(table: &SubpathTable, tolls: &[Rational]) -> bool {
    first_violated_window(table, tolls).is_none()
}

/// The first window `(i, j)` whose constraint fails, if any.
pub fn first_violated_window(table: &SubpathTable, tolls: &[Rational]) -> Option<(usize, usize)> {
    let m = table.m();
    assert_eq!(tolls.len(), m, "one toll per toll arc of the path");
    let prefix = toll_prefix(tolls);
    for i in 0..=m {
        for j in i + 1..=m + 1 {
            let Some(u) = table.u(i, j).finite() else { continue };
            let window = &prefix[j - 1] - &prefix[i];
            if table.l(i, j) + window > *u {
                return Some((i, j));
            }
        }
    }
    None
}

/// Length of `path` under fixed costs plus tolls; `None` if it uses a
/// blocked arc.
fn priced_length(net: &Network, path: &PathSeq, tolls: &TollAssignment) -> Option<Rational> {
    let mut total = Rational::zero();
    for &a in path.arcs() {
        let arc = net.arc(a);
        total += &arc.cost;
        if arc.is_toll() {
            match tolls.level(a)? {
                TollLevel::Price(t) => total += t,
                TollLevel::Blocked => return None,
            }
        }
    }
    Some(total)
}

/// Whether `path` is a shortest s-t path once every toll arc off the path is
/// removed and the on-path ones are priced by `tolls`.
pub fn path_is_shortest(net: &Network, path: &PathSeq, tolls: &TollAssignment) -> bool {
    let on_path: HashSet<ArcIx> = path.toll_arcs(net).into_iter().collect();
    let mut restricted = tolls.clone();
    for a in net.toll_arcs() {
        if !on_path.contains(&a) {
            restricted.set(a, TollLevel::Blocked);
        }
    }
    let Some(len) = priced_length(net, path, &restricted) else {
        return false;
    };
    let best = net.distance_ix(net.source(), net.sink(), TollRegime::Priced(&restricted));
    best == Cost::Finite(len)
}

/// Consistency decided by a literal shortest-path computation in the network
/// with off-path toll arcs removed.
pub fn is_consistent_oracle(net: &Network, vp: &ValidPath, tolls: &TollAssignment) -> bool {
    path_is_shortest(net, vp.path(), tolls)
}

/// `B(P) = U(0,m+1) - L(0,m+1)`.
pub fn path_bound(table: &SubpathTable) -> Rational {
    let m = table.m();
    table
        .slack(0, m + 1)
        .expect("a toll-free s-t path always exists")
}

/// `L_inf - L_0`: toll-free shortest length minus zero-toll shortest length.
pub fn lp_bound(net: &Network) -> Rational {
    let (s, t) = (net.source(), net.sink());
    let free = net.distance_ix(s, t, TollRegime::FreeOnly);
    let zero = net.distance_ix(s, t, TollRegime::ZeroTolls);
    match (free, zero) {
        (Cost::Finite(f), Cost::Finite(z)) => f - z,
        _ => unreachable!("networks always carry a toll-free s-t path"),
    }
}
