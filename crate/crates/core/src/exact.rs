//! Ground-truth oracles for small instances: simple-path enumeration, the
//! exact optimum over all valid paths, and an integer grid search over toll
//! vectors on one path.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::graph::{build_network_with_nodes, Arc, ArcIx, FreeDistances, Network, NodeIx, PathSeq, Rational, TollRegime};
use crate::pathmodel::{decompose_cached, is_consistent_oracle, TollAssignment, TollLevel, ValidPath};
use crate::tollalg::max_rev;

pub const DEFAULT_CAP: usize = 1_000_000;

/// Largest total fixed cost `C` the toll grid search accepts.
pub const MAX_GRID_COST: i64 = 32;

/// Simple s-t paths in lexicographic arc-id order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enumeration {
    pub paths: Vec<PathSeq>,
    /// Set when enumeration stopped at the cap.
    pub truncated: bool,
}

pub fn enumerate_simple_paths(net: &Network, cap: usize) -> Enumeration {
    assert!(cap >= 1, "cap must be positive");
    let mut out = Enumeration {
        paths: Vec::new(),
        truncated: false,
    };
    let mut on_path = vec![false; net.node_count()];
    let mut stack = Vec::new();
    on_path[net.source()] = true;
    walk(net, net.source(), cap, &mut on_path, &mut stack, &mut out);
    out
}

fn walk(
    net: &Network,
    u: NodeIx,
    cap: usize,
    on_path: &mut [bool],
    stack: &mut Vec<ArcIx>,
    out: &mut Enumeration,
) {
    if u == net.sink() {
        if out.paths.len() == cap {
            out.truncated = true;
        } else {
            out.paths.push(PathSeq::new(stack.clone()));
        }
        return;
    }
    for &a in net.out_arcs(u) {
        if out.truncated {
            return;
        }
        let v = net.head(a);
        if on_path[v] {
            continue;
        }
        on_path[v] = true;
        stack.push(a);
        walk(net, v, cap, on_path, stack, out);
        stack.pop();
        on_path[v] = false;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactResult {
    pub opt: Rational,
    pub best_path: PathSeq,
    pub best_tolls: TollAssignment,
    /// Complete s-t paths examined.
    pub paths_enumerated: usize,
    pub truncated: bool,
}

/// Result used when no valid path earns anything: the deterministic
/// toll-free shortest path with every toll arc blocked.
fn zero_result(net: &Network) -> ExactResult {
    let (_, path) = net.shortest_path_ix(net.source(), net.sink(), TollRegime::FreeOnly);
    ExactResult {
        opt: Rational::zero(),
        best_path: path.expect("a toll-free s-t path exists"),
        best_tolls: TollAssignment::all_blocked(net),
        paths_enumerated: 0,
        truncated: false,
    }
}

fn record(best: &mut ExactResult, net: &Network, vp: &ValidPath) {
    let mr = max_rev(vp.table());
    if mr.revenue > best.opt {
        best.opt = mr.revenue;
        best.best_path = vp.path().clone();
        best.best_tolls = TollAssignment::on_path(net, vp, &mr.tolls);
    }
}

/// The optimum by scoring every enumerated path with the greedy pricing;
/// the first maximizer in enumeration order wins.
pub fn exact_opt_exhaustive(net: &Network, cap: usize) -> ExactResult {
    let en = enumerate_simple_paths(net, cap);
    let mut cache = FreeDistances::new(net);
    let mut best = zero_result(net);
    for p in &en.paths {
        if let Ok(vp) = decompose_cached(&mut cache, p) {
            record(&mut best, net, &vp);
        }
    }
    best.paths_enumerated = en.paths.len();
    best.truncated = en.truncated;
    best
}

/// Same optimum and maximizer as [`exact_opt_exhaustive`], found by a
/// depth-first search in the same order that drops prefixes which cannot
/// be completed to a valid path or cannot beat the incumbent.
///
/// A prefix is abandoned when its fixed cost already leaves no room above
/// the best revenue (revenue on a path never exceeds `L_inf` minus its
/// length), or when a toll-free stretch ending at a node `v` is longer than
/// the toll-free distance to `v` from the head of some earlier toll arc (or
/// from `s`). `paths_enumerated` counts complete paths reached and the cap
/// applies to that count.
pub fn exact_opt(net: &Network, cap: usize) -> ExactResult {
    assert!(cap >= 1, "cap must be positive");
    let l_inf = net
        .distance_ix(net.source(), net.sink(), TollRegime::FreeOnly)
        .into_finite()
        .expect("a toll-free s-t path exists");
    let mut search = Search {
        net,
        cap,
        l_inf,
        cache: FreeDistances::new(net),
        on_path: vec![false; net.node_count()],
        stack: Vec::new(),
        anchors: vec![(net.source(), Rational::zero())],
        best: zero_result(net),
        tolls_on_stack: 0,
    };
    search.on_path[net.source()] = true;
    search.dfs(net.source(), Rational::zero(), false);
    search.best
}

struct Search<'a> {
    net: &'a Network,
    cap: usize,
    l_inf: Rational,
    cache: FreeDistances<'a>,
    on_path: Vec<bool>,
    stack: Vec<ArcIx>,
    /// Window origins so far (the source and toll-arc heads) with the
    /// prefix length at each.
    anchors: Vec<(NodeIx, Rational)>,
    best: ExactResult,
    tolls_on_stack: usize,
}

impl Search<'_> {
    /// Every window ending at `v` respects the toll-free distance.
    fn windows_ok(&mut self, v: NodeIx, cost: &Rational) -> bool {
        for i in 0..self.anchors.len() {
            let (a, ref at) = self.anchors[i];
            let span = cost - at;
            match self.cache.get(a, v).into_finite() {
                Some(d) if span > d => return false,
                _ => {}
            }
        }
        true
    }

    fn dfs(&mut self, u: NodeIx, cost: Rational, via_toll: bool) {
        let net = self.net;
        if self.best.truncated || self.l_inf.clone() - &cost <= self.best.opt {
            return;
        }
        if u == net.sink() {
            if self.best.paths_enumerated == self.cap {
                self.best.truncated = true;
                return;
            }
            self.best.paths_enumerated += 1;
            if self.tolls_on_stack == 0 || !self.windows_ok(u, &cost) {
                return;
            }
            let path = PathSeq::new(self.stack.clone());
            let vp = decompose_cached(&mut self.cache, &path).expect("pruning keeps only valid paths");
            record(&mut self.best, net, &vp);
            return;
        }
        let mut checked = !via_toll;
        for &a in net.out_arcs(u) {
            let v = net.head(a);
            if self.on_path[v] {
                continue;
            }
            let arc = net.arc(a);
            if arc.is_toll() && !checked {
                // u is the tail of the next toll arc
                if !self.windows_ok(u, &cost) {
                    return;
                }
                checked = true;
            }
            let next = &cost + &arc.cost;
            if !arc.is_toll() && !self.windows_ok(v, &next) {
                continue;
            }
            self.on_path[v] = true;
            self.stack.push(a);
            if arc.is_toll() {
                self.tolls_on_stack += 1;
                self.anchors.push((v, next.clone()));
            }
            self.dfs(v, next, arc.is_toll());
            if arc.is_toll() {
                self.tolls_on_stack -= 1;
                self.anchors.pop();
            }
            self.stack.pop();
            self.on_path[v] = false;
            if self.best.truncated {
                return;
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GuardExceeded {
    #[error("path has {0} toll arcs; the grid search allows at most 3")]
    TooManyTolls(usize),
    #[error("total cost {0} after integer scaling exceeds {MAX_GRID_COST}")]
    CostTooLarge(Rational),
}

/// Least common multiple of all cost denominators.
fn cost_lcm(net: &Network) -> BigInt {
    net.arcs()
        .iter()
        .fold(BigInt::one(), |acc, a| acc.lcm(a.cost.denom()))
}

/// Maximum revenue on `vp` over integer toll vectors in `[0, C+1]^m`,
/// each accepted by a shortest-path computation. Rational costs are first
/// scaled to integers and the revenue scaled back.
pub fn brute_force_path_revenue(net: &Network, vp: &ValidPath) -> Result<Rational, GuardExceeded> {
    let m = vp.toll_count();
    if m > 3 {
        return Err(GuardExceeded::TooManyTolls(m));
    }
    let lambda = cost_lcm(net);
    let scaled_net;
    let net = if lambda.is_one() {
        net
    } else {
        let factor = Rational::from_integer(lambda.clone());
        let arcs: Vec<Arc> = net
            .arcs()
            .iter()
            .map(|a| Arc::new(&a.id, &a.from, &a.to, &a.cost * &factor, a.kind))
            .collect();
        scaled_net = build_network_with_nodes(
            net.node_names().to_vec(),
            arcs,
            net.source_name(),
            net.sink_name(),
        )
        .expect("scaling preserves well-formedness");
        &scaled_net
    };
    let c = net.total_fixed_cost();
    if c > Rational::from_integer(MAX_GRID_COST.into()) {
        return Err(GuardExceeded::CostTooLarge(c));
    }
    let top = c.to_integer().to_i64().expect("guarded") + 1;
    let arcs = vp.toll_arcs();

    let mut best = 0i64;
    let mut point = vec![0i64; m];
    loop {
        let sum: i64 = point.iter().sum();
        if sum > best {
            let values: Vec<Rational> = point.iter().map(|&t| Rational::from_integer(t.into())).collect();
            let tolls = TollAssignment::priced_on(net, &arcs, &values);
            if is_consistent_oracle(net, vp, &tolls) {
                best = sum;
            }
        }
        // odometer step
        let mut k = 0;
        while k < m && point[k] == top {
            point[k] = 0;
            k += 1;
        }
        if k == m {
            break;
        }
        point[k] += 1;
    }
    Ok(Rational::new(best.into(), lambda))
}

/// The tolls of an [`ExactResult`] as a price list on the best path.
pub fn best_path_tolls(result: &ExactResult, net: &Network) -> Vec<Rational> {
    result
        .best_path
        .toll_arcs(net)
        .into_iter()
        .map(|a| match result.best_tolls.level(a) {
            Some(TollLevel::Price(t)) => t.clone(),
            _ => Rational::zero(),
        })
        .collect()
}
