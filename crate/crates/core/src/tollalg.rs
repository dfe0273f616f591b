//! Per-path engines: the greedy optimal toll setter and the partition of a
//! path into two descendants along its saturated toll-free windows.

use std::collections::HashSet;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::graph::{ArcIx, Cost, Network, PathSeq, Rational, TollRegime};
use crate::pathmodel::{decompose, is_consistent, window_toll, SubpathTable, ValidPath};

/// A broken structural guarantee. Always a bug, never an input error.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invariant violated: {0}")]
pub struct InvariantViolation(pub String);

fn violation<T>(msg: impl Into<String>) -> Result<T, InvariantViolation> {
    Err(InvariantViolation(msg.into()))
}

/// Output of [`max_rev`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxRevResult {
    /// `t1..tm`.
    pub tolls: Vec<Rational>,
    pub revenue: Rational,
    /// `(i'(k), j'(k))` for `k = 1..m`: the window that bounded `tk`, or the
    /// window jumped over when `tk` was skipped.
    pub active: Vec<(usize, usize)>,
}

impl MaxRevResult {
    pub fn check(&self, table: &SubpathTable) -> Result<(), InvariantViolation> {
        let m = table.m();
        if self.tolls.len() != m || self.active.len() != m {
            return violation("one toll and one active window per toll arc");
        }
        if self.tolls.iter().any(Signed::is_negative) {
            return violation("negative toll");
        }
        if self.revenue != self.tolls.iter().sum::<Rational>() {
            return violation("revenue is not the sum of tolls");
        }
        for k in 1..=m {
            let (i, j) = self.active[k - 1];
            if !(i < k && k < j && j <= m + 1) {
                return violation(format!("active window ({i},{j}) does not straddle toll {k}"));
            }
            if !table.u(i, j).is_finite() {
                return violation(format!("active window ({i},{j}) has no toll-free path"));
            }
            if let Some(l) = (k + 1..j).find(|&l| !self.tolls[l - 1].is_zero()) {
                return violation(format!("toll {l} inside jumped window of toll {k} is nonzero"));
            }
        }
        if !is_consistent(table, &self.tolls) {
            return violation("greedy tolls are not consistent");
        }
        if let Some(k) = (1..=m).find(|&k| !is_saturated(table, &self.tolls, k)) {
            return violation(format!("toll {k} can still be raised"));
        }
        Ok(())
    }
}

/// Whether some finite window straddling toll `k` is tight, i.e. `tk`
/// cannot be raised without breaking consistency.
pub fn is_saturated(table: &SubpathTable, tolls: &[Rational], k: usize) -> bool {
    let m = table.m();
    (0..k).any(|i| {
        (k + 1..=m + 1).any(|j| match table.slack(i, j) {
            Some(slack) => slack == window_toll(tolls, i, j),
            None => false,
        })
    })
}

/// Greedy left-to-right toll setter. Each visited toll is raised to the
/// largest value its windows allow given the tolls already fixed; the
/// binding window (ties: largest `j`, then smallest `i`) is recorded and
/// every toll strictly inside it is skipped at zero.
pub fn max_rev(table: &SubpathTable) -> MaxRevResult {
    let m = table.m();
    let mut tolls = vec![Rational::zero(); m];
    let mut active = vec![(0, 0); m];
    // prefix[x] = t1 + ... + tx
    let mut prefix = vec![Rational::zero(); m + 1];
    let mut k = 1;
    while k <= m {
        let mut best: Option<(Rational, usize, usize)> = None;
        for j in (k + 1..=m + 1).rev() {
            for i in 0..k {
                let Some(slack) = table.slack(i, j) else { continue };
                let value = slack - (&prefix[k - 1] - &prefix[i]);
                if best.as_ref().is_none_or(|(b, _, _)| value < *b) {
                    best = Some((value, i, j));
                }
            }
        }
        let (value, i, j) = best.expect("the window (0, m+1) is always finite");
        debug_assert!(!value.is_negative(), "valid paths admit nonnegative tolls");
        tolls[k - 1] = value;
        for l in k..j {
            active[l - 1] = (i, j);
            if l > k {
                tolls[l - 1] = Rational::zero();
            }
            prefix[l] = &prefix[l - 1] + &tolls[l - 1];
        }
        k = j;
    }
    let revenue = prefix[m].clone();
    MaxRevResult {
        tolls,
        revenue,
        active,
    }
}

/// Saturated windows `(i(h), j(h))`, `h = 1..q`, selected backwards from the
/// last toll arc.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoveringSequence {
    pub pairs: Vec<(usize, usize)>,
}

impl CoveringSequence {
    pub fn q(&self) -> usize {
        self.pairs.len()
    }

    /// Checks endpoints, interleaving, covering multiplicities and the
    /// window-sum identity against the tolls that produced the sequence.
    pub fn check(&self, table: &SubpathTable, tolls: &[Rational]) -> Result<(), InvariantViolation> {
        let m = table.m();
        let p = &self.pairs;
        let q = p.len();
        if q == 0 {
            return violation("empty covering sequence");
        }
        if p[0].0 != 0 || p[q - 1].1 != m + 1 {
            return violation(format!("sequence does not span 0..{}: {p:?}", m + 1));
        }
        for h in 0..q {
            if p[h].0 >= p[h].1 {
                return violation(format!("empty window {:?}", p[h]));
            }
            if h + 1 < q && !(p[h + 1].0 < p[h].1 && p[h].1 < p[h + 1].1) {
                return violation(format!("windows {} and {} do not interleave: {p:?}", h + 1, h + 2));
            }
            if h + 2 < q && p[h].1 > p[h + 2].0 {
                return violation(format!("windows {} and {} overlap: {p:?}", h + 1, h + 3));
            }
        }
        for k in 1..=m {
            let cover = p.iter().filter(|&&(i, j)| i < k && k < j).count();
            if cover == 0 {
                return violation(format!("toll {k} is not covered"));
            }
            if cover > 1 && !tolls[k - 1].is_zero() {
                return violation(format!("toll {k} is covered {cover} times but nonzero"));
            }
        }
        let slacks = p
            .iter()
            .map(|&(i, j)| table.slack(i, j))
            .collect::<Option<Vec<_>>>();
        let Some(slacks) = slacks else {
            return violation("a selected window has no toll-free path");
        };
        for lo in 0..q {
            let mut bound = Rational::zero();
            for hi in lo..q {
                bound += &slacks[hi];
                let collected = window_toll(tolls, p[lo].0, p[hi].1);
                if collected != bound {
                    return violation(format!(
                        "window sum over h={}..{} is {collected}, expected {bound}",
                        lo + 1,
                        hi + 1
                    ));
                }
            }
        }
        Ok(())
    }
}

pub fn covering_sequence(result: &MaxRevResult, m: usize) -> CoveringSequence {
    let mut pairs = Vec::new();
    let mut l = m;
    while l > 0 {
        let (i, j) = result.active[l - 1];
        pairs.push((i, j));
        l = i;
    }
    pairs.reverse();
    CoveringSequence { pairs }
}

/// The two descendants built from odd and even windows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DescendantPair {
    pub p1: PathSeq,
    pub p2: PathSeq,
}

impl DescendantPair {
    pub fn check(&self, net: &Network, parent: &ValidPath) -> Result<(), InvariantViolation> {
        let parent_tolls = parent.toll_arcs();
        let m = parent_tolls.len();
        let mut sets = Vec::new();
        for (name, p) in [("P1", &self.p1), ("P2", &self.p2)] {
            if !p.is_simple_st(net) {
                return violation(format!("{name} is not a simple s-t path"));
            }
            let tolls = p.toll_arcs(net);
            if !is_subsequence(&tolls, &parent_tolls) {
                return violation(format!("{name} toll arcs are not an ordered subset of the parent's"));
            }
            if tolls.is_empty() || tolls.len() >= m {
                return violation(format!("{name} carries {} of {m} toll arcs", tolls.len()));
            }
            if let Err(e) = decompose(net, p) {
                return violation(format!("{name} is not a valid path: {e}"));
            }
            sets.push(tolls.into_iter().collect::<HashSet<_>>());
        }
        if !sets[0].is_disjoint(&sets[1]) {
            return violation("descendants share a toll arc");
        }
        Ok(())
    }
}

fn is_subsequence(small: &[ArcIx], big: &[ArcIx]) -> bool {
    let mut it = big.iter();
    small.iter().all(|a| it.any(|b| b == a))
}

/// Splits `vp` along its covering sequence. `P1` follows the toll-free
/// witnesses of the odd windows and the parent in between, `P2` the even
/// ones. Requires `q >= 2`.
pub fn toll_partition(net: &Network, vp: &ValidPath, seq: &CoveringSequence) -> DescendantPair {
    assert!(seq.q() >= 2, "partition needs at least two windows");
    let odd: Vec<_> = seq.pairs.iter().copied().step_by(2).collect();
    let even: Vec<_> = seq.pairs.iter().copied().skip(1).step_by(2).collect();
    DescendantPair {
        p1: splice(net, vp, &odd),
        p2: splice(net, vp, &even),
    }
}

/// Replaces the parent between head(τi) and tail(τj) by a toll-free
/// witness for each window, keeping the parent elsewhere.
fn splice(net: &Network, vp: &ValidPath, windows: &[(usize, usize)]) -> PathSeq {
    let arcs = vp.path().arcs();
    let nodes = vp.nodes();

    // Retained parent stretches as arc-position ranges.
    let mut kept = Vec::with_capacity(windows.len() + 1);
    let mut from = 0;
    for &(i, j) in windows {
        kept.push(from..vp.term_pos(i));
        from = vp.init_pos(j);
    }
    kept.push(from..arcs.len());

    let mut forbidden = vec![false; net.node_count()];
    for r in &kept {
        for v in &nodes[r.start..=r.end] {
            forbidden[*v] = true;
        }
    }

    let mut out: Vec<ArcIx> = Vec::new();
    for (h, &(i, j)) in windows.iter().enumerate() {
        out.extend_from_slice(&arcs[kept[h].clone()]);
        let (a, b) = (vp.term_node(i), vp.init_node(j));
        let target = vp.table().u(i, j);
        let (len, path) = net.shortest_path_avoiding(a, b, TollRegime::FreeOnly, Some(&forbidden));
        let witness = if &len == target {
            path
        } else {
            net.shortest_path_ix(a, b, TollRegime::FreeOnly).1
        };
        debug_assert!(!matches!(target, Cost::Infinite));
        out.extend(witness.expect("saturated windows have toll-free witnesses").into_arcs());
    }
    out.extend_from_slice(&arcs[kept[windows.len()].clone()]);
    excise_cycles(net, out)
}

/// Removes the cycle between the two visits of the first repeated node until
/// the walk is simple.
fn excise_cycles(net: &Network, mut arcs: Vec<ArcIx>) -> PathSeq {
    loop {
        let mut first_seen = std::collections::HashMap::new();
        first_seen.insert(net.source(), 0usize);
        let mut cut = None;
        for (p, &a) in arcs.iter().enumerate() {
            let v = net.head(a);
            if let Some(&start) = first_seen.get(&v) {
                cut = Some(start..p + 1);
                break;
            }
            first_seen.insert(v, p + 1);
        }
        match cut {
            Some(r) => {
                arcs.drain(r);
            }
            None => return PathSeq::new(arcs),
        }
    }
}
