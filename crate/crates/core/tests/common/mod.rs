//! Random instances and small helpers shared by the integration suites.
#![allow(dead_code)]

use maxtoll::exact::enumerate_simple_paths;
use maxtoll::generators::{gen_random, SplitMix64};
use maxtoll::graph::{build_network, int, ratio, Arc, FreeDistances, Network, Rational};
use maxtoll::pathmodel::{decompose_cached, ValidPath};

pub struct Rng(SplitMix64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(SplitMix64::new(seed))
    }

    pub fn next(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    /// Uniform in `lo..=hi`.
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.below(hi - lo + 1)
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len() as u64) as usize]
    }
}

/// Layered instance with parameters inside the small-instance envelope
/// (layers <= 4, width <= 3, cmax <= 6).
pub fn random_layered(rng: &mut Rng) -> Network {
    let layers = rng.range(2, 4) as usize;
    let width = rng.range(1, 3) as usize;
    let cmax = rng.range(1, 6);
    let p = ratio(rng.range(1, 4) as i64, 5);
    gen_random(layers, width, &p, cmax, rng.next()).0
}

/// Tiny layered instance whose total cost stays low enough for the toll
/// grid search.
pub fn random_cheap_layered(rng: &mut Rng) -> Network {
    let width = rng.range(1, 2) as usize;
    let p = ratio(rng.range(2, 4) as i64, 5);
    gen_random(2, width, &p, 1, rng.next()).0
}

/// Arbitrary digraph on `s`, `t` and up to five inner nodes: cycles,
/// antiparallel and parallel arcs all allowed. A free `s -> t` arc keeps
/// the sink toll-free reachable.
pub fn random_digraph(rng: &mut Rng, cmax: u64) -> Network {
    let inner = rng.range(1, 5) as usize;
    let names: Vec<String> = std::iter::once("s".to_owned())
        .chain((1..=inner).map(|i| format!("v{i}")))
        .chain(std::iter::once("t".to_owned()))
        .collect();
    let n = names.len() as u64;
    let count = rng.range(inner as u64 + 1, 3 * inner as u64 + 3);
    let mut arcs = Vec::new();
    for i in 0..count {
        let from = rng.below(n - 1) as usize; // never leave t
        let mut to = 1 + rng.below(n - 1) as usize; // never enter s
        if to == from {
            to = names.len() - 1;
        }
        let cost = int(rng.range(0, cmax) as i64);
        let id = format!("e{i:02}");
        let arc = if rng.below(5) < 2 {
            Arc::free(&id, &names[from], &names[to], cost)
        } else {
            Arc::toll(&id, &names[from], &names[to], cost)
        };
        arcs.push(arc);
    }
    let bypass = int((rng.range(1, 3) * cmax) as i64);
    arcs.push(Arc::free("z", "s", "t", bypass));
    build_network(arcs, "s", "t").expect("generated digraph is well formed")
}

/// Every valid path among the first `cap` simple paths.
pub fn valid_paths(net: &Network, cap: usize) -> Vec<ValidPath> {
    let mut cache = FreeDistances::new(net);
    enumerate_simple_paths(net, cap)
        .paths
        .iter()
        .filter_map(|p| decompose_cached(&mut cache, p).ok())
        .collect()
}

/// Integer or half-integer tolls in `[0, hi]`.
pub fn random_tolls(rng: &mut Rng, m: usize, hi: u64) -> Vec<Rational> {
    (0..m)
        .map(|_| ratio(rng.range(0, 2 * hi) as i64, 2))
        .collect()
}
