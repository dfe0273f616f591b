//! Instance constructors: the `Z(k)` tightness family and its variant with
//! a direct toll arc, the 3-SAT reduction, two small worked fixtures and
//! seeded layered random networks.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::explore::{alpha, ceil_log2};
use crate::graph::{build_network, int, Arc, Network, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Z,
    ZMod,
    Sat,
    Fixture,
    Random,
}

/// Values a family is known to produce, in the network's (scaled) units.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Expected {
    pub lp: Option<Rational>,
    pub opt: Option<Rational>,
    pub app: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenMetadata {
    pub family: Family,
    /// `k` for the `Z` families, clause count for SAT, layer count for
    /// random networks.
    pub param: usize,
    /// Multiplier applied to every cost to make it integral.
    pub scale: u64,
    pub expected: Expected,
}

/// Shorthand for a cost-0 arc.
fn zero() -> Rational {
    Rational::zero()
}

struct ZBuilder {
    arcs: Vec<Arc>,
    blocks: usize,
    scale: Rational,
}

impl ZBuilder {
    /// Appends a fresh copy of `Z(k)` and returns its terminals.
    fn block(&mut self, k: usize) -> (String, String) {
        let n = self.blocks;
        self.blocks += 1;
        let (s, t) = (format!("b{n}.s"), format!("b{n}.t"));
        if k == 1 {
            self.arcs.push(Arc::toll(&format!("b{n}.toll"), &s, &t, zero()));
            self.arcs
                .push(Arc::free(&format!("b{n}.free"), &s, &t, int(2) * &self.scale));
            return (s, t);
        }
        let (lo, hi) = (k / 2, k.div_ceil(2));
        let (s1, t1) = self.block(lo);
        let (s2, t2) = self.block(hi);
        let diff = alpha(lo) - alpha(hi);
        let a = (Rational::one() + &diff) * &self.scale;
        let b = (Rational::one() - &diff) * &self.scale;
        assert!(a.is_integer() && b.is_integer(), "scale must integerize Z({k})");
        let joints = [
            (&s, &s1, zero()),
            (&t1, &s2, zero()),
            (&t2, &t, zero()),
            (&s, &s2, a),
            (&t1, &t, b),
        ];
        for (i, (from, to, cost)) in joints.into_iter().enumerate() {
            self.arcs
                .push(Arc::free(&format!("b{n}.j{}", i + 1), from, to, cost));
        }
        (s, t)
    }
}

fn z_arcs(k: usize) -> (Vec<Arc>, String, String, u64) {
    assert!(k >= 1, "Z(k) needs k >= 1");
    let scale = 1u64 << ceil_log2(k);
    let mut b = ZBuilder {
        arcs: Vec::new(),
        blocks: 0,
        scale: Rational::from_integer(scale.into()),
    };
    let (s, t) = b.block(k);
    (b.arcs, s, t, scale)
}

/// The tightness family `Z(k)`, costs scaled by `2^⌈log2 k⌉`.
pub fn gen_z(k: usize) -> (Network, GenMetadata) {
    let (arcs, s, t, scale) = z_arcs(k);
    let net = build_network(arcs, &s, &t).expect("Z(k) is well formed");
    let sc = int(scale as i64);
    let meta = GenMetadata {
        family: Family::Z,
        param: k,
        scale,
        expected: Expected {
            lp: Some(&sc * int(2) * alpha(k)),
            opt: Some(&sc * int(2)),
            app: None,
        },
    };
    (net, meta)
}

/// `Z(k)` plus a toll arc of (scaled) cost 1 straight from source to sink.
/// For `k = 1` no expectation is attached.
pub fn gen_z_mod(k: usize) -> (Network, GenMetadata) {
    let (mut arcs, s, t, scale) = z_arcs(k);
    let sc = int(scale as i64);
    arcs.push(Arc::toll("direct", &s, &t, sc.clone()));
    let net = build_network(arcs, &s, &t).expect("Z(k) is well formed");
    let expected = if k >= 2 {
        let two_alpha = int(2) * alpha(k);
        Expected {
            lp: Some(&sc * &two_alpha),
            opt: Some(&sc * (two_alpha - int(1))),
            app: Some(&sc * int(2)),
        }
    } else {
        Expected::default()
    };
    let meta = GenMetadata {
        family: Family::ZMod,
        param: k,
        scale,
        expected,
    };
    (net, meta)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SatError {
    #[error("clause {clause} must have exactly 3 literals, found {found}")]
    MalformedClause { clause: usize, found: usize },
    #[error("literal {literal} in clause {clause} is out of range for {vars} variables")]
    LiteralOutOfRange { clause: usize, literal: i32, vars: usize },
    #[error("formula has no clauses")]
    Empty,
}

/// 3-CNF formula. Literals are nonzero signed variable indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SatInstance {
    vars: usize,
    clauses: Vec<[i32; 3]>,
}

impl SatInstance {
    pub fn new(vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self, SatError> {
        if clauses.is_empty() {
            return Err(SatError::Empty);
        }
        let mut out = Vec::with_capacity(clauses.len());
        for (i, c) in clauses.into_iter().enumerate() {
            let clause: [i32; 3] = c.as_slice().try_into().map_err(|_| SatError::MalformedClause {
                clause: i,
                found: c.len(),
            })?;
            for &l in &clause {
                if l == 0 || l.unsigned_abs() as usize > vars {
                    return Err(SatError::LiteralOutOfRange {
                        clause: i,
                        literal: l,
                        vars,
                    });
                }
            }
            out.push(clause);
        }
        Ok(SatInstance { vars, clauses: out })
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn clauses(&self) -> &[[i32; 3]] {
        &self.clauses
    }

    /// Exhaustive check over all `2^n` assignments.
    pub fn is_satisfiable(&self) -> bool {
        assert!(self.vars < 32, "brute-force check limited to 31 variables");
        (0u32..1 << self.vars).any(|mask| {
            self.clauses.iter().all(|c| {
                c.iter().any(|&l| {
                    let bit = mask >> (l.unsigned_abs() - 1) & 1 == 1;
                    bit == (l > 0)
                })
            })
        })
    }
}

/// Toll network whose optimum reaches `3m - 2` iff the formula is
/// satisfiable.
pub fn gen_sat(f: &SatInstance) -> (Network, GenMetadata) {
    let m = f.clauses.len();
    let u = |i: usize| format!("u{}", i + 1);
    let w = |i: usize| format!("w{}", i + 1);
    let p = |i: usize, j: usize| format!("p{}_{}", i + 1, j + 1);
    let q = |i: usize, j: usize| format!("q{}_{}", i + 1, j + 1);
    let mut arcs = Vec::new();
    for i in 0..m {
        for j in 0..3 {
            let tag = format!("{}_{}", i + 1, j + 1);
            arcs.push(Arc::free(&format!("in{tag}"), &u(i), &p(i, j), zero()));
            arcs.push(Arc::toll(&format!("lit{tag}"), &p(i, j), &q(i, j), zero()));
            arcs.push(Arc::free(&format!("out{tag}"), &q(i, j), &w(i), zero()));
        }
        arcs.push(Arc::free(&format!("skip{}", i + 1), &u(i), &w(i), int(1)));
        if i + 1 < m {
            arcs.push(Arc::toll(&format!("link{}", i + 1), &w(i), &u(i + 1), zero()));
            arcs.push(Arc::free(&format!("hop{}", i + 1), &w(i), &u(i + 1), int(2)));
        }
    }
    for (i, ci) in f.clauses.iter().enumerate() {
        for (j, &l) in ci.iter().enumerate() {
            for (i2, ci2) in f.clauses.iter().enumerate().skip(i + 1) {
                for (j2, &l2) in ci2.iter().enumerate() {
                    if l == -l2 {
                        let cost = int(3 * (i2 - i) as i64 - 2);
                        let id = format!("x{}_{}.{}_{}", i + 1, j + 1, i2 + 1, j2 + 1);
                        arcs.push(Arc::free(&id, &q(i, j), &p(i2, j2), cost));
                    }
                }
            }
        }
    }
    let net = build_network(arcs, &u(0), &w(m - 1)).expect("reduction is well formed");
    let meta = GenMetadata {
        family: Family::Sat,
        param: m,
        scale: 1,
        expected: Expected {
            lp: Some(int(3 * m as i64 - 2)),
            opt: None,
            app: None,
        },
    };
    (net, meta)
}

/// Two toll arcs whose constraints read `T1 <= 11`, `T2 <= 7`,
/// `T1 + T2 <= 4`.
pub fn fixture_fig2() -> Network {
    let arcs = vec![
        Arc::free("e1", "s", "a1", int(0)),
        Arc::toll("T1", "a1", "b1", int(0)),
        Arc::free("e2", "b1", "a2", int(0)),
        Arc::toll("T2", "a2", "b2", int(0)),
        Arc::free("e3", "b2", "t", int(0)),
        Arc::free("f1", "s", "a2", int(11)),
        Arc::free("f2", "b1", "t", int(7)),
        Arc::free("f3", "s", "t", int(4)),
    ];
    build_network(arcs, "s", "t").expect("fixture is well formed")
}

/// Four toll arcs in a row with three shortcuts and a cost-10 bypass.
pub fn fixture_fig7() -> Network {
    let arcs = vec![
        Arc::free("e0", "s", "v1", int(0)),
        Arc::toll("T1", "v1", "v2", int(0)),
        Arc::free("e1", "v2", "v3", int(0)),
        Arc::toll("T2", "v3", "v4", int(0)),
        Arc::free("e2", "v4", "v5", int(0)),
        Arc::toll("T3", "v5", "v6", int(0)),
        Arc::free("e3", "v6", "v7", int(0)),
        Arc::toll("T4", "v7", "v8", int(0)),
        Arc::free("e4", "v8", "t", int(0)),
        Arc::free("f1", "s", "v3", int(1)),
        Arc::free("f2", "s", "v7", int(3)),
        Arc::free("f3", "v4", "t", int(1)),
        Arc::free("f4", "s", "t", int(10)),
    ];
    build_network(arcs, "s", "t").expect("fixture is well formed")
}

/// splitmix64 stream.
#[derive(Clone, Debug)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Layered DAG `s -> L1 -> ... -> L_layers -> t` with complete bipartite
/// connections between consecutive layers. Each arc is a toll arc with
/// probability `p_toll` and has an integer cost drawn from `[0, cmax]`. A
/// free `s -> t` backbone of cost `(layers + 1)·cmax` is always added.
///
/// The toll coin for an arc is `x mod q < p` for `p_toll = p/q` and the
/// cost is `y mod (cmax + 1)`, with `x` and `y` consecutive draws.
pub fn gen_random(layers: usize, width: usize, p_toll: &Rational, cmax: u64, seed: u64) -> (Network, GenMetadata) {
    assert!(layers >= 2 && width >= 1 && cmax >= 1, "layers >= 2, width >= 1, cmax >= 1");
    assert!(
        *p_toll >= Rational::zero() && *p_toll <= Rational::one(),
        "p_toll must lie in [0, 1]"
    );
    let to_u64 = |x: &BigInt| x.to_u64().expect("p_toll fits in 64 bits");
    let (p, q) = (to_u64(p_toll.numer()), to_u64(p_toll.denom()));
    let mut rng = SplitMix64::new(seed);

    let level = |l: usize| -> Vec<String> {
        match l {
            0 => vec!["s".to_owned()],
            l if l == layers + 1 => vec!["t".to_owned()],
            l => (1..=width).map(|i| format!("n{l}_{i}")).collect(),
        }
    };
    let mut arcs = Vec::new();
    for l in 0..=layers {
        for from in level(l) {
            for to in level(l + 1) {
                let toll = rng.next_u64() % q < p;
                let cost = int((rng.next_u64() % (cmax + 1)) as i64);
                let id = format!("a{:04}", arcs.len());
                arcs.push(if toll {
                    Arc::toll(&id, &from, &to, cost)
                } else {
                    Arc::free(&id, &from, &to, cost)
                });
            }
        }
    }
    let backbone = int(((layers as u64 + 1) * cmax) as i64);
    arcs.push(Arc::free("backbone", "s", "t", backbone));
    let net = build_network(arcs, "s", "t").expect("layered network is well formed");
    let meta = GenMetadata {
        family: Family::Random,
        param: layers,
        scale: 1,
        expected: Expected::default(),
    };
    (net, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ratio, Cost, TollRegime};
    use crate::pathmodel::lp_bound;

    fn free_st(net: &Network) -> Cost {
        net.distance_ix(net.source(), net.sink(), TollRegime::FreeOnly)
    }

    #[test]
    fn z1_shape() {
        let (net, meta) = gen_z(1);
        assert_eq!(net.arc_count(), 2);
        assert_eq!(meta.scale, 1);
        assert_eq!(lp_bound(&net), int(2));
        assert_eq!(meta.expected.lp, Some(int(2)));
        assert_eq!(meta.expected.opt, Some(int(2)));
    }

    #[test]
    fn z2_joint_costs() {
        let (net, meta) = gen_z(2);
        assert_eq!(meta.scale, 2);
        for id in ["b0.j4", "b0.j5"] {
            assert_eq!(net.arc(net.arc_ix(id).unwrap()).cost, int(2), "{id}");
        }
        assert_eq!(free_st(&net), Cost::Finite(int(6)));
    }

    #[test]
    fn z_free_distance_is_twice_alpha() {
        for k in 1..=64 {
            let (net, meta) = gen_z(k);
            assert_eq!(net.toll_count(), k);
            let sc = int(meta.scale as i64);
            assert_eq!(free_st(&net), Cost::Finite(&sc * int(2) * alpha(k)), "k = {k}");
            assert_eq!(lp_bound(&net), meta.expected.lp.clone().unwrap());
            let js: Vec<_> = net.arcs().iter().filter(|a| a.id.ends_with(".j4") || a.id.ends_with(".j5")).collect();
            for pair in js.chunks(2) {
                assert!(pair.iter().all(|a| a.cost >= Rational::zero()));
                assert_eq!(&pair[0].cost + &pair[1].cost, int(2) * &sc);
            }
        }
    }

    #[test]
    fn z_mod_expectations() {
        let (net, meta) = gen_z_mod(4);
        assert_eq!(meta.scale, 4);
        assert_eq!(meta.expected.opt, Some(int(12)));
        assert_eq!(meta.expected.app, Some(int(8)));
        assert_eq!(net.toll_count(), 5);
        assert_eq!(gen_z_mod(1).1.expected, Expected::default());
    }

    fn example_formula() -> SatInstance {
        SatInstance::new(4, vec![vec![1, 2, -3], vec![-2, 3, -4], vec![-1, 3, 4]]).unwrap()
    }

    #[test]
    fn sat_lengths_and_arc_count() {
        let f = example_formula();
        let (net, meta) = gen_sat(&f);
        let m = 3;
        assert_eq!(meta.expected.lp, Some(int(7)));
        assert_eq!(free_st(&net), Cost::Finite(int(3 * m - 2)));
        assert_eq!(
            net.distance_ix(net.source(), net.sink(), TollRegime::ZeroTolls),
            Cost::Finite(int(0))
        );
        // complementary cross-clause pairs: (x2,-x2), (-3,3)x2, (1,-1), (-4,4)
        let cross = net.arcs().iter().filter(|a| a.id.starts_with('x')).count();
        assert_eq!(cross, 5);
        let base = 10 * m as usize + 2 * (m as usize - 1);
        assert_eq!(net.arc_count(), base + cross);
        assert!(net.arc_count() <= base + 9 * (m * m) as usize);
    }

    #[test]
    fn sat_cross_arcs_never_shorten_free_path() {
        let f = SatInstance::new(2, vec![vec![1, 1, 1], vec![-1, -1, -1]]).unwrap();
        let (net, _) = gen_sat(&f);
        let mut stripped: Vec<_> = net.arcs().iter().filter(|a| !a.id.starts_with('x')).cloned().collect();
        stripped.sort_by(|a, b| a.id.cmp(&b.id));
        let bare = build_network(stripped, "u1", "w2").unwrap();
        assert_eq!(free_st(&net), free_st(&bare));
    }

    #[test]
    fn sat_instance_validation() {
        assert_eq!(
            SatInstance::new(3, vec![vec![1, 2]]),
            Err(SatError::MalformedClause { clause: 0, found: 2 })
        );
        assert!(matches!(
            SatInstance::new(2, vec![vec![1, 2, 3]]),
            Err(SatError::LiteralOutOfRange { literal: 3, .. })
        ));
        assert_eq!(SatInstance::new(2, vec![]), Err(SatError::Empty));
        assert!(example_formula().is_satisfiable());
        let unsat = SatInstance::new(
            2,
            vec![vec![1, 1, 2], vec![1, 1, -2], vec![-1, -1, 2], vec![-1, -1, -2]],
        )
        .unwrap();
        assert!(!unsat.is_satisfiable());
    }

    #[test]
    fn fixtures_have_expected_bounds() {
        assert_eq!(lp_bound(&fixture_fig2()), int(4));
        assert_eq!(fixture_fig2().total_fixed_cost(), int(22));
        assert_eq!(lp_bound(&fixture_fig7()), int(10));
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs for seed 0 from the reference implementation
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn random_is_deterministic() {
        let p = ratio(1, 2);
        let (a, _) = gen_random(3, 2, &p, 5, 42);
        let (b, _) = gen_random(3, 2, &p, 5, 42);
        assert_eq!(a.arcs(), b.arcs());
        let (c, _) = gen_random(3, 2, &p, 5, 43);
        assert_ne!(a.arcs(), c.arcs());
        // s->L1, L1->L2, L2->L3, L3->t, backbone
        assert_eq!(a.arc_count(), 2 + 4 + 4 + 2 + 1);
        assert_eq!(a.arc(a.arc_ix("backbone").unwrap()).cost, int(20));
    }

    #[test]
    fn random_without_tolls_has_zero_lp() {
        let (net, _) = gen_random(2, 3, &int(0), 4, 7);
        assert_eq!(net.toll_count(), 0);
        assert_eq!(lp_bound(&net), int(0));
        let (all, _) = gen_random(2, 3, &int(1), 4, 7);
        assert_eq!(all.toll_count(), all.arc_count() - 1);
    }
}
