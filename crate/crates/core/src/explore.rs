//! Approximation factor tables and the recursive descendant exploration.

use std::collections::BTreeMap;
use std::sync::Mutex;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::graph::{int, FreeDistances, Network, PathSeq, Rational, TollRegime};
use crate::pathmodel::{
    decompose_cached, is_consistent_oracle, lp_bound, path_bound, path_is_shortest, TollAssignment,
    TollLevel, ValidPath,
};
use crate::tollalg::{covering_sequence, max_rev, toll_partition, InvariantViolation};

/// Fractional bits of the fixed-point representation. `α(k)` has
/// denominator at most `2^⌈log2 k⌉`, so 40 bits cover every table the
/// crate builds.
const ALPHA_FRAC_BITS: u32 = 40;
const ALPHA_ONE: u64 = 1 << ALPHA_FRAC_BITS;

/// Memoized factors computed by the max-over-splits recurrence
/// `α(k) = ½·max{1 + α(i) + α(j) : 0 < i <= j < k, i + j <= k}`, `α(1) = 1`.
///
/// Values are stored exactly as integers scaled by `2^40`; a halving that
/// would lose a bit panics instead of rounding.
#[derive(Clone, Debug)]
pub struct AlphaTable {
    scaled: Vec<u64>,
    /// Best `α(i) + α(j)` over all admissible splits seen so far.
    best_split: Option<u64>,
}

impl Default for AlphaTable {
    fn default() -> Self {
        Self::new()
    }
}

impl AlphaTable {
    pub fn new() -> Self {
        AlphaTable {
            scaled: vec![0, ALPHA_ONE],
            best_split: None,
        }
    }

    pub fn len(&self) -> usize {
        self.scaled.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Extends the table through `k`.
    pub fn extend_to(&mut self, k: usize) {
        while self.scaled.len() <= k {
            let n = self.scaled.len();
            // splits with i + j < n were already folded into best_split
            let a = &self.scaled;
            let fresh = (1..=n / 2).map(|i| a[i] + a[n - i]).max();
            let best = self.best_split.max(fresh).expect("n >= 2 has a split");
            self.best_split = Some(best);
            let doubled = ALPHA_ONE + best;
            assert!(doubled.is_multiple_of(2), "alpha({n}) needs more than {ALPHA_FRAC_BITS} fractional bits");
            self.scaled.push(doubled / 2);
        }
    }

    pub fn get(&mut self, k: usize) -> Rational {
        assert!(k >= 1, "alpha is defined for k >= 1");
        self.extend_to(k);
        Rational::new(BigInt::from(self.scaled[k]), BigInt::from(ALPHA_ONE))
    }
}

static ALPHA: Mutex<AlphaTable> = Mutex::new(AlphaTable {
    scaled: Vec::new(),
    best_split: None,
});

/// Exact approximation factor `α(k)` from the max-over-splits recurrence.
pub fn alpha(k: usize) -> Rational {
    let mut table = ALPHA.lock().unwrap_or_else(|e| e.into_inner());
    if table.scaled.is_empty() {
        *table = AlphaTable::new();
    }
    table.get(k)
}

/// `α(k)` through the balanced split `α(k) = ½(1 + α(⌈k/2⌉) + α(⌊k/2⌋))`,
/// touching `O(log k)` values.
pub fn alpha_balanced(k: usize) -> Rational {
    fn go(k: usize, memo: &mut BTreeMap<usize, Rational>) -> Rational {
        if k == 1 {
            return Rational::one();
        }
        if let Some(v) = memo.get(&k) {
            return v.clone();
        }
        let v = (Rational::one() + go(k.div_ceil(2), memo) + go(k / 2, memo)) / int(2);
        memo.insert(k, v.clone());
        v
    }
    assert!(k >= 1, "alpha is defined for k >= 1");
    go(k, &mut BTreeMap::new())
}

/// Decides `factor <= ½·log2(k) + 1` exactly for a dyadic `factor`, i.e.
/// `2^(2(factor - 1)) <= k`.
pub fn within_log_bound(factor: &Rational, k: u64) -> bool {
    assert!(k >= 1);
    let y: Rational = (factor - Rational::one()) * int(2);
    if !y.is_positive() {
        return true;
    }
    let f = 63 - k.leading_zeros() as i64; // floor(log2 k)
    if y <= int(f) {
        return true;
    }
    if y > int(f + 1) || k.is_power_of_two() {
        // log2 k < f + 1, or log2 k == f < y
        return false;
    }
    // f < y <= f + 1 and log2 k is irrational: compare the fractional part
    // of y with the leading binary digits of log2(k / 2^f).
    let frac = y - int(f);
    let denom = frac.denom().clone();
    let bits = denom.bits() - 1;
    assert!(
        denom == BigInt::one() << bits,
        "factor must be dyadic"
    );
    let target = frac.numer().to_biguint().expect("positive"); // digits scaled by 2^bits
    let digits = log2_digits(k, f as u32, bits as u32);
    digits >= target
}

/// `floor(2^bits · log2(k / 2^f))` for `2^f < k < 2^(f+1)`, by repeated
/// squaring under outward-rounded fixed point. Precision doubles whenever
/// the interval straddles 2; the true value never equals 2 because the
/// logarithm is irrational.
fn log2_digits(k: u64, f: u32, bits: u32) -> BigUint {
    let mut precision = 128u32;
    'retry: loop {
        let one = BigUint::one() << precision;
        let two = &one << 1u32;
        let mut lo = (BigUint::from(k) << precision) >> f;
        let mut hi = lo.clone();
        if (&lo << f) != (BigUint::from(k) << precision) {
            hi += 1u32;
        }
        let mut digits = BigUint::zero();
        for _ in 0..bits {
            lo = (&lo * &lo) >> precision;
            let sq = &hi * &hi;
            hi = (&sq >> precision) + u32::from(!(&sq % &one).is_zero());
            digits <<= 1u32;
            if lo >= two {
                digits += 1u32;
                lo >>= 1u32;
                hi = (&hi + 1u32) >> 1u32;
            } else if hi >= two {
                precision *= 2;
                continue 'retry;
            }
        }
        return digits;
    }
}

/// Knobs for [`explore_descendants_with`].
#[derive(Clone, Copy, Debug)]
pub struct ExploreOptions {
    /// Check every structural guarantee at each recursion step, panicking on
    /// a violation. On by default in debug builds.
    pub verify: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            verify: cfg!(debug_assertions),
        }
    }
}

/// Best candidate found below one starting path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exploration {
    pub revenue: Rational,
    pub tolls: TollAssignment,
    pub path: PathSeq,
    pub path_bound: Rational,
    /// Number of exploration calls, the root included.
    pub calls: usize,
    /// Number of calls whose invariants were checked.
    pub steps_verified: usize,
}

struct Candidate {
    revenue: Rational,
    tolls: Vec<Rational>,
    vp: ValidPath,
    bound: Rational,
}

struct Explorer<'a> {
    net: &'a Network,
    cache: FreeDistances<'a>,
    opts: ExploreOptions,
    calls: usize,
    verified: usize,
}

impl Explorer<'_> {
    fn run(&mut self, vp: ValidPath) -> Candidate {
        self.calls += 1;
        let table = vp.table();
        let m = vp.toll_count();
        let mr = max_rev(table);
        let bound = path_bound(table);
        if self.opts.verify {
            self.verified += 1;
            self.expect(mr.check(table));
            let priced = TollAssignment::on_path(self.net, &vp, &mr.tolls);
            if !is_consistent_oracle(self.net, &vp, &priced) {
                panic!("greedy tolls rejected by the shortest-path oracle");
            }
        }
        if mr.revenue >= bound {
            return Candidate {
                revenue: mr.revenue,
                tolls: mr.tolls,
                vp,
                bound,
            };
        }

        let seq = covering_sequence(&mr, m);
        assert!(seq.q() >= 2, "a single saturated window forces revenue = bound");
        let pair = toll_partition(self.net, &vp, &seq);
        if self.opts.verify {
            self.expect(seq.check(table, &mr.tolls));
            self.expect(pair.check(self.net, &vp));
        }
        let children = [&pair.p1, &pair.p2].map(|p| {
            decompose_cached(&mut self.cache, p).expect("descendants of a valid path are valid")
        });
        if self.opts.verify {
            self.check_insufficient_step(&mr.revenue, &bound, m, &children);
        }

        let parent = Candidate {
            revenue: mr.revenue,
            tolls: mr.tolls,
            vp,
            bound,
        };
        let [c1, c2] = children;
        let d1 = self.run(c1);
        let d2 = self.run(c2);
        [d1, d2].into_iter().fold(parent, |best, c| {
            if c.revenue > best.revenue {
                c
            } else {
                best
            }
        })
    }

    /// When the parent's revenue is below `B(P)/α(m)`, one descendant keeps
    /// `B(Pr)/α(mr) >= B(P)/α(m)`.
    fn check_insufficient_step(&self, revenue: &Rational, bound: &Rational, m: usize, children: &[ValidPath; 2]) {
        let target = bound / alpha(m);
        if *revenue >= target {
            return;
        }
        let best = children
            .iter()
            .map(|c| path_bound(c.table()) / alpha(c.toll_count()))
            .max()
            .unwrap();
        if best < target {
            panic!("neither descendant keeps the scaled bound ({best} < {target})");
        }
    }

    fn expect(&self, r: Result<(), InvariantViolation>) {
        if let Err(e) = r {
            panic!("{e}");
        }
    }
}

pub fn explore_descendants(net: &Network, vp: &ValidPath) -> Exploration {
    explore_descendants_with(net, vp, ExploreOptions::default())
}

/// Recursive exploration from `vp`: keep the path if its greedy revenue
/// meets its bound, otherwise split it and return the best of parent and
/// both subtrees (ties favor the parent, then the first descendant).
pub fn explore_descendants_with(net: &Network, vp: &ValidPath, opts: ExploreOptions) -> Exploration {
    let mut ex = Explorer {
        net,
        cache: FreeDistances::new(net),
        opts,
        calls: 0,
        verified: 0,
    };
    let best = ex.run(vp.clone());
    Exploration {
        tolls: TollAssignment::on_path(net, &best.vp, &best.tolls),
        path: best.vp.path().clone(),
        revenue: best.revenue,
        path_bound: best.bound,
        calls: ex.calls,
        steps_verified: ex.verified,
    }
}

/// Full pipeline result with guarantee metadata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub path: PathSeq,
    pub tolls: TollAssignment,
    pub revenue: Rational,
    /// `B` of the returned path.
    pub path_bound: Rational,
    pub lp: Rational,
    /// `α(m)` for the toll count `m` of the starting path (1 when it has
    /// none).
    pub guarantee: Rational,
    /// Toll arcs on the starting zero-toll shortest path.
    pub initial_toll_count: usize,
    pub recursion_calls: usize,
    pub steps_verified: usize,
}

pub fn solve(net: &Network) -> Solution {
    solve_with(net, ExploreOptions::default())
}

/// Explores from the deterministic zero-toll shortest path.
pub fn solve_with(net: &Network, opts: ExploreOptions) -> Solution {
    let lp = lp_bound(net);
    let (_, p0) = net.shortest_path_ix(net.source(), net.sink(), TollRegime::ZeroTolls);
    let p0 = p0.expect("the sink is reachable");
    let m0 = p0.toll_arcs(net).len();
    let guarantee = alpha(m0.max(1));

    let solution = if lp.is_zero() {
        // Nothing beats a toll-free path; price P0 at zero.
        let mut tolls = TollAssignment::all_blocked(net);
        for a in p0.toll_arcs(net) {
            tolls.set(a, TollLevel::Price(Rational::zero()));
        }
        Solution {
            path: p0,
            tolls,
            revenue: Rational::zero(),
            path_bound: Rational::zero(),
            lp,
            guarantee,
            initial_toll_count: m0,
            recursion_calls: 0,
            steps_verified: 0,
        }
    } else {
        let mut cache = FreeDistances::new(net);
        let vp = decompose_cached(&mut cache, &p0).expect("a zero-toll shortest path is valid");
        let ex = explore_descendants_with(net, &vp, opts);
        Solution {
            path: ex.path,
            tolls: ex.tolls,
            revenue: ex.revenue,
            path_bound: ex.path_bound,
            lp,
            guarantee,
            initial_toll_count: m0,
            recursion_calls: ex.calls,
            steps_verified: ex.steps_verified,
        }
    };
    assert!(
        path_is_shortest(net, &solution.path, &solution.tolls),
        "returned tolls must keep the path shortest"
    );
    debug_assert!(solution.revenue <= solution.lp);
    solution
}

/// Ceiling of `log2`, used to size dyadic scales.
pub fn ceil_log2(k: usize) -> u32 {
    assert!(k >= 1);
    usize::BITS - (k - 1).leading_zeros()
}

/// Sanity helper: converts a small rational to `f64` for display only.
pub fn approx(x: &Rational) -> f64 {
    x.numer().to_f64().unwrap_or(f64::NAN) / x.denom().to_f64().unwrap_or(f64::NAN)
}
