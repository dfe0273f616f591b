//! End-to-end acceptance gate. Each criterion prints one PASS/FAIL line with
//! its wall time; the process exits nonzero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{random_cheap_layered, random_digraph, random_layered, random_tolls, valid_paths, Rng};
use maxtoll::exact::{brute_force_path_revenue, exact_opt, DEFAULT_CAP};
use maxtoll::explore::{alpha, alpha_balanced, solve_with, within_log_bound, AlphaTable, ExploreOptions, Solution};
use maxtoll::generators::{fixture_fig2, fixture_fig7, gen_sat, gen_z, gen_z_mod, SatInstance};
use maxtoll::graph::{int, Network, PathSeq, Rational, TollRegime};
use maxtoll::pathmodel::{decompose, is_consistent, is_consistent_oracle, lp_bound, TollAssignment};
use maxtoll::tollalg::{covering_sequence, max_rev, toll_partition};
use num_traits::ToPrimitive;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn verified() -> ExploreOptions {
    ExploreOptions { verify: true }
}

fn names(net: &Network, p: &PathSeq) -> Vec<String> {
    p.nodes(net)
        .unwrap()
        .into_iter()
        .map(|v| net.node_name(v).to_owned())
        .collect()
}

/// Sandwich and recursion-size checks shared by several campaigns.
fn check_solution(net: &Network, sol: &Solution, opt: &Rational, label: &str) -> Result<(), String> {
    let lp = lp_bound(net);
    ensure!(sol.lp == lp, "{label}: solution lp {} != {lp}", sol.lp);
    ensure!(sol.revenue <= *opt, "{label}: revenue {} > opt {opt}", sol.revenue);
    ensure!(*opt <= lp, "{label}: opt {opt} > lp {lp}");
    ensure!(
        sol.revenue.clone() * &sol.guarantee >= lp,
        "{label}: revenue {} * alpha {} < lp {lp}",
        sol.revenue,
        sol.guarantee
    );
    let m0 = sol.initial_toll_count;
    if m0 > 0 {
        ensure!(
            sol.recursion_calls < 2 * m0,
            "{label}: {} calls for m = {m0}",
            sol.recursion_calls
        );
    }
    ensure!(sol.steps_verified == sol.recursion_calls, "{label}: unverified recursion steps");
    Ok(())
}

fn criterion_1() -> Outcome {
    let net = fixture_fig7();
    let (_, p0) = net.shortest_path_ix(net.source(), net.sink(), TollRegime::ZeroTolls);
    let vp = decompose(&net, &p0.unwrap()).map_err(|e| e.to_string())?;
    let mr = max_rev(vp.table());
    ensure!(mr.revenue == int(4), "MaxRev(P0) = {}", mr.revenue);
    ensure!(mr.tolls == [int(1), int(2), int(0), int(1)], "tolls {:?}", mr.tolls);
    ensure!(mr.active == [(0, 2), (0, 4), (0, 4), (2, 5)], "active {:?}", mr.active);
    let seq = covering_sequence(&mr, 4);
    ensure!(seq.pairs == [(0, 4), (2, 5)], "covering {:?}", seq.pairs);
    let pair = toll_partition(&net, &vp, &seq);
    ensure!(names(&net, &pair.p1) == ["s", "v7", "v8", "t"], "P1 {:?}", names(&net, &pair.p1));
    ensure!(
        names(&net, &pair.p2) == ["s", "v1", "v2", "v3", "v4", "t"],
        "P2 {:?}",
        names(&net, &pair.p2)
    );
    let rev = |p: &PathSeq| max_rev(decompose(&net, p).unwrap().table()).revenue;
    ensure!(rev(&pair.p1) == int(7), "V(P1) = {}", rev(&pair.p1));
    ensure!(rev(&pair.p2) == int(9), "V(P2) = {}", rev(&pair.p2));
    let sol = solve_with(&net, verified());
    ensure!(sol.revenue == int(9), "solve = {}", sol.revenue);
    ensure!(sol.lp == int(10), "lp = {}", sol.lp);
    Ok("tolls (1,2,0,1), P1 7, P2 9, solve 9, LP 10".into())
}

fn criterion_2() -> Outcome {
    let net = fixture_fig2();
    let (_, p) = net.shortest_path_ix(net.source(), net.sink(), TollRegime::ZeroTolls);
    let vp = decompose(&net, &p.unwrap()).map_err(|e| e.to_string())?;
    let t = vp.table();
    let m = t.m();
    ensure!(m == 2, "expected two toll arcs, found {m}");
    // (first toll, last toll, bound) for each window that constrains a toll
    let mut constraints = BTreeSet::new();
    for i in 0..=m {
        for j in i + 2..=m + 1 {
            if let Some(slack) = t.slack(i, j) {
                constraints.insert((i + 1, j - 1, slack));
            }
        }
    }
    let want: BTreeSet<_> = [(1, 1, int(11)), (2, 2, int(7)), (1, 2, int(4))].into_iter().collect();
    ensure!(constraints == want, "constraints {constraints:?}");
    let opt = exact_opt(&net, DEFAULT_CAP).opt;
    ensure!(opt == int(4), "exact_opt = {opt}");
    ensure!(is_consistent(t, &[int(2), int(2)]), "T = (2,2) rejected by window test");
    let tolls = TollAssignment::on_path(&net, &vp, &[int(2), int(2)]);
    ensure!(is_consistent_oracle(&net, &vp, &tolls), "T = (2,2) rejected by oracle");
    Ok("{T1<=11, T2<=7, T1+T2<=4}, opt 4, (2,2) consistent".into())
}

fn criterion_3() -> Outcome {
    ensure!(alpha(1) == int(1), "alpha(1) = {}", alpha(1));
    let mut table = AlphaTable::new();
    let top = 1usize << 16;
    table.extend_to(top);
    for k in 1..=top {
        let a = table.get(k);
        ensure!(within_log_bound(&a, k as u64), "alpha({k}) = {a} exceeds log bound");
    }
    for k in 1..=4096 {
        ensure!(table.get(k) == alpha_balanced(k), "alpha({k}) != balanced");
    }
    Ok(format!("log bound to 2^16, balanced identity to 4096, alpha(2^16) = {}", table.get(top)))
}

fn criterion_4() -> Outcome {
    for k in 1..=12 {
        let (net, meta) = gen_z(k);
        let sc = int(meta.scale as i64);
        let lp = lp_bound(&net);
        ensure!(lp == &sc * int(2) * alpha(k), "Z({k}): lp {lp}");
        let ex = exact_opt(&net, DEFAULT_CAP);
        ensure!(!ex.truncated, "Z({k}): enumeration truncated");
        ensure!(ex.opt == &sc * int(2), "Z({k}): opt {}", ex.opt);
        ensure!(lp / ex.opt == alpha(k), "Z({k}): gap ratio");
    }
    // k = 1 carries no claim for the modified family
    for k in 2..=12 {
        let (net, meta) = gen_z_mod(k);
        let sc = int(meta.scale as i64);
        let ex = exact_opt(&net, DEFAULT_CAP);
        ensure!(!ex.truncated, "Zmod({k}): enumeration truncated");
        ensure!(ex.opt == &sc * (int(2) * alpha(k) - int(1)), "Zmod({k}): opt {}", ex.opt);
        let sol = solve_with(&net, verified());
        ensure!(sol.revenue == &sc * int(2), "Zmod({k}): solve {}", sol.revenue);
        check_solution(&net, &sol, &ex.opt, &format!("Zmod({k})"))?;
    }
    Ok("Z(1..12) and Zmod(2..12) exact".into())
}

/// 200 formulas with 1..=4 variables and 1..=4 clauses. Half of the
/// clauses repeat one literal three times; short formulas over few
/// variables only become unsatisfiable that way.
fn sat_samples() -> Vec<SatInstance> {
    let mut rng = Rng::new(0x5A7);
    let mut out = Vec::new();
    while out.len() < 200 {
        let n = rng.range(1, 4);
        let m = rng.range(1, 4) as usize;
        let literal = |rng: &mut Rng| {
            let v = rng.range(1, n) as i32;
            if rng.below(2) == 0 { v } else { -v }
        };
        let clauses = (0..m)
            .map(|_| {
                if rng.below(2) == 0 {
                    vec![literal(&mut rng); 3]
                } else {
                    (0..3).map(|_| literal(&mut rng)).collect()
                }
            })
            .collect();
        out.push(SatInstance::new(n as usize, clauses).unwrap());
    }
    out
}

fn criterion_5() -> Outcome {
    let (mut sat, mut unsat) = (0, 0);
    for (idx, f) in sat_samples().iter().enumerate() {
        let (net, meta) = gen_sat(f);
        let m = f.clauses().len() as i64;
        ensure!(meta.expected.lp == Some(int(3 * m - 2)), "#{idx}: lp metadata");
        let ex = exact_opt(&net, DEFAULT_CAP);
        ensure!(!ex.truncated, "#{idx}: truncated");
        let reaches = ex.opt == int(3 * m - 2);
        let satisfiable = f.is_satisfiable();
        ensure!(
            reaches == satisfiable,
            "#{idx} {:?}: opt {} but satisfiable = {satisfiable}",
            f.clauses(),
            ex.opt
        );
        if satisfiable {
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    ensure!(unsat >= 10, "only {unsat} unsatisfiable samples");
    Ok(format!("{sat} satisfiable, {unsat} unsatisfiable"))
}

fn criterion_6() -> Outcome {
    let mut rng = Rng::new(6);
    for i in 0..500 {
        let net = random_layered(&mut rng);
        let ex = exact_opt(&net, DEFAULT_CAP);
        ensure!(!ex.truncated, "random #{i}: truncated");
        let sol = solve_with(&net, verified());
        check_solution(&net, &sol, &ex.opt, &format!("random #{i}"))?;
    }
    let mut families: Vec<(String, Network)> = vec![
        ("fig2".into(), fixture_fig2()),
        ("fig7".into(), fixture_fig7()),
    ];
    for k in 1..=8 {
        families.push((format!("Z({k})"), gen_z(k).0));
        families.push((format!("Zmod({k})"), gen_z_mod(k).0));
    }
    for (i, f) in sat_samples().iter().take(40).enumerate() {
        families.push((format!("sat #{i}"), gen_sat(f).0));
    }
    for (label, net) in &families {
        let ex = exact_opt(net, DEFAULT_CAP);
        let sol = solve_with(net, verified());
        check_solution(net, &sol, &ex.opt, label)?;
    }
    Ok(format!("500 random + {} family instances", families.len()))
}

fn criterion_7() -> Outcome {
    let mut rng = Rng::new(7);
    let (mut yes, mut no, mut triples) = (0, 0, 0);
    while triples < 1000 {
        let net = if triples % 2 == 0 {
            random_layered(&mut rng)
        } else {
            random_digraph(&mut rng, 6)
        };
        let paths = valid_paths(&net, 5000);
        if paths.is_empty() {
            continue;
        }
        let vp = rng.pick(&paths);
        let m = vp.toll_count();
        let mr = max_rev(vp.table());
        let hi = mr.revenue.ceil().to_integer().to_u64().unwrap() + 1;
        let tolls = if rng.below(3) == 0 {
            // the greedy optimum nudged by half a unit on one arc
            let mut t = mr.tolls.clone();
            let k = rng.below(m as u64) as usize;
            t[k] += Rational::new(1.into(), 2.into());
            t
        } else {
            random_tolls(&mut rng, m, hi)
        };
        let window = is_consistent(vp.table(), &tolls);
        let oracle = is_consistent_oracle(&net, vp, &TollAssignment::on_path(&net, vp, &tolls));
        ensure!(window == oracle, "triple {triples}: window {window}, oracle {oracle}, tolls {tolls:?}");
        if window {
            yes += 1;
        } else {
            no += 1;
        }
        triples += 1;
    }
    ensure!(yes >= 100 && no >= 100, "unbalanced campaign: {yes} consistent, {no} not");
    Ok(format!("1000 triples ({yes} consistent, {no} inconsistent)"))
}

fn criterion_8() -> Outcome {
    let mut rng = Rng::new(8);
    let mut checked = 0;
    let mut instances = 0;
    while checked < 300 {
        let net = match instances % 2 {
            0 => random_cheap_layered(&mut rng),
            _ => random_digraph(&mut rng, 2),
        };
        instances += 1;
        if net.total_fixed_cost() > int(20) {
            continue;
        }
        for vp in valid_paths(&net, 5000) {
            if vp.toll_count() > 3 {
                continue;
            }
            let greedy = max_rev(vp.table()).revenue;
            let grid = brute_force_path_revenue(&net, &vp).map_err(|e| e.to_string())?;
            ensure!(grid == greedy, "instance {instances}: grid {grid} != greedy {greedy}");
            checked += 1;
        }
    }
    Ok(format!("{checked} paths on {instances} instances"))
}

fn criterion_9() -> Outcome {
    let mut rng = Rng::new(9);
    let mut steps = 0;
    let mut nets: Vec<Network> = Vec::new();
    for _ in 0..300 {
        nets.push(random_layered(&mut rng));
        nets.push(random_digraph(&mut rng, 6));
    }
    for k in 1..=32 {
        nets.push(gen_z(k).0);
        nets.push(gen_z_mod(k).0);
    }
    nets.push(fixture_fig7());
    nets.push(fixture_fig2());
    for (i, net) in nets.iter().enumerate() {
        // verification panics on a broken invariant; surface it as a failure
        let sol = std::panic::catch_unwind(|| solve_with(net, verified()))
            .map_err(|e| format!("instance {i}: {}", panic_text(&e)))?;
        let m0 = sol.initial_toll_count;
        ensure!(
            m0 == 0 || sol.recursion_calls < 2 * m0,
            "instance {i}: {} calls for m = {m0}",
            sol.recursion_calls
        );
        ensure!(sol.steps_verified == sol.recursion_calls, "instance {i}: unverified steps");
        steps += sol.steps_verified;
    }
    Ok(format!("{steps} verified steps on {} instances", nets.len()))
}

fn panic_text(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panic".into())
}

fn smoke() -> Outcome {
    let (net, meta) = gen_z(64);
    let sol = solve_with(&net, ExploreOptions { verify: false });
    ensure!(sol.revenue == int(2 * meta.scale as i64), "revenue {}", sol.revenue);
    Ok(format!("{} recursion calls", sol.recursion_calls))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 worked example", criterion_1, Duration::from_secs(1)),
        ("2 two-toll example", criterion_2, Duration::from_secs(1)),
        ("3 alpha table", criterion_3, Duration::from_secs(10)),
        ("4 tightness family", criterion_4, Duration::from_secs(60)),
        ("5 sat reduction", criterion_5, Duration::from_secs(300)),
        ("6 guarantee sandwich", criterion_6, Duration::from_secs(300)),
        ("7 consistency oracle", criterion_7, Duration::from_secs(120)),
        ("8 grid oracle", criterion_8, Duration::from_secs(300)),
        ("9 structural invariants", criterion_9, Duration::from_secs(300)),
        ("smoke Z(64)", smoke, Duration::from_secs(10)),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(note) if took > limit => Err(format!("{note}; took {took:.2?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(note) => println!("criterion {name}: PASS ({took:.2?}) {note}"),
            Err(why) => {
                failed += 1;
                println!("criterion {name}: FAIL ({took:.2?}) {why}");
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
