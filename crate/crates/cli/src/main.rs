use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use maxtoll::exact::{exact_opt, DEFAULT_CAP};
use maxtoll::explore::{alpha, solve};
use maxtoll::generators::{
    fixture_fig2, fixture_fig7, gen_random, gen_sat, gen_z, gen_z_mod, Family, GenMetadata,
};
use maxtoll::graph::{Cost, Network, Rational, TollRegime};
use maxtoll::pathmodel::{lp_bound, path_is_shortest, TollLevel};
use maxtoll_cli::{
    compact, fraction, parse_dimacs, parse_instance, parse_rational, parse_solution, resolve_solution,
    serialize_instance, serialize_solution, solution_record, FormatError,
};
use num_traits::Zero;
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "maxtoll", version, about = "Toll pricing on shortest-path networks")]
struct Cli {
    /// Print a single JSON object instead of the line format.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate pricing with its guarantee.
    Solve { instance: PathBuf },
    /// Exact optimum by path search (small instances).
    Exact {
        instance: PathBuf,
        /// Maximum number of complete paths to examine.
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Toll-free and zero-toll distances and their gap.
    Bound { instance: PathBuf },
    /// Check a solution file against an instance.
    Verify { instance: PathBuf, solution: PathBuf },
    /// Write a generated instance to stdout.
    Gen {
        family: GenFamily,
        #[arg(long)]
        k: Option<usize>,
        /// DIMACS CNF input for the sat family.
        #[arg(long)]
        cnf: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        layers: usize,
        #[arg(long, default_value_t = 3)]
        width: usize,
        /// Toll probability as an integer or p/q.
        #[arg(long, default_value = "1/2", value_parser = rational_arg)]
        p_toll: Rational,
        #[arg(long, default_value_t = 6)]
        cmax: u64,
    },
    /// Exact approximation factor for k toll arcs.
    Alpha {
        #[arg(long)]
        k: usize,
    },
    /// LP / APP / OPT table over a family.
    Bench {
        family: BenchFamily,
        /// Largest k for the Z families.
        #[arg(long, default_value_t = 8)]
        max_k: usize,
        /// Number of random instances.
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenFamily {
    Z,
    ZMod,
    Sat,
    Fig2,
    Fig7,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchFamily {
    Z,
    ZMod,
    Random,
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).ok_or_else(|| format!("`{s}` is not an integer or p/q"))
}

#[derive(Debug)]
enum Failure {
    /// Diagnostic already reported; exit 1.
    Reported,
    Message(String),
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure::Message(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Message(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Network, Failure> {
    parse_instance(&read(path)?).map_err(|e| Failure::Message(format!("{}: {e}", path.display())))
}

fn q(v: &Rational) -> Value {
    Value::String(fraction(v))
}

fn toll_map(sol: &maxtoll_cli::SolutionFile) -> Value {
    Value::Object(sol.tolls.iter().map(|(id, t)| (id.clone(), q(t))).collect())
}

fn emit(json: bool, lines: String, object: Value) {
    if json {
        println!("{object}");
    } else {
        print!("{lines}");
    }
}

fn cmd_solve(json: bool, path: &Path) -> Result<(), Failure> {
    let net = load(path)?;
    let sol = solve(&net);
    let mut rec = solution_record(&net, &sol.path, &sol.tolls);
    rec.revenue = Some(sol.revenue.clone());
    rec.lp = Some(sol.lp.clone());
    rec.guarantee = Some(sol.guarantee.clone());
    let mut text = serialize_solution(&rec);
    text += &format!(
        "# path_bound {}\n# initial_toll_count {}\n# recursion_calls {}\n",
        fraction(&sol.path_bound),
        sol.initial_toll_count,
        sol.recursion_calls
    );
    let obj = json!({
        "revenue": q(&sol.revenue),
        "lp": q(&sol.lp),
        "guarantee": q(&sol.guarantee),
        "path": rec.path,
        "tolls": toll_map(&rec),
        "path_bound": q(&sol.path_bound),
        "initial_toll_count": sol.initial_toll_count,
        "recursion_calls": sol.recursion_calls,
    });
    emit(json, text, obj);
    Ok(())
}

fn cmd_exact(json: bool, path: &Path, cap: usize) -> Result<(), Failure> {
    if cap == 0 {
        return Err(Failure::Message("--cap must be positive".into()));
    }
    let net = load(path)?;
    let res = exact_opt(&net, cap);
    let lp = lp_bound(&net);
    let mut rec = solution_record(&net, &res.best_path, &res.best_tolls);
    rec.revenue = Some(res.opt.clone());
    rec.lp = Some(lp.clone());
    let mut text = serialize_solution(&rec);
    text += &format!(
        "# paths_enumerated {}\n# truncated {}\n",
        res.paths_enumerated, res.truncated
    );
    let obj = json!({
        "revenue": q(&res.opt),
        "lp": q(&lp),
        "path": rec.path,
        "tolls": toll_map(&rec),
        "paths_enumerated": res.paths_enumerated,
        "truncated": res.truncated,
    });
    emit(json, text, obj);
    if res.truncated {
        eprintln!("warning: search stopped at {cap} paths; the value is a lower bound");
        return Err(Failure::Reported);
    }
    Ok(())
}

fn cmd_bound(json: bool, path: &Path) -> Result<(), Failure> {
    let net = load(path)?;
    let (s, t) = (net.source(), net.sink());
    let dist = |regime| match net.distance_ix(s, t, regime) {
        Cost::Finite(d) => d,
        Cost::Infinite => unreachable!("the sink is toll-free reachable"),
    };
    let (l0, linf) = (dist(TollRegime::ZeroTolls), dist(TollRegime::FreeOnly));
    let lp = lp_bound(&net);
    let text = format!("lp {}\nl0 {}\nlinf {}\n", fraction(&lp), fraction(&l0), fraction(&linf));
    emit(json, text, json!({ "lp": q(&lp), "l0": q(&l0), "linf": q(&linf) }));
    Ok(())
}

fn cmd_verify(json: bool, instance: &Path, solution: &Path) -> Result<(), Failure> {
    let net = load(instance)?;
    let sol = parse_solution(&read(solution)?)
        .map_err(|e| Failure::Message(format!("{}: {e}", solution.display())))?;
    let (path, tolls) = resolve_solution(&net, &sol)?;
    let revenue: Rational = path
        .toll_arcs(&net)
        .into_iter()
        .map(|a| match tolls.level(a) {
            Some(TollLevel::Price(t)) => t.clone(),
            _ => Rational::zero(),
        })
        .sum();
    let problem = if !path.is_simple_st(&net) {
        Some("path is not a simple source-sink path".to_owned())
    } else if !path_is_shortest(&net, &path, &tolls) {
        Some("path is not shortest under the given tolls".to_owned())
    } else {
        sol.revenue
            .as_ref()
            .filter(|r| **r != revenue)
            .map(|r| format!("stated revenue {} differs from toll sum {}", fraction(r), fraction(&revenue)))
    };
    let verdict = if problem.is_none() { "consistent" } else { "inconsistent" };
    let mut obj = Map::new();
    obj.insert("verdict".into(), verdict.into());
    obj.insert("revenue".into(), q(&revenue));
    if let Some(why) = &problem {
        obj.insert("reason".into(), why.clone().into());
    }
    emit(json, format!("{verdict}\n"), Value::Object(obj));
    match problem {
        None => Ok(()),
        Some(why) => {
            eprintln!("{why}");
            Err(Failure::Reported)
        }
    }
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Z => "z",
        Family::ZMod => "z-mod",
        Family::Sat => "sat",
        Family::Fixture => "fixture",
        Family::Random => "random",
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    json: bool,
    family: GenFamily,
    k: Option<usize>,
    cnf: Option<&Path>,
    seed: u64,
    layers: usize,
    width: usize,
    p_toll: &Rational,
    cmax: u64,
) -> Result<(), Failure> {
    let need_k = || match k {
        Some(k) if k >= 1 => Ok(k),
        _ => Err(Failure::Message("this family needs --k >= 1".into())),
    };
    let fixture = |net: Network| {
        let meta = GenMetadata {
            family: Family::Fixture,
            param: net.toll_count(),
            scale: 1,
            expected: Default::default(),
        };
        (net, meta)
    };
    let (net, meta) = match family {
        GenFamily::Z => gen_z(need_k()?),
        GenFamily::ZMod => gen_z_mod(need_k()?),
        GenFamily::Sat => {
            let path = cnf.ok_or_else(|| Failure::Message("gen sat needs --cnf".into()))?;
            let f = parse_dimacs(&read(path)?).map_err(|e| Failure::Message(format!("{}: {e}", path.display())))?;
            gen_sat(&f)
        }
        GenFamily::Fig2 => fixture(fixture_fig2()),
        GenFamily::Fig7 => fixture(fixture_fig7()),
        GenFamily::Random => {
            if layers < 2 || width < 1 || cmax < 1 {
                return Err(Failure::Message("random needs --layers >= 2, --width >= 1, --cmax >= 1".into()));
            }
            if *p_toll < Rational::zero() || *p_toll > Rational::from_integer(1.into()) {
                return Err(Failure::Message("--p-toll must lie in [0, 1]".into()));
            }
            gen_random(layers, width, p_toll, cmax, seed)
        }
    };
    let body = serialize_instance(&net);
    let mut text = format!(
        "# family {}\n# param {}\n# scale {}\n",
        family_name(meta.family),
        meta.param,
        meta.scale
    );
    let e = &meta.expected;
    let mut expected = Map::new();
    for (key, v) in [("lp", &e.lp), ("opt", &e.opt), ("app", &e.app)] {
        if let Some(v) = v {
            text += &format!("# expected {key} {}\n", fraction(v));
            expected.insert(key.into(), q(v));
        }
    }
    text += &body;
    let obj = json!({
        "family": family_name(meta.family),
        "param": meta.param,
        "scale": meta.scale,
        "expected": expected,
        "instance": body,
    });
    emit(json, text, obj);
    Ok(())
}

fn cmd_alpha(json: bool, k: usize) -> Result<(), Failure> {
    if k == 0 {
        return Err(Failure::Message("--k must be at least 1".into()));
    }
    let a = alpha(k);
    emit(json, format!("{}\n", compact(&a)), json!({ "k": k, "alpha": compact(&a) }));
    Ok(())
}

struct BenchRow {
    label: String,
    m: usize,
    lp: Rational,
    app: Rational,
    opt: Option<Rational>,
    alpha: Rational,
}

fn bench_row(label: String, net: &Network, cap: usize) -> BenchRow {
    let sol = solve(net);
    let ex = exact_opt(net, cap);
    BenchRow {
        label,
        m: sol.initial_toll_count,
        lp: sol.lp,
        app: sol.revenue,
        opt: (!ex.truncated).then_some(ex.opt),
        alpha: sol.guarantee,
    }
}

fn cmd_bench(json: bool, family: BenchFamily, max_k: usize, count: usize, seed: u64, cap: usize) -> Result<(), Failure> {
    if cap == 0 {
        return Err(Failure::Message("--cap must be positive".into()));
    }
    let rows: Vec<BenchRow> = match family {
        BenchFamily::Z | BenchFamily::ZMod => (1..=max_k)
            .map(|k| {
                let (net, _) = if matches!(family, BenchFamily::Z) { gen_z(k) } else { gen_z_mod(k) };
                bench_row(format!("k={k}"), &net, cap)
            })
            .collect(),
        BenchFamily::Random => {
            let p = Rational::new(1.into(), 2.into());
            (0..count as u64)
                .map(|i| {
                    let (net, _) = gen_random(3, 3, &p, 6, seed + i);
                    bench_row(format!("seed={}", seed + i), &net, cap)
                })
                .collect()
        }
    };
    let ratio = |num: &Rational, den: &Rational| (!den.is_zero()).then(|| num / den);
    let show = |v: Option<Rational>| v.map_or("-".to_owned(), |v| compact(&v));
    let mut text = String::from("instance m lp app opt lp/app lp/opt alpha\n");
    let mut objs = Vec::new();
    for r in &rows {
        let lp_app = ratio(&r.lp, &r.app);
        let lp_opt = r.opt.as_ref().and_then(|o| ratio(&r.lp, o));
        text += &format!(
            "{} {} {} {} {} {} {} {}\n",
            r.label,
            r.m,
            compact(&r.lp),
            compact(&r.app),
            show(r.opt.clone()),
            show(lp_app.clone()),
            show(lp_opt.clone()),
            compact(&r.alpha)
        );
        let opt_q = |v: &Option<Rational>| v.as_ref().map_or(Value::Null, q);
        objs.push(json!({
            "instance": r.label,
            "m": r.m,
            "lp": q(&r.lp),
            "app": q(&r.app),
            "opt": opt_q(&r.opt),
            "lp/app": opt_q(&lp_app),
            "lp/opt": opt_q(&lp_opt),
            "alpha": q(&r.alpha),
        }));
    }
    emit(json, text, json!({ "rows": objs }));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    let result = match &cli.command {
        Command::Solve { instance } => cmd_solve(json, instance),
        Command::Exact { instance, cap } => cmd_exact(json, instance, *cap),
        Command::Bound { instance } => cmd_bound(json, instance),
        Command::Verify { instance, solution } => cmd_verify(json, instance, solution),
        Command::Gen {
            family,
            k,
            cnf,
            seed,
            layers,
            width,
            p_toll,
            cmax,
        } => cmd_gen(json, *family, *k, cnf.as_deref(), *seed, *layers, *width, p_toll, *cmax),
        Command::Alpha { k } => cmd_alpha(json, *k),
        Command::Bench {
            family,
            max_k,
            count,
            seed,
            cap,
        } => cmd_bench(json, *family, *max_k, *count, *seed, *cap),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Reported) => ExitCode::from(1),
        Err(Failure::Message(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
