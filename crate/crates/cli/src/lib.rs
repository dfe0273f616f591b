//! Text formats used by the `maxtoll` binary: `.mt` instances, `.mts`
//! solutions and DIMACS CNF.
//!
//! Instance grammar, one record per line, `#` starting a comment:
//!
//! ```text
//! maxtoll 1
//! source s
//! sink t
//! arc <id> <from> <to> <cost> <T|F>
//! ```
//!
//! Solution grammar:
//!
//! ```text
//! revenue <q>
//! lp <q>
//! guarantee <q>
//! path <id> <id> ...
//! toll <id> <q>
//! ```

use std::collections::BTreeMap;
use std::str::FromStr;

use maxtoll::generators::{SatError, SatInstance};
use maxtoll::graph::{build_network, Arc, ArcKind, Network, NetworkError, PathSeq, Rational};
use maxtoll::pathmodel::{TollAssignment, TollLevel};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error("{0}")]
    Solution(String),
}

fn syntax<T>(line: usize, msg: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError::Syntax { line, msg: msg.into() })
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-'))
}

/// Integer or `p/q`, optionally signed.
pub fn parse_rational(tok: &str) -> Option<Rational> {
    let digits = tok.strip_prefix('-').unwrap_or(tok);
    let ok = match digits.split_once('/') {
        Some((p, q)) => {
            !p.is_empty() && !q.is_empty() && p.bytes().chain(q.bytes()).all(|b| b.is_ascii_digit())
        }
        None => !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()),
    };
    if !ok {
        return None;
    }
    Rational::from_str(tok).ok()
}

/// `p/q` always, integers included.
pub fn fraction(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Integer when integral, `p/q` otherwise.
pub fn compact(q: &Rational) -> String {
    q.to_string()
}

/// Meaningful lines with their 1-based numbers, comments stripped.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

pub fn parse_instance(text: &str) -> Result<Network, FormatError> {
    let mut header = false;
    let (mut source, mut sink) = (None, None);
    let mut arcs = Vec::new();
    for (line, toks) in records(text) {
        if !header {
            if toks != ["maxtoll", "1"] {
                return syntax(line, "expected header `maxtoll 1`");
            }
            header = true;
            continue;
        }
        match toks.as_slice() {
            ["source", v] | ["sink", v] if !is_ident(v) => {
                return syntax(line, format!("bad node name `{v}`"));
            }
            ["source", v] => {
                if source.replace(v.to_string()).is_some() {
                    return syntax(line, "source declared twice");
                }
            }
            ["sink", v] => {
                if sink.replace(v.to_string()).is_some() {
                    return syntax(line, "sink declared twice");
                }
            }
            ["arc", id, from, to, cost, kind] => {
                for name in [id, from, to] {
                    if !is_ident(name) {
                        return syntax(line, format!("bad identifier `{name}`"));
                    }
                }
                let Some(cost) = parse_rational(cost) else {
                    return syntax(line, format!("bad cost `{cost}`"));
                };
                let kind = match *kind {
                    "T" => ArcKind::Toll,
                    "F" => ArcKind::Free,
                    other => return syntax(line, format!("arc kind must be T or F, found `{other}`")),
                };
                arcs.push(Arc::new(id, from, to, cost, kind));
            }
            [word, ..] => return syntax(line, format!("unrecognized record `{word}`")),
            [] => unreachable!(),
        }
    }
    if !header {
        return syntax(1, "empty instance");
    }
    let source = source.ok_or(FormatError::Syntax { line: 0, msg: "missing `source`".into() })?;
    let sink = sink.ok_or(FormatError::Syntax { line: 0, msg: "missing `sink`".into() })?;
    Ok(build_network(arcs, &source, &sink)?)
}

pub fn serialize_instance(net: &Network) -> String {
    let mut out = String::from("maxtoll 1\n");
    out += &format!("source {}\nsink {}\n", net.source_name(), net.sink_name());
    for a in net.arcs() {
        let kind = if a.is_toll() { 'T' } else { 'F' };
        out += &format!("arc {} {} {} {} {kind}\n", a.id, a.from, a.to, compact(&a.cost));
    }
    out
}

/// Parsed `.mts` content, arc ids unresolved.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolutionFile {
    pub revenue: Option<Rational>,
    pub lp: Option<Rational>,
    pub guarantee: Option<Rational>,
    pub path: Vec<String>,
    pub tolls: BTreeMap<String, Rational>,
}

pub fn parse_solution(text: &str) -> Result<SolutionFile, FormatError> {
    let mut sol = SolutionFile::default();
    let mut saw_path = false;
    for (line, toks) in records(text) {
        let value = |tok: &str| parse_rational(tok).ok_or_else(|| FormatError::Syntax {
            line,
            msg: format!("bad number `{tok}`"),
        });
        match toks.as_slice() {
            ["revenue", q] => sol.revenue = Some(value(q)?),
            ["lp", q] => sol.lp = Some(value(q)?),
            ["guarantee", q] => sol.guarantee = Some(value(q)?),
            ["path", ids @ ..] => {
                if saw_path {
                    return syntax(line, "path given twice");
                }
                saw_path = true;
                sol.path = ids.iter().map(|s| s.to_string()).collect();
            }
            ["toll", id, q] => {
                if sol.tolls.insert(id.to_string(), value(q)?).is_some() {
                    return syntax(line, format!("toll for `{id}` given twice"));
                }
            }
            [word, ..] => return syntax(line, format!("unrecognized record `{word}`")),
            [] => unreachable!(),
        }
    }
    if !saw_path {
        return syntax(0, "missing `path`");
    }
    Ok(sol)
}

pub fn serialize_solution(sol: &SolutionFile) -> String {
    let mut out = String::new();
    for (key, v) in [("revenue", &sol.revenue), ("lp", &sol.lp), ("guarantee", &sol.guarantee)] {
        if let Some(v) = v {
            out += &format!("{key} {}\n", fraction(v));
        }
    }
    out += "path";
    for id in &sol.path {
        out += " ";
        out += id;
    }
    out += "\n";
    for (id, t) in &sol.tolls {
        out += &format!("toll {id} {}\n", fraction(t));
    }
    out
}

/// Solution record for a path priced by `tolls`; only on-path toll arcs
/// are listed.
pub fn solution_record(net: &Network, path: &PathSeq, tolls: &TollAssignment) -> SolutionFile {
    let mut out = SolutionFile {
        path: path.ids(net).into_iter().map(str::to_owned).collect(),
        ..Default::default()
    };
    for a in path.toll_arcs(net) {
        if let Some(TollLevel::Price(t)) = tolls.level(a) {
            out.tolls.insert(net.arc(a).id.clone(), t.clone());
        }
    }
    out
}

/// Resolves a solution against `net`: the path, and a toll assignment that
/// prices the listed arcs and blocks every other toll arc.
pub fn resolve_solution(net: &Network, sol: &SolutionFile) -> Result<(PathSeq, TollAssignment), FormatError> {
    let lookup = |id: &str| {
        net.arc_ix(id)
            .ok_or_else(|| FormatError::Solution(format!("unknown arc `{id}`")))
    };
    let path = PathSeq::new(sol.path.iter().map(|id| lookup(id)).collect::<Result<_, _>>()?);
    let mut tolls = TollAssignment::all_blocked(net);
    for (id, t) in &sol.tolls {
        let a = lookup(id)?;
        if !net.arc(a).is_toll() {
            return Err(FormatError::Solution(format!("arc `{id}` is not a toll arc")));
        }
        if !path.arcs().contains(&a) {
            return Err(FormatError::Solution(format!("toll arc `{id}` is not on the path")));
        }
        if *t < Rational::from_integer(0.into()) {
            return Err(FormatError::Solution(format!("negative toll on `{id}`")));
        }
        tolls.set(a, TollLevel::Price(t.clone()));
    }
    for a in path.toll_arcs(net) {
        if !sol.tolls.contains_key(&net.arc(a).id) {
            return Err(FormatError::Solution(format!("no toll given for path arc `{}`", net.arc(a).id)));
        }
    }
    Ok((path, tolls))
}

/// DIMACS CNF with exactly three literals per clause.
pub fn parse_dimacs(text: &str) -> Result<SatInstance, FormatError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('c') || body.starts_with('%') {
            continue;
        }
        if body.starts_with('p') {
            let toks: Vec<&str> = body.split_whitespace().collect();
            match toks.as_slice() {
                ["p", "cnf", n, m] if header.is_none() => {
                    let (Ok(n), Ok(m)) = (n.parse(), m.parse()) else {
                        return syntax(line, "bad `p cnf` header");
                    };
                    header = Some((n, m, line));
                }
                _ => return syntax(line, "bad `p cnf` header"),
            }
            continue;
        }
        if header.is_none() {
            return syntax(line, "clause before `p cnf` header");
        }
        for tok in body.split_whitespace() {
            let Ok(lit) = tok.parse::<i32>() else {
                return syntax(line, format!("bad literal `{tok}`"));
            };
            if lit == 0 {
                if current.len() != 3 {
                    return syntax(line, format!("clause has {} literals, expected 3", current.len()));
                }
                clauses.push(std::mem::take(&mut current));
            } else {
                current.push(lit);
            }
        }
    }
    let Some((n, m, hline)) = header else {
        return syntax(1, "missing `p cnf` header");
    };
    if !current.is_empty() {
        return syntax(0, "last clause is not terminated by 0");
    }
    if clauses.len() != m {
        return syntax(hline, format!("header announces {m} clauses, found {}", clauses.len()));
    }
    Ok(SatInstance::new(n, clauses)?)
}
