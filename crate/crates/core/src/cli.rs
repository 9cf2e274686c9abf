//! Command-line front end. [`run_cli`] does all the work and returns the exit
//! code with the text to print, so tests can call it without a process.

use std::fmt::Write as _;

use clap::{Args, Parser, Subcommand};

use crate::classifier::{
    classify_intervals_1qi, classify_strict_intervals_1qi, classify_subsets_1qi, strict_select,
};
use crate::oracle::{self, Mutant, SuiteConfig};
use crate::orbit;
use crate::psolver::{self, PSolution};
use crate::quasi_invariance::{external_quasi_invariant, internal_quasi_invariant};
use crate::selfmap::{parse_map, Interval, Point, PointSet, SelfMap};
use crate::superset::{build_g_orbit_union, check_superset_closure, SupersetError};

pub const WINDOW_ENV: &str = "QUASINV_WINDOW";

#[derive(Debug, Parser)]
#[command(name = "quasinv", version, about = "Orbits, quasi-invariant sets and invariant supersets of self-maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tail and cycle, or drift certificate, of the orbit of X.
    Orbit { map: String, x: Point },
    /// Internal or external k-quasi-invariance of a set or interval.
    Qi(QiArgs),
    /// Families whose sets become invariant after removing one point.
    Classify(ClassifyArgs),
    /// Orbit-union superset G of I* (and H).
    Superset {
        map: String,
        #[arg(long, value_parser = parse_set)]
        istar: PointSet,
        #[arg(long, value_parser = parse_set)]
        h: Option<PointSet>,
    },
    /// Existence and sample values of (G, u) preserved up to one removed point.
    Solve(SolveArgs),
    /// Run the theorem suite.
    Verify(VerifyArgs),
    /// Functional graph in DOT format.
    ExportDot {
        map: String,
        #[arg(long)]
        window: Option<u64>,
    },
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("target").required(true))]
#[command(group = clap::ArgGroup::new("kind").required(true))]
pub struct QiArgs {
    pub map: String,
    #[arg(long, group = "target", value_parser = parse_set)]
    pub set: Option<PointSet>,
    #[arg(long, group = "target", num_args = 2, value_names = ["LO", "HI"])]
    pub interval: Option<Vec<Point>>,
    #[arg(long)]
    pub k: u64,
    #[arg(long, group = "kind")]
    pub internal: bool,
    #[arg(long, group = "kind")]
    pub external: bool,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("family").required(true))]
pub struct ClassifyArgs {
    pub map: String,
    #[arg(long, group = "family")]
    pub subsets: bool,
    #[arg(long, group = "family")]
    pub intervals: bool,
    #[arg(long, group = "family")]
    pub strict: bool,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("mode").required(true))]
pub struct SolveArgs {
    pub map: String,
    #[arg(long, group = "mode")]
    pub p1: bool,
    #[arg(long, group = "mode")]
    pub p2: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Largest finite domain enumerated.
    #[arg(long, default_value_t = 5)]
    pub n: u64,
    #[arg(long)]
    pub window: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Run only these theorem ids (repeatable).
    #[arg(long = "theorem")]
    pub theorems: Vec<String>,
    #[arg(long)]
    pub mutant: Option<String>,
    /// Print the full JSON report.
    #[arg(long)]
    pub json: bool,
}

fn parse_set(s: &str) -> Result<PointSet, String> {
    let s = s.trim();
    if s.starts_with('{') && s.contains(':') {
        return PointSet::parse(s).map_err(|e| e.to_string());
    }
    let body = s.trim_start_matches(['{', '[']).trim_end_matches(['}', ']']);
    body.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<Point>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(PointSet::new)
}

/// A named map, inline JSON, or a path to a JSON file.
pub fn load_map(arg: &str) -> Result<SelfMap, String> {
    if let Some(m) = oracle::named_map(arg) {
        return Ok(m);
    }
    let text = if arg.trim_start().starts_with('{') {
        arg.as_bytes().to_vec()
    } else {
        std::fs::read(arg).map_err(|e| format!("cannot read `{arg}`: {e}"))?
    };
    parse_map(&text).map_err(|e| e.to_string())
}

fn window_default(flag: Option<u64>, fallback: u64) -> Result<u64, String> {
    if let Some(w) = flag {
        return Ok(w);
    }
    match std::env::var(WINDOW_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| format!("{WINDOW_ENV}=`{v}`: {e}")),
        Err(_) => Ok(fallback),
    }
}

/// Exit code and output for one invocation; code 2 means the output is a diagnostic.
pub fn run_cli<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            return (code, e.to_string());
        }
    };
    match execute(cli.command) {
        Ok((ok, out)) => (if ok { 0 } else { 1 }, out),
        Err(msg) => (2, format!("error: {msg}\n")),
    }
}

type Outcome = Result<(bool, String), String>;

fn execute(cmd: Command) -> Outcome {
    match cmd {
        Command::Orbit { map, x } => {
            let m = load_map(&map)?;
            let o = orbit::orbit(&m, x).map_err(|e| e.to_string())?;
            Ok((true, format!("{}\n", serde_json::to_string(&o).unwrap())))
        }
        Command::Qi(a) => qi(a),
        Command::Classify(a) => classify(a),
        Command::Superset { map, istar, h } => superset(&map, &istar, &h.unwrap_or_default()),
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::ExportDot { map, window } => {
            let m = load_map(&map)?;
            Ok((true, export_dot(&m, window_default(window, 20)?)))
        }
    }
}

fn qi(a: QiArgs) -> Outcome {
    let m = load_map(&a.map)?;
    let lambda = match (&a.set, &a.interval) {
        (Some(s), _) => s.clone(),
        (None, Some(v)) => Interval::new(v[0], v[1]).map_err(|e| e.to_string())?.to_set(),
        (None, None) => unreachable!("clap requires a target"),
    };
    let r = if a.internal {
        internal_quasi_invariant(&m, &lambda, a.k)
    } else {
        external_quasi_invariant(&m, &lambda, a.k)
    }
    .map_err(|e| e.to_string())?;
    let mut out = format!("holds: {}\n", r.holds);
    match &r.witness {
        Some(w) if a.internal => writeln!(out, "P: {w}").unwrap(),
        Some(w) => writeln!(out, "excess: {w}").unwrap(),
        None => {}
    }
    Ok((r.holds, out))
}

fn classify(a: ClassifyArgs) -> Outcome {
    let m = load_map(&a.map)?;
    let mut out = String::new();
    if a.subsets {
        let Some((cl, sel)) = classify_subsets_1qi(&m).map_err(|e| e.to_string())? else {
            return Ok((false, "present: false\n".into()));
        };
        writeln!(out, "present: true").unwrap();
        writeln!(out, "case: {}", serde_json::to_string(&cl).unwrap()).unwrap();
        let top = m.domain_size().map_or(3, |n| n.min(4) - 1);
        for s in psolver::small_subsets(top, 3) {
            writeln!(out, "w({s}) = {}", sel.select(&s).unwrap()).unwrap();
        }
    } else if a.intervals {
        let Some(cl) = classify_intervals_1qi(&m).map_err(|e| e.to_string())? else {
            return Ok((false, "present: false\n".into()));
        };
        writeln!(out, "present: true").unwrap();
        writeln!(out, "case: {}", serde_json::to_string(&cl).unwrap()).unwrap();
        for iv in sample_intervals() {
            writeln!(out, "w({iv}) = {}", cl.select(iv)).unwrap();
        }
    } else {
        let Some(form) = classify_strict_intervals_1qi(&m).map_err(|e| e.to_string())? else {
            return Ok((false, "present: false\n".into()));
        };
        writeln!(out, "present: true").unwrap();
        writeln!(out, "form: {}", serde_json::to_string(&form).unwrap()).unwrap();
        for iv in sample_intervals() {
            writeln!(out, "w({iv}) = {}", strict_select(form, iv)).unwrap();
        }
    }
    Ok((true, out))
}

fn sample_intervals() -> Vec<Interval> {
    [(0, 0), (0, 3), (1, 4), (2, 6), (5, 9)]
        .into_iter()
        .map(|(a, b)| Interval::new(a, b).unwrap())
        .collect()
}

fn superset(map: &str, istar: &PointSet, h: &PointSet) -> Outcome {
    let m = load_map(map)?;
    match build_g_orbit_union(&m, istar, h) {
        Ok(g) => {
            let closed = check_superset_closure(&m, istar, &g).map_err(|e| e.to_string())?;
            Ok((true, format!("G: {g}\nclosed: {closed}\n")))
        }
        Err(SupersetError::InfiniteOrbit(x)) => {
            Ok((false, format!("G: none\nreason: orbit of {x} is infinite\n")))
        }
        Err(e) => Err(e.to_string()),
    }
}

fn solve(a: SolveArgs) -> Outcome {
    let m = load_map(&a.map)?;
    let sol: Option<PSolution> = if a.p1 {
        psolver::solve_p1(&m)
    } else {
        psolver::solve_p2(&m).map_err(|e| e.to_string())?
    };
    let Some(sol) = sol else {
        return Ok((false, "present: false\n".into()));
    };
    let mut out = String::from("present: true\n");
    writeln!(out, "construction: {}", serde_json::to_string(&sol.construction).unwrap()).unwrap();
    let samples = [vec![0], vec![1], vec![0, 2], vec![1, 4], vec![2, 5], vec![0, 3, 6]];
    for s in samples {
        let istar = PointSet::new(s);
        if m.check_set(&istar).is_err() {
            continue;
        }
        match sol.pair(&istar) {
            Ok((g, u)) => writeln!(out, "I*={istar} G={g} u={u}").unwrap(),
            Err(e) => writeln!(out, "I*={istar} error: {e}").unwrap(),
        }
    }
    Ok((true, out))
}

fn verify(a: VerifyArgs) -> Outcome {
    let mutant = a
        .mutant
        .as_deref()
        .map(str::parse::<Mutant>)
        .transpose()
        .map_err(|e| e.to_string())?;
    let cfg = SuiteConfig {
        theorems: (!a.theorems.is_empty()).then_some(a.theorems),
        max_n: a.n,
        window: window_default(a.window, 200)?,
        samples: a.samples,
        seed: a.seed,
        mutant,
        ..SuiteConfig::default()
    };
    let report = oracle::run_theorem_suite(&cfg).map_err(|e| e.to_string())?;
    let mut out = if a.json {
        report.to_json() + "\n"
    } else {
        report.summary_lines().join("\n") + "\n"
    };
    if !a.json {
        writeln!(out, "passed: {}", report.passed()).unwrap();
    }
    Ok((report.passed(), out))
}

/// Nodes are domain elements; on ℕ only `[0, window]` and their images appear,
/// and edges from the shift rule carry the shift as a label.
pub fn export_dot(map: &SelfMap, window: u64) -> String {
    let mut out = String::from("digraph phi {\n");
    let (top, tail_from) = match map {
        SelfMap::Finite(t) => (t.size() - 1, None),
        SelfMap::Nat(d) => (window, Some(d.prefix_len())),
    };
    for x in 0..=top {
        let y = map.eval(x).expect("point in domain");
        match (map.as_nat(), tail_from) {
            (Some(d), Some(n)) if x >= n => {
                writeln!(out, "  {x} -> {y} [label=\"{:+}\"];", d.shift_at(x)).unwrap()
            }
            _ => writeln!(out, "  {x} -> {y};").unwrap(),
        }
    }
    out.push_str("}\n");
    out
}
