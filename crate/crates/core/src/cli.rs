//! Command-line experiment runner.
//!
//! Exit codes: 0 when every assertion passes, 1 when a mathematical
//! assertion fails, 2 on input errors.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::augmented::{self, AugFixture};
use crate::bk::{self, Event, PairLaw};
use crate::error::{input, Error, Result};
use crate::lift::{self, FibreMap, FibreMapFile};
use crate::measure::{FiniteMeasure, MeasureFile};
use crate::percolation::{self, graph, Graph, Mode};
use crate::rational::{self, Rational};
use crate::{counterexamples, dominates, is_monotone_coupling};

#[derive(Parser, Debug)]
#[command(name = "stodom", version, about = "Exact domination, lifting, percolation and BK experiments")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads; never changes a reported value.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON object whose keys mirror the flags; `"command"` may name the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print wall time to stderr.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Built-in fixtures.
    Verify(VerifyArgs),
    /// Build and check the column-by-column coupling for an instance file.
    Coupling(CouplingArgs),
    /// All deterministic section strategies on small fibre shapes.
    LakonSweep(LakonArgs),
    /// Reach probabilities on fibration pairs, exact and Monte Carlo.
    PercoCompare(PercoArgs),
    /// Reach probability on one graph.
    Reach(ReachArgs),
    /// Build, audit and dump a cell decomposition.
    Cells(CellsArgs),
    /// Certify the largest parameter shift per cell.
    Delta(DeltaArgs),
    /// Plain against augmented reach with shared samples.
    AugCompare(AugArgs),
    /// BK checks, single or exhaustive.
    Bk(BkArgs),
    /// Reach-threshold proxy on `G x C_n` for several `n`; no assertion.
    Cycles(CyclesArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Verify(_) => "verify",
            Command::Coupling(_) => "coupling",
            Command::LakonSweep(_) => "lakon-sweep",
            Command::PercoCompare(_) => "perco-compare",
            Command::Reach(_) => "reach",
            Command::Cells(_) => "cells",
            Command::Delta(_) => "delta",
            Command::AugCompare(_) => "aug-compare",
            Command::Bk(_) => "bk",
            Command::Cycles(_) => "cycles",
        }
    }
}

const COMMANDS: [&str; 10] =
    ["verify", "coupling", "lakon-sweep", "perco-compare", "reach", "cells", "delta", "aug-compare", "bk", "cycles"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyTarget {
    All,
    /// The three-fibre counterexample and the two-bit label remark.
    Counterexamples,
    /// The stronger lifting rule that fails.
    Multilift,
    /// Random search for counterexamples with equal marginals.
    Search,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(value_enum, default_value_t = VerifyTarget::All)]
    pub target: VerifyTarget,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    /// Fibre sizes for the search.
    #[arg(long, default_value = "2,2")]
    pub fibres: String,
    #[arg(long, default_value_t = 4)]
    pub rho_atoms: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct CouplingArgs {
    /// JSON `{"mu": measure, "rho": measure, "fibre_map": map}`.
    #[arg(long)]
    pub instance: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct LakonArgs {
    /// Fibre shapes, `;`-separated lists of sizes.
    #[arg(long, default_value = "1;2;3;1,1;1,2;1,3;2,2;2,3;3,3")]
    pub fibres: String,
    #[arg(long, default_value = "1/4,1/2,3/4")]
    pub p: String,
    #[arg(long, default_value_t = 1 << 16)]
    pub strategy_cap: u64,
    /// Run the pair-encoded sweep instead (every fibre needs at least two points).
    #[arg(long)]
    pub multilift: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PercoSet {
    All,
    CyclePendant,
    TwoFloorBox,
    BoxProjection,
}

#[derive(Args, Debug, Serialize)]
pub struct PercoArgs {
    #[arg(long, value_enum, default_value_t = PercoSet::All)]
    pub fixture: PercoSet,
    #[arg(long, default_value = "1,2")]
    pub radii: String,
    #[arg(long, default_value = "1/10,1/5,3/10,2/5,1/2,3/5,7/10,4/5,9/10")]
    pub p: String,
    #[arg(long, default_value_t = percolation::DEFAULT_EXACT_CAP)]
    pub cap: usize,
    /// Also run Monte Carlo at this radius on enlarged fixtures.
    #[arg(long)]
    pub mc_radius: Option<usize>,
    #[arg(long, default_value = "0.3,0.5,0.7")]
    pub mc_p: String,
    #[arg(long, value_enum, default_value_t = Mode::Bond)]
    pub mode: Mode,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Allowed deficit in combined standard errors.
    #[arg(long, default_value_t = 3.0)]
    pub k: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    Mc,
    Pc,
}

#[derive(Args, Debug, Serialize)]
pub struct ReachArgs {
    /// `path:N`, `ray:N`, `cycle:N`, `box:AxB[:periodic]`, `ladder:N`, `cross:N`,
    /// `product(G,H)` or `file:PATH`.
    #[arg(long)]
    pub graph: String,
    #[arg(long, default_value_t = 0)]
    pub probe: usize,
    #[arg(long)]
    pub radius: usize,
    #[arg(long, value_enum, default_value_t = Mode::Bond)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    pub method: Method,
    #[arg(long, default_value = "1/2")]
    pub p: String,
    #[arg(long, default_value_t = percolation::DEFAULT_EXACT_CAP)]
    pub cap: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.01)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AugSet {
    CornerGrid,
    Ring,
    Torus,
}

#[derive(Args, Debug, Serialize)]
pub struct CellsArgs {
    /// Graph spec; overrides `--fixture`.
    #[arg(long)]
    pub graph: Option<String>,
    #[arg(long, value_enum, default_value_t = AugSet::Torus)]
    pub fixture: AugSet,
    #[arg(long, default_value_t = 6)]
    pub size: usize,
    #[arg(long, default_value_t = 1)]
    pub r0: usize,
    /// Write the decomposition as JSON.
    #[arg(long)]
    pub dump_cells: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct DeltaArgs {
    #[arg(long, value_enum, default_value_t = AugSet::CornerGrid)]
    pub fixture: AugSet,
    #[arg(long, default_value_t = 9)]
    pub size: usize,
    /// Cells to certify (default all).
    #[arg(long)]
    pub cells: Option<String>,
    #[arg(long, default_value = "1/4,1/2,3/4")]
    pub p: String,
    #[arg(long, default_value = "1/4,1/2,1")]
    pub s: String,
    /// Smallest grid step is `2^-k`.
    #[arg(long, default_value_t = 64)]
    pub min_resolution_log2: u32,
    #[arg(long, default_value_t = augmented::DEFAULT_RELATION_CAP)]
    pub cap: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct AugArgs {
    #[arg(long, value_enum, default_value_t = AugSet::Torus)]
    pub fixture: AugSet,
    #[arg(long, default_value_t = 5)]
    pub size: usize,
    #[arg(long, default_value = "0.6,0.7,0.75,0.8,0.85")]
    pub p: String,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long, default_value_t = 10)]
    pub radius: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    Independent,
    FibreSelection,
}

#[derive(Args, Debug, Serialize)]
pub struct BkArgs {
    /// Every ordered pair of increasing events on this many coordinates.
    #[arg(long)]
    pub exhaustive: Option<usize>,
    /// Coordinates of `--e1`/`--e2`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Hex membership mask.
    #[arg(long)]
    pub e1: Option<String>,
    #[arg(long)]
    pub e2: Option<String>,
    /// Comma-separated min-terms such as `10,01`.
    #[arg(long)]
    pub e1_terms: Option<String>,
    #[arg(long)]
    pub e2_terms: Option<String>,
    /// One value for every coordinate, or one per coordinate.
    #[arg(long, default_value = "1/2")]
    pub p: String,
    /// Also compare against the lifted product of this pair law.
    #[arg(long, value_enum)]
    pub pair_law: Option<PairKind>,
    /// One and two edge-disjoint arms from `--probe` on `--graph`.
    #[arg(long)]
    pub two_arm: bool,
    #[arg(long, default_value = "cross:2")]
    pub graph: String,
    #[arg(long, default_value_t = 0)]
    pub probe: usize,
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    #[arg(long, default_value_t = bk::MAX_COORDINATES)]
    pub cap: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct CyclesArgs {
    #[arg(long, default_value = "path:4")]
    pub base: String,
    #[arg(long, default_value = "3,4,5,6,8")]
    pub n: String,
    #[arg(long, default_value_t = 6)]
    pub radius: usize,
    #[arg(long, value_enum, default_value_t = Mode::Bond)]
    pub mode: Mode,
    #[arg(long, default_value_t = 2000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.02)]
    pub tolerance: f64,
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

struct Output {
    result: Value,
    pass: bool,
    table: Option<Table>,
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Output {
    fn new(result: impl Serialize, pass: bool) -> Result<Self> {
        Ok(Output { result: serde_json::to_value(result)?, pass, table: None })
    }

    fn with_table(mut self, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        self.table = Some(Table { header, rows });
        self
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Assumption { .. } | Error::Lift { .. } | Error::Fixture(_) | Error::Internal(_) => 1,
        _ => 2,
    }
}

/// Parses `argv` (including the program name), runs the command and renders the report.
pub fn run<I, S>(argv: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let argv = match apply_config(argv) {
        Ok(a) => a,
        Err(e) => return failure(&e),
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    Outcome { stdout: text, stderr: String::new(), code: 0 }
                }
                _ => Outcome { stdout: String::new(), stderr: text, code: 2 },
            };
        }
    };
    let start = Instant::now();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return failure(&Error::Input(format!("cannot start workers: {e}"))),
    };
    let output = pool.install(|| dispatch(&cli.command));
    let mut stderr = String::new();
    let mut code = 0;
    let text = match output.and_then(|o| render(&cli, o)) {
        Ok((text, pass)) => {
            if !pass {
                code = 1;
            }
            text
        }
        Err(e) => return failure(&e),
    };
    if cli.timing {
        stderr.push_str(&format!("wall time: {:.3} s\n", start.elapsed().as_secs_f64()));
    }
    let stdout = match &cli.out {
        Some(path) => match std::fs::write(path, &text) {
            Ok(()) => String::new(),
            Err(e) => return failure(&Error::Io(e)),
        },
        None => text,
    };
    Outcome { stdout, stderr, code }
}

fn failure(e: &Error) -> Outcome {
    Outcome { stdout: String::new(), stderr: format!("error: {e}\n"), code: exit_code(e) }
}

fn render(cli: &Cli, o: Output) -> Result<(String, bool)> {
    match cli.format {
        Format::Json => {
            let report = json!({
                "command": cli.command.name(),
                "args": serde_json::to_value(&cli.command)?,
                "pass": o.pass,
                "result": o.result,
            });
            Ok((serde_json::to_string_pretty(&report)? + "\n", o.pass))
        }
        Format::Csv => {
            let Some(t) = o.table else {
                return input(format!("{} has no tabular output", cli.command.name()));
            };
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::Internal(format!("csv: {e}"));
            w.write_record(&t.header).map_err(csv_err)?;
            for row in &t.rows {
                w.write_record(row).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Internal(format!("csv: {e}")))?;
            Ok((String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))?, o.pass))
        }
    }
}

/// Splices flags from a `--config` JSON file right after the subcommand,
/// so later command-line flags override them.
fn apply_config(argv: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or_else(|| Error::Input("--config needs a path".into()))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = std::fs::read_to_string(&path)?;
    let Value::Object(map) = serde_json::from_str::<Value>(&text)? else {
        return input("config must be a JSON object");
    };
    let mut command = None;
    let mut flags = Vec::new();
    for (k, v) in map {
        if k == "command" {
            command = Some(v.as_str().ok_or_else(|| Error::Input("\"command\" must be a string".into()))?.to_string());
            continue;
        }
        let flag = format!("--{}", k.replace('_', "-"));
        match v {
            Value::Bool(true) => flags.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::String(s) => flags.extend([flag, s]),
            Value::Number(n) => flags.extend([flag, n.to_string()]),
            Value::Array(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|x| match x {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                flags.extend([flag, parts.join(",")]);
            }
            Value::Object(_) => return input(format!("config key {k:?} has an object value")),
        }
    }
    let position = rest.iter().skip(1).position(|a| COMMANDS.contains(&a.as_str())).map(|i| i + 1);
    match (position, command) {
        (Some(i), c) => {
            if c.as_ref().is_some_and(|c| c != &rest[i]) {
                return input(format!("config names command {:?} but {:?} was given", c.unwrap(), rest[i]));
            }
            let tail = rest.split_off(i + 1);
            rest.extend(flags);
            rest.extend(tail);
        }
        (None, Some(c)) => {
            rest.push(c);
            rest.extend(flags);
        }
        (None, None) => return input("no subcommand given on the command line or in the config"),
    }
    Ok(rest)
}

fn seed(s: Option<u64>) -> Result<u64> {
    s.ok_or_else(|| Error::Input("this command is randomized and needs an explicit --seed".into()))
}

fn split(s: &str, sep: char) -> impl Iterator<Item = &str> {
    s.split(sep).map(str::trim).filter(|x| !x.is_empty())
}

pub fn parse_rationals(s: &str) -> Result<Vec<Rational>> {
    let v: Vec<Rational> = split(s, ',').map(rational::parse_probability).collect::<Result<_>>()?;
    if v.is_empty() {
        return input("empty parameter list");
    }
    Ok(v)
}

pub fn parse_floats(s: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = split(s, ',')
        .map(|x| match x.parse::<f64>() {
            Ok(f) if (0.0..=1.0).contains(&f) => Ok(f),
            _ => rational::parse_probability(x).map(|r| rational::to_f64(&r)),
        })
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return input("empty parameter list");
    }
    Ok(v)
}

pub fn parse_usizes(s: &str) -> Result<Vec<usize>> {
    split(s, ',').map(|x| x.parse().map_err(|_| Error::Input(format!("bad integer {x:?}")))).collect()
}

fn parse_shapes(s: &str) -> Result<Vec<Vec<usize>>> {
    split(s, ';').map(parse_usizes).collect()
}

/// Builds a graph from a spec string; see `ReachArgs::graph`.
pub fn parse_graph(spec: &str) -> Result<Graph> {
    let spec = spec.trim();
    if let Some(inner) = spec.strip_prefix("product(").and_then(|s| s.strip_suffix(')')) {
        let mut depth = 0i32;
        let cut = inner.char_indices().find(|&(_, c)| {
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                _ => {}
            }
            c == ',' && depth == 0
        });
        let Some((i, _)) = cut else {
            return input(format!("product needs two factors: {spec:?}"));
        };
        return Ok(graph::product(&parse_graph(&inner[..i])?, &parse_graph(&inner[i + 1..])?));
    }
    if let Some(path) = spec.strip_prefix("file:") {
        return Graph::parse(&std::fs::read_to_string(path)?);
    }
    let (kind, arg) = spec.split_once(':').ok_or_else(|| Error::Input(format!("bad graph spec {spec:?}")))?;
    let num = |x: &str| x.parse::<usize>().map_err(|_| Error::Input(format!("bad size in {spec:?}")));
    match kind {
        "path" => Ok(graph::path(num(arg)?)),
        "ray" => Ok(graph::ray(num(arg)?)),
        "cycle" => graph::cycle(num(arg)?),
        "complete" => Ok(graph::complete(num(arg)?)),
        "star" => Ok(graph::star(num(arg)?)),
        "ladder" => Ok(graph::ladder(num(arg)?)),
        "cross" => Ok(bk::cross(num(arg)?)),
        "box" | "torus" => {
            let (dims, flag) = match arg.split_once(':') {
                Some((d, f)) => (d, Some(f)),
                None => (arg, None),
            };
            let periodic = match flag {
                None => kind == "torus",
                Some("periodic") => true,
                Some("open") => false,
                Some(f) => return input(format!("unknown boundary {f:?}")),
            };
            let dims: Vec<usize> = dims.split('x').map(num).collect::<Result<_>>()?;
            graph::box_lattice(&dims, periodic)
        }
        _ => input(format!("unknown graph kind {kind:?}")),
    }
}

fn aug_fixture(set: AugSet, size: usize) -> Result<AugFixture> {
    match set {
        AugSet::CornerGrid => Ok(augmented::corner_grid()),
        AugSet::Ring => augmented::ring(size),
        AugSet::Torus => augmented::torus(size),
    }
}

fn dispatch(cmd: &Command) -> Result<Output> {
    match cmd {
        Command::Verify(a) => verify(a),
        Command::Coupling(a) => coupling(a),
        Command::LakonSweep(a) => lakon(a),
        Command::PercoCompare(a) => perco(a),
        Command::Reach(a) => reach(a),
        Command::Cells(a) => cells(a),
        Command::Delta(a) => delta(a),
        Command::AugCompare(a) => aug(a),
        Command::Bk(a) => bk_cmd(a),
        Command::Cycles(a) => cycles(a),
    }
}

fn verify(a: &VerifyArgs) -> Result<Output> {
    let mut out = serde_json::Map::new();
    let mut pass = true;
    let all = a.target == VerifyTarget::All;
    if all || a.target == VerifyTarget::Counterexamples {
        out.insert("three_fibres".into(), serde_json::to_value(counterexamples::verify_section32()?)?);
        out.insert("nontotal_labels".into(), serde_json::to_value(counterexamples::verify_nontotal()?)?);
    }
    if all || a.target == VerifyTarget::Multilift {
        let r = lift::strengthened_counterexample(&rational::rat(1, 2))?;
        pass &= !r.dominated && r.site_marginal == r.expected_marginal;
        out.insert("strengthened_rule".into(), serde_json::to_value(r)?);
    }
    if a.target == VerifyTarget::Search {
        let bounds = counterexamples::SearchBounds { fibres: parse_usizes(&a.fibres)?, rho_atoms: a.rho_atoms };
        let r = counterexamples::counterexample_search(&bounds, a.trials, seed(a.seed)?)?;
        out.insert("search".into(), serde_json::to_value(r)?);
    }
    Output::new(Value::Object(out), pass)
}

#[derive(Deserialize)]
struct InstanceFile {
    mu: MeasureFile,
    rho: MeasureFile,
    fibre_map: FibreMapFile,
}

fn coupling(a: &CouplingArgs) -> Result<Output> {
    let inst: InstanceFile = serde_json::from_str(&std::fs::read_to_string(&a.instance)?)?;
    let mu = FiniteMeasure::from_file(&inst.mu)?;
    let rho = FiniteMeasure::from_file(&inst.rho)?;
    let pm = FibreMap::from_file(&inst.fibre_map)?;
    let c = lift::build_main_coupling(&mu, &rho, &pm)?;
    let monotone = is_monotone_coupling(&c, &mu, &rho);
    let dominated = dominates(&mu, &rho)?.holds();
    Output::new(json!({ "monotone": monotone, "dominated": dominated, "coupling": c.to_file() }), monotone && dominated)
}

fn lakon(a: &LakonArgs) -> Result<Output> {
    let shapes = parse_shapes(&a.fibres)?;
    let ps = parse_rationals(&a.p)?;
    if a.multilift {
        let r = lift::multilift_sweep(&shapes, &ps)?;
        let pass = r.all_ok;
        return Output::new(r, pass);
    }
    let r = lift::lakon_sweep(&shapes, &ps, a.strategy_cap)?;
    let pass = r.all_dominated;
    Output::new(r, pass)
}

fn perco(a: &PercoArgs) -> Result<Output> {
    let radii = parse_usizes(&a.radii)?;
    let ps = parse_rationals(&a.p)?;
    let pick = |name: &str| match a.fixture {
        PercoSet::All => true,
        PercoSet::CyclePendant => name == "cycle-pendant" || name == "cycle-cover",
        PercoSet::TwoFloorBox => name == "two-floor-box",
        PercoSet::BoxProjection => name == "box-projection",
    };
    let mut exact = Vec::new();
    for fx in percolation::exact_fixtures()?.iter().filter(|f| pick(f.name)) {
        exact.extend(percolation::compare_exact(fx, &radii, &ps, a.cap)?);
    }
    let mut mc = Vec::new();
    if let Some(r) = a.mc_radius {
        let s = seed(a.seed)?;
        let mc_p = parse_floats(&a.mc_p)?;
        for fx in percolation::mc_fixtures(r)?.iter().filter(|f| pick(f.name)) {
            mc.extend(percolation::compare_mc(fx, a.mode, r, &mc_p, a.trials, s, a.k)?);
        }
    }
    let pass = exact.iter().all(|r| r.holds) && mc.iter().all(|r| r.holds);
    let mut rows: Vec<Vec<String>> = exact
        .iter()
        .map(|r| {
            vec![
                "exact".into(),
                r.fixture.into(),
                r.model.into(),
                r.radius.to_string(),
                r.p.clone(),
                r.lifted.clone(),
                r.base.clone(),
                String::new(),
                String::new(),
                r.holds.to_string(),
            ]
        })
        .collect();
    rows.extend(mc.iter().map(|r| {
        vec![
            "mc".into(),
            r.fixture.into(),
            r.model.into(),
            r.radius.to_string(),
            r.p.to_string(),
            r.lifted.mean.to_string(),
            r.base.mean.to_string(),
            r.lifted.standard_error.to_string(),
            r.base.standard_error.to_string(),
            r.holds.to_string(),
        ]
    }));
    let header = vec!["method", "fixture", "model", "radius", "p", "lifted", "base", "lifted_se", "base_se", "holds"];
    Ok(Output::new(json!({ "exact": exact, "mc": mc }), pass)?.with_table(header, rows))
}

fn reach(a: &ReachArgs) -> Result<Output> {
    let g = parse_graph(&a.graph)?;
    if a.probe >= g.vertex_count() {
        return input(format!("probe {} is not a vertex", a.probe));
    }
    let header = vec!["p", "value", "standard_error"];
    match a.method {
        Method::Exact => {
            let poly = percolation::reach_polynomial(&g, a.mode, a.probe, a.radius, a.cap)?;
            let ps = parse_rationals(&a.p)?;
            let vals: Vec<(String, String)> = ps.iter().map(|p| (rational::format(p), rational::format(&poly.eval(p)))).collect();
            let rows = vals.iter().map(|(p, v)| vec![p.clone(), v.clone(), String::new()]).collect();
            Ok(Output::new(json!({ "inner_objects": poly.inner_objects(), "values": vals }), true)?.with_table(header, rows))
        }
        Method::Mc => {
            let s = seed(a.seed)?;
            let mut est = Vec::new();
            for p in parse_floats(&a.p)? {
                est.push((p, percolation::reach_mc(&g, a.mode, p, a.probe, a.radius, a.trials, s)?));
            }
            let rows =
                est.iter().map(|(p, e)| vec![p.to_string(), e.mean.to_string(), e.standard_error.to_string()]).collect();
            Ok(Output::new(json!({ "estimates": est }), true)?.with_table(header, rows))
        }
        Method::Pc => {
            let s = seed(a.seed)?;
            let r = percolation::estimate_pc(&g, a.mode, a.probe, a.radius, a.trials, s, a.tolerance, a.threshold)?;
            let rows =
                r.evaluations.iter().map(|(p, e)| vec![p.to_string(), e.mean.to_string(), e.standard_error.to_string()]).collect();
            Ok(Output::new(r, true)?.with_table(header, rows))
        }
    }
}

fn cells(a: &CellsArgs) -> Result<Output> {
    let (name, cd, whitelist) = match &a.graph {
        Some(spec) => ("graph", augmented::build_cells(&parse_graph(spec)?, a.r0)?, Vec::new()),
        None => {
            let fx = aug_fixture(a.fixture, a.size)?;
            (fx.name, fx.cells, fx.whitelist)
        }
    };
    let violations = cd.audit();
    let unexpected: Vec<_> =
        violations.iter().filter(|v| v.cell.is_none_or(|c| !whitelist.contains(&c))).cloned().collect();
    if let Some(path) = &a.dump_cells {
        std::fs::write(path, serde_json::to_string_pretty(&cd.to_file())? + "\n")?;
    }
    let sizes: Vec<Value> = (0..cd.cell_count())
        .map(|c| {
            json!({
                "cell": c,
                "centre": cd.centres[c],
                "vertices": cd.cells[c].len(),
                "boundary": cd.boundaries[c].len(),
                "edges": cd.cell_edges[c].len(),
            })
        })
        .collect();
    let pass = unexpected.is_empty();
    Output::new(
        json!({
            "fixture": name,
            "r0": cd.r0, "r": cd.r, "R": cd.big_r,
            "cells": sizes,
            "violations": violations,
            "whitelisted_cells": whitelist,
        }),
        pass,
    )
}

fn delta(a: &DeltaArgs) -> Result<Output> {
    let fx = aug_fixture(a.fixture, a.size)?;
    let cells = a.cells.as_deref().map(parse_usizes).transpose()?;
    let min_res = Rational::new(1.into(), num_traits::pow(num_bigint::BigInt::from(2), a.min_resolution_log2 as usize));
    let r = augmented::certify_cells(&fx, cells.as_deref(), &parse_rationals(&a.p)?, &parse_rationals(&a.s)?, &min_res, a.cap)?;
    let pass = r.all_positive && r.all_zero_delta_dominated;
    let rows = r
        .rows
        .iter()
        .map(|row| {
            let d = &row.delta;
            vec![
                d.cell.to_string(),
                d.a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "),
                d.p.clone(),
                d.s.clone(),
                d.delta.clone(),
                d.alpha.clone(),
                row.zero_delta_dominated.to_string(),
            ]
        })
        .collect();
    let header = vec!["cell", "a", "p", "s", "delta", "alpha", "zero_delta_dominated"];
    Ok(Output::new(r, pass)?.with_table(header, rows))
}

fn aug(a: &AugArgs) -> Result<Output> {
    let fx = aug_fixture(a.fixture, a.size)?;
    let r = augmented::compare_pc_aug(&fx, &parse_floats(&a.p)?, a.s, a.radius, a.trials, seed(a.seed)?)?;
    let pass = r.coupled_monotone;
    let rows = r
        .rows
        .iter()
        .map(|row| {
            vec![
                row.p.to_string(),
                row.plain.mean.to_string(),
                row.plain.standard_error.to_string(),
                row.augmented.mean.to_string(),
                row.augmented.standard_error.to_string(),
                row.lifted.as_ref().map(|e| e.mean.to_string()).unwrap_or_default(),
                row.monotonicity_failures.to_string(),
            ]
        })
        .collect();
    let header = vec!["p", "plain", "plain_se", "augmented", "augmented_se", "lifted", "monotonicity_failures"];
    Ok(Output::new(r, pass)?.with_table(header, rows))
}

fn event_arg(n: usize, hex: &Option<String>, terms: &Option<String>, which: &str) -> Result<Event> {
    match (hex, terms) {
        (Some(h), None) => Event::from_hex(n, h),
        (None, Some(t)) => Event::from_min_terms(n, &split(t, ',').collect::<Vec<_>>()),
        _ => input(format!("give exactly one of --{which} and --{which}-terms")),
    }
}

fn bk_cmd(a: &BkArgs) -> Result<Output> {
    let ps = parse_rationals(&a.p)?;
    if let Some(n) = a.exhaustive {
        if ps.len() != 1 {
            return input("the exhaustive sweep takes a single p");
        }
        let r = bk::exhaustive_bk(n, &ps[0])?;
        let pass = r.holds;
        return Output::new(r, pass);
    }
    if a.two_arm {
        if ps.len() != 1 {
            return input("the two-arm check takes a single p");
        }
        let g = parse_graph(&a.graph)?;
        let r = bk::two_arm_check(&g, a.probe, a.radius, &ps[0], a.cap)?;
        let pass = r.holds;
        return Output::new(r, pass);
    }
    let n = a.n.ok_or_else(|| Error::Input("--n is required for a single check".into()))?;
    let e1 = event_arg(n, &a.e1, &a.e1_terms, "e1")?;
    let e2 = event_arg(n, &a.e2, &a.e2_terms, "e2")?;
    let p = match ps.len() {
        1 => vec![ps[0].clone(); n],
        k if k == n => ps,
        k => return input(format!("{k} parameters for {n} coordinates")),
    };
    let r = bk::check_bk(&e1, &e2, &p)?;
    let mut pass = r.holds;
    let prop = match a.pair_law {
        None => None,
        Some(kind) => {
            let laws = p
                .iter()
                .map(|q| match kind {
                    PairKind::Independent => PairLaw::independent(q),
                    PairKind::FibreSelection => Ok(PairLaw::fibre_selection()),
                })
                .collect::<Result<Vec<_>>>()?;
            let pr = bk::check_prop_bk(&e1, &e2, &p, &laws)?;
            pass &= pr.holds;
            Some(pr)
        }
    };
    Output::new(json!({ "e1": e1.to_hex(), "e2": e2.to_hex(), "bk": r, "pair_law": prop }), pass)
}

fn cycles(a: &CyclesArgs) -> Result<Output> {
    let base = parse_graph(&a.base)?;
    let s = seed(a.seed)?;
    let mut out = Vec::new();
    for n in parse_usizes(&a.n)? {
        let g = graph::product(&base, &graph::cycle(n)?);
        let r = percolation::estimate_pc(&g, a.mode, 0, a.radius, a.trials, s, a.tolerance, 0.5)?;
        out.push(json!({ "n": n, "lo": r.lo, "hi": r.hi }));
    }
    let rows = out.iter().map(|v| vec![v["n"].to_string(), v["lo"].to_string(), v["hi"].to_string()]).collect();
    Ok(Output::new(json!({ "radius": a.radius, "intervals": out }), true)?.with_table(vec!["n", "lo", "hi"], rows))
}
