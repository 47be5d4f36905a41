//! Command-line front end. [`run`] takes the argument list and output
//! streams explicitly so the whole surface can be driven from tests.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dv::{DvState, DEFAULT_INFINITY};
use crate::error::Error;
use crate::experiment::{
    emit_plot_series, render_summary, render_table, run_comparison, run_comparison_on, verify_claims, Engine,
    ExperimentConfig,
};
use crate::fitness::{build_spanning_tree, select_route, RouteOutcome, RouteRequest, Weights};
use crate::topology::{generate_topology, GenParams, NodeId, Topology};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const MAX_NODES: usize = 1024;

#[derive(Debug, Parser)]
#[command(name = "qosroute", version, about = "Compare distance-vector and QoS fitness routing on seeded topologies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run both engines over paired queries and check the routing claims.
    Compare(CompareArgs),
    /// Fail a link under naive distance vector and print the metric per round.
    DemoCountToInfinity(DemoArgs),
    /// Write the canonical topology file.
    GenTopology(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

/// `MIN:MAX`
#[derive(Debug, Clone, Copy, PartialEq)]
struct Range(f64, f64);

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected MIN:MAX, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
        Ok(Range(parse(lo)?, parse(hi)?))
    }
}

/// `A:B` node pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pair(NodeId, NodeId);

impl FromStr for Pair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected SRC:DST, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<NodeId>().map_err(|e| format!("`{v}`: {e}"));
        Ok(Pair(parse(a)?, parse(b)?))
    }
}

fn parse_weights(s: &str) -> Result<Weights, String> {
    let parts: Vec<f64> =
        s.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"))).collect::<Result<_, _>>()?;
    match parts[..] {
        [d, j, l] => Weights::new(d, j, l).map_err(|e| e.to_string()),
        _ => Err(format!("expected WD,WJ,WL, got `{s}`")),
    }
}

fn parse_nodes(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
    if (1..=MAX_NODES).contains(&n) {
        Ok(n)
    } else {
        Err(format!("node count must be within 1..={MAX_NODES}, got {n}"))
    }
}

#[derive(Debug, Args)]
struct TopologyArgs {
    #[arg(long, default_value_t = 64, value_parser = parse_nodes)]
    nodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "edge-prob", default_value_t = 0.15)]
    edge_prob: f64,
    #[arg(long, value_name = "MIN:MAX", default_value = "1:6.25")]
    bw: Range,
    #[arg(long, value_name = "MIN:MAX", default_value = "1:20")]
    delay: Range,
    #[arg(long, value_name = "MIN:MAX", default_value = "0:5")]
    jitter: Range,
    #[arg(long, value_name = "MIN:MAX", default_value = "0:0.05")]
    loss: Range,
    /// Replay a topology file instead of generating one.
    #[arg(long, value_name = "FILE")]
    topology: Option<PathBuf>,
}

impl TopologyArgs {
    fn gen_params(&self) -> GenParams {
        GenParams {
            edge_prob: self.edge_prob,
            bandwidth_range: (self.bw.0, self.bw.1),
            delay_range: (self.delay.0, self.delay.1),
            jitter_range: (self.jitter.0, self.jitter.1),
            loss_range: (self.loss.0, self.loss.1),
        }
    }

    fn load(&self) -> Result<Option<Topology>, Failure> {
        let Some(path) = &self.topology else { return Ok(None) };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let t = Topology::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        if t.node_count() > MAX_NODES {
            return Err(Failure::Usage(format!("{}: more than {MAX_NODES} nodes", path.display())));
        }
        Ok(Some(t))
    }

    fn topology(&self) -> Result<Topology, Failure> {
        match self.load()? {
            Some(t) => Ok(t),
            None => Ok(generate_topology(self.nodes, &self.gen_params(), self.seed)?),
        }
    }
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    topo: TopologyArgs,
    #[arg(long, default_value_t = 20)]
    queries: usize,
    /// Explicit query, repeatable; overrides --queries.
    #[arg(long = "query", value_name = "SRC:DST")]
    query: Vec<Pair>,
    /// Bandwidth every route link must carry, in Mbps.
    #[arg(long, default_value_t = 5.0)]
    demand: f64,
    #[arg(long, value_name = "WD,WJ,WL", default_value = "1,1,1", value_parser = parse_weights)]
    weights: Weights,
    #[arg(long, default_value_t = DEFAULT_INFINITY)]
    infinity: u32,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DemoArgs {
    /// Topology file; defaults to the line 0-1-2.
    #[arg(long, value_name = "FILE")]
    topology: Option<PathBuf>,
    /// Link to fail.
    #[arg(long, value_name = "A:B", default_value = "1:2")]
    fail: Pair,
    #[arg(long, default_value_t = 0)]
    probe: NodeId,
    #[arg(long, default_value_t = 2)]
    dest: NodeId,
    #[arg(long, default_value_t = DEFAULT_INFINITY)]
    infinity: u32,
    #[arg(long = "max-rounds", default_value_t = 100)]
    max_rounds: usize,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    topo: TopologyArgs,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Violations(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// Runs one invocation and returns its exit code: 0 on success, 1 when the
/// comparison found claim violations, 2 on bad arguments or input.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return code;
        }
    };

    let result = match cli.command {
        Command::Compare(args) => compare(&args),
        Command::DemoCountToInfinity(args) => demo(&args, stderr),
        Command::GenTopology(args) => gen(&args),
    };

    let (output, out_path, failure) = match result {
        Ok((text, path)) => (text, path, None),
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_USAGE;
        }
        Err(Failure::Violations(text)) => (text, None, Some(EXIT_VIOLATIONS)),
    };

    match out_path {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &output) {
                let _ = writeln!(stderr, "error: {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
        None => {
            let _ = stdout.write_all(output.as_bytes());
        }
    }
    if let Some(code) = failure {
        let _ = writeln!(stderr, "claim violations found");
        return code;
    }
    EXIT_OK
}

type Output = Result<(String, Option<PathBuf>), Failure>;

fn compare(args: &CompareArgs) -> Output {
    let cfg = ExperimentConfig {
        n: args.topo.nodes,
        seed: args.topo.seed,
        gen: args.topo.gen_params(),
        query_count: args.queries,
        explicit_queries: (!args.query.is_empty()).then(|| args.query.iter().map(|p| (p.0, p.1)).collect()),
        demand: args.demand,
        weights: args.weights,
        infinity_metric: args.infinity,
    };
    let (report, topology) = match args.topo.load()? {
        Some(t) => (run_comparison_on(&cfg, &t)?, t),
        None => (run_comparison(&cfg)?, cfg.topology()?),
    };
    debug_assert_eq!(verify_claims(&report, &topology), report.summary.violations);

    let text = match args.format {
        Format::Table => format!(
            "{}\n{}\n{}",
            render_table(&report, Engine::Dv),
            render_table(&report, Engine::Ff),
            render_summary(&report)
        ),
        Format::Csv => emit_plot_series(&report),
        Format::Json => report.to_json() + "\n",
    };
    if report.summary.violations.is_empty() {
        Ok((text, args.out.clone()))
    } else {
        Err(Failure::Violations(text))
    }
}

fn demo(args: &DemoArgs, stderr: &mut dyn Write) -> Output {
    let topology = match &args.topology {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            Topology::parse(&text)?
        }
        None => Topology::from_pairs(3, &[(0, 1), (1, 2)])?,
    };
    let rounds = topology.node_count() + 1;
    let (state, _) = DvState::init(&topology, args.infinity)?.converge(rounds)?;
    let trace = state.fail_link_and_trace(args.fail.0, args.fail.1, args.probe, args.dest, args.max_rounds)?;

    // contrast: one bounded fitness search on the failed topology
    let failed = topology.remove_link(args.fail.0, args.fail.1)?;
    let req = RouteRequest { src: args.probe, dst: args.dest, demand: 0.0, weights: Weights::default() };
    let outcome = select_route(&failed, &req)?;
    let tree = build_spanning_tree(&failed, args.probe, &req.weights)?;
    let verdict = match outcome {
        RouteOutcome::Route(r) => format!("route {} in {} hops", crate::experiment::format_path(&r.path), r.hops),
        RouteOutcome::NoSufficientBandwidth => "no sufficient bandwidth".to_string(),
        RouteOutcome::Unreachable => "unreachable".to_string(),
    };
    let _ = writeln!(
        stderr,
        "fitness search from {} to {}: {verdict} after {} settlements",
        args.probe,
        args.dest,
        tree.settlements()
    );
    Ok((trace.to_csv(), args.out.clone()))
}

fn gen(args: &GenArgs) -> Output {
    Ok((args.topo.topology()?.to_canonical_string(), args.out.clone()))
}
