//! Paired-query harness: both engines answer the same queries on the same
//! topology, the results are re-checked against BFS oracles, and the report
//! renders as text tables, plot-ready CSV, or JSON.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dv::{DvState, DEFAULT_INFINITY};
use crate::error::{Error, Result};
use crate::fitness::{select_route, RouteOutcome, RouteRequest, Weights};
use crate::rng::SplitMix64;
use crate::topology::{generate_topology_with, GenParams, NodeId, Topology};

pub const REFUSAL_TEXT: &str = "No sufficient bandwidth available";
pub const CSV_HEADER: &str = "query,src,dst,dv_hops,ff_hops,ff_status";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub seed: u64,
    pub gen: GenParams,
    pub query_count: usize,
    /// When present, replaces the `query_count` random pairs.
    pub explicit_queries: Option<Vec<(NodeId, NodeId)>>,
    pub demand: f64,
    pub weights: Weights,
    pub infinity_metric: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 64,
            seed: 0,
            gen: GenParams::default(),
            query_count: 20,
            explicit_queries: None,
            demand: 5.0,
            weights: Weights::default(),
            infinity_metric: DEFAULT_INFINITY,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyTopology);
        }
        if !(self.demand >= 0.0 && self.demand.is_finite()) {
            return Err(Error::Config(format!("demand must be a non-negative number, got {}", self.demand)));
        }
        if self.infinity_metric < 2 {
            return Err(Error::Config(format!("infinity metric must be at least 2, got {}", self.infinity_metric)));
        }
        self.weights.validate()?;
        self.gen.validate()?;
        for &(src, dst) in self.explicit_queries.iter().flatten() {
            for node in [src, dst] {
                if node >= self.n {
                    return Err(Error::Config(format!("query node {node} is outside 0..{}", self.n)));
                }
            }
        }
        Ok(())
    }

    /// The topology `run_comparison` generates for this config.
    pub fn topology(&self) -> Result<Topology> {
        generate_topology_with(self.n, &self.gen, &mut SplitMix64::new(self.seed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub src: NodeId,
    pub dst: NodeId,
    /// `None` when DV has no route.
    pub dv_hops: Option<usize>,
    /// Empty when DV has no route.
    pub dv_path: Vec<NodeId>,
    pub ff_outcome: RouteOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// Every link on a fitness route carries the demand.
    BandwidthAssurance,
    /// Both engines return simple paths over existing links.
    LoopFreedom,
    /// Fitness hops equal BFS hops on the pruned graph.
    MinHop,
    /// Fitness hops never exceed DV hops when DV's path carries the demand.
    HopDominance,
    /// Refusals and unreachables agree with BFS on the full and pruned graphs.
    RefusalSoundness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub row: usize,
    pub claim: Claim,
    pub detail: String,
}

/// Row categories. Wins, ties and losses only count rows where both engines
/// found a path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub ff_wins: usize,
    pub ties: usize,
    pub dv_wins: usize,
    pub refusals: usize,
    pub unreachable: usize,
    pub violations: Vec<Violation>,
}

impl Summary {
    pub fn total(&self) -> usize {
        self.ff_wins + self.ties + self.dv_wins + self.refusals + self.unreachable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub config: ExperimentConfig,
    /// FNV-1a of the canonical topology text, as 16 hex digits.
    pub fingerprint: String,
    pub rows: Vec<ComparisonRow>,
    pub summary: Summary,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Generates the topology from the config seed and compares both engines.
/// Random queries continue the generator's RNG stream.
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let mut rng = SplitMix64::new(cfg.seed);
    let topology = generate_topology_with(cfg.n, &cfg.gen, &mut rng)?;
    compare(cfg, &topology, &mut rng)
}

/// Compares both engines on a supplied topology. Random queries draw from a
/// fresh stream seeded with `cfg.seed`; `cfg.n` is taken from the topology.
pub fn run_comparison_on(cfg: &ExperimentConfig, topology: &Topology) -> Result<ComparisonReport> {
    let cfg = ExperimentConfig { n: topology.node_count(), ..cfg.clone() };
    cfg.validate()?;
    compare(&cfg, topology, &mut SplitMix64::new(cfg.seed))
}

fn draw_queries(n: usize, count: usize, rng: &mut SplitMix64) -> Vec<(NodeId, NodeId)> {
    (0..count)
        .map(|_| {
            if n == 1 {
                return (0, 0);
            }
            let src = rng.next_below(n as u64) as NodeId;
            let dst = rng.next_below(n as u64 - 1) as NodeId;
            (src, if dst >= src { dst + 1 } else { dst })
        })
        .collect()
}

fn compare(cfg: &ExperimentConfig, topology: &Topology, rng: &mut SplitMix64) -> Result<ComparisonReport> {
    let queries = match &cfg.explicit_queries {
        Some(q) => q.clone(),
        None => draw_queries(topology.node_count(), cfg.query_count, rng),
    };

    // DV tables hold every destination, so one convergence serves all queries.
    let rounds = topology.node_count().max(1) + 1;
    let (dv, _) = DvState::init(topology, cfg.infinity_metric)?.converge(rounds)?;

    let mut rows = Vec::with_capacity(queries.len());
    for (src, dst) in queries {
        let dv_path = dv.extract_path(src, dst)?.unwrap_or_default();
        let dv_hops = (!dv_path.is_empty()).then(|| dv_path.len() - 1);
        let req = RouteRequest { src, dst, demand: cfg.demand, weights: cfg.weights };
        let ff_outcome = select_route(topology, &req)?;
        rows.push(ComparisonRow { src, dst, dv_hops, dv_path, ff_outcome });
    }

    let mut report = ComparisonReport {
        config: cfg.clone(),
        fingerprint: format!("{:016x}", topology.fingerprint()),
        rows,
        summary: Summary::default(),
    };
    report.summary = summarize(&report.rows);
    report.summary.violations = verify_claims(&report, topology);
    Ok(report)
}

fn summarize(rows: &[ComparisonRow]) -> Summary {
    let mut s = Summary::default();
    for row in rows {
        match (&row.ff_outcome, row.dv_hops) {
            (RouteOutcome::NoSufficientBandwidth, _) => s.refusals += 1,
            (RouteOutcome::Route(r), Some(dv)) => match r.hops.cmp(&dv) {
                std::cmp::Ordering::Less => s.ff_wins += 1,
                std::cmp::Ordering::Equal => s.ties += 1,
                std::cmp::Ordering::Greater => s.dv_wins += 1,
            },
            // DV capped at its infinity metric while a route exists
            (RouteOutcome::Route(_), None) => s.unreachable += 1,
            (RouteOutcome::Unreachable, _) => s.unreachable += 1,
        }
    }
    s
}

/// Checks that `path` runs from `src` to `dst` over existing links without
/// revisiting a node.
fn check_path(path: &[NodeId], src: NodeId, dst: NodeId, t: &Topology) -> std::result::Result<(), String> {
    if path.first() != Some(&src) || path.last() != Some(&dst) {
        return Err(format!("path {path:?} does not run from {src} to {dst}"));
    }
    let mut seen = vec![false; t.node_count()];
    for &node in path {
        if node >= seen.len() || std::mem::replace(&mut seen[node], true) {
            return Err(format!("path {path:?} repeats or leaves the node set at {node}"));
        }
    }
    if let Some(w) = path.windows(2).find(|w| t.link(w[0], w[1]).is_none()) {
        return Err(format!("path {path:?} uses missing link {}-{}", w[0], w[1]));
    }
    Ok(())
}

fn path_carries(path: &[NodeId], t: &Topology, demand: f64) -> bool {
    path.windows(2).all(|w| t.link(w[0], w[1]).is_some_and(|l| l.bandwidth >= demand))
}

/// Re-checks every row against BFS oracles on `t` and its pruned subgraph.
pub fn verify_claims(report: &ComparisonReport, t: &Topology) -> Vec<Violation> {
    let demand = report.config.demand;
    let pruned = t.feasible_subgraph(demand);
    let mut out = Vec::new();

    for (idx, row) in report.rows.iter().enumerate() {
        let mut flag = |claim, detail: String| out.push(Violation { row: idx, claim, detail });
        if row.src >= t.node_count() || row.dst >= t.node_count() {
            flag(Claim::LoopFreedom, format!("query {}->{} is outside the topology", row.src, row.dst));
            continue;
        }
        let full_hops = t.bfs_hops(row.src)[row.dst];
        let pruned_hops = pruned.bfs_hops(row.src)[row.dst];

        if !row.dv_path.is_empty() {
            if let Err(e) = check_path(&row.dv_path, row.src, row.dst, t) {
                flag(Claim::LoopFreedom, format!("DV {e}"));
            }
        }

        match &row.ff_outcome {
            RouteOutcome::Route(route) => {
                if let Err(e) = check_path(&route.path, row.src, row.dst, t) {
                    flag(Claim::LoopFreedom, format!("FF {e}"));
                }
                if route.hops + 1 != route.path.len() {
                    flag(
                        Claim::LoopFreedom,
                        format!("FF hops {} disagree with path length {}", route.hops, route.path.len()),
                    );
                }
                if let Some(w) = route.path.windows(2).find(|w| !path_carries(w, t, demand)) {
                    flag(Claim::BandwidthAssurance, format!("link {}-{} carries less than {demand} Mbps", w[0], w[1]));
                }
                if pruned_hops != Some(route.hops) {
                    flag(Claim::MinHop, format!("FF hops {} but pruned BFS gives {pruned_hops:?}", route.hops));
                }
            }
            RouteOutcome::NoSufficientBandwidth => {
                if full_hops.is_none() || pruned_hops.is_some() {
                    flag(
                        Claim::RefusalSoundness,
                        format!("refusal with full BFS {full_hops:?} and pruned BFS {pruned_hops:?}"),
                    );
                }
            }
            RouteOutcome::Unreachable => {
                if full_hops.is_some() {
                    flag(Claim::RefusalSoundness, format!("unreachable but full BFS gives {full_hops:?}"));
                }
            }
        }

        if let Some(dv_hops) = row.dv_hops {
            if path_carries(&row.dv_path, t, demand) {
                match row.ff_outcome.hops() {
                    Some(ff) if ff <= dv_hops => {}
                    ff => flag(Claim::HopDominance, format!("DV path is feasible in {dv_hops} hops, FF gave {ff:?}")),
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Dv,
    Ff,
}

pub fn format_path(path: &[NodeId]) -> String {
    path.iter().map(NodeId::to_string).collect::<Vec<_>>().join("->")
}

/// Tab-separated table with the `Source Destination Hop count Path` columns.
pub fn render_table(report: &ComparisonReport, which: Engine) -> String {
    let title = match which {
        Engine::Dv => "Distance vector",
        Engine::Ff => "Fitness function estimation",
    };
    let mut out = format!("{title}\nSource\tDestination\tHop count\tPath\n");
    for row in &report.rows {
        let (hops, path) = match which {
            Engine::Dv => match row.dv_hops {
                Some(h) => (h.to_string(), format_path(&row.dv_path)),
                None => ("-".to_string(), "Unreachable".to_string()),
            },
            Engine::Ff => match &row.ff_outcome {
                RouteOutcome::Route(r) => (r.hops.to_string(), format_path(&r.path)),
                RouteOutcome::NoSufficientBandwidth => ("-".to_string(), REFUSAL_TEXT.to_string()),
                RouteOutcome::Unreachable => ("-".to_string(), "Unreachable".to_string()),
            },
        };
        let _ = writeln!(out, "{}\t{}\t{}\t{}", row.src, row.dst, hops, path);
    }
    out
}

/// Per-query hop counts for both engines, one CSV row per query.
pub fn emit_plot_series(report: &ComparisonReport) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    let opt = |h: Option<usize>| h.map(|h| h.to_string()).unwrap_or_default();
    for (idx, row) in report.rows.iter().enumerate() {
        let status = match row.ff_outcome {
            RouteOutcome::Route(_) => "route",
            RouteOutcome::NoSufficientBandwidth => "no_bandwidth",
            RouteOutcome::Unreachable => "unreachable",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            idx + 1,
            row.src,
            row.dst,
            opt(row.dv_hops),
            opt(row.ff_outcome.hops()),
            status
        );
    }
    out
}

/// Human-readable summary block printed after the tables.
pub fn render_summary(report: &ComparisonReport) -> String {
    let s = &report.summary;
    let mut out = format!(
        "topology {} (n={}, seed={})\nqueries {}: ff_wins {}, ties {}, dv_wins {}, refusals {}, unreachable {}\nviolations {}\n",
        report.fingerprint,
        report.config.n,
        report.config.seed,
        report.rows.len(),
        s.ff_wins,
        s.ties,
        s.dv_wins,
        s.refusals,
        s.unreachable,
        s.violations.len(),
    );
    for v in &s.violations {
        let _ = writeln!(out, "  row {}: {:?}: {}", v.row, v.claim, v.detail);
    }
    out
}
