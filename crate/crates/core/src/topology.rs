//! Topologies with per-link QoS attributes, the seeded generator, and the
//! graph utilities both routing engines and the test oracles share.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub type NodeId = usize;

/// One undirected link, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosLink {
    pub a: NodeId,
    pub b: NodeId,
    /// Mbps.
    pub bandwidth: f64,
    /// Milliseconds.
    pub delay: f64,
    /// Milliseconds.
    pub jitter: f64,
    /// Per-transmission loss probability.
    pub loss: f64,
}

impl QosLink {
    /// Builds a link with endpoints normalized to `a < b`.
    pub fn new(a: NodeId, b: NodeId, bandwidth: f64, delay: f64, jitter: f64, loss: f64) -> Self {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        Self { a, b, bandwidth, delay, jitter, loss }
    }

    pub fn key(&self) -> (NodeId, NodeId) {
        (self.a, self.b)
    }

    /// The endpoint opposite `node`.
    pub fn other(&self, node: NodeId) -> NodeId {
        if node == self.a {
            self.b
        } else {
            self.a
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::InvalidLink { a: self.a, b: self.b, reason: reason.to_string() });
        if self.a == self.b {
            return bad("self-loop");
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return bad("bandwidth must be positive");
        }
        if !(self.delay >= 0.0 && self.delay.is_finite()) {
            return bad("delay must be non-negative");
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return bad("jitter must be non-negative");
        }
        if !(0.0..1.0).contains(&self.loss) {
            return bad("loss must lie in [0, 1)");
        }
        Ok(())
    }
}

/// An immutable node set `0..n` with at most one link per unordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    n: usize,
    links: Vec<QosLink>,
    // neighbor id and index into `links`, ascending by neighbor id
    adjacency: Vec<Vec<(NodeId, usize)>>,
}

impl Topology {
    pub fn new(n: usize, links: impl IntoIterator<Item = QosLink>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyTopology);
        }
        let mut links: Vec<QosLink> =
            links.into_iter().map(|l| QosLink::new(l.a, l.b, l.bandwidth, l.delay, l.jitter, l.loss)).collect();
        for link in &links {
            for node in [link.a, link.b] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            link.validate()?;
        }
        links.sort_by_key(QosLink::key);
        if let Some(w) = links.windows(2).find(|w| w[0].key() == w[1].key()) {
            return Err(Error::DuplicateLink { a: w[0].a, b: w[0].b });
        }

        let mut adjacency = vec![Vec::new(); n];
        for (idx, link) in links.iter().enumerate() {
            adjacency[link.a].push((link.b, idx));
            adjacency[link.b].push((link.a, idx));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        Ok(Self { n, links, adjacency })
    }

    /// Links with unit bandwidth and zero delay, jitter and loss.
    pub fn from_pairs(n: usize, pairs: &[(NodeId, NodeId)]) -> Result<Self> {
        Self::new(n, pairs.iter().map(|&(a, b)| QosLink::new(a, b, 1.0, 0.0, 0.0, 0.0)))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// All links in ascending `(a, b)` order.
    pub fn links(&self) -> &[QosLink] {
        &self.links
    }

    /// Neighbors of `node` with the connecting link, ascending by neighbor id.
    pub fn neighbors(&self, node: NodeId) -> impl Iterator<Item = (NodeId, &QosLink)> + '_ {
        self.adjacency[node].iter().map(move |&(m, idx)| (m, &self.links[idx]))
    }

    pub fn link(&self, a: NodeId, b: NodeId) -> Option<&QosLink> {
        if a >= self.n || b >= self.n {
            return None;
        }
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.links.binary_search_by_key(&(lo, hi), QosLink::key).ok().map(|idx| &self.links[idx])
    }

    pub fn check_node(&self, node: NodeId) -> Result<()> {
        if node < self.n {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node, n: self.n })
        }
    }

    /// The same nodes, keeping only links with `bandwidth >= demand`.
    pub fn feasible_subgraph(&self, demand: f64) -> Topology {
        self.filtered(|l| l.bandwidth >= demand)
    }

    pub fn remove_link(&self, a: NodeId, b: NodeId) -> Result<Topology> {
        let key = self.link(a, b).ok_or(Error::MissingLink { a, b })?.key();
        Ok(self.filtered(|l| l.key() != key))
    }

    fn filtered(&self, keep: impl Fn(&QosLink) -> bool) -> Topology {
        let links: Vec<QosLink> = self.links.iter().copied().filter(|l| keep(l)).collect();
        Topology::new(self.n, links).expect("subset of a valid topology is valid")
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_hops(0).iter().all(Option::is_some)
    }

    /// Minimum link count from `src` to every node; `None` when unreachable.
    pub fn bfs_hops(&self, src: NodeId) -> Vec<Option<usize>> {
        let mut hops = vec![None; self.n];
        hops[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let next = hops[u].map(|h| h + 1);
            for &(m, _) in &self.adjacency[u] {
                if hops[m].is_none() {
                    hops[m] = next;
                    queue.push_back(m);
                }
            }
        }
        hops
    }

    /// Canonical text form: `n=<count>` then `a b bandwidth delay jitter loss`
    /// per link in ascending order, six significant digits.
    pub fn to_canonical_string(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        for l in &self.links {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                l.a,
                l.b,
                format_sig6(l.bandwidth),
                format_sig6(l.delay),
                format_sig6(l.jitter),
                format_sig6(l.loss),
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Topology> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let (first, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
        let n = header
            .strip_prefix("n=")
            .and_then(|v| v.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::Parse { line: first, msg: format!("expected `n=<count>`, got `{header}`") })?;

        let mut links = Vec::new();
        for (line, text) in lines {
            let fields: Vec<&str> = text.split_whitespace().collect();
            let err = |msg: String| Error::Parse { line, msg };
            if fields.len() != 6 {
                return Err(err(format!("expected 6 fields, got {}", fields.len())));
            }
            let node = |s: &str| s.parse::<NodeId>().map_err(|e| err(format!("bad node `{s}`: {e}")));
            let real = |s: &str| s.parse::<f64>().map_err(|e| err(format!("bad number `{s}`: {e}")));
            links.push(QosLink::new(
                node(fields[0])?,
                node(fields[1])?,
                real(fields[2])?,
                real(fields[3])?,
                real(fields[4])?,
                real(fields[5])?,
            ));
        }
        Topology::new(n, links)
    }

    /// FNV-1a over the canonical text bytes.
    pub fn fingerprint(&self) -> u64 {
        fnv1a64(self.to_canonical_string().as_bytes())
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Formats like C's `%.6g`.
pub fn format_sig6(x: f64) -> String {
    const PRECISION: i32 = 6;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // exponent after rounding to PRECISION significant digits
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PRECISION).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Uniform attribute ranges and pair density for [`generate_topology`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub edge_prob: f64,
    pub bandwidth_range: (f64, f64),
    pub delay_range: (f64, f64),
    pub jitter_range: (f64, f64),
    pub loss_range: (f64, f64),
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            edge_prob: 0.15,
            bandwidth_range: (1.0, 6.25),
            delay_range: (1.0, 20.0),
            jitter_range: (0.0, 5.0),
            loss_range: (0.0, 0.05),
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidParams(msg));
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return invalid(format!("edge probability {} outside [0, 1]", self.edge_prob));
        }
        let ranges = [
            ("bandwidth", self.bandwidth_range),
            ("delay", self.delay_range),
            ("jitter", self.jitter_range),
            ("loss", self.loss_range),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return invalid(format!("{name} range [{lo}, {hi}] needs finite min <= max"));
            }
        }
        if self.bandwidth_range.0 <= 0.0 {
            return invalid("bandwidth must be positive".into());
        }
        if self.delay_range.0 < 0.0 || self.jitter_range.0 < 0.0 {
            return invalid("delay and jitter must be non-negative".into());
        }
        if self.loss_range.0 < 0.0 || self.loss_range.1 >= 1.0 {
            return invalid("loss range must lie within [0, 1)".into());
        }
        Ok(())
    }
}

pub fn generate_topology(n: usize, params: &GenParams, seed: u64) -> Result<Topology> {
    generate_topology_with(n, params, &mut SplitMix64::new(seed))
}

/// Generates a connected topology, leaving `rng` positioned after the last
/// draw so callers can continue the same stream.
///
/// Draw order: a Fisher-Yates permutation chained into a spanning path, one
/// draw per remaining pair in lexicographic order, then bandwidth, delay,
/// jitter and loss for each link in lexicographic order.
pub fn generate_topology_with(n: usize, params: &GenParams, rng: &mut SplitMix64) -> Result<Topology> {
    if n == 0 {
        return Err(Error::EmptyTopology);
    }
    params.validate()?;

    let mut perm: Vec<NodeId> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        perm.swap(i, j);
    }

    let mut linked = vec![vec![false; n]; n];
    let mut pairs = Vec::new();
    for w in perm.windows(2) {
        let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
        linked[a][b] = true;
        pairs.push((a, b));
    }
    for (a, row) in linked.iter_mut().enumerate() {
        for (b, is_linked) in row.iter_mut().enumerate().skip(a + 1) {
            if !*is_linked && rng.next_unit() < params.edge_prob {
                *is_linked = true;
                pairs.push((a, b));
            }
        }
    }
    pairs.sort_unstable();

    let links: Vec<QosLink> = pairs
        .into_iter()
        .map(|(a, b)| {
            let (bw, d, j, l) = (params.bandwidth_range, params.delay_range, params.jitter_range, params.loss_range);
            let bandwidth = rng.next_in(bw.0, bw.1);
            let delay = rng.next_in(d.0, d.1);
            let jitter = rng.next_in(j.0, j.1);
            // guard the open upper end against draw/2^64 rounding to 1.0
            let loss = rng.next_in(l.0, l.1).min(l.1);
            QosLink::new(a, b, bandwidth, delay, jitter, loss)
        })
        .collect();
    Topology::new(n, links)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(a: NodeId, b: NodeId, bandwidth: f64) -> QosLink {
        QosLink::new(a, b, bandwidth, 1.0, 0.0, 0.0)
    }

    fn triangle() -> Topology {
        Topology::new(3, [link(0, 1, 10.0), link(1, 2, 5.0), link(0, 2, 2.0)]).unwrap()
    }

    fn keys(t: &Topology) -> Vec<(NodeId, NodeId)> {
        t.links().iter().map(QosLink::key).collect()
    }

    #[test]
    fn rejects_invalid_links() {
        assert_eq!(Topology::new(0, []), Err(Error::EmptyTopology));
        assert!(matches!(Topology::from_pairs(2, &[(1, 1)]), Err(Error::InvalidLink { .. })));
        assert!(matches!(Topology::from_pairs(2, &[(0, 2)]), Err(Error::NodeOutOfRange { node: 2, n: 2 })));
        assert!(matches!(Topology::from_pairs(2, &[(0, 1), (1, 0)]), Err(Error::DuplicateLink { a: 0, b: 1 })));
        assert!(Topology::new(2, [QosLink::new(0, 1, 0.0, 0.0, 0.0, 0.0)]).is_err());
        assert!(Topology::new(2, [QosLink::new(0, 1, 1.0, 0.0, 0.0, 1.0)]).is_err());
        assert!(Topology::new(2, [QosLink::new(0, 1, 1.0, -1.0, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn links_are_normalized_and_sorted() {
        let t = Topology::from_pairs(4, &[(3, 2), (1, 0), (2, 0)]).unwrap();
        assert_eq!(keys(&t), vec![(0, 1), (0, 2), (2, 3)]);
        assert!(t.link(3, 2).is_some());
        assert!(t.link(1, 3).is_none());
        let neighbors: Vec<_> = t.neighbors(0).map(|(m, _)| m).collect();
        assert_eq!(neighbors, vec![1, 2]);
    }

    #[test]
    fn small_generated_topologies() {
        let p = GenParams::default();
        let one = generate_topology(1, &p, 5).unwrap();
        assert!(one.links().is_empty());
        assert!(one.is_connected());

        let two = generate_topology(2, &p, 5).unwrap();
        assert_eq!(keys(&two), vec![(0, 1)]);

        assert_eq!(generate_topology(0, &p, 5), Err(Error::EmptyTopology));
    }

    #[test]
    fn dense_generated_topology() {
        let t = generate_topology(64, &GenParams::default(), 42).unwrap();
        assert_eq!(t.node_count(), 64);
        assert!(t.links().len() >= 63);
        assert!(t.is_connected());
    }

    #[test]
    fn edge_prob_extremes() {
        let mut p = GenParams { edge_prob: 0.0, ..GenParams::default() };
        assert_eq!(generate_topology(10, &p, 3).unwrap().links().len(), 9);
        p.edge_prob = 1.0;
        assert_eq!(generate_topology(10, &p, 3).unwrap().links().len(), 45);
    }

    #[test]
    fn rejects_bad_params() {
        let base = GenParams::default();
        let bad = [
            GenParams { edge_prob: 1.5, ..base },
            GenParams { bandwidth_range: (0.0, 1.0), ..base },
            GenParams { delay_range: (5.0, 1.0), ..base },
            GenParams { loss_range: (0.0, 1.0), ..base },
            GenParams { jitter_range: (-1.0, 1.0), ..base },
        ];
        for p in bad {
            assert!(matches!(generate_topology(4, &p, 0), Err(Error::InvalidParams(_))), "{p:?}");
        }
    }

    #[test]
    fn feasible_subgraph_filters_by_bandwidth() {
        let t = triangle();
        assert_eq!(keys(&t.feasible_subgraph(4.0)), vec![(0, 1), (1, 2)]);
        assert_eq!(t.feasible_subgraph(0.0), t);
        assert!(t.feasible_subgraph(11.0).links().is_empty());
        assert_eq!(t.feasible_subgraph(5.0).node_count(), 3);
    }

    #[test]
    fn remove_link_cases() {
        let line = Topology::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
        let cut = line.remove_link(2, 1).unwrap();
        assert_eq!(keys(&cut), vec![(0, 1)]);
        assert!(!cut.is_connected());
        assert_eq!(line.remove_link(0, 5), Err(Error::MissingLink { a: 0, b: 5 }));
        assert_eq!(line.remove_link(0, 2), Err(Error::MissingLink { a: 0, b: 2 }));
    }

    #[test]
    fn connectivity() {
        assert!(Topology::from_pairs(3, &[(0, 1), (1, 2)]).unwrap().is_connected());
        assert!(!Topology::from_pairs(2, &[]).unwrap().is_connected());
        assert!(Topology::from_pairs(1, &[]).unwrap().is_connected());
    }

    #[test]
    fn bfs_cases() {
        let line = Topology::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(line.bfs_hops(0), vec![Some(0), Some(1), Some(2)]);

        let isolated = Topology::from_pairs(3, &[(1, 2)]).unwrap();
        assert_eq!(isolated.bfs_hops(0), vec![Some(0), None, None]);

        let k4 = Topology::from_pairs(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        for src in 0..4 {
            let hops = k4.bfs_hops(src);
            for (d, h) in hops.iter().enumerate() {
                assert_eq!(*h, Some(usize::from(d != src)));
            }
        }
    }

    #[test]
    fn sig6_matches_printf_g() {
        // expected strings from C printf("%.6g")
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (100.0, "100"),
            (12.3456789, "12.3457"),
            (0.0123456789, "0.0123457"),
            (0.00001234, "1.234e-05"),
            (0.0001, "0.0001"),
            (999999.5, "1e+06"),
            (123456.0, "123456"),
            (1234567.0, "1.23457e+06"),
            (99.99999, "100"),
            (0.5, "0.5"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig6(x), want, "{x}");
        }
    }

    #[test]
    fn canonical_text_round_trip() {
        let t = Topology::new(3, [QosLink::new(2, 0, 12.5, 3.25, 0.0, 0.01), link(0, 1, 7.0)]).unwrap();
        let text = t.to_canonical_string();
        assert_eq!(text, "n=3\n0 1 7 1 0 0\n0 2 12.5 3.25 0 0.01\n");
        assert_eq!(Topology::parse(&text).unwrap(), t);
    }

    #[test]
    fn parse_errors_name_the_line() {
        assert!(matches!(Topology::parse(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Topology::parse("nodes=3\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Topology::parse("n=3\n0 1 1 1 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(Topology::parse("n=3\n0 x 1 1 1 0\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(Topology::parse("n=2\n0 3 1 1 1 0\n"), Err(Error::NodeOutOfRange { .. })));
    }

    #[test]
    fn fingerprint_tracks_bytes() {
        let a = triangle();
        let b = Topology::new(3, [link(0, 1, 10.0), link(1, 2, 5.0), link(0, 2, 2.5)]).unwrap();
        assert_eq!(a.fingerprint(), triangle().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
        // FNV-1a reference value for the empty input
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
    }
}
