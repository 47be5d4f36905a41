//! Synchronous distance-vector routing with a hop-count metric.
//!
//! Every node recomputes its vector from its neighbors' previous-round
//! vectors. There is no split horizon or poisoned reverse, so a link failure
//! produces the classic count-to-infinity climb until the metric reaches the
//! infinity cap.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::topology::{NodeId, Topology};

pub const DEFAULT_INFINITY: u32 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct DvState {
    topology: Topology,
    infinity: u32,
    // dist[v][d]; a value >= infinity means unreachable
    dist: Vec<Vec<u32>>,
    next_hop: Vec<Vec<Option<NodeId>>>,
}

impl DvState {
    /// Initial tables: zero to self, one to each neighbor, infinity elsewhere.
    pub fn init(topology: &Topology, infinity: u32) -> Result<Self> {
        if infinity < 2 {
            return Err(Error::Config(format!("infinity metric must be at least 2, got {infinity}")));
        }
        let n = topology.node_count();
        let mut dist = vec![vec![infinity; n]; n];
        let mut next_hop = vec![vec![None; n]; n];
        for v in 0..n {
            dist[v][v] = 0;
            for (u, _) in topology.neighbors(v) {
                dist[v][u] = 1;
                next_hop[v][u] = Some(u);
            }
        }
        Ok(Self { topology: topology.clone(), infinity, dist, next_hop })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn infinity(&self) -> u32 {
        self.infinity
    }

    /// Hop metric from `node` to `dest`, `None` once it reaches infinity.
    pub fn dist(&self, node: NodeId, dest: NodeId) -> Option<u32> {
        let d = self.dist[node][dest];
        (d < self.infinity).then_some(d)
    }

    pub fn next_hop(&self, node: NodeId, dest: NodeId) -> Option<NodeId> {
        self.next_hop[node][dest]
    }

    /// Recomputes column `dest` for every node from the current snapshot.
    /// Returns whether any entry changed.
    fn relax_column(&self, dest: NodeId, dist: &mut [Vec<u32>], next_hop: &mut [Vec<Option<NodeId>>]) -> bool {
        let mut changed = false;
        for v in 0..self.topology.node_count() {
            let (best, via) = if v == dest {
                (0, None)
            } else {
                // neighbors come in ascending order, so `<` keeps the smallest id on ties
                let mut best = self.infinity;
                let mut via = None;
                for (m, _) in self.topology.neighbors(v) {
                    let candidate = self.dist[m][dest].saturating_add(1).min(self.infinity);
                    if candidate < best {
                        best = candidate;
                        via = Some(m);
                    }
                }
                (best, via)
            };
            if dist[v][dest] != best || next_hop[v][dest] != via {
                changed = true;
            }
            dist[v][dest] = best;
            next_hop[v][dest] = via;
        }
        changed
    }

    /// One synchronous exchange: every node updates from the previous round.
    pub fn exchange_round(&self) -> (DvState, bool) {
        let mut next = self.clone();
        let mut changed = false;
        for dest in 0..self.topology.node_count() {
            changed |= self.relax_column(dest, &mut next.dist, &mut next.next_hop);
        }
        (next, changed)
    }

    /// Runs rounds until one changes nothing. `rounds_used` counts every
    /// executed round, including the final unchanged one.
    pub fn converge(self, max_rounds: usize) -> Result<(DvState, usize)> {
        let mut state = self;
        for round in 1..=max_rounds {
            let (next, changed) = state.exchange_round();
            state = next;
            if !changed {
                return Ok((state, round));
            }
        }
        Err(Error::NotConverged { rounds: max_rounds })
    }

    /// Follows next hops from `src` to `dst`. `Ok(None)` when unreachable.
    pub fn extract_path(&self, src: NodeId, dst: NodeId) -> Result<Option<Vec<NodeId>>> {
        self.topology.check_node(src)?;
        self.topology.check_node(dst)?;
        if self.dist(src, dst).is_none() {
            return Ok(None);
        }
        let mut path = vec![src];
        let mut at = src;
        while at != dst {
            match self.next_hop[at][dst] {
                Some(next) if path.len() <= self.topology.node_count() => {
                    path.push(next);
                    at = next;
                }
                Some(_) => return Err(Error::NextHopCycle { src, dst }),
                None => return Ok(None),
            }
        }
        Ok(Some(path))
    }

    /// Fails link `{a, b}` and records `probe`'s metric toward `dest` after
    /// each round.
    ///
    /// Stops when the metric reaches infinity, when the `dest` column stops
    /// changing, or after `max_rounds`.
    pub fn fail_link_and_trace(
        &self,
        a: NodeId,
        b: NodeId,
        probe: NodeId,
        dest: NodeId,
        max_rounds: usize,
    ) -> Result<DvTrace> {
        self.topology.check_node(probe)?;
        self.topology.check_node(dest)?;
        let mut state = self.clone();
        state.topology = self.topology.remove_link(a, b)?;

        let mut records = Vec::new();
        for round in 1..=max_rounds {
            let mut dist = state.dist.clone();
            let mut next_hop = state.next_hop.clone();
            let changed = state.relax_column(dest, &mut dist, &mut next_hop);
            state.dist = dist;
            state.next_hop = next_hop;

            let metric = state.dist(probe, dest);
            records.push(TraceRecord { round, metric });
            if metric.is_none() || !changed {
                break;
            }
        }
        Ok(DvTrace { probe, dest, infinity: self.infinity, records })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub round: usize,
    /// `None` once capped at the infinity metric.
    pub metric: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DvTrace {
    pub probe: NodeId,
    pub dest: NodeId,
    pub infinity: u32,
    pub records: Vec<TraceRecord>,
}

impl DvTrace {
    pub fn metrics(&self) -> Vec<Option<u32>> {
        self.records.iter().map(|r| r.metric).collect()
    }

    /// `round,metric` CSV with `INF` for capped rounds.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,metric\n");
        for r in &self.records {
            match r.metric {
                Some(m) => writeln!(out, "{},{}", r.round, m),
                None => writeln!(out, "{},INF", r.round),
            }
            .expect("writing to a String cannot fail");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line3() -> Topology {
        Topology::from_pairs(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn converged(t: &Topology) -> DvState {
        DvState::init(t, DEFAULT_INFINITY).unwrap().converge(64).unwrap().0
    }

    #[test]
    fn init_tables() {
        let s = DvState::init(&line3(), DEFAULT_INFINITY).unwrap();
        assert_eq!(s.dist(0, 2), None);
        assert_eq!(s.dist(0, 1), Some(1));
        assert_eq!(s.next_hop(0, 1), Some(1));
        for v in 0..3 {
            assert_eq!(s.dist(v, v), Some(0));
            assert_eq!(s.next_hop(v, v), None);
        }

        let single = DvState::init(&Topology::from_pairs(1, &[]).unwrap(), 16).unwrap();
        assert_eq!(single.dist(0, 0), Some(0));

        assert!(DvState::init(&line3(), 1).is_err());
    }

    #[test]
    fn one_round_on_a_line() {
        let s = DvState::init(&line3(), DEFAULT_INFINITY).unwrap();
        let (s, changed) = s.exchange_round();
        assert!(changed);
        assert_eq!(s.dist(0, 2), Some(2));
        assert_eq!(s.next_hop(0, 2), Some(1));
        let (_, changed) = s.exchange_round();
        assert!(!changed);
    }

    #[test]
    fn square_breaks_ties_by_smallest_neighbor() {
        let sq = Topology::from_pairs(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let s = converged(&sq);
        assert_eq!(s.dist(0, 3), Some(2));
        assert_eq!(s.next_hop(0, 3), Some(1));
        assert_eq!(s.next_hop(3, 0), Some(1));
    }

    #[test]
    fn chain_and_complete_graph_convergence() {
        for n in 2..12 {
            let pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
            let t = Topology::from_pairs(n, &pairs).unwrap();
            let (s, rounds) = DvState::init(&t, 64).unwrap().converge(100).unwrap();
            assert!(rounds < n, "n={n} rounds={rounds}");
            assert_eq!(s.dist(0, n - 1), Some(n as u32 - 1));
        }

        let k4 = Topology::from_pairs(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let (s, rounds) = DvState::init(&k4, 16).unwrap().converge(10).unwrap();
        assert_eq!(rounds, 1);
        for u in 0..4 {
            for d in 0..4 {
                assert_eq!(s.dist(u, d), Some(u32::from(u != d)));
            }
        }
    }

    #[test]
    fn chain_longer_than_infinity_is_capped() {
        let pairs: Vec<_> = (1..20).map(|i| (i - 1, i)).collect();
        let t = Topology::from_pairs(20, &pairs).unwrap();
        let s = converged(&t);
        assert_eq!(s.dist(0, 15), Some(15));
        assert_eq!(s.dist(0, 16), None);
        assert_eq!(s.extract_path(0, 19).unwrap(), None);
    }

    #[test]
    fn converge_reports_round_budget_exhaustion() {
        let pairs: Vec<_> = (1..6).map(|i| (i - 1, i)).collect();
        let t = Topology::from_pairs(6, &pairs).unwrap();
        let s = DvState::init(&t, 16).unwrap();
        assert_eq!(s.converge(2), Err(Error::NotConverged { rounds: 2 }));
    }

    #[test]
    fn extract_paths() {
        let t = Topology::from_pairs(4, &[(0, 1), (0, 3), (1, 2)]).unwrap();
        let s = converged(&t);
        assert_eq!(s.extract_path(1, 0).unwrap(), Some(vec![1, 0]));
        assert_eq!(s.extract_path(2, 3).unwrap(), Some(vec![2, 1, 0, 3]));
        assert_eq!(s.extract_path(2, 2).unwrap(), Some(vec![2]));
        assert!(s.extract_path(0, 9).is_err());

        let split = converged(&Topology::from_pairs(4, &[(0, 1), (2, 3)]).unwrap());
        assert_eq!(split.extract_path(0, 3).unwrap(), None);
    }

    #[test]
    fn count_to_infinity_on_a_line() {
        // hand simulation of the synchronous recurrence after failing {1,2}
        let s = converged(&line3());

        let at_a = s.fail_link_and_trace(1, 2, 0, 2, 100).unwrap();
        let mut want: Vec<Option<u32>> = [2, 4, 4, 6, 6, 8, 8, 10, 10, 12, 12, 14, 14].map(Some).to_vec();
        want.push(None);
        assert_eq!(at_a.metrics(), want);
        assert_eq!(at_a.records.last().unwrap().round, 14);

        let at_b = s.fail_link_and_trace(1, 2, 1, 2, 100).unwrap();
        let mut want: Vec<Option<u32>> = [3, 3, 5, 5, 7, 7, 9, 9, 11, 11, 13, 13, 15, 15].map(Some).to_vec();
        want.push(None);
        assert_eq!(at_b.metrics(), want);

        let rounds: Vec<usize> = at_b.records.iter().map(|r| r.round).collect();
        assert_eq!(rounds, (1..=15).collect::<Vec<_>>());
    }

    #[test]
    fn trace_respects_round_budget() {
        let s = converged(&line3());
        let trace = s.fail_link_and_trace(1, 2, 0, 2, 3).unwrap();
        assert_eq!(trace.metrics(), vec![Some(2), Some(4), Some(4)]);
    }

    #[test]
    fn failing_an_unused_link_leaves_the_metric_alone() {
        // triangle 0-1-2 plus tail 2-3; dest 3 is reached through 2 from everyone
        let t = Topology::from_pairs(4, &[(0, 1), (0, 2), (1, 2), (2, 3)]).unwrap();
        let s = converged(&t);
        let trace = s.fail_link_and_trace(0, 1, 0, 3, 100).unwrap();
        assert_eq!(trace.records, vec![TraceRecord { round: 1, metric: Some(2) }]);
    }

    #[test]
    fn trace_errors() {
        let s = converged(&line3());
        assert_eq!(s.fail_link_and_trace(0, 2, 0, 2, 10), Err(Error::MissingLink { a: 0, b: 2 }));
        assert!(s.fail_link_and_trace(0, 1, 7, 2, 10).is_err());
    }

    #[test]
    fn trace_csv() {
        let trace = DvTrace {
            probe: 0,
            dest: 2,
            infinity: 16,
            records: vec![TraceRecord { round: 1, metric: Some(2) }, TraceRecord { round: 2, metric: None }],
        };
        assert_eq!(trace.to_csv(), "round,metric\n1,2\n2,INF\n");
    }
}
