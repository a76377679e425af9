//! Directed bipartite demand graphs and their weighted compressed form.
//!
//! A demand graph has user nodes on one side and packet nodes on the other.
//! A user->packet link means the user holds the packet as side information;
//! a packet->user link means the user still wants the packet. The weighted
//! compressed graph collapses this to a user-only digraph where link (i,j)
//! carries the number of distinct packets user i holds that user j wants.
//!
//! User ids are `1..=N` and packet ids `1..=P` everywhere, including the
//! line-oriented text format.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("user {user}: packet {packet} appears in both the have set and the want set")]
    Overlap { user: u32, packet: u32 },
    #[error("packet {packet} is wanted by no user")]
    Orphan { packet: u32 },
    #[error("packet id {packet} out of range 1..={max}")]
    PacketOutOfRange { packet: u32, max: u32 },
    #[error("user id {user} out of range 1..={max}")]
    UserOutOfRange { user: u32, max: u32 },
    #[error("graph must have at least one user")]
    NoUsers,
    #[error("unknown id in prune operation: {0}")]
    UnknownId(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Immutable demand graph. Transformations return new graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandGraph {
    num_users: u32,
    num_packets: u32,
    /// have[n-1] = H_n, packets user n holds as side information
    have: Vec<BTreeSet<u32>>,
    /// want[n-1] = R_n, packets user n wants
    want: Vec<BTreeSet<u32>>,
}

impl DemandGraph {
    /// Build and validate a graph. The packet count is inferred as the
    /// largest id appearing in any have or want set.
    pub fn build(
        num_users: u32,
        have_sets: Vec<BTreeSet<u32>>,
        want_sets: Vec<BTreeSet<u32>>,
    ) -> Result<Self, GraphError> {
        if num_users == 0 {
            return Err(GraphError::NoUsers);
        }
        assert_eq!(have_sets.len(), num_users as usize, "one have set per user");
        assert_eq!(want_sets.len(), num_users as usize, "one want set per user");
        let num_packets = have_sets
            .iter()
            .chain(want_sets.iter())
            .flat_map(|s| s.iter().copied())
            .max()
            .unwrap_or(0);
        let graph = DemandGraph {
            num_users,
            num_packets,
            have: have_sets,
            want: want_sets,
        };
        graph.validate()?;
        Ok(graph)
    }

    /// Like [`DemandGraph::build`] but with an explicit packet count, as
    /// carried by the text format header.
    pub fn build_with_packet_count(
        num_users: u32,
        num_packets: u32,
        have_sets: Vec<BTreeSet<u32>>,
        want_sets: Vec<BTreeSet<u32>>,
    ) -> Result<Self, GraphError> {
        if num_users == 0 {
            return Err(GraphError::NoUsers);
        }
        let graph = DemandGraph {
            num_users,
            num_packets,
            have: have_sets,
            want: want_sets,
        };
        graph.validate()?;
        Ok(graph)
    }

    fn validate(&self) -> Result<(), GraphError> {
        for (idx, (h, w)) in self.have.iter().zip(&self.want).enumerate() {
            let user = idx as u32 + 1;
            for &p in h.iter().chain(w.iter()) {
                if p == 0 || p > self.num_packets {
                    return Err(GraphError::PacketOutOfRange {
                        packet: p,
                        max: self.num_packets,
                    });
                }
            }
            if let Some(&p) = h.intersection(w).next() {
                return Err(GraphError::Overlap { user, packet: p });
            }
        }
        for p in 1..=self.num_packets {
            if !self.want.iter().any(|w| w.contains(&p)) {
                return Err(GraphError::Orphan { packet: p });
            }
        }
        Ok(())
    }

    pub fn num_users(&self) -> u32 {
        self.num_users
    }

    pub fn num_packets(&self) -> u32 {
        self.num_packets
    }

    pub fn users(&self) -> impl Iterator<Item = u32> {
        1..=self.num_users
    }

    pub fn packets(&self) -> impl Iterator<Item = u32> {
        1..=self.num_packets
    }

    pub fn have(&self, user: u32) -> &BTreeSet<u32> {
        &self.have[user as usize - 1]
    }

    pub fn want(&self, user: u32) -> &BTreeSet<u32> {
        &self.want[user as usize - 1]
    }

    /// Users that want packet `p`, ascending.
    pub fn wanters(&self, p: u32) -> Vec<u32> {
        self.users().filter(|&n| self.want(n).contains(&p)).collect()
    }

    /// Users that hold packet `p`, ascending.
    pub fn holders(&self, p: u32) -> Vec<u32> {
        self.users().filter(|&n| self.have(n).contains(&p)).collect()
    }

    /// A packet wanted by exactly one user.
    pub fn is_unicast(&self, p: u32) -> bool {
        self.users().filter(|&n| self.want(n).contains(&p)).count() == 1
    }

    /// True iff the bipartite digraph has no simple directed cycle.
    ///
    /// Peels nodes with no outgoing links until either everything is
    /// consumed (acyclic) or a core remains (cyclic).
    pub fn is_acyclic(&self) -> bool {
        let n = self.num_users as usize;
        let p = self.num_packets as usize;
        // node ids: 0..n users, n..n+p packets
        let mut out_degree = vec![0usize; n + p];
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n + p];
        for u in self.users() {
            for &pk in self.have(u) {
                // user -> packet
                out_degree[u as usize - 1] += 1;
                preds[n + pk as usize - 1].push(u as usize - 1);
            }
            for &pk in self.want(u) {
                // packet -> user
                out_degree[n + pk as usize - 1] += 1;
                preds[u as usize - 1].push(n + pk as usize - 1);
            }
        }
        let mut stack: Vec<usize> = (0..n + p).filter(|&v| out_degree[v] == 0).collect();
        let mut removed = 0usize;
        while let Some(v) = stack.pop() {
            removed += 1;
            for &u in &preds[v] {
                out_degree[u] -= 1;
                if out_degree[u] == 0 {
                    stack.push(u);
                }
            }
        }
        removed == n + p
    }

    /// Apply pruning operations, then delete packets left with no want
    /// links and renumber the survivors to `1..=P'`.
    ///
    /// Removing a user keeps its slot (with emptied sets) so user ids stay
    /// stable. The returned map gives each old packet id's new id, or
    /// `None` if it was deleted.
    pub fn prune(&self, operations: &[PruneOp]) -> Result<PrunedGraph, GraphError> {
        let mut have = self.have.clone();
        let mut want = self.want.clone();
        for op in operations {
            match *op {
                PruneOp::RemovePacket(p) => {
                    if p == 0 || p > self.num_packets {
                        return Err(GraphError::UnknownId(format!("packet {p}")));
                    }
                    for set in have.iter_mut().chain(want.iter_mut()) {
                        set.remove(&p);
                    }
                }
                PruneOp::RemoveUser(n) => {
                    if n == 0 || n > self.num_users {
                        return Err(GraphError::UnknownId(format!("user {n}")));
                    }
                    have[n as usize - 1].clear();
                    want[n as usize - 1].clear();
                }
                PruneOp::RemoveWantLink { packet, user } => {
                    if user == 0 || user > self.num_users {
                        return Err(GraphError::UnknownId(format!("user {user}")));
                    }
                    if packet == 0 || packet > self.num_packets {
                        return Err(GraphError::UnknownId(format!("packet {packet}")));
                    }
                    if !want[user as usize - 1].remove(&packet) {
                        return Err(GraphError::UnknownId(format!(
                            "want link ({packet},{user})"
                        )));
                    }
                }
            }
        }
        // delete residual packets with no outgoing (want) links, renumber
        let mut packet_map: Vec<Option<u32>> = vec![None; self.num_packets as usize + 1];
        let mut next = 0u32;
        for p in 1..=self.num_packets {
            if want.iter().any(|w| w.contains(&p)) {
                next += 1;
                packet_map[p as usize] = Some(next);
            }
        }
        let remap = |set: &BTreeSet<u32>| -> BTreeSet<u32> {
            set.iter().filter_map(|&p| packet_map[p as usize]).collect()
        };
        let graph = DemandGraph {
            num_users: self.num_users,
            num_packets: next,
            have: have.iter().map(&remap).collect(),
            want: want.iter().map(&remap).collect(),
        };
        debug_assert!(graph.validate().is_ok());
        Ok(PrunedGraph { graph, packet_map })
    }

    /// Weighted compressed graph: link weight = number of distinct packets
    /// user i holds that user j wants. A packet may contribute to several
    /// links.
    pub fn compress(&self) -> WeightedCompressedGraph {
        let n = self.num_users as usize;
        let mut weights = vec![vec![0u32; n]; n];
        for i in self.users() {
            for j in self.users() {
                if i == j {
                    continue;
                }
                weights[i as usize - 1][j as usize - 1] =
                    self.have(i).intersection(self.want(j)).count() as u32;
            }
        }
        WeightedCompressedGraph {
            num_users: self.num_users,
            weights,
        }
    }

    /// Packets on compressed link (i,j): held by i and wanted by j.
    pub fn link_packets(&self, i: u32, j: u32) -> Vec<u32> {
        self.have(i).intersection(self.want(j)).copied().collect()
    }

    /// Canonical text serialization (sorted ids, `-` for empty sets).
    pub fn to_text(&self) -> String {
        let fmt_set = |s: &BTreeSet<u32>| -> String {
            if s.is_empty() {
                "-".to_string()
            } else {
                s.iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            }
        };
        let mut out = format!("users {} packets {}\n", self.num_users, self.num_packets);
        for n in self.users() {
            out.push_str(&format!(
                "user {} have {} want {}\n",
                n,
                fmt_set(self.have(n)),
                fmt_set(self.want(n))
            ));
        }
        out
    }

    /// Parse the line-oriented text format produced by [`to_text`].
    ///
    /// [`to_text`]: DemandGraph::to_text
    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line_no, header) = lines
            .next()
            .ok_or(GraphError::Parse { line: 1, msg: "empty input".into() })?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (num_users, num_packets) = match parts.as_slice() {
            ["users", n, "packets", p] => {
                let n: u32 = n.parse().map_err(|_| GraphError::Parse {
                    line: line_no,
                    msg: format!("bad user count {n:?}"),
                })?;
                let p: u32 = p.parse().map_err(|_| GraphError::Parse {
                    line: line_no,
                    msg: format!("bad packet count {p:?}"),
                })?;
                (n, p)
            }
            _ => {
                return Err(GraphError::Parse {
                    line: line_no,
                    msg: "expected header `users N packets P`".into(),
                })
            }
        };
        let mut have = vec![BTreeSet::new(); num_users as usize];
        let mut want = vec![BTreeSet::new(); num_users as usize];
        for (line_no, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["user", n, "have", h, "want", w] => {
                    let n: u32 = n.parse().map_err(|_| GraphError::Parse {
                        line: line_no,
                        msg: format!("bad user id {n:?}"),
                    })?;
                    if n == 0 || n > num_users {
                        return Err(GraphError::UserOutOfRange { user: n, max: num_users });
                    }
                    have[n as usize - 1] = parse_id_set(h, line_no)?;
                    want[n as usize - 1] = parse_id_set(w, line_no)?;
                }
                _ => {
                    return Err(GraphError::Parse {
                        line: line_no,
                        msg: "expected `user N have ... want ...`".into(),
                    })
                }
            }
        }
        Self::build_with_packet_count(num_users, num_packets, have, want)
    }
}

fn parse_id_set(field: &str, line: usize) -> Result<BTreeSet<u32>, GraphError> {
    if field == "-" {
        return Ok(BTreeSet::new());
    }
    field
        .split(',')
        .map(|tok| {
            tok.parse::<u32>().map_err(|_| GraphError::Parse {
                line,
                msg: format!("bad packet id {tok:?}"),
            })
        })
        .collect()
}

/// Pruning operations of the lower-bound construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneOp {
    RemovePacket(u32),
    RemoveUser(u32),
    RemoveWantLink { packet: u32, user: u32 },
}

/// Result of [`DemandGraph::prune`]: the new graph plus the old-id to
/// new-id packet map (index 0 unused).
#[derive(Debug, Clone)]
pub struct PrunedGraph {
    pub graph: DemandGraph,
    pub packet_map: Vec<Option<u32>>,
}

/// User-only digraph with integer link weights and zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedCompressedGraph {
    num_users: u32,
    weights: Vec<Vec<u32>>,
}

impl WeightedCompressedGraph {
    /// Build from an N x N weight matrix with zero diagonal.
    pub fn from_weights(weights: Vec<Vec<u32>>) -> Result<Self, GraphError> {
        let n = weights.len();
        if n == 0 {
            return Err(GraphError::NoUsers);
        }
        for (i, row) in weights.iter().enumerate() {
            assert_eq!(row.len(), n, "weight matrix must be square");
            assert_eq!(row[i], 0, "weight matrix must have zero diagonal");
        }
        Ok(WeightedCompressedGraph {
            num_users: n as u32,
            weights,
        })
    }

    pub fn num_users(&self) -> u32 {
        self.num_users
    }

    pub fn weight(&self, i: u32, j: u32) -> u32 {
        self.weights[i as usize - 1][j as usize - 1]
    }

    pub fn weights(&self) -> &[Vec<u32>] {
        &self.weights
    }

    pub fn has_link(&self, i: u32, j: u32) -> bool {
        i != j && self.weight(i, j) > 0
    }

    /// Successors of user `i`, ascending.
    pub fn successors(&self, i: u32) -> Vec<u32> {
        (1..=self.num_users).filter(|&j| self.has_link(i, j)).collect()
    }

    pub fn links(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for i in 1..=self.num_users {
            for j in 1..=self.num_users {
                if self.has_link(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn total_weight(&self) -> u32 {
        self.weights.iter().flatten().sum()
    }

    pub fn is_acyclic(&self) -> bool {
        // Kahn peeling on the user digraph.
        let n = self.num_users as usize;
        let mut out_degree = vec![0usize; n];
        for i in 1..=self.num_users {
            out_degree[i as usize - 1] = self.successors(i).len();
        }
        let mut removed = vec![false; n];
        loop {
            let mut progress = false;
            for v in 0..n {
                if !removed[v] && out_degree[v] == 0 {
                    removed[v] = true;
                    progress = true;
                    for u in 0..n {
                        if !removed[u] && self.has_link(u as u32 + 1, v as u32 + 1) {
                            out_degree[u] -= 1;
                        }
                    }
                }
            }
            if !progress {
                break;
            }
        }
        removed.iter().all(|&r| r)
    }
}

/// A simple directed cycle on user nodes, stored in canonical rotation
/// (smallest user id first, direction preserved).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserCycle {
    nodes: Vec<u32>,
}

impl UserCycle {
    /// Normalizes rotation; panics on duplicates or length < 2.
    pub fn new(nodes: Vec<u32>) -> Self {
        assert!(nodes.len() >= 2, "cycle length must be at least 2");
        let mut seen = BTreeSet::new();
        assert!(
            nodes.iter().all(|n| seen.insert(*n)),
            "cycle nodes must be distinct"
        );
        let min_pos = nodes
            .iter()
            .enumerate()
            .min_by_key(|(_, n)| **n)
            .map(|(i, _)| i)
            .unwrap();
        let mut rotated = Vec::with_capacity(nodes.len());
        rotated.extend_from_slice(&nodes[min_pos..]);
        rotated.extend_from_slice(&nodes[..min_pos]);
        UserCycle { nodes: rotated }
    }

    pub fn nodes(&self) -> &[u32] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Directed legs (n_1,n_2), ..., (n_K,n_1).
    pub fn legs(&self) -> Vec<(u32, u32)> {
        let k = self.nodes.len();
        (0..k)
            .map(|i| (self.nodes[i], self.nodes[(i + 1) % k]))
            .collect()
    }
}

impl fmt::Display for UserCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.nodes.iter().map(|n| n.to_string()).collect();
        write!(f, "[{}]", ids.join(","))
    }
}

/// Demand graph of a broadcast relay batch: packet (i,j) instances have
/// exactly one holder i (the source) and one wanter j (the destination).
/// Packet ids are assigned in row-major link order.
pub fn relay_demand_graph(weights: &WeightedCompressedGraph) -> DemandGraph {
    let n = weights.num_users();
    let mut have = vec![BTreeSet::new(); n as usize];
    let mut want = vec![BTreeSet::new(); n as usize];
    let mut next = 0u32;
    for i in 1..=n {
        for j in 1..=n {
            for _ in 0..weights.weight(i, j) {
                next += 1;
                have[i as usize - 1].insert(next);
                want[j as usize - 1].insert(next);
            }
        }
    }
    DemandGraph::build_with_packet_count(n, next, have, want)
        .expect("relay construction yields a valid graph")
}
