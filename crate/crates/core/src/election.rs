//! Power-aware monitor election.
//!
//! Candidates are the nodes whose CA parameter clears a threshold, ordered
//! best first (the POL). A working set (WS) grows along the POL one node at
//! a time, kept only when it represents more nodes; when the whole POL fails
//! to cover the network the hop radius grows and the WS restarts. The
//! elected monitors root clusters, and later power drops are handled inside
//! a cluster unless no member there can take over.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::topology::{supportable_duration, NodeId, PowerLevel, Topology, TopologyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElectionError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("no node meets the CA parameter threshold")]
    NoEligibleMonitors,
    #[error("node {0} sits in a component with no eligible monitor")]
    IsolatedIneligibleNode(NodeId),
    #[error("node {0} is not represented by the assignment")]
    IncompleteAssignment(NodeId),
    #[error("working set is empty")]
    EmptyWorkingSet,
    #[error("hop radius must be >= 1")]
    InvalidHopRadius,
}

/// The CA parameter of a node: its supportable monitoring duration.
///
/// This is the single place the election reads node fitness from; a
/// different score can be substituted here.
pub fn ca_parameter(t: &Topology, n: NodeId) -> Result<PowerLevel, ElectionError> {
    let node = t.live_node(n)?;
    Ok(supportable_duration(node)?)
}

/// Parameter-ordered list of eligible candidates, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct Pol {
    pub order: Vec<NodeId>,
    pub threshold: f64,
}

impl Pol {
    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }
}

/// Higher parameter first, then lower id.
fn better(t: &Topology, a: NodeId, b: NodeId) -> Result<bool, ElectionError> {
    let (pa, pb) = (ca_parameter(t, a)?, ca_parameter(t, b)?);
    Ok(pa > pb || (pa == pb && a < b))
}

pub fn build_pol(t: &Topology, threshold: f64) -> Pol {
    let mut scored: Vec<(PowerLevel, NodeId)> = t
        .live_ids()
        .filter_map(|id| ca_parameter(t, id).ok().map(|p| (p, id)))
        .filter(|(p, _)| p.meets(threshold))
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    Pol { order: scored.into_iter().map(|(_, id)| id).collect(), threshold }
}

/// Node id to the monitor it voted for.
pub type VoteMap = BTreeMap<NodeId, NodeId>;

/// Each live node votes for the best WS candidate within `h` hops. WS
/// members vote for themselves. Nodes with no candidate in reach are left out.
pub fn vote(t: &Topology, ws: &[NodeId], h: usize) -> Result<VoteMap, ElectionError> {
    let mut table = DistanceTable::default();
    vote_with(t, ws, h, &mut table)
}

/// Cached hop distances from candidate nodes.
#[derive(Default)]
struct DistanceTable {
    from: BTreeMap<NodeId, Vec<Option<usize>>>,
}

impl DistanceTable {
    fn get(&mut self, t: &Topology, src: NodeId) -> Result<&[Option<usize>], ElectionError> {
        match self.from.entry(src) {
            std::collections::btree_map::Entry::Occupied(e) => Ok(e.into_mut()),
            std::collections::btree_map::Entry::Vacant(e) => Ok(e.insert(t.bfs_hops(src, None)?)),
        }
    }
}

fn vote_with(t: &Topology, ws: &[NodeId], h: usize, table: &mut DistanceTable) -> Result<VoteMap, ElectionError> {
    if ws.is_empty() {
        return Err(ElectionError::EmptyWorkingSet);
    }
    if h == 0 {
        return Err(ElectionError::InvalidHopRadius);
    }
    let mut ranked: Vec<(PowerLevel, NodeId)> = ws
        .iter()
        .map(|&c| Ok((ca_parameter(t, c)?, c)))
        .collect::<Result<_, ElectionError>>()?;
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut votes = VoteMap::new();
    for &c in ws {
        votes.insert(c, c);
    }
    // best candidate first, so the first one to reach a node wins its vote
    for &(_, c) in &ranked {
        let dist = table.get(t, c)?;
        for (i, d) in dist.iter().enumerate() {
            if d.is_some_and(|d| d <= h) {
                votes.entry(NodeId(i as u32)).or_insert(c);
            }
        }
    }
    Ok(votes)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorAssignment {
    pub hop_radius: usize,
    pub monitors: BTreeSet<NodeId>,
    pub vote_map: VoteMap,
}

/// Bookkeeping from one run of [`select_monitors`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SelectionStats {
    pub votes: usize,
    pub extensions_kept: usize,
    pub extensions_rejected: usize,
    pub radius_increments: usize,
}

/// Elects monitors covering every live node.
pub fn select_monitors(t: &Topology, pol: &Pol, h0: usize) -> Result<MonitorAssignment, ElectionError> {
    select_monitors_with_stats(t, pol, h0).map(|(a, _)| a)
}

pub fn select_monitors_with_stats(
    t: &Topology,
    pol: &Pol,
    h0: usize,
) -> Result<(MonitorAssignment, SelectionStats), ElectionError> {
    if h0 == 0 {
        return Err(ElectionError::InvalidHopRadius);
    }
    if pol.is_empty() {
        return Err(ElectionError::NoEligibleMonitors);
    }
    let eligible: BTreeSet<NodeId> = pol.order.iter().copied().collect();
    let components = t.components();
    for comp in &components {
        if !comp.iter().any(|n| eligible.contains(n)) {
            return Err(ElectionError::IsolatedIneligibleNode(comp[0]));
        }
    }
    let live = t.live_count();
    // within a component no hop distance reaches its size
    let h_max = components.iter().map(Vec::len).max().unwrap_or(1).max(h0);

    let mut stats = SelectionStats::default();
    let mut table = DistanceTable::default();
    let mut h = h0;
    loop {
        let mut ws = vec![pol.order[0]];
        let mut votes = vote_with(t, &ws, h, &mut table)?;
        stats.votes += 1;
        for &next in &pol.order[1..] {
            if votes.len() == live {
                break;
            }
            ws.push(next);
            let extended = vote_with(t, &ws, h, &mut table)?;
            stats.votes += 1;
            if extended.len() > votes.len() {
                // a kept extension may only add represented nodes
                assert!(
                    votes.keys().all(|n| extended.contains_key(n)),
                    "working-set extension lost a represented node"
                );
                stats.extensions_kept += 1;
                votes = extended;
            } else {
                stats.extensions_rejected += 1;
                ws.pop();
            }
        }
        if votes.len() == live {
            let monitors = votes.values().copied().collect();
            return Ok((MonitorAssignment { hop_radius: h, monitors, vote_map: votes }, stats));
        }
        if h >= h_max {
            // every component holds a POL member, so this cannot happen
            let missing = t.live_ids().find(|n| !votes.contains_key(n)).expect("coverage incomplete");
            return Err(ElectionError::IsolatedIneligibleNode(missing));
        }
        h += 1;
        stats.radius_increments += 1;
    }
}

/// A monitor and the nodes it watches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub root: NodeId,
    pub members: BTreeSet<NodeId>,
    pub hop_radius: usize,
}

/// Splits the live nodes into one cluster per monitor, by vote.
pub fn form_clusters(t: &Topology, a: &MonitorAssignment) -> Result<Vec<Cluster>, ElectionError> {
    let mut by_root: BTreeMap<NodeId, Cluster> = a
        .monitors
        .iter()
        .map(|&m| (m, Cluster { root: m, members: BTreeSet::new(), hop_radius: a.hop_radius }))
        .collect();
    for n in t.live_ids() {
        let target = a.vote_map.get(&n).ok_or(ElectionError::IncompleteAssignment(n))?;
        let cluster = by_root.get_mut(target).ok_or(ElectionError::IncompleteAssignment(n))?;
        if *target != n {
            cluster.members.insert(n);
        }
    }
    Ok(by_root.into_values().collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReelectOutcome {
    /// The cluster has a new root. `stranded` nodes fell outside its hop
    /// radius and were removed from the cluster.
    Rerooted { cluster: Cluster, stranded: Vec<NodeId> },
    GlobalRerunNeeded,
}

/// Picks a new root from inside `c` when the current root can no longer
/// monitor. Reads only the nodes of `c`.
pub fn intra_cluster_reelect(t: &Topology, c: &Cluster, threshold: f64) -> Result<ReelectOutcome, ElectionError> {
    let mut best: Option<NodeId> = None;
    for &m in &c.members {
        let Ok(p) = ca_parameter(t, m) else { continue };
        if !p.meets(threshold) {
            continue;
        }
        if best.map_or(Ok(true), |b| better(t, m, b))? {
            best = Some(m);
        }
    }
    let Some(new_root) = best else {
        return Ok(ReelectOutcome::GlobalRerunNeeded);
    };
    let reach = t.bfs_hops(new_root, Some(c.hop_radius))?;
    let old_root_live = t.node(c.root).map(|n| n.is_live()).unwrap_or(false);
    let mut members = BTreeSet::new();
    let mut stranded = Vec::new();
    let candidates = c
        .members
        .iter()
        .copied()
        .chain(old_root_live.then_some(c.root))
        .filter(|&m| m != new_root && t.node(m).is_ok_and(|n| n.is_live()));
    for m in candidates {
        if reach[m.index()].is_some() {
            members.insert(m);
        } else {
            stranded.push(m);
        }
    }
    stranded.sort();
    Ok(ReelectOutcome::Rerooted {
        cluster: Cluster { root: new_root, members, hop_radius: c.hop_radius },
        stranded,
    })
}

/// Moves each stranded node to the nearest other cluster whose root is within
/// its hop radius (ties to the lower root id). Returns the node that no
/// cluster can take, if any; clusters are left unchanged in that case.
pub fn reassign_stranded(t: &Topology, clusters: &mut [Cluster], stranded: &[NodeId]) -> Result<Option<NodeId>, ElectionError> {
    let mut placements = Vec::new();
    for &s in stranded {
        let dist = t.bfs_hops(s, None)?;
        let target = clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.root != s && t.node(c.root).is_ok_and(|n| n.is_live()))
            .filter_map(|(i, c)| dist[c.root.index()].filter(|&d| d <= c.hop_radius).map(|d| (d, c.root, i)))
            .min();
        match target {
            Some((_, _, i)) => placements.push((i, s)),
            None => return Ok(Some(s)),
        }
    }
    for (i, s) in placements {
        clusters[i].members.insert(s);
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JoinOutcome {
    JoinLocal { monitor: NodeId },
    GlobalRerunNeeded,
}

/// Decides how a newly joined node enters the current election state.
pub fn handle_join(t: &Topology, new: NodeId, a: &MonitorAssignment) -> Result<JoinOutcome, ElectionError> {
    let p_new = ca_parameter(t, new)?;
    let live_monitors: Vec<NodeId> = a
        .monitors
        .iter()
        .copied()
        .filter(|&m| m != new && t.node(m).is_ok_and(|n| n.is_live()))
        .collect();
    let best_monitor = live_monitors.iter().filter_map(|&m| ca_parameter(t, m).ok()).max();
    if best_monitor.is_none_or(|b| p_new > b) {
        return Ok(JoinOutcome::GlobalRerunNeeded);
    }
    let dist = t.bfs_hops(new, Some(a.hop_radius))?;
    let nearest = live_monitors
        .iter()
        .filter_map(|&m| dist[m.index()].map(|d| (d, m)))
        .min();
    Ok(match nearest {
        Some((_, monitor)) => JoinOutcome::JoinLocal { monitor },
        None => JoinOutcome::GlobalRerunNeeded,
    })
}

/// Fraction of live nodes that are live roots, or members within hop radius
/// of their cluster's live root.
pub fn coverage_fraction(t: &Topology, clusters: &[Cluster]) -> f64 {
    let live = t.live_count();
    if live == 0 {
        return 1.0;
    }
    let mut covered = 0usize;
    for c in clusters {
        let Ok(reach) = t.bfs_hops(c.root, Some(c.hop_radius)) else { continue };
        covered += 1;
        covered += c
            .members
            .iter()
            .filter(|m| t.node(**m).is_ok_and(|n| n.is_live()) && reach[m.index()].is_some())
            .count();
    }
    covered as f64 / live as f64
}

/// True when every live node is within `hop_radius` of some monitor.
pub fn covers_all(t: &Topology, a: &MonitorAssignment) -> bool {
    let mut covered = BTreeSet::new();
    for &m in &a.monitors {
        if let Ok(reach) = t.bfs_hops(m, Some(a.hop_radius)) {
            covered.extend(reach.iter().enumerate().filter(|(_, d)| d.is_some()).map(|(i, _)| NodeId(i as u32)));
        }
    }
    t.live_ids().all(|n| covered.contains(&n))
}
