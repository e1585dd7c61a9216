//! Geometric ad hoc network model: node placement, symmetric radio links,
//! hop distances and the per-node power-level metric.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Member,
    Monitor,
    Dead,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Member => "member",
            Role::Monitor => "monitor",
            Role::Dead => "dead",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("node {0} is dead")]
    DeadNode(NodeId),
    #[error("invalid drain rates: member {member}, monitor {monitor}")]
    InvalidDrain { member: u64, monitor: u64 },
}

/// How initial battery levels are drawn, in integer energy units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyInit {
    Fixed(u64),
    /// Inclusive on both ends.
    Uniform { lo: u64, hi: u64 },
}

impl EnergyInit {
    fn sample(&self, rng: &mut impl Rng) -> u64 {
        match *self {
            EnergyInit::Fixed(v) => v,
            EnergyInit::Uniform { lo, hi } => rng.gen_range(lo..=hi),
        }
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        match *self {
            EnergyInit::Fixed(0) => Err(TopologyError::InvalidDimension(
                "fixed initial energy must be positive".into(),
            )),
            EnergyInit::Uniform { lo, hi } if lo == 0 || lo > hi => Err(
                TopologyError::InvalidDimension(format!("uniform energy range {lo}..{hi}")),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for EnergyInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyInit::Fixed(v) => write!(f, "fixed:{v}"),
            EnergyInit::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
        }
    }
}

/// Per-tick energy cost of each role.
///
/// Either both rates are zero (a frozen network) or
/// `0 < member < monitor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrainRates {
    pub member: u64,
    pub monitor: u64,
}

impl DrainRates {
    pub fn new(member: u64, monitor: u64) -> Result<Self, TopologyError> {
        let frozen = member == 0 && monitor == 0;
        if frozen || (member > 0 && monitor > member) {
            Ok(DrainRates { member, monitor })
        } else {
            Err(TopologyError::InvalidDrain { member, monitor })
        }
    }

    pub fn for_role(&self, role: Role) -> u64 {
        match role {
            Role::Member => self.member,
            Role::Monitor => self.monitor,
            Role::Dead => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: NodeId,
    pub position: (f64, f64),
    pub radio_range: f64,
    pub energy: u64,
    pub role: Role,
    pub drain: DrainRates,
}

impl NodeState {
    pub fn is_live(&self) -> bool {
        self.role != Role::Dead
    }

    /// Removes one tick's worth of energy for the current role, returning the
    /// amount actually drained. A node reaching zero becomes `Dead`.
    pub fn drain_tick(&mut self) -> u64 {
        if !self.is_live() {
            return 0;
        }
        let spent = self.drain.for_role(self.role).min(self.energy);
        self.energy -= spent;
        if self.energy == 0 {
            self.role = Role::Dead;
        }
        spent
    }
}

/// Supportable monitoring duration `energy / monitor_drain`, kept as an exact
/// ratio so orderings never depend on float rounding.
#[derive(Debug, Clone, Copy)]
pub struct PowerLevel {
    energy: u64,
    monitor_drain: u64,
}

impl PowerLevel {
    pub fn new(energy: u64, monitor_drain: u64) -> Self {
        PowerLevel { energy, monitor_drain }
    }

    /// Ticks of monitoring left; infinite when monitoring is free.
    pub fn ticks(&self) -> f64 {
        if self.monitor_drain == 0 {
            f64::INFINITY
        } else {
            self.energy as f64 / self.monitor_drain as f64
        }
    }

    pub fn meets(&self, threshold: f64) -> bool {
        if self.monitor_drain == 0 {
            return true;
        }
        self.energy as f64 >= threshold * self.monitor_drain as f64
    }
}

impl PartialEq for PowerLevel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for PowerLevel {}

impl PartialOrd for PowerLevel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PowerLevel {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.monitor_drain == 0, other.monitor_drain == 0) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => {
                let lhs = self.energy as u128 * other.monitor_drain as u128;
                let rhs = other.energy as u128 * self.monitor_drain as u128;
                lhs.cmp(&rhs)
            }
        }
    }
}

/// The power-level metric: how many ticks `node` could serve as a monitor.
pub fn supportable_duration(node: &NodeState) -> Result<PowerLevel, TopologyError> {
    if !node.is_live() || node.energy == 0 {
        return Err(TopologyError::DeadNode(node.id));
    }
    Ok(PowerLevel::new(node.energy, node.drain.monitor))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryParams {
    pub node_count: usize,
    pub area_side: f64,
    pub radio_range: f64,
    pub energy: EnergyInit,
    pub drain: DrainRates,
}

impl GeometryParams {
    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.node_count == 0 {
            return Err(TopologyError::InvalidDimension("node_count must be >= 1".into()));
        }
        if !(self.area_side.is_finite() && self.area_side > 0.0) {
            return Err(TopologyError::InvalidDimension(format!(
                "area_side must be positive, got {}",
                self.area_side
            )));
        }
        if !(self.radio_range.is_finite() && self.radio_range > 0.0) {
            return Err(TopologyError::InvalidDimension(format!(
                "radio_range must be positive, got {}",
                self.radio_range
            )));
        }
        self.energy.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<NodeState>,
    adjacency: Vec<Vec<NodeId>>,
}

pub fn euclidean(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Places `node_count` nodes uniformly in an `area_side` square.
pub fn build_geometric(params: &GeometryParams, seed: u64) -> Result<Topology, TopologyError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = (0..params.node_count)
        .map(|i| {
            let x = rng.gen_range(0.0..params.area_side);
            let y = rng.gen_range(0.0..params.area_side);
            let energy = params.energy.sample(&mut rng);
            NodeState {
                id: NodeId(i as u32),
                position: (x, y),
                radio_range: params.radio_range,
                energy,
                role: Role::Member,
                drain: params.drain,
            }
        })
        .collect();
    Ok(Topology::from_nodes(nodes))
}

impl Topology {
    /// Builds a topology from explicit node states. Ids must equal positions
    /// in the vector.
    pub fn from_nodes(mut nodes: Vec<NodeState>) -> Self {
        for (i, n) in nodes.iter_mut().enumerate() {
            n.id = NodeId(i as u32);
            if n.energy == 0 {
                n.role = Role::Dead;
            }
        }
        let mut t = Topology { adjacency: vec![Vec::new(); nodes.len()], nodes };
        t.refresh_links();
        t
    }

    fn linked(a: &NodeState, b: &NodeState) -> bool {
        a.is_live()
            && b.is_live()
            && euclidean(a.position, b.position) <= a.radio_range.min(b.radio_range)
    }

    /// Recomputes every link from positions, ranges and liveness.
    pub fn refresh_links(&mut self) {
        let n = self.nodes.len();
        let mut adjacency = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if Self::linked(&self.nodes[i], &self.nodes[j]) {
                    adjacency[i].push(NodeId(j as u32));
                    adjacency[j].push(NodeId(i as u32));
                }
            }
        }
        self.adjacency = adjacency;
    }

    /// Drops every link touching `id`. Call after a node dies.
    pub fn unlink(&mut self, id: NodeId) {
        let peers = std::mem::take(&mut self.adjacency[id.index()]);
        for p in peers {
            self.adjacency[p.index()].retain(|&q| q != id);
        }
    }

    /// Adds a node (a join event) and links it to its live neighbours.
    pub fn add_node(&mut self, position: (f64, f64), radio_range: f64, energy: u64, drain: DrainRates) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        let node = NodeState {
            id,
            position,
            radio_range,
            energy,
            role: if energy == 0 { Role::Dead } else { Role::Member },
            drain,
        };
        let mut links = Vec::new();
        for other in &self.nodes {
            if Self::linked(&node, other) {
                links.push(other.id);
                self.adjacency[other.id.index()].push(id);
            }
        }
        self.nodes.push(node);
        self.adjacency.push(links);
        id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn nodes_mut(&mut self) -> &mut [NodeState] {
        &mut self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&NodeState, TopologyError> {
        self.nodes.get(id.index()).ok_or(TopologyError::UnknownNode(id))
    }

    pub fn node_mut(&mut self, id: NodeId) -> Result<&mut NodeState, TopologyError> {
        self.nodes.get_mut(id.index()).ok_or(TopologyError::UnknownNode(id))
    }

    pub fn live_node(&self, id: NodeId) -> Result<&NodeState, TopologyError> {
        let n = self.node(id)?;
        if n.is_live() {
            Ok(n)
        } else {
            Err(TopologyError::DeadNode(id))
        }
    }

    pub fn live_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|n| n.is_live()).map(|n| n.id)
    }

    pub fn live_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_live()).count()
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id.index()]
    }

    pub fn link_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_linked(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency
            .get(a.index())
            .is_some_and(|adj| adj.contains(&b))
    }

    /// Hop distances from `source` to every node, bounded by `limit` hops.
    /// Unreached (or dead) nodes get `None`.
    pub fn bfs_hops(&self, source: NodeId, limit: Option<usize>) -> Result<Vec<Option<usize>>, TopologyError> {
        self.live_node(source)?;
        let mut dist = vec![None; self.nodes.len()];
        dist[source.index()] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u.index()].unwrap_or(0);
            if limit.is_some_and(|l| du >= l) {
                continue;
            }
            for &v in &self.adjacency[u.index()] {
                if dist[v.index()].is_none() {
                    dist[v.index()] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    /// Shortest path length in link hops; `None` when disconnected.
    pub fn hop_distance(&self, a: NodeId, b: NodeId) -> Result<Option<usize>, TopologyError> {
        self.live_node(b)?;
        Ok(self.bfs_hops(a, None)?[b.index()])
    }

    /// All live nodes other than `a` within `h` hops of it.
    pub fn neighbors_within(&self, a: NodeId, h: usize) -> Result<BTreeSet<NodeId>, TopologyError> {
        if h == 0 {
            return Err(TopologyError::InvalidDimension("hop radius must be >= 1".into()));
        }
        let dist = self.bfs_hops(a, Some(h))?;
        Ok(dist
            .iter()
            .enumerate()
            .filter(|&(i, d)| i != a.index() && d.is_some())
            .map(|(i, _)| NodeId(i as u32))
            .collect())
    }

    /// Connected components over live nodes, each sorted, ordered by smallest id.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        for start in self.live_ids() {
            if seen[start.index()] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[start.index()] = true;
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &v in &self.adjacency[u.index()] {
                    if !seen[v.index()] {
                        seen[v.index()] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort();
            out.push(comp);
        }
        out
    }

    /// Canonical text form, one node per line, used for determinism checks.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        for n in &self.nodes {
            let mut adj = self.adjacency[n.id.index()].clone();
            adj.sort();
            let adj: Vec<String> = adj.iter().map(|a| a.to_string()).collect();
            s.push_str(&format!(
                "{} {:?} {:?} {:?} {} {} {}/{} [{}]\n",
                n.id,
                n.position.0,
                n.position.1,
                n.radio_range,
                n.energy,
                n.role.as_str(),
                n.drain.member,
                n.drain.monitor,
                adj.join(",")
            ));
        }
        s
    }
}
