//! Tick-driven simulation of monitor election under battery drain.
//!
//! Each tick applies, in order: (1) energy drain and deaths, (2) delivery and
//! classification of scheduled events, (3) joins and elections, (4) the tick
//! record. The two protocol modes differ only in step (3): the clustered mode
//! re-roots a drained cluster from within, the baseline re-runs the whole
//! election whenever any monitor drops below threshold.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::classifier::{self, CaTree, ClassId, PatternVector, TreeConfig, NORMAL_CLASS};
use crate::dataset;
use crate::election::{
    self, build_pol, coverage_fraction, form_clusters, handle_join, intra_cluster_reelect, reassign_stranded,
    select_monitors, Cluster, ElectionError, JoinOutcome, MonitorAssignment, ReelectOutcome,
};
use crate::seed::{self, Stream};
use crate::topology::{build_geometric, GeometryParams, NodeId, Role, Topology, TopologyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Idfadnwca,
    SpaidBaseline,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Idfadnwca => "idfadnwca",
            Mode::SpaidBaseline => "spaid",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "idfadnwca" => Some(Mode::Idfadnwca),
            "spaid" => Some(Mode::SpaidBaseline),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A labelled pattern observed at `source` during `tick`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduledEvent {
    pub tick: u64,
    pub source: NodeId,
    pub pattern: PatternVector,
}

impl ScheduledEvent {
    pub fn truth(&self) -> ClassId {
        self.pattern.label.unwrap_or(NORMAL_CLASS)
    }
}

/// A node entering the network at `tick`.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinEvent {
    pub tick: u64,
    pub position: (f64, f64),
    pub energy: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub geometry: GeometryParams,
    /// Minimum CA parameter (ticks of monitoring) for candidacy.
    pub threshold: f64,
    pub hop_radius: usize,
    pub mode: Mode,
    pub ticks: u64,
    pub seed: u64,
    pub pattern_bits: usize,
    pub train_size: usize,
    /// Chance per tick of a generated event.
    pub event_rate: f64,
    /// Share of generated events that are intrusions.
    pub intrusion_fraction: f64,
    pub events: Vec<ScheduledEvent>,
    pub joins: Vec<JoinEvent>,
    /// The GA seed here is ignored; it is derived from `seed`.
    pub tree: TreeConfig,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Classifier(#[from] classifier::ClassifierError),
    #[error(transparent)]
    Election(#[from] ElectionError),
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        self.geometry.validate()?;
        if self.ticks == 0 {
            return bad("ticks must be >= 1".into());
        }
        if self.hop_radius == 0 {
            return bad("hop_radius must be >= 1".into());
        }
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return bad("threshold must be a finite value >= 0".into());
        }
        if !(2..=crate::ca_engine::MAX_ENUMERABLE).contains(&self.pattern_bits) {
            return bad(format!("pattern_bits must lie in 2..={}", crate::ca_engine::MAX_ENUMERABLE));
        }
        if self.train_size == 0 {
            return bad("train_size must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.event_rate) {
            return bad("event_rate must lie in [0,1]".into());
        }
        if !(0.0..=1.0).contains(&self.intrusion_fraction) {
            return bad("intrusion_fraction must lie in [0,1]".into());
        }
        let node_limit = self.geometry.node_count + self.joins.len();
        for e in &self.events {
            if e.tick == 0 || e.tick > self.ticks {
                return bad(format!("event tick {} outside 1..={}", e.tick, self.ticks));
            }
            if e.source.index() >= node_limit {
                return bad(format!("event source {} does not exist", e.source));
            }
            if e.pattern.len() != self.pattern_bits {
                return bad(format!("event pattern has {} bits, expected {}", e.pattern.len(), self.pattern_bits));
            }
        }
        for j in &self.joins {
            if j.tick == 0 || j.tick > self.ticks {
                return bad(format!("join tick {} outside 1..={}", j.tick, self.ticks));
            }
            if !(j.position.0.is_finite() && j.position.1.is_finite()) || j.energy == 0 {
                return bad("join needs a finite position and positive energy".into());
            }
        }
        self.tree.ga.validate().map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        if self.tree.k < 2 {
            return bad("tree_k must be >= 2".into());
        }
        if !(0.0..=1.0).contains(&self.tree.purity_stop) {
            return bad("tree_purity_stop must lie in [0,1]".into());
        }
        Ok(())
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        ScenarioConfig { mode, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ScenarioConfig { seed, ..self.clone() }
    }

    /// Tree settings with the GA seed drawn from the scenario seed.
    pub fn resolved_tree(&self) -> TreeConfig {
        let mut tree = self.tree.clone();
        tree.ga.seed = seed::sub_seed(self.seed, Stream::Ga);
        tree
    }

    /// The classifier's training split.
    pub fn training_set(&self) -> Vec<PatternVector> {
        let mut rng = seed::rng(seed::sub_seed(self.seed, Stream::Dataset));
        dataset::two_cluster(self.train_size, self.pattern_bits, &mut rng)
    }

    /// Explicit events plus generated ones, ordered by tick.
    pub fn schedule(&self) -> Vec<ScheduledEvent> {
        let mut rng = seed::rng(seed::sub_seed(self.seed, Stream::Schedule));
        let mut out = self.events.clone();
        for tick in 1..=self.ticks {
            if self.event_rate > 0.0 && rng.gen_bool(self.event_rate) {
                let source = NodeId(rng.gen_range(0..self.geometry.node_count) as u32);
                let class = ClassId::from(rng.gen_bool(self.intrusion_fraction));
                let pattern = dataset::two_cluster_pattern(self.pattern_bits, class, &mut rng);
                out.push(ScheduledEvent { tick, source, pattern });
            }
        }
        out.sort_by_key(|e| e.tick);
        out
    }
}

/// What a monitor made of one event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detection {
    Alert(ClassId),
    Miss,
}

/// The monitor of the source's cluster classifies the pattern; an event from
/// a node outside every live-rooted cluster is missed.
pub fn detect(
    t: &Topology,
    clusters: &[Cluster],
    tree: &CaTree,
    source: NodeId,
    pattern: &PatternVector,
) -> Result<Detection, SimError> {
    let cluster = clusters.iter().find(|c| c.root == source || c.members.contains(&source));
    let Some(cluster) = cluster else { return Ok(Detection::Miss) };
    if !t.node(cluster.root).is_ok_and(|n| n.is_live()) {
        return Ok(Detection::Miss);
    }
    Ok(Detection::Alert(tree.classify(pattern)?))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DetectionCounts {
    pub true_positive: u64,
    pub false_positive: u64,
    pub true_negative: u64,
    pub false_negative: u64,
    pub misses: u64,
    /// Events whose source was dead at delivery time.
    pub dropped: u64,
}

impl DetectionCounts {
    pub fn record(&mut self, detection: Detection, truth: ClassId) {
        let intrusion = truth != NORMAL_CLASS;
        match detection {
            Detection::Miss => {
                self.misses += 1;
                // no alert on normal traffic is the right outcome
                if intrusion {
                    self.false_negative += 1;
                } else {
                    self.true_negative += 1;
                }
            }
            Detection::Alert(pred) => match (pred != NORMAL_CLASS, intrusion) {
                (true, true) => self.true_positive += 1,
                (true, false) => self.false_positive += 1,
                (false, false) => self.true_negative += 1,
                (false, true) => self.false_negative += 1,
            },
        }
    }

    pub fn add(&mut self, other: &DetectionCounts) {
        self.true_positive += other.true_positive;
        self.false_positive += other.false_positive;
        self.true_negative += other.true_negative;
        self.false_negative += other.false_negative;
        self.misses += other.misses;
        self.dropped += other.dropped;
    }

    pub fn delivered(&self) -> u64 {
        self.true_positive + self.false_positive + self.true_negative + self.false_negative
    }

    pub fn accuracy(&self) -> Option<f64> {
        let n = self.delivered();
        (n > 0).then(|| (self.true_positive + self.true_negative) as f64 / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElectionEvent {
    /// A cluster re-rooted from within.
    IntraCluster {
        old_root: NodeId,
        new_root: NodeId,
        role_changes: usize,
        stranded: usize,
    },
    FullRerun { cause: RerunCause },
    Join { node: NodeId, local: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RerunCause {
    /// Baseline: some monitor fell below threshold.
    MonitorDrained,
    /// No member of a drained cluster qualifies as root.
    NoClusterCandidate,
    /// A re-rooted cluster stranded a node no other monitor can take.
    StrandedMember,
    Join,
}

impl RerunCause {
    pub fn as_str(self) -> &'static str {
        match self {
            RerunCause::MonitorDrained => "monitor_drained",
            RerunCause::NoClusterCandidate => "no_cluster_candidate",
            RerunCause::StrandedMember => "stranded_member",
            RerunCause::Join => "join",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub tick: u64,
    pub energies: Vec<u64>,
    pub roles: Vec<Role>,
    pub monitor_energy: u64,
    pub cumulative_monitor_energy: u64,
    pub drained_energy: u64,
    pub cumulative_drained_energy: u64,
    pub elections: Vec<ElectionEvent>,
    pub detections: DetectionCounts,
    pub coverage: f64,
}

impl TickRecord {
    pub fn live_nodes(&self) -> usize {
        self.roles.iter().filter(|r| **r != Role::Dead).count()
    }

    pub fn monitors(&self) -> usize {
        self.roles.iter().filter(|r| **r == Role::Monitor).count()
    }

    pub fn full_reruns(&self) -> usize {
        self.elections.iter().filter(|e| matches!(e, ElectionEvent::FullRerun { .. })).count()
    }

    pub fn intra_cluster(&self) -> usize {
        self.elections.iter().filter(|e| matches!(e, ElectionEvent::IntraCluster { .. })).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalState {
    Completed,
    NoEligibleMonitors { tick: u64 },
    IsolatedIneligibleNode { tick: u64, node: NodeId },
}

impl fmt::Display for TerminalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerminalState::Completed => write!(f, "completed"),
            TerminalState::NoEligibleMonitors { tick } => write!(f, "no_eligible_monitors@{tick}"),
            TerminalState::IsolatedIneligibleNode { tick, node } => {
                write!(f, "isolated_ineligible_node@{tick}:{node}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub mode: Mode,
    pub seed: u64,
    pub ticks_completed: u64,
    pub initial_monitors: usize,
    pub initial_hop_radius: usize,
    pub total_monitoring_energy: u64,
    pub total_drained_energy: u64,
    pub full_reruns: u64,
    pub intra_cluster_reelections: u64,
    pub joins: u64,
    pub mean_coverage: f64,
    pub detections: DetectionCounts,
    pub detection_accuracy: Option<f64>,
    pub training_accuracy: f64,
    pub final_live_nodes: usize,
    /// Step-8 events that changed more roles than old root, new root and
    /// stranded members account for. Always zero unless the protocol is broken.
    pub locality_violations: u64,
    pub terminal: TerminalState,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub records: Vec<TickRecord>,
    /// Election state right after tick 0.
    pub initial_assignment: Option<MonitorAssignment>,
    pub initial_energy: u64,
}

impl RunOutput {
    /// `(tick, cumulative monitoring energy)`, tick 0 included.
    pub fn energy_series(&self) -> Vec<(u64, u64)> {
        std::iter::once((0, 0))
            .chain(self.records.iter().map(|r| (r.tick, r.cumulative_monitor_energy)))
            .collect()
    }
}

struct World {
    topology: Topology,
    clusters: Vec<Cluster>,
    hop_radius: usize,
}

impl World {
    fn apply_roles(&mut self) {
        let roots: BTreeSet<NodeId> = self.clusters.iter().map(|c| c.root).collect();
        for n in self.topology.nodes_mut() {
            if n.is_live() {
                n.role = if roots.contains(&n.id) { Role::Monitor } else { Role::Member };
            }
        }
    }

    fn full_election(&mut self, threshold: f64, h0: usize) -> Result<MonitorAssignment, ElectionError> {
        let pol = build_pol(&self.topology, threshold);
        let a = select_monitors(&self.topology, &pol, h0)?;
        self.clusters = form_clusters(&self.topology, &a)?;
        self.hop_radius = a.hop_radius;
        self.apply_roles();
        Ok(a)
    }

    fn assignment_view(&self) -> MonitorAssignment {
        let mut vote_map = election::VoteMap::new();
        for c in &self.clusters {
            vote_map.insert(c.root, c.root);
            for &m in &c.members {
                vote_map.insert(m, c.root);
            }
        }
        MonitorAssignment {
            hop_radius: self.hop_radius,
            monitors: self.clusters.iter().map(|c| c.root).collect(),
            vote_map,
        }
    }

    fn root_needs_replacing(&self, c: &Cluster, threshold: f64) -> bool {
        match election::ca_parameter(&self.topology, c.root) {
            Ok(p) => !p.meets(threshold),
            Err(_) => true,
        }
    }

    fn roles(&self) -> Vec<Role> {
        self.topology.nodes().iter().map(|n| n.role).collect()
    }
}

fn terminal_for(err: &ElectionError, tick: u64) -> Option<TerminalState> {
    match err {
        ElectionError::NoEligibleMonitors => Some(TerminalState::NoEligibleMonitors { tick }),
        ElectionError::IsolatedIneligibleNode(node) => Some(TerminalState::IsolatedIneligibleNode { tick, node: *node }),
        _ => None,
    }
}

/// Trains the scenario's classifier.
pub fn train_classifier(cfg: &ScenarioConfig) -> Result<(CaTree, f64), SimError> {
    let train = cfg.training_set();
    let tree = classifier::build_tree(&train, &cfg.resolved_tree())?;
    let acc = tree.accuracy(&train)?;
    Ok((tree, acc))
}

pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, SimError> {
    cfg.validate()?;
    let (tree, training_accuracy) = train_classifier(cfg)?;
    run_with_classifier(cfg, &tree, training_accuracy)
}

/// Runs the scenario with an already trained classifier.
pub fn run_with_classifier(cfg: &ScenarioConfig, tree: &CaTree, training_accuracy: f64) -> Result<RunOutput, SimError> {
    cfg.validate()?;
    if tree.lattice_size != cfg.pattern_bits {
        return Err(SimError::InvalidConfig(format!(
            "classifier lattice {} differs from pattern_bits {}",
            tree.lattice_size, cfg.pattern_bits
        )));
    }
    let topology = build_geometric(&cfg.geometry, seed::sub_seed(cfg.seed, Stream::Topology))?;
    let mut initial_energy: u64 = topology.nodes().iter().map(|n| n.energy).sum();
    let mut world = World { topology, clusters: Vec::new(), hop_radius: cfg.hop_radius };
    let schedule = cfg.schedule();
    let mut next_event = 0usize;
    let mut next_join = 0usize;
    let mut joins = cfg.joins.clone();
    joins.sort_by_key(|j| j.tick);

    let mut summary = RunSummary {
        mode: cfg.mode,
        seed: cfg.seed,
        ticks_completed: 0,
        initial_monitors: 0,
        initial_hop_radius: 0,
        total_monitoring_energy: 0,
        total_drained_energy: 0,
        full_reruns: 0,
        intra_cluster_reelections: 0,
        joins: 0,
        mean_coverage: 0.0,
        detections: DetectionCounts::default(),
        detection_accuracy: None,
        training_accuracy,
        final_live_nodes: world.topology.live_count(),
        locality_violations: 0,
        terminal: TerminalState::Completed,
    };
    let mut records = Vec::new();

    let initial_assignment = match world.full_election(cfg.threshold, cfg.hop_radius) {
        Ok(a) => {
            summary.initial_monitors = a.monitors.len();
            summary.initial_hop_radius = a.hop_radius;
            Some(a)
        }
        Err(e) => match terminal_for(&e, 0) {
            Some(state) => {
                summary.terminal = state;
                return Ok(RunOutput { summary, records, initial_assignment: None, initial_energy });
            }
            None => return Err(e.into()),
        },
    };

    let mut cumulative_monitor = 0u64;
    let mut cumulative_drained = 0u64;
    let mut coverage_sum = 0.0;

    for tick in 1..=cfg.ticks {
        // (1) drain
        let mut monitor_energy = 0u64;
        let mut drained = 0u64;
        let mut died = Vec::new();
        for n in world.topology.nodes_mut() {
            let was_monitor = n.role == Role::Monitor;
            let spent = n.drain_tick();
            drained += spent;
            if was_monitor {
                monitor_energy += spent;
            }
            if spent > 0 && !n.is_live() {
                died.push(n.id);
            }
        }
        for &d in &died {
            world.topology.unlink(d);
            for c in &mut world.clusters {
                c.members.remove(&d);
            }
        }
        cumulative_monitor += monitor_energy;
        cumulative_drained += drained;

        // (2) detection
        let mut detections = DetectionCounts::default();
        while next_event < schedule.len() && schedule[next_event].tick == tick {
            let ev = &schedule[next_event];
            next_event += 1;
            if !world.topology.node(ev.source).is_ok_and(|n| n.is_live()) {
                detections.dropped += 1;
                continue;
            }
            let d = detect(&world.topology, &world.clusters, tree, ev.source, &ev.pattern)?;
            detections.record(d, ev.truth());
        }

        // (3) joins and elections
        let mut elections = Vec::new();
        let mut rerun: Option<RerunCause> = None;
        while next_join < joins.len() && joins[next_join].tick == tick {
            let j = &joins[next_join];
            next_join += 1;
            let id = world.topology.add_node(j.position, cfg.geometry.radio_range, j.energy, cfg.geometry.drain);
            initial_energy += j.energy;
            summary.joins += 1;
            let outcome = handle_join(&world.topology, id, &world.assignment_view())?;
            match outcome {
                JoinOutcome::JoinLocal { monitor } => {
                    if let Some(c) = world.clusters.iter_mut().find(|c| c.root == monitor) {
                        c.members.insert(id);
                    }
                    elections.push(ElectionEvent::Join { node: id, local: true });
                }
                JoinOutcome::GlobalRerunNeeded => {
                    elections.push(ElectionEvent::Join { node: id, local: false });
                    rerun.get_or_insert(RerunCause::Join);
                }
            }
        }

        if rerun.is_none() {
            match cfg.mode {
                Mode::SpaidBaseline => {
                    if world.clusters.iter().any(|c| world.root_needs_replacing(c, cfg.threshold)) {
                        rerun = Some(RerunCause::MonitorDrained);
                    }
                }
                Mode::Idfadnwca => {
                    rerun = step_eight(&mut world, cfg.threshold, &mut elections, &mut summary)?;
                }
            }
        }

        let mut terminal = None;
        if let Some(cause) = rerun {
            match world.full_election(cfg.threshold, cfg.hop_radius) {
                Ok(_) => {
                    summary.full_reruns += 1;
                    elections.push(ElectionEvent::FullRerun { cause });
                }
                Err(e) => match terminal_for(&e, tick) {
                    Some(state) => terminal = Some(state),
                    None => return Err(e.into()),
                },
            }
        }

        // (4) record
        let coverage = if terminal.is_some() { 0.0 } else { coverage_fraction(&world.topology, &world.clusters) };
        coverage_sum += coverage;
        summary.detections.add(&detections);
        records.push(TickRecord {
            tick,
            energies: world.topology.nodes().iter().map(|n| n.energy).collect(),
            roles: world.roles(),
            monitor_energy,
            cumulative_monitor_energy: cumulative_monitor,
            drained_energy: drained,
            cumulative_drained_energy: cumulative_drained,
            elections,
            detections,
            coverage,
        });
        summary.ticks_completed = tick;
        if let Some(state) = terminal {
            summary.terminal = state;
            break;
        }
    }

    summary.total_monitoring_energy = cumulative_monitor;
    summary.total_drained_energy = cumulative_drained;
    summary.mean_coverage = if records.is_empty() { 0.0 } else { coverage_sum / records.len() as f64 };
    summary.detection_accuracy = summary.detections.accuracy();
    summary.final_live_nodes = world.topology.live_count();
    Ok(RunOutput { summary, records, initial_assignment, initial_energy })
}

/// In-cluster replacement of every drained root. Returns the reason a full
/// election is needed, if one is.
fn step_eight(
    world: &mut World,
    threshold: f64,
    elections: &mut Vec<ElectionEvent>,
    summary: &mut RunSummary,
) -> Result<Option<RerunCause>, SimError> {
    for i in 0..world.clusters.len() {
        if !world.root_needs_replacing(&world.clusters[i], threshold) {
            continue;
        }
        let before = world.roles();
        let old_root = world.clusters[i].root;
        match intra_cluster_reelect(&world.topology, &world.clusters[i], threshold)? {
            ReelectOutcome::GlobalRerunNeeded => return Ok(Some(RerunCause::NoClusterCandidate)),
            ReelectOutcome::Rerooted { cluster, stranded } => {
                let new_root = cluster.root;
                world.clusters[i] = cluster;
                if let Some(n) = world.topology.node_mut(old_root).ok().filter(|n| n.is_live()) {
                    n.role = Role::Member;
                }
                world.topology.node_mut(new_root)?.role = Role::Monitor;
                let unplaced = reassign_stranded(&world.topology, &mut world.clusters, &stranded)?;

                let after = world.roles();
                let role_changes = before.iter().zip(&after).filter(|(a, b)| a != b).count();
                if role_changes > 2 + stranded.len() {
                    summary.locality_violations += 1;
                }
                debug_assert!(role_changes <= 2 + stranded.len(), "re-election at {old_root} touched {role_changes} roles");
                summary.intra_cluster_reelections += 1;
                elections.push(ElectionEvent::IntraCluster {
                    old_root,
                    new_root,
                    role_changes,
                    stranded: stranded.len(),
                });
                if unplaced.is_some() {
                    return Ok(Some(RerunCause::StrandedMember));
                }
            }
        }
    }
    Ok(None)
}

/// Paired per-seed results for two modes.
#[derive(Debug, Clone)]
pub struct SeedComparison {
    pub seed: u64,
    pub first: RunSummary,
    pub second: RunSummary,
    pub first_series: Vec<(u64, u64)>,
    pub second_series: Vec<(u64, u64)>,
}

impl SeedComparison {
    pub fn energy_delta(&self) -> i128 {
        self.first.total_monitoring_energy as i128 - self.second.total_monitoring_energy as i128
    }

    pub fn rerun_delta(&self) -> i64 {
        self.first.full_reruns as i64 - self.second.full_reruns as i64
    }

    pub fn coverage_delta(&self) -> f64 {
        self.first.mean_coverage - self.second.mean_coverage
    }
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub first_mode: Mode,
    pub second_mode: Mode,
    pub seeds: Vec<SeedComparison>,
}

impl CompareReport {
    fn mean<T: Into<f64>>(&self, f: impl Fn(&SeedComparison) -> T) -> f64 {
        if self.seeds.is_empty() {
            return 0.0;
        }
        self.seeds.iter().map(|s| f(s).into()).sum::<f64>() / self.seeds.len() as f64
    }

    pub fn mean_energy_delta(&self) -> f64 {
        self.mean(|s| s.energy_delta() as f64)
    }

    pub fn mean_rerun_delta(&self) -> f64 {
        self.mean(|s| s.rerun_delta() as f64)
    }

    pub fn mean_coverage_delta(&self) -> f64 {
        self.mean(|s| s.coverage_delta())
    }

    pub fn mean_first_reruns(&self) -> f64 {
        self.mean(|s| s.first.full_reruns as f64)
    }

    pub fn mean_second_reruns(&self) -> f64 {
        self.mean(|s| s.second.full_reruns as f64)
    }

    /// Seeds where the first mode needed no more full reruns than the second.
    pub fn seeds_first_not_worse(&self) -> usize {
        self.seeds.iter().filter(|s| s.first.full_reruns <= s.second.full_reruns).count()
    }
}

/// Runs `first` and `second` on identical topologies and schedules per seed.
pub fn compare_modes(cfg: &ScenarioConfig, seeds: &[u64], first: Mode, second: Mode) -> Result<CompareReport, SimError> {
    if seeds.is_empty() {
        return Err(SimError::InvalidConfig("compare needs at least one seed".into()));
    }
    let mut out = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let seeded = cfg.with_seed(s);
        seeded.validate()?;
        let (tree, acc) = train_classifier(&seeded)?;
        let a = run_with_classifier(&seeded.with_mode(first), &tree, acc)?;
        let b = run_with_classifier(&seeded.with_mode(second), &tree, acc)?;
        out.push(SeedComparison {
            seed: s,
            first_series: a.energy_series(),
            second_series: b.energy_series(),
            first: a.summary,
            second: b.summary,
        });
    }
    Ok(CompareReport { first_mode: first, second_mode: second, seeds: out })
}

/// Clustered protocol against the whole-topology baseline.
pub fn compare(cfg: &ScenarioConfig, seeds: &[u64]) -> Result<CompareReport, SimError> {
    compare_modes(cfg, seeds, Mode::Idfadnwca, Mode::SpaidBaseline)
}
