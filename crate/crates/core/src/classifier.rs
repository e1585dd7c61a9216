//! Inverted tree of CA classifiers over attractor basins.
//!
//! Each internal node holds an automaton found by the GA. A pattern is
//! evolved to its attractor; the attractor picks the child. Impure basins
//! get their own child automaton, so the most specific splits sit nearest
//! the leaves.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::ca_engine::{evolve_to_attractor, Automaton, BinaryLattice, CaError, CaRule, DependencyMatrix, MAX_ENUMERABLE};
use crate::ga_evolve::{self, Encoding, GaConfig, GaError};
use crate::seed;

pub type ClassId = u32;

/// Class 0 is normal traffic; every other class is an intrusion.
pub const NORMAL_CLASS: ClassId = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("attribute arity mismatch: {attributes} attributes, {thresholds} threshold lists")]
    ArityMismatch { attributes: usize, thresholds: usize },
    #[error("thresholds for attribute {0} are not ascending")]
    UnorderedThresholds(usize),
    #[error("empty distribution")]
    EmptyDistribution,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("basin target k must be >= 2, got {0}")]
    BasinTarget(usize),
    #[error("pattern length {got} does not match lattice size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("training pattern {0} has no label")]
    Unlabelled(usize),
    #[error("invalid tree config: {0}")]
    InvalidConfig(String),
    #[error("tree format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Ca(#[from] CaError),
    #[error(transparent)]
    Ga(#[from] GaError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternVector {
    cells: BinaryLattice,
    pub label: Option<ClassId>,
}

impl PatternVector {
    pub fn new(cells: BinaryLattice, label: Option<ClassId>) -> Self {
        PatternVector { cells, label }
    }

    pub fn parse(bits: &str, label: Option<ClassId>) -> Result<Self, CaError> {
        Ok(PatternVector { cells: BinaryLattice::parse(bits)?, label })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn packed(&self) -> u32 {
        self.cells.packed()
    }

    pub fn cells(&self) -> &BinaryLattice {
        &self.cells
    }
}

/// Thermometer-codes each attribute against its ascending cut points:
/// one bit per cut, set when the value is at or above the cut.
pub fn encode_pattern(raw: &[f64], thresholds: &[Vec<f64>]) -> Result<PatternVector, ClassifierError> {
    if raw.len() != thresholds.len() {
        return Err(ClassifierError::ArityMismatch {
            attributes: raw.len(),
            thresholds: thresholds.len(),
        });
    }
    let mut bits = Vec::new();
    for (i, (&v, cuts)) in raw.iter().zip(thresholds).enumerate() {
        if cuts.windows(2).any(|w| w[0] > w[1]) {
            return Err(ClassifierError::UnorderedThresholds(i));
        }
        bits.extend(cuts.iter().map(|&c| v >= c));
    }
    Ok(PatternVector::new(BinaryLattice::new(bits)?, None))
}

/// Class histograms per attractor basin.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BasinDistribution {
    basins: BTreeMap<u32, BTreeMap<ClassId, usize>>,
}

impl BasinDistribution {
    pub fn from_routed(routed: impl IntoIterator<Item = (u32, ClassId)>) -> Self {
        let mut d = BasinDistribution::default();
        for (basin, class) in routed {
            d.add(basin, class, 1);
        }
        d
    }

    pub fn add(&mut self, basin: u32, class: ClassId, count: usize) {
        if count > 0 {
            *self.basins.entry(basin).or_default().entry(class).or_default() += count;
        }
    }

    pub fn total(&self) -> usize {
        self.basins.values().flat_map(|h| h.values()).sum()
    }

    pub fn occupied_basins(&self) -> usize {
        self.basins.len()
    }

    pub fn histogram(&self, basin: u32) -> Option<&BTreeMap<ClassId, usize>> {
        self.basins.get(&basin)
    }

    /// Weighted mean over basins of majority-class share; 1.0 when every
    /// basin is pure.
    pub fn relevance_index(&self) -> Result<f64, ClassifierError> {
        let total = self.total();
        if total == 0 {
            return Err(ClassifierError::EmptyDistribution);
        }
        let majority: usize = self
            .basins
            .values()
            .map(|h| h.values().copied().max().unwrap_or(0))
            .sum();
        Ok(majority as f64 / total as f64)
    }
}

pub fn relevance_index(d: &BasinDistribution) -> Result<f64, ClassifierError> {
    d.relevance_index()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    /// Preferred number of occupied basins per node.
    pub k: usize,
    pub depth_limit: usize,
    pub purity_stop: f64,
    pub ga: GaConfig,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { k: 2, depth_limit: 4, purity_stop: 0.95, ga: GaConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaTreeNode {
    Leaf { class: ClassId },
    Internal {
        automaton: Automaton,
        majority: ClassId,
        children: BTreeMap<u32, CaTreeNode>,
    },
}

impl CaTreeNode {
    fn depth(&self) -> usize {
        match self {
            CaTreeNode::Leaf { .. } => 0,
            CaTreeNode::Internal { children, .. } => {
                1 + children.values().map(CaTreeNode::depth).max().unwrap_or(0)
            }
        }
    }

    fn count(&self) -> usize {
        match self {
            CaTreeNode::Leaf { .. } => 1,
            CaTreeNode::Internal { children, .. } => 1 + children.values().map(CaTreeNode::count).sum::<usize>(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaTree {
    pub root: CaTreeNode,
    pub lattice_size: usize,
    pub depth_limit: usize,
    pub class_count: usize,
}

fn majority_class(hist: &BTreeMap<ClassId, usize>) -> ClassId {
    // max count, ties to the lowest class id
    hist.iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&c, _)| c)
        .unwrap_or(NORMAL_CLASS)
}

fn attractor_id(automaton: &Automaton, state: u32, n: usize) -> Result<u32, CaError> {
    let a = evolve_to_attractor(|s: &u32| automaton.step_packed(*s, n), state, (1usize << n) + 1)?;
    Ok(a.id)
}

struct Builder<'a> {
    config: &'a TreeConfig,
    n: usize,
    next_node: u64,
    histories: Vec<Vec<f64>>,
}

impl Builder<'_> {
    fn build(&mut self, patterns: &[&PatternVector], depth: usize) -> Result<CaTreeNode, ClassifierError> {
        let node_index = self.next_node;
        self.next_node += 1;

        let mut hist = BTreeMap::new();
        for p in patterns {
            *hist.entry(p.label.unwrap_or(NORMAL_CLASS)).or_insert(0usize) += 1;
        }
        let majority = majority_class(&hist);
        if hist.len() <= 1 || depth >= self.config.depth_limit {
            return Ok(CaTreeNode::Leaf { class: majority });
        }

        let owned: Vec<PatternVector> = patterns.iter().map(|&p| p.clone()).collect();
        let ga = GaConfig { seed: seed::mix(self.config.ga.seed, node_index), ..self.config.ga.clone() };
        let outcome = ga_evolve::evolve(&ga, &owned)?;
        self.histories.push(outcome.history.clone());

        // Among the best-scoring pool, prefer the automaton whose occupied
        // basin count is closest to k.
        let top = outcome.best.fitness.unwrap_or(0.0);
        let mut chosen: Option<(usize, usize, Automaton)> = None;
        for c in outcome.population.iter().filter(|c| c.fitness == Some(top)) {
            let automaton = ga.encoding.decode(&c.genome)?;
            let occupied = ga_evolve::induced_distribution(&automaton, &owned)?.occupied_basins();
            let key = (occupied.abs_diff(self.config.k), occupied, automaton);
            if chosen.as_ref().is_none_or(|best| key < *best) {
                chosen = Some(key);
            }
        }
        let automaton = chosen.expect("population is nonempty").2;
        let basins = automaton.basins(self.n)?;

        let mut groups: BTreeMap<u32, Vec<&PatternVector>> = BTreeMap::new();
        for &p in patterns {
            groups.entry(basins.attractor_of(p.packed())).or_default().push(p);
        }
        let dist = BasinDistribution::from_routed(
            patterns.iter().map(|p| (basins.attractor_of(p.packed()), p.label.unwrap_or(NORMAL_CLASS))),
        );
        let settled = dist.relevance_index()? >= self.config.purity_stop;

        let mut children = BTreeMap::new();
        for (basin, group) in groups {
            let child = if settled || group.len() == patterns.len() {
                let h = dist.histogram(basin).expect("basin was routed");
                CaTreeNode::Leaf { class: majority_class(h) }
            } else {
                self.build(&group, depth + 1)?
            };
            children.insert(basin, child);
        }
        Ok(CaTreeNode::Internal { automaton, majority, children })
    }
}

/// Trains an inverted CA tree on labelled patterns.
pub fn build_tree(train: &[PatternVector], config: &TreeConfig) -> Result<CaTree, ClassifierError> {
    build_tree_traced(train, config).map(|(tree, _)| tree)
}

/// Like [`build_tree`], also returning the best-fitness history of every GA
/// run, in the order the internal nodes were searched.
pub fn build_tree_traced(
    train: &[PatternVector],
    config: &TreeConfig,
) -> Result<(CaTree, Vec<Vec<f64>>), ClassifierError> {
    let first = train.first().ok_or(ClassifierError::EmptyTrainingSet)?;
    if config.k < 2 {
        return Err(ClassifierError::BasinTarget(config.k));
    }
    if !(0.0..=1.0).contains(&config.purity_stop) {
        return Err(ClassifierError::InvalidConfig("purity_stop must lie in [0,1]".into()));
    }
    let n = first.len();
    if n > MAX_ENUMERABLE {
        return Err(CaError::LatticeTooLarge(n).into());
    }
    if let Encoding::Matrix { n: m } = config.ga.encoding {
        if m != n {
            return Err(ClassifierError::InvalidConfig(format!(
                "matrix encoding size {m} differs from pattern length {n}"
            )));
        }
    }
    for (i, p) in train.iter().enumerate() {
        if p.len() != n {
            return Err(ClassifierError::LengthMismatch { expected: n, got: p.len() });
        }
        if p.label.is_none() {
            return Err(ClassifierError::Unlabelled(i));
        }
    }
    let class_count = train.iter().filter_map(|p| p.label).max().map_or(1, |m| m as usize + 1);
    let refs: Vec<&PatternVector> = train.iter().collect();
    let mut builder = Builder { config, n, next_node: 0, histories: Vec::new() };
    let root = builder.build(&refs, 0)?;
    let tree = CaTree { root, lattice_size: n, depth_limit: config.depth_limit, class_count };
    Ok((tree, builder.histories))
}

impl CaTree {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn node_count(&self) -> usize {
        self.root.count()
    }

    /// Routes `p` to a leaf. A basin never seen in training falls back to the
    /// majority class of the node that lacks it.
    pub fn classify(&self, p: &PatternVector) -> Result<ClassId, ClassifierError> {
        if p.len() != self.lattice_size {
            return Err(ClassifierError::LengthMismatch { expected: self.lattice_size, got: p.len() });
        }
        let mut node = &self.root;
        loop {
            match node {
                CaTreeNode::Leaf { class } => return Ok(*class),
                CaTreeNode::Internal { automaton, majority, children } => {
                    let basin = attractor_id(automaton, p.packed(), self.lattice_size)?;
                    match children.get(&basin) {
                        Some(child) => node = child,
                        None => return Ok(*majority),
                    }
                }
            }
        }
    }

    /// Fraction of labelled patterns classified as their label.
    pub fn accuracy(&self, patterns: &[PatternVector]) -> Result<f64, ClassifierError> {
        if patterns.is_empty() {
            return Ok(1.0);
        }
        let mut correct = 0usize;
        for p in patterns {
            if Some(self.classify(p)?) == p.label {
                correct += 1;
            }
        }
        Ok(correct as f64 / patterns.len() as f64)
    }

    /// Line-oriented text form; see `docs/formats.md`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "catree 1");
        let _ = writeln!(out, "lattice {}", self.lattice_size);
        let _ = writeln!(out, "classes {}", self.class_count);
        let _ = writeln!(out, "depth_limit {}", self.depth_limit);
        let _ = writeln!(out, "nodes {}", self.node_count());
        let mut next = 0usize;
        write_node(&self.root, &mut next, &mut out);
        out
    }

    pub fn parse(text: &str) -> Result<CaTree, ClassifierError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut header = |key: &str| -> Result<usize, ClassifierError> {
            let (ln, line) = lines.next().ok_or(ClassifierError::Format { line: 0, msg: format!("missing {key}") })?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(ClassifierError::Format { line: ln, msg: format!("expected `{key}`") });
            }
            parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or(ClassifierError::Format { line: ln, msg: format!("bad {key} value") })
        };
        if header("catree")? != 1 {
            return Err(ClassifierError::Format { line: 1, msg: "unsupported version".into() });
        }
        let lattice_size = header("lattice")?;
        let class_count = header("classes")?;
        let depth_limit = header("depth_limit")?;
        let node_count = header("nodes")?;

        let mut raw: BTreeMap<usize, (usize, RawNode)> = BTreeMap::new();
        for (ln, line) in lines {
            let fmt_err = |msg: &str| ClassifierError::Format { line: ln, msg: msg.to_string() };
            let mut parts = line.split_whitespace();
            let id: usize = parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| fmt_err("bad node id"))?;
            let kind = parts.next().ok_or_else(|| fmt_err("missing node kind"))?;
            let node = match kind {
                "leaf" => {
                    let class = parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| fmt_err("bad leaf class"))?;
                    RawNode::Leaf(class)
                }
                "rule" | "matrix" => {
                    let spec = parts.next().ok_or_else(|| fmt_err("missing automaton"))?;
                    let automaton = if kind == "rule" {
                        Automaton::Rule(CaRule(spec.parse().map_err(|_| fmt_err("bad rule number"))?))
                    } else {
                        let rows = spec
                            .split('/')
                            .map(|r| r.bytes().map(|b| b.wrapping_sub(b'0')).collect())
                            .collect();
                        Automaton::Matrix(DependencyMatrix::new(rows).map_err(|e| fmt_err(&e.to_string()))?)
                    };
                    let majority = parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| fmt_err("bad majority"))?;
                    let mut children = Vec::new();
                    for edge in parts {
                        let (b, c) = edge.split_once(':').ok_or_else(|| fmt_err("bad basin edge"))?;
                        let b = b.parse().map_err(|_| fmt_err("bad basin id"))?;
                        let c = c.parse().map_err(|_| fmt_err("bad child id"))?;
                        children.push((b, c));
                    }
                    RawNode::Internal(automaton, majority, children)
                }
                _ => return Err(fmt_err("unknown node kind")),
            };
            if raw.insert(id, (ln, node)).is_some() {
                return Err(fmt_err("duplicate node id"));
            }
        }
        if raw.len() != node_count {
            return Err(ClassifierError::Format { line: 0, msg: format!("expected {node_count} nodes, found {}", raw.len()) });
        }
        let root = assemble(0, &mut raw)?;
        if let Some((&id, &(ln, _))) = raw.iter().next() {
            return Err(ClassifierError::Format { line: ln, msg: format!("node {id} is unreachable") });
        }
        Ok(CaTree { root, lattice_size, depth_limit, class_count })
    }
}

enum RawNode {
    Leaf(ClassId),
    Internal(Automaton, ClassId, Vec<(u32, usize)>),
}

// Each node is removed as it is attached, so a shared or cyclic reference
// surfaces as a missing node.
fn assemble(id: usize, raw: &mut BTreeMap<usize, (usize, RawNode)>) -> Result<CaTreeNode, ClassifierError> {
    let (_, node) = raw
        .remove(&id)
        .ok_or(ClassifierError::Format { line: 0, msg: format!("missing node {id}") })?;
    Ok(match node {
        RawNode::Leaf(class) => CaTreeNode::Leaf { class },
        RawNode::Internal(automaton, majority, edges) => {
            let mut children = BTreeMap::new();
            for (basin, child) in edges {
                children.insert(basin, assemble(child, raw)?);
            }
            CaTreeNode::Internal { automaton, majority, children }
        }
    })
}

fn write_node(node: &CaTreeNode, next: &mut usize, out: &mut String) {
    let id = *next;
    *next += 1;
    match node {
        CaTreeNode::Leaf { class } => {
            let _ = writeln!(out, "{id} leaf {class}");
        }
        CaTreeNode::Internal { automaton, majority, children } => {
            // children are numbered in preorder, so ids are known before writing
            let mut child_ids = Vec::new();
            let mut cursor = *next;
            for child in children.values() {
                child_ids.push(cursor);
                cursor += child.count();
            }
            let spec = match automaton {
                Automaton::Rule(r) => format!("rule {}", r.number()),
                Automaton::Matrix(m) => format!("matrix {}", m.row_strings().join("/")),
            };
            let edges: Vec<String> = children.keys().zip(&child_ids).map(|(b, c)| format!("{b}:{c}")).collect();
            let _ = writeln!(out, "{id} {spec} {majority} {}", edges.join(" "));
            for child in children.values() {
                write_node(child, next, out);
            }
        }
    }
}
