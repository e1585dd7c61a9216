//! Line-oriented `key = value` scenario files.
//!
//! `#` starts a comment. Every key except `node_count` is optional; `event`
//! and `join` may repeat. The full key list and defaults are documented in
//! `docs/formats.md`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::ca_engine::BinaryLattice;
use crate::classifier::{PatternVector, TreeConfig};
use crate::ga_evolve::{Encoding, GaConfig};
use crate::simulator::{JoinEvent, Mode, ScenarioConfig, ScheduledEvent, SimError};
use crate::topology::{DrainRates, EnergyInit, GeometryParams, NodeId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing required key: {0}")]
    MissingKey(&'static str),
    #[error("invalid {key}: {msg}")]
    Invalid { key: String, msg: String },
}

impl ScenarioError {
    pub fn category(&self) -> &'static str {
        match self {
            ScenarioError::Parse { .. } => "parse",
            ScenarioError::MissingKey(_) => "missing_key",
            ScenarioError::Invalid { .. } => "validation",
        }
    }
}

impl ScenarioConfig {
    /// The documented defaults for a network of `node_count` nodes.
    pub fn with_defaults(node_count: usize) -> Self {
        ScenarioConfig {
            geometry: GeometryParams {
                node_count,
                area_side: 300.0,
                radio_range: 100.0,
                energy: EnergyInit::Uniform { lo: 2000, hi: 4000 },
                drain: DrainRates { member: 1, monitor: 10 },
            },
            threshold: 50.0,
            hop_radius: 1,
            mode: Mode::Idfadnwca,
            ticks: 1000,
            seed: 0,
            pattern_bits: 8,
            train_size: 200,
            event_rate: 0.2,
            intrusion_fraction: 0.5,
            events: Vec::new(),
            joins: Vec::new(),
            tree: TreeConfig::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "node_count",
    "area_side",
    "radio_range",
    "energy_init",
    "member_drain",
    "monitor_drain",
    "threshold",
    "hop_radius",
    "mode",
    "ticks",
    "seed",
    "pattern_bits",
    "train_size",
    "event_rate",
    "intrusion_fraction",
    "tree_k",
    "tree_depth_limit",
    "tree_purity_stop",
    "ga_population",
    "ga_generations",
    "ga_mutation_rate",
    "ga_elite_fraction",
    "ga_cull_fraction",
    "ga_encoding",
    "event",
    "join",
];

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ScenarioError> {
    v.parse().map_err(|_| ScenarioError::Parse { line, msg: format!("{key}: cannot parse `{v}`") })
}

fn parse_energy(line: usize, v: &str) -> Result<EnergyInit, ScenarioError> {
    let parts: Vec<&str> = v.split(':').collect();
    match parts.as_slice() {
        ["fixed", e] => Ok(EnergyInit::Fixed(parse_num(line, "energy_init", e)?)),
        ["uniform", lo, hi] => Ok(EnergyInit::Uniform {
            lo: parse_num(line, "energy_init", lo)?,
            hi: parse_num(line, "energy_init", hi)?,
        }),
        _ => Err(ScenarioError::Parse {
            line,
            msg: format!("energy_init: expected fixed:<e> or uniform:<lo>:<hi>, got `{v}`"),
        }),
    }
}

fn parse_event(line: usize, v: &str) -> Result<ScheduledEvent, ScenarioError> {
    let f: Vec<&str> = v.split(',').map(str::trim).collect();
    let [tick, source, bits, label] = f.as_slice() else {
        return Err(ScenarioError::Parse { line, msg: "event: expected tick,source,bits,label".into() });
    };
    let cells = BinaryLattice::parse(bits)
        .map_err(|_| ScenarioError::Parse { line, msg: format!("event: bad bit string `{bits}`") })?;
    Ok(ScheduledEvent {
        tick: parse_num(line, "event", tick)?,
        source: NodeId(parse_num(line, "event", source)?),
        pattern: PatternVector::new(cells, Some(parse_num(line, "event", label)?)),
    })
}

fn parse_join(line: usize, v: &str) -> Result<JoinEvent, ScenarioError> {
    let f: Vec<&str> = v.split(',').map(str::trim).collect();
    let [tick, x, y, energy] = f.as_slice() else {
        return Err(ScenarioError::Parse { line, msg: "join: expected tick,x,y,energy".into() });
    };
    Ok(JoinEvent {
        tick: parse_num(line, "join", tick)?,
        position: (parse_num(line, "join", x)?, parse_num(line, "join", y)?),
        energy: parse_num(line, "join", energy)?,
    })
}

/// Parses and validates scenario text, filling omitted keys with defaults.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or(ScenarioError::Parse { line, msg: format!("expected `key = value`, got `{content}`") })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(ScenarioError::Parse { line, msg: format!("unknown key `{k}`") });
        }
        if k != "event" && k != "join" && !seen.insert(k.to_string()) {
            return Err(ScenarioError::Parse { line, msg: format!("duplicate key `{k}`") });
        }
        entries.push((line, k.to_string(), v.to_string()));
    }

    let (line, _, v) = entries
        .iter()
        .find(|(_, k, _)| k == "node_count")
        .ok_or(ScenarioError::MissingKey("node_count"))?;
    let mut cfg = ScenarioConfig::with_defaults(parse_num(*line, "node_count", v)?);
    let (mut member, mut monitor) = (cfg.geometry.drain.member, cfg.geometry.drain.monitor);
    let mut encoding = "rule".to_string();

    for (line, k, v) in &entries {
        let line = *line;
        let v = v.as_str();
        match k.as_str() {
            "node_count" => {}
            "area_side" => cfg.geometry.area_side = parse_num(line, k, v)?,
            "radio_range" => cfg.geometry.radio_range = parse_num(line, k, v)?,
            "energy_init" => cfg.geometry.energy = parse_energy(line, v)?,
            "member_drain" => member = parse_num(line, k, v)?,
            "monitor_drain" => monitor = parse_num(line, k, v)?,
            "threshold" => cfg.threshold = parse_num(line, k, v)?,
            "hop_radius" => cfg.hop_radius = parse_num(line, k, v)?,
            "mode" => {
                cfg.mode = Mode::parse(v).ok_or(ScenarioError::Parse {
                    line,
                    msg: format!("mode: expected idfadnwca or spaid, got `{v}`"),
                })?
            }
            "ticks" => cfg.ticks = parse_num(line, k, v)?,
            "seed" => cfg.seed = parse_num(line, k, v)?,
            "pattern_bits" => cfg.pattern_bits = parse_num(line, k, v)?,
            "train_size" => cfg.train_size = parse_num(line, k, v)?,
            "event_rate" => cfg.event_rate = parse_num(line, k, v)?,
            "intrusion_fraction" => cfg.intrusion_fraction = parse_num(line, k, v)?,
            "tree_k" => cfg.tree.k = parse_num(line, k, v)?,
            "tree_depth_limit" => cfg.tree.depth_limit = parse_num(line, k, v)?,
            "tree_purity_stop" => cfg.tree.purity_stop = parse_num(line, k, v)?,
            "ga_population" => cfg.tree.ga.population_size = parse_num(line, k, v)?,
            "ga_generations" => cfg.tree.ga.generations = parse_num(line, k, v)?,
            "ga_mutation_rate" => cfg.tree.ga.mutation_rate = parse_num(line, k, v)?,
            "ga_elite_fraction" => cfg.tree.ga.elite_fraction = parse_num(line, k, v)?,
            "ga_cull_fraction" => cfg.tree.ga.cull_fraction = parse_num(line, k, v)?,
            "ga_encoding" => {
                if v != "rule" && v != "matrix" {
                    return Err(ScenarioError::Parse { line, msg: format!("ga_encoding: expected rule or matrix, got `{v}`") });
                }
                encoding = v.to_string();
            }
            "event" => cfg.events.push(parse_event(line, v)?),
            "join" => cfg.joins.push(parse_join(line, v)?),
            _ => unreachable!("keys are checked above"),
        }
    }
    cfg.tree.ga.encoding = if encoding == "matrix" {
        Encoding::Matrix { n: cfg.pattern_bits }
    } else {
        Encoding::Rule
    };
    cfg.geometry.drain = DrainRates::new(member, monitor).map_err(|e| ScenarioError::Invalid {
        key: "member_drain/monitor_drain".into(),
        msg: format!("{e}; need both zero or 0 < member_drain < monitor_drain"),
    })?;
    cfg.validate().map_err(|e| {
        let msg = match e {
            SimError::InvalidConfig(m) => m,
            other => other.to_string(),
        };
        ScenarioError::Invalid { key: "scenario".into(), msg }
    })?;
    Ok(cfg)
}

/// Writes every key, defaults included, in the documented order.
pub fn serialize_scenario(cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    let g = &cfg.geometry;
    let ga: &GaConfig = &cfg.tree.ga;
    let _ = writeln!(s, "node_count = {}", g.node_count);
    let _ = writeln!(s, "area_side = {}", g.area_side);
    let _ = writeln!(s, "radio_range = {}", g.radio_range);
    let _ = writeln!(s, "energy_init = {}", g.energy);
    let _ = writeln!(s, "member_drain = {}", g.drain.member);
    let _ = writeln!(s, "monitor_drain = {}", g.drain.monitor);
    let _ = writeln!(s, "threshold = {}", cfg.threshold);
    let _ = writeln!(s, "hop_radius = {}", cfg.hop_radius);
    let _ = writeln!(s, "mode = {}", cfg.mode);
    let _ = writeln!(s, "ticks = {}", cfg.ticks);
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "pattern_bits = {}", cfg.pattern_bits);
    let _ = writeln!(s, "train_size = {}", cfg.train_size);
    let _ = writeln!(s, "event_rate = {}", cfg.event_rate);
    let _ = writeln!(s, "intrusion_fraction = {}", cfg.intrusion_fraction);
    let _ = writeln!(s, "tree_k = {}", cfg.tree.k);
    let _ = writeln!(s, "tree_depth_limit = {}", cfg.tree.depth_limit);
    let _ = writeln!(s, "tree_purity_stop = {}", cfg.tree.purity_stop);
    let _ = writeln!(s, "ga_population = {}", ga.population_size);
    let _ = writeln!(s, "ga_generations = {}", ga.generations);
    let _ = writeln!(s, "ga_mutation_rate = {}", ga.mutation_rate);
    let _ = writeln!(s, "ga_elite_fraction = {}", ga.elite_fraction);
    let _ = writeln!(s, "ga_cull_fraction = {}", ga.cull_fraction);
    let enc = match ga.encoding {
        Encoding::Rule => "rule",
        Encoding::Matrix { .. } => "matrix",
    };
    let _ = writeln!(s, "ga_encoding = {enc}");
    for e in &cfg.events {
        let _ = writeln!(s, "event = {},{},{},{}", e.tick, e.source, e.pattern.cells(), e.truth());
    }
    for j in &cfg.joins {
        let _ = writeln!(s, "join = {},{},{},{}", j.tick, j.position.0, j.position.1, j.energy);
    }
    s
}
