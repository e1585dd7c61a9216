//! Genetic search over CA rules and dependency matrices.
//!
//! Genomes are plain bit strings. Selection is roulette over the survivors
//! of a cull, with the top slice carried over untouched, so the best fitness
//! of a run can never go down.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use crate::ca_engine::{Automaton, CaError, CaRule, DependencyMatrix};
use crate::classifier::{BasinDistribution, ClassifierError, PatternVector};
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaError {
    #[error("invalid GA config: {0}")]
    InvalidConfig(String),
    #[error("genome length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error(transparent)]
    Ca(#[from] CaError),
    #[error(transparent)]
    Classifier(#[from] Box<ClassifierError>),
}

/// What a genome decodes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// 8 bits, most significant rule bit (neighbourhood 111) first.
    Rule,
    /// `n*n` bits, row major. An all-zero row decodes with its diagonal set.
    Matrix { n: usize },
}

impl Encoding {
    pub fn genome_len(self) -> usize {
        match self {
            Encoding::Rule => 8,
            Encoding::Matrix { n } => n * n,
        }
    }

    pub fn decode(self, genome: &[bool]) -> Result<Automaton, GaError> {
        if genome.len() != self.genome_len() {
            return Err(GaError::LengthMismatch(genome.len(), self.genome_len()));
        }
        match self {
            Encoding::Rule => Ok(Automaton::Rule(CaRule(
                genome.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8),
            ))),
            Encoding::Matrix { n } => {
                let mut entries = genome.to_vec();
                for i in 0..n {
                    if !entries[i * n..(i + 1) * n].iter().any(|&b| b) {
                        entries[i * n + i] = true;
                    }
                }
                Ok(Automaton::Matrix(DependencyMatrix::from_entries(n, entries)?))
            }
        }
    }

    pub fn encode(automaton: &Automaton) -> Vec<bool> {
        match automaton {
            Automaton::Rule(r) => (0..8).rev().map(|k| (r.number() >> k) & 1 == 1).collect(),
            Automaton::Matrix(m) => m.entries().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub genome: Vec<bool>,
    pub fitness: Option<f64>,
}

impl Chromosome {
    pub fn new(genome: Vec<bool>) -> Self {
        Chromosome { genome, fitness: None }
    }

    pub fn from_bits(bits: &str) -> Self {
        Chromosome::new(bits.chars().map(|c| c == '1').collect())
    }

    pub fn bits(&self) -> String {
        self.genome.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub elite_fraction: f64,
    pub cull_fraction: f64,
    pub seed: u64,
    pub encoding: Encoding,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 40,
            generations: 50,
            mutation_rate: 0.02,
            elite_fraction: 0.1,
            cull_fraction: 0.3,
            seed: 0,
            encoding: Encoding::Rule,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        let bad = |m: &str| Err(GaError::InvalidConfig(m.to_string()));
        if self.population_size == 0 {
            return bad("population_size must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("mutation_rate must lie in [0,1]");
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction < 1.0) {
            return bad("elite_fraction must lie in (0,1)");
        }
        if !(self.cull_fraction > 0.0 && self.cull_fraction < 1.0) {
            return bad("cull_fraction must lie in (0,1)");
        }
        if self.elite_fraction + self.cull_fraction > 1.0 {
            return bad("elite_fraction + cull_fraction must be <= 1");
        }
        if self.encoding.genome_len() == 0 {
            return bad("matrix encoding needs n >= 1");
        }
        Ok(())
    }

    fn elite_count(&self) -> usize {
        ((self.elite_fraction * self.population_size as f64).ceil() as usize)
            .clamp(1, self.population_size)
    }

    fn cull_count(&self) -> usize {
        let c = (self.cull_fraction * self.population_size as f64).floor() as usize;
        c.min(self.population_size - self.elite_count())
    }
}

/// The basin distribution the decoded automaton induces on `train`.
pub fn induced_distribution(automaton: &Automaton, train: &[PatternVector]) -> Result<BasinDistribution, GaError> {
    let first = train.first().ok_or(GaError::EmptyTrainingSet)?;
    let n = first.len();
    let basins = automaton.basins(n)?;
    let routed = train
        .iter()
        .map(|p| {
            if p.len() != n {
                return Err(GaError::LengthMismatch(p.len(), n));
            }
            Ok((basins.attractor_of(p.packed()), p.label.unwrap_or(0)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BasinDistribution::from_routed(routed))
}

/// Class-separation score of the chromosome's automaton on `train`: the
/// relevance index of its induced basin distribution.
pub fn fitness(c: &Chromosome, encoding: Encoding, train: &[PatternVector]) -> Result<f64, GaError> {
    let automaton = encoding.decode(&c.genome)?;
    let dist = induced_distribution(&automaton, train)?;
    dist.relevance_index().map_err(|e| GaError::Classifier(Box::new(e)))
}

/// Single-point crossover at an explicit cut: `a[..cut] ++ b[cut..]`.
pub fn crossover_at(a: &Chromosome, b: &Chromosome, cut: usize) -> Result<Chromosome, GaError> {
    if a.genome.len() != b.genome.len() {
        return Err(GaError::LengthMismatch(a.genome.len(), b.genome.len()));
    }
    let cut = cut.min(a.genome.len());
    let mut genome = a.genome[..cut].to_vec();
    genome.extend_from_slice(&b.genome[cut..]);
    Ok(Chromosome::new(genome))
}

/// Draws a cut uniformly in `1..len` (no cut for genomes shorter than 2).
pub fn crossover(a: &Chromosome, b: &Chromosome, rng: &mut impl Rng) -> Result<Chromosome, GaError> {
    let len = a.genome.len();
    if len != b.genome.len() {
        return Err(GaError::LengthMismatch(len, b.genome.len()));
    }
    if len < 2 {
        return Ok(Chromosome::new(a.genome.clone()));
    }
    let cut = rng.gen_range(1..len);
    crossover_at(a, b, cut)
}

/// Flips each bit independently with probability `rate`.
pub fn mutate(c: &Chromosome, rate: f64, rng: &mut impl Rng) -> Chromosome {
    let genome = c
        .genome
        .iter()
        .map(|&b| if rng.gen_bool(rate.clamp(0.0, 1.0)) { !b } else { b })
        .collect();
    Chromosome::new(genome)
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub best: Chromosome,
    /// Best fitness of the initial population, then after each generation.
    pub history: Vec<f64>,
    /// Final population, best first.
    pub population: Vec<Chromosome>,
}

fn rank(a: &Chromosome, b: &Chromosome) -> Ordering {
    let fa = a.fitness.unwrap_or(f64::NEG_INFINITY);
    let fb = b.fitness.unwrap_or(f64::NEG_INFINITY);
    fb.total_cmp(&fa).then_with(|| a.genome.cmp(&b.genome))
}

fn roulette<'a>(pool: &'a [Chromosome], rng: &mut impl Rng) -> &'a Chromosome {
    let total: f64 = pool.iter().map(|c| c.fitness.unwrap_or(0.0)).sum();
    if total <= 0.0 {
        return &pool[rng.gen_range(0..pool.len())];
    }
    let mut pick = rng.gen::<f64>() * total;
    for c in pool {
        pick -= c.fitness.unwrap_or(0.0);
        if pick < 0.0 {
            return c;
        }
    }
    pool.last().expect("pool is nonempty")
}

/// Runs the GA with fitness supplied by `score`. Scores are cached per genome.
pub fn evolve_with<F>(config: &GaConfig, mut score: F) -> Result<EvolveOutcome, GaError>
where
    F: FnMut(&[bool]) -> Result<f64, GaError>,
{
    config.validate()?;
    let len = config.encoding.genome_len();
    let mut rng = seed::rng(config.seed);
    let mut cache: HashMap<Vec<bool>, f64> = HashMap::new();
    let mut evaluate = |c: &mut Chromosome| -> Result<(), GaError> {
        let f = match cache.get(&c.genome) {
            Some(&f) => f,
            None => {
                let f = score(&c.genome)?;
                cache.insert(c.genome.clone(), f);
                f
            }
        };
        c.fitness = Some(f);
        Ok(())
    };

    let mut population: Vec<Chromosome> = (0..config.population_size)
        .map(|_| Chromosome::new((0..len).map(|_| rng.gen::<bool>()).collect()))
        .collect();
    for c in &mut population {
        evaluate(c)?;
    }
    population.sort_by(rank);
    let mut history = vec![population[0].fitness.unwrap_or(0.0)];

    let elite = config.elite_count();
    let survivors = config.population_size - config.cull_count();
    for _ in 0..config.generations {
        let mut next: Vec<Chromosome> = population[..elite].to_vec();
        let pool = &population[..survivors];
        while next.len() < config.population_size {
            let a = roulette(pool, &mut rng);
            let b = roulette(pool, &mut rng);
            let child = crossover(a, b, &mut rng)?;
            let mut child = mutate(&child, config.mutation_rate, &mut rng);
            evaluate(&mut child)?;
            next.push(child);
        }
        next.sort_by(rank);
        let best = next[0].fitness.unwrap_or(0.0);
        debug_assert!(best >= *history.last().unwrap_or(&0.0));
        history.push(best);
        population = next;
    }

    Ok(EvolveOutcome { best: population[0].clone(), history, population })
}

/// Evolves automata whose basins separate the classes of `train`.
pub fn evolve(config: &GaConfig, train: &[PatternVector]) -> Result<EvolveOutcome, GaError> {
    if train.is_empty() {
        return Err(GaError::EmptyTrainingSet);
    }
    let encoding = config.encoding;
    evolve_with(config, |genome| {
        let automaton = encoding.decode(genome)?;
        induced_distribution(&automaton, train)?
            .relevance_index()
            .map_err(|e| GaError::Classifier(Box::new(e)))
    })
}
