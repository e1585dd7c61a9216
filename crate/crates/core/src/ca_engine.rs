//! Elementary (3-neighbourhood) binary CA, the fuzzy dependency-matrix CA,
//! attractor detection and exhaustive basin enumeration.
//!
//! Packed lattices store cell 0 in the most significant of the `n` low bits,
//! so numeric order on packed states equals lexicographic order on cells.
//! Both automata use a null boundary: cells beyond either end read as 0.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hash;

use thiserror::Error;

/// Largest lattice that exhaustive basin enumeration will accept.
pub const MAX_ENUMERABLE: usize = 16;

/// Default fuzzy quantization grid (`1/Q`).
pub const DEFAULT_QUANTIZATION: u32 = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no cycle detected within {0} steps")]
    NoConvergence(usize),
    #[error("lattice size {0} outside 1..={MAX_ENUMERABLE}")]
    LatticeTooLarge(usize),
    #[error("invalid dependency matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid fuzzy cell value {0}")]
    InvalidCell(f64),
    #[error("lattice must have at least one cell")]
    EmptyLattice,
}

/// Wolfram-numbered elementary rule. Bit `k` of the rule number is the next
/// state for the neighbourhood whose `(left, self, right)` bits spell `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CaRule(pub u8);

impl CaRule {
    pub fn number(self) -> u8 {
        self.0
    }

    /// The 8-entry table, index = `4*left + 2*self + right`.
    pub fn table(self) -> [bool; 8] {
        std::array::from_fn(|k| (self.0 >> k) & 1 == 1)
    }

    pub fn next(self, left: bool, centre: bool, right: bool) -> bool {
        let k = (left as u8) << 2 | (centre as u8) << 1 | right as u8;
        (self.0 >> k) & 1 == 1
    }

    /// One synchronous step on a packed `n`-cell lattice.
    pub fn step_packed(self, state: u32, n: usize) -> u32 {
        let mask = low_mask(n);
        let state = state & mask;
        let left = state >> 1;
        let right = (state << 1) & mask;
        let mut out = 0u32;
        for k in 0..8u32 {
            if (self.0 >> k) & 1 == 0 {
                continue;
            }
            let l = if k & 4 != 0 { left } else { !left };
            let c = if k & 2 != 0 { state } else { !state };
            let r = if k & 1 != 0 { right } else { !right };
            out |= l & c & r;
        }
        out & mask
    }
}

fn low_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BinaryLattice {
    cells: Vec<bool>,
}

impl BinaryLattice {
    pub fn new(cells: Vec<bool>) -> Result<Self, CaError> {
        if cells.is_empty() {
            return Err(CaError::EmptyLattice);
        }
        Ok(BinaryLattice { cells })
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(bits: &str) -> Result<Self, CaError> {
        let cells = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(CaError::InvalidCell(f64::NAN)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(cells)
    }

    pub fn from_packed(state: u32, n: usize) -> Self {
        let cells = (0..n).map(|i| (state >> (n - 1 - i)) & 1 == 1).collect();
        BinaryLattice { cells }
    }

    /// Packs the first 32 cells; callers keep lattices at or below that size.
    pub fn packed(&self) -> u32 {
        self.cells.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }
}

impl fmt::Display for BinaryLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in &self.cells {
            f.write_str(if c { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub fn step_binary(rule: CaRule, lat: &BinaryLattice) -> BinaryLattice {
    let n = lat.cells.len();
    let at = |i: isize| -> bool {
        if i < 0 || i as usize >= n {
            false
        } else {
            lat.cells[i as usize]
        }
    };
    let cells = (0..n as isize)
        .map(|i| rule.next(at(i - 1), at(i), at(i + 1)))
        .collect();
    BinaryLattice { cells }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcaState {
    cells: Vec<f64>,
}

impl FcaState {
    pub fn new(cells: Vec<f64>) -> Result<Self, CaError> {
        if cells.is_empty() {
            return Err(CaError::EmptyLattice);
        }
        if let Some(&bad) = cells.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(CaError::InvalidCell(bad));
        }
        Ok(FcaState { cells })
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Snaps each cell to the nearest multiple of `1/q`.
    pub fn quantize(&self, q: u32) -> Vec<u32> {
        self.cells
            .iter()
            .map(|&v| (v * q as f64).round() as u32)
            .collect()
    }

    pub fn from_quantized(levels: &[u32], q: u32) -> Self {
        FcaState {
            cells: levels.iter().map(|&l| (l.min(q)) as f64 / q as f64).collect(),
        }
    }
}

/// Square 0/1 matrix; row `i` lists the cells that cell `i` depends on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DependencyMatrix {
    n: usize,
    entries: Vec<bool>,
}

impl DependencyMatrix {
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self, CaError> {
        let n = rows.len();
        if n == 0 {
            return Err(CaError::InvalidMatrix("empty matrix".into()));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(CaError::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for &v in row {
                match v {
                    0 => entries.push(false),
                    1 => entries.push(true),
                    _ => return Err(CaError::InvalidMatrix(format!("entry {v} not in {{0,1}}"))),
                }
            }
        }
        Self::from_entries(n, entries)
    }

    pub fn from_entries(n: usize, entries: Vec<bool>) -> Result<Self, CaError> {
        if n == 0 || entries.len() != n * n {
            return Err(CaError::InvalidMatrix(format!(
                "{} entries for a {n}x{n} matrix",
                entries.len()
            )));
        }
        if let Some(i) = (0..n).find(|&i| !entries[i * n..(i + 1) * n].iter().any(|&b| b)) {
            return Err(CaError::InvalidMatrix(format!("row {i} is all zero")));
        }
        Ok(DependencyMatrix { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n * n).map(|k| k / n == k % n).collect();
        DependencyMatrix { n, entries }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[bool] {
        &self.entries
    }

    /// Rows rendered as `0`/`1` strings.
    pub fn row_strings(&self) -> Vec<String> {
        self.entries
            .chunks(self.n)
            .map(|r| r.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .collect()
    }

    /// Boolean specialisation of [`step_fuzzy`] on a packed 0/1 lattice:
    /// cell `i` is the OR over `j` of `T[i][j] AND s[j]`.
    pub fn step_packed(&self, state: u32) -> u32 {
        let n = self.n;
        let mut out = 0u32;
        for i in 0..n {
            let row = &self.entries[i * n..(i + 1) * n];
            let hit = row
                .iter()
                .enumerate()
                .any(|(j, &t)| t && (state >> (n - 1 - j)) & 1 == 1);
            if hit {
                out |= 1 << (n - 1 - i);
            }
        }
        out
    }
}

/// Fuzzy step: cell `i` becomes `min(1, sum_j T[i][j] * s[j])`.
/// AND is the product, OR the bounded sum.
pub fn step_fuzzy(t: &DependencyMatrix, s: &FcaState) -> Result<FcaState, CaError> {
    if t.n != s.cells.len() {
        return Err(CaError::DimensionMismatch { expected: t.n, got: s.cells.len() });
    }
    let cells = (0..t.n)
        .map(|i| {
            let sum: f64 = (0..t.n)
                .filter(|&j| t.get(i, j))
                .map(|j| s.cells[j])
                .sum();
            sum.min(1.0)
        })
        .collect();
    Ok(FcaState { cells })
}

/// Result of iterating an automaton until a state recurs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attractor<S> {
    /// Smallest state on the terminal cycle.
    pub id: S,
    /// Steps taken before first entering the cycle.
    pub transient: usize,
    pub cycle_len: usize,
}

/// Iterates `step` from `initial` until some state repeats.
pub fn evolve_to_attractor<S, F>(mut step: F, initial: S, max_steps: usize) -> Result<Attractor<S>, CaError>
where
    S: Clone + Ord + Hash,
    F: FnMut(&S) -> S,
{
    let mut seen: HashMap<S, usize> = HashMap::new();
    let mut trajectory = vec![initial.clone()];
    seen.insert(initial, 0);
    for t in 1..=max_steps {
        let next = step(&trajectory[t - 1]);
        if let Some(&first) = seen.get(&next) {
            let id = trajectory[first..].iter().min().cloned().expect("cycle is nonempty");
            return Ok(Attractor { id, transient: first, cycle_len: t - first });
        }
        seen.insert(next.clone(), t);
        trajectory.push(next);
    }
    Err(CaError::NoConvergence(max_steps))
}

/// Fuzzy evolution on the `1/q` grid: each step's output is snapped back to
/// the grid, which makes the orbit finite and the attractor well defined.
pub fn fuzzy_attractor(
    t: &DependencyMatrix,
    initial: &FcaState,
    q: u32,
    max_steps: usize,
) -> Result<Attractor<Vec<u32>>, CaError> {
    if t.size() != initial.len() {
        return Err(CaError::DimensionMismatch { expected: t.size(), got: initial.len() });
    }
    evolve_to_attractor(
        |levels: &Vec<u32>| {
            let s = FcaState::from_quantized(levels, q);
            step_fuzzy(t, &s).expect("dimensions checked").quantize(q)
        },
        initial.quantize(q),
        max_steps,
    )
}

/// Every packed state of an `n`-cell lattice mapped to its attractor id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasinPartition {
    n: usize,
    attractor_of: Vec<u32>,
}

impl BasinPartition {
    pub fn lattice_size(&self) -> usize {
        self.n
    }

    pub fn attractor_of(&self, state: u32) -> u32 {
        self.attractor_of[state as usize]
    }

    pub fn basins(&self) -> BTreeMap<u32, Vec<u32>> {
        let mut out: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (s, &a) in self.attractor_of.iter().enumerate() {
            out.entry(a).or_default().push(s as u32);
        }
        out
    }

    pub fn basin_count(&self) -> usize {
        let mut ids = self.attractor_of.clone();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }
}

/// Exhaustive basin partition for an arbitrary packed successor function.
pub fn enumerate_basins_with<F>(n: usize, step: F) -> Result<BasinPartition, CaError>
where
    F: Fn(u32) -> u32,
{
    if n == 0 || n > MAX_ENUMERABLE {
        return Err(CaError::LatticeTooLarge(n));
    }
    let size = 1usize << n;
    let succ: Vec<u32> = (0..size as u32).map(&step).collect();
    const UNSEEN: u8 = 0;
    const ON_PATH: u8 = 1;
    const DONE: u8 = 2;
    let mut status = vec![UNSEEN; size];
    let mut attractor_of = vec![0u32; size];
    let mut path_pos = vec![0usize; size];
    let mut path: Vec<u32> = Vec::new();
    for start in 0..size as u32 {
        if status[start as usize] == DONE {
            continue;
        }
        path.clear();
        let mut x = start;
        while status[x as usize] == UNSEEN {
            status[x as usize] = ON_PATH;
            path_pos[x as usize] = path.len();
            path.push(x);
            x = succ[x as usize];
        }
        if status[x as usize] == ON_PATH {
            let from = path_pos[x as usize];
            let id = *path[from..].iter().min().expect("cycle is nonempty");
            for &c in &path[from..] {
                attractor_of[c as usize] = id;
                status[c as usize] = DONE;
            }
            path.truncate(from);
        }
        let id = attractor_of[x as usize];
        for &p in &path {
            attractor_of[p as usize] = id;
            status[p as usize] = DONE;
        }
    }
    Ok(BasinPartition { n, attractor_of })
}

pub fn enumerate_basins(rule: CaRule, n: usize) -> Result<BasinPartition, CaError> {
    enumerate_basins_with(n, |s| rule.step_packed(s, n))
}

/// A classifier node's automaton: either encoding a chromosome can decode to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Automaton {
    Rule(CaRule),
    Matrix(DependencyMatrix),
}

impl Automaton {
    pub fn step_packed(&self, state: u32, n: usize) -> u32 {
        match self {
            Automaton::Rule(r) => r.step_packed(state, n),
            Automaton::Matrix(m) => m.step_packed(state),
        }
    }

    pub fn basins(&self, n: usize) -> Result<BasinPartition, CaError> {
        if let Automaton::Matrix(m) = self {
            if m.size() != n {
                return Err(CaError::DimensionMismatch { expected: m.size(), got: n });
            }
        }
        enumerate_basins_with(n, |s| self.step_packed(s, n))
    }
}
