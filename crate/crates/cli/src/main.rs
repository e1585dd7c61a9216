use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use caids::ca_engine::{self, BinaryLattice, CaRule};
use caids::classifier::{build_tree, CaTree, TreeConfig};
use caids::dataset::parse_patterns;
use caids::ga_evolve::Encoding;
use caids::scenario::{parse_scenario, serialize_scenario};
use caids::seed::{self, Stream};
use caids::simulator::{self, Mode, ScenarioConfig};
use caids::trace;
use clap::{Args, Parser, Subcommand, ValueEnum};

// Writes to stdout; a closed pipe (e.g. `| head`) ends the process quietly.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if let Err(e) = write!(std::io::stdout(), $($arg)*) {
            stdout_failed(e);
        }
    }};
}

macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if let Err(e) = writeln!(std::io::stdout(), $($arg)*) {
            stdout_failed(e);
        }
    }};
}

fn stdout_failed(e: std::io::Error) -> ! {
    if e.kind() == std::io::ErrorKind::BrokenPipe {
        std::process::exit(0);
    }
    eprintln!("error[io]: writing to stdout: {e}");
    std::process::exit(1);
}

#[derive(Parser, Debug)]
#[command(name = "caids", version, about = "CA-based monitor election and intrusion detection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one scenario and write trace, summary and series files.
    Run(RunArgs),
    /// Paired runs of both protocols over one or more seeds.
    Compare(CompareArgs),
    /// Train a classifier tree from a labelled pattern file.
    Train(TrainArgs),
    /// Print the full basin partition of an elementary rule.
    Basins(BasinsArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario file (`key = value` lines).
    scenario: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    ticks: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use a previously trained tree instead of training one.
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    scenario: PathBuf,
    #[arg(long)]
    ticks: Option<u64>,
    /// Repeatable. Defaults to the scenario's own seed.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Pattern file: `<bits> <label>` per line, `#` comments.
    patterns: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 4)]
    depth_limit: usize,
    #[arg(long, default_value_t = 0.95)]
    purity_stop: f64,
    #[arg(long, default_value_t = 40)]
    population: usize,
    #[arg(long, default_value_t = 50)]
    generations: usize,
    #[arg(long, default_value_t = 0.02)]
    mutation_rate: f64,
    #[arg(long, value_enum, default_value_t = EncodingArg::Rule)]
    encoding: EncodingArg,
    /// Where to write the tree. Printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BasinsArgs {
    /// Wolfram rule number.
    #[arg(long, value_parser = clap::value_parser!(u8))]
    rule: u8,
    /// Lattice size.
    #[arg(long)]
    n: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Idfadnwca,
    Spaid,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Idfadnwca => Mode::Idfadnwca,
            ModeArg::Spaid => Mode::SpaidBaseline,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum EncodingArg {
    Rule,
    Matrix,
}

/// An error tagged with the category printed as `error[<category>]`.
#[derive(Debug)]
struct Categorized {
    category: &'static str,
    message: String,
}

impl fmt::Display for Categorized {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Categorized {}

fn fail(category: &'static str, e: impl fmt::Display) -> anyhow::Error {
    Categorized { category, message: e.to_string() }.into()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| fail("io", format!("{}: {e}", path.display())))
}

fn write(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| fail("io", format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = read(path)?;
    parse_scenario(&text).map_err(|e| fail(e.category(), format!("{}: {e}", path.display())))
}

fn prepare_out(dir: &Path, cfg: &ScenarioConfig, extra: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| fail("io", format!("{}: {e}", dir.display())))?;
    write(&dir.join("scenario.txt"), &format!("{}{extra}", serialize_scenario(cfg)))
}

fn print_header(cfg: &ScenarioConfig, extra: &str) {
    outln!("# resolved scenario");
    out!("{}", serialize_scenario(cfg));
    out!("{extra}");
    outln!("# end scenario");
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = load_scenario(&args.scenario)?;
    if let Some(m) = args.mode {
        cfg.mode = m.into();
    }
    if let Some(t) = args.ticks {
        cfg.ticks = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| fail("validation", e))?;
    print_header(&cfg, "");
    prepare_out(&args.out, &cfg, "")?;

    let output = match &args.tree {
        Some(path) => {
            let tree = CaTree::parse(&read(path)?).map_err(|e| fail("tree_format", format!("{}: {e}", path.display())))?;
            let acc = tree.accuracy(&cfg.training_set()).map_err(|e| fail("training", e))?;
            simulator::run_with_classifier(&cfg, &tree, acc)
        }
        None => simulator::run(&cfg),
    }
    .map_err(|e| fail("simulation", e))?;

    let written = trace::emit_trace(&output, &args.out).map_err(|e| fail("io", e))?;
    out!("{}", trace::summary_text(&output.summary));
    for p in written {
        outln!("wrote {}", p.display());
    }
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let mut cfg = load_scenario(&args.scenario)?;
    if let Some(t) = args.ticks {
        cfg.ticks = t;
    }
    cfg.validate().map_err(|e| fail("validation", e))?;
    let seeds = if args.seeds.is_empty() { vec![cfg.seed] } else { args.seeds };
    let list: Vec<String> = seeds.iter().map(u64::to_string).collect();
    let extra = format!("# compare_seeds = {}\n", list.join(","));
    print_header(&cfg, &extra);
    prepare_out(&args.out, &cfg, &extra)?;

    let report = simulator::compare(&cfg, &seeds).map_err(|e| fail("simulation", e))?;
    let written = trace::emit_compare(&report, &args.out).map_err(|e| fail("io", e))?;
    out!("{}", trace::compare_text(&report));
    for p in written {
        outln!("wrote {}", p.display());
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let text = read(&args.patterns)?;
    let patterns =
        parse_patterns(&text).map_err(|e| fail("pattern_file", format!("{}: {e}", args.patterns.display())))?;
    let Some(first) = patterns.first() else {
        return Err(fail("pattern_file", format!("{}: no patterns", args.patterns.display())));
    };
    let n = first.len();
    let mut config = TreeConfig { k: args.k, depth_limit: args.depth_limit, purity_stop: args.purity_stop, ..Default::default() };
    config.ga.population_size = args.population;
    config.ga.generations = args.generations;
    config.ga.mutation_rate = args.mutation_rate;
    config.ga.seed = seed::sub_seed(args.seed, Stream::Ga);
    config.ga.encoding = match args.encoding {
        EncodingArg::Rule => Encoding::Rule,
        EncodingArg::Matrix => Encoding::Matrix { n },
    };

    outln!("# resolved training config");
    outln!("patterns = {}", args.patterns.display());
    outln!("pattern_count = {}", patterns.len());
    outln!("lattice = {n}");
    outln!("seed = {}", args.seed);
    outln!("tree_k = {}", config.k);
    outln!("tree_depth_limit = {}", config.depth_limit);
    outln!("tree_purity_stop = {}", config.purity_stop);
    outln!("ga_population = {}", config.ga.population_size);
    outln!("ga_generations = {}", config.ga.generations);
    outln!("ga_mutation_rate = {}", config.ga.mutation_rate);
    outln!("ga_elite_fraction = {}", config.ga.elite_fraction);
    outln!("ga_cull_fraction = {}", config.ga.cull_fraction);
    outln!("ga_encoding = {}", if args.encoding == EncodingArg::Rule { "rule" } else { "matrix" });
    outln!("# end config");

    let tree = build_tree(&patterns, &config).map_err(|e| fail("training", e))?;
    let acc = tree.accuracy(&patterns).map_err(|e| fail("training", e))?;
    outln!("training_accuracy = {acc:.6}");
    outln!("depth = {}", tree.depth());
    outln!("nodes = {}", tree.node_count());
    match &args.out {
        Some(path) => {
            write(path, &tree.serialize())?;
            outln!("wrote {}", path.display());
        }
        None => out!("{}", tree.serialize()),
    }
    Ok(())
}

fn basins(args: BasinsArgs) -> Result<()> {
    let rule = CaRule(args.rule);
    let partition = ca_engine::enumerate_basins(rule, args.n).map_err(|e| match e {
        ca_engine::CaError::LatticeTooLarge(_) => fail("lattice_too_large", e),
        _ => fail("lattice", e),
    })?;
    let n = args.n;
    let all = partition.basins();
    outln!("rule = {}", args.rule);
    outln!("n = {n}");
    outln!("basin_count = {}", all.len());
    for (attractor, states) in &all {
        let cycle = ca_engine::evolve_to_attractor(|s: &u32| rule.step_packed(*s, n), *attractor, 1usize << n)
            .context("attractor state must cycle")?
            .cycle_len;
        let members: Vec<String> = states.iter().map(|&s| BinaryLattice::from_packed(s, n).to_string()).collect();
        outln!(
            "basin {} cycle {} size {}: {}",
            BinaryLattice::from_packed(*attractor, n),
            cycle,
            states.len(),
            members.join(" ")
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion)
                || e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            {
                let _ = e.print();
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    ExitCode::from(2)
                } else {
                    ExitCode::SUCCESS
                };
            }
            let msg = e.to_string();
            let line = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[usage]: {line}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Train(a) => train(a),
        Command::Basins(a) => basins(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.downcast_ref::<Categorized>().map_or("internal", |c| c.category);
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error[{category}]: {msg}");
            ExitCode::FAILURE
        }
    }
}
