use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use grounded_planner::domain::RoomKind;
use grounded_planner::eval::Split;
use grounded_planner::graph2nl::ContextVariant;
use grounded_planner::planner::TaskCategory;

mod commands;
mod config;

use config::Config;

#[derive(Debug, Parser)]
#[command(name = "gplan", version, about = "Grounded task planning in a household gridworld")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for everything random in the command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. Defaults to all cores for batch commands and 1 for
    /// single generations.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate scene files.
    GenScenes(GenScenes),
    /// Generate a dataset of (scene, task, plan) samples as JSONL splits.
    GenDataset(GenDataset),
    /// Train a model on a dataset's training split.
    Train(Train),
    /// Generate a plan for a goal and print the full model output.
    Generate(Generate),
    /// Run a plan in a scene and print the execution trace.
    Execute(Execute),
    /// Train and evaluate every context variant plus the planner baseline.
    Evaluate(Evaluate),
    /// Write the PDDL domain and a problem for a scene.
    ExportPddl(ExportPddl),
    /// Measure generation throughput without and with full context.
    Bench(Bench),
}

#[derive(Debug, Args)]
struct GenScenes {
    #[arg(long, default_value_t = 8)]
    count: usize,
    /// Room kind; cycles through all kinds when omitted.
    #[arg(long, value_parser = parse::<RoomKind>)]
    room: Option<RoomKind>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ContextArgs {
    /// Relation depth of scene graph descriptions.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Spell relations out in words instead of three-letter symbols.
    #[arg(long)]
    verbose_context: bool,
}

#[derive(Debug, Args)]
struct GenDataset {
    #[arg(long, default_value_t = 6000)]
    n: usize,
    #[arg(long, default_value = "none", value_parser = parse::<ContextVariant>)]
    variant: ContextVariant,
    /// Fraction of samples in the training split; the rest is halved into
    /// seen and unseen.
    #[arg(long, default_value_t = 5000.0 / 6000.0)]
    split_ratio: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    context: ContextArgs,
}

#[derive(Debug, Args)]
struct Train {
    /// Dataset directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Context variant; defaults to the dataset's.
    #[arg(long, value_parser = parse::<ContextVariant>)]
    variant: Option<ContextVariant>,
    #[arg(long)]
    order: Option<usize>,
    /// Model file; defaults to `<models>/<variant>.gplm`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyKind {
    Greedy,
    #[value(alias = "sample")]
    Sampled,
}

#[derive(Debug, Args)]
struct DecodingArgs {
    #[arg(long, value_enum, default_value_t = StrategyKind::Greedy)]
    strategy: StrategyKind,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    max_len: Option<usize>,
}

#[derive(Debug, Args)]
struct Generate {
    #[arg(long)]
    goal: String,
    #[arg(long, default_value = "none", value_parser = parse::<ContextVariant>)]
    variant: ContextVariant,
    /// Context text placed after the goal.
    #[arg(long, conflicts_with = "scene")]
    context: Option<String>,
    /// Scene file to build the context from.
    #[arg(long, requires = "target")]
    scene: Option<PathBuf>,
    /// Target category the context describes.
    #[arg(long)]
    target: Option<String>,
    /// Model file; defaults to `<models>/<variant>.gplm`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    decoding: DecodingArgs,
    #[command(flatten)]
    context_args: ContextArgs,
}

#[derive(Debug, Args)]
struct Execute {
    #[arg(long)]
    scene: PathBuf,
    /// Plan text such as `GotoLocation(sink), PickupObject(soap)`, or model
    /// output containing `<BOS>` and `<EOS>`.
    #[arg(long, required_unless_present = "plan_file", conflicts_with = "plan_file")]
    plan: Option<String>,
    /// File holding the plan; `-` reads standard input.
    #[arg(long)]
    plan_file: Option<PathBuf>,
    /// Try every instance of an argument's category before failing a step.
    #[arg(long)]
    try_all: bool,
    /// Print every low-level action.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Debug, Args)]
struct Evaluate {
    /// Dataset directory; samples are generated in memory when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 6000)]
    n: usize,
    #[arg(long, default_value_t = 5000.0 / 6000.0)]
    split_ratio: f64,
    #[arg(long, value_delimiter = ',', value_parser = parse::<ContextVariant>)]
    variants: Vec<ContextVariant>,
    #[arg(long, value_delimiter = ',', value_parser = parse::<Split>)]
    splits: Vec<Split>,
    /// Seeds of additional top-k/top-p evaluations per variant.
    #[arg(long, value_delimiter = ',')]
    sample_seeds: Vec<u64>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[command(flatten)]
    decoding: DecodingArgs,
    #[command(flatten)]
    context_args: ContextArgs,
    /// Report directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check the report against the accuracy thresholds; exit 3 on failure.
    #[arg(long)]
    check: bool,
}

#[derive(Debug, Args)]
struct ExportPddl {
    #[arg(long)]
    scene: PathBuf,
    /// Task category; a task is sampled from the scene when omitted.
    #[arg(long, value_parser = parse::<TaskCategory>, requires_all = ["target", "receptacle"])]
    category: Option<TaskCategory>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    receptacle: Option<String>,
    #[arg(long)]
    movable: Option<String>,
    #[arg(long)]
    sliced: bool,
    /// Output directory for `domain.pddl` and `problem.pddl`; prints both
    /// when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Bench {
    /// Samples generated to train models and draw prompts from.
    #[arg(long, default_value_t = 600)]
    n: usize,
    /// Prompts per configuration.
    #[arg(long, default_value_t = 50)]
    prompts: usize,
    /// Trained no-context model; trained in memory when omitted.
    #[arg(long)]
    none_model: Option<PathBuf>,
    /// Trained full-context model; trained in memory when omitted.
    #[arg(long)]
    full_model: Option<PathBuf>,
    /// Exit 3 unless full-context throughput is lower.
    #[arg(long)]
    check: bool,
}

fn parse<T: FromStr<Err: fmt::Display>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: T::Err| e.to_string())
}

/// Bad input that clap cannot detect, reported with the usage exit code.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// A threshold check did not pass.
#[derive(Debug)]
pub struct CheckFailed(pub usize);

impl fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} check(s) failed", self.0)
    }
}

impl std::error::Error for CheckFailed {}

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_CHECK: u8 = 3;

fn run(cli: Cli) -> Result<()> {
    let mut config = Config::load(cli.config.as_deref()).map_err(|e| UsageError(format!("{e:#}")))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let single = matches!(cli.command, Command::Generate(_) | Command::Execute(_) | Command::ExportPddl(_));
    let jobs = cli.jobs.unwrap_or(if single { 1 } else { 0 });
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    match cli.command {
        Command::GenScenes(a) => commands::gen_scenes(&config, a),
        Command::GenDataset(a) => commands::gen_dataset(&config, a),
        Command::Train(a) => commands::train(&config, a),
        Command::Generate(a) => commands::generate(&config, a),
        Command::Execute(a) => commands::execute(a),
        Command::Evaluate(a) => commands::evaluate(&config, a),
        Command::ExportPddl(a) => commands::export_pddl(&config, a),
        Command::Bench(a) => commands::bench(&config, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(EXIT_USAGE)
            } else if e.is::<CheckFailed>() {
                ExitCode::from(EXIT_CHECK)
            } else {
                ExitCode::from(EXIT_RUNTIME)
            }
        }
    }
}
