use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::environments::EnvironmentRegistry;
use crate::evolution::Trainer;
use crate::graph::{TeamId, Vertex};
use crate::instructions::InstructionSetRegistry;

use super::{export_dot, import_dot, load_config, play_episodes, resolve_threads, CsvLogger, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "tpg", version, about = "Train, evaluate and inspect Tangled Program Graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve a population and save the champion policy
    Train(TrainArgs),
    /// Play episodes with a saved policy
    Eval(EvalArgs),
    /// Print statistics about a saved graph
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// JSON file with run settings and evolution parameters
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, master included [default: $TPG_THREADS or hardware threads]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    #[arg(long)]
    env: Option<String>,
    /// Instruction set: simple, complex, or any registered set
    #[arg(long)]
    iset: Option<String>,
    /// Where to write the champion graph (DOT)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the per-generation CSV log
    #[arg(long)]
    log: Option<PathBuf>,
    /// Write wall-clock columns in the log
    #[arg(long, value_enum)]
    log_timings: Option<Toggle>,
    /// No per-generation progress on stderr
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    env: String,
    #[arg(long, default_value_t = 10)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Root team to play; defaults to the only root
    #[arg(long)]
    root: Option<u64>,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    graph: PathBuf,
}

enum Failure {
    /// Bad invocation or unreadable input: exit code 2.
    Usage(String),
    /// Anything that goes wrong once the inputs were read: exit code 1.
    Fault(String),
}

fn fault(e: impl std::fmt::Display) -> Failure {
    Failure::Fault(e.to_string())
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn create_output(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| fault(format!("cannot write {}: {e}", path.display())))
}

/// Runs the command line with `args` (program name first) and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Train(args) => train(args, stdout, stderr),
        Command::Eval(args) => eval(args, stdout),
        Command::Inspect(args) => inspect(args, stdout),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(message)) => {
            let _ = writeln!(stderr, "error: {message}");
            2
        }
        Err(Failure::Fault(message)) => {
            let _ = writeln!(stderr, "error: {message}");
            1
        }
    }
}

fn train(args: TrainArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(path) => load_config(&read_input(path)?).map_err(|e| fault(format!("{}: {e}", path.display())))?,
        None => RunConfig::default(),
    };
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    if let Some(env) = args.env {
        config.env = env;
    }
    if let Some(iset) = args.iset {
        config.iset = iset;
    }
    if args.out.is_some() {
        config.out = args.out;
    }
    if args.log.is_some() {
        config.log = args.log;
    }
    if let Some(toggle) = args.log_timings {
        config.log_timings = toggle == Toggle::On;
    }
    let threads = resolve_threads(args.threads.map(|t| t as usize), config.threads);
    let seed = config
        .seed
        .ok_or_else(|| Failure::Usage("a seed is required (--seed or \"seed\" in the config)".into()))?;
    let out = config
        .out
        .clone()
        .ok_or_else(|| Failure::Usage("an output graph path is required (--out or \"out\" in the config)".into()))?;

    let env = EnvironmentRegistry::default().create(&config.env).map_err(fault)?;
    let iset = InstructionSetRegistry::default().build(&config.iset).map_err(fault)?;
    let mut logger = match &config.log {
        Some(path) => Some(CsvLogger::new(create_output(path)?, config.log_timings).map_err(fault)?),
        None => None,
    };
    let generations = config.params.nb_generations;
    let mut trainer = Trainer::new(config.params, Arc::new(iset), env, seed, threads).map_err(fault)?;
    for _ in 0..generations {
        let report = trainer.run_generation().map_err(fault)?;
        if let Some(logger) = logger.as_mut() {
            logger.log(&report).map_err(fault)?;
        }
        for message in &report.faults {
            let _ = writeln!(stderr, "warning: generation {}: {message}", report.generation);
        }
        if !args.quiet {
            let _ = writeln!(
                stderr,
                "generation {:>4}  best {:>12.4}  mean {:>12.4}  teams {:>5}  eval {:>8.1} ms",
                report.generation,
                report.best_fitness,
                report.mean_fitness,
                report.team_count,
                report.evaluation_time.as_secs_f64() * 1e3
            );
        }
    }
    if let Some(logger) = logger {
        logger.into_inner().flush().map_err(fault)?;
    }
    let (fitness, champion) = trainer.champion().ok_or_else(|| fault("no generation was run"))?;
    let mut file = create_output(&out)?;
    file.write_all(export_dot(champion).as_bytes())
        .and_then(|_| file.flush())
        .map_err(fault)?;
    let _ = writeln!(
        stdout,
        "trained {generations} generations with {threads} threads; champion fitness {fitness}; graph written to {}",
        out.display()
    );
    Ok(())
}

fn eval(args: EvalArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let text = read_input(&args.graph)?;
    let graph = import_dot(&text, &InstructionSetRegistry::default())
        .map_err(|e| fault(format!("{}: {e}", args.graph.display())))?;
    let mut env = EnvironmentRegistry::default().create(&args.env).map_err(fault)?;
    if !graph.context().layout().matches(env.data_sources()) || graph.action_count() != env.action_count() {
        return Err(fault(format!(
            "graph does not fit environment `{}` (state layout or action count differ)",
            args.env
        )));
    }
    let root = match args.root {
        Some(id) => TeamId(id),
        None => match graph.roots()[..] {
            [only] => only,
            [] => return Err(fault("graph has no root team")),
            _ => return Err(Failure::Usage("graph has several roots; pick one with --root".into())),
        },
    };
    if !graph.roots().contains(&root) {
        return Err(Failure::Usage(format!("{root} is not a root of the graph")));
    }
    let scores = play_episodes(&graph, root, env.as_mut(), args.episodes, args.seed, None).map_err(fault)?;
    for (i, score) in scores.iter().enumerate() {
        let _ = writeln!(stdout, "episode {i}: {score}");
    }
    let mean = scores.iter().sum::<f64>() / scores.len().max(1) as f64;
    let _ = writeln!(stdout, "mean: {mean}");
    Ok(())
}

fn inspect(args: InspectArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let text = read_input(&args.graph)?;
    let graph = import_dot(&text, &InstructionSetRegistry::default())
        .map_err(|e| fault(format!("{}: {e}", args.graph.display())))?;
    let ctx = graph.context();
    let layout = ctx.layout();
    let roots = graph.roots();
    let action_edges = graph.edges().filter(|e| e.destination().is_action()).count();
    let lengths: Vec<usize> = graph.edges().map(|e| e.program.len()).collect();
    let mut usage = vec![0usize; ctx.instructions().len()];
    for edge in graph.edges() {
        for line in edge.program.lines() {
            usage[line.instruction] += 1;
        }
    }
    let used_actions: std::collections::BTreeSet<usize> = graph
        .edges()
        .filter_map(|e| match e.destination() {
            Vertex::Action(a) => Some(a),
            Vertex::Team(_) => None,
        })
        .collect();

    let mut out = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(out, "instruction set: {}", ctx.instruction_set().name());
    let _ = writeln!(out, "registers: {}", layout.register_count());
    let sources: Vec<String> = layout.environment().iter().map(|d| d.layout_token()).collect();
    let _ = writeln!(out, "sources: {}", sources.join(" "));
    let _ = writeln!(out, "actions: {} ({} used)", graph.action_count(), used_actions.len());
    let _ = writeln!(out, "teams: {}", graph.team_count());
    let names: Vec<String> = roots.iter().map(ToString::to_string).collect();
    let _ = writeln!(out, "roots: {} ({})", roots.len(), names.join(", "));
    let _ = writeln!(
        out,
        "edges: {} ({} to actions, {} to teams)",
        graph.edge_count(),
        action_edges,
        graph.edge_count() - action_edges
    );
    if !lengths.is_empty() {
        let total: usize = lengths.iter().sum();
        let _ = writeln!(
            out,
            "program lines: min {} / mean {:.2} / max {} (total {total})",
            lengths.iter().min().unwrap(),
            total as f64 / lengths.len() as f64,
            lengths.iter().max().unwrap()
        );
    }
    let _ = writeln!(out, "instruction usage:");
    for (instruction, count) in ctx.instructions().iter().zip(usage) {
        let _ = writeln!(out, "  {:<6} {count}", instruction.name());
    }
    stdout.write_all(out.as_bytes()).map_err(fault)
}
