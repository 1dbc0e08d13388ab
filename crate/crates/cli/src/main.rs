use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dredge::pipeline::{run_batch, run_pipeline, run_stage, write_report, RunConfig, Stage, Variant};
use dredge::synth::{write_planted, PlantedConfig};
use dredge::{Error, ErrorClass};

/// Credibility classification and unreliable-domain discovery over domain,
/// user and dredge-word graphs.
#[derive(Debug, Parser)]
#[command(name = "dredge", version)]
struct Cli {
    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build and snapshot the variant's graph.
    BuildGraph(RunArgs),
    /// Compute positional features.
    Embed(RunArgs),
    /// Train the model and write a checkpoint.
    Train(RunArgs),
    /// Score every domain with the trained model.
    Predict(RunArgs),
    /// Rank unlabeled domains.
    Discover(RunArgs),
    /// Compute the metric report.
    Evaluate(RunArgs),
    /// Run every stage, once per configured seed.
    Run(RunArgs),
    /// Write the run report for whatever stages have run.
    Report(RunArgs),
    /// Check the config and list every problem found.
    Validate(RunArgs),
    /// Write a planted two-block dataset and a run config for it.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Run config (TOML).
    #[arg(short, long)]
    config: PathBuf,

    /// Override a config key, e.g. `--set train.hidden=64`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    variant: Option<Variant>,

    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Directory to write into.
    #[arg(short, long)]
    out: PathBuf,

    #[arg(long, default_value_t = 500)]
    domains: usize,

    #[arg(long, default_value_t = 200)]
    users: usize,

    #[arg(long, default_value_t = 0)]
    unlabeled: usize,

    #[arg(long, default_value_t = 0.05)]
    p_in: f64,

    #[arg(long, default_value_t = 0.005)]
    p_out: f64,

    /// Dredge words; also writes search results, posts and judgments.
    #[arg(long, default_value_t = 0)]
    dredge_words: usize,

    #[arg(long, default_value_t = 0)]
    candidates: usize,

    /// Dimension of user text vectors, 0 for none.
    #[arg(long, default_value_t = 0)]
    user_text_dim: usize,

    /// Dimension of dredge-word text vectors, written only with dredge words.
    #[arg(long, default_value_t = 16)]
    dredge_text_dim: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl RunArgs {
    fn load(&self) -> dredge::Result<RunConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        if let Some(v) = self.variant {
            overrides.push(format!("variant={:?}", v.as_str()));
        }
        if let Some(dir) = &self.output_dir {
            let abs = std::path::absolute(dir).map_err(|e| Error::io(dir, e))?;
            overrides.push(format!("output_dir={:?}", abs.display().to_string()));
        }
        RunConfig::load(&self.config, &overrides)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> dredge::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn stage(args: &RunArgs, st: Stage) -> dredge::Result<()> {
    let cfg = args.load()?;
    cfg.validate()?;
    print_json(&run_stage(&cfg, st)?)
}

fn run(args: &RunArgs) -> dredge::Result<()> {
    let cfg = args.load()?;
    if cfg.seeds.is_empty() {
        let report = run_pipeline(&cfg)?;
        println!("{}", cfg.output_dir.join(dredge::pipeline::REPORT_FILE).display());
        if let Some(m) = &report.metrics {
            print_json(m)?;
        }
    } else {
        let batch = run_batch(&cfg)?;
        println!("{}", cfg.output_dir.join(dredge::pipeline::BATCH_REPORT_FILE).display());
        print_json(&batch.metrics)?;
    }
    Ok(())
}

fn report(args: &RunArgs) -> dredge::Result<()> {
    let cfg = args.load()?;
    let report = write_report(&cfg)?;
    println!("{}", cfg.output_dir.join(dredge::pipeline::REPORT_FILE).display());
    println!("{} artifacts, {} stage logs", report.artifacts.len(), report.stages.len());
    Ok(())
}

fn validate(args: &RunArgs) -> dredge::Result<()> {
    let cfg = args.load()?;
    match dredge::pipeline::validate_config(&cfg) {
        Ok(()) => {
            println!("ok");
            Ok(())
        }
        Err(errs) => {
            for e in &errs {
                eprintln!("  {e}");
            }
            Err(Error::Config(format!("{} problems found", errs.len())))
        }
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn synth(args: &SynthArgs) -> dredge::Result<()> {
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let cfg = PlantedConfig {
        domains: args.domains,
        users: args.users,
        unlabeled: args.unlabeled,
        p_in: args.p_in,
        p_out: args.p_out,
        dredge_words: args.dredge_words,
        candidates: args.candidates,
        user_text_dim: args.user_text_dim,
        dredge_text_dim: args.dredge_text_dim,
        seed: args.seed,
        ..PlantedConfig::default()
    };
    let files = write_planted(&args.out, &cfg)?;
    let variant = if files.serp.is_some() { Variant::EDomainsUsersDredge } else { Variant::EDomainsUsers };
    let mut toml = format!("variant = \"{variant}\"\nseed = {}\noutput_dir = \"run\"\n\n[inputs]\n", args.seed);
    let required = [
        ("backlinks", Some(&files.backlinks)),
        ("attributes", Some(&files.attributes)),
        ("labels", Some(&files.labels)),
        ("mentions", Some(&files.mentions)),
    ];
    let optional = [
        ("serp", files.serp.as_ref()),
        ("user_vectors", files.user_vectors.as_ref()),
        ("dredge_vectors", files.dredge_vectors.as_ref()),
        ("posts", files.posts.as_ref()),
        ("seed_list", files.seed_list.as_ref()),
        ("eval_list", files.eval_list.as_ref()),
        ("judgments", files.judgments.as_ref()),
    ];
    for (key, path) in required.into_iter().chain(optional) {
        if let Some(p) = path {
            let _ = writeln!(toml, "{key} = \"{}\"", file_name(p));
        }
    }
    if files.serp.is_some() {
        toml += "\n[discovery]\ndredge = \"lower\"\n";
    }
    let path = args.out.join("run.toml");
    std::fs::write(&path, toml).map_err(|e| Error::io(&path, e))?;
    println!("{}", path.display());
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Divergence => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::BuildGraph(a) => stage(a, Stage::BuildGraph),
        Command::Embed(a) => stage(a, Stage::Embed),
        Command::Train(a) => stage(a, Stage::Train),
        Command::Predict(a) => stage(a, Stage::Predict),
        Command::Discover(a) => stage(a, Stage::Discover),
        Command::Evaluate(a) => stage(a, Stage::Evaluate),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
        Command::Validate(a) => validate(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
