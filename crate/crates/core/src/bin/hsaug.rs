use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hsaug::annotation::{plan_sessions, router, serve, AnnotationService, PlanConfig, SessionPlan};
use hsaug::corpus::{corpus_stats, read_corpus};
use hsaug::generate::plan_quotas;
use hsaug::pipeline::{format_summary, Pipeline, RunConfig, Strategy};
use hsaug::Error;

#[derive(Parser)]
#[command(name = "hsaug", version, about = "Target-aware augmentation, filtering and evaluation for hate speech corpora")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML or JSON run configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a config field, e.g. `--set downstream_training.epochs=4`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    gold: Option<PathBuf>,
    #[arg(long, global = true)]
    eval: Option<PathBuf>,
    #[arg(long, global = true)]
    hatecheck: Option<PathBuf>,
    #[arg(long, global = true)]
    annotations: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', global = true)]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', global = true)]
    strategies: Option<Vec<Strategy>>,
    /// Increase log detail (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Args)]
struct SeedArg {
    /// Run one fold only; all configured seeds otherwise.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Toml,
    Json,
}

#[derive(Args)]
struct PlanArgs {
    /// Generated corpus for one setup as NAME=PATH; repeat per setup.
    #[arg(long = "setup", value_name = "NAME=PATH", required = true)]
    setups: Vec<String>,
    #[arg(long, default_value_t = 70)]
    items_per_setup: usize,
    #[arg(long, default_value_t = 0.1)]
    overlap: f64,
    #[arg(long, default_value_t = 2)]
    annotators: usize,
    #[arg(long, default_value_t = 42)]
    plan_seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Print the effective configuration.
    InitConfig {
        #[arg(long, value_enum, default_value = "toml")]
        format: Format,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Aggregate raw annotations into the corpus.
    Ingest,
    /// Corpus statistics as JSON.
    Stats {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Draw the gold sample for each fold.
    Sample(SeedArg),
    /// EDA augmentation of the gold sample.
    Eda(SeedArg),
    /// Write the prompt/completion file for finetuning a generator.
    ExportFinetune(SeedArg),
    /// Print the per-cell generation quotas.
    PlanQuotas {
        #[arg(long)]
        total: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        no_target: bool,
    },
    /// Generate candidates with the configured backend.
    Generate(SeedArg),
    /// Filter generated candidates for label consistency.
    Filter {
        #[command(flatten)]
        seed: SeedArg,
        /// External classifier scores (JSON lines) instead of the built-in filter model.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
    /// Build the training set of every strategy.
    Mix(SeedArg),
    /// Train downstream classifiers.
    Train(SeedArg),
    /// Evaluate all models and print the mean±stdev table.
    Eval,
    /// Evaluate all models on HateCheck.
    Hatecheck,
    /// Pairwise ASO significance between strategies.
    Aso,
    /// Every stage, every seed.
    Run,
    /// Write an annotation session plan.
    PlanAnnotation {
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Serve the annotation API (and UI assets when --ui-dir is given).
    ServeAnnotation {
        /// Plan written by plan-annotation.
        #[arg(long, conflicts_with = "setups")]
        plan: Option<PathBuf>,
        #[arg(long = "setup", value_name = "NAME=PATH")]
        setups: Vec<String>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Append-only judgment log; replayed on start.
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

fn load_config(g: &Global) -> hsaug::Result<RunConfig> {
    let mut config = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for o in &g.overrides {
        config.set(o)?;
    }
    let paths = &mut config.paths;
    if let Some(p) = &g.out_dir {
        paths.out_dir = p.clone();
    }
    for (flag, slot) in [
        (&g.gold, &mut paths.gold),
        (&g.eval, &mut paths.eval),
        (&g.hatecheck, &mut paths.hatecheck),
        (&g.annotations, &mut paths.annotations),
    ] {
        if flag.is_some() {
            slot.clone_from(flag);
        }
    }
    if let Some(s) = &g.seeds {
        config.seeds = s.clone();
    }
    if let Some(s) = &g.strategies {
        config.strategies = s.clone();
    }
    Ok(config)
}

fn for_seeds(p: &mut Pipeline, seed: &SeedArg, mut f: impl FnMut(&mut Pipeline, u64) -> hsaug::Result<()>) -> hsaug::Result<()> {
    let seeds = match seed.seed {
        Some(s) => vec![s],
        None => p.config().seeds.clone(),
    };
    for s in seeds {
        f(p, s)?;
    }
    Ok(())
}

fn print_json<T: serde::Serialize>(value: &T) -> hsaug::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load_setups(specs: &[String]) -> hsaug::Result<Vec<(String, Vec<hsaug::corpus::Post>)>> {
    specs
        .iter()
        .map(|s| {
            let (name, path) = s
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--setup `{s}` is not NAME=PATH")))?;
            Ok((name.to_string(), read_corpus(Path::new(path))?))
        })
        .collect()
}

fn plan_from(args: &PlanArgs) -> hsaug::Result<SessionPlan> {
    let cfg = PlanConfig {
        items_per_setup: args.items_per_setup,
        overlap_fraction: args.overlap,
        annotators: args.annotators,
        seed: args.plan_seed,
    };
    plan_sessions(&load_setups(&args.setups)?, &cfg)
}

fn run(cli: Cli) -> hsaug::Result<()> {
    let config = load_config(&cli.global)?;
    match cli.command {
        Command::InitConfig { format, output } => {
            let text = match format {
                Format::Toml => config.to_toml()?,
                Format::Json => serde_json::to_string_pretty(&config)? + "\n",
            };
            match output {
                Some(path) => std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?,
                None => print!("{text}"),
            }
        }
        Command::Stats { corpus } => {
            let path = corpus
                .or(config.paths.gold.clone())
                .unwrap_or_else(|| config.paths.out_dir.join("ingest/corpus.jsonl"));
            print_json(&corpus_stats(&read_corpus(&path)?))?;
        }
        Command::PlanQuotas {
            total,
            batch_size,
            no_target,
        } => {
            let plan = plan_quotas(
                total.unwrap_or(config.generation_total),
                config.with_target && !no_target,
                batch_size.unwrap_or(config.generation.batch_size),
            )?;
            print_json(&plan)?;
        }
        Command::PlanAnnotation { plan, output } => {
            let plan = plan_from(&plan)?;
            plan.save(&output)?;
            eprintln!("planned {} items ({} shared)", plan.items.len(), plan.overlap_ids().count());
        }
        Command::ServeAnnotation {
            plan,
            setups,
            addr,
            log,
            ui_dir,
        } => {
            let plan = match plan {
                Some(path) => SessionPlan::load(&path)?,
                None if !setups.is_empty() => plan_sessions(&load_setups(&setups)?, &PlanConfig::default())?,
                None => return Err(Error::Config("serve-annotation needs --plan or --setup".into())),
            };
            let service = Arc::new(AnnotationService::open(plan, Some(&log))?);
            let app = router(service, ui_dir);
            let served: std::io::Result<()> = tokio::runtime::Runtime::new().and_then(|rt| {
                rt.block_on(async {
                    let listener = tokio::net::TcpListener::bind(addr).await?;
                    eprintln!("annotation API listening on http://{}", listener.local_addr()?);
                    serve(listener, app).await
                })
            });
            served.map_err(|e| Error::Backend(format!("annotation server: {e}")))?;
        }
        command => {
            let mut p = Pipeline::open(config)?;
            match command {
                Command::Ingest => p.ingest()?,
                Command::Sample(s) => for_seeds(&mut p, &s, Pipeline::sample)?,
                Command::Eda(s) => for_seeds(&mut p, &s, Pipeline::eda)?,
                Command::ExportFinetune(s) => for_seeds(&mut p, &s, Pipeline::export_finetune)?,
                Command::Generate(s) => for_seeds(&mut p, &s, Pipeline::generate)?,
                Command::Filter { seed, scores } => for_seeds(&mut p, &seed, |p, s| p.filter(s, scores.as_deref()))?,
                Command::Mix(s) => for_seeds(&mut p, &s, Pipeline::mix)?,
                Command::Train(s) => for_seeds(&mut p, &s, Pipeline::train_fold)?,
                Command::Eval => print!("{}", format_summary(&p.eval()?)),
                Command::Hatecheck => print_json(&p.hatecheck()?)?,
                Command::Aso => print_json(&p.aso()?)?,
                Command::Run => print!("{}", format_summary(&p.run_all()?)),
                _ => unreachable!("handled above"),
            }
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Dependency { .. } | Error::StaleInput { .. } => 3,
        Error::Backend(_) | Error::PartialGeneration { .. } => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
