use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use hpfair_core::evaluation::EvalReport;
use hpfair_core::study::{Stage, StageSummary, Study, StudyConfig};
use hpfair_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_STAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "hpfair", version, about = "Learn the fairness of hyperparameter configurations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage: trace, fit, eval, shift, report.
    Run(StudyArgs),
    /// Generate fairness traces for every dataset and algorithm.
    Trace(StudyArgs),
    /// Fit every surrogate kind on every trace.
    Fit(StudyArgs),
    /// Repeated held-out evaluation on every trace.
    Eval(StudyArgs),
    /// Train on base releases, score on shifted ones.
    Shift(StudyArgs),
    /// Render the report, from a study's evaluation files or a single EvalReport JSON.
    Report(ReportArgs),
}

#[derive(Args)]
struct StudyArgs {
    /// Study config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Regenerate traces even when cached ones match.
    #[arg(long)]
    force: bool,
    /// Base seed; overrides the config and any per-stage seeds in it.
    #[arg(long)]
    seed: Option<u64>,
    /// Maximum worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    config: Option<PathBuf>,
    /// Render this EvalReport JSON instead of a study's files.
    #[arg(long)]
    input: Option<PathBuf>,
    /// With --config: output directory. With --input: Markdown file to
    /// write instead of printing.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
}

enum Failure {
    Config(anyhow::Error),
    Stage(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.into()),
            other => Failure::Stage(other.into()),
        }
    }
}

fn set_jobs(jobs: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Failure::Config(anyhow::anyhow!("--jobs must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")
            .map_err(Failure::Stage)?;
    }
    Ok(())
}

fn open_study(config: &Path, out: Option<PathBuf>, force: bool, seed: Option<u64>) -> Result<Study, Failure> {
    let mut cfg = StudyConfig::load(config).map_err(|e| {
        Failure::Config(anyhow::Error::new(e).context(format!("reading config {}", config.display())))
    })?;
    if let Some(s) = seed {
        cfg.reseed(s);
    }
    let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
    Study::new(cfg, &base, out, force).map_err(Failure::from)
}

fn print_summary(stage: Stage, s: &StageSummary) {
    println!(
        "{}: {} written, {} cached, {} failed",
        stage.as_str(),
        s.written.len(),
        s.cache_hits.len(),
        s.failures.len()
    );
    for f in &s.failures {
        eprintln!("  {} failed on {}: {}", f.stage, f.item, f.message);
    }
}

fn run_stages(args: StudyArgs, stages: &[Stage]) -> Result<(), Failure> {
    set_jobs(args.jobs)?;
    let study = open_study(&args.config, args.out, args.force, args.seed)?;
    let mut failed = 0;
    for &stage in stages {
        let s = study.run_stage(stage)?;
        print_summary(stage, &s);
        failed += s.failures.len();
    }
    if failed > 0 {
        return Err(Failure::Stage(anyhow::anyhow!(
            "{failed} item(s) failed; see manifest.json in {}",
            study.output_dir().display()
        )));
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    set_jobs(args.jobs)?;
    if let Some(input) = args.input {
        let r = EvalReport::load(&input)?;
        let md = r.to_markdown();
        match args.out {
            Some(p) => std::fs::write(&p, md)
                .with_context(|| format!("writing {}", p.display()))
                .map_err(Failure::Stage)?,
            None => print!("{md}"),
        }
        return Ok(());
    }
    let config = args.config.expect("clap requires --config without --input");
    run_stages(
        StudyArgs {
            config,
            out: args.out,
            force: false,
            seed: args.seed,
            jobs: None,
        },
        &[Stage::Report],
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run_stages(a, &Stage::ALL),
        Command::Trace(a) => run_stages(a, &[Stage::Trace]),
        Command::Fit(a) => run_stages(a, &[Stage::Fit]),
        Command::Eval(a) => run_stages(a, &[Stage::Eval]),
        Command::Shift(a) => run_stages(a, &[Stage::Shift]),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("{e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Stage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_STAGE)
        }
    }
}
