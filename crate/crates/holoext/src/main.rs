use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use holoext::report::{emit, Format, Tally};
use holoext::{run, Kind, ReportRow, Suite};

#[derive(Parser)]
#[command(
    name = "holoext",
    version,
    about = "Numerical checks of the integral-formula extension operator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in the config.
    VerifyAll(RunArgs),
    Reproduce(RunArgs),
    SharpConstant(RunArgs),
    TraumaSweep(RunArgs),
    #[command(name = "thmB-sweep")]
    ThmBSweep(RunArgs),
    Uppsk(RunArgs),
    NormEquivalence(RunArgs),
    Interpolation(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML with [[experiment]] tables).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the CSV and JSON reports.
    #[arg(long)]
    out: PathBuf,
    /// Overrides every experiment's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides every experiment's sample count.
    #[arg(long)]
    samples: Option<usize>,
}

fn main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    let (args, kind) = match cli.command {
        Command::VerifyAll(a) => (a, None),
        Command::Reproduce(a) => (a, Some(Kind::Reproduce)),
        Command::SharpConstant(a) => (a, Some(Kind::SharpConstant)),
        Command::TraumaSweep(a) => (a, Some(Kind::TraumaSweep)),
        Command::ThmBSweep(a) => (a, Some(Kind::ThmBSweep)),
        Command::Uppsk(a) => (a, Some(Kind::Uppsk)),
        Command::NormEquivalence(a) => (a, Some(Kind::NormEquivalence)),
        Command::Interpolation(a) => (a, Some(Kind::Interpolation)),
    };
    let suite = Suite::load(&args.config)?.with_overrides(args.seed, args.samples)?;
    let selected: Vec<_> = suite
        .experiment
        .iter()
        .filter(|c| kind.is_none_or(|k| c.kind == k))
        .collect();
    anyhow::ensure!(
        !selected.is_empty(),
        "no {} experiments in {}",
        kind.map_or("", |k| k.as_str()),
        args.config.display()
    );

    let mut rows: Vec<ReportRow> = Vec::new();
    for cfg in selected {
        let started = std::time::Instant::now();
        let found = run(cfg).with_context(|| format!("experiment {}", cfg.name))?;
        let t = Tally::of(&found);
        eprintln!(
            "{:<32} {:>4} pass {:>3} fail {:>3} inconclusive {:>3} degenerate  {:.1?}",
            cfg.name,
            t.pass,
            t.fail,
            t.inconclusive,
            t.degenerate,
            started.elapsed()
        );
        rows.extend(found);
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let stem = kind.map_or("verify-all", |k| k.as_str());
    for format in [Format::Csv, Format::Json] {
        let path = args.out.join(format!("{stem}.{}", format.extension()));
        emit(&rows, format, &path)?;
        eprintln!("wrote {}", path.display());
    }
    let t = Tally::of(&rows);
    println!(
        "{} rows: {} PASS, {} FAIL, {} INCONCLUSIVE, {} DEGENERATE",
        rows.len(),
        t.pass,
        t.fail,
        t.inconclusive,
        t.degenerate
    );
    Ok(if t.fail == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
