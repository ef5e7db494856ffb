use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use idsbench::config::{resolve, CliError, ConfigFile, RunFlags};
use idsbench::inspect::inspect_data;
use idsbench::plotcmd::replot;
use idsbench::report::export_report;
use idsbench::run::{dry_run, run_scenario};
use idsbench_core::dataset::{builtin_schema, ScenarioId, SchemaConfig};

/// Threat-detection benchmark: balanced training, four classifiers, two
/// stacked super learners, AUC/accuracy/F-score reporting.
#[derive(Parser)]
#[command(name = "idsbench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario end to end and export results, curves, and models.
    Run(RunArgs),
    /// Load a dataset, print its summary, optionally verify counts.
    InspectData(InspectArgs),
    /// Re-render roc_all.svg from the ROC CSVs of a previous run.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario id: network | android | iot.
    #[arg(long)]
    scenario: Option<String>,
    /// Path to the scenario's CSV file.
    #[arg(long)]
    data: Option<PathBuf>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Schema JSON overriding the shipped scenario schema.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Held-out fraction in (0, 1).
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Stacking fold count.
    #[arg(long)]
    k: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cap on worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Resolve config, load and digest data, write the manifest; no training.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    data: PathBuf,
    /// Scenario id: network | android | iot.
    #[arg(long)]
    scenario: String,
    /// Schema JSON overriding the shipped scenario schema.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Exit nonzero unless the published reference counts match.
    #[arg(long)]
    expect_paper_counts: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Directory holding roc_<model>.csv files from a previous run.
    #[arg(long = "in")]
    in_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => run_command(args),
        Command::InspectData(args) => inspect_command(args),
        Command::Plot(args) => {
            let path = replot(&args.in_dir)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn run_command(args: RunArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let flags = RunFlags {
        scenario: args.scenario,
        data: args.data,
        schema: args.schema,
        seed: args.seed,
        test_fraction: args.test_fraction,
        k: args.k,
        out: args.out,
        workers: args.workers,
        dry_run: args.dry_run,
    };
    let config = resolve(&flags, &file)?;

    let attempt = if config.dry_run {
        dry_run(&config)
    } else {
        run_scenario(&config)
    };
    match attempt.result {
        Ok(output) => {
            if config.dry_run {
                std::fs::create_dir_all(&config.out).map_err(|e| {
                    CliError::Data(format!("cannot create {}: {e}", config.out.display()))
                })?;
                let path = config.out.join("manifest.json");
                std::fs::write(&path, attempt.manifest.to_json())
                    .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
                println!("dry run: wrote {}", path.display());
                return Ok(());
            }
            let written = export_report(&output, &attempt.manifest, &config.out)?;
            print!("{}", output.table.to_text());
            println!("wrote {} files to {}", written.len(), config.out.display());
            Ok(())
        }
        Err(e) => {
            // Leave the manifest-so-far behind for the audit trail.
            if std::fs::create_dir_all(&config.out).is_ok() {
                let _ =
                    std::fs::write(config.out.join("manifest.json"), attempt.manifest.to_json());
            }
            Err(e)
        }
    }
}

fn inspect_command(args: InspectArgs) -> Result<(), CliError> {
    let scenario = ScenarioId::parse(&args.scenario)
        .ok_or_else(|| CliError::Config(format!("unknown scenario {:?}", args.scenario)))?;
    let schema: SchemaConfig = match &args.schema {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            SchemaConfig::from_json(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => builtin_schema(scenario),
    };
    let text = inspect_data(&args.data, scenario, &schema, args.expect_paper_counts)?;
    print!("{text}");
    Ok(())
}
