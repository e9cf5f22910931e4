use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crisisnews::manifest::MANIFEST_FILE;
use crisisnews::synthetic;
use crisisnews::{Overrides, Pipeline, PipelineConfig, Result, Stage};

#[derive(Parser)]
#[command(name = "crisisnews", version, about = "Run the crisis news sympathy pipeline")]
struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(short, long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Takes precedence over CRISISNEWS_OUTPUT_DIR and the config file.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    sample_target: Option<usize>,
    #[arg(long)]
    downsample_runs: Option<usize>,
    /// Skip the embed, train and predict stages.
    #[arg(long)]
    no_classifier: bool,
}

impl RunArgs {
    fn pipeline(&self) -> Result<Pipeline> {
        let overrides = Overrides {
            seed: self.seed,
            output_dir: self.output_dir.clone(),
            sample_target: self.sample_target,
            downsample_runs: self.downsample_runs,
            no_classifier: self.no_classifier,
        };
        Pipeline::new(PipelineConfig::load(&self.config, &overrides)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage in order.
    Run(RunArgs),
    /// Run one stage; its upstream outputs must be current.
    Stage {
        #[arg(value_enum)]
        name: Stage,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Rebuild the report from whatever stage outputs exist.
    Report(RunArgs),
    /// Check the config and every path it names.
    ValidateConfig {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Write the synthetic corpus and labels used by the bundled config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = synthetic::DEFAULT_SEED)]
        seed: u64,
    },
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => {
            let p = args.pipeline()?;
            let records = p.run()?;
            println!("ran {} stages; report in {}", records.len(), p.stage_dir(Stage::Report).display());
            println!("manifest: {}", p.out().join(MANIFEST_FILE).display());
        }
        Command::Stage { name, args } => {
            let p = args.pipeline()?;
            let record = p.run_stage(name)?;
            println!("stage {name}: {} files in {}", record.files.len(), p.stage_dir(name).display());
            for note in &record.notes {
                println!("  note: {note}");
            }
        }
        Command::Report(args) => {
            let p = args.pipeline()?;
            let record = p.run_stage(Stage::Report)?;
            println!("report in {}", p.stage_dir(Stage::Report).display());
            for note in &record.notes {
                println!("  note: {note}");
            }
        }
        Command::ValidateConfig { config } => {
            let cfg = PipelineConfig::load(&config, &Overrides::default())?;
            cfg.validate()?;
            println!("{}: ok (config hash {})", config.display(), cfg.hash()?);
        }
        Command::Synth { out, seed } => {
            let summary = synthetic::generate(&out, seed)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

