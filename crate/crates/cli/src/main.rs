use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use semdb_core::experiment::{compare, run, run_ablation, MetricsReport, RunConfig, ScenarioSource};
use semdb_core::extractor::HeadMode;
use semdb_core::fusion::TimeUnit;
use semdb_core::scenario::{generate_layout, presets, write_layout};
use semdb_core::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "semdb", version, about = "Collaborative sparse detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a scenario layout generated from a preset.
    Generate {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(presets::PRESET_NAMES))]
        preset: String,
        #[arg(long)]
        seed: u64,
        /// Destination file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a latency sweep (or the ablation grid) and emit a metrics table.
    Run(RunArgs),
    /// Align reports on latency and print AP/AB deltas against the first.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Scenario layout file.
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(presets::PRESET_NAMES))]
    preset: Option<String>,
    /// Generator seed for the preset; defaults to --seed.
    #[arg(long, requires = "preset")]
    scenario_seed: Option<u64>,
    #[arg(long)]
    ego: Option<u32>,
    #[arg(long)]
    history: Option<usize>,
    /// Comma-separated channel latencies in ms.
    #[arg(long, value_delimiter = ',')]
    latencies: Option<Vec<u64>>,
    #[arg(long, value_enum)]
    head_mode: Option<HeadArg>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, value_enum)]
    time_unit: Option<TimeArg>,
    #[arg(long)]
    no_rte: bool,
    #[arg(long)]
    no_shuffle_ego: bool,
    #[arg(long)]
    no_reweight: bool,
    #[arg(long)]
    no_revoxelize: bool,
    #[arg(long)]
    no_temporal_fusion: bool,
    /// Fuse only the ego's own SemDBs.
    #[arg(long)]
    no_fusion: bool,
    /// Record operation names per row in the JSON sidecar.
    #[arg(long)]
    trace: bool,
    /// Run the seven-row flag grid instead of a single configuration.
    #[arg(long)]
    ablation: bool,
    /// CSV destination (a JSON sidecar is written next to it); stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeadArg {
    Heuristic,
    Seeded,
}

#[derive(Clone, Copy, ValueEnum)]
enum TimeArg {
    Frames,
    Ms,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                toml::from_str(&text).map_err(|e| Error::Config {
                    field: "config".into(),
                    reason: e.to_string(),
                })?
            }
            None => RunConfig::default(),
        };
        cfg.seed = self.seed;
        if let Some(path) = self.scenario {
            cfg.scenario = ScenarioSource::File { path };
        }
        if let Some(name) = self.preset {
            cfg.scenario = ScenarioSource::Preset {
                name,
                seed: self.scenario_seed,
            };
        }
        cfg.ego = self.ego.or(cfg.ego);
        cfg.history = self.history.unwrap_or(cfg.history);
        cfg.latencies_ms = self.latencies.unwrap_or(cfg.latencies_ms);
        if let Some(h) = self.head_mode {
            cfg.head_mode = match h {
                HeadArg::Heuristic => HeadMode::Heuristic,
                HeadArg::Seeded => HeadMode::SeededWeights,
            };
        }
        cfg.channels = self.channels.unwrap_or(cfg.channels);
        cfg.tau = self.tau.unwrap_or(cfg.tau);
        cfg.window = self.window.unwrap_or(cfg.window);
        if let Some(t) = self.time_unit {
            cfg.time_unit = match t {
                TimeArg::Frames => TimeUnit::Frames,
                TimeArg::Ms => TimeUnit::Milliseconds,
            };
        }
        let f = &mut cfg.flags;
        f.rte &= !self.no_rte;
        f.shuffle_ego &= !self.no_shuffle_ego;
        f.reweight &= !self.no_reweight;
        f.revoxelize &= !self.no_revoxelize;
        f.temporal_fusion &= !self.no_temporal_fusion;
        cfg.collaborate &= !self.no_fusion;
        cfg.trace |= self.trace;
        cfg.output = self.output.or(cfg.output);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Error> {
    match output {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate { preset, seed, output } => {
            let layout = generate_layout(seed, &presets::by_name(&preset)?)?;
            emit(&write_layout(&layout)?, output.as_deref())
        }
        Command::Run(args) => {
            let ablation = args.ablation;
            let cfg = args.resolve()?;
            let out = cfg.output.clone();
            if ablation {
                return emit(&run_ablation(&cfg)?.to_csv()?, out.as_deref());
            }
            let report = run(&cfg)?;
            match out {
                Some(path) => {
                    let sidecar = report.write(&path)?;
                    eprintln!("wrote {} and {}", path.display(), sidecar.display());
                    Ok(())
                }
                None => emit(&report.to_csv()?, None),
            }
        }
        Command::Compare { reports, output } => {
            let loaded = reports.iter().map(|p| MetricsReport::read(p)).collect::<Result<Vec<_>, _>>()?;
            emit(&compare(&loaded)?.to_csv()?, output.as_deref())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::ScenarioFormat(_) | Error::Csv(_) | Error::Json(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
