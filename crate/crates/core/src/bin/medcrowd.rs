use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use medcrowd::evalkit::{run_experiment, ExperimentConfig};
use medcrowd::forecast::TrainConfig;
use medcrowd::geogrid::{read_catalog, write_catalog, GridConfig};
use medcrowd::pipeline::{train_all, JobPlan, PipelineConfig, Runner};
use medcrowd::recsvc::{serve, CrowdConfig, ServeConfig};
use medcrowd::synth::{gen_logs, gen_world, read_logs, write_labels_jsonl, write_logs, write_truth_csv, WorldConfig};

#[derive(Parser)]
#[command(name = "medcrowd", version, about = "Hospital crowd density from location logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic city: catalog, logs, ground truth and labels.
    Synth(SynthArgs),
    #[command(subcommand)]
    Pipeline(PipelineCommand),
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Serve the JSON API over a pipeline state directory.
    Serve(ServeArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// World config as JSON; missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    hospitals: Option<usize>,
    #[arg(long)]
    weeks: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum PipelineCommand {
    /// Run the hourly census job over the next N hours.
    Run {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        hours: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        state_dir: PathBuf,
        /// Initialize the state directory from this catalog first.
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// First hour of the first run, used with --catalog.
        #[arg(long, default_value_t = medcrowd::synth::DEFAULT_START_TS)]
        start_ts: i64,
    },
    /// Train one forecaster per hospital on the stored density history.
    Train {
        #[arg(long)]
        state_dir: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long, default_value_t = 8)]
        train_weeks: usize,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Forecast the 24 hours after the last completed run.
    Predict {
        #[arg(long)]
        state_dir: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Run the end-to-end experiment and write its reports.
    Run {
        /// Experiment config as JSON; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    state_dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Models used when a simulation step is due a forecast.
    #[arg(long)]
    models: Option<PathBuf>,
    /// Logs replayed by simulation steps.
    #[arg(long)]
    sim_logs: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

type BoxError = Box<dyn std::error::Error>;

fn synth(args: SynthArgs) -> Result<(), BoxError> {
    let mut cfg: WorldConfig = match &args.config {
        Some(path) => serde_json::from_slice(&std::fs::read(path)?)?,
        None => WorldConfig::default(),
    };
    cfg.n_hospitals = args.hospitals.unwrap_or(cfg.n_hospitals);
    cfg.sim_weeks = args.weeks.unwrap_or(cfg.sim_weeks);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    let world = gen_world(&cfg)?;
    let logs = gen_logs(&world);
    std::fs::create_dir_all(&args.out)?;
    write_catalog(&args.out.join("catalog.json"), &world.hospitals)?;
    write_logs(&args.out.join("logs.jsonl.gz"), &logs.logs)?;
    write_truth_csv(&args.out.join("truth.csv"), &logs.truth)?;
    write_labels_jsonl(&args.out.join("labels.jsonl"), &logs.truth)?;
    std::fs::write(args.out.join("world.json"), world.to_json_bytes())?;
    println!(
        "{} hospitals, {} agents, {} logs over {} weeks -> {}",
        world.hospitals.len(),
        world.agents.len(),
        logs.logs.len(),
        cfg.sim_weeks,
        args.out.display()
    );
    Ok(())
}

fn pipeline(cmd: PipelineCommand) -> Result<(), BoxError> {
    match cmd {
        PipelineCommand::Run {
            logs,
            hours,
            workers,
            state_dir,
            catalog,
            start_ts,
        } => {
            let runner = match catalog {
                Some(path) => {
                    let hospitals = read_catalog(&path)?;
                    Runner::init(&state_dir, &hospitals, PipelineConfig::new(start_ts, GridConfig::default()))?
                }
                None => Runner::open(&state_dir)?,
            };
            let logs = read_logs(&logs)?;
            let manifests = runner.run_hours(&logs, hours, &JobPlan::new(workers)?)?;
            let resolved: usize = manifests.iter().map(|m| m.n_resolved).sum();
            println!(
                "{} runs done ({} total), {} of {} logs resolved",
                manifests.len(),
                runner.completed_runs(),
                resolved,
                manifests.iter().map(|m| m.n_logs).sum::<usize>()
            );
        }
        PipelineCommand::Train {
            state_dir,
            models,
            train_weeks,
            epochs,
            workers,
        } => {
            let runner = Runner::open(&state_dir)?;
            let mut cfg = TrainConfig::default();
            cfg.epochs = epochs.unwrap_or(cfg.epochs);
            std::fs::create_dir_all(&models)?;
            for (id, result) in train_all(&JobPlan::new(workers)?, &runner.histories()?, train_weeks, &cfg) {
                match result {
                    Ok((net, curve)) => {
                        net.save(&models.join(format!("h{id}.dsnn")))?;
                        println!("hospital {id}: best epoch {}", curve.best_epoch);
                    }
                    Err(e) => eprintln!("hospital {id}: {e}"),
                }
            }
        }
        PipelineCommand::Predict {
            state_dir,
            models,
            workers,
        } => {
            let runner = Runner::open(&state_dir)?;
            let m = runner.predict(&models, &JobPlan::new(workers)?)?;
            println!("wrote {} ({} hospitals skipped)", m.prediction_file, m.skipped.len());
            for (id, reason) in m.skipped {
                eprintln!("hospital {id}: {reason}");
            }
        }
    }
    Ok(())
}

fn eval(cmd: EvalCommand) -> Result<(), BoxError> {
    let EvalCommand::Run { config, out, workers } = cmd;
    let mut cfg = match &config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.workers = workers.unwrap_or(cfg.workers);
    let s = run_experiment(&cfg, Some(&out))?;
    println!(
        "vs census: srcc {:.3} re {:.3}; vs truth: srcc {:.3} re {:.3}; census vs truth: srcc {:.3} re {:.3}",
        s.vs_census.srcc_mean,
        s.vs_census.re_mean,
        s.vs_truth.srcc_mean,
        s.vs_truth.re_mean,
        s.census_vs_truth.srcc_mean,
        s.census_vs_truth.re_mean
    );
    println!(
        "horizon: median h1 {:.3} h24 {:.3}, share <= 0.1: {:.3}",
        s.horizon_vs_census.median_first, s.horizon_vs_census.median_last, s.horizon_vs_census.share_within_tenth
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let result = match Cli::parse().command {
        Command::Synth(args) => synth(args),
        Command::Pipeline(cmd) => pipeline(cmd),
        Command::Eval(cmd) => eval(cmd),
        Command::Serve(args) => tokio::runtime::Runtime::new()
            .map_err(BoxError::from)
            .and_then(|rt| {
                rt.block_on(serve(ServeConfig {
                    addr: args.addr,
                    state_dir: args.state_dir,
                    models_dir: args.models,
                    sim_logs: args.sim_logs,
                    workers: args.workers,
                    crowd: CrowdConfig::default(),
                }))
                .map_err(BoxError::from)
            }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
