//! `scg`: simulate crack-growth ensembles, train surrogates, export priors.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scg_core::io::{self, TrajectoryCsvWriter};
use scg_core::sim::map_trajectories;
use scg_core::tasks::{evaluate, prediction_band, prior_at};
use scg_core::{build_dataset, holdout_split, subsample, Conditioning, SimConfig, SvgpModel, Task, TrainConfig};

use manifest::Run;

/// Usage mistakes that clap cannot catch (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "scg", version, about = "Stochastic crack-growth ensembles and GP crack-length priors")]
struct Cli {
    /// Overrides the seed of the simulation, split or training config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON config (simulation config for `simulate`, training config for `train`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a trajectory ensemble.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        /// Overrides `n_trajectories` from the config.
        #[arg(long)]
        n_trajectories: Option<usize>,
        /// Trajectories simulated per batch before writing.
        #[arg(long, default_value_t = 256)]
        chunk: usize,
    },
    /// Subsample onto the bimonthly grid and split into train/test files.
    Prepare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        train_fraction: f64,
    },
    /// Train a surrogate for one task.
    Train {
        #[arg(long)]
        task: Task,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// ELBO trace CSV; defaults to `<out>.trace.csv`.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Also write the regression dataset (CSV plus sidecar).
        #[arg(long)]
        dataset_out: Option<PathBuf>,
    },
    /// Score a model on held-out trajectories.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Gaussian prior over crack length at one time.
    Prior {
        #[arg(long)]
        model: PathBuf,
        /// Years since detection.
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        cond: CondArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predictive mean and 95% band on a uniform time grid.
    Band {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        cond: CondArgs,
        #[arg(long, default_value_t = 3.0)]
        t_max: f64,
        #[arg(long, default_value_t = 61)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Conditioning values, given directly or taken from a test trajectory.
#[derive(Args)]
struct CondArgs {
    #[arg(long, conflicts_with = "from_traj")]
    c: Option<f64>,
    #[arg(long, conflicts_with = "from_traj")]
    m: Option<f64>,
    #[arg(long, conflicts_with = "from_traj")]
    alpha0: Option<f64>,
    #[arg(long, requires = "test")]
    from_traj: Option<u64>,
    /// Trajectory file searched by `--from-traj`.
    #[arg(long, requires = "from_traj")]
    test: Option<PathBuf>,
}

impl CondArgs {
    fn resolve(&self, task: Task, run: &mut Run) -> Result<Conditioning> {
        let cond = match (self.from_traj, &self.test) {
            (Some(id), Some(path)) => {
                run.input(path);
                let traj = io::read_subsampled(path)?
                    .into_iter()
                    .find(|t| t.id == id)
                    .ok_or_else(|| UsageError(format!("trajectory {id} not found in {}", path.display())))?;
                Conditioning::for_task(task, &traj.material)
            }
            _ => Conditioning {
                c: self.c,
                m: self.m,
                alpha0: self.alpha0,
            },
        };
        cond.input(task, 0.0).map_err(|e| UsageError(e.to_string()))?;
        Ok(cond)
    }
}

fn require_config(config: &Option<PathBuf>, command: &str) -> Result<PathBuf> {
    config
        .clone()
        .ok_or_else(|| UsageError(format!("`{command}` needs --config")).into())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn manifest_for(out: &Path) -> PathBuf {
    io::with_suffix(out, ".manifest.json")
}

fn simulate(cli: &Cli, out: &Path, n: Option<usize>, chunk: usize) -> Result<()> {
    let config_path = require_config(&cli.config, "simulate")?;
    let mut cfg = SimConfig::from_json_str(&read_text(&config_path)?)?;
    if let Some(n) = n {
        cfg.n_trajectories = n;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    if chunk == 0 {
        return Err(UsageError("--chunk must be positive".into()).into());
    }
    let mut run = Run::start("simulate", &[out.to_path_buf()], manifest_for(out), cli.force)?;
    run.config(&config_path);
    run.seed(cfg.seed);

    let total = cfg.n_trajectories as u64;
    let mut truncated = 0usize;
    io::atomic_write(out, |w| {
        let mut writer = TrajectoryCsvWriter::new(w)?;
        let mut start = 0;
        while start < total {
            let end = (start + chunk as u64).min(total);
            for t in map_trajectories(&cfg, start..end, |t| t)? {
                truncated += t.truncated_at_critical() as usize;
                writer.write(&t)?;
            }
            start = end;
        }
        Ok(())
    })?;
    run.finish()?;
    eprintln!("wrote {total} trajectories ({truncated} truncated) to {}", out.display());
    Ok(())
}

fn prepare(cli: &Cli, input: &Path, out_dir: &Path, fraction: f64) -> Result<()> {
    let train_path = out_dir.join("train.csv");
    let test_path = out_dir.join("test.csv");
    let stats_path = out_dir.join("stats.csv");
    let outputs = [train_path.clone(), test_path.clone(), stats_path.clone()];
    let mut run = Run::start("prepare", &outputs, out_dir.join("manifest.json"), cli.force)?;
    let seed = cli.seed.unwrap_or(0);
    run.seed(seed);
    run.input(input);

    let subs: Vec<_> = io::TrajectoryGroups::open(input)?
        .map(|g| g.map(|g| subsample(&g.into_trajectory())))
        .collect::<scg_core::Result<_>>()?;
    let stats = scg_core::empirical_stats(&subs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (train, test) = holdout_split(subs, fraction, &mut rng)?;
    io::write_subsampled(&train_path, &train)?;
    io::write_subsampled(&test_path, &test)?;
    io::atomic_write(&stats_path, |w| {
        let mut text = String::from("t_years,count,mean_mm,lo95_mm,hi95_mm\n");
        for k in 0..stats.grid_times.len() {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                io::fmt_sig(stats.grid_times[k], 9),
                stats.counts[k],
                io::fmt_sig(stats.mean[k], 9),
                io::fmt_sig(stats.lower95[k], 9),
                io::fmt_sig(stats.upper95[k], 9)
            ));
        }
        w.write_all(text.as_bytes()).map_err(|e| scg_core::Error::Io {
            path: stats_path.clone(),
            source: e,
        })
    })?;
    run.finish()?;
    eprintln!("{} train / {} test trajectories in {}", train.len(), test.len(), out_dir.display());
    Ok(())
}

fn train(cli: &Cli, task: Task, train_path: &Path, out: &Path, trace: Option<&Path>, dataset_out: Option<&Path>) -> Result<()> {
    let config_path = require_config(&cli.config, "train")?;
    let mut cfg = TrainConfig::from_json_str(&read_text(&config_path)?)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let trace = trace.map_or_else(|| io::with_suffix(out, ".trace.csv"), Path::to_path_buf);
    let mut outputs = vec![out.to_path_buf(), trace.clone()];
    if let Some(d) = dataset_out {
        outputs.extend([d.to_path_buf(), io::dataset_sidecar_path(d)]);
    }
    let mut run = Run::start("train", &outputs, manifest_for(out), cli.force)?;
    run.config(&config_path);
    run.seed(cfg.seed);
    run.input(train_path);

    let trajs = io::read_subsampled(train_path)?;
    let dataset = build_dataset(&trajs, task);
    if let Some(d) = dataset_out {
        io::write_dataset(d, &dataset, &io::sha256_file(train_path)?)?;
    }
    let outcome = scg_core::svgp::train(&dataset, &cfg)?;
    io::write_model(out, &outcome.model)?;
    io::write_elbo_trace(&trace, &outcome.elbo_trace)?;
    run.finish()?;
    if let Some(last) = outcome.elbo_trace.last() {
        eprintln!("task {task}: final minibatch ELBO {last:.3}");
    }
    Ok(())
}

fn load_model(path: &Path, run: &mut Run) -> Result<SvgpModel> {
    run.input(path);
    Ok(io::read_model(path)?)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { out, n_trajectories, chunk } => simulate(cli, out, *n_trajectories, *chunk),
        Command::Prepare { input, out_dir, train_fraction } => prepare(cli, input, out_dir, *train_fraction),
        Command::Train { task, train: t, out, trace, dataset_out } => {
            train(cli, *task, t, out, trace.as_deref(), dataset_out.as_deref())
        }
        Command::Evaluate { model, test, out } => {
            let mut run = Run::start("evaluate", std::slice::from_ref(out), manifest_for(out), cli.force)?;
            let model = load_model(model, &mut run)?;
            run.input(test);
            let report = evaluate(&model, &io::read_subsampled(test)?)?;
            io::write_json(out, &report)?;
            run.finish()?;
            eprintln!("task {}: nmse {:.4}, mean loglik {:.3}", report.task, report.nmse, report.mean_loglik);
            Ok(())
        }
        Command::Prior { model, t, cond, out } => {
            let mut run = Run::start("prior", std::slice::from_ref(out), manifest_for(out), cli.force)?;
            let model = load_model(model, &mut run)?;
            let cond = cond.resolve(model.task, &mut run)?;
            let prior = prior_at(&model, *t, &cond)?;
            io::write_json(out, &prior)?;
            run.finish()?;
            println!("{:.6} {:.6}", prior.mean, prior.std);
            Ok(())
        }
        Command::Band { model, cond, t_max, points, out } => {
            let mut run = Run::start("band", std::slice::from_ref(out), manifest_for(out), cli.force)?;
            let model = load_model(model, &mut run)?;
            let cond = cond.resolve(model.task, &mut run)?;
            let rows = prediction_band(&model, &cond, *t_max, *points).map_err(|e| UsageError(e.to_string()))?;
            io::write_band(out, &rows)?;
            run.finish()
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<scg_core::Error>() {
        Some(e) if e.is_numerical() => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
