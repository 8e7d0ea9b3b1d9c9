//! Pilot run used to tune the default configs.
//!
//! `cargo run --release -p scg-core --example calibrate -- <sim.json> <n> [train dir]`

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scg_core::sim::{map_ensemble, MaterialSample};
use scg_core::tasks::{evaluate, prior_at, train_task, Conditioning};
use scg_core::{holdout_split, subsample, ProcessStats, SimConfig, Task, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = SimConfig::from_json_str(&std::fs::read_to_string(&args[1])?)?;
    cfg.n_trajectories = args[2].parse()?;
    let train_dir = args.get(3);

    let start = Instant::now();
    let subs = map_ensemble(&cfg, |t| subsample(&t))?;
    println!("simulated {} in {:.1?}", subs.len(), start.elapsed());
    let truncated = subs.iter().filter(|s| s.truncated_at_critical).count();
    println!("truncated {truncated}");
    let stats = ProcessStats::from_subsampled(&subs, 2);
    for k in (0..stats.grid_times.len()).step_by(3) {
        println!(
            "t={:.3} n={} mean={:.2} [{:.2}, {:.2}]",
            stats.grid_times[k], stats.counts[k], stats.mean[k], stats.lower95[k], stats.upper95[k]
        );
    }
    if train_dir.is_none() && args.len() < 4 {
        return Ok(());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train, test) = holdout_split(subs, 0.5, &mut rng)?;
    let nominal = MaterialSample {
        c: cfg.ln_c.mean.exp(),
        m: cfg.m.mean,
        alpha0: cfg.alpha0_mm.mean,
    };
    for task in Task::ALL {
        let ix = Task::ALL.iter().position(|t| *t == task).unwrap() + 1;
        let path = format!("{}/train_task{ix}.json", train_dir.unwrap());
        let tc = TrainConfig::from_json_str(&std::fs::read_to_string(path)?)?;
        let start = Instant::now();
        let out = train_task(&train, task, &tc)?;
        let report = evaluate(&out.model, &test)?;
        let prior = prior_at(&out.model, 1.5, &Conditioning::for_task(task, &nominal))?;
        let n = out.elbo_trace.len();
        println!(
            "task {task}: {:.1?} elbo {:.1} -> {:.1} nmse {:.4} loglik {:.2} prior({:.2}, {:.3}) sigma2 {:.3e}",
            start.elapsed(),
            out.elbo_trace[0],
            out.elbo_trace[n - 1],
            report.nmse,
            report.mean_loglik,
            prior.mean,
            prior.std,
            out.model.noise.sigma2() * out.model.output_stats.std[0].powi(2),
        );
        if task == Task::I {
            for row in report.variance_diagnostic.iter().step_by(3) {
                println!("   t={:.2} emp {:.2} pred {:.2}", row.t_years, row.empirical_var, row.predicted_var);
            }
        }
    }
    Ok(())
}
