//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scg_core::dataset::{grid_time, interpolate_at};
use scg_core::gp::ExactGp;
use scg_core::io;
use scg_core::sim::{growth_increment, map_ensemble, sea_state_to_load, trajectory_rngs, SeaStateSampler};
use scg_core::svgp::{init_model, InducingCov, SparsePosterior};
use scg_core::tasks::{evaluate, nmse, prior_at, train_task, Conditioning};
use scg_core::{
    build_dataset, holdout_split, subsample, JitterPolicy, KernelParams, MaterialSample, NoiseParams, Points,
    ProcessStats, RegressionDataset, SimConfig, Task, TrainConfig,
};

type Outcome = Result<String, String>;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn default_sim() -> SimConfig {
    SimConfig::from_json_str(&std::fs::read_to_string(configs_dir().join("sim_default.json")).unwrap()).unwrap()
}

fn train_config(task: Task) -> TrainConfig {
    let ix = Task::ALL.iter().position(|t| *t == task).unwrap() + 1;
    let path = configs_dir().join(format!("train_task{ix}.json"));
    TrainConfig::from_json_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn within(budget: Duration, started: Instant) -> Result<(), String> {
    let took = started.elapsed();
    if took <= budget {
        Ok(())
    } else {
        Err(format!("took {took:.1?}, budget {budget:?}"))
    }
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, task: Task) -> RegressionDataset {
    let dim = task.input_dim();
    let mut inputs = Points::empty(dim);
    let mut targets = Vec::with_capacity(n);
    let w: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..3.0)).collect();
    for _ in 0..n {
        let row: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f: f64 = row.iter().zip(&w).map(|(x, w)| (w * x).sin()).sum();
        targets.push(f + 0.2 * rng.random_range(-1.0..1.0));
        inputs.push(&row).unwrap();
    }
    RegressionDataset {
        task,
        inputs,
        targets,
        traj_ids: (0..n as u64).collect(),
    }
}

/// Model at a random point of parameter space, plus its standardized data.
fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (scg_core::SvgpModel, Points, Vec<f64>) {
    let task = Task::ALL[rng.random_range(0..3)];
    let ds = random_dataset(rng, n, task);
    let cfg = TrainConfig {
        m_inducing: m,
        seed: rng.random(),
        ard: rng.random_bool(0.5),
        ..TrainConfig::for_task(task)
    };
    let mut model = init_model(&ds, &cfg).unwrap();
    let mut p = model.params_flat();
    let m = model.m_inducing();
    for (i, v) in p.iter_mut().enumerate() {
        // m_u, log_s_u, z, then kernel and noise hyperparameters.
        *v += if i < m {
            rng.random_range(-1.0..1.0)
        } else if i < 2 * m {
            rng.random_range(-2.0..0.5)
        } else {
            rng.random_range(-0.5..0.5)
        };
    }
    model.set_params_flat(&p);
    let (x, y) = model.standardize(&ds.inputs, &ds.targets).unwrap();
    (model, x, y)
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let n = rng.random_range(20..=200);
        let m = rng.random_range(1..=50.min(n));
        let (model, x, y) = random_instance(&mut rng, n, m);
        let elbo = model.elbo(&x, &y, n).map_err(|e| e.to_string())?.elbo;
        let exact = ExactGp::fit(&x, &y, &model.kernel, &model.noise, JitterPolicy::none()).map_err(|e| e.to_string())?;
        let gap = elbo - exact.log_marginal();
        worst = worst.max(gap);
        if gap > 1e-8 {
            return Err(format!("elbo exceeds log marginal by {gap:.3e} (N={n}, M={m})"));
        }
    }
    within(Duration::from_secs(30), started)?;
    Ok(format!("20 instances, max(elbo - log marginal) = {worst:.3e}"))
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let ds = random_dataset(&mut rng, 40, Task::II);
    let (x, y) = (&ds.inputs, &ds.targets);
    let kernel = KernelParams::ard(1.2, &[0.9, 1.4, 1.1]);
    let noise = NoiseParams::new(0.04);
    let exact = ExactGp::fit(x, y, &kernel, &noise, JitterPolicy::none()).map_err(|e| e.to_string())?;
    let (mean, cov) = exact.predict_full(x).map_err(|e| e.to_string())?;
    let post = SparsePosterior {
        kernel: &kernel,
        noise: &noise,
        z: x,
        m_u: mean.as_slice(),
        cov: InducingCov::Full(&cov),
        jitter: JitterPolicy::none(),
    };
    let query = random_dataset(&mut rng, 60, Task::II).inputs;
    let sparse = post.predict(&query).map_err(|e| e.to_string())?;
    let dense = exact.predict(&query).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (s, d) in sparse.iter().zip(&dense) {
        worst = worst
            .max((s.mean - d.mean).abs())
            .max((s.latent_var - d.latent_var).abs())
            .max((s.obs_var - d.obs_var).abs());
    }
    within(Duration::from_secs(10), started)?;
    if worst <= 1e-6 {
        Ok(format!("max |sparse - exact| = {worst:.2e} over mean and variances"))
    } else {
        Err(format!("max |sparse - exact| = {worst:.2e}"))
    }
}

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut coords = 0;
    for _ in 0..10 {
        let n = rng.random_range(20..=80);
        let m = rng.random_range(2..=12);
        let (model, x, y) = random_instance(&mut rng, n, m);
        // Half the instances use a minibatch of the data.
        let (xb, yb) = if rng.random_bool(0.5) {
            let idx: Vec<usize> = (0..n / 2).collect();
            (x.select(&idx), idx.iter().map(|&i| y[i]).collect::<Vec<_>>())
        } else {
            (x.clone(), y.clone())
        };
        let (_, grad) = model.elbo_grad(&xb, &yb, n).map_err(|e| e.to_string())?;
        let analytic = grad.flatten();
        let base = model.params_flat();
        for i in 0..base.len() {
            let eval = |d: f64| {
                let mut mm = model.clone();
                let mut p = base.clone();
                p[i] += d;
                mm.set_params_flat(&p);
                mm.elbo(&xb, &yb, n).map(|v| v.elbo)
            };
            let numeric = (eval(h).map_err(|e| e.to_string())? - eval(-h).map_err(|e| e.to_string())?) / (2.0 * h);
            let rel = (numeric - analytic[i]).abs() / numeric.abs().max(analytic[i].abs()).max(1.0);
            worst = worst.max(rel);
            coords += 1;
        }
    }
    within(Duration::from_secs(60), started)?;
    if worst < 1e-4 {
        Ok(format!("{coords} coordinates over 10 instances, max relative error {worst:.2e}"))
    } else {
        Err(format!("max relative error {worst:.2e}"))
    }
}

fn criterion_4() -> Outcome {
    let y: Vec<f64> = (0..50).map(|i| 30.0 + (i as f64 * 0.7).sin() * 12.0 + i as f64).collect();
    let perfect = nmse(&y, &y).map_err(|e| e.to_string())?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let constant = nmse(&y, &vec![mean; y.len()]).map_err(|e| e.to_string())?;
    if perfect == 0.0 && (constant - 100.0).abs() <= 1e-10 {
        Ok(format!("perfect = {perfect}, mean predictor = {constant:.12}"))
    } else {
        Err(format!("perfect = {perfect}, mean predictor = {constant}"))
    }
}

fn criterion_5() -> Outcome {
    let cfg = default_sim();
    let sampler = SeaStateSampler::new(&cfg).map_err(|e| e.to_string())?;
    let started = Instant::now();
    let checks = map_ensemble(&cfg, |t| {
        let monotone = t.lengths.windows(2).all(|w| w[1] >= w[0]);
        let bounded = t.lengths.iter().all(|a| *a <= cfg.alpha_cr_mm) && t.lengths[0] == t.material.alpha0;
        let horizon = (t.final_time() - cfg.horizon_years).abs() < 1e-9;
        let critical = *t.lengths.last().unwrap() == cfg.alpha_cr_mm;
        let terminated = if t.truncated_at_critical() { critical } else { horizon };
        // Replay the trajectory's own sea states from its recorded lengths.
        let (_, sea) = trajectory_rngs(cfg.seed, t.id);
        let doubled = sampler.stream(sea).zip(&t.lengths[..t.lengths.len() - 1]).all(|(s, a)| {
            let load = sea_state_to_load(&s, &cfg);
            let dk = scg_core::sim::delta_k(*a, load.delta_s, &cfg).unwrap();
            let cycles = load.n_avg * s.duration;
            growth_increment(2.0 * t.material.c, t.material.m, dk, cycles)
                == 2.0 * growth_increment(t.material.c, t.material.m, dk, cycles)
        });
        (monotone && bounded && terminated, doubled, t.truncated_at_critical())
    })
    .map_err(|e| e.to_string())?;
    let took = started.elapsed();
    let valid = checks.iter().filter(|c| c.0).count();
    let doubled = checks.iter().filter(|c| c.1).count();
    let truncated = checks.iter().filter(|c| c.2).count();
    let n = checks.len();
    let detail = format!(
        "{valid}/{n} valid, {doubled}/{n} exact doubling under 2C, {truncated} truncated, ensemble {took:.1?} (incl. replay)"
    );
    if valid == n && doubled == n && n == 10_000 {
        within(Duration::from_secs(60), started)?;
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Outcome {
    let cfg = default_sim();
    let rows = map_ensemble(&cfg, |t| {
        let s = subsample(&t);
        let full: Vec<Option<f64>> = (0..s.grid_times.len().max(19))
            .map(|k| interpolate_at(&t, grid_time(k)))
            .collect();
        (s, full)
    })
    .map_err(|e| e.to_string())?;
    let n_grid = rows.iter().map(|(s, _)| s.grid_times.len()).max().unwrap();
    let mut columns = vec![Vec::new(); n_grid];
    for (_, full) in &rows {
        for (k, v) in full.iter().enumerate().take(n_grid) {
            if let Some(a) = v {
                columns[k].push(*a);
            }
        }
    }
    let subs: Vec<_> = rows.into_iter().map(|(s, _)| s).collect();
    let coarse = ProcessStats::from_subsampled(&subs, 2);
    let fine = ProcessStats::from_columns(columns, 2);
    let rel = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| ((x - y) / y).abs()).fold(0.0, f64::max);
    if coarse.grid_times.len() != fine.grid_times.len() {
        return Err("grid lengths differ".into());
    }
    let dm = rel(&coarse.mean, &fine.mean);
    let dlo = rel(&coarse.lower95, &fine.lower95);
    let dhi = rel(&coarse.upper95, &fine.upper95);
    let detail = format!(
        "{} grid times, max rel diff mean {:.2e}, lower95 {:.2e}, upper95 {:.2e}",
        coarse.grid_times.len(),
        dm,
        dlo,
        dhi
    );
    if dm <= 0.01 && dlo <= 0.03 && dhi <= 0.03 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Pilot {
    reports: Vec<scg_core::EvalReport>,
    stds: Vec<f64>,
    took: Duration,
}

fn pilot() -> Result<Pilot, String> {
    let started = Instant::now();
    let mut cfg = default_sim();
    cfg.n_trajectories = 2000;
    let subs = map_ensemble(&cfg, |t| subsample(&t)).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train, test) = holdout_split(subs, 0.5, &mut rng).map_err(|e| e.to_string())?;
    let nominal = MaterialSample {
        c: cfg.ln_c.mean.exp(),
        m: cfg.m.mean,
        alpha0: cfg.alpha0_mm.mean,
    };
    let mut reports = Vec::new();
    let mut stds = Vec::new();
    for task in Task::ALL {
        let out = train_task(&train, task, &train_config(task)).map_err(|e| e.to_string())?;
        reports.push(evaluate(&out.model, &test).map_err(|e| e.to_string())?);
        stds.push(prior_at(&out.model, 1.5, &Conditioning::for_task(task, &nominal)).map_err(|e| e.to_string())?.std);
    }
    Ok(Pilot {
        reports,
        stds,
        took: started.elapsed(),
    })
}

fn criterion_7(p: &Pilot) -> Outcome {
    let ll: Vec<f64> = p.reports.iter().map(|r| r.mean_loglik).collect();
    let nm: Vec<f64> = p.reports.iter().map(|r| r.nmse).collect();
    let s = &p.stds;
    let a = ll[0] < ll[1] && ll[1] < ll[2];
    let b = nm[1] <= 1.0 && nm[2] <= 1.0 && nm[2] < nm[1];
    let c = s[0] > s[1] && s[1] > s[2];
    let detail = format!(
        "loglik {:.2} < {:.2} < {:.2} [{}]; nmse I {:.3}, II {:.3}, III {:.3} [{}]; std@1.5y {:.3} > {:.3} > {:.3} mm [{}]; {:.1?}",
        ll[0],
        ll[1],
        ll[2],
        ok(a),
        nm[0],
        nm[1],
        nm[2],
        ok(b),
        s[0],
        s[1],
        s[2],
        ok(c),
        p.took
    );
    if a && b && c && p.took < Duration::from_secs(1800) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

fn criterion_9(p: &Pilot) -> Outcome {
    let report = &p.reports[0];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("report_I.json");
    io::write_json(&path, report).map_err(|e| e.to_string())?;
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let rows = value["variance_diagnostic"].as_array().map(|a| a.len()).unwrap_or(0);
    let diag = &report.variance_diagnostic;
    if rows == 0 || rows != diag.len() || diag.iter().any(|r| !r.predicted_var.is_finite()) {
        return Err(format!("{rows} exported rows"));
    }
    let early = diag.iter().filter(|r| r.t_years <= 1.0 + 1e-9);
    let under = early.clone().filter(|r| r.predicted_var < r.empirical_var).count();
    let first = &diag[0];
    Ok(format!(
        "{rows} grid times exported; t<=1y predicted < empirical at {under}/{} (t=0: predicted {:.2} vs empirical {:.2} mm^2), recorded only",
        early.count(),
        first.predicted_var,
        first.empirical_var
    ))
}

/// Runs the library pipeline into `dir` and returns every file written.
fn pipeline(dir: &Path) -> Result<Vec<PathBuf>, String> {
    let e = |e: scg_core::Error| e.to_string();
    let mut cfg = default_sim();
    cfg.n_trajectories = 300;
    let raw_path = dir.join("trajectories.csv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&raw_path).map_err(|e| e.to_string())?);
    let mut writer = io::TrajectoryCsvWriter::new(&mut file).map_err(e)?;
    for chunk in (0..cfg.n_trajectories as u64).collect::<Vec<_>>().chunks(64) {
        let trajs = scg_core::sim::map_trajectories(&cfg, chunk[0]..chunk[chunk.len() - 1] + 1, |t| t).map_err(e)?;
        for t in &trajs {
            writer.write(t).map_err(e)?;
        }
    }
    drop(writer);
    drop(file);
    let raw = io::read_raw_trajectories(&raw_path).map_err(e)?;
    let subs: Vec<_> = raw.iter().map(subsample).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train, test) = holdout_split(subs, 0.5, &mut rng).map_err(e)?;
    let mut files = vec![raw_path.clone()];
    for (name, set) in [("train.csv", &train), ("test.csv", &test)] {
        io::write_subsampled(&dir.join(name), set).map_err(e)?;
        files.push(dir.join(name));
    }
    let source = io::sha256_file(&raw_path).map_err(e)?;
    for task in Task::ALL {
        let ds = build_dataset(&train, task);
        let ds_path = dir.join(format!("dataset_{task}.csv"));
        io::write_dataset(&ds_path, &ds, &source).map_err(e)?;
        let cfg = TrainConfig {
            m_inducing: 20,
            iterations: 60,
            minibatch_size: 256,
            ..train_config(task)
        };
        let out = scg_core::svgp::train(&ds, &cfg).map_err(e)?;
        let model_path = dir.join(format!("model_{task}.json"));
        io::write_model(&model_path, &out.model).map_err(e)?;
        io::write_elbo_trace(&dir.join(format!("trace_{task}.csv")), &out.elbo_trace).map_err(e)?;
        let report = evaluate(&out.model, &test).map_err(e)?;
        io::write_json(&dir.join(format!("report_{task}.json")), &report).map_err(e)?;
        files.extend([
            ds_path.clone(),
            io::dataset_sidecar_path(&ds_path),
            model_path,
            dir.join(format!("trace_{task}.csv")),
            dir.join(format!("report_{task}.json")),
        ]);
    }
    Ok(files)
}

fn criterion_8() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fa = pipeline(a.path())?;
    let fb = pipeline(b.path())?;
    let mut bytes = 0;
    for (x, y) in fa.iter().zip(&fb) {
        let bx = std::fs::read(x).map_err(|e| e.to_string())?;
        let by = std::fs::read(y).map_err(|e| e.to_string())?;
        if bx != by {
            return Err(format!("{} differs between runs", x.file_name().unwrap().to_string_lossy()));
        }
        bytes += bx.len();
    }
    Ok(format!("{} files ({bytes} bytes) identical across two runs", fa.len()))
}

fn main() {
    let mut failed = 0;
    let mut report = |name: &str, outcome: Outcome| {
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    };
    report("1 (ELBO lower bound)", criterion_1());
    report("2 (sparse-exact equivalence)", criterion_2());
    report("3 (gradient vs finite differences)", criterion_3());
    report("4 (NMSE anchors)", criterion_4());
    report("5 (simulator invariants)", criterion_5());
    report("6 (subsampling fidelity)", criterion_6());
    match pilot() {
        Ok(p) => {
            report("7 (information ordering)", criterion_7(&p));
            report("8 (end-to-end determinism)", criterion_8());
            report("9 (variance diagnostic)", criterion_9(&p));
        }
        Err(e) => {
            report("7 (information ordering)", Err(e.clone()));
            report("8 (end-to-end determinism)", criterion_8());
            report("9 (variance diagnostic)", Err(e));
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
