//! Monte Carlo generation of stochastic crack-growth trajectories.
//!
//! Each trajectory draws its own material parameters `(C, m, alpha0)` and
//! its own sequence of sea states, then integrates the Paris-Erdogan law
//! with one cycle-domain Euler step per sea state. Random streams are keyed
//! by `(seed, trajectory id)` so ensembles are identical regardless of how
//! the work is scheduled.

mod config;
mod load;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{Bounds, Geometry, LoadModel, NormalParams, ScatterCell, SimConfig};
pub use load::{
    delta_k, sample_sea_state, sea_state_to_load, LoadPair, SeaState, SeaStateSampler,
};

use crate::error::{Error, Result};

/// Bookkeeping year, h.
pub const HOURS_PER_YEAR: f64 = 8766.0;

const MAX_ALPHA0_REJECTIONS: usize = 1000;
const MAX_SUBSTEPS: usize = 1 << 20;

/// One Monte Carlo draw of the crack-growth model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialSample {
    /// Paris coefficient, (mm/cycle)/(MPa sqrt(mm))^m.
    pub c: f64,
    /// Paris exponent.
    pub m: f64,
    /// Initial crack length, mm.
    pub alpha0: f64,
}

/// Why propagation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Reached the time horizon.
    Horizon,
    /// Reached the critical crack length; the last point is clamped to it.
    Critical,
    /// A growth increment overflowed; ended at the last finite point.
    Overflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: u64,
    pub material: MaterialSample,
    /// Years since detection, strictly increasing from 0.
    pub times: Vec<f64>,
    /// Crack lengths, mm.
    pub lengths: Vec<f64>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn truncated_at_critical(&self) -> bool {
        self.termination != Termination::Horizon
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one point")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Independent random streams for one trajectory: material draws and the
/// sea-state sequence never share a stream.
pub fn trajectory_rngs(seed: u64, id: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut material = ChaCha8Rng::seed_from_u64(seed);
    material.set_stream(2 * id);
    let mut sea = ChaCha8Rng::seed_from_u64(seed);
    sea.set_stream(2 * id + 1);
    (material, sea)
}

pub fn sample_material<R: Rng + ?Sized>(rng: &mut R, config: &SimConfig) -> Result<MaterialSample> {
    let normal = |p: &NormalParams| {
        Normal::new(p.mean, p.std).map_err(|e| Error::Config(format!("normal({p:?}): {e}")))
    };
    let ln_c = normal(&config.ln_c)?.sample(rng);
    let m = normal(&config.m)?.sample(rng);
    let a0_dist = normal(&config.alpha0_mm)?;
    for _ in 0..MAX_ALPHA0_REJECTIONS {
        let alpha0 = a0_dist.sample(rng);
        if alpha0 > 0.0 && alpha0 < config.alpha_cr_mm {
            return Ok(MaterialSample {
                c: ln_c.exp(),
                m,
                alpha0,
            });
        }
    }
    Err(Error::Config(format!(
        "initial crack length distribution {:?} yields no draw in (0, {}) after {MAX_ALPHA0_REJECTIONS} attempts",
        config.alpha0_mm, config.alpha_cr_mm
    )))
}

/// Crack extension over `cycles` load cycles at stress intensity range
/// `delta_k`. Linear in `c`.
#[inline]
pub fn growth_increment(c: f64, m: f64, delta_k: f64, cycles: f64) -> f64 {
    c * delta_k.powf(m) * cycles
}

enum Advance {
    Finite(f64),
    Overflow,
}

/// Integrates one sea state from crack length `a0`. A single Euler step is
/// used unless it would grow the crack by more than `max_step_fraction` of
/// its length, in which case the sea state is halved repeatedly.
fn advance(a0: f64, material: &MaterialSample, load: &LoadPair, cycles: f64, config: &SimConfig) -> Advance {
    let limit = config.max_step_fraction;
    let mut substeps = 1usize;
    loop {
        let per_step = cycles / substeps as f64;
        let mut a = a0;
        let mut refine = false;
        for _ in 0..substeps {
            let dk = load::delta_k_unchecked(a, load.delta_s, config);
            let da = growth_increment(material.c, material.m, dk, per_step);
            if !da.is_finite() {
                return Advance::Overflow;
            }
            if da > limit * a && substeps < MAX_SUBSTEPS {
                refine = true;
                break;
            }
            a += da;
            if a >= config.alpha_cr_mm {
                return Advance::Finite(a);
            }
        }
        if !refine {
            return Advance::Finite(a);
        }
        substeps *= 2;
    }
}

/// Propagates `material` through the given sea-state sequence until the
/// horizon or the critical length is reached. The last sea state is cut
/// short so the final time never exceeds the horizon.
pub fn propagate_with<I>(material: &MaterialSample, id: u64, states: I, config: &SimConfig) -> Trajectory
where
    I: IntoIterator<Item = SeaState>,
{
    let horizon_h = config.horizon_hours();
    let mut t_h = 0.0;
    let mut a = material.alpha0;
    let mut times = vec![0.0];
    let mut lengths = vec![a];
    let mut termination = Termination::Horizon;

    for state in states {
        let mut duration = state.duration;
        let last = t_h + duration >= horizon_h;
        if last {
            duration = horizon_h - t_h;
        }
        let load = sea_state_to_load(&state, config);
        let cycles = load.n_avg * duration;
        let next_t = if last { horizon_h } else { t_h + duration };
        match advance(a, material, &load, cycles, config) {
            Advance::Overflow => {
                termination = Termination::Overflow;
                break;
            }
            Advance::Finite(next) if next >= config.alpha_cr_mm => {
                times.push(next_t / HOURS_PER_YEAR);
                lengths.push(config.alpha_cr_mm);
                termination = Termination::Critical;
                break;
            }
            Advance::Finite(next) => {
                a = next;
                t_h = next_t;
                times.push(t_h / HOURS_PER_YEAR);
                lengths.push(a);
            }
        }
        if last {
            break;
        }
    }
    Trajectory {
        id,
        material: *material,
        times,
        lengths,
        termination,
    }
}

pub fn propagate<R: Rng>(material: &MaterialSample, id: u64, rng: R, config: &SimConfig) -> Result<Trajectory> {
    let sampler = SeaStateSampler::new(config)?;
    Ok(propagate_with(material, id, sampler.stream(rng), config))
}

/// Draws trajectory `id` of the ensemble defined by `config`.
pub fn simulate_trajectory(id: u64, sampler: &SeaStateSampler, config: &SimConfig) -> Result<Trajectory> {
    let (mut material_rng, sea_rng) = trajectory_rngs(config.seed, id);
    let material = sample_material(&mut material_rng, config)?;
    Ok(propagate_with(&material, id, sampler.stream(sea_rng), config))
}

/// Summary counters of an ensemble run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnsembleSummary {
    pub trajectories: usize,
    pub critical: usize,
    pub overflow: usize,
}

/// Simulates ids `ids` in parallel and maps each trajectory through `f`
/// without retaining it. Output order follows `ids`.
pub fn map_trajectories<T, F>(config: &SimConfig, ids: std::ops::Range<u64>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Trajectory) -> T + Sync,
{
    config.validate()?;
    let sampler = SeaStateSampler::new(config)?;
    ids.into_par_iter()
        .map(|id| simulate_trajectory(id, &sampler, config).map(&f))
        .collect()
}

/// Maps the whole ensemble through `f`; see [`map_trajectories`].
pub fn map_ensemble<T, F>(config: &SimConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Trajectory) -> T + Sync,
{
    map_trajectories(config, 0..config.n_trajectories as u64, f)
}

/// All `n_trajectories` trajectories, ordered by id.
///
/// Raw trajectories carry one point per sea state (several thousand over
/// three years); use [`map_ensemble`] to avoid holding large ensembles.
pub fn generate_ensemble(config: &SimConfig) -> Result<Vec<Trajectory>> {
    map_ensemble(config, |t| t)
}

pub fn summarize(trajectories: &[Trajectory]) -> EnsembleSummary {
    EnsembleSummary {
        trajectories: trajectories.len(),
        critical: trajectories
            .iter()
            .filter(|t| t.termination == Termination::Critical)
            .count(),
        overflow: trajectories
            .iter()
            .filter(|t| t.termination == Termination::Overflow)
            .count(),
    }
}

#[cfg(test)]
mod tests {
    use super::config::test_config;
    use super::*;

    fn small_config(n: usize) -> SimConfig {
        let mut cfg = test_config();
        cfg.n_trajectories = n;
        cfg
    }

    fn check_invariants(t: &Trajectory, cfg: &SimConfig) {
        assert_eq!(t.times.len(), t.lengths.len());
        assert_eq!(t.times[0], 0.0);
        assert_eq!(t.lengths[0], t.material.alpha0);
        assert!(t.times.windows(2).all(|w| w[1] > w[0]));
        assert!(t.lengths.windows(2).all(|w| w[1] >= w[0]));
        assert!(t.final_time() <= cfg.horizon_years);
        assert!(t.lengths.iter().all(|&a| a <= cfg.alpha_cr_mm));
        match t.termination {
            Termination::Horizon => assert_eq!(t.final_time(), cfg.horizon_years),
            Termination::Critical => assert_eq!(*t.lengths.last().unwrap(), cfg.alpha_cr_mm),
            Termination::Overflow => {}
        }
    }

    #[test]
    fn zero_variance_material_is_deterministic() {
        let mut cfg = test_config();
        cfg.ln_c.std = 0.0;
        cfg.m.std = 0.0;
        cfg.alpha0_mm.std = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = sample_material(&mut rng, &cfg).unwrap();
        assert_eq!(s.c, cfg.ln_c.mean.exp());
        assert_eq!(s.m, cfg.m.mean);
        assert_eq!(s.alpha0, cfg.alpha0_mm.mean);
    }

    #[test]
    fn material_draws_are_seeded() {
        let cfg = test_config();
        let a = sample_material(&mut ChaCha8Rng::seed_from_u64(5), &cfg).unwrap();
        let b = sample_material(&mut ChaCha8Rng::seed_from_u64(5), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exponent_sample_mean() {
        let cfg = test_config();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 10_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_material(&mut rng, &cfg).unwrap().m)
            .collect();
        let mean = crate::stats::mean(&draws);
        let se = cfg.m.std / (n as f64).sqrt();
        assert!((mean - cfg.m.mean).abs() < 3.0 * se, "{mean} vs {}", cfg.m.mean);
    }

    #[test]
    fn impossible_alpha0_fails() {
        let mut cfg = test_config();
        cfg.alpha0_mm = NormalParams { mean: 1.0, std: 1e-3 };
        cfg.alpha_cr_mm = 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(sample_material(&mut rng, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn zero_growth_rate_reaches_horizon() {
        let cfg = test_config();
        let material = MaterialSample { c: 0.0, m: 3.0, alpha0: 40.0 };
        let t = propagate(&material, 0, ChaCha8Rng::seed_from_u64(2), &cfg).unwrap();
        assert!(t.lengths.iter().all(|&a| a == 40.0));
        assert_eq!(t.termination, Termination::Horizon);
        assert_eq!(t.final_time(), 3.0);
        check_invariants(&t, &cfg);
    }

    #[test]
    fn zero_exponent_grows_linearly_in_cycles() {
        let cfg = test_config();
        let c = 1e-5;
        let material = MaterialSample { c, m: 0.0, alpha0: 40.0 };
        let sampler = SeaStateSampler::new(&cfg).unwrap();
        let states: Vec<SeaState> = sampler.stream(ChaCha8Rng::seed_from_u64(4)).take(50).collect();
        let t = propagate_with(&material, 0, states.iter().copied(), &cfg);
        for (k, s) in states.iter().enumerate() {
            let cycles = sea_state_to_load(s, &cfg).n_avg * s.duration;
            let da = t.lengths[k + 1] - t.lengths[k];
            assert!((da - c * cycles).abs() < 1e-12, "step {k}");
        }
    }

    #[test]
    fn near_critical_start_truncates() {
        let cfg = test_config();
        let material = MaterialSample { c: 1e-12, m: 3.0, alpha0: 154.0 };
        let t = propagate(&material, 0, ChaCha8Rng::seed_from_u64(2), &cfg).unwrap();
        assert_eq!(t.termination, Termination::Critical);
        assert!(t.truncated_at_critical());
        assert_eq!(*t.lengths.last().unwrap(), 155.0);
        assert!(t.final_time() < 3.0);
        check_invariants(&t, &cfg);
    }

    #[test]
    fn overflow_terminates_at_last_finite_point() {
        let cfg = test_config();
        let material = MaterialSample { c: 1.0, m: 400.0, alpha0: 40.0 };
        let t = propagate(&material, 0, ChaCha8Rng::seed_from_u64(2), &cfg).unwrap();
        assert_eq!(t.termination, Termination::Overflow);
        assert!(t.truncated_at_critical());
        assert_eq!(t.lengths, vec![40.0]);
    }

    #[test]
    fn large_steps_are_substepped() {
        let cfg = test_config();
        // Coarse single-step growth would far exceed 5% of the length.
        let material = MaterialSample { c: 1e-8, m: 2.0, alpha0: 20.0 };
        let state = SeaState { hs: 3.0, tz: 8.0, duration: 6.0 };
        let t = propagate_with(&material, 0, std::iter::repeat(state).take(3), &cfg);
        let load = sea_state_to_load(&state, &cfg);
        let cycles = load.n_avg * state.duration;
        let one_step = growth_increment(
            material.c,
            material.m,
            delta_k(20.0, load.delta_s, &cfg).unwrap(),
            cycles,
        );
        assert!(one_step > 0.05 * 20.0);
        // Refined growth follows the exact solution of da/dN = C (Y dS)^2 pi a.
        let rate = material.c * (cfg.geometry.y * load.delta_s).powi(2) * std::f64::consts::PI;
        let exact = 20.0 * (rate * cycles).exp();
        let got = t.lengths[1];
        assert!(got > 20.0 + one_step, "sub-stepped growth exceeds frozen-rate growth");
        assert!((got - exact).abs() / exact < 0.05, "{got} vs {exact}");
    }

    #[test]
    fn ensemble_is_deterministic_and_valid() {
        let cfg = small_config(40);
        let a = generate_ensemble(&cfg).unwrap();
        let b = generate_ensemble(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 40);
        for (i, t) in a.iter().enumerate() {
            assert_eq!(t.id, i as u64);
            check_invariants(t, &cfg);
        }
        // Trajectories are independent of which other ids are simulated.
        let sub = map_trajectories(&cfg, 10..12, |t| t).unwrap();
        assert_eq!(sub[0], a[10]);
        assert_eq!(sub[1], a[11]);
    }

    #[test]
    fn zero_variance_ensemble_is_identical_in_material() {
        let mut cfg = small_config(5);
        cfg.ln_c.std = 0.0;
        cfg.m.std = 0.0;
        cfg.alpha0_mm.std = 0.0;
        cfg.load.scatter.truncate(1);
        cfg.duration_hours = Bounds { min: 6.0, max: 6.0 };
        let ens = generate_ensemble(&cfg).unwrap();
        for t in &ens[1..] {
            assert_eq!(t.lengths, ens[0].lengths);
            assert_eq!(t.times, ens[0].times);
        }
    }
}
