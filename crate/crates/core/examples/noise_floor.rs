//! Lower bound on the pooled NMSE of a conditional-mean predictor: sea-state
//! replicates for fixed materials (task III) and for fixed `(C, m)` with
//! redrawn `alpha0` (task II).

use scg_core::sim::{propagate, sample_material, trajectory_rngs, MaterialSample};
use scg_core::{subsample, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let cfg = SimConfig::from_json_str(&std::fs::read_to_string(&args[1])?)?;
    let n_mat: u64 = args.get(2).map_or(Ok(200), |s| s.parse())?;
    let reps: u64 = 20;
    for redraw_alpha0 in [false, true] {
        let mut within = 0.0;
        let mut all = Vec::new();
        let mut count = 0usize;
        for i in 0..n_mat {
            let (mut mrng, _) = trajectory_rngs(cfg.seed, i);
            let base = sample_material(&mut mrng, &cfg)?;
            let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 19];
            for r in 0..reps {
                let id = 1_000_000 + i * reps + r;
                let (mut arng, srng) = trajectory_rngs(cfg.seed, id);
                let material = if redraw_alpha0 {
                    MaterialSample { alpha0: sample_material(&mut arng, &cfg)?.alpha0, ..base }
                } else {
                    base
                };
                let s = subsample(&propagate(&material, id, srng, &cfg)?);
                for (k, a) in s.lengths.iter().enumerate() {
                    cols[k].push(*a);
                }
            }
            for c in cols.iter().filter(|c| c.len() >= 2) {
                let m = c.iter().sum::<f64>() / c.len() as f64;
                within += c.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (c.len() - 1) as f64 * c.len() as f64;
                count += c.len();
                all.extend_from_slice(c);
            }
        }
        let m = all.iter().sum::<f64>() / all.len() as f64;
        let var = all.iter().map(|a| (a - m).powi(2)).sum::<f64>() / all.len() as f64;
        println!(
            "redraw alpha0 {redraw_alpha0}: noise var {:.3} pooled var {:.1} floor nmse {:.3}",
            within / count as f64,
            var,
            100.0 * within / count as f64 / var
        );
    }
    Ok(())
}
