use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{adam_step, init_model, AdamState, SvgpModel, TrainConfig};
use crate::dataset::RegressionDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SvgpModel,
    /// Minibatch ELBO evaluated before each update.
    pub elbo_trace: Vec<f64>,
}

/// Maximizes the minibatch ELBO with Adam for `config.iterations` steps.
///
/// Minibatches are drawn without replacement from a stream seeded by
/// `config.seed` (separate from the initialization stream), so the whole run
/// is a pure function of `(dataset, config)`.
pub fn train(dataset: &RegressionDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    let mut model = init_model(dataset, config)?;
    let (x, y) = model.standardize(&dataset.inputs, &dataset.targets)?;
    let n = x.len();
    let batch = config.minibatch_size.min(n);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut params = model.params_flat();
    let mut state = AdamState::new(params.len());
    let mut trace = Vec::with_capacity(config.iterations);

    for iteration in 0..config.iterations {
        let (xb, yb) = if batch == n {
            (x.clone(), y.clone())
        } else {
            let mut idx = sample_indices(&mut rng, n, batch).into_vec();
            idx.sort_unstable();
            (x.select(&idx), idx.iter().map(|&i| y[i]).collect::<Vec<_>>())
        };
        let (value, grad) = model.elbo_grad(&xb, &yb, n)?;
        let grad = grad.flatten();
        if !value.elbo.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteElbo {
                iteration,
                snapshot: params,
            });
        }
        trace.push(value.elbo);
        adam_step(&mut params, &grad, &mut state, config.learning_rate);
        model.set_params_flat(&params);
    }
    Ok(TrainOutcome {
        model,
        elbo_trace: trace,
    })
}
