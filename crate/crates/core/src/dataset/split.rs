use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Trajectory-level hold-out split: `round(fraction * n)` items (at least
/// one, at most `n - 1`) go to the training half, chosen uniformly without
/// replacement. Both halves keep the input order.
pub fn holdout_split<T, R: Rng + ?Sized>(items: Vec<T>, fraction: f64, rng: &mut R) -> Result<(Vec<T>, Vec<T>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Input(format!("split fraction must lie in (0, 1), got {fraction}")));
    }
    let n = items.len();
    if n < 2 {
        return Err(Error::Input(format!("hold-out split needs at least 2 trajectories, got {n}")));
    }
    let n_train = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut in_train = vec![false; n];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(n - n_train);
    for (item, to_train) in items.into_iter().zip(in_train) {
        if to_train {
            train.push(item);
        } else {
            test.push(item);
        }
    }
    Ok((train, test))
}
