use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Diagonal jitter schedule, relative to the kernel variance. Factorization
/// is tried at `initial`, then at ten times that, up to `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterPolicy {
    pub initial: f64,
    pub max: f64,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        JitterPolicy {
            initial: 1e-6,
            max: 1e-2,
        }
    }
}

impl JitterPolicy {
    /// Starts from no jitter at all; escalation begins at `1e-10`.
    pub fn none() -> Self {
        JitterPolicy {
            initial: 0.0,
            max: 1e-2,
        }
    }

    pub fn starting_at(initial: f64) -> Self {
        JitterPolicy {
            initial,
            max: JitterPolicy::default().max.max(initial),
        }
    }

    fn schedule(&self) -> impl Iterator<Item = f64> {
        let max = self.max;
        let first = self.initial;
        let mut next = Some(first);
        std::iter::from_fn(move || {
            let cur = next?;
            let step = if cur == 0.0 { 1e-10 } else { cur * 10.0 };
            next = (step <= max * (1.0 + 1e-12) && cur < max).then_some(step);
            Some(cur)
        })
    }
}

#[derive(Debug, Clone)]
pub struct JitteredCholesky {
    pub chol: Cholesky<f64, Dyn>,
    /// Absolute jitter that was added to the diagonal.
    pub jitter: f64,
}

impl JitteredCholesky {
    pub fn l(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }
}

/// Factors `k + jitter * scale * I`, escalating the jitter on failure.
/// A pivot whose square is at rounding level relative to the largest
/// diagonal entry counts as a failure. `k` is left untouched.
pub fn cholesky_jittered(k: &DMatrix<f64>, scale: f64, policy: JitterPolicy) -> Result<JitteredCholesky> {
    let mut last = 0.0;
    for rel in policy.schedule() {
        let jitter = rel * scale;
        let mut m = k.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        let floor = 16.0 * f64::EPSILON * m.diagonal().amax();
        if let Some(chol) = Cholesky::new(m) {
            if chol.l_dirty().diagonal().iter().all(|d| d.is_finite() && d * d > floor) {
                return Ok(JitteredCholesky { chol, jitter });
            }
        }
        last = jitter;
    }
    Err(Error::NotPositiveDefinite {
        size: k.nrows(),
        max_jitter: last,
        min_diag: k.diagonal().iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_steps() {
        let s: Vec<f64> = JitterPolicy::default().schedule().collect();
        assert_eq!(s.len(), 5);
        assert_eq!(s[0], 1e-6);
        assert!((s[4] - 1e-2).abs() < 1e-15);
        let n: Vec<f64> = JitterPolicy::none().schedule().collect();
        assert_eq!(n[0], 0.0);
        assert_eq!(n[1], 1e-10);
    }

    #[test]
    fn rank_deficient_matrix_gets_jitter() {
        let k = DMatrix::from_element(3, 3, 2.0);
        let c = cholesky_jittered(&k, 2.0, JitterPolicy::none()).unwrap();
        assert!(c.jitter > 0.0);
        let c0 = cholesky_jittered(&DMatrix::identity(3, 3), 1.0, JitterPolicy::none()).unwrap();
        assert_eq!(c0.jitter, 0.0);
        assert!(c0.log_det().abs() < 1e-15);
    }

    #[test]
    fn indefinite_matrix_fails() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -5.0]);
        let err = cholesky_jittered(&k, 1.0, JitterPolicy::default()).unwrap_err();
        assert!(err.is_numerical());
    }
}
