//! Accelerated proximal gradient (FISTA momentum) for `g(W) + h(W)` with
//! `g` smooth and `h` prox-friendly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApgSettings {
    pub max_iterations: usize,
    /// Stop once `|W_t - W_{t-1}|_F / (1 + |W_{t-1}|_F)` falls below this.
    pub tolerance: f64,
    /// Ridge used to initialize the coefficient blocks; `None` means lambda1.
    pub gamma: Option<f64>,
    /// Return the lowest-objective iterate instead of the last one.
    pub track_best: bool,
}

impl Default for ApgSettings {
    fn default() -> Self {
        ApgSettings {
            max_iterations: 500,
            tolerance: 1e-5,
            gamma: None,
            track_best: false,
        }
    }
}

impl ApgSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be > 0".into()));
        }
        if let Some(g) = self.gamma {
            if !(g >= 0.0) {
                return Err(Error::InvalidParameter("gamma must be >= 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ApgOutcome {
    pub solution: Matrix,
    pub iterations: usize,
    pub converged: bool,
}

/// Momentum sequence `b_t = (1 + sqrt(1 + 4 b_{t-1}^2)) / 2`.
pub fn next_momentum(b: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * b * b).sqrt()) / 2.0
}

/// Runs the iteration from `init` (used for both `W_0` and `W_1`).
///
/// `prox(m, step)` must return the proximal point of `step * h` at `m`.
/// `objective` is only evaluated when `settings.track_best` is set.
pub fn minimize(
    init: Matrix,
    lipschitz: f64,
    grad: impl Fn(&Matrix) -> Matrix,
    prox: impl Fn(Matrix, f64) -> Matrix,
    objective: Option<&dyn Fn(&Matrix) -> f64>,
    settings: &ApgSettings,
) -> Result<ApgOutcome> {
    if !(lipschitz > 0.0) || !lipschitz.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "Lipschitz constant must be positive and finite, got {lipschitz}"
        )));
    }
    let step = 1.0 / lipschitz;
    let mut prev = init.clone();
    let mut cur = init;
    let (mut b_prev, mut b) = (1.0_f64, 1.0_f64);
    let track = settings.track_best.then_some(objective).flatten();
    let mut best = track.map(|f| (f(&cur), cur.clone()));
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..settings.max_iterations {
        iterations += 1;
        let momentum = (b_prev - 1.0) / b;
        let search = &cur + (&cur - &prev) * momentum;
        let g = grad(&search);
        let next = prox(search - g * step, step);
        if !all_finite(&next) {
            return Err(Error::NumericalFailure(format!(
                "non-finite iterate after {iterations} proximal steps"
            )));
        }
        b_prev = b;
        b = next_momentum(b);
        let change = (&next - &cur).norm() / (1.0 + cur.norm());
        prev = std::mem::replace(&mut cur, next);
        if let (Some(f), Some((best_value, best_w))) = (track, best.as_mut()) {
            let v = f(&cur);
            if v < *best_value {
                *best_value = v;
                *best_w = cur.clone();
            }
        }
        if change < settings.tolerance {
            converged = true;
            break;
        }
    }
    let solution = match best {
        Some((_, w)) => w,
        None => cur,
    };
    Ok(ApgOutcome {
        solution,
        iterations,
        converged,
    })
}
