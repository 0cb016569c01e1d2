//! Finite-difference validation of the reverse-mode gradients.
//!
//! For every parameter θ the central difference
//! `(L(θ+δ) − L(θ−δ)) / 2δ` is compared against the analytic gradient.
//! Disagreement beyond tolerance on any parameter names the offending
//! block, which localizes a broken adjoint quickly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::ModelError;
use crate::graph::SensorGraph;
use crate::linalg::Mat;
use crate::nn::loss::{sample_dz, sample_loss};
use crate::nn::model::{GConvLstmModel, Phase};

/// Outcome of one finite-difference sweep.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// Largest relative error seen and the parameter it occurred at.
    pub worst_rel_err: f64,
    pub worst_param: String,
    /// Parameters compared (every entry of every block).
    pub checked: usize,
}

/// Central-difference step and tolerances used by [`check_gradients`].
pub const FD_STEP: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
pub const ABS_FLOOR: f64 = 1e-6;

impl GradCheckReport {
    pub fn passes(&self) -> bool {
        self.worst_rel_err < REL_TOL
    }
}

/// Relative error with an absolute floor: values whose magnitudes both sit
/// under the floor compare equal.
fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < ABS_FLOOR {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compares every analytic parameter gradient on one (window, label) pair
/// against central finite differences of the loss.
///
/// `dropout_mask_seed` freezes a dropout mask: when `Some(s)`, every loss
/// evaluation (and the analytic pass) draws its mask from a fresh
/// generator seeded with `s`, so the compared function is deterministic
/// with dropout active. `None` checks in eval mode.
pub fn check_gradients(
    model: &mut GConvLstmModel,
    graph: &SensorGraph,
    window: &Mat,
    label: u8,
    dropout_mask_seed: Option<u64>,
) -> Result<GradCheckReport, ModelError> {
    let loss_of = |m: &GConvLstmModel| -> Result<f64, ModelError> {
        let cache = match dropout_mask_seed {
            Some(s) => {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                m.forward(graph, window, Phase::Train { dropout_rng: &mut rng })?
            }
            None => m.forward(graph, window, Phase::Eval)?,
        };
        Ok(sample_loss(cache.p, label, 1.0))
    };

    // Analytic gradients under the same (fixed) stochasticity.
    let mut grads = model.zeros_like();
    let cache = match dropout_mask_seed {
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            model.forward(graph, window, Phase::Train { dropout_rng: &mut rng })?
        }
        None => model.forward(graph, window, Phase::Eval)?,
    };
    model.backward(graph, &cache, sample_dz(cache.p, label, 1.0), &mut grads);

    let analytic: Vec<(String, Vec<f64>)> = grads
        .param_blocks()
        .into_iter()
        .map(|(name, b)| (name, b.to_vec()))
        .collect();

    let mut worst_rel_err: f64 = 0.0;
    let mut worst_param = String::new();
    let mut checked = 0;

    let n_blocks = analytic.len();
    for b in 0..n_blocks {
        let len = analytic[b].1.len();
        for i in 0..len {
            let original = {
                let mut blocks = model.param_blocks_mut();
                let v = blocks[b].1[i];
                blocks[b].1[i] = v + FD_STEP;
                v
            };
            let plus = loss_of(model)?;
            {
                let mut blocks = model.param_blocks_mut();
                blocks[b].1[i] = original - FD_STEP;
            }
            let minus = loss_of(model)?;
            {
                let mut blocks = model.param_blocks_mut();
                blocks[b].1[i] = original;
            }

            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let err = rel_err(analytic[b].1[i], numeric);
            checked += 1;
            if err > worst_rel_err {
                worst_rel_err = err;
                worst_param = format!("{}[{i}]", analytic[b].0);
            }
        }
    }

    Ok(GradCheckReport {
        worst_rel_err,
        worst_param,
        checked,
    })
}
