//! The two-layer classifier: stacked graph-convolutional LSTM layers, a
//! readout of the final hidden state, dropout, and a dense sigmoid unit.
//!
//! Layer 1 unrolls the window's T frames (one scalar per sensor node per
//! step), its hidden sequence drives layer 2, and the last hidden state
//! becomes the readout — flattened node-by-node by default, mean-pooled
//! over nodes behind a flag. Dropout hits the readout vector in training
//! mode only, zeroing entries with probability p and scaling survivors by
//! 1/(1−p) so expectations match evaluation mode.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ModelConfig, Readout};
use crate::error::ModelError;
use crate::graph::SensorGraph;
use crate::linalg::{sigmoid, Mat};
use crate::nn::cell::{
    gconvlstm_step_backward, gconvlstm_step_cached, CellState, StepCache,
};
use crate::nn::params::{DenseHead, GConvLSTMParams};

/// Whether a forward pass is part of training (dropout active, driven by
/// the supplied generator) or inference (deterministic).
pub enum Phase<'a> {
    Train { dropout_rng: &'a mut ChaCha8Rng },
    Eval,
}

/// The full model; immutable after training, cheap to clone.
#[derive(Clone, Debug)]
pub struct GConvLstmModel {
    pub cfg: ModelConfig,
    pub n_nodes: usize,
    pub layer1: GConvLSTMParams,
    pub layer2: GConvLSTMParams,
    pub head: DenseHead,
}

/// Intermediates of one forward pass, consumed by [`GConvLstmModel::backward`].
pub struct ForwardCache {
    steps1: Vec<StepCache>,
    steps2: Vec<StepCache>,
    /// Hidden sequence of layer 1 (inputs to layer 2), h1[t] for t in 0..T.
    h1: Vec<Mat>,
    h2_last: Mat,
    readout: Vec<f64>,
    /// 0.0 for dropped entries, 1/(1−p) for survivors; `None` in eval mode.
    dropout_mask: Option<Vec<f64>>,
    readout_dropped: Vec<f64>,
    /// σ(z), the returned probability.
    pub p: f64,
}

impl GConvLstmModel {
    /// Readout vector length for a given node count.
    fn readout_dim(cfg: &ModelConfig, n_nodes: usize) -> usize {
        match cfg.readout {
            Readout::Flatten => n_nodes * cfg.hidden2,
            Readout::MeanPool => cfg.hidden2,
        }
    }

    /// Builds a model with freshly initialized weights.
    pub fn new(cfg: &ModelConfig, n_nodes: usize, rng: &mut ChaCha8Rng) -> Result<Self, ModelError> {
        cfg.validate()?;
        if n_nodes == 0 {
            return Err(ModelError::InvalidConfig("model needs at least one node".into()));
        }
        Ok(GConvLstmModel {
            layer1: GConvLSTMParams::init(cfg.cheb_k, 1, cfg.hidden1, rng),
            layer2: GConvLSTMParams::init(cfg.cheb_k, cfg.hidden1, cfg.hidden2, rng),
            head: DenseHead::init(Self::readout_dim(cfg, n_nodes), rng),
            cfg: cfg.clone(),
            n_nodes,
        })
    }

    /// A zero-filled mirror of this model, used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        GConvLstmModel {
            layer1: GConvLSTMParams::zeros(self.cfg.cheb_k, 1, self.cfg.hidden1),
            layer2: GConvLSTMParams::zeros(self.cfg.cheb_k, self.cfg.hidden1, self.cfg.hidden2),
            head: DenseHead::zeros(self.head.w.len()),
            cfg: self.cfg.clone(),
            n_nodes: self.n_nodes,
        }
    }

    /// Named flat views of every parameter block, in a fixed order.
    pub fn param_blocks(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        self.layer1.blocks("l1", &mut out);
        self.layer2.blocks("l2", &mut out);
        out.push(("head.w".to_string(), self.head.w.as_slice()));
        out.push(("head.b".to_string(), std::slice::from_ref(&self.head.b)));
        out
    }

    /// Mutable counterpart of [`Self::param_blocks`], same order.
    pub fn param_blocks_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::new();
        self.layer1.blocks_mut("l1", &mut out);
        self.layer2.blocks_mut("l2", &mut out);
        out.push(("head.w".to_string(), self.head.w.as_mut_slice()));
        out.push(("head.b".to_string(), std::slice::from_mut(&mut self.head.b)));
        out
    }

    pub fn zero(&mut self) {
        for (_, block) in self.param_blocks_mut() {
            block.fill(0.0);
        }
    }

    fn check_window(&self, graph: &SensorGraph, window: &Mat) -> Result<(), ModelError> {
        if window.rows() != self.cfg.window_len {
            return Err(ModelError::WrongWindowLength {
                expected: self.cfg.window_len,
                got: window.rows(),
            });
        }
        if window.cols() != self.n_nodes || graph.node_count() != self.n_nodes {
            return Err(ModelError::ShapeMismatch(format!(
                "window has {} channels, graph {} nodes, model {}",
                window.cols(),
                graph.node_count(),
                self.n_nodes
            )));
        }
        Ok(())
    }

    /// Runs the model on one T×n window, returning the unsafe-class
    /// probability and the cache for a subsequent backward pass.
    pub fn forward(
        &self,
        graph: &SensorGraph,
        window: &Mat,
        phase: Phase,
    ) -> Result<ForwardCache, ModelError> {
        self.check_window(graph, window)?;
        let t_len = self.cfg.window_len;
        let n = self.n_nodes;

        let mut state1 = CellState::zeros(n, self.cfg.hidden1);
        let mut steps1 = Vec::with_capacity(t_len);
        let mut h1 = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let x = Mat::from_vec(n, 1, window.row(t).to_vec());
            let (next, cache) = gconvlstm_step_cached(&self.layer1, graph, &x, &state1)?;
            steps1.push(cache);
            h1.push(next.h.clone());
            state1 = next;
        }

        let mut state2 = CellState::zeros(n, self.cfg.hidden2);
        let mut steps2 = Vec::with_capacity(t_len);
        for h in &h1 {
            let (next, cache) = gconvlstm_step_cached(&self.layer2, graph, h, &state2)?;
            steps2.push(cache);
            state2 = next;
        }
        let h2_last = state2.h;

        let readout: Vec<f64> = match self.cfg.readout {
            Readout::Flatten => h2_last.data().to_vec(),
            Readout::MeanPool => h2_last.sum_rows().iter().map(|s| s / n as f64).collect(),
        };

        let (dropout_mask, readout_dropped) = match phase {
            Phase::Train { dropout_rng } if self.cfg.dropout > 0.0 => {
                let keep = 1.0 - self.cfg.dropout;
                let mask: Vec<f64> = readout
                    .iter()
                    .map(|_| {
                        if dropout_rng.random_range(0.0..1.0) < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let dropped = readout.iter().zip(&mask).map(|(r, m)| r * m).collect();
                (Some(mask), dropped)
            }
            _ => (None, readout.clone()),
        };

        let z: f64 = self
            .head
            .w
            .iter()
            .zip(&readout_dropped)
            .map(|(w, r)| w * r)
            .sum::<f64>()
            + self.head.b;

        Ok(ForwardCache {
            steps1,
            steps2,
            h1,
            h2_last,
            readout,
            dropout_mask,
            readout_dropped,
            p: sigmoid(z),
        })
    }

    /// Accumulates gradients of a scalar loss into `grads`, given
    /// `dz = ∂loss/∂z` at the pre-sigmoid output (for cross-entropy on
    /// σ(z) that is `p − y`, possibly class-weighted and batch-scaled).
    pub fn backward(
        &self,
        graph: &SensorGraph,
        cache: &ForwardCache,
        dz: f64,
        grads: &mut GConvLstmModel,
    ) {
        let n = self.n_nodes;
        let t_len = self.cfg.window_len;

        for (g, r) in grads.head.w.iter_mut().zip(&cache.readout_dropped) {
            *g += dz * r;
        }
        grads.head.b += dz;

        let mut d_readout: Vec<f64> = self.head.w.iter().map(|w| w * dz).collect();
        if let Some(mask) = &cache.dropout_mask {
            for (d, m) in d_readout.iter_mut().zip(mask) {
                *d *= m;
            }
        }

        let d_h2_last = match self.cfg.readout {
            Readout::Flatten => Mat::from_vec(n, self.cfg.hidden2, d_readout),
            Readout::MeanPool => {
                let mut m = Mat::zeros(n, self.cfg.hidden2);
                for r in 0..n {
                    for c in 0..self.cfg.hidden2 {
                        m.set(r, c, d_readout[c] / n as f64);
                    }
                }
                m
            }
        };

        // Layer 2, reversed: collect each step's input cotangent, which is
        // the loss gradient of layer 1's hidden output at that step.
        let mut dh2 = d_h2_last;
        let mut dc2 = Mat::zeros(n, self.cfg.hidden2);
        let mut dh1_from_l2: Vec<Mat> = vec![Mat::zeros(n, self.cfg.hidden1); t_len];
        for t in (0..t_len).rev() {
            let (dx, dh_prev, dc_prev) = gconvlstm_step_backward(
                &self.layer2,
                &mut grads.layer2,
                graph,
                &cache.steps2[t],
                &dh2,
                &dc2,
            );
            dh1_from_l2[t] = dx;
            dh2 = dh_prev;
            dc2 = dc_prev;
        }

        // Layer 1, reversed: each step's hidden cotangent combines the
        // layer-2 contribution at t with the recurrent carry from t+1.
        let mut dh1_carry = Mat::zeros(n, self.cfg.hidden1);
        let mut dc1 = Mat::zeros(n, self.cfg.hidden1);
        for t in (0..t_len).rev() {
            let dh = dh1_from_l2[t].add(&dh1_carry);
            let (_dx, dh_prev, dc_prev) = gconvlstm_step_backward(
                &self.layer1,
                &mut grads.layer1,
                graph,
                &cache.steps1[t],
                &dh,
                &dc1,
            );
            dh1_carry = dh_prev;
            dc1 = dc_prev;
        }
    }

    /// Inference: probability of the unsafe class with dropout disabled.
    pub fn probability(&self, graph: &SensorGraph, window: &Mat) -> Result<f64, ModelError> {
        Ok(self.forward(graph, window, Phase::Eval)?.p)
    }

    /// Thresholded prediction `(label, probability)`; the boundary goes to
    /// the unsafe class.
    pub fn predict(&self, graph: &SensorGraph, window: &Mat) -> Result<(u8, f64), ModelError> {
        let p = self.probability(graph, window)?;
        Ok((u8::from(p >= self.cfg.threshold), p))
    }
}

impl ForwardCache {
    /// The readout vector before dropout (used by tests).
    pub fn readout(&self) -> &[f64] {
        &self.readout
    }

    /// Final hidden state of the second layer.
    pub fn h2_last(&self) -> &Mat {
        &self.h2_last
    }

    /// Hidden sequence of the first layer.
    pub fn h1(&self) -> &[Mat] {
        &self.h1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use rand::SeedableRng;

    fn tiny_graph(n: usize) -> SensorGraph {
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|r| (0..n).map(|c| ((r * 5 + c * 2) % 7) as f64 + 0.3 * c as f64).collect())
            .collect();
        let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        build_graph(&Mat::from_rows(&rows), &names).unwrap()
    }

    fn tiny_config() -> ModelConfig {
        ModelConfig {
            hidden1: 3,
            hidden2: 2,
            cheb_k: 2,
            window_len: 4,
            dropout: 0.5,
            ..ModelConfig::default()
        }
    }

    fn window(t: usize, n: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_vec(t, n, (0..t * n).map(|_| rng.random_range(0.0..1.0)).collect())
    }

    #[test]
    fn eval_forward_is_deterministic() {
        let g = tiny_graph(3);
        let cfg = tiny_config();
        let model = GConvLstmModel::new(&cfg, 3, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let w = window(4, 3, 5);
        let p1 = model.probability(&g, &w).unwrap();
        let p2 = model.probability(&g, &w).unwrap();
        assert_eq!(p1, p2);
        assert!(p1 > 0.0 && p1 < 1.0);
    }

    #[test]
    fn zero_dropout_train_equals_eval() {
        let g = tiny_graph(3);
        let mut cfg = tiny_config();
        cfg.dropout = 0.0;
        let model = GConvLstmModel::new(&cfg, 3, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let w = window(4, 3, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let train_p = model
            .forward(&g, &w, Phase::Train { dropout_rng: &mut rng })
            .unwrap()
            .p;
        assert_eq!(train_p, model.probability(&g, &w).unwrap());
    }

    #[test]
    fn zero_initialized_model_outputs_half() {
        let g = tiny_graph(2);
        let cfg = tiny_config();
        let model = GConvLstmModel::new(&cfg, 2, &mut ChaCha8Rng::seed_from_u64(2))
            .unwrap()
            .zeros_like();
        let w = window(4, 2, 7);
        assert_eq!(model.probability(&g, &w).unwrap(), 0.5);
    }

    #[test]
    fn dropout_masks_differ_across_draws_but_replay_under_seed() {
        let g = tiny_graph(3);
        let cfg = tiny_config();
        let model = GConvLstmModel::new(&cfg, 3, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let w = window(4, 3, 8);
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = model
                .forward(&g, &w, Phase::Train { dropout_rng: &mut rng })
                .unwrap()
                .p;
            let b = model
                .forward(&g, &w, Phase::Train { dropout_rng: &mut rng })
                .unwrap()
                .p;
            (a, b)
        };
        assert_eq!(run(3), run(3), "same seed must replay identically");
    }

    #[test]
    fn wrong_window_length_rejected() {
        let g = tiny_graph(3);
        let cfg = tiny_config();
        let model = GConvLstmModel::new(&cfg, 3, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let w = window(5, 3, 9);
        assert!(matches!(
            model.probability(&g, &w),
            Err(ModelError::WrongWindowLength { expected: 4, got: 5 })
        ));
    }

    #[test]
    fn threshold_boundary_goes_unsafe() {
        let g = tiny_graph(2);
        let cfg = tiny_config();
        // Zero weights give p = 0.5 exactly; label must be 1 at the boundary.
        let model = GConvLstmModel::new(&cfg, 2, &mut ChaCha8Rng::seed_from_u64(2))
            .unwrap()
            .zeros_like();
        let (label, p) = model.predict(&g, &window(4, 2, 10)).unwrap();
        assert_eq!(p, 0.5);
        assert_eq!(label, 1);
    }

    #[test]
    fn mean_pool_readout_has_hidden2_width() {
        let g = tiny_graph(3);
        let mut cfg = tiny_config();
        cfg.readout = Readout::MeanPool;
        let model = GConvLstmModel::new(&cfg, 3, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(model.head.w.len(), 2);
        let cache = model.forward(&g, &window(4, 3, 11), Phase::Eval).unwrap();
        assert_eq!(cache.readout().len(), 2);
    }
}
