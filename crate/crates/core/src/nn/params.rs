//! Parameter containers for the graph-convolutional LSTM.
//!
//! Every learnable value lives in a named flat block so the optimizer and
//! the gradient checker can walk parameters uniformly; gradients reuse the
//! same container types (a zeroed mirror of the model), which keeps
//! accumulation code in matrix form.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::ChebFilter;
use crate::linalg::Mat;

/// One gate's weights: Chebyshev filters over the input and hidden
/// signals plus a bias vector.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateParams {
    /// K matrices of d_x × d_h.
    pub w_x: ChebFilter,
    /// K matrices of d_h × d_h.
    pub w_h: ChebFilter,
    /// Length d_h.
    pub bias: Vec<f64>,
}

impl GateParams {
    fn zeros(k: usize, d_x: usize, d_h: usize) -> Self {
        GateParams {
            w_x: ChebFilter::zeros(k, d_x, d_h),
            w_h: ChebFilter::zeros(k, d_h, d_h),
            bias: vec![0.0; d_h],
        }
    }

    fn init(&mut self, rng: &mut ChaCha8Rng) {
        let k = self.w_x.order();
        init_filter(&mut self.w_x, k, rng);
        init_filter(&mut self.w_h, k, rng);
        // biases stay 0; the forget gate's +1 is applied by the layer init
    }
}

/// Uniform ±1/√(K · d_in) per coefficient matrix.
fn init_filter(filter: &mut ChebFilter, k: usize, rng: &mut ChaCha8Rng) {
    let bound = 1.0 / ((k * filter.d_in()) as f64).sqrt();
    for w in &mut filter.weights {
        for v in w.data_mut() {
            *v = rng.random_range(-bound..=bound);
        }
    }
}

fn init_vec(v: &mut [f64], fan_in: usize, rng: &mut ChaCha8Rng) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    for x in v {
        *x = rng.random_range(-bound..=bound);
    }
}

/// All parameters of one recurrent layer: four gates plus the peephole
/// vectors that let gates read the cell state directly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GConvLSTMParams {
    pub k: usize,
    pub d_x: usize,
    pub d_h: usize,
    pub gate_i: GateParams,
    pub gate_f: GateParams,
    pub gate_c: GateParams,
    pub gate_o: GateParams,
    /// Peephole vectors, length d_h each.
    pub w_ci: Vec<f64>,
    pub w_cf: Vec<f64>,
    pub w_co: Vec<f64>,
}

impl GConvLSTMParams {
    pub fn zeros(k: usize, d_x: usize, d_h: usize) -> Self {
        GConvLSTMParams {
            k,
            d_x,
            d_h,
            gate_i: GateParams::zeros(k, d_x, d_h),
            gate_f: GateParams::zeros(k, d_x, d_h),
            gate_c: GateParams::zeros(k, d_x, d_h),
            gate_o: GateParams::zeros(k, d_x, d_h),
            w_ci: vec![0.0; d_h],
            w_cf: vec![0.0; d_h],
            w_co: vec![0.0; d_h],
        }
    }

    /// Random init: uniform ±1/√fan_in everywhere, biases 0 except the
    /// forget gate's +1 (keeps early memory open).
    pub fn init(k: usize, d_x: usize, d_h: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros(k, d_x, d_h);
        p.gate_i.init(rng);
        p.gate_f.init(rng);
        p.gate_c.init(rng);
        p.gate_o.init(rng);
        init_vec(&mut p.w_ci, d_h, rng);
        init_vec(&mut p.w_cf, d_h, rng);
        init_vec(&mut p.w_co, d_h, rng);
        for b in &mut p.gate_f.bias {
            *b = 1.0;
        }
        p
    }

    /// Named flat views of every block, in a fixed traversal order shared
    /// with [`Self::blocks_mut`].
    pub fn blocks<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a [f64])>) {
        let gates = [
            ("i", &self.gate_i),
            ("f", &self.gate_f),
            ("c", &self.gate_c),
            ("o", &self.gate_o),
        ];
        for (name, g) in gates {
            for (k, w) in g.w_x.weights.iter().enumerate() {
                out.push((format!("{prefix}.{name}.wx{k}"), w.data()));
            }
            for (k, w) in g.w_h.weights.iter().enumerate() {
                out.push((format!("{prefix}.{name}.wh{k}"), w.data()));
            }
            out.push((format!("{prefix}.{name}.b"), g.bias.as_slice()));
        }
        out.push((format!("{prefix}.ci"), self.w_ci.as_slice()));
        out.push((format!("{prefix}.cf"), self.w_cf.as_slice()));
        out.push((format!("{prefix}.co"), self.w_co.as_slice()));
    }

    /// Mutable counterpart of [`Self::blocks`], same order.
    pub fn blocks_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut [f64])>) {
        let GConvLSTMParams {
            gate_i,
            gate_f,
            gate_c,
            gate_o,
            w_ci,
            w_cf,
            w_co,
            ..
        } = self;
        for (name, g) in [("i", gate_i), ("f", gate_f), ("c", gate_c), ("o", gate_o)] {
            let GateParams { w_x, w_h, bias } = g;
            for (k, w) in w_x.weights.iter_mut().enumerate() {
                out.push((format!("{prefix}.{name}.wx{k}"), w.data_mut()));
            }
            for (k, w) in w_h.weights.iter_mut().enumerate() {
                out.push((format!("{prefix}.{name}.wh{k}"), w.data_mut()));
            }
            out.push((format!("{prefix}.{name}.b"), bias.as_mut_slice()));
        }
        out.push((format!("{prefix}.ci"), w_ci.as_mut_slice()));
        out.push((format!("{prefix}.cf"), w_cf.as_mut_slice()));
        out.push((format!("{prefix}.co"), w_co.as_mut_slice()));
    }
}

/// Dense sigmoid output unit over the readout vector.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DenseHead {
    pub w: Vec<f64>,
    pub b: f64,
}

impl DenseHead {
    pub fn zeros(dim: usize) -> Self {
        DenseHead {
            w: vec![0.0; dim],
            b: 0.0,
        }
    }

    pub fn init(dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut h = Self::zeros(dim);
        init_vec(&mut h.w, dim, rng);
        h
    }
}

/// Sum of a Hadamard product's columns: the gradient of a per-column
/// (peephole) weight given the pre-activation cotangent and the matrix the
/// weight multiplied.
pub fn peephole_grad(ds: &Mat, c: &Mat) -> Vec<f64> {
    ds.hadamard(c).sum_rows()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn init_respects_bounds_and_forget_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = GConvLSTMParams::init(3, 2, 4, &mut rng);
        let bound_x = 1.0 / ((3.0 * 2.0) as f64).sqrt();
        for w in &p.gate_i.w_x.weights {
            assert!(w.data().iter().all(|v| v.abs() <= bound_x));
        }
        assert!(p.gate_i.bias.iter().all(|&b| b == 0.0));
        assert!(p.gate_f.bias.iter().all(|&b| b == 1.0));
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = GConvLSTMParams::init(2, 1, 3, &mut ChaCha8Rng::seed_from_u64(9));
        let b = GConvLSTMParams::init(2, 1, 3, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a.w_ci, b.w_ci);
        assert_eq!(a.gate_o.w_h.weights[1], b.gate_o.w_h.weights[1]);
    }

    #[test]
    fn block_views_agree_between_shared_and_mut() {
        let mut p = GConvLSTMParams::init(2, 1, 3, &mut ChaCha8Rng::seed_from_u64(5));
        let shared: Vec<(String, usize)> = {
            let mut out = Vec::new();
            p.blocks("l", &mut out);
            out.iter().map(|(n, s)| (n.clone(), s.len())).collect()
        };
        let mutable: Vec<(String, usize)> = {
            let mut out = Vec::new();
            p.blocks_mut("l", &mut out);
            out.iter().map(|(n, s)| (n.clone(), s.len())).collect()
        };
        assert_eq!(shared, mutable);
        // 4 gates × (2 wx + 2 wh + bias) + 3 peepholes
        assert_eq!(shared.len(), 4 * 5 + 3);
    }
}
