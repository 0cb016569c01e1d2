//! Sensor relationship graph and spectral filtering.
//!
//! Sensors are nodes; edge weights come from exponentiated Pearson
//! correlation between channel series, `A_ij = exp(rho_ij)`. From the
//! weighted adjacency we derive the normalized Laplacian
//! `L = I - D^{-1/2} A D^{-1/2}` (spectrum in [0, 2]) and the scaled
//! Laplacian `L_s = 2L/lambda_max - I` (spectrum in [-1, 1]) that the
//! Chebyshev filters run on.

use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::linalg::Mat;

/// Weighted sensor graph with its Laplacians, frozen after construction.
#[derive(Clone, Debug)]
pub struct SensorGraph {
    node_names: Vec<String>,
    adjacency: Mat,
    laplacian: Mat,
    scaled_laplacian: Mat,
    lambda_max: f64,
}

/// Chebyshev spectral filter: K coefficient matrices, each mapping
/// d_in input channels to d_out output channels.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChebFilter {
    /// weights[k] has shape d_in x d_out.
    pub weights: Vec<Mat>,
}

impl ChebFilter {
    pub fn zeros(k: usize, d_in: usize, d_out: usize) -> Self {
        assert!(k >= 1, "K must be >= 1");
        ChebFilter {
            weights: (0..k).map(|_| Mat::zeros(d_in, d_out)).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.weights.len()
    }

    pub fn d_in(&self) -> usize {
        self.weights[0].rows()
    }

    pub fn d_out(&self) -> usize {
        self.weights[0].cols()
    }
}

/// Pearson correlation coefficient of two equal-length series.
///
/// Zero-variance input has no defined correlation; we return 0, which maps
/// to the neutral adjacency weight e^0 = 1.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, GraphError> {
    if x.len() != y.len() {
        return Err(GraphError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(GraphError::TooFewSamples { need: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        log::debug!("pearson: zero-variance series, correlation set to 0");
        return Ok(0.0);
    }
    Ok((cov / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0))
}

/// How lambda_max is obtained for the scaled Laplacian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LambdaMax {
    /// Use the spectral bound 2 of the normalized Laplacian (L_s = L - I).
    FixedTwo,
    /// Estimate the dominant eigenvalue of L by power iteration.
    PowerIteration,
}

/// Builds the sensor graph from an F x n matrix of training observations
/// (rows = frames, columns = channels in `node_names` order).
pub fn build_graph(training_rows: &Mat, node_names: &[String]) -> Result<SensorGraph, GraphError> {
    build_graph_with(training_rows, node_names, LambdaMax::FixedTwo)
}

pub fn build_graph_with(
    training_rows: &Mat,
    node_names: &[String],
    lambda: LambdaMax,
) -> Result<SensorGraph, GraphError> {
    let f = training_rows.rows();
    let n = training_rows.cols();
    if f < 2 {
        return Err(GraphError::TooFewSamples { need: 2, got: f });
    }
    // A single sensor is a legal (if trivial) graph: its diagonal
    // self-correlation gives A = [e] and a zero Laplacian.
    if n < 1 {
        return Err(GraphError::TooFewNodes { need: 1, got: n });
    }
    if node_names.len() != n {
        return Err(GraphError::DimensionMismatch(format!(
            "{} node names for {} columns",
            node_names.len(),
            n
        )));
    }

    let columns: Vec<Vec<f64>> = (0..n)
        .map(|c| (0..f).map(|r| training_rows.get(r, c)).collect())
        .collect();

    // A_ij = exp(rho_ij), including the diagonal (rho_ii = 1, so A_ii = e).
    let mut adjacency = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let rho = pearson(&columns[i], &columns[j])?;
            let w = rho.exp();
            adjacency.set(i, j, w);
            adjacency.set(j, i, w);
        }
    }

    let graph = from_adjacency(node_names.to_vec(), adjacency, lambda);
    Ok(graph)
}

fn from_adjacency(node_names: Vec<String>, adjacency: Mat, lambda: LambdaMax) -> SensorGraph {
    let n = adjacency.rows();
    let degrees: Vec<f64> = (0..n).map(|i| adjacency.row(i).iter().sum()).collect();
    let inv_sqrt: Vec<f64> = degrees.iter().map(|&d| 1.0 / d.sqrt()).collect();

    let mut laplacian = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let norm = inv_sqrt[i] * adjacency.get(i, j) * inv_sqrt[j];
            let ident = if i == j { 1.0 } else { 0.0 };
            laplacian.set(i, j, ident - norm);
        }
    }

    let lambda_max = match lambda {
        LambdaMax::FixedTwo => 2.0,
        LambdaMax::PowerIteration => power_iteration_lambda(&laplacian),
    };

    // L_s = 2 L / lambda_max - I
    let mut scaled = laplacian.scale(2.0 / lambda_max);
    for i in 0..n {
        scaled.set(i, i, scaled.get(i, i) - 1.0);
    }

    SensorGraph {
        node_names,
        adjacency,
        laplacian,
        scaled_laplacian: scaled,
        lambda_max,
    }
}

fn power_iteration_lambda(l: &Mat) -> f64 {
    let n = l.rows();
    let mut v = Mat::from_vec(n, 1, (0..n).map(|i| 1.0 + (i as f64) * 0.01).collect());
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = l.matmul(&v);
        let norm = w.data().iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 2.0;
        }
        v = w.scale(1.0 / norm);
        lambda = norm;
    }
    lambda
}

impl SensorGraph {
    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn adjacency(&self) -> &Mat {
        &self.adjacency
    }

    pub fn laplacian(&self) -> &Mat {
        &self.laplacian
    }

    pub fn scaled_laplacian(&self) -> &Mat {
        &self.scaled_laplacian
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Serializable wire form: node names, row-major adjacency, lambda_max.
    pub fn to_wire(&self) -> GraphWire {
        GraphWire {
            node_names: self.node_names.clone(),
            adjacency: self.adjacency.data().to_vec(),
            lambda_max: self.lambda_max,
        }
    }

    pub fn from_wire(wire: &GraphWire) -> Result<SensorGraph, GraphError> {
        let n = wire.node_names.len();
        if n < 1 {
            return Err(GraphError::TooFewNodes { need: 1, got: n });
        }
        if wire.adjacency.len() != n * n {
            return Err(GraphError::DimensionMismatch(format!(
                "adjacency has {} entries for {} nodes",
                wire.adjacency.len(),
                n
            )));
        }
        let adjacency = Mat::from_vec(n, n, wire.adjacency.clone());
        let lambda = if (wire.lambda_max - 2.0).abs() < 1e-12 {
            LambdaMax::FixedTwo
        } else {
            LambdaMax::PowerIteration
        };
        let mut g = from_adjacency(wire.node_names.clone(), adjacency, lambda);
        // Trust the stored estimate rather than re-running power iteration.
        if lambda == LambdaMax::PowerIteration {
            g = from_adjacency_with_lambda(g.node_names, g.adjacency, wire.lambda_max);
        }
        Ok(g)
    }
}

fn from_adjacency_with_lambda(node_names: Vec<String>, adjacency: Mat, lambda_max: f64) -> SensorGraph {
    let mut g = from_adjacency(node_names, adjacency, LambdaMax::FixedTwo);
    let n = g.laplacian.rows();
    let mut scaled = g.laplacian.scale(2.0 / lambda_max);
    for i in 0..n {
        scaled.set(i, i, scaled.get(i, i) - 1.0);
    }
    g.scaled_laplacian = scaled;
    g.lambda_max = lambda_max;
    g
}

/// JSON-serializable graph: `{node_names, adjacency (row-major), lambda_max}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GraphWire {
    pub node_names: Vec<String>,
    pub adjacency: Vec<f64>,
    pub lambda_max: f64,
}

/// Chebyshev basis stack `[T_0(L_s) x, ..., T_{K-1}(L_s) x]` via the
/// three-term recurrence `T_k = 2 L_s T_{k-1} - T_{k-2}`.
pub fn cheb_basis(graph: &SensorGraph, k: usize, x: &Mat) -> Result<Vec<Mat>, GraphError> {
    if k < 1 {
        return Err(GraphError::InvalidOrder);
    }
    if x.rows() != graph.node_count() {
        return Err(GraphError::DimensionMismatch(format!(
            "signal has {} rows for {} nodes",
            x.rows(),
            graph.node_count()
        )));
    }
    let ls = &graph.scaled_laplacian;
    let mut basis = Vec::with_capacity(k);
    basis.push(x.clone());
    if k >= 2 {
        basis.push(ls.matmul(x));
    }
    for i in 2..k {
        let next = ls.matmul(&basis[i - 1]).scale(2.0).sub(&basis[i - 2]);
        basis.push(next);
    }
    Ok(basis)
}

/// Spectral graph convolution `y = sum_k T_k(L_s) x W_k`, mapping an
/// n x d_in signal to n x d_out.
pub fn graph_conv(filter: &ChebFilter, graph: &SensorGraph, x: &Mat) -> Result<Mat, GraphError> {
    if x.cols() != filter.d_in() {
        return Err(GraphError::DimensionMismatch(format!(
            "signal has {} channels, filter expects {}",
            x.cols(),
            filter.d_in()
        )));
    }
    let basis = cheb_basis(graph, filter.order(), x)?;
    Ok(apply_filter(filter, &basis))
}

/// Applies filter weights to a precomputed Chebyshev basis stack.
pub fn apply_filter(filter: &ChebFilter, basis: &[Mat]) -> Mat {
    debug_assert_eq!(basis.len(), filter.order());
    let mut y = basis[0].matmul(&filter.weights[0]);
    for k in 1..filter.order() {
        y.add_assign(&basis[k].matmul(&filter.weights[k]));
    }
    y
}

/// Adjoint of `x -> cheb_basis(x)` composed with per-order cotangents:
/// given dB_k for each basis element, accumulates the gradient w.r.t. x by
/// reversing the three-term recurrence.
pub fn cheb_basis_adjoint(graph: &SensorGraph, d_basis: &[Mat]) -> Mat {
    let ls = &graph.scaled_laplacian;
    let k = d_basis.len();
    let mut g: Vec<Mat> = d_basis.to_vec();
    for i in (2..k).rev() {
        let prop = ls.matmul_tn(&g[i]).scale(2.0);
        g[i - 1].add_assign(&prop);
        let neg = g[i].scale(-1.0);
        g[i - 2].add_assign(&neg);
    }
    let mut dx = g[0].clone();
    if k >= 2 {
        dx.add_assign(&ls.matmul_tn(&g[1]));
    }
    dx
}
