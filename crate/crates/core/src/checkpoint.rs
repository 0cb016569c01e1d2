//! Self-contained model checkpoints.
//!
//! One JSON document holds everything inference needs: the configuration,
//! the sensor graph (with a SHA-256 integrity hash), the fitted
//! normalizer, the channel subset, and every weight block. A loaded
//! checkpoint rebuilds the model with no training artifacts attached.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ModelConfig;
use crate::dataset::normalize::NormalizationStats;
use crate::dataset::subset::FeatureSubset;
use crate::error::CheckpointError;
use crate::graph::{GraphWire, SensorGraph};
use crate::nn::model::GConvLstmModel;
use crate::nn::params::{DenseHead, GConvLSTMParams};

pub const FORMAT_NAME: &str = "dbd-checkpoint";
pub const FORMAT_VERSION: u32 = 1;

/// The on-disk document.
#[derive(Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    pub n_nodes: usize,
    pub subset: FeatureSubset,
    pub normalizer: NormalizationStats,
    pub graph: GraphWire,
    /// SHA-256 of the canonical graph serialization.
    pub graph_sha256: String,
    pub layer1: GConvLSTMParams,
    pub layer2: GConvLSTMParams,
    pub head: DenseHead,
}

/// Everything a checkpoint restores.
pub struct LoadedCheckpoint {
    pub model: GConvLstmModel,
    pub graph: SensorGraph,
    pub normalizer: NormalizationStats,
    pub subset: FeatureSubset,
}

/// Hex SHA-256 of the graph's canonical JSON form.
pub fn graph_hash(wire: &GraphWire) -> String {
    let canonical = serde_json::to_string(wire).expect("graph serialization cannot fail");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn save_checkpoint(
    path: &Path,
    model: &GConvLstmModel,
    graph: &SensorGraph,
    normalizer: &NormalizationStats,
    subset: &FeatureSubset,
) -> Result<(), CheckpointError> {
    let wire = graph.to_wire();
    let doc = Checkpoint {
        format: FORMAT_NAME.to_string(),
        version: FORMAT_VERSION,
        config: model.cfg.clone(),
        n_nodes: model.n_nodes,
        subset: subset.clone(),
        normalizer: normalizer.clone(),
        graph_sha256: graph_hash(&wire),
        graph: wire,
        layer1: model.layer1.clone(),
        layer2: model.layer2.clone(),
        head: model.head.clone(),
    };
    let json = serde_json::to_string_pretty(&doc)
        .map_err(|e| CheckpointError::Malformed(e.to_string()))?;
    std::fs::write(path, json).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<LoadedCheckpoint, CheckpointError> {
    let bytes = std::fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let doc: Checkpoint = serde_json::from_slice(&bytes)
        .map_err(|e| CheckpointError::Malformed(e.to_string()))?;

    if doc.format != FORMAT_NAME {
        return Err(CheckpointError::Malformed(format!(
            "unknown format '{}'",
            doc.format
        )));
    }
    if doc.version != FORMAT_VERSION {
        return Err(CheckpointError::Malformed(format!(
            "unsupported version {}",
            doc.version
        )));
    }

    let computed = graph_hash(&doc.graph);
    if computed != doc.graph_sha256 {
        return Err(CheckpointError::GraphHashMismatch {
            stored: doc.graph_sha256,
            computed,
        });
    }

    let graph = SensorGraph::from_wire(&doc.graph)
        .map_err(|e| CheckpointError::Malformed(format!("graph: {e}")))?;
    if graph.node_count() != doc.n_nodes {
        return Err(CheckpointError::Malformed(format!(
            "graph has {} nodes, checkpoint says {}",
            graph.node_count(),
            doc.n_nodes
        )));
    }

    let model = GConvLstmModel {
        cfg: doc.config,
        n_nodes: doc.n_nodes,
        layer1: doc.layer1,
        layer2: doc.layer2,
        head: doc.head,
    };
    check_model_shapes(&model)?;

    Ok(LoadedCheckpoint {
        model,
        graph,
        normalizer: doc.normalizer,
        subset: doc.subset,
    })
}

fn check_model_shapes(model: &GConvLstmModel) -> Result<(), CheckpointError> {
    let cfg = &model.cfg;
    let bad = |what: &str| Err(CheckpointError::Malformed(format!("weight shape: {what}")));
    if model.layer1.d_x != 1 || model.layer1.d_h != cfg.hidden1 || model.layer1.k != cfg.cheb_k {
        return bad("layer 1 disagrees with config");
    }
    if model.layer2.d_x != cfg.hidden1 || model.layer2.d_h != cfg.hidden2 || model.layer2.k != cfg.cheb_k {
        return bad("layer 2 disagrees with config");
    }
    let readout_dim = match cfg.readout {
        crate::config::Readout::Flatten => model.n_nodes * cfg.hidden2,
        crate::config::Readout::MeanPool => cfg.hidden2,
    };
    if model.head.w.len() != readout_dim {
        return bad("head width disagrees with readout");
    }
    Ok(())
}
