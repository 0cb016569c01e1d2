//! Classification metrics, ROC/AUC, and the experiment driver.
//!
//! The positive class is always the unsafe label (1). [`run_experiment`]
//! chains the full pipeline — labeling, windowing, splitting,
//! normalization, graph construction, training, scoring — and compares
//! the result against published reference rows for the built-in channel
//! subsets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checkpoint::LoadedCheckpoint;
use crate::config::ModelConfig;
use crate::dataset::csv_io::FrameSet;
use crate::dataset::label::{label_frames, LabelRule};
use crate::dataset::normalize::{normalize, NormalizationStats};
use crate::dataset::pipeline::{assemble, DatasetBundle};
use crate::dataset::subset::FeatureSubset;
use crate::dataset::window::{materialize_windows, plan_windows, WindowOptions};
use crate::error::{EvalError, ExperimentError};
use crate::graph::{build_graph, SensorGraph};
use crate::nn::model::GConvLstmModel;
use crate::nn::train::{predict_all, train};

/// Counts of the four prediction outcomes. The positive class is 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Count prediction outcomes against ground truth.
pub fn confusion(predictions: &[u8], truths: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    if predictions.len() != truths.len() {
        return Err(EvalError::LengthMismatch(predictions.len(), truths.len()));
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix {
        tp: 0,
        tn: 0,
        fp: 0,
        fn_: 0,
    };
    for (&p, &t) in predictions.iter().zip(truths) {
        match (p != 0, t != 0) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// The four headline metrics. When a precision or recall denominator is
/// zero the value is reported as 0 and `degenerate` is set, so sweeps
/// over collapsed checkpoints keep running instead of erroring out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: bool,
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let mut degenerate = false;
    let mut ratio = |num: usize, den: usize| -> f64 {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = if precision + recall == 0.0 {
        degenerate = true;
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Metrics {
        accuracy,
        precision,
        recall,
        f1,
        degenerate,
    })
}

/// ROC curve for the positive class, swept over the unique scores in
/// descending order. Tied scores move TPR and FPR in one simultaneous
/// step, which makes the trapezoidal area equal to the pair-ordering
/// probability with half credit for ties.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
    pub auc: f64,
}

pub fn roc_auc(probabilities: &[f64], truths: &[u8]) -> Result<RocCurve, EvalError> {
    if probabilities.len() != truths.len() {
        return Err(EvalError::LengthMismatch(probabilities.len(), truths.len()));
    }
    if probabilities.is_empty() {
        return Err(EvalError::Empty);
    }
    let pos = truths.iter().filter(|&&t| t != 0).count();
    let neg = truths.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }

    let mut order: Vec<usize> = (0..probabilities.len()).collect();
    order.sort_by(|&a, &b| probabilities[b].total_cmp(&probabilities[a]));

    let mut thresholds = Vec::new();
    let mut tpr = vec![0.0];
    let mut fpr = vec![0.0];
    let mut auc = 0.0;
    let (mut tp, mut fp) = (0usize, 0usize);

    let mut i = 0;
    while i < order.len() {
        let score = probabilities[order[i]];
        // Consume the whole tie group at this score in one step.
        let (mut d_tp, mut d_fp) = (0usize, 0usize);
        while i < order.len() && probabilities[order[i]] == score {
            if truths[order[i]] != 0 {
                d_tp += 1;
            } else {
                d_fp += 1;
            }
            i += 1;
        }
        // Trapezoid under the diagonal tie segment: negatives crossed
        // now, at the mid-height of the positives gained now.
        auc += d_fp as f64 * (tp as f64 + d_tp as f64 / 2.0);
        tp += d_tp;
        fp += d_fp;
        thresholds.push(score);
        tpr.push(tp as f64 / pos as f64);
        fpr.push(fp as f64 / neg as f64);
    }
    auc /= (pos * neg) as f64;

    Ok(RocCurve {
        thresholds,
        tpr,
        fpr,
        auc,
    })
}

/// Write the ROC points as CSV for external plotting.
pub fn write_roc_csv(path: &Path, curve: &RocCurve) -> std::io::Result<()> {
    let mut out = String::from("threshold,fpr,tpr\n");
    // Row 0 is the (0,0) anchor above every threshold.
    out.push_str(&format!("inf,{},{}\n", curve.fpr[0], curve.tpr[0]));
    for (i, t) in curve.thresholds.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", t, curve.fpr[i + 1], curve.tpr[i + 1]));
    }
    std::fs::write(path, out)
}

/// One published result row, in percent.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub method: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// How far (in percentage points) a reproduction may drift from the
/// reference row before it is flagged.
pub const REFERENCE_TOLERANCE_PP: f64 = 1.5;

const OUR_METHOD: &str = "GConvLSTM";

fn row(method: &str, accuracy: f64, precision: f64, recall: f64, f1: f64) -> ReferenceRow {
    ReferenceRow {
        method: method.to_string(),
        accuracy,
        precision,
        recall,
        f1,
    }
}

/// Published rows for a built-in subset (`A`, `B`, or `C`); empty for
/// custom subsets. The last row is always this model family.
pub fn reference_rows(subset: &str) -> Vec<ReferenceRow> {
    match subset.to_ascii_uppercase().as_str() {
        "A" => vec![
            row("SVM", 82.5, 82.1, 76.3, 79.1),
            row("NN", 84.1, 82.9, 78.2, 80.5),
            row(OUR_METHOD, 97.5, 97.6, 97.5, 97.5),
        ],
        "B" => vec![
            row("SVM", 90.2, 89.4, 87.7, 88.5),
            row("NN", 91.7, 90.8, 89.1, 89.9),
            row(OUR_METHOD, 97.5, 99.6, 95.8, 97.6),
        ],
        "C" => vec![row(OUR_METHOD, 98.7, 98.6, 98.6, 98.6)],
        _ => Vec::new(),
    }
}

/// Signed drift of this run from the reference row, in percentage
/// points, plus whether every metric is within [`REFERENCE_TOLERANCE_PP`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReferenceDeltas {
    pub accuracy_pp: f64,
    pub precision_pp: f64,
    pub recall_pp: f64,
    pub f1_pp: f64,
    pub within_tolerance: bool,
}

pub fn deltas_vs_reference(m: &Metrics, reference: &ReferenceRow) -> ReferenceDeltas {
    let accuracy_pp = m.accuracy * 100.0 - reference.accuracy;
    let precision_pp = m.precision * 100.0 - reference.precision;
    let recall_pp = m.recall * 100.0 - reference.recall;
    let f1_pp = m.f1 * 100.0 - reference.f1;
    let within_tolerance = [accuracy_pp, precision_pp, recall_pp, f1_pp]
        .iter()
        .all(|d| d.abs() <= REFERENCE_TOLERANCE_PP);
    ReferenceDeltas {
        accuracy_pp,
        precision_pp,
        recall_pp,
        f1_pp,
        within_tolerance,
    }
}

/// The serializable experiment summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub subset: String,
    pub config: ModelConfig,
    pub train_windows: usize,
    pub test_windows: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub auc: Option<f64>,
    pub loss_trace: Vec<f64>,
    pub published_reference: Vec<ReferenceRow>,
    pub deltas: Option<ReferenceDeltas>,
}

/// Everything an experiment produces: the report plus the artifacts a
/// caller needs to persist a runnable checkpoint.
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub roc: Option<RocCurve>,
    pub model: GConvLstmModel,
    pub graph: SensorGraph,
    pub normalizer: NormalizationStats,
    pub subset: FeatureSubset,
    pub bundle: DatasetBundle,
}

/// Run the full pipeline on already-loaded frames and score the held-out
/// windows. AUC is omitted (with a log note) when the test truths are
/// single-class, since the curve is undefined there.
pub fn run_experiment(
    frames: &FrameSet,
    subset: &FeatureSubset,
    cfg: &ModelConfig,
) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    let bundle = assemble(frames, subset, &LabelRule::default(), cfg)?;
    let graph = build_graph(&bundle.train_rows, &bundle.subset.channels)?;
    let (model, loss_trace) = train(&graph, &bundle.train, cfg)?;

    let (preds, probs) = predict_all(&model, &graph, &bundle.test)?;
    let truths: Vec<u8> = bundle.test.iter().map(|w| w.label).collect();
    let cm = confusion(&preds, &truths)?;
    let m = metrics(&cm)?;
    let roc = match roc_auc(&probs, &truths) {
        Ok(curve) => Some(curve),
        Err(EvalError::SingleClass) => {
            log::warn!("test truths are single-class; AUC skipped");
            None
        }
        Err(e) => return Err(e.into()),
    };

    let published_reference = reference_rows(&bundle.subset.name);
    let deltas = published_reference
        .iter()
        .find(|r| r.method == OUR_METHOD)
        .map(|r| deltas_vs_reference(&m, r));

    let report = ExperimentReport {
        subset: bundle.subset.name.clone(),
        config: cfg.clone(),
        train_windows: bundle.train.len(),
        test_windows: bundle.test.len(),
        confusion: cm,
        metrics: m,
        auc: roc.as_ref().map(|c| c.auc),
        loss_trace,
        published_reference,
        deltas,
    };
    let normalizer = bundle.normalizer.clone();
    let subset = bundle.subset.clone();
    Ok(ExperimentOutput {
        report,
        roc,
        model,
        graph,
        normalizer,
        subset,
        bundle,
    })
}

/// Score a frozen checkpoint against a labeled dataset.
///
/// Unlike [`run_experiment`], nothing is re-fitted: frames are projected
/// onto the checkpoint's subset, scaled with its stored normalizer, cut
/// into windows under its stored configuration, and scored by its
/// stored weights. Every window counts (there is no train/test split —
/// the caller decides what data to feed).
pub fn evaluate_checkpoint(
    ckpt: &LoadedCheckpoint,
    frames: &FrameSet,
) -> Result<(ExperimentReport, Option<RocCurve>), ExperimentError> {
    let cfg = &ckpt.model.cfg;
    let cols = ckpt.subset.resolve(frames)?;
    let labels = label_frames(frames, &LabelRule::default(), &cfg.speed_channel)?;
    let opts = WindowOptions::from_config(cfg);
    let specs = plan_windows(&frames.trip_spans(), &labels, &opts)?;
    let rows: Vec<Vec<f64>> = frames
        .frames()
        .iter()
        .map(|f| {
            let raw: Vec<f64> = cols.iter().map(|&c| f.values[c]).collect();
            normalize(&raw, &ckpt.normalizer)
        })
        .collect::<Result<_, _>>()?;
    let windows = materialize_windows(&rows, &specs, cfg.window_len);

    let (preds, probs) = predict_all(&ckpt.model, &ckpt.graph, &windows)?;
    let truths: Vec<u8> = windows.iter().map(|w| w.label).collect();
    let cm = confusion(&preds, &truths)?;
    let m = metrics(&cm)?;
    let roc = match roc_auc(&probs, &truths) {
        Ok(curve) => Some(curve),
        Err(EvalError::SingleClass) => {
            log::warn!("truths are single-class; AUC skipped");
            None
        }
        Err(e) => return Err(e.into()),
    };

    let published_reference = reference_rows(&ckpt.subset.name);
    let deltas = published_reference
        .iter()
        .find(|r| r.method == OUR_METHOD)
        .map(|r| deltas_vs_reference(&m, r));
    let report = ExperimentReport {
        subset: ckpt.subset.name.clone(),
        config: cfg.clone(),
        train_windows: 0,
        test_windows: windows.len(),
        confusion: cm,
        metrics: m,
        auc: roc.as_ref().map(|c| c.auc),
        loss_trace: Vec::new(),
        published_reference,
        deltas,
    };
    Ok((report, roc))
}

/// The report as pretty-printed JSON.
pub fn report_json(report: &ExperimentReport) -> serde_json::Result<String> {
    serde_json::to_string_pretty(report)
}

/// Plain-text comparison table for terminal output.
pub fn render_table(report: &ExperimentReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "subset {} — {} train / {} test windows\n",
        report.subset, report.train_windows, report.test_windows
    ));
    out.push_str(&format!(
        "{:<16} {:>9} {:>10} {:>8} {:>8} {:>7}\n",
        "method", "accuracy", "precision", "recall", "f1", "auc"
    ));
    for r in &report.published_reference {
        out.push_str(&format!(
            "{:<16} {:>8.1}% {:>9.1}% {:>7.1}% {:>7.1}% {:>7}\n",
            format!("{} (ref)", r.method),
            r.accuracy,
            r.precision,
            r.recall,
            r.f1,
            "-"
        ));
    }
    let m = &report.metrics;
    let auc = report
        .auc
        .map_or("-".to_string(), |a| format!("{a:.3}"));
    out.push_str(&format!(
        "{:<16} {:>8.1}% {:>9.1}% {:>7.1}% {:>7.1}% {:>7}\n",
        "this run",
        m.accuracy * 100.0,
        m.precision * 100.0,
        m.recall * 100.0,
        m.f1 * 100.0,
        auc
    ));
    if let Some(d) = &report.deltas {
        out.push_str(&format!(
            "{:<16} {:>+8.1}pp {:>+8.1}pp {:>+6.1}pp {:>+6.1}pp   (tolerance +/-{:.1}pp: {})\n",
            "delta vs ref",
            d.accuracy_pp,
            d.precision_pp,
            d.recall_pp,
            d.f1_pp,
            REFERENCE_TOLERANCE_PP,
            if d.within_tolerance { "ok" } else { "OUT" }
        ));
    }
    if m.degenerate {
        out.push_str("note: one or more metric denominators were zero\n");
    }
    out
}
