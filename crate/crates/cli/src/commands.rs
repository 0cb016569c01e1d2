//! Subcommand implementations and error-to-exit-code mapping.

use std::path::Path;

use anyhow::Context;
use dbd_core::checkpoint::{load_checkpoint, save_checkpoint};
use dbd_core::dataset::{load_csv, FeatureSubset, FrameSet};
use dbd_core::eval::{
    evaluate_checkpoint, render_table, report_json, run_experiment, write_roc_csv,
    ExperimentReport, RocCurve,
};
use dbd_core::stream::{
    parse_kinds, replay as run_replay, serve as run_serve, tail as run_tail, ServeOptions,
};
use dbd_core::{
    CheckpointError, DataError, EvalError, ExperimentError, GraphError, ModelConfig, ModelError,
    StreamError,
};

use crate::{EvaluateArgs, ReplayArgs, ServeArgs, TailArgs, TrainArgs};

/// Map a failure to the documented exit codes: 2 for anything wrong
/// with data, configuration, or models; 3 for transport trouble.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(stream) = cause.downcast_ref::<StreamError>() {
            return match stream {
                StreamError::Data(_) | StreamError::Checkpoint(_) | StreamError::Model(_) => 2,
                _ => 3,
            };
        }
        if cause.downcast_ref::<DataError>().is_some()
            || cause.downcast_ref::<CheckpointError>().is_some()
            || cause.downcast_ref::<ExperimentError>().is_some()
            || cause.downcast_ref::<ModelError>().is_some()
            || cause.downcast_ref::<GraphError>().is_some()
            || cause.downcast_ref::<EvalError>().is_some()
            || cause.downcast_ref::<toml::de::Error>().is_some()
        {
            return 2;
        }
    }
    2
}

fn load_frames(path: &Path) -> anyhow::Result<FrameSet> {
    let frames =
        load_csv(path, None).with_context(|| format!("reading dataset {}", path.display()))?;
    log::info!(
        "loaded {} frames x {} channels from {}",
        frames.len(),
        frames.channels().len(),
        path.display()
    );
    Ok(frames)
}

fn resolve_subset(name: &str, frames: &FrameSet) -> anyhow::Result<FeatureSubset> {
    if name.eq_ignore_ascii_case("full") {
        return Ok(FeatureSubset::full(frames));
    }
    Ok(FeatureSubset::builtin(name)?)
}

fn load_config(path: Option<&Path>) -> anyhow::Result<ModelConfig> {
    let cfg = match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            toml::from_str::<ModelConfig>(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => ModelConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write_outputs(
    report: &ExperimentReport,
    roc: Option<&RocCurve>,
    report_path: Option<&Path>,
    roc_path: Option<&Path>,
) -> anyhow::Result<()> {
    print!("{}", render_table(report));
    if let Some(path) = report_path {
        std::fs::write(path, report_json(report)?)
            .with_context(|| format!("writing report {}", path.display()))?;
        log::info!("report written to {}", path.display());
    }
    match (roc_path, roc) {
        (Some(path), Some(curve)) => {
            write_roc_csv(path, curve)
                .with_context(|| format!("writing ROC CSV {}", path.display()))?;
            log::info!("ROC points written to {}", path.display());
        }
        (Some(_), None) => log::warn!("no ROC curve available (single-class truths)"),
        _ => {}
    }
    Ok(())
}

pub fn train(args: TrainArgs) -> anyhow::Result<()> {
    let frames = load_frames(&args.data)?;
    let subset = resolve_subset(&args.subset, &frames)?;
    let cfg = load_config(args.config.as_deref())?;

    let output = run_experiment(&frames, &subset, &cfg)?;
    write_outputs(
        &output.report,
        output.roc.as_ref(),
        args.report.as_deref(),
        args.roc.as_deref(),
    )?;

    save_checkpoint(
        &args.out,
        &output.model,
        &output.graph,
        &output.normalizer,
        &output.subset,
    )?;
    log::info!("checkpoint written to {}", args.out.display());
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let frames = load_frames(&args.data)?;
    let (report, roc) = evaluate_checkpoint(&ckpt, &frames)?;
    write_outputs(
        &report,
        roc.as_ref(),
        args.report.as_deref(),
        args.roc.as_deref(),
    )
}

pub fn replay(args: ReplayArgs) -> anyhow::Result<()> {
    let frames = load_frames(&args.data)?;
    let subset = resolve_subset(&args.subset, &frames)?;
    let mut sink = args.out.open_sink()?;
    let summary = run_replay(&frames, &subset, args.speed, sink.as_mut())?;
    log::info!("replayed {} frames", summary.frames_sent);
    Ok(())
}

pub fn serve(args: ServeArgs) -> anyhow::Result<()> {
    let ckpt = load_checkpoint(&args.checkpoint)?;
    log::info!(
        "serving subset '{}' model ({} channels, window {} / stride {})",
        ckpt.subset.name,
        ckpt.subset.channels.len(),
        ckpt.model.cfg.window_len,
        ckpt.model.cfg.stride()
    );
    let source = args.input.open_source()?;
    let sink = args.out.open_sink()?;
    let opts = ServeOptions {
        report_every: args.report_every,
        alert_min_gap_s: args.alert_min_gap,
        ..ServeOptions::default()
    };
    let summary = run_serve(&ckpt, source, sink, &opts)?;
    log::info!(
        "served {} frames: {} predictions, {} alerts, {} reports",
        summary.frames_seen,
        summary.predictions,
        summary.alerts,
        summary.reports
    );
    Ok(())
}

pub fn tail(args: TailArgs) -> anyhow::Result<()> {
    let kinds = match args.kinds.as_deref() {
        Some(list) => parse_kinds(list)?,
        None => Vec::new(),
    };
    let mut source = args.input.open_source()?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let printed = run_tail(source.as_mut(), &kinds, &mut out)?;
    log::info!("{printed} messages shown");
    Ok(())
}
