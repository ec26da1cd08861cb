use std::path::PathBuf;

use super::{create_dir, ingest, load_bundle, write_json, RunConfig};
use crate::data::AlignedDataset;
use crate::error::{Error, Result, StageExt};
use crate::timeline::{
    apply_persistence, export_timeline, render_timeline, run_timeline, PersistencePolicy,
    StressTimeline, TimedRecord, TimelineFormat,
};

#[derive(Debug, Clone)]
pub struct TimelineRun {
    pub timeline: StressTimeline,
    pub files: Vec<PathBuf>,
}

/// Row keys parsed as numeric timestamps.
pub fn timestamps(dataset: &AlignedDataset) -> Result<Vec<f64>> {
    dataset
        .keys()
        .iter()
        .map(|k| {
            k.trim()
                .parse::<f64>()
                .ok()
                .filter(|t| t.is_finite())
                .ok_or_else(|| Error::Timeline(format!("key `{k}` is not a numeric timestamp")))
        })
        .collect()
}

/// Runs the bundle over every aligned row in key order and writes
/// `timeline.csv`, `timeline.json`, `timeline.svg` and `alerts.json`.
pub fn timeline(cfg: &RunConfig) -> Result<TimelineRun> {
    let out_dir = cfg.out_dir_path().stage("config")?;
    let policy = PersistencePolicy::new(cfg.min_run).stage("config")?;
    let bundle_path = cfg.single_bundle().stage("config")?;
    let dataset = ingest(cfg.manifest_path().stage("config")?)?.dataset;
    let bundle = load_bundle(bundle_path).stage("load-bundle")?;
    let timeline = (|| -> Result<StressTimeline> {
        bundle.check_dataset(&dataset)?;
        let normalized = bundle.normalization.apply(&dataset)?;
        let records: Vec<TimedRecord> = timestamps(&normalized)?
            .into_iter()
            .enumerate()
            .map(|(i, timestamp)| TimedRecord {
                timestamp,
                record: normalized.record(i),
            })
            .collect();
        let raw = run_timeline(&bundle.model, bundle.regressor.as_ref(), &records)?;
        Ok(apply_persistence(&raw, policy))
    })()
    .stage("timeline")?;

    let files = vec![
        out_dir.join("timeline.csv"),
        out_dir.join("timeline.json"),
        out_dir.join("timeline.svg"),
        out_dir.join("alerts.json"),
    ];
    let write = || -> Result<()> {
        create_dir(out_dir)?;
        export_timeline(&timeline, &files[0], TimelineFormat::Table)?;
        export_timeline(&timeline, &files[1], TimelineFormat::Structured)?;
        if !timeline.is_empty() {
            render_timeline(&timeline, &files[2])?;
        }
        write_json(&files[3], &timeline.alerts())
    };
    write().stage("write")?;
    Ok(TimelineRun { timeline, files })
}
