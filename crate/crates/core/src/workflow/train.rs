use std::collections::BTreeMap;
use std::path::PathBuf;
use std::thread;

use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate_model, EvaluationReport};
use super::{create_dir, ingest, save_bundle, write_json, BundleManifest, RunConfig};
use crate::data::{
    normalize, split_indices, AlignedDataset, AlignmentReport, LoadReport, Modality, SplitSpec,
};
use crate::error::{Error, Result, StageExt};
use crate::fusion::{
    assemble_and_train_early, assemble_and_train_late, build_encoder, train_tlx_regressor,
    train_unimodal, EncoderSpec, FusionMode, FusionModel, FusionOutcome, HeadSpec, TargetScale,
    TlxOutcome, TlxRegressor, UnimodalOutcome, REGRESSOR_LEARNING_RATE,
};
use crate::metrics::{ClassificationReport, ConfusionMatrix};
use crate::nn::History;
use crate::seed;

/// Models trained by one run of the recipe.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub unimodal: Vec<UnimodalOutcome>,
    pub fusion: FusionOutcome,
    pub tlx: Option<TlxOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnimodalReport {
    pub confusion: ConfusionMatrix,
    pub report: ClassificationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub loads: Vec<LoadReport>,
    pub alignment: AlignmentReport,
    pub split: SplitSpec,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Standalone encoder heads, scored on the test rows.
    pub unimodal: BTreeMap<Modality, UnimodalReport>,
    pub fusion_train: ClassificationReport,
    pub test: EvaluationReport,
}

/// Per-epoch losses for every trained network; validation series are on
/// the test rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryReport {
    pub unimodal: BTreeMap<Modality, History>,
    pub fusion: History,
    pub tlx: Option<History>,
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub model: FusionModel,
    pub regressor: Option<TlxRegressor>,
    pub report: TrainReport,
    pub history: HistoryReport,
    pub manifest: BundleManifest,
    pub bundle_dir: PathBuf,
}

/// Unimodal encoders (concurrently), then the fusion head, then the
/// optional regressor. Every seed is derived from `cfg.seed` and `prefix`.
pub fn fit_models(
    train: &AlignedDataset,
    validation: Option<&AlignedDataset>,
    cfg: &RunConfig,
    prefix: &str,
) -> Result<Fitted> {
    let modalities: Vec<Modality> = train
        .modalities()
        .filter(|&m| m != Modality::Physiology)
        .collect();
    if modalities.is_empty() {
        return Err(Error::InvalidConfig(
            "no encoded modality in the data".into(),
        ))
        .stage("unimodal");
    }
    let unimodal = thread::scope(|scope| {
        let handles: Vec<_> = modalities
            .iter()
            .map(|&m| {
                scope.spawn(move || -> Result<UnimodalOutcome> {
                    let x = train.block(m)?;
                    let init = seed::derive(cfg.seed, &format!("{prefix}init/{m}"));
                    let encoder = build_encoder(&EncoderSpec::default_for(m), x.cols(), init)?;
                    let heldout = match validation {
                        Some(v) => Some((v.block(m)?, v.labels())),
                        None => None,
                    };
                    let tc = cfg.train_config(&format!("{prefix}train/{m}"));
                    train_unimodal(encoder, x, train.labels(), heldout, &tc)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("unimodal training thread panicked"))
            .collect::<Result<Vec<_>>>()
    })
    .stage("unimodal")?;

    let encoders = unimodal.iter().map(|u| u.encoder.clone()).collect();
    let head = HeadSpec {
        seed: seed::derive(cfg.seed, &format!("{prefix}init/fusion")),
        ..HeadSpec::default()
    };
    let tc = cfg.train_config(&format!("{prefix}train/fusion"));
    let fusion = match cfg.mode {
        FusionMode::Early => assemble_and_train_early(encoders, train, validation, &tc, &head),
        FusionMode::Late => assemble_and_train_late(encoders, train, validation, &tc, &head),
    }
    .stage("fusion")?;

    let tlx = if cfg.with_tlx {
        let head = HeadSpec::regressor(seed::derive(cfg.seed, &format!("{prefix}init/tlx")));
        let mut tc = cfg.train_config(&format!("{prefix}train/tlx"));
        tc.learning_rate = REGRESSOR_LEARNING_RATE;
        Some(
            train_tlx_regressor(
                &fusion.model,
                train,
                validation,
                &tc,
                &head,
                TargetScale::Normalized0To1,
            )
            .stage("tlx")?,
        )
    } else {
        None
    };
    Ok(Fitted {
        unimodal,
        fusion,
        tlx,
    })
}

/// Ingest, align, split, normalize on the training rows, fit, evaluate on
/// the test rows, and write the bundle and reports under `cfg.out_dir`.
pub fn train(cfg: &RunConfig) -> Result<TrainRun> {
    cfg.validate().stage("config")?;
    let out_dir = cfg.out_dir_path().stage("config")?;
    let ingested = ingest(cfg.manifest_path().stage("config")?)?;
    let spec = SplitSpec {
        train_fraction: cfg.split,
        seed: seed::derive(cfg.seed, "split"),
        stratified: true,
    };
    let (train_idx, test_idx) = split_indices(ingested.dataset.labels(), &spec).stage("split")?;
    let dataset = normalize(&ingested.dataset, &train_idx).stage("normalize")?;
    let (train_ds, test_ds) = (dataset.subset(&train_idx), dataset.subset(&test_idx));

    let fitted = fit_models(&train_ds, Some(&test_ds), cfg, "")?;
    let model = fitted.fusion.model.clone();
    let regressor = fitted.tlx.as_ref().map(|t| t.regressor.clone());
    let test = evaluate_model(&model, regressor.as_ref(), &test_ds).stage("evaluate")?;
    let fusion_train = model.evaluate(&train_ds).stage("evaluate")?.1;

    let report = TrainReport {
        loads: ingested.loads,
        alignment: ingested.alignment,
        split: spec,
        train_rows: train_ds.len(),
        test_rows: test_ds.len(),
        unimodal: fitted
            .unimodal
            .iter()
            .map(|u| {
                (
                    u.encoder.modality(),
                    UnimodalReport {
                        confusion: u.confusion,
                        report: u.report,
                    },
                )
            })
            .collect(),
        fusion_train,
        test,
    };
    let history = HistoryReport {
        unimodal: fitted
            .unimodal
            .iter()
            .map(|u| (u.encoder.modality(), u.history.clone()))
            .collect(),
        fusion: fitted.fusion.history.clone(),
        tlx: fitted.tlx.as_ref().map(|t| t.history.clone()),
    };

    let bundle_dir = out_dir.join("bundle");
    let write = || -> Result<BundleManifest> {
        create_dir(out_dir)?;
        let manifest = save_bundle(
            &bundle_dir,
            &model,
            regressor.as_ref(),
            &dataset,
            spec,
            cfg.seed,
            cfg.train_config(""),
        )?;
        write_json(&out_dir.join("train_report.json"), &report)?;
        write_json(&out_dir.join("history.json"), &history)?;
        Ok(manifest)
    };
    let manifest = write().stage("write")?;
    Ok(TrainRun {
        model,
        regressor,
        report,
        history,
        manifest,
        bundle_dir,
    })
}
