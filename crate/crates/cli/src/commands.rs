//! Implementation of the five subcommands.

use std::io::Write;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;

use perpred_core::data::{center_normalize, load_csv, split, Dataset};
use perpred_core::listlearn::{margin, sparse_list, ClassifierList};
use perpred_core::perpredict::{
    personalized_predict_prepared, split_for_queries, PredictConfig,
};
use perpred_core::refclass::{learn_reference_class_detailed, RefClassConfig};
use perpred_core::seeding::derive_seed;
use perpred_core::synth::draw;
use perpred_core::{
    ConditionalError, CoreError, LabeledSample, SparseLinearClassifier, Vector,
    WellBehavedParams,
};

use crate::config::{DataSource, ExperimentConfig, QuerySpec};
use crate::report::{
    median, render_table, EvaluationReport, QueryRecord, RunMetadata, Summary, TrialReport,
};
use crate::CliError;

// Seed streams hanging off each trial seed.
const STREAM_DATA: u64 = 10;
const STREAM_LIST: u64 = 11;
const STREAM_SELECTION: u64 = 12;
const STREAM_RC_SPLIT: u64 = 13;

fn data_err(e: perpred_core::data::DataError) -> CliError {
    CliError::Data(e.to_string())
}

fn internal_err(e: CoreError) -> CliError {
    CliError::Internal(e.to_string())
}

/// Well-behaved constants: explicit config wins, else the synthetic
/// marginal's, else the unit Gaussian's (real data is standardized).
fn resolve_params(cfg: &ExperimentConfig) -> Result<WellBehavedParams, CliError> {
    if let Some(p) = cfg.refclass.params {
        return Ok(p);
    }
    match &cfg.data {
        DataSource::Synthetic { spec, .. } => spec
            .marginal
            .well_behaved(spec.dim)
            .map_err(internal_err),
        DataSource::Csv { .. } => perpred_core::synth::GaussianParams { sigma: 1.0 }
            .well_behaved()
            .map_err(internal_err),
    }
}

fn predict_config(cfg: &ExperimentConfig, seed: u64) -> Result<PredictConfig, CliError> {
    Ok(PredictConfig {
        list: cfg.list.to_config(derive_seed(seed, STREAM_LIST))?,
        epsilon: cfg.predict.epsilon,
        delta: cfg.predict.delta,
        opt: cfg.predict.opt,
        params: resolve_params(cfg)?,
        sample_multiplier: cfg.refclass.sample_multiplier,
        selection_size: cfg.predict.selection_size,
        max_candidates: cfg.predict.max_candidates,
        seed: derive_seed(seed, STREAM_SELECTION),
    })
}

/// Loads the full dataset as one labeled sample (CSV sources are
/// standardized first). Returns the dataset alongside for query transforms.
fn load_full_sample(
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(LabeledSample, Option<Dataset>), CliError> {
    match &cfg.data {
        DataSource::Synthetic { spec, n } => {
            let spec = spec.to_spec(derive_seed(seed, STREAM_DATA))?;
            let sample = draw(&spec, *n).map_err(internal_err)?;
            Ok((sample, None))
        }
        DataSource::Csv {
            path,
            schema,
            standardize,
        } => {
            let ds = load_csv(path, schema).map_err(data_err)?;
            let ds = if *standardize {
                center_normalize(&ds).map_err(data_err)?
            } else {
                ds
            };
            Ok((ds.to_sample(), Some(ds)))
        }
    }
}

fn resolve_query(
    query: &Option<QuerySpec>,
    sample: &LabeledSample,
    dataset: Option<&Dataset>,
) -> Result<Vector, CliError> {
    let q = query
        .as_ref()
        .ok_or_else(|| CliError::Config("this task requires a query".into()))?;
    if let Some(index) = q.index {
        if index >= sample.len() {
            return Err(CliError::Config(format!(
                "query index {index} out of range for {} rows",
                sample.len()
            )));
        }
        return Ok(sample.point(index));
    }
    let coords = q.coords.as_ref().expect("validated: coords xor index");
    let raw = Vector::new(coords.clone())
        .map_err(|e| CliError::Config(format!("query coords: {e}")))?;
    match dataset {
        Some(ds) => {
            if coords.len() != ds.report.kept_columns.len()
                && !ds.report.kept_columns.is_empty()
                && coords.len() < ds.report.kept_columns.iter().max().unwrap() + 1
            {
                return Err(CliError::Config(format!(
                    "query coords have dimension {}, raw data expects at least {}",
                    coords.len(),
                    ds.report.kept_columns.iter().max().unwrap() + 1
                )));
            }
            Vector::new(ds.report.apply_row(coords))
                .map_err(|e| CliError::Config(format!("query coords: {e}")))
        }
        None => Ok(raw),
    }
}

fn write_output(out: Option<&Path>, payload: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(payload)
        .map_err(|e| CliError::Internal(format!("serialize: {e}")))?;
    match out {
        Some(path) => std::fs::write(path, text.as_bytes())
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Seeded shuffle split of a labeled sample (for synthetic evaluation data).
fn split_sample(
    sample: &LabeledSample,
    train_fraction: f64,
    seed: u64,
) -> (LabeledSample, LabeledSample) {
    use rand::{Rng, SeedableRng};
    let n = sample.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let train_n = ((train_fraction * n as f64).ceil() as usize).clamp(1, n - 1);
    (
        sample.select(&order[..train_n]),
        sample.select(&order[train_n..]),
    )
}

pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let DataSource::Synthetic { spec, n } = &cfg.data else {
        return Err(CliError::Config("gen requires a synthetic data source".into()));
    };
    let out = cfg
        .out
        .as_ref()
        .ok_or_else(|| CliError::Config("gen requires an output path".into()))?;
    let spec = spec.to_spec(derive_seed(cfg.seed, STREAM_DATA))?;
    let sample = draw(&spec, *n).map_err(internal_err)?;

    let mut text = String::new();
    for j in 0..sample.dim() {
        text.push_str(&format!("x{j},"));
    }
    text.push_str("y\n");
    for (row, y) in sample.iter() {
        for v in row {
            text.push_str(&format!("{v},"));
        }
        text.push_str(&format!("{y}\n"));
    }
    std::fs::write(out, text.as_bytes())
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", out.display())))?;
    eprintln!("wrote {} rows to {}", sample.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct ListOutput {
    margin: f64,
    list: ClassifierList,
}

pub fn cmd_listlearn(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let (sample, _) = load_full_sample(cfg, cfg.seed)?;
    let list_cfg = cfg.list.to_config(derive_seed(cfg.seed, STREAM_LIST))?;
    let list = sparse_list(&sample, &list_cfg).map_err(internal_err)?;
    write_output(
        cfg.out.as_deref(),
        &ListOutput {
            margin: margin(&list_cfg),
            list,
        },
    )
}

#[derive(Serialize)]
struct RefClassOutput {
    normal: Vec<f64>,
    threshold: f64,
    iterate_index: usize,
    iterates: usize,
    validation_positive_rate: f64,
    query: Vec<f64>,
    train_size: usize,
    validation_size: usize,
}

pub fn cmd_refclass(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let (sample, dataset) = load_full_sample(cfg, cfg.seed)?;
    let query = resolve_query(&cfg.query, &sample, dataset.as_ref())?;
    let params = resolve_params(cfg)?;
    let rc_cfg = RefClassConfig::from_formulas(
        cfg.refclass.epsilon,
        cfg.refclass.delta,
        params,
        cfg.refclass.sample_multiplier,
    )
    .map_err(|e| CliError::Config(format!("refclass settings: {e}")))?;

    let (train, validation) = split_sample(
        &sample,
        1.0 - cfg.refclass.validation_fraction,
        derive_seed(cfg.seed, STREAM_RC_SPLIT),
    );
    let outcome = learn_reference_class_detailed(&train, &validation, &query, &rc_cfg)
        .map_err(internal_err)?;
    write_output(
        cfg.out.as_deref(),
        &RefClassOutput {
            normal: outcome.halfspace.normal().as_slice().to_vec(),
            threshold: outcome.halfspace.threshold(),
            iterate_index: outcome.iterate_index,
            iterates: outcome.iterates,
            validation_positive_rate: outcome.validation_positive_rate,
            query: query.as_slice().to_vec(),
            train_size: train.len(),
            validation_size: validation.len(),
        },
    )
}

#[derive(Serialize)]
struct PredictOutput {
    query: Vec<f64>,
    result: perpred_core::perpredict::PredictionResult,
}

pub fn cmd_predict(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let (sample, dataset) = load_full_sample(cfg, cfg.seed)?;
    let query = resolve_query(&cfg.query, &sample, dataset.as_ref())?;
    let pcfg = predict_config(cfg, cfg.seed)?;
    let result = perpred_core::perpredict::personalized_predict(&sample, &query, &pcfg)
        .map_err(internal_err)?;
    write_output(
        cfg.out.as_deref(),
        &PredictOutput {
            query: query.as_slice().to_vec(),
            result,
        },
    )
}

/// Global sparse baseline: the list entry with the best training accuracy.
fn sparse_baseline(
    train: &LabeledSample,
    list: &ClassifierList,
) -> Option<(SparseLinearClassifier, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (idx, c) in list.classifiers.iter().enumerate() {
        let wrong = train
            .iter()
            .filter(|(x, y)| c.predict_slice(x) != *y)
            .count();
        let err = wrong as f64 / train.len() as f64;
        if best.map_or(true, |(_, b)| err < b) {
            best = Some((idx, err));
        }
    }
    best.map(|(idx, err)| (list.classifiers[idx].clone(), err))
}

fn global_error(sample: &LabeledSample, c: &SparseLinearClassifier) -> f64 {
    let wrong = sample
        .iter()
        .filter(|(x, y)| c.predict_slice(x) != *y)
        .count();
    wrong as f64 / sample.len() as f64
}

fn run_trial(cfg: &ExperimentConfig, trial_seed: u64) -> Result<TrialReport, CliError> {
    // Data for this trial.
    let (train, test) = match &cfg.data {
        DataSource::Synthetic { spec, n } => {
            let spec = spec.to_spec(derive_seed(trial_seed, STREAM_DATA))?;
            let sample = draw(&spec, *n).map_err(internal_err)?;
            split_sample(&sample, cfg.evaluate.train_fraction, trial_seed)
        }
        DataSource::Csv {
            path,
            schema,
            standardize,
        } => {
            let ds = load_csv(path, schema).map_err(data_err)?;
            if *standardize {
                let (train_ds, test_ds) =
                    split(&ds, cfg.evaluate.train_fraction, trial_seed).map_err(data_err)?;
                (train_ds.to_sample(), test_ds.to_sample())
            } else {
                split_sample(&ds.to_sample(), cfg.evaluate.train_fraction, trial_seed)
            }
        }
    };

    let pcfg = predict_config(cfg, trial_seed)?;
    let mut trial = TrialReport {
        seed: trial_seed,
        train_size: train.len(),
        test_size: test.len(),
        dim: train.dim(),
        list_size: 0,
        attempted_tuples: 0,
        pers_error: None,
        sparse_error: None,
        failed_queries: 0,
        sparse_classifier: None,
        error: None,
        per_query: Vec::new(),
    };

    let (working, selection) = match split_for_queries(&train, &pcfg) {
        Ok(pair) => pair,
        Err(e) => {
            trial.error = Some(e.to_string());
            return Ok(trial);
        }
    };
    let list = match sparse_list(&working, &pcfg.list) {
        Ok(l) => l,
        Err(e) => {
            trial.error = Some(e.to_string());
            return Ok(trial);
        }
    };
    trial.list_size = list.len();
    trial.attempted_tuples = list.attempted_tuples;
    if list.is_empty() {
        trial.error = Some(CoreError::EmptyList.to_string());
        return Ok(trial);
    }

    if let Some((classifier, _train_err)) = sparse_baseline(&train, &list) {
        trial.sparse_error = Some(global_error(&test, &classifier));
        trial.sparse_classifier = Some(classifier);
    }

    // Every test point is its own query.
    let records: Vec<QueryRecord> = (0..test.len())
        .into_par_iter()
        .map(|i| {
            let query = test.point(i);
            let mut record = QueryRecord {
                id: i,
                query: query.as_slice().to_vec(),
                true_label: test.label(i),
                predicted: None,
                classifier_terms: Vec::new(),
                halfspace_normal: Vec::new(),
                support_count: 0,
                conditional_error: ConditionalError::Undefined,
                error: None,
            };
            if query.is_zero() {
                record.error = Some(CoreError::ZeroVector.to_string());
                return record;
            }
            match personalized_predict_prepared(&working, &selection, &query, &pcfg, &list) {
                Ok(result) => {
                    record.predicted = Some(result.label);
                    record.classifier_terms = result.pair.classifier.terms().to_vec();
                    record.halfspace_normal =
                        result.pair.halfspace.normal().as_slice().to_vec();
                    record.support_count = result.pair.support_count;
                    record.conditional_error = result.pair.empirical_error;
                }
                Err(e) => record.error = Some(e.to_string()),
            }
            record
        })
        .collect();

    let mut wrong = 0usize;
    let mut ok = 0usize;
    for r in &records {
        match r.predicted {
            Some(p) => {
                ok += 1;
                wrong += (p != r.true_label) as usize;
            }
            None => trial.failed_queries += 1,
        }
    }
    if ok > 0 {
        trial.pers_error = Some(wrong as f64 / ok as f64);
    }
    trial.per_query = records;
    Ok(trial)
}

pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<EvaluationReport, CliError> {
    let started = Instant::now();
    let mut trials = Vec::new();
    for ts in cfg.trial_seeds() {
        trials.push(run_trial(cfg, ts)?);
    }

    let mut pers: Vec<f64> = trials.iter().filter_map(|t| t.pers_error).collect();
    let mut sparse: Vec<f64> = trials.iter().filter_map(|t| t.sparse_error).collect();
    let summary = Summary {
        trials: trials.len(),
        pers_error_median: median(&mut pers),
        sparse_error_median: median(&mut sparse),
    };

    let report = EvaluationReport {
        metadata: RunMetadata {
            created_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
            duration_ms: started.elapsed().as_millis(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        config: cfg.clone(),
        summary,
        trials,
    };

    let table = render_table(&report);
    print!("{table}");
    if let Some(out) = cfg.out.as_deref() {
        write_output(Some(out), &report)?;
        let table_path = out.with_extension("txt");
        let mut f = std::fs::File::create(&table_path)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", table_path.display())))?;
        f.write_all(table.as_bytes())
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", table_path.display())))?;
    }
    Ok(report)
}
