use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use zsl_core::compat::classify;
use zsl_core::corpus::{
    read_class_catalog, read_embedding_table, read_fold_plan, read_labeled_pairs, read_model,
    read_sample_set, write_embedding_table, write_fold_plan, write_labeled_pairs, write_model,
    write_sample_set, ClassCatalog, EmbeddingTable, FoldPlan, Role, SampleSet,
};
use zsl_core::metrics::{build_contingency, evaluate, mcnemar, top1, ContingencyTable, EvalReport};
use zsl_core::semantics::{
    build_class_semantic_table, read_stopwords, AssemblySpec, Source, TokenRule,
};
use zsl_core::splits::{
    bin_stratified_folds, category_folds, make_data_setting, random_folds, undersample, BinSpec,
    DataSetting,
};
use zsl_core::warp::TrainConfig;

use crate::args::{
    AssembleArgs, Cli, Command, ConfigCommand, Corpus, EvaluateArgs, McnemarArgs, PredictArgs,
    Setting, SplitArgs, Strategy, TrainArgs, UndersampleArgs,
};
use crate::error::{CliError, CliResult};
use crate::log;
use crate::manifest::RunManifest;

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Split(a) => split(a),
        Command::Undersample(a) => cmd_undersample(a),
        Command::Assemble(a) => assemble(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Mcnemar(a) => cmd_mcnemar(a),
        Command::Config(ConfigCommand::Init { out }) => config_init(out),
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_file(path)?).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes") + "\n"
}

fn split(a: SplitArgs) -> CliResult<()> {
    let catalog = read_class_catalog(&a.catalog)?;
    let mut manifest = RunManifest::new("split", json!({}), None);
    manifest.input(&a.catalog)?;
    let plan = match a.strategy {
        Strategy::Category => {
            let path = a
                .categories
                .as_ref()
                .ok_or_else(|| CliError::usage("--strategy category needs --categories"))?;
            let map: HashMap<String, String> = read_json(path)?;
            manifest.input(path)?;
            manifest.config = json!({ "strategy": "category" });
            category_folds(&catalog, &map)?
        }
        Strategy::Random => {
            manifest.config = json!({ "strategy": "random", "k": a.k });
            manifest.seed = Some(a.seed);
            random_folds(&catalog, a.k, a.seed)?
        }
        Strategy::Bins => {
            let path = a
                .samples
                .as_ref()
                .ok_or_else(|| CliError::usage("--strategy bins needs --samples"))?;
            let samples = read_sample_set(path)?;
            manifest.input(path)?;
            let bins = match &a.bins {
                Some(p) => {
                    manifest.input(p)?;
                    read_json::<BinSpec>(p)?
                }
                None => BinSpec::default(),
            };
            manifest.config = json!({ "strategy": "bins", "k": a.k, "bins": bins });
            manifest.seed = Some(a.seed);
            bin_stratified_folds(&samples, &catalog, &bins, a.k, a.seed)?
        }
    };
    let plan = match a.setting {
        Some(s) => {
            manifest.config["setting"] = json!(setting_name(s));
            make_data_setting(&plan, data_setting(s))?
        }
        None => plan,
    };
    write_fold_plan(&plan, &a.out)?;
    manifest.write_beside(&a.out)?;
    let sizes: Vec<(&str, usize)> = plan
        .folds()
        .iter()
        .map(|(n, f)| (n.as_str(), f.len()))
        .collect();
    log::event("split", json!({ "folds": sizes, "out": a.out }));
    Ok(())
}

fn setting_name(s: Setting) -> &'static str {
    match s {
        Setting::S1 => "s1",
        Setting::S2 => "s2",
    }
}

fn data_setting(s: Setting) -> DataSetting {
    match s {
        Setting::S1 => DataSetting::S1,
        Setting::S2 => DataSetting::S2,
    }
}

fn cmd_undersample(a: UndersampleArgs) -> CliResult<()> {
    if a.cap == 0 || a.threshold == 0 {
        return Err(CliError::usage("--cap and --threshold must be positive"));
    }
    if a.cap < a.threshold {
        log::warn("cap is below threshold; classes just above the threshold will be cut below it");
    }
    let samples = read_sample_set(&a.samples)?;
    let kept = undersample(&samples, a.cap, a.threshold, a.seed)?;
    write_sample_set(&kept, &a.out)?;
    let mut manifest = RunManifest::new(
        "undersample",
        json!({ "cap": a.cap, "threshold": a.threshold }),
        Some(a.seed),
    );
    manifest.input(&a.samples)?;
    manifest.write_beside(&a.out)?;
    log::event(
        "undersample",
        json!({ "before": samples.len(), "after": kept.len() }),
    );
    Ok(())
}

/// One entry of the assembly config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecEntry {
    name: String,
    source: Source,
    table: PathBuf,
    #[serde(default)]
    lowercase: bool,
    /// Stopword file; "default" selects the bundled English list. When
    /// absent, description sources use the bundled list and others none.
    #[serde(default)]
    stopwords: Option<String>,
    #[serde(default)]
    normalize: bool,
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn assemble(a: AssembleArgs) -> CliResult<()> {
    let catalog = read_class_catalog(&a.catalog)?;
    let entries: Vec<SpecEntry> = read_json(&a.config)?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let mut manifest = RunManifest::new(
        "assemble",
        serde_json::to_value(&entries).expect("specs serialize"),
        None,
    );
    manifest.inputs([a.catalog.as_path(), a.config.as_path()])?;

    let mut tables = Vec::with_capacity(entries.len());
    let mut rules = Vec::with_capacity(entries.len());
    for e in &entries {
        let path = resolve(base, &e.table);
        tables.push(read_embedding_table(&path)?);
        manifest.input(&path)?;
        let stopwords = match e.stopwords.as_deref() {
            None if e.source == Source::Description => TokenRule::english().stopwords,
            None => Default::default(),
            Some("default") => TokenRule::english().stopwords,
            Some(p) => {
                let path = resolve(base, Path::new(p));
                manifest.input(&path)?;
                read_stopwords(&path)?
            }
        };
        rules.push(TokenRule::new(e.lowercase, stopwords)?);
    }
    let specs = entries
        .iter()
        .zip(&tables)
        .zip(rules)
        .map(|((e, t), rule)| {
            Ok(AssemblySpec::new(e.name.clone(), e.source, t)?
                .with_rule(rule)
                .normalized(e.normalize))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let built = match build_class_semantic_table(&catalog, &specs) {
        Ok(b) => b,
        Err(zsl_core::Error::NoCoverage(_)) => return Err(no_coverage(&catalog, &specs)),
        Err(e) => return Err(e.into()),
    };
    for r in &built.coverage {
        log::event("coverage", r);
    }
    write_embedding_table(&built.table, &a.out)?;
    manifest.write_beside(&a.out)?;
    log::event(
        "assemble",
        json!({ "classes": built.table.len(), "dim": built.table.dim() }),
    );
    Ok(())
}

/// Lists every class that some spec cannot cover, not just the first.
fn no_coverage(catalog: &ClassCatalog, specs: &[AssemblySpec<'_>]) -> CliError {
    let mut missing = Vec::new();
    for class in catalog.classes() {
        let single = ClassCatalog::new(vec![class.clone()]).expect("single class");
        if let Err(zsl_core::Error::NoCoverage(_)) = build_class_semantic_table(&single, specs) {
            missing.push(class.class_id.clone());
        }
    }
    CliError::Core(zsl_core::Error::Invalid {
        what: "assembly",
        message: format!(
            "no in-vocabulary tokens for classes: {}",
            missing.join(", ")
        ),
    })
}

struct Loaded {
    plan: FoldPlan,
    samples: SampleSet,
    acoustic: EmbeddingTable,
    semantic: EmbeddingTable,
}

impl Loaded {
    fn read(c: &Corpus, manifest: &mut RunManifest) -> CliResult<Self> {
        let loaded = Loaded {
            plan: read_fold_plan(&c.plan)?,
            samples: read_sample_set(&c.samples)?,
            acoustic: read_embedding_table(&c.acoustic)?,
            semantic: read_embedding_table(&c.semantic)?,
        };
        manifest.inputs([
            c.plan.as_path(),
            c.samples.as_path(),
            c.acoustic.as_path(),
            c.semantic.as_path(),
        ])?;
        Ok(loaded)
    }

    /// Classes of `role` and the samples belonging to them.
    fn role(&self, role: Role) -> CliResult<(Vec<String>, SampleSet)> {
        role_samples(&self.plan, &self.samples, role)
    }
}

fn role_samples(
    plan: &FoldPlan,
    samples: &SampleSet,
    role: Role,
) -> CliResult<(Vec<String>, SampleSet)> {
    let classes = plan.classes_for(role)?;
    let set = samples.filter_classes(|c| classes.iter().any(|k| k == c));
    if set.is_empty() {
        return Err(CliError::usage(format!(
            "no samples belong to the {role} classes"
        )));
    }
    Ok((classes, set))
}

fn train(a: TrainArgs) -> CliResult<()> {
    let mut config = match &a.config {
        Some(p) => read_json::<TrainConfig>(p)?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    config.validate()?;
    let mut manifest = RunManifest::new(
        "train",
        serde_json::to_value(&config).expect("config serializes"),
        Some(config.seed),
    );
    if let Some(p) = &a.config {
        manifest.input(p)?;
    }
    let data = Loaded::read(&a.corpus, &mut manifest)?;
    let (train_classes, train_set) = data.role(Role::ZslTrain)?;
    let (validation_classes, validation_set) = data.role(Role::ZslValidation)?;
    let outcome = zsl_core::warp::train(
        &train_set,
        &validation_set,
        &data.acoustic,
        &data.semantic,
        &train_classes,
        &validation_classes,
        &config,
    )?;

    let mut log_lines = String::new();
    for run in &outcome.runs {
        if run.diverged {
            log::warn(&format!("training diverged at lambda {}", run.lambda));
        }
        let line = serde_json::to_string(&json!({ "event": "lambda", "run": run }))
            .expect("run serializes");
        eprintln!("{line}");
        log_lines.push_str(&line);
        log_lines.push('\n');
    }
    write_model(&outcome.model, &a.out)?;
    if let Some(p) = &a.log {
        write_file(p, &log_lines)?;
    }
    manifest.write_beside(&a.out)?;
    log::event(
        "train",
        json!({ "lambda": outcome.model.lambda, "notes": outcome.model.notes }),
    );
    Ok(())
}

fn predict(a: PredictArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("predict", json!({ "role": Role::ZslTest }), None);
    let data = Loaded::read(&a.corpus, &mut manifest)?;
    let model = read_model(&a.model)?;
    manifest.input(&a.model)?;
    let (candidates, test_set) = data.role(Role::ZslTest)?;
    let mut pairs = Vec::with_capacity(test_set.len());
    for s in test_set.samples() {
        let theta = data
            .acoustic
            .get(&s.sample_id)
            .ok_or_else(|| zsl_core::Error::UnknownSample(s.sample_id.clone()))?;
        pairs.push((
            s.sample_id.clone(),
            classify(&model, theta, &data.semantic, &candidates)?,
        ));
    }
    write_labeled_pairs(&pairs, &a.out)?;
    manifest.write_beside(&a.out)?;
    log::event(
        "predict",
        json!({ "samples": pairs.len(), "candidates": candidates.len() }),
    );
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> CliResult<()> {
    let plan = read_fold_plan(&a.plan)?;
    let samples = read_sample_set(&a.samples)?;
    let mut manifest = RunManifest::new("evaluate", json!({ "role": Role::ZslTest }), None);
    manifest.inputs([a.plan.as_path(), a.samples.as_path()])?;
    let (candidates, test_set) = role_samples(&plan, &samples, Role::ZslTest)?;

    let report = if let Some(pred_path) = &a.predictions {
        manifest.input(pred_path)?;
        let report = evaluate_predictions(pred_path, &test_set, &candidates)?;
        serde_json::to_value(report).expect("report serializes")
    } else {
        let (Some(model_path), Some(ac_path), Some(sem_path)) =
            (&a.model, &a.acoustic, &a.semantic)
        else {
            return Err(CliError::usage("--model needs --acoustic and --semantic"));
        };
        let model = read_model(model_path)?;
        let acoustic = read_embedding_table(ac_path)?;
        let semantic = read_embedding_table(sem_path)?;
        manifest.inputs([model_path.as_path(), ac_path.as_path(), sem_path.as_path()])?;
        let mut report: EvalReport =
            evaluate(&model, &test_set, &acoustic, &semantic, &candidates)?;
        if !a.per_sample {
            report.per_sample = None;
        }
        serde_json::to_value(report).expect("report serializes")
    };
    write_file(&a.out, &to_json(&report))?;
    manifest.write_beside(&a.out)?;
    log::event(
        "evaluate",
        json!({ "top1": report["top1"], "map": report["map"] }),
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct PredictionReport {
    n_samples: usize,
    top1: f64,
    /// Not computable from hard predictions.
    map: Option<f64>,
}

fn evaluate_predictions(
    path: &Path,
    test_set: &SampleSet,
    candidates: &[String],
) -> CliResult<PredictionReport> {
    let predicted: HashMap<String, String> = read_labeled_pairs(path)?.into_iter().collect();
    let mut preds = Vec::with_capacity(test_set.len());
    let mut truths = Vec::with_capacity(test_set.len());
    for s in test_set.samples() {
        let p = predicted
            .get(&s.sample_id)
            .ok_or_else(|| zsl_core::Error::UnknownSample(s.sample_id.clone()))?;
        if !candidates.contains(p) {
            return Err(zsl_core::Error::UnknownClass(p.clone()).into());
        }
        preds.push(p.as_str());
        truths.push(s.class_id.as_str());
    }
    Ok(PredictionReport {
        n_samples: preds.len(),
        top1: top1(&preds, &truths)?,
        map: None,
    })
}

fn cmd_mcnemar(a: McnemarArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("mcnemar", json!({}), None);
    let table = if let Some(c) = &a.cells {
        ContingencyTable {
            both_correct: c[0],
            a_only: c[1],
            b_only: c[2],
            both_wrong: c[3],
        }
    } else {
        let (Some(pa), Some(pb), Some(pt)) = (&a.a, &a.b, &a.truths) else {
            return Err(CliError::usage(
                "give --cells or all of --a, --b and --truths",
            ));
        };
        manifest.inputs([pa.as_path(), pb.as_path(), pt.as_path()])?;
        let truths = read_sample_set(pt)?;
        let preds_a = aligned(pa, &truths)?;
        let preds_b = aligned(pb, &truths)?;
        let classes: Vec<&str> = truths
            .samples()
            .iter()
            .map(|s| s.class_id.as_str())
            .collect();
        build_contingency(&preds_a, &preds_b, &classes)?
    };
    manifest.config = json!({ "cells": table });
    let result = mcnemar(&table)?;
    let text = to_json(
        &json!({ "table": table, "statistic": result.statistic, "p_value": result.p_value }),
    );
    match &a.out {
        Some(out) => {
            write_file(out, &text)?;
            manifest.write_beside(out)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// Predictions from `path` in the order of `truths`.
fn aligned(path: &Path, truths: &SampleSet) -> CliResult<Vec<String>> {
    let map: HashMap<String, String> = read_labeled_pairs(path)?.into_iter().collect();
    truths
        .samples()
        .iter()
        .map(|s| {
            map.get(&s.sample_id)
                .cloned()
                .ok_or_else(|| zsl_core::Error::UnknownSample(s.sample_id.clone()).into())
        })
        .collect()
}

fn config_init(out: Option<PathBuf>) -> CliResult<()> {
    let text = to_json(&TrainConfig::default());
    match out {
        Some(p) => write_file(&p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
