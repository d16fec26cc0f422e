//! Weighted approximate-rank pairwise (WARP) loss for the bilinear model.
//!
//! For a training pair `(x, y)` with score `F(x, c) = θ(x)ᵀ W φ(c)`:
//!
//! ```text
//! hinge(c)  = Δ(y, c) + F(x, c) − F(x, y)          Δ = 1 for c ≠ y, 0 otherwise
//! rank r    = |{c ≠ y : hinge(c) > 0}|
//! loss(x)   = β(r)/r · Σ_c max(0, hinge(c))         β(r) = Σ_{i≤r} 1/i, 0/0 := 0
//! objective = mean_x loss(x) + λ‖W‖²_F
//! ```
//!
//! Training is plain per-sample SGD on this objective with the rank weight
//! `β(r)/r` held constant inside each step, repeated over a grid of
//! regularization strengths and selected by validation Top-1.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compat::{rank_order, resolve_candidates};
use crate::corpus::{CompatibilityModel, EmbeddingTable, SampleSet};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// Rank penalty `β(r) = Σ_{i=1}^{r} 1/i`, with `β(0) = 0`.
pub fn beta(rank: usize) -> f64 {
    (1..=rank).map(|i| 1.0 / i as f64).sum()
}

/// Per-violation weight `β(r)/r`, taking `0/0 = 0`.
pub fn rank_weight(rank: usize) -> f64 {
    if rank == 0 {
        0.0
    } else {
        beta(rank) / rank as f64
    }
}

/// A training instance: its acoustic embedding and true class.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub acoustic: &'a [f64],
    pub class_id: &'a str,
}

impl<'a> Sample<'a> {
    pub fn new(acoustic: &'a [f64], class_id: &'a str) -> Self {
        Sample { acoustic, class_id }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    /// Count every incorrect class.
    #[default]
    Exact,
    /// Estimate the rank from the number of uniform draws needed to find
    /// one violating class.
    Sampled,
}

/// How `rank_of` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankRule {
    pub mode: RankMode,
    /// Exact mode only: count margin violations (`hinge > 0`) when true,
    /// or classes scored strictly above the true class when false.
    pub margin: bool,
    /// Sampled mode: maximum number of draws.
    pub sample_cap: usize,
}

impl Default for RankRule {
    fn default() -> Self {
        RankRule {
            mode: RankMode::Exact,
            margin: true,
            sample_cap: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankResult {
    pub rank: usize,
    /// Incorrect classes with a positive hinge, in training-class order.
    /// Sampled mode reports at most the one violator it found.
    pub violators: Vec<String>,
    /// True when `rank` is a sampled estimate.
    pub estimated: bool,
}

impl RankResult {
    /// Weight multiplying each violator's gradient. Exact ranks use
    /// `β(r)/r` over all violators; a sampled violator stands in for all
    /// `r` of them and gets `β(r)`.
    pub fn weight(&self) -> f64 {
        if self.estimated {
            beta(self.rank)
        } else {
            rank_weight(self.rank)
        }
    }
}

/// Training classes resolved against a semantic table.
struct ClassSpace<'a> {
    ids: Vec<&'a str>,
    vectors: Vec<&'a [f64]>,
    position: HashMap<&'a str, usize>,
}

impl<'a> ClassSpace<'a> {
    fn new<S: AsRef<str>>(table: &'a EmbeddingTable, classes: &[S]) -> Result<Self> {
        let mut space = ClassSpace {
            ids: Vec::with_capacity(classes.len()),
            vectors: Vec::with_capacity(classes.len()),
            position: HashMap::with_capacity(classes.len()),
        };
        for c in classes {
            let c = c.as_ref();
            let idx = table
                .index_of(c)
                .ok_or_else(|| Error::UnknownClass(c.to_string()))?;
            let (id, v) = table.get_index(idx).expect("index from table");
            if space.position.insert(id, space.ids.len()).is_none() {
                space.ids.push(id);
                space.vectors.push(v);
            }
        }
        if space.ids.is_empty() {
            return Err(Error::Empty("training class set"));
        }
        Ok(space)
    }

    fn locate(&self, class_id: &str) -> Result<usize> {
        self.position
            .get(class_id)
            .copied()
            .ok_or_else(|| Error::UnknownClass(class_id.to_string()))
    }
}

fn check_dims(model: &CompatibilityModel, acoustic: &[f64], table: &EmbeddingTable) -> Result<()> {
    if acoustic.len() != model.acoustic_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.acoustic_dim(),
            found: acoustic.len(),
        });
    }
    if acoustic.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("acoustic embedding"));
    }
    if table.dim() != model.semantic_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.semantic_dim(),
            found: table.dim(),
        });
    }
    Ok(())
}

/// `Δ(y_n, y) + F(x, y) − F(x, y_n)`; may be negative.
pub fn hinge(
    model: &CompatibilityModel,
    sample: Sample<'_>,
    y: &str,
    semantic_table: &EmbeddingTable,
) -> Result<f64> {
    check_dims(model, sample.acoustic, semantic_table)?;
    let target = semantic_table
        .get(sample.class_id)
        .ok_or_else(|| Error::UnknownClass(sample.class_id.to_string()))?;
    let other = semantic_table
        .get(y)
        .ok_or_else(|| Error::UnknownClass(y.to_string()))?;
    let projected = model.weights().transpose_mul_vec(sample.acoustic);
    let delta = if y == sample.class_id { 0.0 } else { 1.0 };
    Ok(delta + dot(&projected, other) - dot(&projected, target))
}

/// Scores of every class in `space` for one acoustic vector.
fn class_scores(weights: &Matrix, acoustic: &[f64], space: &ClassSpace<'_>) -> Vec<f64> {
    let projected = weights.transpose_mul_vec(acoustic);
    space
        .vectors
        .iter()
        .map(|phi| dot(&projected, phi))
        .collect()
}

/// Hinge of every class against `target` given precomputed scores.
fn hinges(scores: &[f64], target: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    let own = scores[target];
    scores
        .iter()
        .enumerate()
        .filter(move |(c, _)| *c != target)
        .map(move |(c, s)| (c, 1.0 + s - own))
}

/// Exact rank and violator positions.
fn exact_rank(scores: &[f64], target: usize, margin: bool) -> (usize, Vec<usize>) {
    let violators: Vec<usize> = hinges(scores, target)
        .filter(|(_, h)| *h > 0.0)
        .map(|(c, _)| c)
        .collect();
    let rank = if margin {
        violators.len()
    } else {
        let own = scores[target];
        scores
            .iter()
            .enumerate()
            .filter(|(c, s)| *c != target && **s > own)
            .count()
    };
    (rank, violators)
}

fn sampled_rank<R: Rng + ?Sized>(
    scores: &[f64],
    target: usize,
    cap: usize,
    rng: &mut R,
) -> (usize, Vec<usize>) {
    let mut others: Vec<usize> = (0..scores.len()).filter(|&c| c != target).collect();
    let own = scores[target];
    let limit = cap.min(others.len());
    // Partial Fisher-Yates: draw without replacement, stop at a violator.
    for draws in 1..=limit {
        let pick = rng.random_range(draws - 1..others.len());
        others.swap(draws - 1, pick);
        let c = others[draws - 1];
        if 1.0 + scores[c] - own > 0.0 {
            return ((scores.len() - 1) / draws, vec![c]);
        }
    }
    (0, Vec::new())
}

fn rank_positions<R: Rng + ?Sized>(
    scores: &[f64],
    target: usize,
    rule: &RankRule,
    rng: &mut R,
) -> (usize, Vec<usize>, bool) {
    match rule.mode {
        RankMode::Exact => {
            let (r, v) = exact_rank(scores, target, rule.margin);
            (r, v, false)
        }
        RankMode::Sampled => {
            let (r, v) = sampled_rank(scores, target, rule.sample_cap.max(1), rng);
            (r, v, true)
        }
    }
}

/// Rank of the true class among `train_classes` under `rule`.
pub fn rank_of<S: AsRef<str>, R: Rng + ?Sized>(
    model: &CompatibilityModel,
    sample: Sample<'_>,
    semantic_table: &EmbeddingTable,
    train_classes: &[S],
    rule: &RankRule,
    rng: &mut R,
) -> Result<RankResult> {
    check_dims(model, sample.acoustic, semantic_table)?;
    let space = ClassSpace::new(semantic_table, train_classes)?;
    let target = space.locate(sample.class_id)?;
    let scores = class_scores(model.weights(), sample.acoustic, &space);
    let (rank, violators, estimated) = rank_positions(&scores, target, rule, rng);
    Ok(RankResult {
        rank,
        violators: violators
            .into_iter()
            .map(|c| space.ids[c].to_string())
            .collect(),
        estimated,
    })
}

/// Unregularized WARP loss of one sample from its class scores.
fn sample_loss(scores: &[f64], target: usize, margin: bool) -> f64 {
    let (rank, _) = exact_rank(scores, target, margin);
    let weight = rank_weight(rank);
    if weight == 0.0 {
        return 0.0;
    }
    let total: f64 = hinges(scores, target).map(|(_, h)| h.max(0.0)).sum();
    weight * total
}

/// Samples paired with their acoustic vectors and class positions.
fn resolve_samples<'a>(
    set: &'a SampleSet,
    acoustic: &'a EmbeddingTable,
    space: &ClassSpace<'_>,
) -> Result<Vec<(&'a [f64], usize)>> {
    set.samples()
        .iter()
        .map(|s| {
            let v = acoustic
                .get(&s.sample_id)
                .ok_or_else(|| Error::UnknownSample(s.sample_id.clone()))?;
            Ok((v, space.locate(&s.class_id)?))
        })
        .collect()
}

/// Mean WARP loss over `train_set` plus `λ‖W‖²`, with exact margin ranks.
pub fn objective<S: AsRef<str>>(
    model: &CompatibilityModel,
    train_set: &SampleSet,
    acoustic_table: &EmbeddingTable,
    semantic_table: &EmbeddingTable,
    train_classes: &[S],
    lambda: f64,
) -> Result<f64> {
    objective_with(
        model,
        train_set,
        acoustic_table,
        semantic_table,
        train_classes,
        lambda,
        true,
    )
}

/// [`objective`] with a choice of rank convention (`margin = false` counts
/// classes scored strictly above the true one).
pub fn objective_with<S: AsRef<str>>(
    model: &CompatibilityModel,
    train_set: &SampleSet,
    acoustic_table: &EmbeddingTable,
    semantic_table: &EmbeddingTable,
    train_classes: &[S],
    lambda: f64,
    margin: bool,
) -> Result<f64> {
    if train_set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    check_lambda(lambda)?;
    if acoustic_table.dim() != model.acoustic_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.acoustic_dim(),
            found: acoustic_table.dim(),
        });
    }
    check_dims(model, &vec![0.0; model.acoustic_dim()], semantic_table)?;
    let space = ClassSpace::new(semantic_table, train_classes)?;
    let samples = resolve_samples(train_set, acoustic_table, &space)?;
    Ok(data_term(model.weights(), &samples, &space, margin)
        + lambda * model.weights().frobenius_sq())
}

fn data_term(
    weights: &Matrix,
    samples: &[(&[f64], usize)],
    space: &ClassSpace<'_>,
    margin: bool,
) -> f64 {
    let total: f64 = samples
        .iter()
        .map(|(theta, target)| sample_loss(&class_scores(weights, theta, space), *target, margin))
        .sum();
    total / samples.len() as f64
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "lambda",
            format!("must be a nonnegative number, got {lambda}"),
        ))
    }
}

/// Accumulates `Σ_v (φ_v − φ_target)` over violator positions.
fn violation_direction(
    space: &ClassSpace<'_>,
    target: usize,
    violators: &[usize],
    dim: usize,
) -> Vec<f64> {
    let mut g = vec![0.0; dim];
    let own = space.vectors[target];
    for &v in violators {
        for ((gi, a), b) in g.iter_mut().zip(space.vectors[v]).zip(own) {
            *gi += a - b;
        }
    }
    g
}

/// Subgradient of one sample's objective term with respect to `W`:
/// `β(r)/r · Σ_{violators} θ (φ_y − φ_{y_n})ᵀ + 2λW`.
pub fn subgradient<S: AsRef<str>>(
    model: &CompatibilityModel,
    sample: Sample<'_>,
    semantic_table: &EmbeddingTable,
    train_classes: &[S],
    lambda: f64,
) -> Result<Matrix> {
    check_lambda(lambda)?;
    check_dims(model, sample.acoustic, semantic_table)?;
    let space = ClassSpace::new(semantic_table, train_classes)?;
    let target = space.locate(sample.class_id)?;
    let scores = class_scores(model.weights(), sample.acoustic, &space);
    let (rank, violators) = exact_rank(&scores, target, true);
    let mut grad = Matrix::zeros(model.acoustic_dim(), model.semantic_dim());
    let weight = rank_weight(rank);
    if weight > 0.0 {
        let g = violation_direction(&space, target, &violators, model.semantic_dim());
        grad.add_outer(weight, sample.acoustic, &g);
    }
    if lambda > 0.0 {
        grad.add_scaled(2.0 * lambda, model.weights());
    }
    Ok(grad)
}

/// Gradient of the full [`objective`]: the mean of per-sample subgradients.
pub fn batch_subgradient<S: AsRef<str>>(
    model: &CompatibilityModel,
    train_set: &SampleSet,
    acoustic_table: &EmbeddingTable,
    semantic_table: &EmbeddingTable,
    train_classes: &[S],
    lambda: f64,
) -> Result<Matrix> {
    if train_set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let mut total = Matrix::zeros(model.acoustic_dim(), model.semantic_dim());
    for s in train_set.samples() {
        let theta = acoustic_table
            .get(&s.sample_id)
            .ok_or_else(|| Error::UnknownSample(s.sample_id.clone()))?;
        let g = subgradient(
            model,
            Sample::new(theta, &s.class_id),
            semantic_table,
            train_classes,
            lambda,
        )?;
        total.add_scaled(1.0, &g);
    }
    total.scale(1.0 / train_set.len() as f64);
    Ok(total)
}

fn default_lambda_grid() -> Vec<f64> {
    vec![0.0, 0.01, 1.0, 10.0]
}

fn default_learning_rate() -> f64 {
    0.01
}

fn default_epochs() -> usize {
    50
}

fn default_sample_cap() -> usize {
    100
}

fn default_init_scale() -> f64 {
    0.001
}

fn default_patience() -> usize {
    10
}

fn default_true() -> bool {
    true
}

/// SGD settings. Every field has a default, so `{}` is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: Vec<f64>,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rank_mode: RankMode,
    #[serde(default = "default_sample_cap")]
    pub sample_cap: usize,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    #[serde(default = "default_patience")]
    pub early_stop_patience: usize,
    /// Count margin violations (true) or strictly higher scores (false) as
    /// the rank in exact mode.
    #[serde(default = "default_true")]
    pub margin_rank: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda_grid: default_lambda_grid(),
            learning_rate: default_learning_rate(),
            epochs: default_epochs(),
            seed: 0,
            rank_mode: RankMode::Exact,
            sample_cap: default_sample_cap(),
            init_scale: default_init_scale(),
            early_stop_patience: default_patience(),
            margin_rank: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid("train config", m));
        if self.lambda_grid.is_empty() {
            return bad("lambda_grid is empty".into());
        }
        if let Some(l) = self
            .lambda_grid
            .iter()
            .find(|l| !(l.is_finite() && **l >= 0.0))
        {
            return bad(format!("lambda {l} is not a nonnegative number"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if self.sample_cap == 0 {
            return bad("sample_cap must be positive".into());
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return bad(format!(
                "init_scale must be nonnegative, got {}",
                self.init_scale
            ));
        }
        if self.early_stop_patience == 0 {
            return bad("early_stop_patience must be positive".into());
        }
        Ok(())
    }

    fn rank_rule(&self) -> RankRule {
        RankRule {
            mode: self.rank_mode,
            margin: self.margin_rank,
            sample_cap: self.sample_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_objective: f64,
    pub validation_top1: f64,
}

/// Training history for one grid value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaRun {
    pub lambda: f64,
    /// Epoch (1-based) whose weights were kept, 0 if none finished.
    pub best_epoch: usize,
    pub best_validation_top1: f64,
    pub initial_objective: f64,
    pub diverged: bool,
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: CompatibilityModel,
    pub runs: Vec<LambdaRun>,
}

struct Prepared<'a> {
    train_space: ClassSpace<'a>,
    train: Vec<(&'a [f64], usize)>,
    validation: Vec<(&'a [f64], usize)>,
    /// Semantic-table positions of the validation classes.
    validation_candidates: Vec<usize>,
    semantic: &'a EmbeddingTable,
}

impl Prepared<'_> {
    fn validation_top1(&self, weights: &Matrix) -> f64 {
        let correct = self
            .validation
            .iter()
            .filter(|(theta, truth)| {
                let projected = weights.transpose_mul_vec(theta);
                let best = self
                    .validation_candidates
                    .iter()
                    .map(|&i| {
                        (
                            i,
                            dot(&projected, self.semantic.get_index(i).expect("candidate").1),
                        )
                    })
                    .min_by(rank_order)
                    .expect("nonempty candidates");
                best.0 == *truth
            })
            .count();
        correct as f64 / self.validation.len() as f64
    }
}

/// Trains one model per value of `config.lambda_grid` and returns the one
/// with the best validation Top-1 (ties go to the smaller λ, then to the
/// earlier grid entry).
///
/// Each run starts from the same seeded uniform initialization and sees
/// the same seeded sample orders, so the whole procedure is a pure
/// function of its inputs.
#[allow(clippy::too_many_arguments)]
pub fn train<S: AsRef<str>, T: AsRef<str>>(
    train_set: &SampleSet,
    validation_set: &SampleSet,
    acoustic_table: &EmbeddingTable,
    semantic_table: &EmbeddingTable,
    train_classes: &[S],
    validation_classes: &[T],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if validation_set.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let train_space = ClassSpace::new(semantic_table, train_classes)?;
    let train = resolve_samples(train_set, acoustic_table, &train_space)?;
    let validation_candidates = resolve_candidates(semantic_table, validation_classes)?;
    let validation = validation_set
        .samples()
        .iter()
        .map(|s| {
            let theta = acoustic_table
                .get(&s.sample_id)
                .ok_or_else(|| Error::UnknownSample(s.sample_id.clone()))?;
            let pos = semantic_table
                .index_of(&s.class_id)
                .filter(|i| validation_candidates.contains(i))
                .ok_or_else(|| Error::UnknownClass(s.class_id.clone()))?;
            Ok((theta, pos))
        })
        .collect::<Result<Vec<_>>>()?;
    let prepared = Prepared {
        train_space,
        train,
        validation,
        validation_candidates,
        semantic: semantic_table,
    };
    let (d_a, d_s) = (acoustic_table.dim(), semantic_table.dim());

    let mut runs = Vec::with_capacity(config.lambda_grid.len());
    let mut best: Option<(f64, f64, Matrix, usize)> = None; // (top1, lambda, W, run index)
    for (run_idx, &lambda) in config.lambda_grid.iter().enumerate() {
        let (run, weights) = train_one(&prepared, d_a, d_s, lambda, config);
        let better = match &best {
            None => weights.is_some(),
            Some((top1, best_lambda, _, _)) => {
                weights.is_some()
                    && (run.best_validation_top1 > *top1
                        || (run.best_validation_top1 == *top1 && lambda < *best_lambda))
            }
        };
        if better {
            best = Some((
                run.best_validation_top1,
                lambda,
                weights.expect("checked"),
                run_idx,
            ));
        }
        runs.push(run);
    }
    let (top1, lambda, weights, run_idx) = best.ok_or_else(|| {
        Error::invalid("training", "every run diverged before completing an epoch")
    })?;
    let notes = format!(
        "warp-sgd lambda={lambda} best_epoch={} validation_top1={top1} lr={} rank_mode={:?} margin_rank={}",
        runs[run_idx].best_epoch, config.learning_rate, config.rank_mode, config.margin_rank
    );
    let model = CompatibilityModel::new(weights, lambda, config.seed)?.with_notes(notes);
    Ok(TrainOutcome { model, runs })
}

fn init_weights(d_a: usize, d_s: usize, scale: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let mut w = Matrix::zeros(d_a, d_s);
    if scale > 0.0 {
        for x in w.as_mut_slice() {
            *x = rng.random_range(-scale..=scale);
        }
    }
    w
}

fn train_one(
    data: &Prepared<'_>,
    d_a: usize,
    d_s: usize,
    lambda: f64,
    config: &TrainConfig,
) -> (LambdaRun, Option<Matrix>) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut weights = init_weights(d_a, d_s, config.init_scale, &mut rng);
    let rule = config.rank_rule();
    let objective_of = |w: &Matrix| {
        data_term(w, &data.train, &data.train_space, config.margin_rank) + lambda * w.frobenius_sq()
    };

    let mut run = LambdaRun {
        lambda,
        best_epoch: 0,
        best_validation_top1: f64::NEG_INFINITY,
        initial_objective: objective_of(&weights),
        diverged: false,
        epochs: Vec::new(),
    };
    let mut best_weights = None;
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let decay = 1.0 - 2.0 * lambda * config.learning_rate;
    let mut stale = 0;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (theta, target) = data.train[i];
            let scores = class_scores(&weights, theta, &data.train_space);
            let (rank, violators, estimated) = rank_positions(&scores, target, &rule, &mut rng);
            let weight = RankResult {
                rank,
                violators: Vec::new(),
                estimated,
            }
            .weight();
            // W ← W − lr·(weight·θ gᵀ + 2λW)
            if lambda > 0.0 {
                weights.scale(decay);
            }
            if weight > 0.0 {
                let g = violation_direction(&data.train_space, target, &violators, d_s);
                weights.add_outer(-config.learning_rate * weight, theta, &g);
            }
        }
        if !weights.is_finite() {
            run.diverged = true;
            break;
        }
        let top1 = data.validation_top1(&weights);
        run.epochs.push(EpochRecord {
            epoch,
            train_objective: objective_of(&weights),
            validation_top1: top1,
        });
        if top1 > run.best_validation_top1 {
            run.best_validation_top1 = top1;
            run.best_epoch = epoch;
            best_weights = Some(weights.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.early_stop_patience {
                break;
            }
        }
    }
    (run, best_weights)
}
