//! Class-fold generation: category folds, random folds, folds stratified
//! by per-class sample count, and undersampling of populous classes.

use std::collections::{BTreeMap, HashMap};

use indexmap::IndexMap;
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClassCatalog, FoldPlan, Role, SampleSet};
use crate::error::{Error, Result};

/// Name of the `i`-th generated fold.
pub fn fold_name(i: usize) -> String {
    format!("Fold{i}")
}

/// One fold per category, in order of first appearance in the catalog.
pub fn category_folds(
    catalog: &ClassCatalog,
    category_map: &HashMap<String, String>,
) -> Result<FoldPlan> {
    if let Some(extra) = category_map.keys().find(|c| !catalog.contains(c)) {
        return Err(Error::UnknownClass(extra.clone()));
    }
    let mut folds: IndexMap<String, Vec<String>> = IndexMap::new();
    for class in catalog.ids() {
        let category = category_map.get(class).ok_or_else(|| {
            Error::invalid("category map", format!("class `{class}` has no category"))
        })?;
        folds
            .entry(category.clone())
            .or_default()
            .push(class.to_string());
    }
    FoldPlan::from_folds(folds)
}

/// Seeded shuffle of the catalog followed by round-robin assignment to `k`
/// folds named `Fold0..`.
pub fn random_folds(catalog: &ClassCatalog, k: usize, seed: u64) -> Result<FoldPlan> {
    if k == 0 || k > catalog.len() {
        return Err(Error::invalid(
            "fold count",
            format!(
                "k must be between 1 and the class count {}, got {k}",
                catalog.len()
            ),
        ));
    }
    let mut classes: Vec<&str> = catalog.ids().collect();
    classes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds: IndexMap<String, Vec<String>> =
        (0..k).map(|i| (fold_name(i), Vec::new())).collect();
    for (i, class) in classes.into_iter().enumerate() {
        folds[i % k].push(class.to_string());
    }
    FoldPlan::from_folds(folds)
}

/// Caps every class with more than `threshold` samples at `cap` samples by
/// seeded sampling without replacement. Survivors keep their order;
/// classes at or below the threshold are untouched.
pub fn undersample(
    samples: &SampleSet,
    cap: usize,
    threshold: usize,
    seed: u64,
) -> Result<SampleSet> {
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.samples().iter().enumerate() {
        by_class.entry(&s.class_id).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![true; samples.len()];
    for positions in by_class.values() {
        if positions.len() <= threshold || positions.len() <= cap {
            continue;
        }
        let chosen = index::sample(&mut rng, positions.len(), cap);
        let mut selected = vec![false; positions.len()];
        for j in chosen.iter() {
            selected[j] = true;
        }
        for (j, &pos) in positions.iter().enumerate() {
            keep[pos] = selected[j];
        }
    }
    let kept = samples
        .samples()
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(s, _)| s.clone())
        .collect();
    SampleSet::new(kept, samples.binding())
}

/// Sample-count bins as right-open intervals `[edges[i], edges[i+1])`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct BinSpec {
    edges: Vec<usize>,
}

impl BinSpec {
    pub fn new(edges: Vec<usize>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::invalid(
                "bin spec",
                "at least two edges are required",
            ));
        }
        if edges[0] < 1 {
            return Err(Error::invalid(
                "bin spec",
                "the lowest edge must be at least 1",
            ));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "bin spec",
                "edges must be strictly increasing",
            ));
        }
        Ok(BinSpec { edges })
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn bin_count(&self) -> usize {
        self.edges.len() - 1
    }

    /// Bin index of a class with `count` samples. Counts below the first
    /// edge fall in the first bin and counts at or above the last edge in
    /// the last bin.
    pub fn bin_of(&self, count: usize) -> usize {
        let above = self.edges[1..self.edges.len() - 1].partition_point(|&e| e <= count);
        above.min(self.bin_count() - 1)
    }
}

impl Default for BinSpec {
    /// Nine roughly logarithmic bins spanning 50 to 1500 samples.
    fn default() -> Self {
        BinSpec {
            edges: vec![50, 75, 110, 170, 250, 380, 560, 850, 1280, 1501],
        }
    }
}

impl TryFrom<Vec<usize>> for BinSpec {
    type Error = Error;

    fn try_from(edges: Vec<usize>) -> Result<Self> {
        BinSpec::new(edges)
    }
}

impl From<BinSpec> for Vec<usize> {
    fn from(b: BinSpec) -> Self {
        b.edges
    }
}

/// Splits `items` into `k` consecutive groups whose sizes differ by at most
/// one, larger groups first.
fn split_even<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    let (q, r) = (items.len() / k, items.len() % k);
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for g in 0..k {
        let len = q + usize::from(g < r);
        out.push(items[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Folds stratified by per-class sample count.
///
/// Classes are binned by sample count; each bin is shuffled and split into
/// `k` groups differing in size by at most one; fold `i` is the union of
/// one group from every bin. Groups are dealt to folds in a seeded random
/// order, with larger groups going to the folds that are currently
/// smallest, so overall fold sizes also differ by at most one.
pub fn bin_stratified_folds(
    samples: &SampleSet,
    catalog: &ClassCatalog,
    bins: &BinSpec,
    k: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid(
            "fold count",
            format!("k must be at least 2, got {k}"),
        ));
    }
    samples.check_catalog(catalog)?;
    let counts = samples.class_counts();
    let mut binned: Vec<Vec<&str>> = vec![Vec::new(); bins.bin_count()];
    for class in catalog.ids() {
        let n = counts.get(class).copied().unwrap_or(0);
        if n == 0 {
            return Err(Error::invalid(
                "sample census",
                format!("class `{class}` has no samples"),
            ));
        }
        binned[bins.bin_of(n)].push(class);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds: Vec<Vec<String>> = vec![Vec::new(); k];
    for mut members in binned {
        members.shuffle(&mut rng);
        let groups = split_even(&members, k);
        let mut targets: Vec<usize> = (0..k).collect();
        targets.shuffle(&mut rng);
        targets.sort_by_key(|&f| folds[f].len());
        for (group, &fold) in groups.into_iter().zip(&targets) {
            folds[fold].extend(group.into_iter().map(str::to_string));
        }
    }
    FoldPlan::from_folds(
        folds
            .into_iter()
            .enumerate()
            .map(|(i, f)| (fold_name(i), f))
            .collect(),
    )
}

/// Role assignments for the two five-fold data settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataSetting {
    /// Embedding network trained on Fold0 and Fold1, which the zero-shot
    /// stage never sees.
    S1,
    /// Embedding network trained on Fold2 and Fold3, the zero-shot training
    /// and validation folds.
    S2,
}

pub fn make_data_setting(plan: &FoldPlan, setting: DataSetting) -> Result<FoldPlan> {
    for i in 0..5 {
        let name = fold_name(i);
        if plan.fold(&name).is_none() {
            return Err(Error::invalid(
                "fold plan",
                format!("missing fold `{name}`"),
            ));
        }
    }
    let names = |ids: &[usize]| ids.iter().map(|&i| fold_name(i)).collect::<Vec<_>>();
    let model_train = match setting {
        DataSetting::S1 => names(&[0, 1]),
        DataSetting::S2 => names(&[2, 3]),
    };
    let roles = BTreeMap::from([
        (Role::ModelTrain, model_train),
        (Role::ZslTrain, names(&[2])),
        (Role::ZslValidation, names(&[3])),
        (Role::ZslTest, names(&[4])),
    ]);
    plan.with_roles(roles)
}
