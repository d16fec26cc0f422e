//! Single-label evaluation: Top-1, mean average precision, analytic
//! random-guess baselines and McNemar's test between two classifiers.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::compat::{resolve_candidates, score_resolved, ScoredClassList};
use crate::corpus::{CompatibilityModel, EmbeddingTable, SampleSet};
use crate::error::{Error, Result};

/// Fraction of predictions equal to the truth.
pub fn top1<S: AsRef<str>, T: AsRef<str>>(predictions: &[S], truths: &[T]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            found: predictions.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::Empty("prediction list"));
    }
    let correct = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| p.as_ref() == t.as_ref())
        .count();
    Ok(correct as f64 / truths.len() as f64)
}

/// Average precision with a single relevant class: the reciprocal of its
/// 1-based position in the ranking.
pub fn average_precision(ranked: &ScoredClassList, truth: &str) -> Result<f64> {
    let pos = ranked
        .position(truth)
        .ok_or_else(|| Error::UnknownClass(truth.to_string()))?;
    Ok(1.0 / pos as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub sample_id: String,
    pub predicted: String,
    /// 1-based position of the true class.
    pub truth_rank: usize,
    pub average_precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_samples: usize,
    pub top1: f64,
    pub map: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_sample: Option<Vec<SampleOutcome>>,
}

/// Ranks `candidates` for every test sample and aggregates Top-1 and mAP.
pub fn evaluate<S: AsRef<str>>(
    model: &CompatibilityModel,
    test_set: &SampleSet,
    acoustic_table: &EmbeddingTable,
    semantic_table: &EmbeddingTable,
    candidates: &[S],
) -> Result<EvalReport> {
    if test_set.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let resolved = resolve_candidates(semantic_table, candidates)?;
    let mut per_sample = Vec::with_capacity(test_set.len());
    for s in test_set.samples() {
        let theta = acoustic_table
            .get(&s.sample_id)
            .ok_or_else(|| Error::UnknownSample(s.sample_id.clone()))?;
        let truth = semantic_table
            .index_of(&s.class_id)
            .filter(|i| resolved.contains(i))
            .ok_or_else(|| Error::UnknownClass(s.class_id.clone()))?;
        let scored = score_resolved(model, theta, semantic_table, &resolved)?;
        let rank = scored
            .iter()
            .position(|(i, _)| *i == truth)
            .expect("truth among candidates")
            + 1;
        per_sample.push(SampleOutcome {
            sample_id: s.sample_id.clone(),
            predicted: semantic_table
                .get_index(scored[0].0)
                .expect("candidate")
                .0
                .to_string(),
            truth_rank: rank,
            average_precision: 1.0 / rank as f64,
        });
    }
    let n = per_sample.len();
    let correct = per_sample.iter().filter(|o| o.truth_rank == 1).count();
    let map = per_sample.iter().map(|o| o.average_precision).sum::<f64>() / n as f64;
    Ok(EvalReport {
        n_samples: n,
        top1: correct as f64 / n as f64,
        map,
        per_sample: Some(per_sample),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Baseline {
    pub map: f64,
    pub top1: f64,
}

/// Expected mAP and Top-1 of a uniformly random ranking of `k` classes:
/// `H_k / k` and `1 / k`.
pub fn random_baseline(k: usize) -> Result<Baseline> {
    if k == 0 {
        return Err(Error::invalid("class count", "k must be at least 1"));
    }
    let harmonic: f64 = (1..=k).map(|i| 1.0 / i as f64).sum();
    Ok(Baseline {
        map: harmonic / k as f64,
        top1: 1.0 / k as f64,
    })
}

/// Paired outcomes of classifiers A and B on the same samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub both_correct: u64,
    pub a_only: u64,
    pub b_only: u64,
    pub both_wrong: u64,
}

impl ContingencyTable {
    pub fn total(&self) -> u64 {
        self.both_correct + self.a_only + self.b_only + self.both_wrong
    }
}

pub fn build_contingency<A, B, T>(
    preds_a: &[A],
    preds_b: &[B],
    truths: &[T],
) -> Result<ContingencyTable>
where
    A: AsRef<str>,
    B: AsRef<str>,
    T: AsRef<str>,
{
    for len in [preds_a.len(), preds_b.len()] {
        if len != truths.len() {
            return Err(Error::DimensionMismatch {
                expected: truths.len(),
                found: len,
            });
        }
    }
    let mut table = ContingencyTable::default();
    for ((a, b), t) in preds_a.iter().zip(preds_b).zip(truths) {
        let t = t.as_ref();
        match (a.as_ref() == t, b.as_ref() == t) {
            (true, true) => table.both_correct += 1,
            (true, false) => table.a_only += 1,
            (false, true) => table.b_only += 1,
            (false, false) => table.both_wrong += 1,
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// McNemar's test with Edwards' continuity correction:
/// `χ² = max(0, |a_only − b_only| − 1)² / (a_only + b_only)` against a
/// chi-squared distribution with one degree of freedom.
///
/// The upper tail is `erfc(√(χ²/2))`; statrs' `erfc` agrees with reference
/// values to about 1e-10 relative for `χ² ≤ 200`, i.e. nine or more
/// significant digits.
pub fn mcnemar(table: &ContingencyTable) -> Result<McNemarResult> {
    let discordant = table.a_only + table.b_only;
    if discordant == 0 {
        return Err(Error::NoDiscordantPairs);
    }
    let diff = (table.a_only.abs_diff(table.b_only) as f64 - 1.0).max(0.0);
    let statistic = diff * diff / discordant as f64;
    Ok(McNemarResult {
        statistic,
        p_value: chi2_1_upper_tail(statistic),
    })
}

/// Survival function of the chi-squared distribution with 1 dof.
pub fn chi2_1_upper_tail(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    erfc((x / 2.0).sqrt())
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::corpus::{EmbeddingKind, SampleRecord};
    use crate::linalg::Matrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn top1_examples() {
        assert!((top1(&["A", "B", "A"], &["A", "B", "B"]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(top1(&["A"], &["A"]).unwrap(), 1.0);
        assert_eq!(top1(&["A", "A"], &["B", "C"]).unwrap(), 0.0);
        assert!(top1(&["A"], &["A", "B"]).is_err());
        assert!(top1::<&str, &str>(&[], &[]).is_err());
    }

    fn ranked(scores: &[(&str, f64)]) -> ScoredClassList {
        let table = EmbeddingTable::from_entries(
            1,
            EmbeddingKind::Semantic,
            scores.iter().map(|(c, s)| (*c, vec![*s])),
        )
        .unwrap();
        let m = CompatibilityModel::new(Matrix::identity(1), 0.0, 0).unwrap();
        let ids: Vec<&str> = scores.iter().map(|(c, _)| *c).collect();
        crate::compat::score_classes(&m, &[1.0], &table, &ids).unwrap()
    }

    #[test]
    fn ap_examples() {
        let r = ranked(&[("A", 0.2), ("B", 0.9), ("C", 0.5)]);
        assert_eq!(average_precision(&r, "B").unwrap(), 1.0);
        assert_eq!(average_precision(&r, "C").unwrap(), 0.5);
        assert!(average_precision(&r, "Z").is_err());
        let ten: Vec<(String, f64)> = (0..10)
            .map(|i| (format!("c{i}"), 10.0 - i as f64))
            .collect();
        let ten: Vec<(&str, f64)> = ten.iter().map(|(c, s)| (c.as_str(), *s)).collect();
        assert!((average_precision(&ranked(&ten), "c9").unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn baselines() {
        let b = random_baseline(10).unwrap();
        assert!((b.map - 7381.0 / 2520.0 / 10.0).abs() < 1e-15);
        assert_eq!(b.top1, 0.1);
        assert_eq!(
            random_baseline(1).unwrap(),
            Baseline {
                map: 1.0,
                top1: 1.0
            }
        );
        assert!(random_baseline(0).is_err());
    }

    fn permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(k - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn baseline_matches_exhaustive_orderings() {
        for k in 1..=7 {
            let perms = permutations(k);
            // Truth is class 0; AP = 1 / position of 0.
            let mean = perms
                .iter()
                .map(|p| 1.0 / (p.iter().position(|&c| c == 0).unwrap() + 1) as f64)
                .sum::<f64>()
                / perms.len() as f64;
            assert!(
                (random_baseline(k).unwrap().map - mean).abs() < 1e-12,
                "k={k}"
            );
        }
    }

    #[test]
    fn mcnemar_examples() {
        let t = ContingencyTable {
            both_correct: 1854,
            a_only: 381,
            b_only: 609,
            both_wrong: 18533,
        };
        let r = mcnemar(&t).unwrap();
        assert!((r.statistic - 227.0 * 227.0 / 990.0).abs() < 1e-12);
        let sym = ContingencyTable {
            a_only: 10,
            b_only: 10,
            ..Default::default()
        };
        assert_eq!(
            mcnemar(&sym).unwrap(),
            McNemarResult {
                statistic: 0.0,
                p_value: 1.0
            }
        );
        assert!(matches!(
            mcnemar(&ContingencyTable::default()),
            Err(Error::NoDiscordantPairs)
        ));
    }

    #[test]
    fn tail_matches_statrs_distribution() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let chi = ChiSquared::new(1.0).unwrap();
        for x in [0.01, 0.5, 1.0, 3.84, 10.0, 52.05, 100.0, 200.0] {
            let ours = chi2_1_upper_tail(x);
            let theirs = chi.sf(x);
            assert!(
                (ours - theirs).abs() <= 1e-6 * theirs,
                "x={x}: {ours} vs {theirs}"
            );
        }
        let p = chi2_1_upper_tail(3.841458820694124);
        assert!((p - 0.05).abs() < 1e-9, "{p}");
        // Reference value from an independent double-precision implementation.
        let p = chi2_1_upper_tail(227.0 * 227.0 / 990.0);
        assert!((p - 5.411914684622468e-13).abs() < 1e-8 * 5.41e-13, "{p}");
    }

    #[test]
    fn contingency_examples() {
        let t = build_contingency(&["A", "B"], &["A", "C"], &["A", "B"]).unwrap();
        assert_eq!(
            t,
            ContingencyTable {
                both_correct: 1,
                a_only: 1,
                b_only: 0,
                both_wrong: 0
            }
        );
        let same = build_contingency(&["A", "X"], &["A", "X"], &["A", "B"]).unwrap();
        assert_eq!((same.a_only, same.b_only), (0, 0));
        let disjoint = build_contingency(&["A", "X"], &["Y", "B"], &["A", "B"]).unwrap();
        assert_eq!(disjoint.both_wrong + disjoint.both_correct, 0);
        assert!(build_contingency(&["A"], &["A", "B"], &["A", "B"]).is_err());
    }

    fn random_instance(
        seed: u64,
        n: usize,
        k: usize,
    ) -> (
        CompatibilityModel,
        EmbeddingTable,
        EmbeddingTable,
        SampleSet,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (da, ds) = (3, 4);
        let w: Vec<f64> = (0..da * ds).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model =
            CompatibilityModel::new(Matrix::from_vec(da, ds, w).unwrap(), 0.0, seed).unwrap();
        let sem = EmbeddingTable::from_entries(
            ds,
            EmbeddingKind::Semantic,
            (0..k).map(|c| {
                (
                    format!("c{c}"),
                    (0..ds).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
            }),
        )
        .unwrap();
        let ac = EmbeddingTable::from_entries(
            da,
            EmbeddingKind::Acoustic,
            (0..n).map(|i| {
                (
                    format!("s{i}"),
                    (0..da).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
            }),
        )
        .unwrap();
        let set = SampleSet::new(
            (0..n)
                .map(|i| SampleRecord::new(format!("s{i}"), format!("c{}", rng.random_range(0..k))))
                .collect(),
            "",
        )
        .unwrap();
        (model, sem, ac, set)
    }

    #[test]
    fn map_matches_sort_and_position_oracle() {
        for seed in 0..20 {
            let (model, sem, ac, set) = random_instance(seed, 20, 6);
            let cands: Vec<String> = sem.ids().map(str::to_string).collect();
            let report = evaluate(&model, &set, &ac, &sem, &cands).unwrap();
            let mut total = 0.0;
            for s in set.samples() {
                let theta = ac.get(&s.sample_id).unwrap();
                let mut scored: Vec<(f64, usize)> = (0..6)
                    .map(|c| {
                        let phi = sem.get(&format!("c{c}")).unwrap();
                        let mut score = 0.0;
                        for i in 0..3 {
                            for j in 0..4 {
                                score += theta[i] * model.weights().get(i, j) * phi[j];
                            }
                        }
                        (score, c)
                    })
                    .collect();
                scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
                let truth: usize = s.class_id[1..].parse().unwrap();
                total += 1.0 / (scored.iter().position(|x| x.1 == truth).unwrap() + 1) as f64;
            }
            assert!((report.map - total / 20.0).abs() < 1e-12);
            assert!(report.map >= report.top1);
        }
    }

    #[test]
    fn evaluate_edge_cases() {
        let (model, sem, ac, set) = random_instance(1, 1, 3);
        let truth = set.samples()[0].class_id.clone();
        let only = evaluate(&model, &set, &ac, &sem, &[truth.as_str()]).unwrap();
        assert_eq!((only.top1, only.map), (1.0, 1.0));
        assert!(evaluate(&model, &SampleSet::default(), &ac, &sem, &["c0"]).is_err());
        let other = if truth == "c0" { "c1" } else { "c0" };
        assert!(matches!(
            evaluate(&model, &set, &ac, &sem, &[other]),
            Err(Error::UnknownClass(_))
        ));
    }

    proptest! {
        #[test]
        fn mcnemar_symmetric_and_monotone(a in 0u64..500, b in 0u64..500) {
            prop_assume!(a + b > 0);
            let t = |a, b| ContingencyTable { a_only: a, b_only: b, ..Default::default() };
            let ab = mcnemar(&t(a, b)).unwrap();
            prop_assert_eq!(ab, mcnemar(&t(b, a)).unwrap());
            // Moving one discordant pair from the smaller to the larger side
            // keeps the sum and widens the gap.
            if a >= b && b > 0 {
                let wider = mcnemar(&t(a + 1, b - 1)).unwrap();
                prop_assert!(wider.p_value <= ab.p_value);
            }
        }

        #[test]
        fn contingency_sums_to_sample_count(
            rows in proptest::collection::vec((0u8..3, 0u8..3, 0u8..3), 0..50),
        ) {
            let a: Vec<String> = rows.iter().map(|r| r.0.to_string()).collect();
            let b: Vec<String> = rows.iter().map(|r| r.1.to_string()).collect();
            let t: Vec<String> = rows.iter().map(|r| r.2.to_string()).collect();
            prop_assert_eq!(build_contingency(&a, &b, &t).unwrap().total(), rows.len() as u64);
        }
    }
}
