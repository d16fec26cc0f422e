use std::collections::BTreeMap;

use indexmap::IndexMap;
use proptest::prelude::*;

use zsl_core::corpus::{
    read_class_catalog, read_embedding_table, read_fold_plan, read_labeled_pairs, read_model,
    read_sample_set, write_class_catalog, write_embedding_table, write_fold_plan,
    write_labeled_pairs, write_model, write_sample_set, ClassCatalog, ClassRecord,
    CompatibilityModel, EmbeddingKind, EmbeddingTable, FoldPlan, Role, SampleRecord, SampleSet,
};
use zsl_core::linalg::Matrix;

fn id() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9_ .éß音-][a-zA-Z0-9_ .#\"éß音-]{0,10}"
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        -1.0f64..1.0,
        Just(-0.0),
        Just(f64::MIN_POSITIVE / 3.0),
    ]
}

fn unique(ids: Vec<String>) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    ids.into_iter().filter(|s| seen.insert(s.clone())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embedding_tables(dim in 1usize..5, ids in prop::collection::vec(id(), 0..6), acoustic in any::<bool>(),
                        values in prop::collection::vec(finite(), 30)) {
        let kind = if acoustic { EmbeddingKind::Acoustic } else { EmbeddingKind::Semantic };
        let entries: Vec<(String, Vec<f64>)> = unique(ids)
            .into_iter()
            .enumerate()
            .map(|(i, id)| (id, (0..dim).map(|j| values[(i * dim + j) % values.len()]).collect()))
            .collect();
        let table = EmbeddingTable::from_entries(dim, kind, entries).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tsv");
        write_embedding_table(&table, &path).unwrap();
        let back = read_embedding_table(&path).unwrap();
        prop_assert_eq!(back.kind(), kind);
        let flat = |t: &EmbeddingTable| {
            t.iter().map(|(id, v)| (id.to_string(), v.iter().map(|x| x.to_bits()).collect::<Vec<_>>())).collect::<Vec<_>>()
        };
        prop_assert_eq!(flat(&back), flat(&table));
    }

    #[test]
    fn catalogs(ids in prop::collection::vec(id(), 0..6), with_desc in any::<bool>()) {
        let records = unique(ids)
            .into_iter()
            .map(|id| {
                let r = ClassRecord::new(id.clone(), format!("{id} label"));
                if with_desc { r.with_description(format!("line one\nline \"two\" for {id}")) } else { r }
            })
            .collect();
        let catalog = ClassCatalog::new(records).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        write_class_catalog(&catalog, &path).unwrap();
        prop_assert_eq!(read_class_catalog(&path).unwrap(), catalog);
    }

    #[test]
    fn fold_plans(ids in prop::collection::vec(id(), 2..12), k in 2usize..5) {
        let ids = unique(ids);
        let k = k.min(ids.len());
        let mut folds = IndexMap::new();
        for (i, class) in ids.into_iter().enumerate() {
            folds.entry(format!("Fold{}", i % k)).or_insert_with(Vec::new).push(class);
        }
        let names: Vec<String> = folds.keys().cloned().collect();
        let roles = BTreeMap::from([(Role::ZslTest, vec![names[0].clone()]), (Role::ZslTrain, names[1..].to_vec())]);
        let plan = FoldPlan::new(folds, roles).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        write_fold_plan(&plan, &path).unwrap();
        prop_assert_eq!(read_fold_plan(&path).unwrap(), plan);
    }

    #[test]
    fn models(rows in 1usize..5, cols in 1usize..5, values in prop::collection::vec(finite(), 25),
              lambda in 0.0f64..100.0, seed in any::<u64>(), notes in ".{0,20}") {
        let w = Matrix::from_vec(rows, cols, values[..rows * cols].to_vec()).unwrap();
        let model = CompatibilityModel::new(w, lambda, seed).unwrap().with_notes(notes);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        write_model(&model, &path).unwrap();
        let back = read_model(&path).unwrap();
        let bits = |m: &CompatibilityModel| m.weights().as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&model));
        prop_assert_eq!(back.lambda.to_bits(), model.lambda.to_bits());
        prop_assert_eq!(back.seed, model.seed);
        prop_assert_eq!(back.notes, model.notes);
    }

    #[test]
    fn sample_sets_and_predictions(pairs in prop::collection::vec((id(), id()), 0..8), binding in "[a-z./_]{0,12}") {
        let pairs: Vec<(String, String)> = {
            let mut seen = std::collections::HashSet::new();
            pairs.into_iter().filter(|(s, _)| seen.insert(s.clone())).collect()
        };
        let set = SampleSet::new(pairs.iter().map(|(s, c)| SampleRecord::new(s.clone(), c.clone())).collect(), binding).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.tsv");
        write_sample_set(&set, &path).unwrap();
        prop_assert_eq!(read_sample_set(&path).unwrap(), set);
        let path = dir.path().join("pred.tsv");
        write_labeled_pairs(&pairs, &path).unwrap();
        prop_assert_eq!(read_labeled_pairs(&path).unwrap(), pairs);
    }
}
