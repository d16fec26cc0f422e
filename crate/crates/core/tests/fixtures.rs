use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use zsl_core::corpus::{
    read_class_catalog, read_embedding_table, read_fold_plan, read_model, read_sample_set,
    EmbeddingKind, Role,
};
use zsl_core::metrics::evaluate;
use zsl_core::splits::{category_folds, make_data_setting, DataSetting};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

#[test]
fn esc50_catalog_has_fifty_unique_classes() {
    let catalog = read_class_catalog(fixture("esc50_catalog.jsonl")).unwrap();
    assert_eq!(catalog.len(), 50);
    assert!(catalog
        .get("door_wood_knock")
        .is_some_and(|r| r.label == "door wood knock"));
}

#[test]
fn category_map_regenerates_the_category_plan() {
    let catalog = read_class_catalog(fixture("esc50_catalog.jsonl")).unwrap();
    let text = std::fs::read_to_string(fixture("esc50_categories.json")).unwrap();
    let map: HashMap<String, String> = serde_json::from_str(&text).unwrap();
    let generated = category_folds(&catalog, &map).unwrap();
    let shipped = read_fold_plan(fixture("esc50_category_folds.json")).unwrap();
    assert_eq!(generated, shipped);
    assert_eq!(shipped.folds().len(), 5);
    assert!(shipped.folds().values().all(|f| f.len() == 10));
    assert_eq!(shipped.fold("Animal sounds").unwrap()[0], "dog");
}

#[test]
fn random_plan_partitions_the_catalog() {
    let catalog = read_class_catalog(fixture("esc50_catalog.jsonl")).unwrap();
    let plan = read_fold_plan(fixture("esc50_random_folds.json")).unwrap();
    let planned: BTreeSet<&str> = plan.all_classes().collect();
    let listed: BTreeSet<&str> = catalog.ids().collect();
    assert_eq!(planned, listed);
    assert!(plan.folds().values().all(|f| f.len() == 10));
    assert!(plan.fold("Fold4").unwrap().contains(&"dog".to_string()));

    let s2 = make_data_setting(&plan, DataSetting::S2).unwrap();
    assert_eq!(s2.role_folds(Role::ModelTrain).unwrap(), ["Fold2", "Fold3"]);
    assert_eq!(s2.classes_for(Role::ZslTest).unwrap().len(), 10);
}

#[test]
fn synthetic_corpus_is_consistent_and_identity_solves_it() {
    let catalog = read_class_catalog(fixture("synthetic/catalog.jsonl")).unwrap();
    let acoustic = read_embedding_table(fixture("synthetic/acoustic.tsv")).unwrap();
    let semantic = read_embedding_table(fixture("synthetic/semantic.tsv")).unwrap();
    let samples = read_sample_set(fixture("synthetic/samples.tsv")).unwrap();
    let plan = read_fold_plan(fixture("synthetic/plan.json")).unwrap();
    let model = read_model(fixture("synthetic/identity_model.txt")).unwrap();
    assert_eq!(acoustic.kind(), EmbeddingKind::Acoustic);
    assert_eq!(semantic.kind(), EmbeddingKind::Semantic);
    samples.check_catalog(&catalog).unwrap();
    samples.check_embeddings(&acoustic).unwrap();

    let test_classes = plan.classes_for(Role::ZslTest).unwrap();
    let test_set = samples.filter_classes(|c| test_classes.iter().any(|t| t == c));
    let report = evaluate(&model, &test_set, &acoustic, &semantic, &test_classes).unwrap();
    assert_eq!((report.top1, report.map), (1.0, 1.0));
}
