use proptest::prelude::*;

use evopipe::data::{accuracy, make_hill_valley, Dataset};
use evopipe::evolve::{init_population, mutate, GpConfig};
use evopipe::learners::{HpValue, Hyperparameters};
use evopipe::operators::{default_registry, EstimatorFilter, OperatorInstance, Registry};
use evopipe::pipeline::{
    cv_score, export_pipeline, fit_pipeline, import_pipeline, ExportMetadata, Node, PipelineTree,
    MAX_DEPTH, MAX_NODES,
};
use evopipe::{seed, Matrix};

fn registry() -> Registry {
    default_registry(true, EstimatorFilter::All).unwrap()
}

fn random_tree(reg: &Registry, s: u64) -> PipelineTree {
    let mut gp = GpConfig::new(reg.clone(), s);
    gp.population_size = 4;
    let mut t = init_population(&gp).unwrap()[(s % 4) as usize].tree.clone();
    for k in 0..(s % 5) {
        t = mutate(&t, &gp, seed::derive(s, &[k]));
    }
    t
}

fn op(name: &str, pairs: &[(&str, HpValue)]) -> OperatorInstance {
    let mut hp = Hyperparameters::new();
    for (k, v) in pairs {
        hp.insert(*k, v.clone());
    }
    OperatorInstance::new(name, hp)
}

fn knn1() -> OperatorInstance {
    op("KNearest", &[("k", HpValue::Int(1))])
}

fn gnb() -> OperatorInstance {
    op("GaussianNB", &[])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_trees_are_valid_and_bounded(s in any::<u64>()) {
        let reg = registry();
        let t = random_tree(&reg, s);
        prop_assert!(t.validate(&reg).is_ok());
        prop_assert!(t.node_count() <= MAX_NODES);
        prop_assert!(t.max_depth() <= MAX_DEPTH);
        prop_assert_eq!(t.complexity(), t.node_count());
    }

    #[test]
    fn export_import_is_identity(s in any::<u64>(), score in proptest::option::of(0.0f64..1.0)) {
        let reg = registry();
        let t = random_tree(&reg, s);
        let meta = ExportMetadata { cv_score: score, dataset: Some("d".into()), seed: Some(s) };
        let text = export_pipeline(&t, &meta);
        let (back, back_meta) = import_pipeline(&text, &reg).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(back_meta, meta);
        prop_assert_eq!(back.canonical_text(), t.canonical_text());
    }

    #[test]
    fn replacing_a_subtree_shifts_complexity_by_the_difference(s in any::<u64>(), pick in any::<usize>()) {
        let reg = registry();
        let t = random_tree(&reg, s);
        let paths: Vec<_> = t
            .nodes()
            .into_iter()
            .filter(|(p, n)| !p.is_empty() && !matches!(n, Node::Source))
            .map(|(p, _)| p)
            .collect();
        prop_assume!(!paths.is_empty());
        let path = &paths[pick % paths.len()];
        let old = t.get(path).unwrap().count();
        let new = Node::transformer(op("StandardScaler", &[]), Node::Source);
        let replaced = t.replace(path, new).unwrap();
        prop_assert_eq!(replaced.complexity() + old, t.complexity() + 1);
    }

    #[test]
    fn union_branch_order_does_not_change_knn_predictions(data_seed in 0u64..1000) {
        let reg = registry();
        let ds = make_hill_valley(60, 12, true, data_seed).unwrap();
        let a = Node::selector(op("SelectKBest", &[("k_fraction", HpValue::Real(0.5))]), Node::Source);
        let b = Node::transformer(op("PCA", &[("frac", HpValue::Real(0.5))]), Node::Source);
        let c = Node::transformer(op("MinMaxScaler", &[]), Node::Source);
        let ab = PipelineTree::new(Node::classifier(knn1(), Node::union(vec![a.clone(), b.clone(), c.clone()])));
        let ba = PipelineTree::new(Node::classifier(knn1(), Node::union(vec![c, b, a])));
        let p1 = fit_pipeline(&ab, &reg, &ds, 0).unwrap().predict(ds.features()).unwrap();
        let p2 = fit_pipeline(&ba, &reg, &ds, 0).unwrap().predict(ds.features()).unwrap();
        prop_assert_eq!(p1, p2);
    }

    #[test]
    fn pipelines_are_deterministic_per_seed(s in any::<u64>()) {
        let reg = registry();
        let t = random_tree(&reg, s);
        let ds = make_hill_valley(40, 10, true, 1).unwrap();
        let run = || fit_pipeline(&t, &reg, &ds, 5).and_then(|p| p.predict_proba(ds.features()));
        match (run(), run()) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            _ => prop_assert!(false, "fits disagree on success"),
        }
    }
}

#[test]
fn constant_features_score_the_majority_rate() {
    let reg = registry();
    let y: Vec<usize> = (0..100).map(|i| usize::from(i >= 60)).collect();
    let ds = Dataset::from_parts("constant", Matrix::zeros(100, 3), y, 2).unwrap();
    let t = PipelineTree::single(gnb());
    let score = cv_score(&t, &reg, &ds, 5, 9).unwrap();
    assert!((score - 0.6).abs() < 1e-12, "{score}");
}

#[test]
fn one_nearest_neighbour_memorises_distinct_rows() {
    let reg = registry();
    let ds = make_hill_valley(80, 16, true, 4).unwrap();
    let fitted = fit_pipeline(&PipelineTree::single(knn1()), &reg, &ds, 0).unwrap();
    let acc = accuracy(&fitted.predict(ds.features()).unwrap(), ds.labels()).unwrap();
    assert_eq!(acc, 1.0);
}

#[test]
fn predictions_reject_wrong_width() {
    let reg = registry();
    let ds = make_hill_valley(40, 10, false, 2).unwrap();
    let fitted = fit_pipeline(&PipelineTree::single(gnb()), &reg, &ds, 0).unwrap();
    assert_eq!(fitted.d_in(), 10);
    assert!(fitted.predict(&Matrix::zeros(3, 9)).is_err());
}
