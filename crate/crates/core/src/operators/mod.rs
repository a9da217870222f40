//! Operator catalog.
//!
//! A [`Registry`] lists the operators the search may use, each with its
//! hyperparameter search space. Classifier operators carry the
//! [`Estimator`] that backs them, which is how custom learners plug in.

mod fitted;
mod template;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use fitted::{fit_operator, fit_operator_until, FittedOperator};
pub use template::{parse_template, render_template, Slot, TemplateConstraint};

use crate::error::{Error, Result};
use crate::learners::{CustomLearner, Estimator, HpValue, Hyperparameters, LearnerKind};
use crate::matrix::Matrix;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatorClass {
    Selector,
    /// Scalers and decompositions.
    Transformer,
    Classifier,
    /// Feature union.
    Combiner,
    StackingWrapper,
    Identity,
}

impl OperatorClass {
    pub fn name(self) -> &'static str {
        match self {
            OperatorClass::Selector => "Selector",
            OperatorClass::Transformer => "Transformer",
            OperatorClass::Classifier => "Classifier",
            OperatorClass::Combiner => "Combiner",
            OperatorClass::StackingWrapper => "StackingWrapper",
            OperatorClass::Identity => "Identity",
        }
    }
}

impl fmt::Display for OperatorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Declared domain of one hyperparameter.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamSpace {
    Choice(Vec<HpValue>),
    /// Inclusive real interval.
    RealRange(f64, f64),
    /// Inclusive integer interval.
    IntRange(i64, i64),
}

impl ParamSpace {
    pub fn contains(&self, v: &HpValue) -> bool {
        match (self, v) {
            (ParamSpace::Choice(options), v) => options.contains(v),
            (ParamSpace::RealRange(lo, hi), HpValue::Real(x)) => lo <= x && x <= hi,
            (ParamSpace::IntRange(lo, hi), HpValue::Int(x)) => lo <= x && x <= hi,
            _ => false,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> HpValue {
        match self {
            ParamSpace::Choice(options) => {
                options.choose(rng).expect("non-empty choice set").clone()
            }
            ParamSpace::RealRange(lo, hi) => HpValue::Real(rng.random_range(*lo..=*hi)),
            ParamSpace::IntRange(lo, hi) => HpValue::Int(rng.random_range(*lo..=*hi)),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            ParamSpace::Choice(o) => o.is_empty(),
            ParamSpace::RealRange(lo, hi) => !(lo <= hi),
            ParamSpace::IntRange(lo, hi) => lo > hi,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OperatorSpec {
    name: String,
    class: OperatorClass,
    space: BTreeMap<String, ParamSpace>,
    estimator: Option<Estimator>,
}

impl OperatorSpec {
    fn plain(name: &str, class: OperatorClass, space: &[(&str, ParamSpace)]) -> Self {
        OperatorSpec {
            name: name.to_string(),
            class,
            space: space
                .iter()
                .map(|(k, s)| (k.to_string(), s.clone()))
                .collect(),
            estimator: None,
        }
    }

    /// A classifier operator backed by a user-supplied learner.
    pub fn custom_classifier(
        name: &str,
        space: Vec<(String, ParamSpace)>,
        learner: Arc<dyn CustomLearner>,
    ) -> Self {
        OperatorSpec {
            name: name.to_string(),
            class: OperatorClass::Classifier,
            space: space.into_iter().collect(),
            estimator: Some(Estimator::Custom(learner)),
        }
    }

    fn builtin_classifier(kind: LearnerKind) -> Self {
        OperatorSpec {
            name: kind.name().to_string(),
            class: OperatorClass::Classifier,
            space: builtin_space(kind).into_iter().collect(),
            estimator: Some(Estimator::Builtin(kind)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn class(&self) -> OperatorClass {
        self.class
    }

    pub fn space(&self) -> &BTreeMap<String, ParamSpace> {
        &self.space
    }

    pub fn estimator(&self) -> Option<&Estimator> {
        self.estimator.as_ref()
    }

    pub fn is_classifier(&self) -> bool {
        self.class == OperatorClass::Classifier
    }

    pub fn has_params(&self) -> bool {
        !self.space.is_empty()
    }

    /// Checks that `hp` assigns exactly the declared keys, each inside its space.
    pub fn check(&self, hp: &Hyperparameters) -> Result<()> {
        let want: Vec<&str> = self.space.keys().map(String::as_str).collect();
        let got: Vec<&str> = hp.keys().collect();
        if want != got {
            return Err(Error::Hyperparameter(format!(
                "{} expects parameters {:?}, got {:?}",
                self.name, want, got
            )));
        }
        for (k, v) in hp.iter() {
            if !self.space[k].contains(v) {
                return Err(Error::Hyperparameter(format!(
                    "{}.{k} = {v} is outside its declared space",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// One sampled hyperparameter assignment of a named operator.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorInstance {
    pub spec_name: String,
    pub hp: Hyperparameters,
}

impl OperatorInstance {
    pub fn new(spec_name: impl Into<String>, hp: Hyperparameters) -> Self {
        OperatorInstance {
            spec_name: spec_name.into(),
            hp,
        }
    }
}

/// Draws every parameter uniformly from its space, in sorted key order.
pub fn sample_instance(spec: &OperatorSpec, rng_seed: u64) -> OperatorInstance {
    sample_with(spec, &mut seed::rng(rng_seed))
}

pub(crate) fn sample_with(spec: &OperatorSpec, rng: &mut impl Rng) -> OperatorInstance {
    let hp = spec
        .space
        .iter()
        .map(|(k, s)| (k.clone(), s.sample(rng)))
        .collect();
    OperatorInstance::new(spec.name.clone(), hp)
}

/// Which classifiers a registry keeps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum EstimatorFilter {
    All,
    LrOnly,
    MlpOnly,
    /// Exactly one classifier, by operator name.
    Named(String),
}

impl EstimatorFilter {
    pub fn keeps(&self, classifier: &str) -> bool {
        match self {
            EstimatorFilter::All => true,
            EstimatorFilter::LrOnly => classifier == LearnerKind::LogisticRegressionNN.name(),
            EstimatorFilter::MlpOnly => classifier == LearnerKind::MlpNN.name(),
            EstimatorFilter::Named(n) => classifier == n,
        }
    }

    /// Command-line spelling: `all`, `lr`, `mlp`, or a classifier name.
    pub fn parse(s: &str) -> Self {
        match s {
            "all" => EstimatorFilter::All,
            "lr" => EstimatorFilter::LrOnly,
            "mlp" => EstimatorFilter::MlpOnly,
            other => EstimatorFilter::Named(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            EstimatorFilter::All => "all",
            EstimatorFilter::LrOnly => "lr",
            EstimatorFilter::MlpOnly => "mlp",
            EstimatorFilter::Named(n) => n,
        }
    }

    /// True when the filter admits only neural classifiers.
    pub fn is_neural(&self) -> bool {
        match self {
            EstimatorFilter::LrOnly | EstimatorFilter::MlpOnly => true,
            EstimatorFilter::Named(n) => {
                LearnerKind::from_name(n).is_some_and(LearnerKind::is_neural)
            }
            EstimatorFilter::All => false,
        }
    }
}

impl From<EstimatorFilter> for String {
    fn from(f: EstimatorFilter) -> String {
        f.as_str().to_string()
    }
}

impl From<String> for EstimatorFilter {
    fn from(s: String) -> Self {
        EstimatorFilter::parse(&s)
    }
}

#[derive(Clone, Debug)]
pub struct Registry {
    specs: Vec<OperatorSpec>,
    nn_enabled: bool,
    filter: EstimatorFilter,
}

fn reals(v: &[f64]) -> ParamSpace {
    ParamSpace::Choice(v.iter().map(|&x| HpValue::Real(x)).collect())
}

fn ints(v: &[i64]) -> ParamSpace {
    ParamSpace::Choice(v.iter().map(|&x| HpValue::Int(x)).collect())
}

fn builtin_space(kind: LearnerKind) -> Vec<(String, ParamSpace)> {
    let neural = || {
        vec![
            (
                "batch".to_string(),
                ParamSpace::Choice(vec![
                    HpValue::Int(16),
                    HpValue::Int(64),
                    HpValue::Cat("full".into()),
                ]),
            ),
            ("epochs".to_string(), ints(&[50, 100, 200])),
            ("l2".to_string(), reals(&[0.0, 1e-4, 1e-2])),
            ("lr".to_string(), reals(&[0.001, 0.01, 0.1])),
        ]
    };
    match kind {
        LearnerKind::LogisticRegressionNN => neural(),
        LearnerKind::MlpNN => {
            let mut s = neural();
            s.push(("hidden".to_string(), ints(&[8, 16, 32, 64, 128])));
            s
        }
        LearnerKind::DecisionTree => vec![("max_depth".to_string(), ints(&[2, 4, 6, 8, 12]))],
        LearnerKind::KNearest => vec![("k".to_string(), ints(&[1, 3, 5, 7, 11]))],
        LearnerKind::GaussianNB => vec![],
    }
}

/// The operator catalog.
pub fn default_registry(nn_enabled: bool, filter: EstimatorFilter) -> Result<Registry> {
    use OperatorClass::*;
    let mut specs = vec![
        OperatorSpec::plain(
            "VarianceThreshold",
            Selector,
            &[("threshold", reals(&[0.0, 1e-4, 1e-2]))],
        ),
        OperatorSpec::plain(
            "SelectKBest",
            Selector,
            &[("k_fraction", reals(&[0.25, 0.5, 0.75, 1.0]))],
        ),
        OperatorSpec::plain("MinMaxScaler", Transformer, &[]),
        OperatorSpec::plain("StandardScaler", Transformer, &[]),
        OperatorSpec::plain("PCA", Transformer, &[("frac", reals(&[0.25, 0.5, 0.75]))]),
        OperatorSpec::plain("Identity", Identity, &[]),
        OperatorSpec::plain("Union", Combiner, &[]),
        OperatorSpec::plain("Stack", StackingWrapper, &[]),
        OperatorSpec::builtin_classifier(LearnerKind::DecisionTree),
        OperatorSpec::builtin_classifier(LearnerKind::KNearest),
        OperatorSpec::builtin_classifier(LearnerKind::GaussianNB),
    ];
    if nn_enabled {
        specs.push(OperatorSpec::builtin_classifier(
            LearnerKind::LogisticRegressionNN,
        ));
        specs.push(OperatorSpec::builtin_classifier(LearnerKind::MlpNN));
    }
    let before = specs.iter().filter(|s| s.is_classifier()).count();
    specs.retain(|s| !s.is_classifier() || filter.keeps(&s.name));
    let after = specs.iter().filter(|s| s.is_classifier()).count();
    if after == 0 {
        return Err(Error::Registry(match &filter {
            f if f.is_neural() && !nn_enabled => {
                format!(
                    "estimator filter '{}' needs neural estimators enabled",
                    f.as_str()
                )
            }
            f => format!(
                "estimator filter '{}' matches none of {before} classifiers",
                f.as_str()
            ),
        }));
    }
    Ok(Registry {
        specs,
        nn_enabled,
        filter,
    })
}

impl Registry {
    pub fn specs(&self) -> &[OperatorSpec] {
        &self.specs
    }

    pub fn nn_enabled(&self) -> bool {
        self.nn_enabled
    }

    pub fn filter(&self) -> &EstimatorFilter {
        &self.filter
    }

    pub fn get(&self, name: &str) -> Option<&OperatorSpec> {
        self.specs.iter().find(|s| s.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&OperatorSpec> {
        self.get(name)
            .ok_or_else(|| Error::Registry(format!("unknown operator '{name}'")))
    }

    pub fn of_class(&self, class: OperatorClass) -> impl Iterator<Item = &OperatorSpec> {
        self.specs.iter().filter(move |s| s.class == class)
    }

    pub fn classifiers(&self) -> impl Iterator<Item = &OperatorSpec> {
        self.of_class(OperatorClass::Classifier)
    }

    /// Checks that `inst` names a registered operator and its
    /// hyperparameters lie inside the declared space.
    pub fn check_instance(&self, inst: &OperatorInstance) -> Result<&OperatorSpec> {
        let spec = self.require(&inst.spec_name)?;
        spec.check(&inst.hp)?;
        Ok(spec)
    }

    /// Adds a custom classifier after probing it on a 4-row dataset.
    pub fn register_custom_learner(&self, spec: OperatorSpec) -> Result<Registry> {
        if self.get(&spec.name).is_some() {
            return Err(Error::Registry(format!(
                "operator '{}' already registered",
                spec.name
            )));
        }
        if !spec.is_classifier() || spec.estimator.is_none() {
            return Err(Error::Registry(format!(
                "'{}' is not a classifier operator",
                spec.name
            )));
        }
        if let Some((k, _)) = spec.space.iter().find(|(_, s)| s.is_empty()) {
            return Err(Error::Registry(format!(
                "'{}.{k}' has an empty space",
                spec.name
            )));
        }
        probe(&spec)
            .map_err(|e| Error::Registry(format!("probe fit of '{}' failed: {e}", spec.name)))?;
        let mut next = self.clone();
        next.specs.push(spec);
        Ok(next)
    }
}

fn probe(spec: &OperatorSpec) -> Result<()> {
    let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])?;
    let y = [0, 0, 1, 1];
    let inst = sample_instance(spec, 0);
    let est = spec.estimator.as_ref().expect("classifier");
    let fitted = crate::learners::fit_estimator(est, &spec.name, &inst.hp, &x, &y, 2, 0, None)?;
    let p = fitted.predict_proba(&x)?;
    for r in p.iter_rows() {
        let sum: f64 = r.iter().sum();
        if r.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::FitFailure(format!(
                "probability row {r:?} is not a distribution"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::ClassifierModel;

    #[test]
    fn catalog_sizes() {
        assert_eq!(
            default_registry(true, EstimatorFilter::All)
                .unwrap()
                .specs()
                .len(),
            13
        );
        let shallow = default_registry(false, EstimatorFilter::All).unwrap();
        assert_eq!(shallow.specs().len(), 11);
        assert!(shallow.classifiers().all(|s| !matches!(
            s.estimator(),
            Some(Estimator::Builtin(k)) if k.is_neural()
        )));
        assert!(matches!(
            default_registry(false, EstimatorFilter::LrOnly),
            Err(Error::Registry(_))
        ));
    }

    #[test]
    fn filter_removes_only_classifiers() {
        let all = default_registry(true, EstimatorFilter::All).unwrap();
        let lr = default_registry(true, EstimatorFilter::LrOnly).unwrap();
        let names: Vec<&str> = lr.classifiers().map(|s| s.name()).collect();
        assert_eq!(names, vec!["LogisticRegressionNN"]);
        assert_eq!(all.specs().len() - lr.specs().len(), 4);
        let gnb = default_registry(false, EstimatorFilter::Named("GaussianNB".into())).unwrap();
        assert_eq!(gnb.classifiers().count(), 1);
        assert!(default_registry(false, EstimatorFilter::Named("Nope".into())).is_err());
    }

    #[test]
    fn sampling() {
        let reg = default_registry(true, EstimatorFilter::All).unwrap();
        assert!(sample_instance(reg.get("Identity").unwrap(), 3)
            .hp
            .is_empty());
        let skb = reg.get("SelectKBest").unwrap();
        for s in 0..50 {
            let inst = sample_instance(skb, s);
            let v = inst.hp.real("k_fraction").unwrap();
            assert!([0.25, 0.5, 0.75, 1.0].contains(&v));
            assert_eq!(inst, sample_instance(skb, s));
            reg.check_instance(&inst).unwrap();
        }
    }

    #[test]
    fn out_of_space_rejected() {
        let reg = default_registry(true, EstimatorFilter::All).unwrap();
        let inst = OperatorInstance::new(
            "KNearest",
            Hyperparameters::new().with("k", HpValue::Int(2)),
        );
        assert!(reg.check_instance(&inst).is_err());
    }

    #[derive(Debug)]
    struct Constant(usize);

    impl ClassifierModel for Constant {
        fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
            let mut m = Matrix::zeros(x.rows(), 2);
            (0..x.rows()).for_each(|i| m.set(i, self.0, 1.0));
            Ok(m)
        }
    }

    #[derive(Debug)]
    struct Majority;

    impl CustomLearner for Majority {
        fn fit(
            &self,
            _: &Hyperparameters,
            _: &Matrix,
            y: &[usize],
            _: usize,
            _: u64,
        ) -> Result<Arc<dyn ClassifierModel>> {
            let ones = y.iter().filter(|&&l| l == 1).count();
            Ok(Arc::new(Constant(usize::from(2 * ones > y.len()))))
        }
    }

    #[derive(Debug)]
    struct Broken;

    impl CustomLearner for Broken {
        fn fit(
            &self,
            _: &Hyperparameters,
            _: &Matrix,
            _: &[usize],
            _: usize,
            _: u64,
        ) -> Result<Arc<dyn ClassifierModel>> {
            Err(Error::FitFailure("always".into()))
        }
    }

    #[test]
    fn custom_registration() {
        let reg = default_registry(true, EstimatorFilter::All).unwrap();
        let next = reg
            .register_custom_learner(OperatorSpec::custom_classifier(
                "Majority",
                vec![],
                Arc::new(Majority),
            ))
            .unwrap();
        assert!(next.get("Majority").unwrap().is_classifier());
        assert_eq!(next.specs().len(), 14);

        let dup = OperatorSpec::custom_classifier("MlpNN", vec![], Arc::new(Majority));
        assert!(reg.register_custom_learner(dup).is_err());

        let broken = OperatorSpec::custom_classifier("Broken", vec![], Arc::new(Broken));
        assert!(matches!(
            reg.register_custom_learner(broken),
            Err(Error::Registry(_))
        ));
    }
}
