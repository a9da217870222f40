//! Native classifiers behind one fit / predict / predict-probabilities
//! contract.
//!
//! Two gradient-trained neural kinds (softmax regression and a one-hidden-layer
//! ReLU MLP) sit next to three shallow kinds (CART, kNN, Gaussian naive Bayes).
//! Every fitted learner is immutable and produces probability rows summing to
//! one, which the stacking operator depends on.

mod hyper;
mod knn;
mod naive_bayes;
mod neural;
mod tree;

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

pub use hyper::{HpValue, Hyperparameters};
pub use neural::{loss_and_gradient, NeuralArch};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LearnerKind {
    LogisticRegressionNN,
    MlpNN,
    DecisionTree,
    KNearest,
    GaussianNB,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 5] = [
        LearnerKind::LogisticRegressionNN,
        LearnerKind::MlpNN,
        LearnerKind::DecisionTree,
        LearnerKind::KNearest,
        LearnerKind::GaussianNB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::LogisticRegressionNN => "LogisticRegressionNN",
            LearnerKind::MlpNN => "MlpNN",
            LearnerKind::DecisionTree => "DecisionTree",
            LearnerKind::KNearest => "KNearest",
            LearnerKind::GaussianNB => "GaussianNB",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn is_neural(self) -> bool {
        matches!(self, LearnerKind::LogisticRegressionNN | LearnerKind::MlpNN)
    }

    /// Hyperparameter names the kind accepts, sorted.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            LearnerKind::LogisticRegressionNN => &["batch", "epochs", "l2", "lr"],
            LearnerKind::MlpNN => &["batch", "epochs", "hidden", "l2", "lr"],
            LearnerKind::DecisionTree => &["max_depth"],
            LearnerKind::KNearest => &["k"],
            LearnerKind::GaussianNB => &[],
        }
    }

    /// Checks key set and value domains (type and sign), not the finite
    /// search sets of the operator catalog.
    pub fn validate(self, hp: &Hyperparameters) -> Result<()> {
        let expected = self.param_names();
        let got: Vec<&str> = hp.keys().collect();
        if got != expected {
            return Err(Error::Hyperparameter(format!(
                "{} expects parameters {:?}, got {:?}",
                self.name(),
                expected,
                got
            )));
        }
        match self {
            LearnerKind::LogisticRegressionNN | LearnerKind::MlpNN => {
                neural::TrainConfig::from_hp(self, hp).map(|_| ())
            }
            LearnerKind::DecisionTree => hp.positive_int("max_depth").map(|_| ()),
            LearnerKind::KNearest => hp.positive_int("k").map(|_| ()),
            LearnerKind::GaussianNB => Ok(()),
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Extension point for user-supplied classifiers.
pub trait CustomLearner: Send + Sync + fmt::Debug {
    fn fit(
        &self,
        hp: &Hyperparameters,
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        seed: u64,
    ) -> Result<Arc<dyn ClassifierModel>>;
}

/// A fitted user-supplied classifier.
pub trait ClassifierModel: Send + Sync + fmt::Debug {
    /// One row per input row, `n_classes` columns.
    fn predict_proba(&self, x: &Matrix) -> Result<Matrix>;
}

/// What sits behind a classifier operator.
#[derive(Clone, Debug)]
pub enum Estimator {
    Builtin(LearnerKind),
    Custom(Arc<dyn CustomLearner>),
}

#[derive(Clone, Debug)]
enum Model {
    Constant(usize),
    Neural(neural::Network),
    Tree(tree::Tree),
    Knn(knn::Knn),
    Nb(naive_bayes::GaussianNb),
    Custom(Arc<dyn ClassifierModel>),
}

#[derive(Clone, Debug)]
pub struct FittedLearner {
    name: String,
    n_classes: usize,
    d_in: usize,
    model: Model,
}

/// Fits a built-in kind.
pub fn fit(
    kind: LearnerKind,
    hp: &Hyperparameters,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<FittedLearner> {
    fit_estimator(
        &Estimator::Builtin(kind),
        kind.name(),
        hp,
        x,
        y,
        n_classes,
        seed,
        None,
    )
}

/// Fits any estimator, stopping with [`Error::Timeout`] once `deadline`
/// passes (checked between training epochs).
#[allow(clippy::too_many_arguments)]
pub fn fit_estimator(
    est: &Estimator,
    name: &str,
    hp: &Hyperparameters,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    seed: u64,
    deadline: Option<Instant>,
) -> Result<FittedLearner> {
    if x.rows() != y.len() {
        return Err(Error::Dimension {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if x.rows() == 0 {
        return Err(Error::FitFailure("no training rows".into()));
    }
    if n_classes < 2 || y.iter().any(|&l| l >= n_classes) {
        return Err(Error::FitFailure(format!("labels outside 0..{n_classes}")));
    }
    if let Estimator::Builtin(kind) = est {
        kind.validate(hp)?;
    }
    let model = if let Some(only) = single_class(y) {
        Model::Constant(only)
    } else {
        match est {
            Estimator::Builtin(kind) => match kind {
                LearnerKind::LogisticRegressionNN | LearnerKind::MlpNN => {
                    let cfg = neural::TrainConfig::from_hp(*kind, hp)?;
                    Model::Neural(neural::train(&cfg, x, y, n_classes, seed, deadline)?)
                }
                LearnerKind::DecisionTree => Model::Tree(tree::Tree::fit(
                    x,
                    y,
                    n_classes,
                    hp.positive_int("max_depth")?,
                )),
                LearnerKind::KNearest => {
                    Model::Knn(knn::Knn::fit(x, y, n_classes, hp.positive_int("k")?))
                }
                LearnerKind::GaussianNB => Model::Nb(naive_bayes::GaussianNb::fit(x, y, n_classes)),
            },
            Estimator::Custom(c) => Model::Custom(c.fit(hp, x, y, n_classes, seed)?),
        }
    };
    Ok(FittedLearner {
        name: name.to_string(),
        n_classes,
        d_in: x.cols(),
        model,
    })
}

fn single_class(y: &[usize]) -> Option<usize> {
    let first = *y.first()?;
    y.iter().all(|&l| l == first).then_some(first)
}

impl FittedLearner {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    /// True when the training labels had a single class.
    pub fn is_constant(&self) -> bool {
        matches!(self.model, Model::Constant(_))
    }

    /// Flat trained parameters of a neural learner.
    pub fn neural_params(&self) -> Option<&[f64]> {
        match &self.model {
            Model::Neural(n) => Some(n.params()),
            _ => None,
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        x.check_cols(self.d_in)?;
        let c = self.n_classes;
        let proba = match &self.model {
            Model::Constant(k) => {
                let mut m = Matrix::zeros(x.rows(), c);
                for i in 0..x.rows() {
                    m.set(i, *k, 1.0);
                }
                m
            }
            Model::Neural(n) => n.predict_proba(x),
            Model::Tree(t) => t.predict_proba(x),
            Model::Knn(k) => k.predict_proba(x),
            Model::Nb(nb) => nb.predict_proba(x),
            Model::Custom(m) => {
                let p = m.predict_proba(x)?;
                if p.rows() != x.rows() || p.cols() != c {
                    return Err(Error::FitFailure(format!(
                        "{} returned a {}x{} probability matrix, expected {}x{}",
                        self.name,
                        p.rows(),
                        p.cols(),
                        x.rows(),
                        c
                    )));
                }
                p
            }
        };
        Ok(proba)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.predict_proba(x)?))
    }
}

/// Row-wise argmax; ties go to the lower class index.
pub fn argmax_rows(p: &Matrix) -> Vec<usize> {
    p.iter_rows()
        .map(|r| {
            let mut best = 0;
            for (j, &v) in r.iter().enumerate().skip(1) {
                if v > r[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
