use std::time::Instant;

use super::tree::{path_string, Node, PipelineTree};
use crate::data::{accuracy, kfold, Dataset};
use crate::error::{Error, Result};
use crate::learners::{fit_estimator, FittedLearner};
use crate::matrix::Matrix;
use crate::operators::{fit_operator_until, FittedOperator, OperatorClass, Registry};
use crate::seed;

#[derive(Clone, Debug)]
enum FittedNode {
    Source,
    Op {
        op: FittedOperator,
        child: Box<FittedNode>,
    },
    Union {
        children: Vec<FittedNode>,
    },
}

impl FittedNode {
    fn transform(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            FittedNode::Source => Ok(x.clone()),
            FittedNode::Op { op, child } => op.transform(&child.transform(x)?),
            FittedNode::Union { children } => {
                let parts = children
                    .iter()
                    .map(|c| c.transform(x))
                    .collect::<Result<Vec<_>>>()?;
                Matrix::hconcat(&parts)
            }
        }
    }
}

/// A pipeline tree fitted on one training set.
#[derive(Clone, Debug)]
pub struct FittedPipeline {
    tree: PipelineTree,
    d_in: usize,
    body: FittedNode,
    root: FittedLearner,
}

impl FittedPipeline {
    pub fn tree(&self) -> &PipelineTree {
        &self.tree
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn n_classes(&self) -> usize {
        self.root.n_classes()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        x.check_cols(self.d_in)?;
        self.root.predict_proba(&self.body.transform(x)?)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        x.check_cols(self.d_in)?;
        self.root.predict(&self.body.transform(x)?)
    }
}

struct Ctx<'a> {
    registry: &'a Registry,
    y: &'a [usize],
    n_classes: usize,
    seed: u64,
    deadline: Option<Instant>,
}

fn node_error(path: &[usize], source: Error) -> Error {
    match source {
        e @ (Error::Timeout | Error::PipelineFit { .. }) => e,
        e => Error::PipelineFit {
            path: path_string(path),
            source: Box::new(e),
        },
    }
}

fn fit_node(
    ctx: &Ctx,
    n: &Node,
    path: &mut Vec<usize>,
    x: &Matrix,
) -> Result<(FittedNode, Matrix)> {
    if let Some(d) = ctx.deadline {
        if Instant::now() >= d {
            return Err(Error::Timeout);
        }
    }
    match n {
        Node::Source => Ok((FittedNode::Source, x.clone())),
        Node::Union { children } => {
            let mut fitted = Vec::with_capacity(children.len());
            let mut parts = Vec::with_capacity(children.len());
            for (i, c) in children.iter().enumerate() {
                path.push(i);
                let (f, out) = fit_node(ctx, c, path, x)?;
                path.pop();
                fitted.push(f);
                parts.push(out);
            }
            let out = Matrix::hconcat(&parts).map_err(|e| node_error(path, e))?;
            Ok((FittedNode::Union { children: fitted }, out))
        }
        Node::Classifier { .. } => Err(node_error(
            path,
            Error::FitFailure("classifier below the root".into()),
        )),
        unary => {
            path.push(0);
            let (child, input) = fit_node(ctx, &unary.children()[0], path, x)?;
            path.pop();
            let op = match unary {
                Node::Identity { .. } => FittedOperator::Identity { d_in: input.cols() },
                _ => {
                    let inst = unary.op().expect("unary operator nodes carry an instance");
                    let node_seed = seed::derive_str(ctx.seed, &path_string(path));
                    fit_operator_until(
                        ctx.registry,
                        inst,
                        &input,
                        ctx.y,
                        ctx.n_classes,
                        node_seed,
                        ctx.deadline,
                    )
                    .map_err(|e| node_error(path, e))?
                }
            };
            let out = op.transform(&input).map_err(|e| node_error(path, e))?;
            Ok((
                FittedNode::Op {
                    op,
                    child: Box::new(child),
                },
                out,
            ))
        }
    }
}

/// Fits every node bottom-up on the training data. Each node's seed is
/// derived from `seed` and the node's path.
pub fn fit_pipeline(
    tree: &PipelineTree,
    registry: &Registry,
    train: &Dataset,
    seed: u64,
) -> Result<FittedPipeline> {
    fit_pipeline_until(tree, registry, train, seed, None)
}

/// [`fit_pipeline`] that gives up with [`Error::Timeout`] once `deadline` passes.
pub fn fit_pipeline_until(
    tree: &PipelineTree,
    registry: &Registry,
    train: &Dataset,
    seed: u64,
    deadline: Option<Instant>,
) -> Result<FittedPipeline> {
    tree.validate(registry)?;
    let ctx = Ctx {
        registry,
        y: train.labels(),
        n_classes: train.n_classes(),
        seed,
        deadline,
    };
    let Node::Classifier { op, child } = tree.root() else {
        unreachable!("validated root is a classifier")
    };
    let mut path = vec![0];
    let (body, input) = fit_node(&ctx, child, &mut path, train.features())?;
    let spec = registry.check_instance(op)?;
    debug_assert_eq!(spec.class(), OperatorClass::Classifier);
    let est = spec
        .estimator()
        .expect("classifier specs carry an estimator");
    let root = fit_estimator(
        est,
        spec.name(),
        &op.hp,
        &input,
        train.labels(),
        train.n_classes(),
        seed::derive_str(seed, "0"),
        deadline,
    )
    .map_err(|e| node_error(&[], e))?;
    Ok(FittedPipeline {
        tree: tree.clone(),
        d_in: train.n_features(),
        body,
        root,
    })
}

pub fn predict_pipeline(fitted: &FittedPipeline, x: &Matrix) -> Result<Vec<usize>> {
    fitted.predict(x)
}

/// Per-fold outcome of a cross-validation run.
#[derive(Clone, Debug, PartialEq)]
pub struct CvReport {
    /// Held-out accuracy per fold; `None` where fitting or prediction failed.
    pub fold_scores: Vec<Option<f64>>,
}

impl CvReport {
    /// Mean fold accuracy with failed folds scored 0.
    pub fn score(&self) -> f64 {
        if self.fold_scores.is_empty() {
            return 0.0;
        }
        self.fold_scores
            .iter()
            .map(|s| s.unwrap_or(0.0))
            .sum::<f64>()
            / self.fold_scores.len() as f64
    }

    pub fn all_failed(&self) -> bool {
        self.fold_scores.iter().all(Option::is_none)
    }
}

/// k-fold cross-validation. Fold assignment and per-fold fit seeds derive
/// from `seed`. Invalid trees and timeouts are errors; a fold whose fit
/// fails any other way scores 0.
pub fn cv_report(
    tree: &PipelineTree,
    registry: &Registry,
    data: &Dataset,
    k: usize,
    seed: u64,
    deadline: Option<Instant>,
) -> Result<CvReport> {
    tree.validate(registry)?;
    let folds = kfold(data, k, seed::derive(seed, &[0]))?;
    let mut fold_scores = Vec::with_capacity(k);
    for f in 0..k {
        let (tr, te) = folds.split(f);
        let train = data.subset(&tr);
        let test = data.subset(&te);
        let fold_seed = seed::derive(seed, &[1, f as u64]);
        let score = match fit_pipeline_until(tree, registry, &train, fold_seed, deadline)
            .and_then(|p| p.predict(test.features()))
            .and_then(|pred| accuracy(&pred, test.labels()))
        {
            Ok(s) => Some(s),
            Err(e @ Error::Timeout) => return Err(e),
            Err(e) => {
                log::debug!("fold {f} failed: {e}");
                None
            }
        };
        fold_scores.push(score);
    }
    Ok(CvReport { fold_scores })
}

/// Mean k-fold accuracy; see [`cv_report`].
pub fn cv_score(
    tree: &PipelineTree,
    registry: &Registry,
    data: &Dataset,
    k: usize,
    seed: u64,
) -> Result<f64> {
    cv_report(tree, registry, data, k, seed, None).map(|r| r.score())
}
