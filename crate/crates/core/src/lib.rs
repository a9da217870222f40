//! Evolutionary search over tree-structured classification pipelines.
//!
//! Pipelines are trees of feature selectors, transformers, stacking wrappers
//! and feature unions feeding a root classifier. A genetic-programming engine
//! mutates and recombines those trees and keeps the population on the Pareto
//! front of cross-validated accuracy versus pipeline size (NSGA-II).
//!
//! Module map:
//!
//! - [`data`]: datasets, CSV / PMLB-format loading, splits, folds, accuracy.
//! - [`learners`]: native classifiers (softmax regression, one-hidden-layer
//!   MLP, CART, kNN, Gaussian naive Bayes).
//! - [`operators`]: operator catalog, hyperparameter spaces, template strings.
//! - [`pipeline`]: the pipeline-tree genome, execution, export/import.
//! - [`evolve`]: population initialization, variation, NSGA-II survival.
//! - [`harness`]: experiment runner, grid runner, result files, reports.

pub mod data;
pub mod error;
pub mod evolve;
pub mod harness;
pub mod learners;
pub mod matrix;
pub mod operators;
pub mod pipeline;
pub mod seed;

pub use error::{Error, Result};
pub use matrix::Matrix;
