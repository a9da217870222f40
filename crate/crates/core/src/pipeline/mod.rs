//! The pipeline-tree genome.
//!
//! Data enters at [`Node::Source`] leaves and flows towards the root
//! classifier. Each node fits on its child's transformed training output;
//! [`Node::Union`] concatenates its branches column-wise.

mod exec;
mod export;
mod tree;

pub use exec::{
    cv_report, cv_score, fit_pipeline, fit_pipeline_until, predict_pipeline, CvReport,
    FittedPipeline,
};
pub use export::{export_pipeline, import_pipeline, render_script, ExportMetadata, EXPORT_HEADER};
pub use tree::{make_residual_block_tree, Node, NodePath, PipelineTree, MAX_DEPTH, MAX_NODES};
