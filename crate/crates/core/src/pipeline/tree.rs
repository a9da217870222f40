use std::fmt::Write;

use crate::error::{Error, Result};
use crate::learners::Hyperparameters;
use crate::operators::{OperatorClass, OperatorInstance, Registry};

pub const MAX_NODES: usize = 10;
pub const MAX_DEPTH: usize = 5;

/// Child indices from the root. Rendered as `0`, `0.1`, `0.1.0`, ...
pub type NodePath = Vec<usize>;

pub(crate) fn path_string(path: &[usize]) -> String {
    let mut s = String::from("0");
    for i in path {
        let _ = write!(s, ".{i}");
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Source,
    Selector {
        op: OperatorInstance,
        child: Box<Node>,
    },
    Transformer {
        op: OperatorInstance,
        child: Box<Node>,
    },
    Identity {
        child: Box<Node>,
    },
    /// Stacking wrapper around a classifier operator.
    Stack {
        op: OperatorInstance,
        child: Box<Node>,
    },
    Union {
        children: Vec<Node>,
    },
    /// Root only.
    Classifier {
        op: OperatorInstance,
        child: Box<Node>,
    },
}

impl Node {
    pub fn source() -> Node {
        Node::Source
    }

    pub fn selector(op: OperatorInstance, child: Node) -> Node {
        Node::Selector {
            op,
            child: Box::new(child),
        }
    }

    pub fn transformer(op: OperatorInstance, child: Node) -> Node {
        Node::Transformer {
            op,
            child: Box::new(child),
        }
    }

    pub fn identity(child: Node) -> Node {
        Node::Identity {
            child: Box::new(child),
        }
    }

    pub fn stack(op: OperatorInstance, child: Node) -> Node {
        Node::Stack {
            op,
            child: Box::new(child),
        }
    }

    pub fn union(children: Vec<Node>) -> Node {
        Node::Union { children }
    }

    pub fn classifier(op: OperatorInstance, child: Node) -> Node {
        Node::Classifier {
            op,
            child: Box::new(child),
        }
    }

    /// `None` for sources.
    pub fn class(&self) -> Option<OperatorClass> {
        Some(match self {
            Node::Source => return None,
            Node::Selector { .. } => OperatorClass::Selector,
            Node::Transformer { .. } => OperatorClass::Transformer,
            Node::Identity { .. } => OperatorClass::Identity,
            Node::Stack { .. } => OperatorClass::StackingWrapper,
            Node::Union { .. } => OperatorClass::Combiner,
            Node::Classifier { .. } => OperatorClass::Classifier,
        })
    }

    pub fn op(&self) -> Option<&OperatorInstance> {
        match self {
            Node::Selector { op, .. }
            | Node::Transformer { op, .. }
            | Node::Stack { op, .. }
            | Node::Classifier { op, .. } => Some(op),
            _ => None,
        }
    }

    pub fn op_mut(&mut self) -> Option<&mut OperatorInstance> {
        match self {
            Node::Selector { op, .. }
            | Node::Transformer { op, .. }
            | Node::Stack { op, .. }
            | Node::Classifier { op, .. } => Some(op),
            _ => None,
        }
    }

    pub fn children(&self) -> &[Node] {
        match self {
            Node::Source => &[],
            Node::Selector { child, .. }
            | Node::Transformer { child, .. }
            | Node::Identity { child }
            | Node::Stack { child, .. }
            | Node::Classifier { child, .. } => std::slice::from_ref(child.as_ref()),
            Node::Union { children } => children,
        }
    }

    pub fn children_mut(&mut self) -> &mut [Node] {
        match self {
            Node::Source => &mut [],
            Node::Selector { child, .. }
            | Node::Transformer { child, .. }
            | Node::Identity { child }
            | Node::Stack { child, .. }
            | Node::Classifier { child, .. } => std::slice::from_mut(child.as_mut()),
            Node::Union { children } => children,
        }
    }

    pub fn is_unary(&self) -> bool {
        matches!(
            self,
            Node::Selector { .. }
                | Node::Transformer { .. }
                | Node::Identity { .. }
                | Node::Stack { .. }
        )
    }

    /// Operator nodes in this subtree (sources excluded).
    pub fn count(&self) -> usize {
        let own = usize::from(!matches!(self, Node::Source));
        own + self.children().iter().map(Node::count).sum::<usize>()
    }

    /// Operator-node levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            Node::Source => 0,
            n => 1 + n.children().iter().map(Node::depth).max().unwrap_or(0),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Node::Source => "Source",
            Node::Selector { .. } => "Selector",
            Node::Transformer { .. } => "Transformer",
            Node::Identity { .. } => "Identity",
            Node::Stack { .. } => "Stack",
            Node::Union { .. } => "Union",
            Node::Classifier { .. } => "Classifier",
        }
    }
}

/// A pipeline tree whose root is a [`Node::Classifier`].
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineTree {
    root: Node,
}

impl PipelineTree {
    /// Wraps a root node without validating it; see [`PipelineTree::validate`].
    pub fn new(root: Node) -> Self {
        PipelineTree { root }
    }

    /// The one-node pipeline `Classifier(Source)`.
    pub fn single(op: OperatorInstance) -> Self {
        PipelineTree::new(Node::classifier(op, Node::Source))
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn into_root(self) -> Node {
        self.root
    }

    pub fn node_count(&self) -> usize {
        self.root.count()
    }

    pub fn max_depth(&self) -> usize {
        self.root.depth()
    }

    /// Operator-node count; identity nodes count, a union counts once.
    pub fn complexity(&self) -> usize {
        self.node_count()
    }

    pub fn root_op(&self) -> &OperatorInstance {
        self.root.op().expect("root is a classifier")
    }

    /// All nodes with their paths, pre-order, sources included.
    pub fn nodes(&self) -> Vec<(NodePath, &Node)> {
        fn go<'a>(n: &'a Node, path: &mut NodePath, out: &mut Vec<(NodePath, &'a Node)>) {
            out.push((path.clone(), n));
            for (i, c) in n.children().iter().enumerate() {
                path.push(i);
                go(c, path, out);
                path.pop();
            }
        }
        let mut out = Vec::new();
        go(&self.root, &mut Vec::new(), &mut out);
        out
    }

    pub fn get(&self, path: &[usize]) -> Option<&Node> {
        path.iter()
            .try_fold(&self.root, |n, &i| n.children().get(i))
    }

    pub fn get_mut(&mut self, path: &[usize]) -> Option<&mut Node> {
        path.iter()
            .try_fold(&mut self.root, |n, &i| n.children_mut().get_mut(i))
    }

    /// Copy with the subtree at `path` replaced.
    pub fn replace(&self, path: &[usize], subtree: Node) -> Option<PipelineTree> {
        let mut t = self.clone();
        *t.get_mut(path)? = subtree;
        Some(t)
    }

    /// Checks structure, operator classes, hyperparameter spaces and the size
    /// and depth bounds. Reports the first violating node.
    pub fn validate(&self, registry: &Registry) -> Result<()> {
        if !matches!(self.root, Node::Classifier { .. }) {
            return Err(violation(&[], "root must be a classifier"));
        }
        validate_node(&self.root, &mut Vec::new(), registry)?;
        if self.node_count() > MAX_NODES {
            return Err(violation(
                &[],
                format!(
                    "{} operator nodes exceed the bound of {MAX_NODES}",
                    self.node_count()
                ),
            ));
        }
        if self.max_depth() > MAX_DEPTH {
            return Err(violation(
                &[],
                format!(
                    "depth {} exceeds the bound of {MAX_DEPTH}",
                    self.max_depth()
                ),
            ));
        }
        Ok(())
    }

    pub fn is_valid(&self, registry: &Registry) -> bool {
        self.validate(registry).is_ok()
    }
}

fn violation(path: &[usize], message: impl Into<String>) -> Error {
    Error::Validation {
        path: path_string(path),
        message: message.into(),
    }
}

fn validate_node(n: &Node, path: &mut NodePath, registry: &Registry) -> Result<()> {
    let expect = |want: OperatorClass, op: &OperatorInstance, path: &[usize]| -> Result<()> {
        let spec = registry
            .get(&op.spec_name)
            .ok_or_else(|| violation(path, format!("unknown operator '{}'", op.spec_name)))?;
        if spec.class() != want {
            return Err(violation(
                path,
                format!(
                    "'{}' is a {}, expected a {want}",
                    op.spec_name,
                    spec.class()
                ),
            ));
        }
        spec.check(&op.hp)
            .map_err(|e| violation(path, e.to_string()))
    };
    match n {
        Node::Source => {}
        Node::Selector { op, .. } => expect(OperatorClass::Selector, op, path)?,
        Node::Transformer { op, .. } => expect(OperatorClass::Transformer, op, path)?,
        Node::Stack { op, .. } => expect(OperatorClass::Classifier, op, path)?,
        Node::Classifier { op, .. } => {
            if !path.is_empty() {
                return Err(violation(path, "classifier below the root (use Stack)"));
            }
            expect(OperatorClass::Classifier, op, path)?
        }
        Node::Identity { .. } => {}
        Node::Union { children } => {
            if children.len() < 2 {
                return Err(violation(
                    path,
                    format!("union needs >= 2 branches, has {}", children.len()),
                ));
            }
        }
    }
    for (i, c) in n.children().iter().enumerate() {
        path.push(i);
        validate_node(c, path, registry)?;
        path.pop();
    }
    Ok(())
}

/// `Classifier(LR4, Union[Stack(LR3, Stack(LR2, Stack(LR1, Source))), Identity(Source)])`:
/// a chain of stacked logistic layers merged with a skip branch.
pub fn make_residual_block_tree(lr_hp: [Hyperparameters; 4]) -> PipelineTree {
    let [h1, h2, h3, h4] = lr_hp;
    let lr = |hp| OperatorInstance::new("LogisticRegressionNN", hp);
    let chain = Node::stack(
        lr(h3),
        Node::stack(lr(h2), Node::stack(lr(h1), Node::Source)),
    );
    let skip = Node::identity(Node::Source);
    PipelineTree::new(Node::classifier(lr(h4), Node::union(vec![chain, skip])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::HpValue;
    use crate::operators::{default_registry, EstimatorFilter};

    fn reg() -> Registry {
        default_registry(true, EstimatorFilter::All).unwrap()
    }

    fn gnb() -> OperatorInstance {
        OperatorInstance::new("GaussianNB", Hyperparameters::new())
    }

    fn scaler() -> OperatorInstance {
        OperatorInstance::new("StandardScaler", Hyperparameters::new())
    }

    pub(crate) fn lr_hp() -> Hyperparameters {
        Hyperparameters::new()
            .with("batch", HpValue::Cat("full".into()))
            .with("epochs", HpValue::Int(50))
            .with("l2", HpValue::Real(0.0))
            .with("lr", HpValue::Real(0.1))
    }

    #[test]
    fn minimal_is_valid() {
        let t = PipelineTree::single(gnb());
        t.validate(&reg()).unwrap();
        assert_eq!(t.complexity(), 1);
        assert_eq!(t.max_depth(), 1);
    }

    #[test]
    fn union_arity() {
        let t = PipelineTree::new(Node::classifier(gnb(), Node::union(vec![Node::Source])));
        match t.validate(&reg()) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "0.0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn size_bound() {
        let mut n = Node::Source;
        for _ in 0..5 {
            n = Node::transformer(scaler(), n);
        }
        let mut m = Node::Source;
        for _ in 0..4 {
            m = Node::transformer(scaler(), m);
        }
        // 5 + 4 + union + root = 11
        let t = PipelineTree::new(Node::classifier(gnb(), Node::union(vec![n.clone(), m])));
        assert_eq!(t.node_count(), 11);
        assert!(t.validate(&reg()).is_err());
        let deep = PipelineTree::new(Node::classifier(gnb(), n));
        assert_eq!(deep.max_depth(), 6);
        assert!(deep.validate(&reg()).is_err());
    }

    #[test]
    fn wrong_classes_rejected() {
        let t = PipelineTree::new(Node::classifier(
            gnb(),
            Node::selector(scaler(), Node::Source),
        ));
        assert!(t.validate(&reg()).is_err());
        let t = PipelineTree::new(Node::transformer(scaler(), Node::Source));
        assert!(t.validate(&reg()).is_err());
        let t = PipelineTree::new(Node::classifier(
            gnb(),
            Node::classifier(gnb(), Node::Source),
        ));
        assert!(t.validate(&reg()).is_err());
        let unknown = OperatorInstance::new("Bogus", Hyperparameters::new());
        match PipelineTree::single(unknown).validate(&reg()) {
            Err(Error::Validation { message, .. }) => assert!(message.contains("Bogus")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn residual_block_shape() {
        let t = make_residual_block_tree([lr_hp(), lr_hp(), lr_hp(), lr_hp()]);
        t.validate(&reg()).unwrap();
        // 3 Stack + Identity + Union + root
        assert_eq!(t.complexity(), 6);
        assert_eq!(t.max_depth(), 5);
    }

    #[test]
    fn complexity_additive_and_increment() {
        let t = make_residual_block_tree([lr_hp(), lr_hp(), lr_hp(), lr_hp()]);
        let path = vec![0, 1];
        let old = t.get(&path).unwrap().clone();
        let new = Node::transformer(scaler(), Node::transformer(scaler(), Node::Source));
        let t2 = t.replace(&path, new.clone()).unwrap();
        assert_eq!(t2.complexity(), t.complexity() - old.count() + new.count());

        let t3 = t
            .replace(&[0, 1, 0], Node::transformer(scaler(), Node::Source))
            .unwrap();
        assert_eq!(t3.complexity(), t.complexity() + 1);
    }

    #[test]
    fn paths() {
        let t = make_residual_block_tree([lr_hp(), lr_hp(), lr_hp(), lr_hp()]);
        let nodes = t.nodes();
        assert_eq!(nodes.len(), 8);
        assert_eq!(path_string(&nodes[1].0), "0.0");
        assert!(matches!(t.get(&[0, 1]), Some(Node::Identity { .. })));
    }
}
