use rand::seq::IndexedRandom;
use rand::Rng;

use super::GpConfig;
use crate::error::{Error, Result};
use crate::evolve::Individual;
use crate::operators::{
    sample_with, OperatorClass, OperatorInstance, OperatorSpec, Registry, Slot, TemplateConstraint,
};
use crate::pipeline::{Node, NodePath, PipelineTree, MAX_DEPTH, MAX_NODES};
use crate::seed;

const TAG_INIT: u64 = 1;

/// Candidate specs for template slot `i`.
fn slot_candidates<'a>(
    t: &TemplateConstraint,
    i: usize,
    registry: &'a Registry,
) -> Vec<&'a OperatorSpec> {
    let last = i + 1 == t.len();
    let slot = &t.slots()[i];
    registry
        .specs()
        .iter()
        .filter(|s| slot.admits(s.class(), s.name()))
        .filter(|s| match s.class() {
            OperatorClass::Classifier => last,
            OperatorClass::Selector | OperatorClass::Transformer => !last,
            _ => false,
        })
        .collect()
}

pub(crate) fn check_template(t: &TemplateConstraint, registry: &Registry) -> Result<()> {
    for (i, slot) in t.slots().iter().enumerate() {
        if slot_candidates(t, i, registry).is_empty() {
            return Err(Error::Template(format!(
                "slot {} ('{}') has no candidate operators under estimator filter '{}'",
                i + 1,
                slot.token(),
                registry.filter().as_str()
            )));
        }
    }
    Ok(())
}

/// Whether `tree` is a chain whose nodes fill the template's slots in order.
pub fn conforms_to_template(
    tree: &PipelineTree,
    t: &TemplateConstraint,
    registry: &Registry,
) -> bool {
    let class_ok = |op: &OperatorInstance, slot: &Slot| {
        registry
            .get(&op.spec_name)
            .is_some_and(|s| slot.admits(s.class(), s.name()))
    };
    let Some((last, chain)) = t.slots().split_last() else {
        return false;
    };
    let mut node = tree.root();
    match node {
        Node::Classifier { op, child } if class_ok(op, last) => node = child,
        _ => return false,
    }
    for slot in chain.iter().rev() {
        match node {
            Node::Selector { op, child } | Node::Transformer { op, child }
                if class_ok(op, slot) =>
            {
                node = child
            }
            _ => return false,
        }
    }
    matches!(node, Node::Source)
}

fn choose_spec<'a>(specs: &[&'a OperatorSpec], rng: &mut impl Rng) -> &'a OperatorSpec {
    specs.choose(rng).expect("non-empty candidate list")
}

fn specs_of(registry: &Registry, class: OperatorClass) -> Vec<&OperatorSpec> {
    registry.of_class(class).collect()
}

fn wrap(class: OperatorClass, op: OperatorInstance, child: Node) -> Node {
    match class {
        OperatorClass::Selector => Node::selector(op, child),
        OperatorClass::Transformer => Node::transformer(op, child),
        OperatorClass::Classifier => Node::stack(op, child),
        other => unreachable!("{other} nodes carry no operator instance"),
    }
}

fn template_tree(t: &TemplateConstraint, registry: &Registry, rng: &mut impl Rng) -> PipelineTree {
    let mut node = Node::Source;
    for i in 0..t.len() - 1 {
        let spec = choose_spec(&slot_candidates(t, i, registry), rng);
        node = wrap(spec.class(), sample_with(spec, rng), node);
    }
    let spec = choose_spec(&slot_candidates(t, t.len() - 1, registry), rng);
    PipelineTree::new(Node::classifier(sample_with(spec, rng), node))
}

fn grow_node(
    registry: &Registry,
    rng: &mut impl Rng,
    parent_depth: usize,
    budget: &mut usize,
) -> Node {
    if parent_depth >= MAX_DEPTH || *budget == 0 {
        return Node::Source;
    }
    let p_op = 0.6 * 0.65f64.powi(parent_depth as i32 - 1);
    if !rng.random_bool(p_op) {
        return Node::Source;
    }
    *budget -= 1;
    // Selector, Transformer, Stack at weight 2 each; Union at weight 1.
    let pick = rng.random_range(0..7);
    if pick == 6 && *budget >= 1 {
        let a = grow_node(registry, rng, parent_depth + 1, budget);
        let b = grow_node(registry, rng, parent_depth + 1, budget);
        return Node::union(vec![a, b]);
    }
    let class = [
        OperatorClass::Selector,
        OperatorClass::Transformer,
        OperatorClass::Classifier,
    ][pick % 3];
    let spec = choose_spec(&specs_of(registry, class), rng);
    let op = sample_with(spec, rng);
    let child = grow_node(registry, rng, parent_depth + 1, budget);
    wrap(class, op, child)
}

fn grow_tree(registry: &Registry, rng: &mut impl Rng) -> PipelineTree {
    let spec = choose_spec(&specs_of(registry, OperatorClass::Classifier), rng);
    let op = sample_with(spec, rng);
    let mut budget = MAX_NODES - 1;
    let child = grow_node(registry, rng, 1, &mut budget);
    PipelineTree::new(Node::classifier(op, child))
}

/// Seeded initial population: grown trees, template chains, or lone root
/// classifiers depending on the configuration.
pub fn init_population(cfg: &GpConfig) -> Result<Vec<Individual>> {
    cfg.validate()?;
    let reg = &cfg.registry;
    let pop = (0..cfg.population_size)
        .map(|i| {
            let mut rng = seed::rng(seed::derive(cfg.seed, &[TAG_INIT, i as u64]));
            let tree = if cfg.single_estimator_mode {
                let spec = choose_spec(&specs_of(reg, OperatorClass::Classifier), &mut rng);
                PipelineTree::single(sample_with(spec, &mut rng))
            } else if let Some(t) = &cfg.template {
                template_tree(t, reg, &mut rng)
            } else {
                grow_tree(reg, &mut rng)
            };
            debug_assert!(tree.is_valid(reg), "{tree:?}");
            Individual::new(tree, 0)
        })
        .collect();
    Ok(pop)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutationKind {
    /// Redraw one hyperparameter of one node.
    Resample,
    /// Swap one operator for another of the same class.
    Replace,
    /// Add a Selector, Transformer or Stack above an edge.
    Insert,
    /// Remove one non-root unary node.
    Shrink,
}

fn op_paths(tree: &PipelineTree) -> Vec<NodePath> {
    tree.nodes()
        .into_iter()
        .filter(|(_, n)| n.op().is_some())
        .map(|(p, _)| p)
        .collect()
}

fn resample_sites(tree: &PipelineTree, registry: &Registry) -> Vec<NodePath> {
    tree.nodes()
        .into_iter()
        .filter(|(_, n)| {
            n.op().is_some_and(|op| {
                registry
                    .get(&op.spec_name)
                    .is_some_and(OperatorSpec::has_params)
            })
        })
        .map(|(p, _)| p)
        .collect()
}

/// Specs that may replace the operator at `path`.
fn replacement_specs<'a>(
    tree: &PipelineTree,
    path: &[usize],
    cfg: &'a GpConfig,
) -> Vec<&'a OperatorSpec> {
    let reg = &cfg.registry;
    if let Some(t) = &cfg.template {
        // Chain trees only: the node `path.len()` levels below the root fills
        // slot `len - 1 - path.len()`.
        return match (t.len() - 1).checked_sub(path.len()) {
            Some(i) => slot_candidates(t, i, reg),
            None => Vec::new(),
        };
    }
    let class = match tree.get(path) {
        Some(Node::Selector { .. }) => OperatorClass::Selector,
        Some(Node::Transformer { .. }) => OperatorClass::Transformer,
        Some(Node::Stack { .. } | Node::Classifier { .. }) => OperatorClass::Classifier,
        _ => return Vec::new(),
    };
    specs_of(reg, class)
}

fn insert_sites(tree: &PipelineTree, cfg: &GpConfig) -> Vec<NodePath> {
    if cfg.structure_fixed() || tree.node_count() >= MAX_NODES {
        return Vec::new();
    }
    tree.nodes()
        .into_iter()
        .filter(|(p, _)| !p.is_empty())
        .filter(|(p, n)| {
            // Bounds do not depend on which operator is inserted.
            let probe = Node::identity((*n).clone());
            tree.replace(p, probe)
                .is_some_and(|t| t.max_depth() <= MAX_DEPTH)
        })
        .map(|(p, _)| p)
        .collect()
}

fn shrink_sites(tree: &PipelineTree, cfg: &GpConfig) -> Vec<NodePath> {
    if cfg.structure_fixed() {
        return Vec::new();
    }
    tree.nodes()
        .into_iter()
        .filter(|(p, n)| !p.is_empty() && n.is_unary())
        .map(|(p, _)| p)
        .collect()
}

/// Mutation kinds that can change `tree` without breaking bounds or the template.
pub fn applicable_mutations(tree: &PipelineTree, cfg: &GpConfig) -> Vec<MutationKind> {
    let mut kinds = Vec::new();
    if !resample_sites(tree, &cfg.registry).is_empty() {
        kinds.push(MutationKind::Resample);
    }
    if op_paths(tree)
        .iter()
        .any(|p| !replacement_specs(tree, p, cfg).is_empty())
    {
        kinds.push(MutationKind::Replace);
    }
    if !insert_sites(tree, cfg).is_empty() {
        kinds.push(MutationKind::Insert);
    }
    if !shrink_sites(tree, cfg).is_empty() {
        kinds.push(MutationKind::Shrink);
    }
    kinds
}

/// Applies one mutation drawn uniformly from the applicable kinds. Returns
/// the tree unchanged when none applies.
pub fn mutate(tree: &PipelineTree, cfg: &GpConfig, rng_seed: u64) -> PipelineTree {
    let mut rng = seed::rng(rng_seed);
    let kinds = applicable_mutations(tree, cfg);
    let Some(&kind) = kinds.choose(&mut rng) else {
        return tree.clone();
    };
    mutate_with(tree, cfg, kind, &mut rng)
}

pub(crate) fn mutate_with(
    tree: &PipelineTree,
    cfg: &GpConfig,
    kind: MutationKind,
    rng: &mut impl Rng,
) -> PipelineTree {
    let reg = &cfg.registry;
    let mut out = tree.clone();
    match kind {
        MutationKind::Resample => {
            let sites = resample_sites(tree, reg);
            let path = sites.choose(rng).expect("applicable");
            let node = out.get_mut(path).expect("path from this tree");
            let op = node.op_mut().expect("operator node");
            let spec = reg.get(&op.spec_name).expect("validated operator");
            let keys: Vec<&String> = spec.space().keys().collect();
            let key = *keys.choose(rng).expect("spec has params");
            op.hp.insert(key.clone(), spec.space()[key].sample(rng));
        }
        MutationKind::Replace => {
            let sites: Vec<NodePath> = op_paths(tree)
                .into_iter()
                .filter(|p| !replacement_specs(tree, p, cfg).is_empty())
                .collect();
            let path = sites.choose(rng).expect("applicable");
            let spec = choose_spec(&replacement_specs(tree, path, cfg), rng);
            let new_op = sample_with(spec, rng);
            let node = out.get_mut(path).expect("path from this tree");
            let class = spec.class();
            let is_root = matches!(node, Node::Classifier { .. });
            let child = node.children()[0].clone();
            *node = if is_root {
                Node::classifier(new_op, child)
            } else {
                wrap(class, new_op, child)
            };
        }
        MutationKind::Insert => {
            let sites = insert_sites(tree, cfg);
            let path = sites.choose(rng).expect("applicable");
            let class = *[
                OperatorClass::Selector,
                OperatorClass::Transformer,
                OperatorClass::Classifier,
            ]
            .choose(rng)
            .unwrap();
            let spec = choose_spec(&specs_of(reg, class), rng);
            let op = sample_with(spec, rng);
            let below = tree.get(path).expect("path from this tree").clone();
            out = tree
                .replace(path, wrap(class, op, below))
                .expect("path from this tree");
        }
        MutationKind::Shrink => {
            let sites = shrink_sites(tree, cfg);
            let path = sites.choose(rng).expect("applicable");
            let child = tree.get(path).expect("path from this tree").children()[0].clone();
            out = tree.replace(path, child).expect("path from this tree");
        }
    }
    out
}

fn offspring_ok(tree: &PipelineTree, cfg: &GpConfig) -> bool {
    tree.is_valid(&cfg.registry)
        && cfg
            .template
            .as_ref()
            .is_none_or(|t| conforms_to_template(tree, t, &cfg.registry))
}

/// Grafts a subtree of `b` into a copy of `a` at a node of the same class.
/// Falls back to `mutate(a)` when no compatible pair keeps the tree valid.
pub fn crossover(
    a: &PipelineTree,
    b: &PipelineTree,
    cfg: &GpConfig,
    rng_seed: u64,
) -> PipelineTree {
    let mut rng = seed::rng(rng_seed);
    let inner = |t: &PipelineTree| -> Vec<(NodePath, Node)> {
        t.nodes()
            .into_iter()
            .filter(|(p, n)| !p.is_empty() && !matches!(n, Node::Source))
            .map(|(p, n)| (p, n.clone()))
            .collect()
    };
    let donors = inner(b);
    let mut options: Vec<(NodePath, Vec<PipelineTree>)> = Vec::new();
    for (pa, na) in inner(a) {
        let grafts: Vec<PipelineTree> = donors
            .iter()
            .filter(|(_, nb)| nb.class() == na.class())
            .filter_map(|(_, nb)| a.replace(&pa, nb.clone()))
            .filter(|t| offspring_ok(t, cfg))
            .collect();
        if !grafts.is_empty() {
            options.push((pa, grafts));
        }
    }
    match options.choose(&mut rng) {
        Some((_, grafts)) => grafts.choose(&mut rng).expect("non-empty").clone(),
        None => mutate(a, cfg, seed::derive(rng_seed, &[1])),
    }
}
