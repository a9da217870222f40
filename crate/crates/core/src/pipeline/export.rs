use std::fmt::Write;

use super::tree::{Node, PipelineTree};
use crate::error::{Error, Result};
use crate::learners::{HpValue, Hyperparameters};
use crate::operators::{OperatorInstance, Registry};

pub const EXPORT_HEADER: &str = "evopipe-export v1";
const FORMAT_NAME: &str = "evopipe-export";
const INDENT: &str = "  ";

/// Run information stored alongside an exported tree.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExportMetadata {
    pub cv_score: Option<f64>,
    pub dataset: Option<String>,
    pub seed: Option<u64>,
}

/// Serialises a tree and its metadata.
///
/// The artifact has four sections: metadata (sorted keys), the node block
/// that [`import_pipeline`] reads back, a rendered pseudo-script for human
/// readers, and an end marker. Reals are written with 17 significant digits,
/// so `export(import(text)) == text` for every exported artifact.
pub fn export_pipeline(tree: &PipelineTree, meta: &ExportMetadata) -> String {
    let mut s = String::new();
    s.push_str(EXPORT_HEADER);
    s.push_str("\n[metadata]\n");
    match meta.cv_score {
        Some(v) => writeln!(s, "cv_score = {}", HpValue::Real(v)),
        None => writeln!(s, "cv_score = none"),
    }
    .unwrap();
    match &meta.dataset {
        Some(d) => writeln!(s, "dataset = {}", HpValue::Cat(d.clone())),
        None => writeln!(s, "dataset = none"),
    }
    .unwrap();
    match meta.seed {
        Some(v) => writeln!(s, "seed = {v}"),
        None => writeln!(s, "seed = none"),
    }
    .unwrap();
    s.push_str("[tree]\n");
    s.push_str(&tree_block(tree));
    s.push_str("[script]\n");
    s.push_str(&render_script(tree, meta.cv_score));
    s.push_str("[end]\n");
    s
}

impl PipelineTree {
    /// The node block of the export format; equal trees give equal text.
    pub fn canonical_text(&self) -> String {
        tree_block(self)
    }
}

fn tree_block(tree: &PipelineTree) -> String {
    fn go(n: &Node, depth: usize, out: &mut String) {
        for _ in 0..depth {
            out.push_str(INDENT);
        }
        out.push_str(n.label());
        if let Some(op) = n.op() {
            out.push(' ');
            out.push_str(&op.spec_name);
            for (k, v) in op.hp.iter() {
                write!(out, " {k}={v}").unwrap();
            }
        }
        out.push('\n');
        for c in n.children() {
            go(c, depth + 1, out);
        }
    }
    let mut out = String::new();
    go(tree.root(), 0, &mut out);
    out
}

enum Expr {
    Atom(String),
    Call(&'static str, Vec<Expr>),
}

fn call_text(op: &OperatorInstance) -> String {
    let args: Vec<String> = op
        .hp
        .iter()
        .map(|(k, v)| match v {
            HpValue::Real(r) => format!("{k}={r:?}"),
            other => format!("{k}={other}"),
        })
        .collect();
    format!("{}({})", op.spec_name, args.join(", "))
}

fn steps(n: &Node) -> Vec<Expr> {
    let mut out = match n {
        Node::Source => return Vec::new(),
        Node::Union { children } => {
            let branches = children.iter().map(|c| branch(steps(c))).collect();
            return vec![Expr::Call("make_union", branches)];
        }
        other => steps(&other.children()[0]),
    };
    out.push(Expr::Atom(match n {
        Node::Identity { .. } => "FunctionTransformer(copy)".to_string(),
        Node::Stack { op, .. } => format!("StackingEstimator(estimator={})", call_text(op)),
        other => call_text(other.op().expect("operator node")),
    }));
    out
}

fn branch(mut steps: Vec<Expr>) -> Expr {
    match steps.len() {
        0 => Expr::Atom("FunctionTransformer(copy)".to_string()),
        1 => steps.pop().unwrap(),
        _ => Expr::Call("make_pipeline", steps),
    }
}

fn write_expr(e: &Expr, depth: usize, out: &mut String) {
    match e {
        Expr::Atom(a) => out.push_str(a),
        Expr::Call(name, args) => {
            out.push_str(name);
            out.push_str("(\n");
            for (i, a) in args.iter().enumerate() {
                out.push_str(&"    ".repeat(depth + 1));
                write_expr(a, depth + 1, out);
                if i + 1 < args.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&"    ".repeat(depth));
            out.push(')');
        }
    }
}

/// Human-readable pseudo-script for the tree, in the style of a
/// scikit-learn `make_pipeline` expression.
pub fn render_script(tree: &PipelineTree, cv_score: Option<f64>) -> String {
    let mut s = String::new();
    if let Some(v) = cv_score {
        writeln!(s, "# Average CV score on the training set was: {v}").unwrap();
    }
    let mut body = steps(&tree.root().children()[0]);
    body.push(Expr::Atom(call_text(tree.root_op())));
    let expr = branch(body);
    s.push_str("exported_pipeline = ");
    write_expr(&expr, 0, &mut s);
    s.push('\n');
    s
}

fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Import {
        line,
        column,
        message: message.into(),
    }
}

/// Parses an exported artifact and validates the tree against `registry`.
pub fn import_pipeline(text: &str, registry: &Registry) -> Result<(PipelineTree, ExportMetadata)> {
    let lines: Vec<&str> = text.lines().collect();
    let mut at = 0;
    let header = lines.first().copied().unwrap_or("");
    match header.strip_prefix(FORMAT_NAME) {
        Some(rest) if rest.trim() == "v1" => {}
        Some(rest) if rest.trim().starts_with('v') => {
            return Err(Error::Version(format!("{FORMAT_NAME} {}", rest.trim())))
        }
        _ => return Err(err(1, 1, format!("expected header '{EXPORT_HEADER}'"))),
    }
    at += 1;
    expect_line(&lines, at, "[metadata]")?;
    at += 1;

    let mut meta = ExportMetadata::default();
    let mut seen: Vec<&str> = Vec::new();
    while at < lines.len() && lines[at] != "[tree]" {
        let line_no = at + 1;
        let line = lines[at];
        let Some((key, value)) = line.split_once(" = ") else {
            return Err(err(line_no, 1, "expected 'key = value'"));
        };
        if seen.contains(&key) {
            return Err(err(line_no, 1, format!("duplicate metadata key '{key}'")));
        }
        seen.push(key);
        let vcol = key.chars().count() + 4;
        let none = value == "none";
        match key {
            "cv_score" if !none => {
                meta.cv_score = Some(
                    value
                        .parse::<f64>()
                        .map_err(|_| err(line_no, vcol, format!("invalid cv_score '{value}'")))?,
                )
            }
            "dataset" if !none => match parse_value(value, line_no, vcol)? {
                HpValue::Cat(d) => meta.dataset = Some(d),
                _ => return Err(err(line_no, vcol, "dataset must be a quoted string")),
            },
            "seed" if !none => {
                meta.seed = Some(
                    value
                        .parse::<u64>()
                        .map_err(|_| err(line_no, vcol, format!("invalid seed '{value}'")))?,
                )
            }
            "cv_score" | "dataset" | "seed" => {}
            other => return Err(err(line_no, 1, format!("unknown metadata key '{other}'"))),
        }
        at += 1;
    }
    expect_line(&lines, at, "[tree]")?;
    at += 1;

    let tree_start = at;
    while at < lines.len() && lines[at] != "[script]" {
        at += 1;
    }
    let tree_lines: Vec<(usize, &str)> = (tree_start..at).map(|i| (i + 1, lines[i])).collect();
    expect_line(&lines, at, "[script]")?;
    at += 1;
    while at < lines.len() && lines[at] != "[end]" {
        at += 1;
    }
    expect_line(&lines, at, "[end]")?;
    at += 1;
    if let Some(extra) = (at..lines.len()).find(|&i| !lines[i].trim().is_empty()) {
        return Err(err(extra + 1, 1, "content after [end]"));
    }

    if tree_lines.is_empty() {
        return Err(err(tree_start + 1, 1, "empty node block"));
    }
    let mut pos = 0;
    let root = parse_node(&tree_lines, &mut pos, 0, registry)?;
    if pos < tree_lines.len() {
        let (line_no, _) = tree_lines[pos];
        return Err(err(line_no, 1, "more than one root node"));
    }
    let tree = PipelineTree::new(root);
    tree.validate(registry)?;
    Ok((tree, meta))
}

fn expect_line(lines: &[&str], at: usize, want: &str) -> Result<()> {
    match lines.get(at) {
        Some(l) if *l == want => Ok(()),
        Some(l) => Err(err(at + 1, 1, format!("expected '{want}', found '{l}'"))),
        None => Err(err(
            at + 1,
            1,
            format!("unexpected end of input, expected '{want}'"),
        )),
    }
}

fn indent_of(line: &str, line_no: usize) -> Result<usize> {
    let spaces = line.len() - line.trim_start_matches(' ').len();
    if !spaces.is_multiple_of(INDENT.len()) || line[spaces..].starts_with('\t') {
        return Err(err(
            line_no,
            spaces + 1,
            "indentation must be a multiple of two spaces",
        ));
    }
    Ok(spaces / INDENT.len())
}

fn parse_node(
    lines: &[(usize, &str)],
    pos: &mut usize,
    depth: usize,
    registry: &Registry,
) -> Result<Node> {
    let (line_no, line) = lines[*pos];
    let indent = indent_of(line, line_no)?;
    if indent != depth {
        return Err(err(
            line_no,
            1,
            format!("expected indentation level {depth}, found {indent}"),
        ));
    }
    *pos += 1;
    let body = &line[indent * INDENT.len()..];
    let col0 = indent * INDENT.len() + 1;
    let (label, rest) = body.split_once(' ').unwrap_or((body, ""));

    let needs_op = matches!(label, "Classifier" | "Selector" | "Transformer" | "Stack");
    let op = if needs_op {
        let op_col = col0 + label.len() + 1;
        let (name, params) = rest.split_once(' ').unwrap_or((rest, ""));
        if name.is_empty() {
            return Err(err(
                line_no,
                op_col,
                format!("{label} node needs an operator name"),
            ));
        }
        if registry.get(name).is_none() {
            return Err(err(line_no, op_col, format!("unknown operator '{name}'")));
        }
        let hp = parse_params(params, line_no, op_col + name.len() + 1)?;
        Some(OperatorInstance::new(name, hp))
    } else {
        if !rest.is_empty() {
            return Err(err(
                line_no,
                col0 + label.len() + 1,
                format!("{label} node takes no operator"),
            ));
        }
        None
    };

    let mut children = Vec::new();
    while *pos < lines.len() {
        let (l_no, l) = lines[*pos];
        let child_indent = indent_of(l, l_no)?;
        if child_indent <= depth {
            break;
        }
        children.push(parse_node(lines, pos, depth + 1, registry)?);
    }
    let arity_err = |want: &str, has: usize| {
        err(
            line_no,
            col0,
            format!("{label} node needs {want}, has {has}"),
        )
    };
    let one_child = |mut children: Vec<Node>| -> Result<Node> {
        if children.len() != 1 {
            return Err(arity_err("exactly one child", children.len()));
        }
        Ok(children.pop().unwrap())
    };
    Ok(match label {
        "Source" => {
            if !children.is_empty() {
                return Err(arity_err("no children", children.len()));
            }
            Node::Source
        }
        "Union" => {
            if children.is_empty() {
                return Err(arity_err("at least one child", 0));
            }
            Node::union(children)
        }
        "Identity" => Node::identity(one_child(children)?),
        "Selector" => Node::selector(op.unwrap(), one_child(children)?),
        "Transformer" => Node::transformer(op.unwrap(), one_child(children)?),
        "Stack" => Node::stack(op.unwrap(), one_child(children)?),
        "Classifier" => Node::classifier(op.unwrap(), one_child(children)?),
        other => return Err(err(line_no, col0, format!("unknown node kind '{other}'"))),
    })
}

fn parse_params(s: &str, line_no: usize, col0: usize) -> Result<Hyperparameters> {
    let mut hp = Hyperparameters::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let start = i;
        let eq = (i..chars.len())
            .find(|&j| chars[j] == '=' || chars[j] == ' ')
            .filter(|&j| chars[j] == '=')
            .ok_or_else(|| err(line_no, col0 + start, "expected 'name=value'"))?;
        let key: String = chars[start..eq].iter().collect();
        if key.is_empty() {
            return Err(err(line_no, col0 + start, "empty parameter name"));
        }
        let vstart = eq + 1;
        let vend = if chars.get(vstart) == Some(&'"') {
            let close = (vstart + 1..chars.len())
                .find(|&j| chars[j] == '"')
                .ok_or_else(|| err(line_no, col0 + vstart, "unterminated string"))?;
            close + 1
        } else {
            (vstart..chars.len())
                .find(|&j| chars[j] == ' ')
                .unwrap_or(chars.len())
        };
        let raw: String = chars[vstart..vend].iter().collect();
        let value = parse_value(&raw, line_no, col0 + vstart)?;
        if hp.get(&key).is_some() {
            return Err(err(
                line_no,
                col0 + start,
                format!("duplicate parameter '{key}'"),
            ));
        }
        hp.insert(key, value);
        i = vend;
        if i < chars.len() {
            if chars[i] != ' ' {
                return Err(err(
                    line_no,
                    col0 + i,
                    "expected a space between parameters",
                ));
            }
            i += 1;
        }
    }
    Ok(hp)
}

fn parse_value(raw: &str, line_no: usize, col: usize) -> Result<HpValue> {
    if let Some(inner) = raw.strip_prefix('"') {
        return match inner.strip_suffix('"') {
            Some(v) if !v.contains('"') => Ok(HpValue::Cat(v.to_string())),
            _ => Err(err(line_no, col, format!("malformed string {raw}"))),
        };
    }
    let is_int = !raw.is_empty()
        && raw
            .strip_prefix('-')
            .unwrap_or(raw)
            .chars()
            .all(|c| c.is_ascii_digit());
    if is_int {
        return raw
            .parse::<i64>()
            .map(HpValue::Int)
            .map_err(|_| err(line_no, col, format!("integer out of range '{raw}'")));
    }
    raw.parse::<f64>()
        .map(HpValue::Real)
        .map_err(|_| err(line_no, col, format!("invalid value '{raw}'")))
}
