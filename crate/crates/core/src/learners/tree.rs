//! CART classification tree: Gini impurity, binary axis-aligned splits at
//! midpoints between consecutive distinct values. Impurity ties go to the
//! lowest feature index, then the lowest threshold.

use crate::matrix::Matrix;

#[derive(Clone, Debug)]
enum Node {
    Leaf(Vec<f64>),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug)]
pub(super) struct Tree {
    nodes: Vec<Node>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    n_classes: usize,
    max_depth: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64)> {
        let n = idx.len();
        let total = self.counts(idx);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = idx.to_vec();
        for f in 0..self.x.cols() {
            sorted.sort_by(|&a, &b| {
                self.x
                    .get(a, f)
                    .total_cmp(&self.x.get(b, f))
                    .then(a.cmp(&b))
            });
            let mut left = vec![0; self.n_classes];
            for pos in 0..n - 1 {
                left[self.y[sorted[pos]]] += 1;
                let v = self.x.get(sorted[pos], f);
                let next = self.x.get(sorted[pos + 1], f);
                if v == next {
                    continue;
                }
                let nl = pos + 1;
                let nr = n - nl;
                let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let score = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                let mut threshold = 0.5 * (v + next);
                if threshold >= next {
                    threshold = v;
                }
                let better = match best {
                    None => true,
                    Some((s, _, _)) => score < s,
                };
                if better {
                    best = Some((score, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let split = if pure || depth >= self.max_depth || idx.len() < 2 {
            None
        } else {
            self.best_split(&idx)
        };
        let id = self.nodes.len();
        match split {
            None => {
                let n = idx.len() as f64;
                self.nodes
                    .push(Node::Leaf(counts.iter().map(|&c| c as f64 / n).collect()));
            }
            Some((feature, threshold)) => {
                self.nodes.push(Node::Leaf(Vec::new()));
                let (l, r): (Vec<usize>, Vec<usize>) = idx
                    .into_iter()
                    .partition(|&i| self.x.get(i, feature) <= threshold);
                let left = self.build(l, depth + 1);
                let right = self.build(r, depth + 1);
                self.nodes[id] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
            }
        }
        id
    }
}

impl Tree {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, max_depth: usize) -> Tree {
        let mut b = Builder {
            x,
            y,
            n_classes,
            max_depth,
            nodes: Vec::new(),
        };
        b.build((0..x.rows()).collect(), 0);
        Tree { nodes: b.nodes }
    }

    fn leaf(&self, row: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(p) => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let c = match &self.nodes[0] {
            Node::Leaf(p) => p.len(),
            _ => self.leaf(x.row(0)).len(),
        };
        let mut out = Matrix::zeros(x.rows(), c);
        for i in 0..x.rows() {
            out.row_mut(i).copy_from_slice(self.leaf(x.row(i)));
        }
        out
    }

    #[cfg(test)]
    fn depth(&self) -> usize {
        fn go(t: &Tree, at: usize) -> usize {
            match &t.nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}
