//! k-nearest neighbours by Euclidean distance; distance ties go to the lower
//! training-row index. Probabilities are neighbour vote fractions.

use crate::matrix::Matrix;

#[derive(Clone, Debug)]
pub(super) struct Knn {
    x: Matrix,
    y: Vec<usize>,
    n_classes: usize,
    k: usize,
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, k: usize) -> Knn {
        Knn {
            x: x.clone(),
            y: y.to_vec(),
            n_classes,
            k: k.min(x.rows()),
        }
    }

    pub fn predict_proba(&self, q: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(q.rows(), self.n_classes);
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(self.x.rows());
        let vote = 1.0 / self.k as f64;
        for i in 0..q.rows() {
            let qi = q.row(i);
            dist.clear();
            dist.extend(self.x.iter_rows().enumerate().map(|(j, r)| {
                let d2: f64 = r.iter().zip(qi).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, j)
            }));
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if self.k < dist.len() {
                dist.select_nth_unstable_by(self.k - 1, cmp);
            }
            let row = out.row_mut(i);
            for &(_, j) in &dist[..self.k] {
                row[self.y[j]] += vote;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vote_fractions() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [10.0]]).unwrap();
        let knn = Knn::fit(&x, &[1, 1, 0, 0], 2, 3);
        let p = knn.predict_proba(&Matrix::from_rows(&[[1.0]]).unwrap());
        assert!((p.get(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.get(0, 1) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn distance_tie_prefers_lower_row() {
        // Query at 0 is equidistant from rows 0 and 1.
        let x = Matrix::from_rows(&[[-1.0], [1.0]]).unwrap();
        let knn = Knn::fit(&x, &[0, 1], 2, 1);
        let p = knn.predict_proba(&Matrix::from_rows(&[[0.0]]).unwrap());
        assert_eq!(p.row(0), &[1.0, 0.0]);
    }

    #[test]
    fn k_capped_at_training_size() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let knn = Knn::fit(&x, &[0, 1], 2, 11);
        let p = knn.predict_proba(&x);
        assert_eq!(p.row(0), &[0.5, 0.5]);
    }
}
