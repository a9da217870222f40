//! Gaussian naive Bayes. Per-class variances are floored at
//! `1e-9 * max feature variance` (or `1e-9` when every feature is constant).

use crate::matrix::Matrix;

#[derive(Clone, Debug)]
pub(super) struct GaussianNb {
    /// `ln prior` per class; `-inf` for classes absent from training.
    log_prior: Vec<f64>,
    mean: Vec<Vec<f64>>,
    var: Vec<Vec<f64>>,
}

impl GaussianNb {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize) -> GaussianNb {
        let d = x.cols();
        let n = x.rows() as f64;
        let mut count = vec![0usize; n_classes];
        let mut mean = vec![vec![0.0; d]; n_classes];
        for (r, &c) in x.iter_rows().zip(y) {
            count[c] += 1;
            for (m, v) in mean[c].iter_mut().zip(r) {
                *m += v;
            }
        }
        for (m, &k) in mean.iter_mut().zip(&count) {
            if k > 0 {
                m.iter_mut().for_each(|v| *v /= k as f64);
            }
        }
        let mut var = vec![vec![0.0; d]; n_classes];
        for (r, &c) in x.iter_rows().zip(y) {
            for ((s, v), m) in var[c].iter_mut().zip(r).zip(&mean[c]) {
                *s += (v - m) * (v - m);
            }
        }
        for (s, &k) in var.iter_mut().zip(&count) {
            if k > 0 {
                s.iter_mut().for_each(|v| *v /= k as f64);
            }
        }

        let max_var = (0..d)
            .map(|j| {
                let col = x.column(j);
                let mu = col.iter().sum::<f64>() / n;
                col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n
            })
            .fold(0.0, f64::max);
        let floor = if max_var > 0.0 { 1e-9 * max_var } else { 1e-9 };
        for s in var.iter_mut() {
            s.iter_mut().for_each(|v| *v = v.max(floor));
        }
        let log_prior = count
            .iter()
            .map(|&k| {
                if k > 0 {
                    (k as f64 / n).ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        GaussianNb {
            log_prior,
            mean,
            var,
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let c = self.log_prior.len();
        let mut out = Matrix::zeros(x.rows(), c);
        let mut joint = vec![0.0; c];
        for i in 0..x.rows() {
            let r = x.row(i);
            for k in 0..c {
                if self.log_prior[k] == f64::NEG_INFINITY {
                    joint[k] = f64::NEG_INFINITY;
                    continue;
                }
                let mut ll = self.log_prior[k];
                for ((v, m), s) in r.iter().zip(&self.mean[k]).zip(&self.var[k]) {
                    ll -= 0.5 * ((2.0 * std::f64::consts::PI * s).ln() + (v - m) * (v - m) / s);
                }
                joint[k] = ll;
            }
            let max = joint.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let row = out.row_mut(i);
            let mut sum = 0.0;
            for (p, &j) in row.iter_mut().zip(&joint) {
                *p = (j - max).exp();
                sum += *p;
            }
            row.iter_mut().for_each(|p| *p /= sum);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirrored_classes_split_evenly_at_midpoint() {
        let x = Matrix::from_rows(&[[-3.0, -1.0], [-1.0, -2.0], [3.0, 1.0], [1.0, 2.0]]).unwrap();
        let nb = GaussianNb::fit(&x, &[0, 0, 1, 1], 2);
        let p = nb.predict_proba(&Matrix::from_rows(&[[0.0, 0.0]]).unwrap());
        assert!((p.get(0, 0) - 0.5).abs() < 1e-9);
        assert!((p.get(0, 1) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn absent_class_gets_zero() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let nb = GaussianNb::fit(&x, &[0, 2], 3);
        let p = nb.predict_proba(&x);
        assert_eq!(p.get(0, 1), 0.0);
        assert!((p.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_feature_does_not_blow_up() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0], [1.0, 5.0]]).unwrap();
        let nb = GaussianNb::fit(&x, &[0, 0, 1], 2);
        assert!(nb.predict_proba(&x).all_finite());
    }
}
