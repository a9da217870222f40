use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{OperatorClass, OperatorInstance, Registry};
use crate::error::{Error, Result};
use crate::learners::{fit_estimator, FittedLearner};
use crate::matrix::Matrix;

/// A fitted non-root operator.
#[derive(Clone, Debug)]
pub enum FittedOperator {
    /// Selectors: keep these input columns, in this order.
    Select {
        keep: Vec<usize>,
        d_in: usize,
    },
    /// `(x - min) / span`; zero-span columns map to 0.
    MinMax {
        min: Vec<f64>,
        span: Vec<f64>,
    },
    /// `(x - mean) / scale`; zero-scale columns map to 0.
    Standard {
        mean: Vec<f64>,
        scale: Vec<f64>,
    },
    /// Projection of the centred input onto the leading components.
    Pca {
        mean: Vec<f64>,
        components: Vec<Vec<f64>>,
    },
    Identity {
        d_in: usize,
    },
    /// Appends class probabilities and the predicted class to the input.
    Stack {
        learner: FittedLearner,
    },
}

/// Fits the operator named by `inst`. A classifier instance fits as a
/// stacking wrapper around that classifier.
pub fn fit_operator(
    registry: &Registry,
    inst: &OperatorInstance,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<FittedOperator> {
    fit_operator_until(registry, inst, x, y, n_classes, seed, None)
}

pub fn fit_operator_until(
    registry: &Registry,
    inst: &OperatorInstance,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    seed: u64,
    deadline: Option<Instant>,
) -> Result<FittedOperator> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::FitFailure(format!(
            "{}: empty input ({}x{})",
            inst.spec_name,
            x.rows(),
            x.cols()
        )));
    }
    let spec = registry.check_instance(inst)?;
    let d = x.cols();
    let fitted = match (spec.class(), spec.name()) {
        (OperatorClass::Classifier, name) => {
            let est = spec
                .estimator()
                .expect("classifier specs carry an estimator");
            let learner = fit_estimator(est, name, &inst.hp, x, y, n_classes, seed, deadline)?;
            FittedOperator::Stack { learner }
        }
        (_, "VarianceThreshold") => {
            let threshold = inst.hp.real("threshold")?;
            let keep: Vec<usize> = (0..d)
                .filter(|&j| variance(&x.column(j)) > threshold)
                .collect();
            if keep.is_empty() {
                return Err(Error::FitFailure(format!(
                    "VarianceThreshold: no column has variance above {threshold}"
                )));
            }
            FittedOperator::Select { keep, d_in: d }
        }
        (_, "SelectKBest") => {
            let frac = inst.hp.real("k_fraction")?;
            let m = ((frac * d as f64).ceil() as usize).clamp(1, d);
            let scores: Vec<f64> = (0..d)
                .map(|j| anova_f(&x.column(j), y, n_classes))
                .collect();
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
            let mut keep = order[..m].to_vec();
            keep.sort_unstable();
            FittedOperator::Select { keep, d_in: d }
        }
        (_, "MinMaxScaler") => {
            let (mut min, mut span) = (Vec::with_capacity(d), Vec::with_capacity(d));
            for j in 0..d {
                let col = x.column(j);
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                min.push(lo);
                span.push(hi - lo);
            }
            FittedOperator::MinMax { min, span }
        }
        (_, "StandardScaler") => {
            let (mut mean, mut scale) = (Vec::with_capacity(d), Vec::with_capacity(d));
            for j in 0..d {
                let col = x.column(j);
                let mu = col.iter().sum::<f64>() / col.len() as f64;
                let sd = variance(&col).sqrt();
                mean.push(mu);
                // Constant columns (up to rounding in the mean) map to 0.
                scale.push(if sd <= 1e-12 * mu.abs().max(1.0) {
                    0.0
                } else {
                    sd
                });
            }
            FittedOperator::Standard { mean, scale }
        }
        (_, "PCA") => {
            let frac = inst.hp.real("frac")?;
            let k = ((frac * d as f64).ceil() as usize).clamp(1, d);
            let (mean, components) = pca(x, k);
            FittedOperator::Pca { mean, components }
        }
        (OperatorClass::Identity, _) => FittedOperator::Identity { d_in: d },
        (class, name) => {
            return Err(Error::Registry(format!(
                "operator '{name}' of class {class} cannot be fitted as a unary node"
            )))
        }
    };
    Ok(fitted)
}

fn variance(col: &[f64]) -> f64 {
    let n = col.len() as f64;
    let mu = col.iter().sum::<f64>() / n;
    col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n
}

/// One-way ANOVA F statistic of `col` grouped by label. Undefined cases
/// (fewer than two groups, no residual degrees of freedom) score 0; zero
/// within-group spread scores +inf when the group means differ.
fn anova_f(col: &[f64], y: &[usize], n_classes: usize) -> f64 {
    let n = col.len();
    let mut count = vec![0usize; n_classes];
    let mut sum = vec![0.0; n_classes];
    for (&v, &c) in col.iter().zip(y) {
        count[c] += 1;
        sum[c] += v;
    }
    let groups = count.iter().filter(|&&c| c > 0).count();
    if groups < 2 || n <= groups {
        return 0.0;
    }
    let grand = col.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let ssb: f64 = means
        .iter()
        .zip(&count)
        .map(|(m, &c)| c as f64 * (m - grand) * (m - grand))
        .sum();
    let ssw: f64 = col
        .iter()
        .zip(y)
        .map(|(v, &c)| (v - means[c]) * (v - means[c]))
        .sum();
    let between = ssb / (groups - 1) as f64;
    let within = ssw / (n - groups) as f64;
    if within > 0.0 {
        between / within
    } else if between > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Leading `k` eigenvectors of the sample covariance, ordered by descending
/// eigenvalue (ties by index), each signed so its largest-magnitude loading
/// is positive.
fn pca(x: &Matrix, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (n, d) = (x.rows(), x.cols());
    let mean: Vec<f64> = (0..d)
        .map(|j| x.column(j).iter().sum::<f64>() / n as f64)
        .collect();
    let centred = DMatrix::from_fn(n, d, |i, j| x.get(i, j) - mean[j]);
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let cov = (centred.transpose() * &centred) / denom;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let components = order[..k]
        .iter()
        .map(|&c| {
            let mut v: Vec<f64> = eig.eigenvectors.column(c).iter().cloned().collect();
            let mut lead = 0;
            for (i, w) in v.iter().enumerate() {
                if w.abs() > v[lead].abs() {
                    lead = i;
                }
            }
            if v[lead] < 0.0 {
                v.iter_mut().for_each(|w| *w = -*w);
            }
            v
        })
        .collect();
    (mean, components)
}

impl FittedOperator {
    pub fn d_in(&self) -> usize {
        match self {
            FittedOperator::Select { d_in, .. } | FittedOperator::Identity { d_in } => *d_in,
            FittedOperator::MinMax { min, .. } => min.len(),
            FittedOperator::Standard { mean, .. } | FittedOperator::Pca { mean, .. } => mean.len(),
            FittedOperator::Stack { learner } => learner.d_in(),
        }
    }

    pub fn d_out(&self) -> usize {
        match self {
            FittedOperator::Select { keep, .. } => keep.len(),
            FittedOperator::Pca { components, .. } => components.len(),
            FittedOperator::Stack { learner } => learner.d_in() + learner.n_classes() + 1,
            other => other.d_in(),
        }
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        x.check_cols(self.d_in())?;
        let out = match self {
            FittedOperator::Select { keep, .. } => x.select_cols(keep),
            FittedOperator::Identity { .. } => x.clone(),
            FittedOperator::MinMax { min, span } => map_cols(x, |j, v| {
                if span[j] > 0.0 {
                    (v - min[j]) / span[j]
                } else {
                    0.0
                }
            }),
            FittedOperator::Standard { mean, scale } => map_cols(x, |j, v| {
                if scale[j] > 0.0 {
                    (v - mean[j]) / scale[j]
                } else {
                    0.0
                }
            }),
            FittedOperator::Pca { mean, components } => {
                let mut out = Matrix::zeros(x.rows(), components.len());
                for i in 0..x.rows() {
                    let r = x.row(i);
                    for (c, comp) in components.iter().enumerate() {
                        let v: f64 = r
                            .iter()
                            .zip(mean)
                            .zip(comp)
                            .map(|((v, m), w)| (v - m) * w)
                            .sum();
                        out.set(i, c, v);
                    }
                }
                out
            }
            FittedOperator::Stack { learner } => {
                let proba = learner.predict_proba(x)?;
                let pred = crate::learners::argmax_rows(&proba);
                let pred = Matrix::new(x.rows(), 1, pred.into_iter().map(|p| p as f64).collect())?;
                Matrix::hconcat(&[x.clone(), proba, pred])?
            }
        };
        Ok(out)
    }
}

fn map_cols(x: &Matrix, f: impl Fn(usize, f64) -> f64) -> Matrix {
    let mut out = x.clone();
    for i in 0..x.rows() {
        for (j, v) in out.row_mut(i).iter_mut().enumerate() {
            *v = f(j, *v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::HpValue;
    use crate::operators::{default_registry, EstimatorFilter};
    use proptest::prelude::*;

    fn reg() -> Registry {
        default_registry(true, EstimatorFilter::All).unwrap()
    }

    fn inst(name: &str, hp: &[(&str, HpValue)]) -> OperatorInstance {
        OperatorInstance::new(
            name,
            hp.iter()
                .cloned()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        )
    }

    fn fit(i: &OperatorInstance, x: &Matrix, y: &[usize]) -> FittedOperator {
        fit_operator(&reg(), i, x, y, 2, 0).unwrap()
    }

    fn sample_x() -> (Matrix, Vec<usize>) {
        let x = Matrix::from_rows(&[
            [1.0, 5.0, 0.3, 2.0],
            [2.0, 5.0, 0.1, -1.0],
            [3.0, 5.0, 0.7, 4.0],
            [4.0, 5.0, 0.2, 0.5],
            [5.0, 5.0, 0.9, 3.0],
        ])
        .unwrap();
        (x, vec![0, 0, 1, 1, 1])
    }

    #[test]
    fn variance_threshold_drops_constant_column() {
        let (x, y) = sample_x();
        let f = fit(
            &inst("VarianceThreshold", &[("threshold", HpValue::Real(0.0))]),
            &x,
            &y,
        );
        assert!(matches!(&f, FittedOperator::Select { keep, .. } if keep == &vec![0, 2, 3]));
    }

    #[test]
    fn select_k_best_full_keeps_order() {
        let (x, y) = sample_x();
        let f = fit(
            &inst("SelectKBest", &[("k_fraction", HpValue::Real(1.0))]),
            &x,
            &y,
        );
        assert_eq!(f.transform(&x).unwrap(), x);
    }

    #[test]
    fn select_k_best_picks_most_separating() {
        let (x, y) = sample_x();
        let f = fit(
            &inst("SelectKBest", &[("k_fraction", HpValue::Real(0.25))]),
            &x,
            &y,
        );
        // Column 0 (1,2 | 3,4,5) separates the classes best.
        assert!(matches!(&f, FittedOperator::Select { keep, .. } if keep == &vec![0]));
    }

    #[test]
    fn minmax_on_train_in_unit_interval() {
        let (x, y) = sample_x();
        let f = fit(&inst("MinMaxScaler", &[]), &x, &y);
        let t = f.transform(&x).unwrap();
        assert!(t.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(t.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stack_width() {
        let (x, y) = sample_x();
        let x5 = Matrix::hconcat(&[x.clone(), x.select_cols(&[0])]).unwrap();
        let f = fit(&inst("GaussianNB", &[]), &x5, &y);
        assert_eq!(f.transform(&x5).unwrap().cols(), 5 + 2 + 1);
    }

    #[test]
    fn identity_is_bitwise() {
        let (x, y) = sample_x();
        assert_eq!(
            fit(&inst("Identity", &[]), &x, &y).transform(&x).unwrap(),
            x
        );
    }

    #[test]
    fn width_mismatch() {
        let (x, y) = sample_x();
        let f = fit(&inst("StandardScaler", &[]), &x, &y);
        assert!(f.transform(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn pca_sign_and_orthogonality() {
        let (x, y) = sample_x();
        let f = fit(&inst("PCA", &[("frac", HpValue::Real(0.75))]), &x, &y);
        let t = f.transform(&x).unwrap();
        assert_eq!(t.cols(), 3);
        if let FittedOperator::Pca { components, .. } = &f {
            for c in components {
                let lead = c
                    .iter()
                    .cloned()
                    .fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
                assert!(lead > 0.0);
            }
        }
        for a in 0..3 {
            for b in a + 1..3 {
                let dot: f64 = t
                    .column(a)
                    .iter()
                    .zip(t.column(b))
                    .map(|(p, q)| p * q)
                    .sum();
                assert!(dot.abs() < 1e-6, "columns {a},{b}: {dot}");
            }
        }
    }

    fn matrix_strategy() -> impl Strategy<Value = (Matrix, Vec<usize>)> {
        (2usize..6, 3usize..20).prop_flat_map(|(d, n)| {
            (
                proptest::collection::vec(-100.0f64..100.0, n * d),
                proptest::collection::vec(0usize..2, n),
            )
                .prop_map(move |(v, y)| (Matrix::new(n, d, v).unwrap(), y))
        })
    }

    proptest! {
        #[test]
        fn standard_scaler_moments((x, y) in matrix_strategy()) {
            let f = fit(&inst("StandardScaler", &[]), &x, &y);
            let t = f.transform(&x).unwrap();
            for j in 0..t.cols() {
                let col = t.column(j);
                let n = col.len() as f64;
                let mu = col.iter().sum::<f64>() / n;
                let sd = (col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n).sqrt();
                prop_assert!(mu.abs() < 1e-9);
                prop_assert!((sd - 1.0).abs() < 1e-9 || col.iter().all(|&v| v == 0.0));
            }
        }

        #[test]
        fn selectors_output_input_columns((x, y) in matrix_strategy(), frac in prop::sample::select(vec![0.25, 0.5, 0.75, 1.0])) {
            let f = fit(&inst("SelectKBest", &[("k_fraction", HpValue::Real(frac))]), &x, &y);
            let t = f.transform(&x).unwrap();
            for j in 0..t.cols() {
                let col = t.column(j);
                prop_assert!((0..x.cols()).any(|k| x.column(k) == col));
            }
        }

        #[test]
        fn stack_width_any_kind((x, _) in matrix_strategy(), c in 2usize..5, kind in 0usize..5) {
            let y: Vec<usize> = (0..x.rows()).map(|i| i % c).collect();
            let name = crate::learners::LearnerKind::ALL[kind].name();
            let spec = reg().get(name).unwrap().clone();
            let i = crate::operators::sample_instance(&spec, 1);
            let i = if spec.name() == "MlpNN" || spec.name() == "LogisticRegressionNN" {
                OperatorInstance::new(name, i.hp.clone().with("lr", HpValue::Real(0.001)))
            } else { i };
            let f = fit_operator(&reg(), &i, &x, &y, c, 0).unwrap();
            prop_assert_eq!(f.transform(&x).unwrap().cols(), x.cols() + c + 1);
        }
    }

    #[test]
    fn unknown_operator() {
        let (x, y) = sample_x();
        let e = fit_operator(&reg(), &inst("Nope", &[]), &x, &y, 2, 0);
        assert!(matches!(e, Err(Error::Registry(_))));
    }
}
