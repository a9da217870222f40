use std::cmp::Ordering;

use super::{Fitness, Individual};

impl Fitness {
    /// Higher accuracy and lower complexity, strictly better in at least one.
    pub fn dominates(&self, other: &Fitness) -> bool {
        self.cv_accuracy >= other.cv_accuracy
            && self.complexity <= other.complexity
            && (self.cv_accuracy > other.cv_accuracy || self.complexity < other.complexity)
    }
}

/// Pareto fronts as index lists, best front first, indices ascending
/// within each front.
pub fn fast_nondominated_sort(pop: &[Fitness]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dom_count = vec![0usize; n];
    for p in 0..n {
        for q in 0..n {
            if pop[p].dominates(&pop[q]) {
                dominated_by_me[p].push(q);
            } else if pop[q].dominates(&pop[p]) {
                dom_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&p| dom_count[p] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                dom_count[q] -= 1;
                if dom_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// NSGA-II crowding distance over (accuracy, complexity). Boundary members
/// are infinite; an objective with zero range adds nothing to interior
/// members.
pub fn crowding_distance(front: &[Fitness]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let objectives: [&dyn Fn(&Fitness) -> f64; 2] = [&|f| f.cv_accuracy, &|f| f.complexity as f64];
    for obj in objectives {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            obj(&front[a])
                .partial_cmp(&obj(&front[b]))
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = obj(&front[order[n - 1]]) - obj(&front[order[0]]);
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let gap = obj(&front[order[w + 1]]) - obj(&front[order[w - 1]]);
            dist[order[w]] += gap / range;
        }
    }
    dist
}

/// μ+λ environmental selection: whole fronts in order, then the last
/// admitted front by descending crowding distance (ties: lower index).
///
/// # Panics
/// If any individual is unevaluated or `mu` exceeds the pool.
pub fn select_survivors(pool: Vec<Individual>, mu: usize) -> Vec<Individual> {
    assert!(mu <= pool.len(), "cannot select {mu} of {}", pool.len());
    let fits: Vec<Fitness> = pool
        .iter()
        .map(|i| {
            i.fitness
                .expect("survivor selection needs evaluated individuals")
        })
        .collect();
    let mut chosen = Vec::with_capacity(mu);
    for front in fast_nondominated_sort(&fits) {
        let room = mu - chosen.len();
        if room == 0 {
            break;
        }
        if front.len() <= room {
            chosen.extend(front);
            continue;
        }
        let sub: Vec<Fitness> = front.iter().map(|&i| fits[i]).collect();
        let d = crowding_distance(&sub);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| {
            d[b].partial_cmp(&d[a])
                .unwrap_or(Ordering::Equal)
                .then(front[a].cmp(&front[b]))
        });
        chosen.extend(order[..room].iter().map(|&k| front[k]));
    }
    let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
    chosen
        .into_iter()
        .map(|i| slots[i].take().expect("each index chosen once"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(acc: f64, c: usize) -> Fitness {
        Fitness {
            cv_accuracy: acc,
            complexity: c,
            failed: false,
        }
    }

    #[test]
    fn worked_example() {
        let pop = [f(0.9, 3), f(0.8, 2), f(0.9, 2), f(0.7, 1)];
        assert_eq!(fast_nondominated_sort(&pop), vec![vec![2, 3], vec![0, 1]]);
    }

    #[test]
    fn identical_and_single() {
        assert_eq!(
            fast_nondominated_sort(&[f(0.5, 2); 4]),
            vec![vec![0, 1, 2, 3]]
        );
        assert_eq!(fast_nondominated_sort(&[f(0.5, 2)]), vec![vec![0]]);
        assert!(fast_nondominated_sort(&[]).is_empty());
    }

    #[test]
    fn crowding_examples() {
        assert_eq!(crowding_distance(&[f(0.1, 1)]), vec![f64::INFINITY]);
        assert_eq!(
            crowding_distance(&[f(0.1, 1), f(0.2, 2)]),
            vec![f64::INFINITY; 2]
        );
        let d = crowding_distance(&[f(0.7, 1), f(0.8, 2), f(0.9, 3)]);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        assert!((d[1] - 2.0).abs() < 1e-12);
        let flat = crowding_distance(&[f(0.5, 1), f(0.5, 1), f(0.5, 1)]);
        assert_eq!(flat[1], 0.0);
    }

    proptest! {
        #[test]
        fn fronts_partition(points in prop::collection::vec((0u8..5, 1usize..5), 0..25)) {
            let pop: Vec<Fitness> = points.iter().map(|&(a, c)| f(a as f64 / 4.0, c)).collect();
            let fronts = fast_nondominated_sort(&pop);
            let mut seen: Vec<usize> = fronts.concat();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..pop.len()).collect::<Vec<_>>());
            for (k, front) in fronts.iter().enumerate() {
                for &p in front {
                    for &q in front {
                        prop_assert!(!pop[p].dominates(&pop[q]));
                    }
                    if k > 0 {
                        prop_assert!(fronts[k - 1].iter().any(|&q| pop[q].dominates(&pop[p])));
                    }
                }
            }
        }
    }
}
