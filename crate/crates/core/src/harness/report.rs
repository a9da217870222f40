use std::fmt::Write;
use std::path::PathBuf;

use super::experiment::{ExperimentResult, Stats};
use super::results::{load_result, result_files};
use super::Family;
use crate::error::Result;

/// Test accuracy and duration statistics of one dataset × family cell,
/// pooled over all replicates of all matching results.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupSummary {
    pub dataset: String,
    pub family: Family,
    pub test_accuracy: Stats,
    pub duration_s: Stats,
}

/// Groups sorted by dataset, then family in report order.
pub fn group_summaries(results: &[ExperimentResult]) -> Vec<GroupSummary> {
    let mut keys: Vec<(String, Family)> = results
        .iter()
        .map(|r| (r.config.dataset.clone(), r.family))
        .collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(dataset, family)| {
            let reps = results
                .iter()
                .filter(|r| r.config.dataset == dataset && r.family == family)
                .flat_map(|r| &r.replicates);
            let (acc, dur): (Vec<f64>, Vec<f64>) =
                reps.map(|r| (r.test_accuracy, r.duration_s)).unzip();
            GroupSummary {
                test_accuracy: Stats::of(&acc),
                duration_s: Stats::of(&dur),
                dataset,
                family,
            }
        })
        .collect()
}

/// Accuracy std of NN over that of TPOT-NN; 1 when both are 0.
pub fn variance_ratio(nn: &Stats, tpot_nn: &Stats) -> f64 {
    if nn.std == tpot_nn.std {
        1.0
    } else {
        nn.std / tpot_nn.std
    }
}

fn table(out: &mut String, title: &str, rows: &[(&GroupSummary, &Stats)], digits: usize) {
    writeln!(out, "{title}").unwrap();
    writeln!(
        out,
        "{:<8} {:>3} {:>10} {:>10} {:>10} {:>10}",
        "family", "n", "mean", "min", "max", "std"
    )
    .unwrap();
    for (g, s) in rows {
        writeln!(
            out,
            "{:<8} {:>3} {:>10.d$} {:>10.d$} {:>10.d$} {:>10.d$}",
            g.family.label(),
            s.n,
            s.mean,
            s.min,
            s.max,
            s.std,
            d = digits
        )
        .unwrap();
    }
}

/// Renders per-dataset tables of test accuracy and training time for each
/// family, plus the NN / TPOT-NN accuracy spread comparison. `paths` may
/// name result files or directories holding them.
pub fn report_summary(paths: &[PathBuf]) -> Result<String> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            files.extend(result_files(p)?);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(crate::error::Error::Config(
            "no result files to report on".into(),
        ));
    }
    let results = files
        .iter()
        .map(|f| load_result(f))
        .collect::<Result<Vec<_>>>()?;
    let groups = group_summaries(&results);
    let mut datasets: Vec<&str> = groups.iter().map(|g| g.dataset.as_str()).collect();
    datasets.dedup();

    let mut out = String::new();
    for (i, ds) in datasets.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let mine: Vec<&GroupSummary> = groups.iter().filter(|g| g.dataset == *ds).collect();
        writeln!(out, "dataset: {ds}\n").unwrap();
        let acc: Vec<_> = mine.iter().map(|g| (*g, &g.test_accuracy)).collect();
        table(&mut out, "test accuracy", &acc, 4);
        out.push('\n');
        let dur: Vec<_> = mine.iter().map(|g| (*g, &g.duration_s)).collect();
        table(&mut out, "training time (s)", &dur, 3);
        out.push('\n');
        let find = |f: Family| mine.iter().find(|g| g.family == f);
        match (find(Family::Nn), find(Family::TpotNn)) {
            (Some(nn), Some(tn)) => writeln!(
                out,
                "variance ratio (test accuracy std, NN / TPOT-NN): {:.4}",
                variance_ratio(&nn.test_accuracy, &tn.test_accuracy)
            ),
            _ => writeln!(out, "variance ratio (test accuracy std, NN / TPOT-NN): n/a"),
        }
        .unwrap();
    }
    Ok(out)
}
