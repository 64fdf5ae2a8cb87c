//! Scoring, k-fold splitting and cross-validation.
//!
//! A prediction is correct only when the full label string matches, so
//! `USAGE` and `USAGE REVERSE` are distinct classes. Macro-F1 averages over
//! labels that occur in the gold standard unless [`Averaging::GoldOrPredicted`]
//! is requested.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::TrainConfig;
use crate::corpus::RelationInstance;
use crate::error::{Error, Result};
use crate::featurizer::Families;
use crate::par::Execution;
use crate::pipeline::{fit, predict_instances};
use crate::resources::Resources;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Averaging {
    #[default]
    GoldLabels,
    GoldOrPredicted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelScore {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub predicted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    /// Sorted union of gold and predicted labels; indexes `confusion`.
    pub labels: Vec<String>,
    pub per_label: Vec<LabelScore>,
    pub macro_f1: f64,
    pub micro_accuracy: f64,
    /// `confusion[gold][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub averaging: Averaging,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn score<S: AsRef<str>>(gold: &[S], pred: &[S]) -> Result<EvaluationReport> {
    score_with(gold, pred, Averaging::default())
}

pub fn score_with<S: AsRef<str>>(gold: &[S], pred: &[S], averaging: Averaging) -> Result<EvaluationReport> {
    if gold.len() != pred.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            found: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::Config("cannot score an empty gold standard".into()));
    }
    let labels: Vec<String> = gold
        .iter()
        .chain(pred)
        .map(|s| s.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |s: &str| labels.binary_search_by(|l| l.as_str().cmp(s)).unwrap();
    let n = labels.len();
    let mut confusion = vec![vec![0usize; n]; n];
    for (g, p) in gold.iter().zip(pred) {
        confusion[index(g.as_ref())][index(p.as_ref())] += 1;
    }

    let per_label: Vec<LabelScore> = labels
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let tp = confusion[i][i];
            let support: usize = confusion[i].iter().sum();
            let predicted: usize = confusion.iter().map(|row| row[i]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            LabelScore {
                label: label.clone(),
                precision,
                recall,
                f1,
                support,
                predicted,
            }
        })
        .collect();

    let averaged: Vec<f64> = per_label
        .iter()
        .filter(|s| averaging == Averaging::GoldOrPredicted || s.support > 0)
        .map(|s| s.f1)
        .collect();
    let macro_f1 = averaged.iter().sum::<f64>() / averaged.len() as f64;
    let correct: usize = (0..n).map(|i| confusion[i][i]).sum();

    Ok(EvaluationReport {
        labels,
        per_label,
        macro_f1,
        micro_accuracy: ratio(correct, gold.len()),
        confusion,
        averaging,
    })
}

impl EvaluationReport {
    pub fn label_score(&self, label: &str) -> Option<&LabelScore> {
        self.per_label.iter().find(|s| s.label == label)
    }

    pub fn render_text(&self) -> String {
        let width = self.labels.iter().map(String::len).max().unwrap_or(0).max(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}",
            "label", "precision", "recall", "f1", "support"
        );
        for s in &self.per_label {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
                s.label, s.precision, s.recall, s.f1, s.support
            );
        }
        let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9.4}", "macro-F1", "", "", self.macro_f1);
        let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9.4}", "accuracy", "", "", self.micro_accuracy);
        out
    }

    /// One `key=value` metric per line.
    pub fn render_kv(&self, prefix: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{prefix}macro_f1={:.6}", self.macro_f1);
        let _ = writeln!(out, "{prefix}micro_accuracy={:.6}", self.micro_accuracy);
        for s in &self.per_label {
            let key = s.label.replace(' ', "_");
            let _ = writeln!(out, "{prefix}precision.{key}={:.6}", s.precision);
            let _ = writeln!(out, "{prefix}recall.{key}={:.6}", s.recall);
            let _ = writeln!(out, "{prefix}f1.{key}={:.6}", s.f1);
            let _ = writeln!(out, "{prefix}support.{key}={}", s.support);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub heldout: Vec<usize>,
}

/// Seeded shuffle of `0..n` cut into `folds` contiguous parts whose sizes
/// differ by at most one; the first `n % folds` parts are the larger ones.
pub fn kfold_split(n: usize, folds: usize, seed: u64) -> Result<Vec<Fold>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(Error::Config(format!("{folds} folds for {n} instances")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = n / folds;
    let extra = n % folds;
    let mut start = 0;
    Ok((0..folds)
        .map(|f| {
            let size = base + usize::from(f < extra);
            let mut heldout = order[start..start + size].to_vec();
            let mut train: Vec<usize> = order[..start].iter().chain(&order[start + size..]).copied().collect();
            heldout.sort_unstable();
            train.sort_unstable();
            start += size;
            Fold { train, heldout }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub families: Families,
    pub train: TrainConfig,
    /// Expand each fold's indices with its held-out instances.
    pub transductive: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 5,
            seed: 0,
            families: Families::default(),
            train: TrainConfig::default(),
            transductive: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<EvaluationReport>,
    pub mean_macro_f1: f64,
}

impl CvReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (i, fold) in self.folds.iter().enumerate() {
            let _ = writeln!(out, "fold {}: macro-F1 {:.4}  accuracy {:.4}", i + 1, fold.macro_f1, fold.micro_accuracy);
        }
        let _ = writeln!(out, "mean macro-F1 {:.4}", self.mean_macro_f1);
        out
    }

    pub fn render_kv(&self) -> String {
        let mut out = String::new();
        for (i, fold) in self.folds.iter().enumerate() {
            let _ = writeln!(out, "fold{}.macro_f1={:.6}", i + 1, fold.macro_f1);
        }
        let _ = writeln!(out, "mean_macro_f1={:.6}", self.mean_macro_f1);
        out
    }
}

pub fn cross_validate(
    instances: &[RelationInstance],
    config: &CvConfig,
    resources: &Resources,
) -> Result<CvReport> {
    cross_validate_with(instances, config, resources, Execution::default())
}

pub fn cross_validate_with(
    instances: &[RelationInstance],
    config: &CvConfig,
    resources: &Resources,
    exec: Execution,
) -> Result<CvReport> {
    if instances.iter().any(|i| i.label.is_none()) {
        return Err(Error::MissingLabel);
    }
    let folds = kfold_split(instances.len(), config.folds, config.seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| instances[i].clone()).collect::<Vec<_>>();
    let reports = exec.map(&folds, |fold| {
        let train = pick(&fold.train);
        let heldout = pick(&fold.heldout);
        let extra: &[RelationInstance] = if config.transductive { &heldout } else { &[] };
        let (model, _) = fit(&train, extra, config.families, resources, &config.train, exec)?;
        let predicted = predict_instances(&model, &heldout, resources, exec)?;
        let gold: Vec<String> = heldout.iter().map(|i| i.label.clone().unwrap()).collect();
        score(&gold, &predicted)
    });
    let folds = reports.into_iter().collect::<Result<Vec<_>>>()?;
    let mean_macro_f1 = folds.iter().map(|r| r.macro_f1).sum::<f64>() / folds.len() as f64;
    Ok(CvReport {
        folds,
        mean_macro_f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictions() {
        let labels = ["A", "B", "C", "A"];
        let r = score(&labels, &labels).unwrap();
        assert_eq!(r.macro_f1, 1.0);
        assert_eq!(r.micro_accuracy, 1.0);
    }

    #[test]
    fn hand_computed_two_labels() {
        let r = score(&["A", "A", "B", "B"], &["A", "B", "B", "B"]).unwrap();
        let a = r.label_score("A").unwrap();
        let b = r.label_score("B").unwrap();
        assert_eq!((a.precision, a.recall), (1.0, 0.5));
        approx::assert_abs_diff_eq!(a.f1, 2.0 / 3.0, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(b.precision, 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(b.recall, 1.0);
        approx::assert_abs_diff_eq!(b.f1, 0.8, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(r.macro_f1, 11.0 / 15.0, epsilon = 1e-12);
        assert_eq!(r.confusion, vec![vec![1, 1], vec![0, 2]]);
        assert_eq!(r.micro_accuracy, 0.75);
    }

    #[test]
    fn nothing_correct() {
        let r = score(&["A", "A"], &["B", "B"]).unwrap();
        assert_eq!(r.macro_f1, 0.0);
        // B never occurs in gold, so it is left out of the default average
        let all = score_with(&["A", "A"], &["B", "B"], Averaging::GoldOrPredicted).unwrap();
        assert_eq!(all.macro_f1, 0.0);
        assert_eq!(all.per_label.len(), 2);
    }

    #[test]
    fn averaging_modes_differ() {
        let gold = ["A", "A", "B"];
        let pred = ["A", "C", "B"];
        let gold_only = score(&gold, &pred).unwrap();
        let both = score_with(&gold, &pred, Averaging::GoldOrPredicted).unwrap();
        // A: P=1 R=0.5 F=2/3; B: 1; C: 0
        approx::assert_abs_diff_eq!(gold_only.macro_f1, (2.0 / 3.0 + 1.0) / 2.0, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(both.macro_f1, (2.0 / 3.0 + 1.0) / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn direction_matters() {
        let r = score(&["USAGE", "USAGE REVERSE"], &["USAGE REVERSE", "USAGE REVERSE"]).unwrap();
        assert_eq!(r.label_score("USAGE").unwrap().f1, 0.0);
        assert_eq!(r.micro_accuracy, 0.5);
    }

    #[test]
    fn score_errors() {
        assert!(score(&["A"], &["A", "B"]).is_err());
        let empty: [&str; 0] = [];
        assert!(score(&empty, &empty).is_err());
    }

    #[test]
    fn fold_sizes() {
        let folds = kfold_split(1228, 5, 1).unwrap();
        let sizes: Vec<usize> = folds.iter().map(|f| f.heldout.len()).collect();
        assert_eq!(sizes, [246, 246, 246, 245, 245]);
        assert_eq!(folds[0].train.len(), 982);
        let folds = kfold_split(10, 5, 1).unwrap();
        assert!(folds.iter().all(|f| f.heldout.len() == 2));
        assert_eq!(kfold_split(50, 5, 9).unwrap(), kfold_split(50, 5, 9).unwrap());
        assert_ne!(kfold_split(50, 5, 9).unwrap(), kfold_split(50, 5, 10).unwrap());
    }

    #[test]
    fn fold_errors() {
        assert!(kfold_split(10, 1, 0).is_err());
        assert!(kfold_split(3, 5, 0).is_err());
    }

    #[test]
    fn renders_reports() {
        let r = score(&["A", "A", "B B", "B B"], &["A", "B B", "B B", "B B"]).unwrap();
        let text = r.render_text();
        assert!(text.contains("macro-F1"));
        let kv = r.render_kv("");
        assert!(kv.contains("macro_f1=0.733333"));
        assert!(kv.contains("f1.B_B=0.800000"));
    }

    fn labels_strategy() -> impl Strategy<Value = (Vec<String>, Vec<String>)> {
        (1usize..40).prop_flat_map(|n| {
            let label = proptest::sample::select(vec!["A", "B", "C", "D REVERSE"]).prop_map(String::from);
            (
                proptest::collection::vec(label.clone(), n),
                proptest::collection::vec(label, n),
            )
        })
    }

    proptest! {
        #[test]
        fn report_invariants((gold, pred) in labels_strategy(), seed in any::<u64>()) {
            let r = score(&gold, &pred).unwrap();
            let total: usize = r.confusion.iter().flatten().sum();
            let trace: usize = (0..r.labels.len()).map(|i| r.confusion[i][i]).sum();
            prop_assert_eq!(r.per_label.iter().map(|s| s.support).sum::<usize>(), gold.len());
            prop_assert!((r.micro_accuracy - trace as f64 / total as f64).abs() < 1e-12);
            let f1s: Vec<f64> = r.per_label.iter().filter(|s| s.support > 0).map(|s| s.f1).collect();
            let max = f1s.iter().cloned().fold(f64::MIN, f64::max);
            let min = f1s.iter().cloned().fold(f64::MAX, f64::min);
            prop_assert!(r.macro_f1 <= max + 1e-12 && r.macro_f1 >= min - 1e-12);
            prop_assert!((0.0..=1.0).contains(&r.macro_f1));

            let mut pairs: Vec<(String, String)> = gold.into_iter().zip(pred).collect();
            pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let (g2, p2): (Vec<String>, Vec<String>) = pairs.into_iter().unzip();
            prop_assert_eq!(score(&g2, &p2).unwrap(), r);
        }

        #[test]
        fn folds_partition(n in 2usize..200, folds in 2usize..10, seed in any::<u64>()) {
            prop_assume!(folds <= n);
            let parts = kfold_split(n, folds, seed).unwrap();
            let mut seen = vec![0usize; n];
            for f in &parts {
                for &i in &f.heldout { seen[i] += 1; }
                prop_assert_eq!(f.train.len() + f.heldout.len(), n);
                prop_assert!(f.train.iter().all(|i| f.heldout.binary_search(i).is_err()));
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            let sizes: Vec<usize> = parts.iter().map(|f| f.heldout.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
