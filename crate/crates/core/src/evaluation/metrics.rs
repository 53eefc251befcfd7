use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{Debug, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BlockLabel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold rows of this class.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport<L: Ord> {
    pub per_class: BTreeMap<L, ClassMetrics>,
    /// Unweighted mean over the classes in gold or predictions.
    pub macro_avg: ClassMetrics,
    pub accuracy: f64,
    pub total: usize,
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Report over `(gold, predicted)` pairs.
pub fn report_from_pairs<L, I>(pairs: I) -> ClassificationReport<L>
where
    L: Ord + Copy,
    I: IntoIterator<Item = (L, L)>,
{
    let mut tp: BTreeMap<L, usize> = BTreeMap::new();
    let mut gold_n: BTreeMap<L, usize> = BTreeMap::new();
    let mut pred_n: BTreeMap<L, usize> = BTreeMap::new();
    let mut total = 0;
    let mut correct = 0;
    for (g, p) in pairs {
        total += 1;
        *gold_n.entry(g).or_default() += 1;
        *pred_n.entry(p).or_default() += 1;
        if g == p {
            correct += 1;
            *tp.entry(g).or_default() += 1;
        }
    }
    let classes: BTreeSet<L> = gold_n.keys().chain(pred_n.keys()).copied().collect();
    let mut per_class = BTreeMap::new();
    for &c in &classes {
        let t = tp.get(&c).copied().unwrap_or(0);
        let g = gold_n.get(&c).copied().unwrap_or(0);
        let p = pred_n.get(&c).copied().unwrap_or(0);
        let precision = ratio(t, p);
        let recall = ratio(t, g);
        per_class.insert(
            c,
            ClassMetrics {
                precision,
                recall,
                f1: f1(precision, recall),
                support: g,
            },
        );
    }
    let k = per_class.len().max(1) as f64;
    let macro_avg = ClassMetrics {
        precision: per_class.values().map(|m| m.precision).sum::<f64>() / k,
        recall: per_class.values().map(|m| m.recall).sum::<f64>() / k,
        f1: per_class.values().map(|m| m.f1).sum::<f64>() / k,
        support: total,
    };
    ClassificationReport {
        per_class,
        macro_avg,
        accuracy: ratio(correct, total),
        total,
    }
}

/// Report over keyed labels; both maps must cover the same keys.
pub fn classification_report<K, L>(gold: &BTreeMap<K, L>, pred: &BTreeMap<K, L>) -> Result<ClassificationReport<L>>
where
    K: Ord + Debug,
    L: Ord + Copy,
{
    if let Some(k) = gold.keys().find(|k| !pred.contains_key(*k)) {
        return Err(Error::KeyMismatch(format!("{k:?} has no prediction")));
    }
    if let Some(k) = pred.keys().find(|k| !gold.contains_key(*k)) {
        return Err(Error::KeyMismatch(format!("{k:?} has no gold label")));
    }
    Ok(report_from_pairs(gold.iter().map(|(k, g)| (*g, pred[k]))))
}

/// Fixed-width table: one row per class plus "All label".
pub fn format_table(report: &ClassificationReport<BlockLabel>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {:>9} {:>9} {:>9} {:>8}", "Label", "Precision", "Recall", "F1", "Support");
    for (c, m) in &report.per_class {
        let _ = writeln!(
            out,
            "{:<12} {:>9.4} {:>9.4} {:>9.4} {:>8}",
            c.display_name(),
            m.precision,
            m.recall,
            m.f1,
            m.support
        );
    }
    let m = &report.macro_avg;
    let _ = writeln!(
        out,
        "{:<12} {:>9.4} {:>9.4} {:>9.4} {:>8}",
        "All label", m.precision, m.recall, m.f1, m.support
    );
    let _ = writeln!(out, "Accuracy {:.4}", report.accuracy);
    out
}

/// Shorthand used by the CLI.
pub fn label_report(pairs: &[(BlockLabel, BlockLabel)]) -> ClassificationReport<BlockLabel> {
    report_from_pairs(pairs.iter().copied())
}
