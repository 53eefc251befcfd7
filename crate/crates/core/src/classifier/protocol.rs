//! Stratified train/validation splits and the repeated-split evaluation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, LabeledDataset, SvmHyperparams};
use crate::error::{Error, Result};
use crate::evaluation::metrics::{report_from_pairs, ClassMetrics, ClassificationReport};
use crate::model::BlockLabel;

/// Per-class training counts: `round(ratio * N)` in total, distributed by
/// largest remainder of `ratio * n_c` (ties to the earlier class).
fn train_quota(counts: &BTreeMap<BlockLabel, usize>, ratio: f64) -> BTreeMap<BlockLabel, usize> {
    let total: usize = counts.values().sum();
    let target = (ratio * total as f64).round() as usize;
    let mut quota: BTreeMap<BlockLabel, usize> = counts
        .iter()
        .map(|(&c, &n)| (c, (ratio * n as f64).floor() as usize))
        .collect();
    let mut assigned: usize = quota.values().sum();
    let mut order: Vec<(BlockLabel, f64)> = counts
        .iter()
        .map(|(&c, &n)| (c, ratio * n as f64 - (ratio * n as f64).floor()))
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (c, _) in order.iter().cycle() {
        if assigned >= target {
            break;
        }
        let q = quota.get_mut(c).unwrap();
        if *q < counts[c] {
            *q += 1;
            assigned += 1;
        }
    }
    quota
}

/// Stratified split; `ratio` is the training share. Both halves keep the
/// original row order.
pub fn split_dataset(data: &LabeledDataset, ratio: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    let mut by_class: BTreeMap<BlockLabel, Vec<usize>> = BTreeMap::new();
    for (i, r) in data.rows.iter().enumerate() {
        by_class.entry(r.label).or_default().push(i);
    }
    let counts = by_class.iter().map(|(&c, v)| (c, v.len())).collect();
    let quota = train_quota(&counts, ratio);
    for (&c, idx) in &by_class {
        if quota[&c] >= idx.len() {
            return Err(Error::ClassTooSmall {
                label: c,
                size: idx.len(),
                ratio,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; data.rows.len()];
    for (c, mut idx) in by_class {
        idx.shuffle(&mut rng);
        for &i in &idx[..quota[&c]] {
            in_train[i] = true;
        }
    }
    let (mut tr, mut va) = (Vec::new(), Vec::new());
    for (r, t) in data.rows.iter().zip(in_train) {
        if t {
            tr.push(r.clone());
        } else {
            va.push(r.clone());
        }
    }
    Ok((LabeledDataset { rows: tr }, LabeledDataset { rows: va }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricStats {
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
}

impl MetricStats {
    fn of(ms: &[ClassMetrics]) -> Self {
        let pick = |f: fn(&ClassMetrics) -> f64| MeanStd::of(&ms.iter().map(f).collect::<Vec<_>>());
        Self {
            precision: pick(|m| m.precision),
            recall: pick(|m| m.recall),
            f1: pick(|m| m.f1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub runs: usize,
    pub ratio: f64,
    pub base_seed: u64,
    pub per_class: BTreeMap<BlockLabel, MetricStats>,
    /// Macro average over classes.
    pub all_label: MetricStats,
    pub accuracy: MeanStd,
    pub reports: Vec<ClassificationReport<BlockLabel>>,
}

/// Trains and validates `runs` times on fresh stratified splits; run `r`
/// uses seed `base_seed + r`.
pub fn repeated_eval(
    data: &LabeledDataset,
    hp: &SvmHyperparams,
    runs: usize,
    ratio: f64,
    base_seed: u64,
) -> Result<EvalSummary> {
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    hp.validate()?;
    let reports = (0..runs)
        .into_par_iter()
        .map(|r| {
            let seed = base_seed.wrapping_add(r as u64);
            one_run(data, hp, ratio, seed).map_err(|e| Error::InRun {
                run: r,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_class_values: BTreeMap<BlockLabel, Vec<ClassMetrics>> = BTreeMap::new();
    for rep in &reports {
        for (&c, &m) in &rep.per_class {
            per_class_values.entry(c).or_default().push(m);
        }
    }
    let macros: Vec<ClassMetrics> = reports.iter().map(|r| r.macro_avg).collect();
    let acc: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
    Ok(EvalSummary {
        runs,
        ratio,
        base_seed,
        per_class: per_class_values.iter().map(|(&c, v)| (c, MetricStats::of(v))).collect(),
        all_label: MetricStats::of(&macros),
        accuracy: MeanStd::of(&acc),
        reports,
    })
}

fn one_run(data: &LabeledDataset, hp: &SvmHyperparams, ratio: f64, seed: u64) -> Result<ClassificationReport<BlockLabel>> {
    let (tr, va) = split_dataset(data, ratio, seed)?;
    let model = train(&tr, hp, seed)?;
    let pairs = va
        .rows
        .iter()
        .map(|r| Ok((r.label, model.predict(&r.features)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(report_from_pairs(pairs))
}

impl EvalSummary {
    pub fn format_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} runs, training ratio {}", self.runs, self.ratio);
        let _ = writeln!(out, "{:<12} {:>17} {:>17} {:>17}", "Label", "Precision", "Recall", "F1");
        let cell = |m: MeanStd| format!("{:.4} ± {:.4}", m.mean, m.std);
        let mut line = |name: &str, s: &MetricStats| {
            let _ = writeln!(
                out,
                "{:<12} {:>17} {:>17} {:>17}",
                name,
                cell(s.precision),
                cell(s.recall),
                cell(s.f1)
            );
        };
        for (c, s) in &self.per_class {
            line(c.display_name(), s);
        }
        line("All label", &self.all_label);
        let _ = writeln!(out, "Accuracy {}", cell(self.accuracy));
        out
    }
}
