//! Three-class RBF-kernel SVM over block feature vectors.
//!
//! Binary machines are trained with [`smo`]; the multiclass decision is
//! one-vs-one voting by default, one-vs-rest on request.

pub mod kernel;
mod protocol;
pub mod smo;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use tracing::warn;

pub use kernel::{rbf, Kernel, KernelMatrix};
pub use protocol::{repeated_eval, split_dataset, EvalSummary, MeanStd, MetricStats};

use crate::encoder::{FeatureRow, FeatureVector, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::model::{BlockKind, BlockLabel};

/// Current model file format version.
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MulticlassStrategy {
    #[default]
    OneVsOne,
    OneVsRest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmHyperparams {
    pub c: f64,
    pub gamma: f64,
    pub kernel: Kernel,
    /// KKT violation tolerance.
    pub tol: f64,
    /// Cap on SMO pair updates per binary machine.
    pub max_iter: usize,
    pub strategy: MulticlassStrategy,
}

impl Default for SvmHyperparams {
    fn default() -> Self {
        Self {
            c: 100.0,
            gamma: 0.1,
            kernel: Kernel::Rbf,
            tol: 1e-3,
            max_iter: 1_000_000,
            strategy: MulticlassStrategy::OneVsOne,
        }
    }
}

impl SvmHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("C must be positive, got {}", self.c)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRow {
    pub doc_id: String,
    pub block_id: u32,
    pub features: FeatureVector,
    pub label: BlockLabel,
}

/// Annotated training/validation rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub rows: Vec<LabeledRow>,
}

impl LabeledDataset {
    /// Rejects duplicate (doc_id, block_id) keys.
    pub fn new(rows: Vec<LabeledRow>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &rows {
            if !seen.insert((r.doc_id.as_str(), r.block_id)) {
                return Err(Error::DuplicateRow {
                    doc_id: r.doc_id.clone(),
                    block_id: r.block_id,
                });
            }
        }
        Ok(Self { rows })
    }

    /// Builds a dataset from JSONL rows. Image rows are skipped; every text row needs a label.
    pub fn from_feature_rows(rows: &[FeatureRow]) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.kind == BlockKind::Image {
                continue;
            }
            let label = r
                .label
                .ok_or_else(|| Error::schema(format!("line {}: label", i + 1), "label is null"))?;
            out.push(LabeledRow {
                doc_id: r.doc_id.clone().unwrap_or_default(),
                block_id: r.block_id,
                features: FeatureVector::from_array(r.features),
                label,
            });
        }
        Self::new(out)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_counts(&self) -> BTreeMap<BlockLabel, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.rows {
            *counts.entry(r.label).or_default() += 1;
        }
        counts
    }
}

/// One binary decision function `sum_k coefficients[k] * K(sv_k, x) + bias`;
/// positive values vote for `class_a`. `class_b` is `None` for one-vs-rest machines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    pub class_a: BlockLabel,
    pub class_b: Option<BlockLabel>,
    pub support_vectors: Vec<[f64; FEATURE_DIM]>,
    /// `alpha_k * y_k`, so `|coefficient| <= C`.
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

impl BinaryMachine {
    pub fn decision(&self, x: &[f64], gamma: f64) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * rbf(sv, x, gamma))
            .sum::<f64>()
            + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub seed: u64,
    pub rows: usize,
    /// SMO pair updates per machine.
    pub iterations: Vec<usize>,
    pub converged: bool,
}

/// Serialized multi-class SVM (the model.json format).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub classes: Vec<BlockLabel>,
    pub hyperparams: SvmHyperparams,
    pub machines: Vec<BinaryMachine>,
    pub metadata: ModelMetadata,
}

/// Decision value of one binary machine for one input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineVote {
    pub class_a: BlockLabel,
    pub class_b: Option<BlockLabel>,
    pub value: f64,
}

pub fn train(data: &LabeledDataset, hp: &SvmHyperparams, seed: u64) -> Result<TrainedModel> {
    hp.validate()?;
    for (i, r) in data.rows.iter().enumerate() {
        if !r.features.is_finite() {
            return Err(Error::NonFiniteFeature { row: i });
        }
    }
    let classes: Vec<BlockLabel> = data.class_counts().into_keys().collect();
    if classes.len() < 2 {
        return Err(Error::SingleClass(
            classes.first().map_or_else(|| "no rows".to_string(), |c| c.to_string()),
        ));
    }

    let points: Vec<[f64; FEATURE_DIM]> = data.rows.iter().map(|r| r.features.to_array()).collect();
    let gram = KernelMatrix::rbf(&points, hp.gamma);

    let tasks: Vec<(BlockLabel, Option<BlockLabel>)> = match hp.strategy {
        MulticlassStrategy::OneVsOne => classes
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| classes[i + 1..].iter().map(move |&b| (a, Some(b))))
            .collect(),
        MulticlassStrategy::OneVsRest => classes.iter().map(|&a| (a, None)).collect(),
    };

    let mut machines = Vec::with_capacity(tasks.len());
    let mut iterations = Vec::with_capacity(tasks.len());
    let mut converged = true;
    for (a, b) in tasks {
        let mut index = Vec::new();
        let mut y = Vec::new();
        for (i, r) in data.rows.iter().enumerate() {
            if r.label == a {
                index.push(i);
                y.push(1.0);
            } else if b.is_none() || Some(r.label) == b {
                index.push(i);
                y.push(-1.0);
            }
        }
        let sol = smo::solve(
            &smo::BinaryProblem {
                kernel: &gram,
                index: &index,
                y: &y,
            },
            hp.c,
            hp.tol,
            hp.max_iter,
        );
        if !sol.converged {
            warn!(class_a = %a, class_b = ?b, "binary machine hit the iteration cap");
        }
        converged &= sol.converged;
        iterations.push(sol.iterations);

        let mut support_vectors = Vec::new();
        let mut coefficients = Vec::new();
        for (k, &alpha) in sol.alpha.iter().enumerate() {
            if alpha > 0.0 {
                support_vectors.push(points[index[k]]);
                coefficients.push(alpha * y[k]);
            }
        }
        machines.push(BinaryMachine {
            class_a: a,
            class_b: b,
            support_vectors,
            coefficients,
            bias: sol.bias,
        });
    }

    Ok(TrainedModel {
        version: MODEL_VERSION,
        classes,
        hyperparams: hp.clone(),
        machines,
        metadata: ModelMetadata {
            seed,
            rows: data.len(),
            iterations,
            converged,
        },
    })
}

impl TrainedModel {
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<MachineVote>> {
        if x.len() != FEATURE_DIM {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_DIM,
                got: x.len(),
            });
        }
        Ok(self
            .machines
            .iter()
            .map(|m| MachineVote {
                class_a: m.class_a,
                class_b: m.class_b,
                value: m.decision(x, self.hyperparams.gamma),
            })
            .collect())
    }

    /// Predicts the label of a raw feature slice.
    pub fn predict_slice(&self, x: &[f64]) -> Result<BlockLabel> {
        let votes = self.decision_values(x)?;
        Ok(match self.hyperparams.strategy {
            MulticlassStrategy::OneVsOne => resolve_votes(&self.classes, &votes),
            MulticlassStrategy::OneVsRest => {
                let mut best: Option<(BlockLabel, f64)> = None;
                for v in &votes {
                    if best.is_none_or(|(_, d)| v.value > d) {
                        best = Some((v.class_a, v.value));
                    }
                }
                best.map_or(self.classes[0], |(c, _)| c)
            }
        })
    }

    pub fn predict(&self, fv: &FeatureVector) -> Result<BlockLabel> {
        self.predict_slice(&fv.to_array())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("models always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let model: TrainedModel = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::schema(e.path().to_string(), e.into_inner().to_string()))?;
        if model.version != MODEL_VERSION {
            return Err(Error::schema(
                "version",
                format!("unsupported model version {}", model.version),
            ));
        }
        for (i, m) in model.machines.iter().enumerate() {
            if m.support_vectors.len() != m.coefficients.len() {
                return Err(Error::schema(
                    format!("machines[{i}]"),
                    "support_vectors and coefficients differ in length",
                ));
            }
        }
        Ok(model)
    }
}

/// One-vs-one vote count; ties go to the larger summed signed decision
/// value, then to the earlier class.
pub fn resolve_votes(classes: &[BlockLabel], votes: &[MachineVote]) -> BlockLabel {
    let mut tally: BTreeMap<BlockLabel, (usize, f64)> = classes.iter().map(|&c| (c, (0, 0.0))).collect();
    for v in votes {
        let b = v.class_b.expect("one-vs-one machines name both classes");
        let winner = if v.value > 0.0 { v.class_a } else { b };
        tally.entry(winner).or_default().0 += 1;
        tally.entry(v.class_a).or_default().1 += v.value;
        tally.entry(b).or_default().1 -= v.value;
    }
    let mut best: Option<(BlockLabel, usize, f64)> = None;
    for (&c, &(n, s)) in &tally {
        let better = match best {
            None => true,
            Some((_, bn, bs)) => n > bn || (n == bn && s > bs),
        };
        if better {
            best = Some((c, n, s));
        }
    }
    best.expect("at least one class").0
}
