use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BoundingBox, DetectionSet, ZoneKind};

/// Intersection over union; 0 when the union is empty.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection(b).map_or(0.0, |i| i.area());
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// A zone as used for scoring; gold and predicted zones share this form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneRecord {
    pub doc_id: String,
    pub kind: ZoneKind,
    pub number: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_index: Option<u32>,
    pub bbox: BoundingBox,
}

#[derive(Deserialize)]
struct LooseZone {
    kind: ZoneKind,
    number: u32,
    #[serde(default)]
    page_index: Option<u32>,
    bbox: BoundingBox,
}

#[derive(Deserialize)]
struct LooseSet {
    doc_id: String,
    detections: Vec<LooseZone>,
}

/// Parses zones files: one detection set, an array of them, or several
/// concatenated (JSON lines). Only kind, number, bbox and an optional
/// page_index are read from each detection.
pub fn parse_zone_records(text: &str) -> Result<Vec<ZoneRecord>> {
    let mut out = Vec::new();
    let stream = serde_json::Deserializer::from_str(text).into_iter::<serde_json::Value>();
    for (i, v) in stream.enumerate() {
        let v = v.map_err(|e| Error::schema(format!("document {i}"), e.to_string()))?;
        let sets: Vec<LooseSet> = if v.is_array() {
            serde_path_to_error::deserialize(v)
        } else {
            serde_path_to_error::deserialize(v).map(|s| vec![s])
        }
        .map_err(|e| Error::schema(format!("document {i}: {}", e.path()), e.into_inner().to_string()))?;
        for s in sets {
            for z in s.detections {
                out.push(ZoneRecord {
                    doc_id: s.doc_id.clone(),
                    kind: z.kind,
                    number: z.number,
                    page_index: z.page_index,
                    bbox: z.bbox,
                });
            }
        }
    }
    Ok(out)
}

pub fn records_from_sets(sets: &[DetectionSet]) -> Vec<ZoneRecord> {
    sets.iter()
        .flat_map(|s| {
            s.detections.iter().map(|d| ZoneRecord {
                doc_id: s.doc_id.clone(),
                kind: d.kind,
                number: d.number,
                page_index: Some(d.page_index),
                bbox: d.zone,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct KindMetrics {
    pub gold: usize,
    pub predicted: usize,
    pub accepted: usize,
    /// accepted / gold, 0 without gold zones.
    pub accuracy: f64,
    pub false_alarms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneMatch {
    pub gold: ZoneRecord,
    /// Best same-key IoU, if any prediction shares the key.
    pub iou: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub iou_threshold: f64,
    pub per_kind: BTreeMap<ZoneKind, KindMetrics>,
    pub matches: Vec<ZoneMatch>,
    pub false_alarms: Vec<ZoneRecord>,
}

fn same_key(g: &ZoneRecord, p: &ZoneRecord) -> bool {
    g.doc_id == p.doc_id
        && g.kind == p.kind
        && g.number == p.number
        && match (g.page_index, p.page_index) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        }
}

/// Accepts a gold zone when an unused prediction with the same document,
/// kind and number (and page, when both name one) reaches `iou_threshold`.
pub fn detection_report(pred: &[ZoneRecord], gold: &[ZoneRecord], iou_threshold: f64) -> Result<DetectionMetrics> {
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(Error::InvalidParameter(format!(
            "IoU threshold must be in [0, 1], got {iou_threshold}"
        )));
    }
    let mut used = vec![false; pred.len()];
    let mut per_kind: BTreeMap<ZoneKind, KindMetrics> = BTreeMap::new();
    let mut matches = Vec::with_capacity(gold.len());
    for g in gold {
        let best = pred
            .iter()
            .enumerate()
            .filter(|(j, p)| !used[*j] && same_key(g, p))
            .map(|(j, p)| (j, iou(&g.bbox, &p.bbox)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        let accepted = best.is_some_and(|(_, v)| v >= iou_threshold);
        if let (true, Some((j, _))) = (accepted, best) {
            used[j] = true;
        }
        let k = per_kind.entry(g.kind).or_default();
        k.gold += 1;
        k.accepted += usize::from(accepted);
        matches.push(ZoneMatch {
            gold: g.clone(),
            iou: best.map(|b| b.1),
            accepted,
        });
    }
    let mut false_alarms = Vec::new();
    for (p, u) in pred.iter().zip(&used) {
        let k = per_kind.entry(p.kind).or_default();
        k.predicted += 1;
        if !u {
            k.false_alarms += 1;
            false_alarms.push(p.clone());
        }
    }
    for k in per_kind.values_mut() {
        k.accuracy = if k.gold == 0 { 0.0 } else { k.accepted as f64 / k.gold as f64 };
    }
    Ok(DetectionMetrics {
        iou_threshold,
        per_kind,
        matches,
        false_alarms,
    })
}

impl DetectionMetrics {
    pub fn format_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "IoU threshold {}", self.iou_threshold);
        let _ = writeln!(
            out,
            "{:<8} {:>6} {:>9} {:>9} {:>12} {:>9}",
            "Kind", "Gold", "Detected", "Accepted", "False alarm", "Accuracy"
        );
        for (kind, k) in &self.per_kind {
            let _ = writeln!(
                out,
                "{:<8} {:>6} {:>9} {:>9} {:>12} {:>9.4}",
                kind.to_string(),
                k.gold,
                k.predicted,
                k.accepted,
                k.false_alarms,
                k.accuracy
            );
        }
        out
    }
}
