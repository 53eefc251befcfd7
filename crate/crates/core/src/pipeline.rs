//! End-to-end processing of one document: ingest, encode, classify, detect zones.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::classifier::TrainedModel;
use crate::config::Config;
use crate::encoder::{compute_context, encode_with_context, FeatureRow};
use crate::error::Result;
use crate::ingest::{assign_reading_order, normalize, IngestWarning};
use crate::model::{BlockKind, BlockLabel, DetectionSet, Document, ZoneDetection};
use crate::rules::{
    check_section_continuity, collect_captions, section_titles, segment_domains, CaptionMatch, Domain,
    DomainSegmentation, RuleSet, SectionTitle,
};
use crate::zones::detect_zones;

/// Normalizes a parsed dump and assigns reading order unless every block already has one.
pub fn prepare(doc: Document, cfg: &Config) -> Result<(Document, Vec<IngestWarning>)> {
    let (doc, warnings) = normalize(doc)?;
    let complete = doc.blocks().all(|b| b.reading_order.is_some());
    let doc = if complete {
        doc
    } else {
        assign_reading_order(doc, &cfg.reading_order)
    };
    Ok((doc, warnings))
}

/// Feature rows (in reading order) carrying predicted labels. Image blocks
/// are not classified; they are Supplement by definition.
pub fn classify_document(
    doc: &Document,
    model: &TrainedModel,
    cfg: &Config,
) -> Result<(Vec<FeatureRow>, BTreeMap<u32, BlockLabel>)> {
    if doc.block_count() == 0 {
        return Ok((Vec::new(), BTreeMap::new()));
    }
    let ctx = compute_context(doc)?;
    let vectors = encode_with_context(doc, &ctx, &cfg.encoder)?;
    let mut rows = Vec::with_capacity(vectors.len());
    let mut labels = BTreeMap::new();
    for (id, fv) in vectors {
        let kind = doc.block(id).map_or(BlockKind::Text, |b| b.kind);
        let label = match kind {
            BlockKind::Image => BlockLabel::Supplement,
            BlockKind::Text => model.predict(&fv)?,
        };
        labels.insert(id, label);
        rows.push(FeatureRow {
            doc_id: Some(doc.doc_id.clone()),
            block_id: id,
            kind,
            features: fv.to_array(),
            label: Some(label),
            text: None,
        });
    }
    Ok((rows, labels))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneAnalysis {
    pub captions: Vec<CaptionMatch>,
    pub sections: Vec<SectionTitle>,
    pub segmentation: Option<DomainSegmentation>,
    pub zones: Vec<ZoneDetection>,
    pub warnings: Vec<String>,
}

/// Caption matching, domain segmentation and zone merging for labeled blocks.
/// Appendix captions are skipped unless the config includes the appendix.
pub fn detect_document(doc: &Document, labels: &BTreeMap<u32, BlockLabel>, cfg: &Config) -> Result<ZoneAnalysis> {
    let rules = RuleSet::compile(&cfg.rules)?;
    let mut warnings = Vec::new();
    if doc.block_count() == 0 {
        return Ok(ZoneAnalysis {
            captions: Vec::new(),
            sections: Vec::new(),
            segmentation: None,
            zones: Vec::new(),
            warnings,
        });
    }
    let ctx = compute_context(doc)?;
    let scan = collect_captions(doc, &rules);
    for d in &scan.duplicates {
        warnings.push(format!("duplicate caption {} {} in block {} ignored", d.kind, d.number, d.block_id));
    }
    let sections = section_titles(doc, &ctx, &rules);
    warnings.extend(check_section_continuity(&sections));

    let segmentation = match segment_domains(doc, &ctx, &rules) {
        Ok(s) => Some(s),
        Err(e) => {
            warn!(doc = %doc.doc_id, "{e}; appendix not excluded");
            warnings.push(format!("{e}; appendix not excluded"));
            None
        }
    };
    let captions: Vec<CaptionMatch> = scan
        .captions
        .into_iter()
        .filter(|c| {
            cfg.zones.include_appendix
                || segmentation
                    .as_ref()
                    .is_none_or(|s| s.domain_of(c.block_id) != Some(Domain::Appendix))
        })
        .collect();

    let breakers: BTreeSet<u32> = sections.iter().map(|s| s.block_id).collect();
    let zones = detect_zones(doc, labels, &captions, &breakers, &cfg.zones, &cfg.reading_order)?;
    for z in zones.iter().filter(|z| z.flagged) {
        warnings.push(format!("{} {}: no supplement blocks next to the caption", z.kind, z.number));
    }
    Ok(ZoneAnalysis {
        captions,
        sections,
        segmentation,
        zones,
        warnings,
    })
}

/// Everything produced for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub doc_id: String,
    pub rows: Vec<FeatureRow>,
    pub labels: BTreeMap<u32, BlockLabel>,
    pub zones: Vec<ZoneDetection>,
    pub warnings: Vec<String>,
}

impl Analysis {
    pub fn detection_set(&self) -> DetectionSet {
        DetectionSet {
            doc_id: self.doc_id.clone(),
            detections: self.zones.clone(),
        }
    }
}

/// Classifies and detects zones on a prepared document.
pub fn analyze(doc: &Document, model: &TrainedModel, cfg: &Config) -> Result<Analysis> {
    let (rows, labels) = classify_document(doc, model, cfg)?;
    let z = detect_document(doc, &labels, cfg)?;
    Ok(Analysis {
        doc_id: doc.doc_id.clone(),
        rows,
        labels,
        zones: z.zones,
        warnings: z.warnings,
    })
}
