//! Eight-element block encoding.
//!
//! Each block is described relative to its document:
//!
//! | code | value |
//! |------|-------|
//! | left, right | `x0 / boundary_left`, `x1 / boundary_right` of the block's page |
//! | top, bottom | `y0 / boundary_top`, `y1 / boundary_bottom` of the block's page |
//! | width, height | block size over the largest block size in the document |
//! | ft | 1 when the block's dominant font is the body font, else 0 |
//! | fs | block dominant size over the body font size |
//!
//! The body font is the font carrying the most characters in the document;
//! the body size is the char-weighted modal size among body-font spans.
//! Sizes are bucketed to 0.1 pt before any histogramming.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::config::{DegenerateBoundaryPolicy, EncoderConfig};
use crate::error::{Error, Result};
use crate::model::{BlockKind, BlockLabel, Document, TextBlock};

/// Boundaries closer to zero than this trigger the degenerate-boundary policy.
pub const BOUNDARY_EPSILON: f64 = 1e-6;

pub const FEATURE_DIM: usize = 8;

/// Font size in tenths of a point.
pub fn size_bucket(size: f64) -> i64 {
    (size * 10.0).round() as i64
}

fn bucket_points(bucket: i64) -> f64 {
    bucket as f64 / 10.0
}

/// Key with the largest count; ties go to the smallest key.
fn argmax<K: Clone + Ord>(hist: &BTreeMap<K, u64>) -> Option<(K, bool)> {
    let mut best: Option<(&K, u64)> = None;
    let mut tied = false;
    for (k, &v) in hist {
        match best {
            Some((_, bv)) if v < bv => {}
            Some((_, bv)) if v == bv => tied = true,
            _ => {
                best = Some((k, v));
                tied = false;
            }
        }
    }
    best.map(|(k, _)| (k.clone(), tied))
}

/// Char-weighted modal font of a block.
pub fn dominant_font(block: &TextBlock) -> Option<String> {
    let mut hist: BTreeMap<String, u64> = BTreeMap::new();
    for s in &block.spans {
        *hist.entry(s.font_name.clone()).or_default() += s.char_count;
    }
    argmax(&hist).map(|(f, _)| f)
}

/// Char-weighted modal size bucket of a block, over all its spans.
pub fn dominant_size(block: &TextBlock) -> Option<i64> {
    let mut hist: BTreeMap<i64, u64> = BTreeMap::new();
    for s in &block.spans {
        *hist.entry(size_bucket(s.font_size)).or_default() += s.char_count;
    }
    argmax(&hist).map(|(s, _)| s)
}

/// Boundary lines and size of one page.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageFrame {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
    pub page_width: f64,
    pub page_height: f64,
}

/// Normalization constants of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingContext {
    /// Boundary lines per page index.
    pub frames: BTreeMap<u32, PageFrame>,
    pub max_width: f64,
    pub max_height: f64,
    pub body_font: String,
    /// Points, on the 0.1 pt grid.
    pub body_font_size: f64,
    /// Characters per font over every text span.
    pub font_char_histogram: BTreeMap<String, u64>,
    /// Characters per size bucket, body-font spans only.
    pub size_char_histogram: BTreeMap<i64, u64>,
    /// Whether the body font was chosen by the name tie-break.
    pub body_font_tied: bool,
}

impl EncodingContext {
    pub fn frame(&self, page_index: u32) -> Option<&PageFrame> {
        self.frames.get(&page_index)
    }

    /// `Code_ft = 1` for this block.
    pub fn is_body_font(&self, block: &TextBlock) -> bool {
        !block.is_image() && dominant_font(block).as_deref() == Some(self.body_font.as_str())
    }
}

pub fn compute_context(doc: &Document) -> Result<EncodingContext> {
    let mut fonts: BTreeMap<String, u64> = BTreeMap::new();
    for block in doc.blocks().filter(|b| b.kind == BlockKind::Text) {
        for s in &block.spans {
            *fonts.entry(s.font_name.clone()).or_default() += s.char_count;
        }
    }
    let (body_font, body_font_tied) = argmax(&fonts)
        .filter(|_| fonts.values().any(|&c| c > 0))
        .ok_or_else(|| Error::EmptyDocument(doc.doc_id.clone()))?;
    if body_font_tied {
        warn!(doc = %doc.doc_id, font = %body_font, "body font tie broken by name");
    }

    let mut sizes: BTreeMap<i64, u64> = BTreeMap::new();
    for block in doc.blocks().filter(|b| b.kind == BlockKind::Text) {
        for s in block.spans.iter().filter(|s| s.font_name == body_font) {
            *sizes.entry(size_bucket(s.font_size)).or_default() += s.char_count;
        }
    }
    let (body_bucket, _) = argmax(&sizes).expect("body font has spans");
    let body_font_size = bucket_points(body_bucket);
    if body_font_size <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "body font size rounds to {body_font_size} pt"
        )));
    }

    let mut frames = BTreeMap::new();
    for page in &doc.pages {
        let mut it = page.blocks.iter();
        let Some(first) = it.next() else { continue };
        let mut f = PageFrame {
            left: first.bbox.x0,
            right: first.bbox.x1,
            top: first.bbox.y0,
            bottom: first.bbox.y1,
            page_width: page.width,
            page_height: page.height,
        };
        for b in it {
            f.left = f.left.min(b.bbox.x0);
            f.right = f.right.max(b.bbox.x1);
            f.top = f.top.min(b.bbox.y0);
            f.bottom = f.bottom.max(b.bbox.y1);
        }
        frames.insert(page.page_index, f);
    }

    let max_width = doc.blocks().map(|b| b.bbox.width()).fold(0.0, f64::max);
    let max_height = doc.blocks().map(|b| b.bbox.height()).fold(0.0, f64::max);

    Ok(EncodingContext {
        frames,
        max_width,
        max_height,
        body_font,
        body_font_size,
        font_char_histogram: fonts,
        size_char_histogram: sizes,
        body_font_tied,
    })
}

/// The eight codes of one block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub code_left: f64,
    pub code_right: f64,
    pub code_top: f64,
    pub code_bottom: f64,
    pub code_width: f64,
    pub code_height: f64,
    pub code_ft: f64,
    pub code_fs: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        [
            self.code_left,
            self.code_right,
            self.code_top,
            self.code_bottom,
            self.code_width,
            self.code_height,
            self.code_ft,
            self.code_fs,
        ]
    }

    pub fn from_array(v: [f64; FEATURE_DIM]) -> Self {
        Self {
            code_left: v[0],
            code_right: v[1],
            code_top: v[2],
            code_bottom: v[3],
            code_width: v[4],
            code_height: v[5],
            code_ft: v[6],
            code_fs: v[7],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

fn normalize_by(
    value: f64,
    boundary: f64,
    fallback: f64,
    side: &'static str,
    page_index: u32,
    policy: DegenerateBoundaryPolicy,
) -> Result<f64> {
    if boundary >= BOUNDARY_EPSILON {
        return Ok(value / boundary);
    }
    match policy {
        DegenerateBoundaryPolicy::Error => Err(Error::DegenerateBoundary {
            page_index,
            side,
            value: boundary,
        }),
        DegenerateBoundaryPolicy::PageFallback => Ok(value / fallback),
    }
}

pub fn encode_block(block: &TextBlock, ctx: &EncodingContext, cfg: &EncoderConfig) -> Result<FeatureVector> {
    let page = block.page_index;
    let f = ctx.frame(page).ok_or_else(|| {
        Error::InvalidParameter(format!("page {page} is not part of the encoding context"))
    })?;
    let policy = cfg.degenerate_boundary;
    let b = &block.bbox;

    let (code_ft, code_fs) = if block.is_image() {
        (0.0, 1.0)
    } else {
        let ft = if ctx.is_body_font(block) { 1.0 } else { 0.0 };
        let size = dominant_size(block).map(bucket_points).unwrap_or(ctx.body_font_size);
        (ft, size / ctx.body_font_size)
    };

    Ok(FeatureVector {
        code_left: normalize_by(b.x0, f.left, f.page_width, "left", page, policy)?,
        code_right: normalize_by(b.x1, f.right, f.page_width, "right", page, policy)?,
        code_top: normalize_by(b.y0, f.top, f.page_height, "top", page, policy)?,
        code_bottom: normalize_by(b.y1, f.bottom, f.page_height, "bottom", page, policy)?,
        code_width: b.width() / ctx.max_width,
        code_height: b.height() / ctx.max_height,
        code_ft,
        code_fs,
    })
}

/// One vector per block, in reading order.
pub fn encode_document(doc: &Document, cfg: &EncoderConfig) -> Result<Vec<(u32, FeatureVector)>> {
    if doc.block_count() == 0 {
        return Ok(Vec::new());
    }
    let ctx = compute_context(doc)?;
    encode_with_context(doc, &ctx, cfg)
}

pub fn encode_with_context(
    doc: &Document,
    ctx: &EncodingContext,
    cfg: &EncoderConfig,
) -> Result<Vec<(u32, FeatureVector)>> {
    doc.reading_sequence()
        .into_iter()
        .map(|b| {
            encode_block(b, ctx, cfg)
                .map(|fv| (b.block_id, fv))
                .map_err(|e| Error::InBlock {
                    block_id: b.block_id,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// A feature-matrix / dataset row (one JSON line).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
    pub block_id: u32,
    #[serde(default = "default_kind")]
    pub kind: BlockKind,
    pub features: [f64; FEATURE_DIM],
    pub label: Option<BlockLabel>,
    /// Leading block text, only in annotation templates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

fn default_kind() -> BlockKind {
    BlockKind::Text
}

/// Feature rows of a document, in reading order, unlabeled.
pub fn feature_rows(doc: &Document, cfg: &EncoderConfig) -> Result<Vec<FeatureRow>> {
    let vectors = encode_document(doc, cfg)?;
    Ok(vectors
        .into_iter()
        .map(|(id, fv)| FeatureRow {
            doc_id: Some(doc.doc_id.clone()),
            block_id: id,
            kind: doc.block(id).map_or(BlockKind::Text, |b| b.kind),
            features: fv.to_array(),
            label: None,
            text: None,
        })
        .collect())
}

pub fn write_jsonl(rows: &[FeatureRow]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("rows always serialize"));
        out.push('\n');
    }
    out
}

/// Parses JSON lines; blank lines are skipped. Error paths are `line N: field`.
pub fn read_jsonl(text: &str) -> Result<Vec<FeatureRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let de = &mut serde_json::Deserializer::from_str(line);
        let row: FeatureRow = serde_path_to_error::deserialize(de).map_err(|e| {
            Error::schema(format!("line {}: {}", i + 1, e.path()), e.into_inner().to_string())
        })?;
        rows.push(row);
    }
    Ok(rows)
}
