//! Block-dump parsing, validation and reading-order assignment.

use std::collections::HashSet;

use tracing::warn;

use crate::config::ReadingOrderConfig;
use crate::error::{Error, Result};
use crate::model::{BlockKind, Document, Page, TextBlock};

/// Why a block was dropped or altered during ingest.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestWarning {
    pub page_index: u32,
    pub block_id: Option<u32>,
    pub message: String,
}

/// Parses and validates a block dump.
pub fn parse_block_dump(bytes: &[u8]) -> Result<Document> {
    parse_block_dump_report(bytes).map(|(doc, _)| doc)
}

/// Like [`parse_block_dump`], also returning what normalization changed.
pub fn parse_block_dump_report(bytes: &[u8]) -> Result<(Document, Vec<IngestWarning>)> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::schema(path, e.into_inner().to_string())
    })?;
    normalize(doc)
}

/// Validates a document and applies ingest normalization.
///
/// Negative coordinates are clamped to zero; spans without characters are
/// removed; text blocks with empty text or no spans are dropped.
pub fn normalize(mut doc: Document) -> Result<(Document, Vec<IngestWarning>)> {
    let mut warnings = Vec::new();
    let mut seen_pages = HashSet::new();
    let mut seen_ids = HashSet::new();

    for (pi, page) in doc.pages.iter_mut().enumerate() {
        if !seen_pages.insert(page.page_index) {
            return Err(Error::schema(
                format!("pages[{pi}].page_index"),
                format!("duplicate page_index {}", page.page_index),
            ));
        }
        if !(page.width.is_finite() && page.width > 0.0 && page.height.is_finite() && page.height > 0.0) {
            return Err(Error::schema(
                format!("pages[{pi}]"),
                format!("page size must be positive, got {}x{}", page.width, page.height),
            ));
        }

        let page_index = page.page_index;
        let blocks = std::mem::take(&mut page.blocks);
        for (bi, mut block) in blocks.into_iter().enumerate() {
            if !seen_ids.insert(block.block_id) {
                return Err(Error::schema(
                    format!("pages[{pi}].blocks[{bi}].block_id"),
                    format!("duplicate block_id {}", block.block_id),
                ));
            }
            block.page_index = page_index;
            let geometry = |message: String| Error::Geometry {
                page_index,
                block_id: block.block_id,
                message,
            };

            let b = block.bbox;
            if !b.is_finite() {
                return Err(geometry(format!("non-finite bbox {:?}", <[f64; 4]>::from(b))));
            }
            if b.x0 > b.x1 || b.y0 > b.y1 {
                return Err(geometry(format!(
                    "inverted bbox [{}, {}, {}, {}]",
                    b.x0, b.y0, b.x1, b.y1
                )));
            }
            block.bbox.x0 = b.x0.max(0.0);
            block.bbox.y0 = b.y0.max(0.0);
            block.bbox.x1 = b.x1.max(0.0);
            block.bbox.y1 = b.y1.max(0.0);
            if block.bbox.width() <= 0.0 || block.bbox.height() <= 0.0 {
                return Err(geometry("zero-area bbox".into()));
            }

            for (si, span) in block.spans.iter().enumerate() {
                if !(span.font_size.is_finite() && span.font_size > 0.0) {
                    return Err(Error::schema(
                        format!("pages[{pi}].blocks[{bi}].spans[{si}].size"),
                        format!("font size must be positive, got {}", span.font_size),
                    ));
                }
            }

            match block.kind {
                BlockKind::Image => {
                    if !block.text.is_empty() || !block.spans.is_empty() {
                        warnings.push(IngestWarning {
                            page_index,
                            block_id: Some(block.block_id),
                            message: "image block text and spans discarded".into(),
                        });
                        block.text.clear();
                        block.spans.clear();
                    }
                }
                BlockKind::Text => {
                    block.spans.retain(|s| s.char_count > 0);
                    if block.text.trim().is_empty() || block.spans.is_empty() {
                        warnings.push(IngestWarning {
                            page_index,
                            block_id: Some(block.block_id),
                            message: "text block without text or spans dropped".into(),
                        });
                        continue;
                    }
                }
            }
            page.blocks.push(block);
        }

        if !has_valid_reading_order(page) && page.blocks.iter().any(|b| b.reading_order.is_some()) {
            warnings.push(IngestWarning {
                page_index,
                block_id: None,
                message: "inconsistent reading_order discarded".into(),
            });
            for b in &mut page.blocks {
                b.reading_order = None;
            }
        }
    }

    for w in &warnings {
        warn!(page = w.page_index, block = ?w.block_id, "{}", w.message);
    }
    Ok((doc, warnings))
}

fn has_valid_reading_order(page: &Page) -> bool {
    let mut seen = vec![false; page.blocks.len()];
    for b in &page.blocks {
        match b.reading_order {
            Some(r) if (r as usize) < seen.len() && !seen[r as usize] => seen[r as usize] = true,
            _ => return false,
        }
    }
    true
}

/// Column structure detected on a page.
#[derive(Debug, Clone, PartialEq)]
pub struct PageColumns {
    pub single_column: bool,
    /// Column index (0 or 1) per block, aligned with `page.blocks`.
    pub columns: Vec<u8>,
}

/// Detects whether the page is single-column and assigns blocks to columns.
///
/// A page is single-column when blocks wider than `wide_block_ratio` of the
/// page width carry more than `single_column_share` of the total text-block
/// width. Otherwise a block belongs to the left column iff its x-center lies
/// left of the page midline.
pub fn page_columns(page: &Page, cfg: &ReadingOrderConfig) -> PageColumns {
    let text: Vec<&TextBlock> = page.blocks.iter().filter(|b| !b.is_image()).collect();
    let total: f64 = text.iter().map(|b| b.bbox.width()).sum();
    let wide: f64 = text
        .iter()
        .map(|b| b.bbox.width())
        .filter(|w| *w > cfg.wide_block_ratio * page.width)
        .sum();
    let single_column = total <= 0.0 || wide / total > cfg.single_column_share;
    let mid = page.width / 2.0;
    let columns = page
        .blocks
        .iter()
        .map(|b| u8::from(!single_column && b.bbox.center_x() >= mid))
        .collect();
    PageColumns { single_column, columns }
}

/// Assigns a per-page reading order: left column then right column, each
/// top to bottom (ties by x0, then block id).
pub fn assign_reading_order(mut doc: Document, cfg: &ReadingOrderConfig) -> Document {
    for page in &mut doc.pages {
        let cols = page_columns(page, cfg);
        let mut idx: Vec<usize> = (0..page.blocks.len()).collect();
        idx.sort_by(|&a, &b| {
            let (ba, bb) = (&page.blocks[a], &page.blocks[b]);
            cols.columns[a]
                .cmp(&cols.columns[b])
                .then(ba.bbox.y0.total_cmp(&bb.bbox.y0))
                .then(ba.bbox.x0.total_cmp(&bb.bbox.x0))
                .then(ba.block_id.cmp(&bb.block_id))
        });
        for (rank, i) in idx.into_iter().enumerate() {
            page.blocks[i].reading_order = Some(rank as u32);
        }
    }
    doc
}

/// Serializes a document in the block-dump format.
pub fn to_dump_json(doc: &Document) -> String {
    serde_json::to_string_pretty(doc).expect("documents always serialize")
}
