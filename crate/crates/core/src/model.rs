//! Layout primitives shared by every stage of the pipeline.
//!
//! Coordinates are page points with a top-left origin and y growing
//! downward. A [`Document`] serializes to the block-dump JSON format that the
//! PDF extractor produces and every pipeline stage reads.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Axis-aligned rectangle in page points, serialized as `[x0, y0, x1, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl From<[f64; 4]> for BoundingBox {
    fn from(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x0, b.y0, b.x1, b.y1]
    }
}

impl BoundingBox {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center_x(&self) -> f64 {
        0.5 * (self.x0 + self.x1)
    }

    pub fn center_y(&self) -> f64 {
        0.5 * (self.y0 + self.y1)
    }

    pub fn is_finite(&self) -> bool {
        self.x0.is_finite() && self.y0.is_finite() && self.x1.is_finite() && self.y1.is_finite()
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox::new(
            self.x0.min(other.x0),
            self.y0.min(other.y0),
            self.x1.max(other.x1),
            self.y1.max(other.y1),
        )
    }

    pub fn intersection(&self, other: &BoundingBox) -> Option<BoundingBox> {
        let b = BoundingBox::new(
            self.x0.max(other.x0),
            self.y0.max(other.y0),
            self.x1.min(other.x1),
            self.y1.min(other.y1),
        );
        (b.x0 < b.x1 && b.y0 < b.y1).then_some(b)
    }

    /// Length of the shared x-extent, zero when the boxes are horizontally disjoint.
    pub fn horizontal_overlap(&self, other: &BoundingBox) -> f64 {
        (self.x1.min(other.x1) - self.x0.max(other.x0)).max(0.0)
    }

    /// Distance between the vertical extents; zero when they overlap.
    pub fn vertical_gap(&self, other: &BoundingBox) -> f64 {
        (self.y0.max(other.y0) - self.y1.min(other.y1)).max(0.0)
    }

    pub fn contains(&self, other: &BoundingBox) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && self.x1 >= other.x1 && self.y1 >= other.y1
    }

    /// Union of an iterator of boxes, `None` when empty.
    pub fn union_all<'a>(boxes: impl IntoIterator<Item = &'a BoundingBox>) -> Option<BoundingBox> {
        boxes.into_iter().fold(None, |acc, b| match acc {
            None => Some(*b),
            Some(a) => Some(a.union(b)),
        })
    }
}

/// Font statistics of one text span inside a block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanFontStats {
    #[serde(rename = "font")]
    pub font_name: String,
    /// Points.
    #[serde(rename = "size")]
    pub font_size: f64,
    #[serde(rename = "chars")]
    pub char_count: u64,
}

impl SpanFontStats {
    pub fn new(font_name: impl Into<String>, font_size: f64, char_count: u64) -> Self {
        Self {
            font_name: font_name.into(),
            font_size,
            char_count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Text,
    Image,
}

/// One layout block of a page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextBlock {
    pub block_id: u32,
    /// Filled in from the enclosing page at ingest; not part of the per-block wire format.
    #[serde(skip)]
    pub page_index: u32,
    pub kind: BlockKind,
    pub bbox: BoundingBox,
    pub text: String,
    pub spans: Vec<SpanFontStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reading_order: Option<u32>,
}

impl TextBlock {
    pub fn is_image(&self) -> bool {
        self.kind == BlockKind::Image
    }

    pub fn total_chars(&self) -> u64 {
        self.spans.iter().map(|s| s.char_count).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub page_index: u32,
    pub width: f64,
    pub height: f64,
    pub blocks: Vec<TextBlock>,
}

impl Page {
    /// Blocks sorted by their assigned reading order (schema order when unassigned).
    pub fn blocks_in_reading_order(&self) -> Vec<&TextBlock> {
        let mut blocks: Vec<(usize, &TextBlock)> = self.blocks.iter().enumerate().collect();
        blocks.sort_by_key(|(i, b)| (b.reading_order.map_or(*i, |r| r as usize), *i));
        blocks.into_iter().map(|(_, b)| b).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub pages: Vec<Page>,
}

impl Document {
    pub fn blocks(&self) -> impl Iterator<Item = &TextBlock> {
        self.pages.iter().flat_map(|p| p.blocks.iter())
    }

    pub fn block_count(&self) -> usize {
        self.pages.iter().map(|p| p.blocks.len()).sum()
    }

    pub fn block(&self, block_id: u32) -> Option<&TextBlock> {
        self.blocks().find(|b| b.block_id == block_id)
    }

    pub fn page(&self, page_index: u32) -> Option<&Page> {
        self.pages.iter().find(|p| p.page_index == page_index)
    }

    /// Every block of the document, page by page, each page in reading order.
    pub fn reading_sequence(&self) -> Vec<&TextBlock> {
        let mut pages: Vec<&Page> = self.pages.iter().collect();
        pages.sort_by_key(|p| p.page_index);
        pages
            .into_iter()
            .flat_map(|p| p.blocks_in_reading_order())
            .collect()
    }
}

/// Class of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockLabel {
    BodyText,
    Supplement,
    Accessory,
}

impl BlockLabel {
    pub const ALL: [BlockLabel; 3] = [BlockLabel::BodyText, BlockLabel::Supplement, BlockLabel::Accessory];

    pub fn as_str(&self) -> &'static str {
        match self {
            BlockLabel::BodyText => "body_text",
            BlockLabel::Supplement => "supplement",
            BlockLabel::Accessory => "accessory",
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            BlockLabel::BodyText => "Body-text",
            BlockLabel::Supplement => "Supplement",
            BlockLabel::Accessory => "Accessory",
        }
    }
}

impl fmt::Display for BlockLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BlockLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "body_text" => Ok(BlockLabel::BodyText),
            "supplement" => Ok(BlockLabel::Supplement),
            "accessory" => Ok(BlockLabel::Accessory),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZoneKind {
    Figure,
    Table,
}

impl fmt::Display for ZoneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZoneKind::Figure => "Figure",
            ZoneKind::Table => "Table",
        })
    }
}

/// A detected figure or table region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneDetection {
    pub kind: ZoneKind,
    pub number: u32,
    pub page_index: u32,
    #[serde(rename = "bbox")]
    pub zone: BoundingBox,
    pub caption_block_id: u32,
    pub member_block_ids: Vec<u32>,
    /// Set when no supplement blocks could be attached to the caption.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub flagged: bool,
}

/// Detections of one document, the zones.json wire format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSet {
    pub doc_id: String,
    pub detections: Vec<ZoneDetection>,
}
