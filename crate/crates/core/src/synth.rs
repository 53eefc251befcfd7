//! Deterministic generator of two-column, conference-style article layouts
//! with gold block labels and gold figure/table zones.
//!
//! Geometry follows an A4 page (595 x 842 pt) with columns at x 71..289 and
//! 306..524. Floats sit at column tops (sometimes mid-column) with their
//! captions, body paragraphs are separated by 4-8 pt and floats by at least
//! 14 pt. Some documents stack two tables in one column.

use std::collections::{BTreeMap, VecDeque};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifier::{LabeledDataset, LabeledRow};
use crate::config::{EncoderConfig, ReadingOrderConfig};
use crate::encoder::{encode_document, FeatureRow, FeatureVector};
use crate::error::Result;
use crate::ingest::assign_reading_order;
use crate::model::{
    BlockKind, BlockLabel, BoundingBox, DetectionSet, Document, Page, SpanFontStats, TextBlock, ZoneDetection,
    ZoneKind,
};

pub const PAGE_WIDTH: f64 = 595.0;
pub const PAGE_HEIGHT: f64 = 842.0;
pub const COLUMNS: [(f64, f64); 2] = [(71.0, 289.0), (306.0, 524.0)];
const TOP: f64 = 72.0;
const BOTTOM: f64 = 770.0;

pub const BODY_FONT: &str = "NimbusRomNo9L-Regu";
const ITALIC_FONT: &str = "NimbusRomNo9L-ReguItal";
const BOLD_FONT: &str = "NimbusRomNo9L-Medi";
const SANS_FONT: &str = "NimbusSanL-Regu";
const MATH_FONT: &str = "CMMI10";

const BODY_SIZE: f64 = 11.0;
const LEADING: f64 = 12.4;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    /// Probability that a document stacks two tables in one column.
    pub continuous_table_rate: f64,
    /// Probability that a document puts table captions above tables.
    pub table_caption_above_rate: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            continuous_table_rate: 0.35,
            table_caption_above_rate: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDoc {
    pub doc: Document,
    /// Gold label of every block, images included.
    pub labels: BTreeMap<u32, BlockLabel>,
    pub gold: DetectionSet,
    /// Pages holding two stacked tables.
    pub continuous_table_pages: Vec<u32>,
}

impl SynthDoc {
    /// Feature rows carrying gold labels, in reading order.
    pub fn labeled_rows(&self, cfg: &EncoderConfig) -> Result<Vec<FeatureRow>> {
        Ok(encode_document(&self.doc, cfg)?
            .into_iter()
            .map(|(id, fv)| FeatureRow {
                doc_id: Some(self.doc.doc_id.clone()),
                block_id: id,
                kind: self.doc.block(id).map_or(BlockKind::Text, |b| b.kind),
                features: fv.to_array(),
                label: Some(self.labels[&id]),
                text: None,
            })
            .collect())
    }
}

/// Text-block rows of a corpus (images excluded) with gold labels.
pub fn corpus_dataset(corpus: &[SynthDoc], cfg: &EncoderConfig) -> Result<LabeledDataset> {
    let mut rows = Vec::new();
    for d in corpus {
        for r in d.labeled_rows(cfg)? {
            if r.kind == BlockKind::Image {
                continue;
            }
            rows.push(LabeledRow {
                doc_id: d.doc.doc_id.clone(),
                block_id: r.block_id,
                features: FeatureVector::from_array(r.features),
                label: r.label.expect("gold rows are labeled"),
            });
        }
    }
    LabeledDataset::new(rows)
}

/// `n` documents named `{prefix}-{i:03}`; document `i` uses seed `seed + i`.
pub fn generate_corpus(prefix: &str, n: usize, seed: u64, opts: &SynthOptions) -> Vec<SynthDoc> {
    (0..n)
        .map(|i| generate_document(&format!("{prefix}-{i:03}"), seed.wrapping_add(i as u64), opts))
        .collect()
}

const WORDS: &[&str] = &[
    "model", "data", "results", "training", "learning", "the", "of", "and", "we", "propose", "method", "text",
    "block", "layout", "performance", "approach", "features", "analysis", "using", "our", "for", "with", "task",
    "corpus", "evaluation", "baseline", "shows", "accuracy", "neural", "language", "document", "structure",
    "system", "in", "is", "on", "that", "this", "between", "each", "set", "large", "improves", "compared",
];
const OPENERS: &[&str] = &[
    "We", "Our", "The", "This", "In", "These", "Each", "Following", "Recent", "Previous", "Moreover", "However",
];
const SECTIONS: &[&str] = &[
    "Related Work", "Background", "Method", "Model", "Experimental Setup", "Experiments", "Results", "Analysis",
    "Discussion", "Error Analysis", "Limitations", "Conclusion",
];
const SUBSECTIONS: &[&str] = &["Data", "Setup", "Training", "Baselines", "Metrics", "Ablation", "Encoding"];
const METHODS: &[&str] = &["BERT", "LSTM", "CRF", "SVM", "Ours", "RoBERTa", "CNN", "GPT-2", "T5", "XLNet"];
const HEADERS: &[&str] = &["Model", "Acc", "F1", "Prec", "Rec", "BLEU", "Params", "Time", "Dev", "Test"];
const AXES: &[&str] = &["accuracy", "epoch", "loss", "F1 score", "tokens", "steps", "recall"];

struct Gen {
    rng: ChaCha8Rng,
    doc_id: String,
    pages: Vec<Page>,
    labels: BTreeMap<u32, BlockLabel>,
    gold: Vec<ZoneDetection>,
    next_id: u32,
    continuous_pages: Vec<u32>,
}

#[derive(Debug, Clone)]
enum Flow {
    Heading { text: String, size: f64, centered: bool },
    Para { lines: usize, size: f64, indent: f64, label: BlockLabel },
    Equation { number: u32 },
}

#[derive(Debug, Clone)]
enum FloatSpec {
    Figure { number: u32, raster: bool, height: f64, caption_lines: usize },
    Table { number: u32, rows: usize, cols: usize, row_blocks: bool, caption_lines: usize },
}

impl Gen {
    fn id(&mut self) -> u32 {
        self.next_id += 1;
        self.next_id - 1
    }

    fn u(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    fn words(&mut self, chars: usize) -> String {
        let mut s = String::new();
        while s.len() < chars {
            if !s.is_empty() {
                s.push(' ');
            }
            let w = *WORDS.choose(&mut self.rng).unwrap();
            s.push_str(w);
        }
        s
    }

    fn sentence_text(&mut self, chars: usize) -> String {
        let opener = *OPENERS.choose(&mut self.rng).unwrap();
        let rest = self.words(chars.saturating_sub(opener.len() + 1).max(3));
        format!("{opener} {rest}.")
    }

    fn push(&mut self, page: usize, block: TextBlock, label: BlockLabel) -> u32 {
        let id = block.block_id;
        self.labels.insert(id, label);
        self.pages[page].blocks.push(block);
        id
    }

    fn text_block(&mut self, page: usize, bbox: BoundingBox, text: String, spans: Vec<SpanFontStats>, label: BlockLabel) -> u32 {
        let id = self.id();
        let block = TextBlock {
            block_id: id,
            page_index: page as u32,
            kind: BlockKind::Text,
            bbox,
            text,
            spans,
            reading_order: None,
        };
        self.push(page, block, label)
    }

    fn simple(&mut self, page: usize, bbox: BoundingBox, text: String, font: &str, size: f64, label: BlockLabel) -> u32 {
        let chars = text.chars().filter(|c| !c.is_whitespace()).count().max(1) as u64;
        self.text_block(page, bbox, text, vec![SpanFontStats::new(font, size, chars)], label)
    }

    fn image(&mut self, page: usize, bbox: BoundingBox) -> u32 {
        let id = self.id();
        let block = TextBlock {
            block_id: id,
            page_index: page as u32,
            kind: BlockKind::Image,
            bbox,
            text: String::new(),
            spans: Vec::new(),
            reading_order: None,
        };
        self.push(page, block, BlockLabel::Supplement)
    }

    fn new_page(&mut self) -> usize {
        let p = self.pages.len();
        self.pages.push(Page {
            page_index: p as u32,
            width: PAGE_WIDTH,
            height: PAGE_HEIGHT,
            blocks: Vec::new(),
        });
        if p == 0 {
            let text = format!(
                "Proceedings of the Annual Meeting of the Association, pages {}-{}",
                self.rng.random_range(100..900),
                self.rng.random_range(900..999)
            );
            let w = char_width(&text, 9.0).min(COLUMNS[0].1 - COLUMNS[0].0);
            let bbox = BoundingBox::new(71.0, 778.0, 71.0 + w, 788.0);
            self.simple(p, bbox, text, ITALIC_FONT, 9.0, BlockLabel::Accessory);
        } else {
            let text = (p + 1).to_string();
            let w = char_width(&text, 10.0);
            let bbox = BoundingBox::new(297.5 - w / 2.0, 785.0, 297.5 + w / 2.0, 795.0);
            self.simple(p, bbox, text, BODY_FONT, 10.0, BlockLabel::Accessory);
        }
        p
    }

    /// Title and author blocks across the top of the first page; returns the
    /// y where the columns start.
    fn front_matter(&mut self) -> f64 {
        let title_lines = self.rng.random_range(1..=2);
        let mut y = 80.0;
        for _ in 0..title_lines {
            let n = self.rng.random_range(30..55);
            let text = capitalize(&self.words(n));
            let w = char_width(&text, 15.0).min(440.0);
            let bbox = BoundingBox::new(297.5 - w / 2.0, y, 297.5 + w / 2.0, y + 17.0);
            self.simple(0, bbox, text, BOLD_FONT, 15.0, BlockLabel::Accessory);
            y += 19.0;
        }
        y += 12.0;
        let authors = self.rng.random_range(2..=3);
        let slot = 440.0 / authors as f64;
        let mut bottom: f64 = y;
        for a in 0..authors {
            let lines = self.rng.random_range(3..=4);
            let w = self.u(100.0, slot - 12.0);
            let cx = 77.5 + slot * (a as f64 + 0.5);
            let h = lines as f64 * 13.0;
            let bbox = BoundingBox::new(cx - w / 2.0, y, cx + w / 2.0, y + h);
            let text = format!("Author {} University of Somewhere author{}@example.edu", a + 1, a + 1);
            self.simple(0, bbox, text, BODY_FONT, 12.0, BlockLabel::Accessory);
            bottom = bottom.max(y + h);
        }
        bottom + 24.0
    }

    fn flow_height(&self, f: &Flow) -> f64 {
        match f {
            Flow::Heading { size, .. } => size + 2.0,
            Flow::Para { lines, .. } => *lines as f64 * LEADING,
            Flow::Equation { .. } => 14.0,
        }
    }

    fn place_flow(&mut self, page: usize, col: usize, y: f64, f: &Flow) {
        let (x0, x1) = COLUMNS[col];
        match f {
            Flow::Heading { text, size, centered } => {
                let w = char_width(text, *size).min(x1 - x0);
                let (a, b) = if *centered {
                    let c = (x0 + x1) / 2.0;
                    (c - w / 2.0, c + w / 2.0)
                } else {
                    (x0, x0 + w)
                };
                let bbox = BoundingBox::new(a, y, b, y + size + 2.0);
                self.simple(page, bbox, text.clone(), BOLD_FONT, *size, BlockLabel::Supplement);
            }
            Flow::Para { lines, size, indent, label } => {
                let h = *lines as f64 * LEADING;
                let bbox = BoundingBox::new(x0 + indent, y, x1 - indent, y + h);
                let per_line = ((x1 - x0 - 2.0 * indent) / (0.48 * size)) as usize;
                let chars = per_line * lines - self.rng.random_range(0..per_line / 2);
                let text = self.sentence_text(chars);
                let total = text.chars().filter(|c| !c.is_whitespace()).count() as u64;
                let mut spans = vec![SpanFontStats::new(BODY_FONT, *size, total)];
                if self.rng.random_bool(0.3) {
                    let it = (total / 12).max(1);
                    spans[0].char_count = total - it;
                    spans.push(SpanFontStats::new(ITALIC_FONT, *size, it));
                }
                self.text_block(page, bbox, text, spans, *label);
            }
            Flow::Equation { number } => {
                let w = self.u(60.0, 150.0);
                let c = (x0 + x1) / 2.0;
                let bbox = BoundingBox::new(c - w / 2.0, y, x1, y + 14.0);
                let text = format!("y = f(x; θ) + λ ||θ||² ({number})");
                self.simple(page, bbox, text, MATH_FONT, 11.0, BlockLabel::Supplement);
            }
        }
    }

    fn caption_text(&mut self, kind: ZoneKind, number: u32, lines: usize, per_line: usize) -> String {
        let head = format!("{kind} {number}: ");
        let body = self.words((per_line * lines).saturating_sub(head.len() + per_line / 4).max(8));
        format!("{head}{}.", capitalize(&body))
    }

    /// Caption block at `y`; returns its bottom.
    fn caption(&mut self, page: usize, col: usize, y: f64, kind: ZoneKind, number: u32, lines: usize) -> (u32, f64) {
        let (x0, x1) = COLUMNS[col];
        let per_line = ((x1 - x0) / (0.48 * 10.0)) as usize;
        let short = lines == 1 && self.rng.random_bool(0.5);
        let text = if short {
            let n = self.rng.random_range(10..25);
            format!("{kind} {number}: {}.", capitalize(&self.words(n)))
        } else {
            self.caption_text(kind, number, lines, per_line)
        };
        let h = lines as f64 * 11.5;
        let bbox = if short {
            let w = char_width(&text, 10.0).min(x1 - x0);
            let c = (x0 + x1) / 2.0;
            BoundingBox::new(c - w / 2.0, y, c + w / 2.0, y + h)
        } else {
            BoundingBox::new(x0, y, x1, y + h)
        };
        let id = self.simple(page, bbox, text, BODY_FONT, 10.0, BlockLabel::Supplement);
        (id, y + h)
    }

    fn float_height(&self, f: &FloatSpec) -> f64 {
        match f {
            FloatSpec::Figure { height, caption_lines, .. } => height + 8.0 + *caption_lines as f64 * 11.5,
            FloatSpec::Table { rows, caption_lines, .. } => *rows as f64 * 13.0 + 8.0 + 8.0 + *caption_lines as f64 * 11.5,
        }
    }

    /// Places a float with its caption starting at `y`; returns the bottom.
    fn place_float(&mut self, page: usize, col: usize, y: f64, f: &FloatSpec, caption_above: bool) -> f64 {
        match f {
            FloatSpec::Figure { number, raster, height, caption_lines } => {
                let (gold_box, members) = if *raster {
                    self.raster_figure(page, col, y, *height)
                } else {
                    self.vector_figure(page, col, y, *height)
                };
                let gap = self.u(5.0, 8.0);
                let (cap, bottom) = self.caption(page, col, gold_box.y1 + gap, ZoneKind::Figure, *number, *caption_lines);
                self.record(ZoneKind::Figure, *number, page, gold_box, cap, members);
                bottom
            }
            FloatSpec::Table { number, rows, cols, row_blocks, caption_lines } => {
                if caption_above {
                    let (cap, cap_bottom) = self.caption(page, col, y, ZoneKind::Table, *number, *caption_lines);
                    let gap = self.u(5.0, 8.0);
                    let (gold_box, members) = self.table(page, col, cap_bottom + gap, *rows, *cols, *row_blocks);
                    self.record(ZoneKind::Table, *number, page, gold_box, cap, members);
                    gold_box.y1
                } else {
                    let (gold_box, members) = self.table(page, col, y, *rows, *cols, *row_blocks);
                    let gap = self.u(5.0, 8.0);
                    let (cap, bottom) = self.caption(page, col, gold_box.y1 + gap, ZoneKind::Table, *number, *caption_lines);
                    self.record(ZoneKind::Table, *number, page, gold_box, cap, members);
                    bottom
                }
            }
        }
    }

    fn record(&mut self, kind: ZoneKind, number: u32, page: usize, zone: BoundingBox, caption: u32, members: Vec<u32>) {
        self.gold.push(ZoneDetection {
            kind,
            number,
            page_index: page as u32,
            zone,
            caption_block_id: caption,
            member_block_ids: members,
            flagged: false,
        });
    }

    fn graphic_box(&mut self, col: usize, y: f64, height: f64) -> BoundingBox {
        let (x0, x1) = COLUMNS[col];
        let w = (x1 - x0) * self.u(0.9, 1.0);
        let c = (x0 + x1) / 2.0;
        BoundingBox::new(c - w / 2.0, y, c + w / 2.0, y + height)
    }

    fn raster_figure(&mut self, page: usize, col: usize, y: f64, height: f64) -> (BoundingBox, Vec<u32>) {
        let g = self.graphic_box(col, y, height);
        let sub = self.rng.random_bool(0.3);
        let img_bottom = if sub { g.y1 - 11.0 } else { g.y1 };
        let mut members = vec![self.image(page, BoundingBox::new(g.x0, g.y0, g.x1, img_bottom))];
        if sub {
            let half = g.width() / 2.0;
            for (k, tag) in ["(a)", "(b)"].iter().enumerate() {
                let text = format!("{tag} {}", AXES.choose(&mut self.rng).unwrap());
                let w = char_width(&text, 8.0);
                let c = g.x0 + half * (k as f64 + 0.5);
                let bbox = BoundingBox::new(c - w / 2.0, g.y1 - 9.0, c + w / 2.0, g.y1);
                members.push(self.simple(page, bbox, text, SANS_FONT, 8.0, BlockLabel::Supplement));
            }
        }
        (g, members)
    }

    /// A plot drawn as vector graphics: only its text labels become blocks.
    /// Labels are packed densely along the axes so they span the graphic.
    fn vector_figure(&mut self, page: usize, col: usize, y: f64, height: f64) -> (BoundingBox, Vec<u32>) {
        let g = self.graphic_box(col, y, height);
        let mut members = Vec::new();

        let title = format!("{} vs. {}", capitalize(AXES.choose(&mut self.rng).unwrap()), AXES.choose(&mut self.rng).unwrap());
        let tw = char_width(&title, 9.0);
        let ty0 = g.y0 + self.u(0.0, 2.0);
        let c = g.center_x();
        let tb = BoundingBox::new(c - tw / 2.0, ty0, c + tw / 2.0, ty0 + 9.0);
        members.push(self.simple(page, tb, title, SANS_FONT, 9.0, BlockLabel::Supplement));

        let axis_title_y1 = g.y1 - self.u(0.0, 2.0);
        let xtick_y0 = axis_title_y1 - 8.0 - self.u(1.0, 2.0) - 7.0;
        // y-axis ticks from under the title down to the x-tick row
        let start = tb.y1 + self.u(2.0, 4.0);
        let avail = xtick_y0 - self.u(2.0, 4.0) - start;
        let n = (((avail + 4.0) / 11.0).round() as usize).max(2);
        let gap = ((avail - 7.0 * n as f64) / (n as f64 - 1.0)).max(0.5);
        let tick_x0 = g.x0 + self.u(0.0, 2.0);
        for k in 0..n {
            let ty = start + k as f64 * (7.0 + gap);
            let text = format!("{:.1}", 1.0 - k as f64 / n as f64);
            let bbox = BoundingBox::new(tick_x0, ty, tick_x0 + 11.0, ty + 7.0);
            members.push(self.simple(page, bbox, text, SANS_FONT, 7.0, BlockLabel::Supplement));
        }
        // x-axis ticks, the last one flush with the right edge
        let nx = self.rng.random_range(4..=7);
        let left = g.x0 + 22.0;
        let right = g.x1 - self.u(0.0, 2.0);
        for k in 0..nx {
            let text = format!("{}", (k + 1) * 10);
            let w = char_width(&text, 7.0);
            let x = left + (right - w - left) * k as f64 / (nx - 1) as f64;
            let bbox = BoundingBox::new(x, xtick_y0, x + w, xtick_y0 + 7.0);
            members.push(self.simple(page, bbox, text, SANS_FONT, 7.0, BlockLabel::Supplement));
        }
        let axis = capitalize(AXES.choose(&mut self.rng).unwrap());
        let aw = char_width(&axis, 8.0);
        let ab = BoundingBox::new(c - aw / 2.0, axis_title_y1 - 8.0, c + aw / 2.0, axis_title_y1);
        members.push(self.simple(page, ab, axis, SANS_FONT, 8.0, BlockLabel::Supplement));
        // legend in the upper right
        let entries = self.rng.random_range(0..=3);
        let mut ly = tb.y1 + self.u(4.0, 8.0);
        for _ in 0..entries {
            let text = METHODS.choose(&mut self.rng).unwrap().to_string();
            let w = char_width(&text, 7.0);
            let bbox = BoundingBox::new(g.x1 - 6.0 - w, ly, g.x1 - 6.0, ly + 7.0);
            members.push(self.simple(page, bbox, text, SANS_FONT, 7.0, BlockLabel::Supplement));
            ly += 10.0;
        }
        (g, members)
    }

    fn table(&mut self, page: usize, col: usize, y: f64, rows: usize, cols: usize, row_blocks: bool) -> (BoundingBox, Vec<u32>) {
        let (x0, x1) = COLUMNS[col];
        let w = (x1 - x0) * self.u(0.93, 1.0);
        let tx0 = (x0 + x1) / 2.0 - w / 2.0;
        let tx1 = tx0 + w;
        let rule_top = self.u(2.0, 4.0);
        let rule_bottom = self.u(2.0, 4.0);
        let first = y + rule_top;
        let slot = w / cols as f64;
        let mut members = Vec::new();
        for r in 0..rows {
            let ry = first + r as f64 * 13.0;
            let (font, header) = if r == 0 { (BOLD_FONT, true) } else { (BODY_FONT, false) };
            let cells: Vec<String> = (0..cols)
                .map(|c| match (header, c) {
                    (true, _) => HEADERS[(c + r) % HEADERS.len()].to_string(),
                    (false, 0) => METHODS.choose(&mut self.rng).unwrap().to_string(),
                    _ => format!("{:.1}", self.rng.random_range(10.0..99.9)),
                })
                .collect();
            if row_blocks {
                let text = cells.join(" ");
                let bbox = BoundingBox::new(tx0, ry, tx1, ry + 10.0);
                members.push(self.simple(page, bbox, text, font, 10.0, BlockLabel::Supplement));
                continue;
            }
            for (c, text) in cells.into_iter().enumerate() {
                let cw = char_width(&text, 10.0).min(slot - 2.0);
                let sx = tx0 + slot * c as f64;
                let (a, b) = if c == 0 {
                    (sx, sx + cw)
                } else if c == cols - 1 {
                    (tx1 - cw, tx1)
                } else {
                    let m = sx + slot / 2.0;
                    (m - cw / 2.0, m + cw / 2.0)
                };
                let bbox = BoundingBox::new(a, ry, b, ry + 10.0);
                members.push(self.simple(page, bbox, text, font, 10.0, BlockLabel::Supplement));
            }
        }
        let last = first + (rows - 1) as f64 * 13.0 + 10.0;
        (BoundingBox::new(tx0, y, tx1, last + rule_bottom), members)
    }

    fn footnote(&mut self, page: usize, col: usize) -> f64 {
        let (x0, x1) = COLUMNS[col];
        let lines = self.rng.random_range(1..=2);
        let h = lines as f64 * 10.0;
        let tail = self.words(20).replace(' ', "-");
        let text = format!("Code is available at https://example.org/{}/{tail}", self.doc_id);
        let bbox = BoundingBox::new(x0, BOTTOM - h, x1, BOTTOM);
        self.simple(page, bbox, text, BODY_FONT, 9.0, BlockLabel::Accessory);
        BOTTOM - h - 10.0
    }
}

fn char_width(text: &str, size: f64) -> f64 {
    (text.chars().count() as f64 * 0.48 * size).max(size * 0.6)
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn build_flow(g: &mut Gen) -> Vec<Flow> {
    let rng = &mut g.rng;
    let mut flow = Vec::new();
    let body = |rng: &mut ChaCha8Rng| Flow::Para {
        lines: rng.random_range(2..=8),
        size: BODY_SIZE,
        indent: 0.0,
        label: BlockLabel::BodyText,
    };
    flow.push(Flow::Heading {
        text: "Abstract".into(),
        size: 12.0,
        centered: true,
    });
    flow.push(Flow::Para {
        lines: rng.random_range(8..=13),
        size: BODY_SIZE,
        indent: 7.0,
        label: BlockLabel::BodyText,
    });
    let mut names: Vec<&str> = SECTIONS.to_vec();
    let n_sections = rng.random_range(5..=7);
    let mut equation = 0;
    for s in 1..=n_sections {
        let name = if s == 1 {
            "Introduction"
        } else if s == n_sections {
            "Conclusion"
        } else {
            let i = rng.random_range(0..names.len() - 1);
            names.remove(i)
        };
        flow.push(Flow::Heading {
            text: format!("{s} {name}"),
            size: 12.0,
            centered: false,
        });
        for _ in 0..rng.random_range(3..=6) {
            flow.push(body(rng));
            if rng.random_bool(0.15) {
                equation += 1;
                flow.push(Flow::Equation { number: equation });
            }
        }
        if s > 1 && s < n_sections {
            for k in 1..=rng.random_range(0..=2) {
                let sub = SUBSECTIONS.choose(rng).unwrap();
                flow.push(Flow::Heading {
                    text: format!("{s}.{k} {sub}"),
                    size: 11.0,
                    centered: false,
                });
                for _ in 0..rng.random_range(2..=3) {
                    flow.push(body(rng));
                }
            }
        }
    }
    flow.push(Flow::Heading {
        text: "References".into(),
        size: 12.0,
        centered: false,
    });
    for _ in 0..rng.random_range(8..=12) {
        flow.push(Flow::Para {
            lines: rng.random_range(2..=4),
            size: BODY_SIZE,
            indent: 0.0,
            label: BlockLabel::BodyText,
        });
    }
    if rng.random_bool(0.4) {
        flow.push(Flow::Heading {
            text: "A Additional Details".into(),
            size: 12.0,
            centered: false,
        });
        for _ in 0..rng.random_range(1..=3) {
            flow.push(body(rng));
        }
    }
    flow
}

fn build_floats(g: &mut Gen, continuous: bool) -> VecDeque<FloatSpec> {
    let rng = &mut g.rng;
    let n_fig = rng.random_range(2..=3);
    let n_tab = rng.random_range(if continuous { 3 } else { 2 }..=3);
    let mut kinds: Vec<ZoneKind> = std::iter::repeat_n(ZoneKind::Figure, n_fig)
        .chain(std::iter::repeat_n(ZoneKind::Table, n_tab))
        .collect();
    // interleave deterministically by shuffling
    use rand::seq::SliceRandom;
    kinds.shuffle(rng);
    let (mut f, mut t) = (0, 0);
    let mut out: VecDeque<FloatSpec> = kinds
        .into_iter()
        .map(|k| match k {
            ZoneKind::Figure => {
                f += 1;
                FloatSpec::Figure {
                    number: f,
                    raster: rng.random_bool(0.5),
                    height: rng.random_range(80.0..150.0),
                    caption_lines: rng.random_range(1..=3),
                }
            }
            ZoneKind::Table => {
                t += 1;
                FloatSpec::Table {
                    number: t,
                    rows: rng.random_range(4..=7),
                    cols: rng.random_range(3..=4),
                    row_blocks: rng.random_bool(0.5),
                    caption_lines: rng.random_range(1..=3),
                }
            }
        })
        .collect();
    if continuous {
        // move the second table right behind the first
        let pos: Vec<usize> = (0..out.len()).filter(|&i| matches!(out[i], FloatSpec::Table { .. })).collect();
        if pos[1] != pos[0] + 1 {
            let second = out.remove(pos[1]).unwrap();
            out.insert(pos[0] + 1, second);
        }
    }
    out
}

pub fn generate_document(doc_id: &str, seed: u64, opts: &SynthOptions) -> SynthDoc {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        doc_id: doc_id.to_string(),
        pages: Vec::new(),
        labels: BTreeMap::new(),
        gold: Vec::new(),
        next_id: 0,
        continuous_pages: Vec::new(),
    };
    let continuous = g.rng.random_bool(opts.continuous_table_rate);
    let caption_above = g.rng.random_bool(opts.table_caption_above_rate);
    let mut flow: VecDeque<Flow> = build_flow(&mut g).into();
    let mut floats = build_floats(&mut g, continuous);
    let mut stacked_pending = continuous;

    let mut page = g.new_page();
    let mut col_start = g.front_matter();
    let mut col = 0;
    loop {
        let mut y = col_start;
        // the first column ends above the proceedings footer
        let mut bottom = if page == 0 && col == 0 { 766.0 } else { BOTTOM };
        if !(page == 0 && col == 0) && g.rng.random_bool(0.25) {
            bottom = g.footnote(page, col);
        }

        // no floats in the abstract column; references wait for pending floats
        let refs_next = matches!(flow.front(), Some(Flow::Heading { text, .. }) if text == "References");
        let float_here = !(page == 0 && col == 0) && !floats.is_empty() && (refs_next || g.rng.random_bool(0.55));
        if float_here {
            let is_table = |f: &FloatSpec| matches!(f, FloatSpec::Table { .. });
            let stack = stacked_pending && floats.len() >= 2 && is_table(&floats[0]) && is_table(&floats[1]);
            let count = if stack { 2 } else { 1 };
            for k in 0..count {
                let f = floats.pop_front().unwrap();
                if y + g.float_height(&f) > bottom {
                    floats.push_front(f);
                    break;
                }
                y = g.place_float(page, col, y, &f, caption_above) + g.u(14.0, 20.0);
                if k == 1 {
                    stacked_pending = false;
                    g.continuous_pages.push(page as u32);
                }
            }
        }

        let mut placed_mid = false;
        while let Some(item) = flow.front().cloned() {
            if matches!(&item, Flow::Heading { text, .. } if text == "References") && !floats.is_empty() {
                break;
            }
            let gap_before = match &item {
                Flow::Heading { .. } => g.u(9.0, 13.0),
                _ => g.u(4.0, 8.0),
            };
            let yy = if y == col_start { y } else { y + gap_before };
            let h = g.flow_height(&item);
            if yy + h <= bottom {
                g.place_flow(page, col, yy, &item);
                flow.pop_front();
                y = yy + h;
                // occasional mid-column float after a paragraph
                if !placed_mid
                    && matches!(item, Flow::Para { label: BlockLabel::BodyText, indent, .. } if indent == 0.0)
                    && !floats.is_empty()
                    && !(page == 0 && col == 0)
                    && !stacked_pending
                    && g.rng.random_bool(0.12)
                {
                    let sep = g.u(14.0, 20.0);
                    let f = floats.front().cloned().unwrap();
                    if y + sep + g.float_height(&f) + 20.0 <= bottom {
                        floats.pop_front();
                        y = g.place_float(page, col, y + sep, &f, caption_above) + g.u(14.0, 20.0);
                        placed_mid = true;
                    }
                }
                continue;
            }
            // split a long paragraph across the column break
            if let Flow::Para { lines, size, indent, label } = item {
                let fit = ((bottom - yy) / LEADING).floor() as usize;
                if lines >= 4 && fit >= 2 && lines - fit >= 2 {
                    let head = Flow::Para { lines: fit, size, indent, label };
                    g.place_flow(page, col, yy, &head);
                    flow[0] = Flow::Para {
                        lines: lines - fit,
                        size,
                        indent,
                        label,
                    };
                }
            }
            break;
        }

        if flow.is_empty() && floats.is_empty() {
            break;
        }
        if col == 0 {
            col = 1;
        } else {
            col = 0;
            page = g.new_page();
            col_start = TOP;
        }
    }

    let doc = assign_reading_order(
        Document {
            doc_id: doc_id.to_string(),
            pages: g.pages,
        },
        &ReadingOrderConfig::default(),
    );
    let mut gold = g.gold;
    gold.sort_by_key(|z| (z.kind, z.number));
    SynthDoc {
        doc,
        labels: g.labels,
        gold: DetectionSet {
            doc_id: doc_id.to_string(),
            detections: gold,
        },
        continuous_table_pages: g.continuous_pages,
    }
}

/// A hand-laid single page: front matter, one section with a five-label
/// plot and its caption in the left column; references and an appendix in
/// the right column. Blocks are in extraction order, without reading order.
pub fn two_column_fixture() -> SynthDoc {
    use BlockLabel::{Accessory as A, BodyText as B, Supplement as S};
    // id, bbox, font, text, size, label
    type Row<'a> = (u32, [f64; 4], &'a str, &'a str, f64, BlockLabel);
    let layout: [Row; 14] = [
        (0, [71.0, 72.0, 285.0, 89.0], BOLD_FONT, "Text Block Refinement for Two-Column Layouts", 15.0, A),
        (1, [78.0, 100.0, 282.0, 187.0], BODY_FONT, "Abstract We classify the text blocks of scholarly articles into body text, supplementary and accessory information and merge supplementary blocks into figure and table zones using caption patterns and block geometry.", 11.0, B),
        (2, [71.0, 199.0, 150.0, 213.0], BOLD_FONT, "1 Introduction", 12.0, S),
        (3, [71.0, 218.0, 289.0, 305.0], BODY_FONT, "Articles mix running text with figures, tables, equations and page furniture. A reader or a downstream tool needs the running text in order and the floats as separate objects, so each block is first labeled and then grouped with its neighbors.", 11.0, B),
        (4, [140.0, 322.0, 220.0, 331.0], SANS_FONT, "Accuracy vs. epoch", 9.0, S),
        (5, [74.0, 335.0, 85.0, 342.0], SANS_FONT, "1.0", 7.0, S),
        (6, [74.0, 346.0, 85.0, 353.0], SANS_FONT, "0.5", 7.0, S),
        (7, [74.0, 357.0, 85.0, 364.0], SANS_FONT, "0.0", 7.0, S),
        (8, [165.0, 368.0, 190.0, 376.0], SANS_FONT, "Epoch", 8.0, S),
        (9, [71.0, 383.0, 289.0, 406.0], BODY_FONT, "Figure 1: Accuracy of the block classifier over training epochs on the synthetic corpus.", 10.0, S),
        (10, [306.0, 72.0, 365.0, 86.0], BOLD_FONT, "References", 12.0, S),
        (11, [306.0, 91.0, 524.0, 128.0], BODY_FONT, "Smith, J. and Lee, K. 2020. Layout analysis of scholarly documents. In Proceedings of the Workshop on Document Intelligence, pages 1-9.", 11.0, B),
        (12, [306.0, 140.0, 440.0, 154.0], BOLD_FONT, "A Supplementary Details", 12.0, S),
        (13, [306.0, 159.0, 524.0, 221.0], BODY_FONT, "The appendix repeats the experiment with a different random seed and reports the same trend for every class of blocks in the corpus.", 11.0, B),
    ];
    let mut blocks = Vec::new();
    let mut labels = BTreeMap::new();
    for (id, b, font, text, size, label) in layout {
        let chars = text.chars().filter(|c| !c.is_whitespace()).count() as u64;
        blocks.push(TextBlock {
            block_id: id,
            page_index: 0,
            kind: BlockKind::Text,
            bbox: BoundingBox::new(b[0], b[1], b[2], b[3]),
            text: text.to_string(),
            spans: vec![SpanFontStats::new(font, size, chars)],
            reading_order: None,
        });
        labels.insert(id, label);
    }
    let doc = Document {
        doc_id: "synth_2col".into(),
        pages: vec![Page {
            page_index: 0,
            width: PAGE_WIDTH,
            height: PAGE_HEIGHT,
            blocks,
        }],
    };
    let gold = DetectionSet {
        doc_id: doc.doc_id.clone(),
        detections: vec![ZoneDetection {
            kind: ZoneKind::Figure,
            number: 1,
            page_index: 0,
            zone: BoundingBox::new(71.0, 320.0, 289.0, 378.0),
            caption_block_id: 9,
            member_block_ids: vec![4, 5, 6, 7, 8],
            flagged: false,
        }],
    };
    SynthDoc {
        doc,
        labels,
        gold,
        continuous_table_pages: Vec::new(),
    }
}
