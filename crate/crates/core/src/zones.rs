//! Figure/table zones: supplement runs around each caption, merged into one frame.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::config::{ReadingOrderConfig, ZoneConfig};
use crate::error::{Error, Result};
use crate::ingest::page_columns;
use crate::model::{BlockLabel, BoundingBox, Document, Page, TextBlock, ZoneDetection};
use crate::rules::CaptionMatch;

/// Consecutive Supplement (or image) blocks of one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplementRun {
    pub page_index: u32,
    pub column: u8,
    /// Reading order.
    pub block_ids: Vec<u32>,
    pub bbox: BoundingBox,
}

fn is_supplement(block: &TextBlock, labels: &BTreeMap<u32, BlockLabel>) -> bool {
    block.is_image() || labels.get(&block.block_id) == Some(&BlockLabel::Supplement)
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// `gap_factor` times the median positive gap between consecutive body-text
/// blocks of one column, or `fallback_gap` when the page has no such pair.
pub fn gap_threshold(
    page: &Page,
    labels: &BTreeMap<u32, BlockLabel>,
    zones: &ZoneConfig,
    ro: &ReadingOrderConfig,
) -> f64 {
    let cols = page_columns(page, ro);
    let col_of: HashMap<u32, u8> = page.blocks.iter().zip(&cols.columns).map(|(b, &c)| (b.block_id, c)).collect();
    let mut gaps = Vec::new();
    let mut prev: Option<&TextBlock> = None;
    for b in page.blocks_in_reading_order() {
        if labels.get(&b.block_id) != Some(&BlockLabel::BodyText) || b.is_image() {
            prev = None;
            continue;
        }
        if let Some(p) = prev {
            let g = b.bbox.y0 - p.bbox.y1;
            if col_of[&p.block_id] == col_of[&b.block_id] && g > 0.0 {
                gaps.push(g);
            }
        }
        prev = Some(b);
    }
    median(&mut gaps).map_or(zones.fallback_gap, |m| zones.gap_factor * m)
}

/// Splits a page into supplement runs. A run ends at any non-supplement
/// block, at a `breakers` block (captions, section titles), at a column
/// change, or when the next block starts more than `gap` below the run.
pub fn supplement_runs(
    page: &Page,
    labels: &BTreeMap<u32, BlockLabel>,
    breakers: &BTreeSet<u32>,
    ro: &ReadingOrderConfig,
    gap: f64,
) -> Vec<SupplementRun> {
    let cols = page_columns(page, ro);
    let col_of: HashMap<u32, u8> = page.blocks.iter().zip(&cols.columns).map(|(b, &c)| (b.block_id, c)).collect();
    let mut runs = Vec::new();
    let mut cur: Option<SupplementRun> = None;
    for b in page.blocks_in_reading_order() {
        if !is_supplement(b, labels) || breakers.contains(&b.block_id) {
            runs.extend(cur.take());
            continue;
        }
        let col = col_of[&b.block_id];
        match &mut cur {
            Some(r) if r.column == col && b.bbox.y0 - r.bbox.y1 <= gap => {
                r.block_ids.push(b.block_id);
                r.bbox = r.bbox.union(&b.bbox);
            }
            _ => {
                runs.extend(cur.take());
                cur = Some(SupplementRun {
                    page_index: page.page_index,
                    column: col,
                    block_ids: vec![b.block_id],
                    bbox: b.bbox,
                });
            }
        }
    }
    runs.extend(cur);
    runs
}

/// Applies the width rule: a zone no wider than its caption takes the
/// caption's horizontal extent.
pub fn apply_width_rule(zone: BoundingBox, caption: &BoundingBox) -> BoundingBox {
    if zone.width() > caption.width() {
        zone
    } else {
        BoundingBox::new(zone.x0.min(caption.x0), zone.y0, zone.x1.max(caption.x1), zone.y1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Prior,
    Behind,
}

struct Candidate {
    runs: Vec<usize>,
    bbox: BoundingBox,
}

fn overlap_coefficient(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let d = a.width().min(b.width());
    if d <= 0.0 {
        0.0
    } else {
        a.horizontal_overlap(b) / d
    }
}

/// Runs on one side of the caption that overlap it horizontally: the nearest
/// one plus any others ending (or starting) within `gap` of it, which picks
/// up both halves of a float spanning two columns.
fn candidate(side: Side, caption: &BoundingBox, runs: &[SupplementRun], gap: f64) -> Option<Candidate> {
    let cy = caption.center_y();
    let eligible: Vec<usize> = (0..runs.len())
        .filter(|&i| {
            let r = &runs[i].bbox;
            let placed = match side {
                Side::Prior => r.center_y() < cy && r.y1 <= caption.y1,
                Side::Behind => r.center_y() > cy && r.y0 >= caption.y0,
            };
            placed && r.horizontal_overlap(caption) > 0.0
        })
        .collect();
    let edge = |i: usize| match side {
        Side::Prior => runs[i].bbox.y1,
        Side::Behind => -runs[i].bbox.y0,
    };
    let nearest = eligible.iter().map(|&i| edge(i)).max_by(f64::total_cmp)?;
    let chosen: Vec<usize> = eligible.into_iter().filter(|&i| nearest - edge(i) <= gap).collect();
    let bbox = BoundingBox::union_all(chosen.iter().map(|&i| &runs[i].bbox))?;
    Some(Candidate { runs: chosen, bbox })
}

/// Picks the Prior or Behind candidate for one caption and frames the zone.
/// Without any candidate the zone is the caption box, flagged, with no members.
pub fn merge_zone_for_caption(
    caption: &CaptionMatch,
    runs: &[SupplementRun],
    page: &Page,
    gap: f64,
) -> Result<ZoneDetection> {
    let cap = page
        .blocks
        .iter()
        .find(|b| b.block_id == caption.block_id)
        .ok_or(Error::CaptionNotOnPage {
            block_id: caption.block_id,
            page_index: page.page_index,
        })?;
    let runs: Vec<SupplementRun> = runs.iter().filter(|r| r.page_index == page.page_index).cloned().collect();
    let prior = candidate(Side::Prior, &cap.bbox, &runs, gap);
    let behind = candidate(Side::Behind, &cap.bbox, &runs, gap);

    let score = |c: &Candidate| {
        (
            overlap_coefficient(&c.bbox, &cap.bbox),
            -c.bbox.vertical_gap(&cap.bbox),
            c.bbox.area(),
        )
    };
    let selected = match (prior, behind) {
        (Some(p), Some(b)) => {
            let (sp, sb) = (score(&p), score(&b));
            let cmp = sp
                .0
                .total_cmp(&sb.0)
                .then(sp.1.total_cmp(&sb.1))
                .then(sp.2.total_cmp(&sb.2));
            Some(if cmp.is_lt() { b } else { p })
        }
        (p, b) => p.or(b),
    };

    let Some(sel) = selected else {
        warn!(caption = caption.block_id, kind = %caption.kind, number = caption.number, "no supplement run next to caption");
        return Ok(ZoneDetection {
            kind: caption.kind,
            number: caption.number,
            page_index: page.page_index,
            zone: cap.bbox,
            caption_block_id: cap.block_id,
            member_block_ids: Vec::new(),
            flagged: true,
        });
    };
    let mut members: Vec<u32> = sel.runs.iter().flat_map(|&i| runs[i].block_ids.iter().copied()).collect();
    let order = reading_positions(page);
    members.sort_by_key(|id| order[id]);
    Ok(ZoneDetection {
        kind: caption.kind,
        number: caption.number,
        page_index: page.page_index,
        zone: apply_width_rule(sel.bbox, &cap.bbox),
        caption_block_id: cap.block_id,
        member_block_ids: members,
        flagged: false,
    })
}

fn reading_positions(page: &Page) -> HashMap<u32, usize> {
    page.blocks_in_reading_order()
        .iter()
        .enumerate()
        .map(|(i, b)| (b.block_id, i))
        .collect()
}

/// Re-frames a detection from its members (after deduplication).
fn reframe(det: &mut ZoneDetection, page: &Page) {
    let cap = page.blocks.iter().find(|b| b.block_id == det.caption_block_id).map(|b| b.bbox);
    let cap = cap.unwrap_or(det.zone);
    let boxes: Vec<BoundingBox> = det
        .member_block_ids
        .iter()
        .filter_map(|id| page.blocks.iter().find(|b| b.block_id == *id).map(|b| b.bbox))
        .collect();
    match BoundingBox::union_all(&boxes) {
        Some(u) => det.zone = apply_width_rule(u, &cap),
        None => {
            det.zone = cap;
            det.flagged = true;
        }
    }
}

/// One detection per caption, in caption order. A block claimed by more than
/// one caption on a page stays with the caption at the smaller vertical gap,
/// then the smaller center distance, then the earlier caption.
pub fn detect_zones(
    doc: &Document,
    labels: &BTreeMap<u32, BlockLabel>,
    captions: &[CaptionMatch],
    breakers: &BTreeSet<u32>,
    zones: &ZoneConfig,
    ro: &ReadingOrderConfig,
) -> Result<Vec<ZoneDetection>> {
    let mut breakers = breakers.clone();
    breakers.extend(captions.iter().map(|c| c.block_id));

    let mut page_runs: BTreeMap<u32, (Vec<SupplementRun>, f64)> = BTreeMap::new();
    let mut out = Vec::with_capacity(captions.len());
    for c in captions {
        let page = doc.page(c.page_index).ok_or(Error::CaptionNotOnPage {
            block_id: c.block_id,
            page_index: c.page_index,
        })?;
        let (runs, gap) = page_runs.entry(c.page_index).or_insert_with(|| {
            let gap = gap_threshold(page, labels, zones, ro);
            (supplement_runs(page, labels, &breakers, ro, gap), gap)
        });
        out.push(merge_zone_for_caption(c, runs, page, *gap)?);
    }

    let pages: BTreeSet<u32> = out.iter().map(|d| d.page_index).collect();
    for p in pages {
        let page = doc.page(p).expect("detections refer to existing pages");
        let idx: Vec<usize> = (0..out.len()).filter(|&i| out[i].page_index == p).collect();
        let mut claims: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for &i in &idx {
            for &m in &out[i].member_block_ids {
                claims.entry(m).or_default().push(i);
            }
        }
        let bbox_of = |id: u32| page.blocks.iter().find(|b| b.block_id == id).map(|b| b.bbox);
        let mut changed = BTreeSet::new();
        for (m, owners) in claims.into_iter().filter(|(_, o)| o.len() > 1) {
            let mb = bbox_of(m).expect("member on page");
            let key = |i: usize| {
                let cb = bbox_of(out[i].caption_block_id).unwrap_or(out[i].zone);
                let dc = ((mb.center_x() - cb.center_x()).powi(2) + (mb.center_y() - cb.center_y()).powi(2)).sqrt();
                (mb.vertical_gap(&cb), dc, i)
            };
            let winner = *owners
                .iter()
                .min_by(|&&a, &&b| {
                    let (ka, kb) = (key(a), key(b));
                    ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.cmp(&kb.2))
                })
                .expect("non-empty");
            for &i in owners.iter().filter(|&&i| i != winner) {
                out[i].member_block_ids.retain(|&x| x != m);
                changed.insert(i);
            }
        }
        for i in changed {
            reframe(&mut out[i], page);
        }
    }
    Ok(out)
}
