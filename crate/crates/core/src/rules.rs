//! Rule-based detection of the obvious elements: document domains, numbered
//! section titles and figure/table captions.

use std::collections::HashSet;
use std::ops::Range;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::config::RuleConfig;
use crate::encoder::EncodingContext;
use crate::error::{Error, Result};
use crate::model::{Document, TextBlock, ZoneKind};

/// Markers shorter than this (in chars) count as headings even in the body font.
const SHORT_HEADING_CHARS: usize = 40;

/// Compiled form of a [`RuleConfig`].
#[derive(Debug, Clone)]
pub struct RuleSet {
    caption_figure: Regex,
    caption_table: Regex,
    section_main: Regex,
    section_sub: Regex,
    abstract_marker: Regex,
    references_marker: Regex,
    appendix_marker: Regex,
}

impl Default for RuleSet {
    fn default() -> Self {
        Self::compile(&RuleConfig::default()).expect("default patterns compile")
    }
}

impl RuleSet {
    pub fn compile(cfg: &RuleConfig) -> Result<Self> {
        let re = |key: &str, src: &str| {
            Regex::new(src).map_err(|e| Error::Config(format!("{key}: {e}")))
        };
        let set = Self {
            caption_figure: re("caption_figure", &cfg.caption_figure)?,
            caption_table: re("caption_table", &cfg.caption_table)?,
            section_main: re("section_main", &cfg.section_main)?,
            section_sub: re("section_sub", &cfg.section_sub)?,
            abstract_marker: re("domain_markers.abstract", &cfg.domain_markers.abstract_)?,
            references_marker: re("domain_markers.references", &cfg.domain_markers.references)?,
            appendix_marker: re("domain_markers.appendix", &cfg.domain_markers.appendix)?,
        };
        for (key, r) in [
            ("caption_figure", &set.caption_figure),
            ("caption_table", &set.caption_table),
            ("section_main", &set.section_main),
            ("section_sub", &set.section_sub),
        ] {
            if r.captures_len() < 2 {
                return Err(Error::Config(format!("{key} must capture the number")));
            }
        }
        Ok(set)
    }
}

/// The `number` group if named, otherwise the last participating group made only of digits.
fn caption_number(caps: &Captures<'_>) -> Option<u32> {
    if let Some(m) = caps.name("number") {
        return m.as_str().parse().ok();
    }
    caps.iter()
        .skip(1)
        .flatten()
        .filter(|m| !m.as_str().is_empty() && m.as_str().bytes().all(|c| c.is_ascii_digit()))
        .last()
        .and_then(|m| m.as_str().parse().ok())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionMatch {
    pub block_id: u32,
    pub page_index: u32,
    pub kind: ZoneKind,
    pub number: u32,
    pub caption_text: String,
}

/// Caption-like blocks start with the keyword and number, e.g. `Table 2: ...`.
pub fn match_caption(block: &TextBlock, rules: &RuleSet) -> Option<CaptionMatch> {
    if block.is_image() {
        return None;
    }
    let text = block.text.trim_start();
    [(ZoneKind::Figure, &rules.caption_figure), (ZoneKind::Table, &rules.caption_table)]
        .into_iter()
        .find_map(|(kind, re)| {
            let number = caption_number(&re.captures(text)?)?;
            (number > 0).then(|| CaptionMatch {
                block_id: block.block_id,
                page_index: block.page_index,
                kind,
                number,
                caption_text: text.trim_end().to_string(),
            })
        })
}

/// Captions of a document in reading order, first occurrence of each (kind, number) kept.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CaptionScan {
    pub captions: Vec<CaptionMatch>,
    /// Later matches repeating an already seen (kind, number).
    pub duplicates: Vec<CaptionMatch>,
}

pub fn collect_captions(doc: &Document, rules: &RuleSet) -> CaptionScan {
    let mut scan = CaptionScan::default();
    let mut seen = HashSet::new();
    for block in doc.reading_sequence() {
        if let Some(m) = match_caption(block, rules) {
            if seen.insert((m.kind, m.number)) {
                scan.captions.push(m);
            } else {
                warn!(doc = %doc.doc_id, block = m.block_id, "duplicate caption {} {}", m.kind, m.number);
                scan.duplicates.push(m);
            }
        }
    }
    scan
}

/// Like [`collect_captions`], but a repeated (kind, number) is an error.
pub fn collect_captions_strict(doc: &Document, rules: &RuleSet) -> Result<Vec<CaptionMatch>> {
    let scan = collect_captions(doc, rules);
    match scan.duplicates.first() {
        Some(d) => Err(Error::Detect(format!(
            "duplicate caption {} {} in block {}",
            d.kind, d.number, d.block_id
        ))),
        None => Ok(scan.captions),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionLevel {
    Main,
    Sub,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionTitle {
    pub block_id: u32,
    pub level: SectionLevel,
    pub number: String,
    pub title_text: String,
}

/// Numbered heading in a non-body font (`Code_ft = 0`).
pub fn match_section_title(block: &TextBlock, ctx: &EncodingContext, rules: &RuleSet) -> Option<SectionTitle> {
    if block.is_image() || ctx.is_body_font(block) {
        return None;
    }
    let text = block.text.trim();
    [(SectionLevel::Sub, &rules.section_sub), (SectionLevel::Main, &rules.section_main)]
        .into_iter()
        .find_map(|(level, re)| {
            let caps = re.captures(text)?;
            let number = caps.name("number").or_else(|| caps.get(1))?;
            Some(SectionTitle {
                block_id: block.block_id,
                level,
                number: number.as_str().to_string(),
                title_text: text[number.end()..].trim().to_string(),
            })
        })
}

pub fn section_titles(doc: &Document, ctx: &EncodingContext, rules: &RuleSet) -> Vec<SectionTitle> {
    doc.reading_sequence()
        .into_iter()
        .filter_map(|b| match_section_title(b, ctx, rules))
        .collect()
}

/// Numbering anomalies: a main number that does not increase, or a sub-section
/// outside its current main section. Returned as warnings, never errors.
pub fn check_section_continuity(titles: &[SectionTitle]) -> Vec<String> {
    let mut warnings = Vec::new();
    let mut current_main: Option<(u64, &str)> = None;
    for t in titles {
        match t.level {
            SectionLevel::Main => {
                let n: u64 = t.number.parse().unwrap_or(0);
                if let Some((prev, _)) = current_main {
                    if n < prev {
                        warnings.push(format!("block {}: main section {n} after {prev}", t.block_id));
                    } else if n == prev {
                        warnings.push(format!("block {}: main section {n} repeated", t.block_id));
                    }
                }
                current_main = Some((n, t.number.as_str()));
            }
            SectionLevel::Sub => {
                let prefix = t.number.split('.').next().unwrap_or_default();
                if current_main.map(|(_, s)| s) != Some(prefix) {
                    warnings.push(format!(
                        "block {}: sub-section {} outside main section {}",
                        t.block_id,
                        t.number,
                        current_main.map_or("-", |(_, s)| s)
                    ));
                }
            }
        }
    }
    warnings
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    BasicInfo,
    Body,
    References,
    Appendix,
}

/// Contiguous domains over the document's reading sequence.
///
/// Ranges index into `block_ids` (the reading sequence). They are disjoint,
/// ordered and cover every block.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSegmentation {
    pub block_ids: Vec<u32>,
    pub basic_info: Range<usize>,
    pub body: Range<usize>,
    pub references: Range<usize>,
    pub appendix: Option<Range<usize>>,
}

impl DomainSegmentation {
    pub fn domain_of(&self, block_id: u32) -> Option<Domain> {
        let pos = self.block_ids.iter().position(|&id| id == block_id)?;
        Some(self.domain_at(pos))
    }

    pub fn domain_at(&self, pos: usize) -> Domain {
        if self.basic_info.contains(&pos) {
            Domain::BasicInfo
        } else if self.body.contains(&pos) {
            Domain::Body
        } else if self.references.contains(&pos) {
            Domain::References
        } else {
            Domain::Appendix
        }
    }

    pub fn ids_in(&self, range: &Range<usize>) -> &[u32] {
        &self.block_ids[range.clone()]
    }
}

/// Splits a document into basic-info, body, references and appendix domains.
///
/// Body starts at the first numbered main-section title after the abstract
/// marker; references and appendix start at their heading markers. Reference
/// and appendix markers only count on heading-like blocks (non-body font or
/// short text), so a sentence opening with "References" or "A " is not a
/// boundary.
pub fn segment_domains(doc: &Document, ctx: &EncodingContext, rules: &RuleSet) -> Result<DomainSegmentation> {
    let seq = doc.reading_sequence();
    let n = seq.len();
    let heading_like =
        |b: &TextBlock| !ctx.is_body_font(b) || b.text.trim().chars().count() <= SHORT_HEADING_CHARS;
    let matches = |re: &Regex, b: &TextBlock| !b.is_image() && re.is_match(b.text.trim_start());

    let abstract_at = seq.iter().position(|b| matches(&rules.abstract_marker, b));
    let search_from = abstract_at.unwrap_or(0);

    let ref_start = (search_from..n)
        .find(|&i| matches(&rules.references_marker, seq[i]) && heading_like(seq[i]))
        .ok_or_else(|| Error::Detect(format!("no references marker in document `{}`", doc.doc_id)))?;

    let body_from = abstract_at.map_or(0, |a| a + 1);
    let body_start = (body_from..ref_start)
        .find(|&i| {
            match_section_title(seq[i], ctx, rules).is_some_and(|t| t.level == SectionLevel::Main)
        })
        .unwrap_or(ref_start);

    let appendix_start = (ref_start + 1..n)
        .find(|&i| matches(&rules.appendix_marker, seq[i]) && heading_like(seq[i]));

    Ok(DomainSegmentation {
        block_ids: seq.iter().map(|b| b.block_id).collect(),
        basic_info: 0..body_start,
        body: body_start..ref_start,
        references: ref_start..appendix_start.unwrap_or(n),
        appendix: appendix_start.map(|a| a..n),
    })
}
