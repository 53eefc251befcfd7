//! Static HTML overlay: one SVG per page with block rectangles colored by label and zone frames.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::model::{BlockLabel, Document, ZoneDetection};

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn label_class(label: Option<BlockLabel>) -> String {
    label.map_or_else(|| "unlabeled".to_string(), |l| format!("label-{}", l.as_str()))
}

const STYLE: &str = "\
body{font-family:sans-serif;margin:1em;background:#f4f4f4}
.page{background:#fff;margin:1em 0;box-shadow:0 0 4px #999;overflow:auto;resize:both;max-width:100%}
svg{display:block}
.block{fill-opacity:.25;stroke-width:.8}
.label-body_text{fill:#2b6cb0;stroke:#2b6cb0}
.label-supplement{fill:#2f855a;stroke:#2f855a}
.label-accessory{fill:#c05621;stroke:#c05621}
.unlabeled{fill:#999;stroke:#777}
.zone{fill:none;stroke:#c53030;stroke-width:2;stroke-dasharray:6 3}
.zone-title{fill:#c53030;font-size:9px}
.flagged{stroke:#d69e2e}
.legend span{display:inline-block;padding:2px 8px;margin-right:6px;color:#fff}
.warnings{background:#fffbea;border:1px solid #d69e2e;padding:.5em 1em}
";

/// Renders one self-contained HTML page for a document.
pub fn render_overlay_report(
    doc: &Document,
    labels: &BTreeMap<u32, BlockLabel>,
    zones: &[ZoneDetection],
    warnings: &[String],
) -> String {
    let mut h = String::new();
    let title = escape(&doc.doc_id);
    let _ = write!(
        h,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{title}</title>\n<style>\n{STYLE}</style>\n</head>\n<body>\n<h1>{title}</h1>\n"
    );
    h.push_str(
        "<p class=\"legend\"><span style=\"background:#2b6cb0\">Body-text</span>\
<span style=\"background:#2f855a\">Supplement</span>\
<span style=\"background:#c05621\">Accessory</span>\
<span style=\"background:#999\">unlabeled</span></p>\n",
    );
    let mut all: Vec<String> = warnings.to_vec();
    all.extend(
        doc.blocks()
            .filter(|b| !labels.contains_key(&b.block_id))
            .map(|b| format!("block {} on page {} has no label", b.block_id, b.page_index + 1)),
    );
    if !all.is_empty() {
        h.push_str("<div class=\"warnings\"><h2>Warnings</h2>\n<ul>\n");
        for w in &all {
            let _ = writeln!(h, "<li>{}</li>", escape(w));
        }
        h.push_str("</ul></div>\n");
    }
    for page in &doc.pages {
        let _ = writeln!(
            h,
            "<h2>Page {}</h2>\n<div class=\"page\">\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{hgt}\" viewBox=\"0 0 {w} {hgt}\">",
            page.page_index + 1,
            w = page.width,
            hgt = page.height
        );
        for b in page.blocks_in_reading_order() {
            let label = labels.get(&b.block_id).copied();
            let tip = if b.is_image() {
                format!("#{} [image]", b.block_id)
            } else {
                let snippet: String = b.text.chars().take(80).collect();
                format!("#{} {}: {}", b.block_id, label.map_or("unlabeled", |l| l.display_name()), snippet)
            };
            let _ = writeln!(
                h,
                "<rect class=\"block {}\" data-block-id=\"{}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"><title>{}</title></rect>",
                label_class(label),
                b.block_id,
                b.bbox.x0,
                b.bbox.y0,
                b.bbox.width(),
                b.bbox.height(),
                escape(&tip)
            );
        }
        for z in zones.iter().filter(|z| z.page_index == page.page_index) {
            let extra = if z.flagged { " flagged" } else { "" };
            let _ = writeln!(
                h,
                "<rect class=\"zone{extra}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"><title>{} {}</title></rect>",
                z.zone.x0,
                z.zone.y0,
                z.zone.width(),
                z.zone.height(),
                z.kind,
                z.number
            );
            let _ = writeln!(
                h,
                "<text class=\"zone-title\" x=\"{}\" y=\"{}\">{} {}</text>",
                z.zone.x0,
                (z.zone.y0 - 2.0).max(8.0),
                z.kind,
                z.number
            );
        }
        h.push_str("</svg>\n</div>\n");
    }
    h.push_str("</body>\n</html>\n");
    h
}
