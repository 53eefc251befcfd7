//! Shared oracles for the integration tests. Nothing here calls into the
//! solver, encoder or zone code it is used to check.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tbrf_core::classifier::{LabeledDataset, LabeledRow};
use tbrf_core::encoder::FeatureVector;
use tbrf_core::{BlockKind, BlockLabel, Document};

pub fn gaussian(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d).exp()
}

pub struct QpInstance {
    pub points: Vec<[f64; 8]>,
    pub y: Vec<f64>,
    pub c: f64,
    pub gamma: f64,
}

impl QpInstance {
    fn q(&self) -> Vec<Vec<f64>> {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| self.y[i] * self.y[j] * gaussian(&self.points[i], &self.points[j], self.gamma))
                    .collect()
            })
            .collect()
    }

    /// `sum(a) - 1/2 a^T Q a`
    pub fn dual(&self, alpha: &[f64]) -> f64 {
        dual_with(&self.q(), alpha)
    }
}

fn dual_with(q: &[Vec<f64>], a: &[f64]) -> f64 {
    let mut quad = 0.0;
    for (i, row) in q.iter().enumerate() {
        let qa: f64 = row.iter().zip(a).map(|(x, y)| x * y).sum();
        quad += a[i] * qa;
    }
    a.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto `{0 <= a <= c, y.a = 0}` by bisection on the
/// multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - lam * yi).clamp(0.0, c)).collect() };
    let g = |a: &[f64]| -> f64 { a.iter().zip(y).map(|(ai, yi)| ai * yi).sum() };
    let span = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * span {
            break;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient with adaptive restart on the dual QP.
/// Returns the best feasible iterate and its dual objective.
pub fn qp_oracle(inst: &QpInstance, max_iter: usize) -> (Vec<f64>, f64) {
    let q = inst.q();
    let n = q.len();
    // largest eigenvalue by power iteration
    let mut v = vec![1.0; n];
    let mut lmax = 0.0;
    for _ in 0..500 {
        let w: Vec<f64> = q.iter().map(|r| r.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lmax = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / norm).collect();
    }
    let step = 1.0 / (lmax * 1.01 + 1e-12);

    let mut x = vec![0.0; n];
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut best = (x.clone(), 0.0);
    let mut prev_obj = 0.0;
    for _ in 0..max_iter {
        // ascent on the dual: gradient e - Q z
        let grad: Vec<f64> = q
            .iter()
            .map(|r| 1.0 - r.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let moved: Vec<f64> = z.iter().zip(&grad).map(|(zi, gi)| zi + step * gi).collect();
        let nx = project(&moved, &inst.y, inst.c);
        let obj = dual_with(&q, &nx);
        if obj > best.1 {
            best = (nx.clone(), obj);
        }
        let nt = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if obj < prev_obj {
            // restart momentum
            t = 1.0;
            z = nx.clone();
        } else {
            let beta = (t - 1.0) / nt;
            z = nx.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
            t = nt;
        }
        let delta: f64 = nx.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = nx;
        prev_obj = obj;
        if delta < 1e-13 * (1.0 + inst.c) {
            break;
        }
    }
    best
}

/// Bias from KKT conditions: mean over free vectors, else the midpoint of
/// the feasible interval.
pub fn oracle_bias(inst: &QpInstance, alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let f: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| alpha[j] * inst.y[j] * gaussian(&inst.points[i], &inst.points[j], inst.gamma))
                .sum()
        })
        .collect();
    let eps = 1e-8 * inst.c;
    let free: Vec<f64> = (0..n)
        .filter(|&i| alpha[i] > eps && alpha[i] < inst.c - eps)
        .map(|i| inst.y[i] - f[i])
        .collect();
    if !free.is_empty() {
        return free.iter().sum::<f64>() / free.len() as f64;
    }
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let at_upper = alpha[i] >= inst.c - eps;
        let bound = inst.y[i] - f[i];
        if (inst.y[i] > 0.0) != at_upper {
            lo = lo.max(bound);
        } else {
            hi = hi.min(bound);
        }
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        _ => 0.0,
    }
}

/// One-vs-one machine built from oracle multipliers.
pub struct OracleMachine {
    pub a: BlockLabel,
    pub b: BlockLabel,
    pub points: Vec<[f64; 8]>,
    pub coef: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub objective: f64,
}

impl OracleMachine {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(&self.coef)
            .map(|(p, c)| c * gaussian(p, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }
}

pub fn oracle_machines(rows: &[([f64; 8], BlockLabel)], c: f64, gamma: f64, iters: usize) -> Vec<OracleMachine> {
    let mut classes: Vec<BlockLabel> = rows.iter().map(|r| r.1).collect();
    classes.sort();
    classes.dedup();
    let mut out = Vec::new();
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            let (a, b) = (classes[i], classes[j]);
            let sub: Vec<&([f64; 8], BlockLabel)> = rows.iter().filter(|r| r.1 == a || r.1 == b).collect();
            let inst = QpInstance {
                points: sub.iter().map(|r| r.0).collect(),
                y: sub.iter().map(|r| if r.1 == a { 1.0 } else { -1.0 }).collect(),
                c,
                gamma,
            };
            let (alpha, objective) = qp_oracle(&inst, iters);
            let bias = oracle_bias(&inst, &alpha);
            out.push(OracleMachine {
                a,
                b,
                coef: alpha.iter().zip(&inst.y).map(|(a, y)| a * y).collect(),
                points: inst.points,
                bias,
                gamma,
                objective,
            });
        }
    }
    out
}

/// Majority vote, then summed signed value, then class order.
pub fn oracle_vote(machines: &[OracleMachine], x: &[f64]) -> BlockLabel {
    let mut tally: BTreeMap<BlockLabel, (usize, f64)> = BTreeMap::new();
    for m in machines {
        let v = m.value(x);
        tally.entry(m.a).or_default().1 += v;
        tally.entry(m.b).or_default().1 -= v;
        tally.entry(if v > 0.0 { m.a } else { m.b }).or_default().0 += 1;
    }
    let mut all: Vec<(BlockLabel, usize, f64)> = tally.into_iter().map(|(k, (n, s))| (k, n, s)).collect();
    all.sort_by(|x, y| y.1.cmp(&x.1).then(y.2.total_cmp(&x.2)).then(x.0.cmp(&y.0)));
    all[0].0
}

/// Dual objective of a stored machine, from its coefficients alone.
pub fn machine_dual(sv: &[[f64; 8]], coef: &[f64], gamma: f64) -> f64 {
    let mut quad = 0.0;
    for i in 0..sv.len() {
        for j in 0..sv.len() {
            quad += coef[i] * coef[j] * gaussian(&sv[i], &sv[j], gamma);
        }
    }
    coef.iter().map(|c| c.abs()).sum::<f64>() - 0.5 * quad
}

pub const LABELS: [BlockLabel; 3] = [BlockLabel::BodyText, BlockLabel::Supplement, BlockLabel::Accessory];

/// Gaussian blobs in 8-D: `n` points over `k` classes, overlapping enough
/// that some multipliers sit at C.
pub fn blob_instance(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<([f64; 8], BlockLabel)> {
    let centers: Vec<[f64; 8]> = (0..k)
        .map(|_| std::array::from_fn(|_| rng.random_range(0.0..2.0)))
        .collect();
    let spread = rng.random_range(0.3..0.9);
    (0..n)
        .map(|i| {
            let c = i % k;
            let p = std::array::from_fn(|d| {
                // sum of uniforms as a cheap bell shape
                let u: f64 = (0..4).map(|_| rng.random_range(-1.0..1.0)).sum::<f64>() * 0.5;
                centers[c][d] + spread * u
            });
            (p, LABELS[c])
        })
        .collect()
}

pub fn dataset_of(rows: &[([f64; 8], BlockLabel)]) -> LabeledDataset {
    LabeledDataset::new(
        rows.iter()
            .enumerate()
            .map(|(i, (x, l))| LabeledRow {
                doc_id: "toy".into(),
                block_id: i as u32,
                features: FeatureVector::from_array(*x),
                label: *l,
            })
            .collect(),
    )
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Font character totals recomputed straight from the spans.
pub fn font_histogram(doc: &Document) -> BTreeMap<String, u64> {
    let mut h = BTreeMap::new();
    for page in &doc.pages {
        for b in page.blocks.iter().filter(|b| b.kind == BlockKind::Text) {
            for s in &b.spans {
                *h.entry(s.font_name.clone()).or_insert(0) += s.char_count;
            }
        }
    }
    h
}

pub fn total_span_chars(doc: &Document) -> u64 {
    doc.pages
        .iter()
        .flat_map(|p| &p.blocks)
        .filter(|b| b.kind == BlockKind::Text)
        .flat_map(|b| &b.spans)
        .map(|s| s.char_count)
        .sum()
}

/// Checks every per-vector and per-page invariant of an encoded document.
pub fn check_encoding(doc: &Document, vectors: &[(u32, FeatureVector)]) -> Result<(), String> {
    if vectors.len() != doc.pages.iter().map(|p| p.blocks.len()).sum::<usize>() {
        return Err(format!("{}: {} vectors for a different block count", doc.doc_id, vectors.len()));
    }
    let page_of: BTreeMap<u32, u32> = doc
        .pages
        .iter()
        .flat_map(|p| p.blocks.iter().map(move |b| (b.block_id, p.page_index)))
        .collect();
    let mut per_page: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    let mut widest = 0.0f64;
    for (id, v) in vectors {
        let ctx = format!("{} block {id}", doc.doc_id);
        let all = v.to_array();
        if all.iter().any(|x| !x.is_finite()) {
            return Err(format!("{ctx}: non-finite code"));
        }
        if !(v.code_width > 0.0 && v.code_width <= 1.0) {
            return Err(format!("{ctx}: code_width {}", v.code_width));
        }
        if !(v.code_height > 0.0 && v.code_height <= 1.0) {
            return Err(format!("{ctx}: code_height {}", v.code_height));
        }
        if v.code_ft != 0.0 && v.code_ft != 1.0 {
            return Err(format!("{ctx}: code_ft {}", v.code_ft));
        }
        if v.code_fs <= 0.0 {
            return Err(format!("{ctx}: code_fs {}", v.code_fs));
        }
        widest = widest.max(v.code_width);
        let e = per_page.entry(page_of[id]).or_insert((f64::INFINITY, f64::NEG_INFINITY));
        e.0 = e.0.min(v.code_left);
        e.1 = e.1.max(v.code_right);
    }
    for (page, (min_left, max_right)) in per_page {
        if (min_left - 1.0).abs() > 1e-12 || (max_right - 1.0).abs() > 1e-12 {
            return Err(format!(
                "{} page {page}: min code_left {min_left}, max code_right {max_right}",
                doc.doc_id
            ));
        }
    }
    if !vectors.is_empty() && (widest - 1.0).abs() > 1e-12 {
        return Err(format!("{}: widest block has code_width {widest}", doc.doc_id));
    }
    Ok(())
}

pub mod arb {
    use proptest::prelude::*;
    use tbrf_core::{BlockKind, BoundingBox, Document, Page, SpanFontStats, TextBlock};

    pub const FONTS: [&str; 4] = ["Body-Regular", "Body-Italic", "Sans", "Math"];

    fn span() -> impl Strategy<Value = SpanFontStats> {
        (0..FONTS.len(), prop::sample::select(vec![8.0, 9.0, 10.0, 10.95, 11.0, 14.0]), 1u64..300)
            .prop_map(|(f, size, n)| SpanFontStats::new(FONTS[f], size, n))
    }

    /// (is_image, bbox, spans); coordinates stay clear of the page edge.
    fn block() -> impl Strategy<Value = (bool, [f64; 4], Vec<SpanFontStats>)> {
        (
            prop::bool::weighted(0.1),
            1.0..500.0f64,
            1.0..760.0f64,
            2.0..300.0f64,
            2.0..80.0f64,
            prop::collection::vec(span(), 1..4),
        )
            .prop_map(|(img, x, y, w, h, spans)| (img, [x, y, (x + w).min(594.0), y + h], spans))
    }

    /// 1-3 pages of 1-25 blocks; the first block of every page is text.
    pub fn document() -> impl Strategy<Value = Document> {
        prop::collection::vec(prop::collection::vec(block(), 1..25), 1..4).prop_map(|pages| {
            let mut next = 0u32;
            let pages = pages
                .into_iter()
                .enumerate()
                .map(|(pi, blocks)| Page {
                    page_index: pi as u32,
                    width: 595.0,
                    height: 842.0,
                    blocks: blocks
                        .into_iter()
                        .enumerate()
                        .map(|(bi, (img, b, spans))| {
                            let image = img && bi > 0;
                            next += 1;
                            TextBlock {
                                block_id: next - 1,
                                page_index: pi as u32,
                                kind: if image { BlockKind::Image } else { BlockKind::Text },
                                bbox: BoundingBox::new(b[0], b[1], b[2], b[3]),
                                text: if image { String::new() } else { format!("block {}", next - 1) },
                                spans: if image { Vec::new() } else { spans },
                                reading_order: None,
                            }
                        })
                        .collect(),
                })
                .collect();
            Document {
                doc_id: "arb".into(),
                pages,
            }
        })
    }
}
