use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use tbrf_core::config::Config;
use tbrf_core::evaluation::detection::iou;
use tbrf_core::pipeline::{detect_document, prepare};
use tbrf_core::synth::{generate_corpus, generate_document, SynthOptions};
use tbrf_core::{BlockLabel, BoundingBox, Document, ZoneDetection, ZoneKind};

fn check_zones(doc: &Document, labels: &BTreeMap<u32, BlockLabel>, zones: &[ZoneDetection]) -> Result<(), String> {
    let mut claimed: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for z in zones {
        let name = format!("{} {} {}", doc.doc_id, z.kind, z.number);
        let caption = doc.block(z.caption_block_id).ok_or(format!("{name}: caption missing"))?;
        if z.flagged {
            if !z.member_block_ids.is_empty() || z.zone != caption.bbox {
                return Err(format!("{name}: flagged zone must be the bare caption"));
            }
            continue;
        }
        let mut boxes = Vec::new();
        for id in &z.member_block_ids {
            let b = doc.block(*id).ok_or(format!("{name}: member {id} missing"))?;
            if !(b.is_image() || labels.get(id) == Some(&BlockLabel::Supplement)) {
                return Err(format!("{name}: member {id} is {:?}", labels.get(id)));
            }
            if b.page_index != z.page_index {
                return Err(format!("{name}: member {id} on another page"));
            }
            if !claimed.entry(z.page_index).or_default().insert(*id) {
                return Err(format!("{name}: member {id} shared"));
            }
            boxes.push(b.bbox);
        }
        let union = BoundingBox::union_all(&boxes).ok_or(format!("{name}: no members"))?;
        let widened = BoundingBox::new(
            union.x0.min(caption.bbox.x0),
            union.y0,
            union.x1.max(caption.bbox.x1),
            union.y1,
        );
        if z.zone != union && z.zone != widened {
            return Err(format!("{name}: zone {:?} vs union {:?}", z.zone, union));
        }
    }
    Ok(())
}

fn gold_labels(seed: u64) -> (Document, BTreeMap<u32, BlockLabel>) {
    let s = generate_document("z", seed, &SynthOptions::default());
    let (doc, _) = prepare(s.doc, &Config::default()).unwrap();
    (doc, s.labels)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn invariants_under_label_noise(seed in 0u64..10_000, flip in 0.0..0.3f64) {
        let (doc, mut labels) = gold_labels(seed);
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for l in labels.values_mut() {
            if r.random_bool(flip) {
                *l = [BlockLabel::BodyText, BlockLabel::Supplement, BlockLabel::Accessory][r.random_range(0..3)];
            }
        }
        let cfg = Config::default();
        let a = detect_document(&doc, &labels, &cfg).unwrap();
        prop_assert_eq!(check_zones(&doc, &labels, &a.zones), Ok(()));
        let b = detect_document(&doc, &labels, &cfg).unwrap();
        prop_assert_eq!(a.zones, b.zones);
    }
}

#[test]
fn gold_labels_recover_gold_zones() {
    let cfg = Config::default();
    let corpus = generate_corpus("zg", 20, 9000, &SynthOptions::default());
    let (mut hit, mut total) = (0, 0);
    for s in &corpus {
        let (doc, _) = prepare(s.doc.clone(), &cfg).unwrap();
        let a = detect_document(&doc, &s.labels, &cfg).unwrap();
        for g in &s.gold.detections {
            total += 1;
            let found = a.zones.iter().find(|z| z.kind == g.kind && z.number == g.number);
            if found.is_some_and(|z| iou(&z.zone, &g.zone) >= 0.8) {
                hit += 1;
            }
        }
    }
    assert!(hit as f64 >= 0.95 * total as f64, "{hit}/{total}");
}

#[test]
fn stacked_tables_get_their_own_zones() {
    let cfg = Config::default();
    let opts = SynthOptions {
        continuous_table_rate: 1.0,
        ..SynthOptions::default()
    };
    let mut pages = 0;
    for seed in 0..6 {
        let s = generate_document(&format!("ct{seed}"), 400 + seed, &opts);
        let (doc, _) = prepare(s.doc.clone(), &cfg).unwrap();
        let a = detect_document(&doc, &s.labels, &cfg).unwrap();
        for &p in &s.continuous_table_pages {
            pages += 1;
            let tables: Vec<&ZoneDetection> =
                a.zones.iter().filter(|z| z.page_index == p && z.kind == ZoneKind::Table).collect();
            assert!(tables.len() >= 2, "{} page {p}", s.doc.doc_id);
            for (i, x) in tables.iter().enumerate() {
                assert!(!x.flagged);
                for y in &tables[i + 1..] {
                    assert!(x.zone.intersection(&y.zone).is_none_or(|b| b.area() == 0.0));
                    let gold = s.gold.detections.iter().find(|g| g.kind == y.kind && g.number == y.number).unwrap();
                    assert!(iou(&y.zone, &gold.zone) >= 0.8, "{} table {}", s.doc.doc_id, y.number);
                }
            }
        }
    }
    assert!(pages >= 3, "{pages}");
}
