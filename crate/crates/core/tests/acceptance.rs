//! Acceptance suite. Each test prints one `PASS` / `FAIL` line (straight to
//! stdout, so it shows up without `--nocapture`) and then asserts.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use common::*;
use rand::Rng;
use tbrf_core::classifier::{repeated_eval, train, SvmHyperparams, TrainedModel};
use tbrf_core::config::Config;
use tbrf_core::encoder::{compute_context, encode_document, write_jsonl};
use tbrf_core::evaluation::detection::{detection_report, records_from_sets};
use tbrf_core::pipeline::{analyze, prepare};
use tbrf_core::synth::{corpus_dataset, generate_corpus, SynthOptions};
use tbrf_core::{BlockLabel, DetectionSet, ZoneKind};

fn report(name: &str, ok: bool, detail: String) {
    let line = format!("{} {name}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(ok, "{name}: {detail}");
}

fn train_corpus_model(cfg: &Config) -> TrainedModel {
    let corpus = generate_corpus("train", 10, 1000, &SynthOptions::default());
    train(&corpus_dataset(&corpus, &cfg.encoder).unwrap(), &SvmHyperparams::default(), 0).unwrap()
}

#[test]
fn encoder_invariants() {
    let t = Instant::now();
    let corpus = generate_corpus("enc", 200, 31_337, &SynthOptions::default());
    let cfg = Config::default();
    let mut failures = Vec::new();
    let mut vectors = 0;
    for s in &corpus {
        let v = encode_document(&s.doc, &cfg.encoder).unwrap();
        vectors += v.len();
        if let Err(e) = check_encoding(&s.doc, &v) {
            failures.push(e);
        }
        let ctx = compute_context(&s.doc).unwrap();
        if ctx.font_char_histogram != font_histogram(&s.doc)
            || ctx.font_char_histogram.values().sum::<u64>() != total_span_chars(&s.doc)
        {
            failures.push(format!("{}: font histogram not conserved", s.doc.doc_id));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    report(
        "encoder-invariants",
        failures.is_empty() && secs < 10.0,
        format!(
            "200 documents, {vectors} vectors, {} violations{}, {secs:.2} s (limit 10 s)",
            failures.len(),
            failures.first().map_or(String::new(), |f| format!(" (first: {f})"))
        ),
    );
}

#[test]
fn svm_oracle_equivalence() {
    let t = Instant::now();
    let mut r = rng(42);
    let mut worst_gap = 0.0f64;
    let mut worst_agree = 1.0f64;
    for inst in 0..25 {
        let n = r.random_range(12..=60);
        let k = r.random_range(2..=3);
        let c = [1.0, 10.0, 100.0][inst % 3];
        let gamma = [0.1, 0.5, 2.0][(inst / 3) % 3];
        let rows = blob_instance(&mut r, n, k);
        let hp = SvmHyperparams {
            c,
            gamma,
            ..Default::default()
        };
        let model = train(&dataset_of(&rows), &hp, 0).unwrap();
        let oracle = oracle_machines(&rows, c, gamma, 200_000);
        for (m, o) in model.machines.iter().zip(&oracle) {
            let smo = machine_dual(&m.support_vectors, &m.coefficients, gamma);
            worst_gap = worst_gap.max((smo - o.objective).abs());
        }

        // 3-level lattice over the bounding box of the data
        let mut lo = [f64::INFINITY; 8];
        let mut hi = [f64::NEG_INFINITY; 8];
        for (x, _) in &rows {
            for d in 0..8 {
                lo[d] = lo[d].min(x[d]);
                hi[d] = hi[d].max(x[d]);
            }
        }
        let mut agree = 0;
        let total = 3usize.pow(8);
        for code in 0..total {
            let x: [f64; 8] = std::array::from_fn(|d| {
                let level = (code / 3usize.pow(d as u32)) % 3;
                lo[d] + (hi[d] - lo[d]) * level as f64 / 2.0
            });
            if model.predict_slice(&x).unwrap() == oracle_vote(&oracle, &x) {
                agree += 1;
            }
        }
        worst_agree = worst_agree.min(agree as f64 / total as f64);
    }
    let secs = t.elapsed().as_secs_f64();
    report(
        "svm-oracle-equivalence",
        worst_gap <= 1e-3 && worst_agree >= 0.99 && secs < 60.0,
        format!(
            "25 instances, max dual objective gap {worst_gap:.2e} (limit 1e-3), min probe agreement {:.2}% (limit 99%), {secs:.2} s (limit 60 s)",
            worst_agree * 100.0
        ),
    );
}

#[test]
fn protocol_reproduction() {
    let cfg = Config::default();
    let corpus = generate_corpus("train", 10, 1000, &SynthOptions::default());
    let data = corpus_dataset(&corpus, &cfg.encoder).unwrap();
    let counts = data.class_counts();
    let n = data.len() as f64;
    let target = [
        (BlockLabel::BodyText, 33.9),
        (BlockLabel::Supplement, 58.9),
        (BlockLabel::Accessory, 7.2),
    ];
    let mix: Vec<(BlockLabel, f64)> = target
        .iter()
        .map(|(l, _)| (*l, 100.0 * counts.get(l).copied().unwrap_or(0) as f64 / n))
        .collect();
    let mix_ok = mix.iter().zip(&target).all(|(m, t)| (m.1 - t.1).abs() <= 5.0);

    let hp = SvmHyperparams {
        c: 100.0,
        gamma: 0.1,
        ..Default::default()
    };
    let t = Instant::now();
    let summary = repeated_eval(&data, &hp, 100, 0.9, 0).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let f1 = summary.all_label.f1;
    report(
        "protocol-reproduction",
        mix_ok && (1300..=1700).contains(&data.len()) && f1.mean >= 0.97 && f1.std <= 0.02 && secs < 300.0,
        format!(
            "{} rows, mix {:.1}/{:.1}/{:.1}% (target 33.9/58.9/7.2 +-5), 100 runs, all-label F1 {:.4} +- {:.4} (limits >= 0.97, <= 0.02), {secs:.1} s (limit 300 s)",
            data.len(),
            mix[0].1,
            mix[1].1,
            mix[2].1,
            f1.mean,
            f1.std
        ),
    );
}

#[test]
fn zone_detection() {
    let cfg = Config::default();
    let model = train_corpus_model(&cfg);
    let test = generate_corpus("test", 20, 5000, &SynthOptions::default());
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    let mut continuous_pages = 0;
    let mut continuous_ok = true;
    for s in &test {
        let (doc, _) = prepare(s.doc.clone(), &cfg).unwrap();
        let a = analyze(&doc, &model, &cfg).unwrap();
        for &p in &s.continuous_table_pages {
            continuous_pages += 1;
            let captions: Vec<u32> = s
                .gold
                .detections
                .iter()
                .filter(|g| g.page_index == p && g.kind == ZoneKind::Table)
                .map(|g| g.number)
                .collect();
            let zones: Vec<_> = a
                .zones
                .iter()
                .filter(|z| z.kind == ZoneKind::Table && captions.contains(&z.number))
                .collect();
            let distinct = zones.len() == captions.len()
                && zones.iter().all(|z| !z.flagged)
                && zones.iter().enumerate().all(|(i, x)| {
                    zones[i + 1..].iter().all(|y| {
                        x.zone != y.zone && x.member_block_ids.iter().all(|m| !y.member_block_ids.contains(m))
                    })
                });
            continuous_ok &= distinct;
        }
        pred.push(a.detection_set());
        gold.push(DetectionSet {
            doc_id: s.gold.doc_id.clone(),
            detections: s.gold.detections.clone(),
        });
    }
    let m = detection_report(&records_from_sets(&pred), &records_from_sets(&gold), 0.8).unwrap();
    let acc: BTreeMap<ZoneKind, (usize, usize, f64)> =
        m.per_kind.iter().map(|(k, v)| (*k, (v.accepted, v.gold, v.accuracy))).collect();
    let fig = acc.get(&ZoneKind::Figure).copied().unwrap_or_default();
    let tab = acc.get(&ZoneKind::Table).copied().unwrap_or_default();
    report(
        "zone-detection",
        fig.2 >= 0.9 && tab.2 >= 0.9 && continuous_pages >= 3 && continuous_ok,
        format!(
            "20 documents at IoU 0.8: figures {}/{} = {:.3}, tables {}/{} = {:.3} (limit 0.90); {continuous_pages} stacked-table pages (limit 3), distinct zones per caption: {continuous_ok}",
            fig.0, fig.1, fig.2, tab.0, tab.1, tab.2
        ),
    );
}

fn full_run() -> (String, String, String, String) {
    let cfg = Config::default();
    let corpus = generate_corpus("det", 4, 2024, &SynthOptions::default());
    let mut features = String::new();
    for s in &corpus {
        features += &write_jsonl(&s.labeled_rows(&cfg.encoder).unwrap());
    }
    let model = train(&corpus_dataset(&corpus, &cfg.encoder).unwrap(), &SvmHyperparams::default(), 9).unwrap();
    let mut labels = String::new();
    let mut zones = String::new();
    for s in generate_corpus("det-test", 4, 4048, &SynthOptions::default()) {
        let (doc, _) = prepare(s.doc, &cfg).unwrap();
        let a = analyze(&doc, &model, &cfg).unwrap();
        labels += &write_jsonl(&a.rows);
        zones += &serde_json::to_string(&a.detection_set()).unwrap();
        zones.push('\n');
    }
    (features, model.to_json(), labels, zones)
}

#[test]
fn determinism() {
    let a = full_run();
    let b = full_run();
    let same = [a.0 == b.0, a.1 == b.1, a.2 == b.2, a.3 == b.3];

    let fixture = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/model.json");
    let stored = std::fs::read_to_string(fixture).unwrap();
    let rebuilt = train_corpus_model(&Config::default()).to_json();
    let fixture_same = stored.trim_end() == rebuilt.trim_end();
    report(
        "determinism",
        same.iter().all(|x| *x) && fixture_same,
        format!(
            "byte-identical features {}, model {}, labels {}, zones {}; fixture model rebuilt identically {fixture_same}",
            same[0], same[1], same[2], same[3]
        ),
    );
}
