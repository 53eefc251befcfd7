use proptest::prelude::*;
use tbrf_core::evaluation::detection::iou;
use tbrf_core::evaluation::metrics::report_from_pairs;
use tbrf_core::BoundingBox;

fn bbox() -> impl Strategy<Value = BoundingBox> {
    (0.0..500.0f64, 0.0..500.0f64, 0.0..200.0f64, 0.0..200.0f64)
        .prop_map(|(x, y, w, h)| BoundingBox::new(x, y, x + w, y + h))
}

fn pairs() -> impl Strategy<Value = Vec<(u8, u8)>> {
    prop::collection::vec((0u8..4, 0u8..4), 1..200)
}

proptest! {
    #[test]
    fn iou_symmetric_and_bounded(a in bbox(), b in bbox()) {
        let (ab, ba) = (iou(&a, &b), iou(&b, &a));
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        if a.area() > 0.0 {
            prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn report_ignores_input_order(p in pairs(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = p.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(report_from_pairs(p), report_from_pairs(shuffled));
    }

    #[test]
    fn f1_matches_confusion_counts(p in pairs()) {
        let r = report_from_pairs(p.iter().copied());
        for (&c, m) in &r.per_class {
            let tp = p.iter().filter(|(g, q)| *g == c && *q == c).count() as f64;
            let fp = p.iter().filter(|(g, q)| *g != c && *q == c).count() as f64;
            let fn_ = p.iter().filter(|(g, q)| *g == c && *q != c).count() as f64;
            let direct = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fn_) };
            prop_assert!((m.f1 - direct).abs() < 1e-12, "class {c}: {} vs {direct}", m.f1);
            prop_assert_eq!(m.support, (tp + fn_) as usize);
        }
        let correct = p.iter().filter(|(g, q)| g == q).count() as f64;
        prop_assert!((r.accuracy - correct / p.len() as f64).abs() < 1e-12);
        let mean_f1 = r.per_class.values().map(|m| m.f1).sum::<f64>() / r.per_class.len() as f64;
        prop_assert!((r.macro_avg.f1 - mean_f1).abs() < 1e-12);
    }
}

#[test]
fn perfect_and_empty_classes() {
    let r = report_from_pairs([(1u8, 1u8), (2, 2), (2, 2)]);
    assert!(r.per_class.values().all(|m| m.f1 == 1.0));
    assert_eq!(r.accuracy, 1.0);
    // a class only ever predicted scores zero and still counts toward the mean
    let r = report_from_pairs([(1u8, 1u8), (1, 3)]);
    assert_eq!(r.per_class[&3].f1, 0.0);
    assert_eq!(r.per_class.len(), 2);
}
