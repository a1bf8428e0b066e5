//! Property tests for the serialization round trip and the subsampler.

use ddlab_core::{
    load_curve, restrict, save_curve, subsample, CurveFormat, LearningCurve, Segment, TimeUnit,
};
use proptest::prelude::*;

/// Strictly increasing, non-negative times with finite values.
fn arb_curve() -> impl Strategy<Value = LearningCurve> {
    proptest::collection::vec((0.0f64..1e5, -1e6f64..1e6), 2..80).prop_filter_map(
        "needs 2 distinct times",
        |mut pts| {
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            pts.dedup_by(|a, b| a.0 == b.0);
            if pts.len() < 2 {
                return None;
            }
            LearningCurve::new(pts, "prop", TimeUnit::Epoch).ok()
        },
    )
}

proptest! {
    #[test]
    fn save_load_round_trips_bit_exactly(curve in arb_curve()) {
        for format in [CurveFormat::Csv, CurveFormat::Jsonl] {
            let bytes = save_curve(&curve, format);
            let back = load_curve(&bytes[..], format).unwrap();
            prop_assert_eq!(back.points(), curve.points());
        }
    }

    #[test]
    fn subsample_strides_compose(curve in arb_curve(), a in 1usize..5, b in 1usize..5) {
        let lhs = subsample(&curve, a, 0).and_then(|c| subsample(&c, b, 0));
        let rhs = subsample(&curve, a * b, 0);
        match (lhs, rhs) {
            (Ok(l), Ok(r)) => prop_assert_eq!(l, r),
            (Err(_), Err(_)) => {}
            (l, r) => prop_assert!(false, "composition disagreed: {:?} vs {:?}", l.is_ok(), r.is_ok()),
        }
    }

    #[test]
    fn restrict_is_idempotent_on_arbitrary_segments(curve in arb_curve(), lo in 0.0f64..5e4, width in 1.0f64..5e4) {
        let seg = Segment::new(lo, lo + width).unwrap();
        if let Ok(once) = restrict(&curve, seg) {
            let twice = restrict(&once, seg).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
