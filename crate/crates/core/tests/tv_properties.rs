use proptest::prelude::*;
use truvar::tv::{
    levy_skeleton, minimal_envelope, sup_distance, total_variation, truncated_variation, tv_oracle_dp,
    tv_oracle_exhaustive, tv_profile,
};
use truvar::SampledPath;

fn tv(values: &[f64], c: f64) -> f64 {
    truncated_variation(&SampledPath::from_values(values.to_vec()).unwrap(), c).unwrap().value
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Three value distributions: continuous, tie-heavy integers, and wide magnitudes.
fn values(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec(-5.0..5.0f64, 1..=max_len),
        prop::collection::vec((-3i32..=3).prop_map(f64::from), 1..=max_len),
        prop::collection::vec(prop_oneof![-1e6..1e6f64, -1e-3..1e-3f64], 1..=max_len),
    ]
}

fn level() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), 0.0..4.0f64, 0.0..1e5f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn streaming_matches_both_oracles(x in values(12), c in level()) {
        let path = SampledPath::from_values(x).unwrap();
        let s = truncated_variation(&path, c).unwrap().value;
        let d = tv_oracle_dp(&path, c).unwrap().value;
        let e = tv_oracle_exhaustive(&path, c).unwrap().value;
        prop_assert!(close(s, d), "streaming {s} vs dp {d}");
        prop_assert!(close(d, e), "dp {d} vs exhaustive {e}");
    }

    #[test]
    fn streaming_matches_dp_on_longer_paths(x in prop::collection::vec(-5.0..5.0f64, 1..300), c in 0.0..3.0f64) {
        let path = SampledPath::from_values(x).unwrap();
        let s = truncated_variation(&path, c).unwrap().value;
        let d = tv_oracle_dp(&path, c).unwrap().value;
        prop_assert!(close(s, d), "streaming {s} vs dp {d}");
    }

    #[test]
    fn scales_with_the_path(x in values(40), c in 0.0..4.0f64, a in 0.01..100.0f64) {
        let scaled: Vec<f64> = x.iter().map(|v| a * v).collect();
        prop_assert!(close(tv(&scaled, a * c), a * tv(&x, c)));
    }

    #[test]
    fn invariant_under_reversal_shift_and_sign(x in values(40), c in level(), s in -10.0..10.0f64) {
        let base = tv(&x, c);
        let mut r = x.clone();
        r.reverse();
        prop_assert!(close(tv(&r, c), base));
        let shifted: Vec<f64> = x.iter().map(|v| v + s).collect();
        prop_assert!(close(tv(&shifted, c), base));
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert!(close(tv(&neg, c), base));
    }

    #[test]
    fn elementary_bounds(x in values(40), c in level()) {
        let path = SampledPath::from_values(x.clone()).unwrap();
        let v = tv(&x, c);
        let total = total_variation(&path);
        let n = (x.len() - 1) as f64;
        let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let tol = 1e-9 * (1.0 + total);
        prop_assert!(v <= total + tol);
        prop_assert!(v >= total - n * c - tol);
        prop_assert!(v >= (hi - lo - c).max(0.0) - tol);
        prop_assert!(v >= ((x[x.len() - 1] - x[0]).abs() - c).max(0.0) - tol);
    }

    #[test]
    fn split_is_superadditive_up_to_c(x in values(40), c in level(), k in any::<prop::sample::Index>()) {
        let m = k.index(x.len());
        let (a, b) = (tv(&x[..=m], c), tv(&x[m..], c));
        let whole = tv(&x, c);
        let tol = 1e-9 * (1.0 + whole);
        prop_assert!(a + b <= whole + tol, "{a} + {b} > {whole}");
        prop_assert!(whole <= a + b + c + tol, "{whole} > {a} + {b} + {c}");
    }

    #[test]
    fn profile_is_nonincreasing_and_convex(x in values(40), mut cs in prop::collection::vec(0.0..6.0f64, 3..20)) {
        cs.sort_by(f64::total_cmp);
        cs.dedup();
        let path = SampledPath::from_values(x).unwrap();
        let p = tv_profile(&path, &cs).unwrap();
        for (i, &c) in cs.iter().enumerate() {
            prop_assert_eq!(p[i], truncated_variation(&path, c).unwrap().value);
        }
        let scale = 1.0 + p[0];
        for w in p.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * scale);
        }
        for i in 1..cs.len().saturating_sub(1) {
            // Convexity on an uneven grid: the middle point lies below the chord.
            let (c0, c1, c2) = (cs[i - 1], cs[i], cs[i + 1]);
            let chord = p[i - 1] + (p[i + 1] - p[i - 1]) * (c1 - c0) / (c2 - c0);
            prop_assert!(p[i] <= chord + 1e-9 * scale);
        }
    }

    #[test]
    fn envelope_attains_the_value(x in values(60), c in level()) {
        let path = SampledPath::from_values(x).unwrap();
        let env = minimal_envelope(&path, c).unwrap();
        let v = truncated_variation(&path, c).unwrap().value;
        let ev = total_variation(&env);
        prop_assert!(close(ev, v), "envelope {ev} vs {v}");
        let scale = path.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(sup_distance(&path, &env) <= 0.5 * c + 1e-12 * (1.0 + scale));
    }

    #[test]
    fn skeleton_dominates(x in values(60), c in 1e-3..4.0f64) {
        let path = SampledPath::from_values(x).unwrap();
        let skel = levy_skeleton(&path, c).unwrap();
        let v = truncated_variation(&path, c).unwrap().value;
        let sv = total_variation(&skel.skel);
        prop_assert!(v <= sv + 1e-9 * (1.0 + sv));
        prop_assert_eq!(skel.stop_indices[0], 0);
        let (xs, ks) = (path.values(), skel.skel.values());
        for w in skel.stop_indices.windows(2) {
            prop_assert!((xs[w[1]] - ks[w[0]]).abs() > 0.5 * c);
            prop_assert!(ks[w[0]..w[1]].iter().all(|&v| v == xs[w[0]]));
        }
        prop_assert!(skel.overshoot_events < skel.stop_indices.len());
    }

    #[test]
    fn repeated_points_change_nothing(x in values(30), c in level(), k in any::<prop::sample::Index>()) {
        let i = k.index(x.len());
        let mut y = x.clone();
        y.insert(i, x[i]);
        prop_assert_eq!(tv(&y, c), tv(&x, c));
    }
}
