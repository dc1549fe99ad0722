use intermit_core::boole_eval;
use intermit_core::cadlag::{williams_discrete_check, StepFunction};
use intermit_core::occupation::occupation_counting;
use intermit_core::return_map::ExcursionTrace;
use proptest::prelude::*;

/// Strictly increasing ramp with jumps: pieces `(length, slope, jump after)`.
fn ramp() -> impl Strategy<Value = StepFunction> {
    prop::collection::vec((0.1f64..3.0, 0.2f64..5.0, 0.0f64..2.0), 1..8).prop_map(|pieces| {
        let (mut starts, mut values, mut slopes) = (vec![], vec![], vec![]);
        let (mut s, mut v) = (0.0, 0.0);
        for (len, slope, jump) in pieces {
            starts.push(s);
            values.push(v);
            slopes.push(slope);
            s += len;
            v += slope * len + jump;
        }
        StepFunction::new(starts, values, slopes, None).unwrap()
    })
}

/// Excursions into single rays separated by runs in `Y` (region `d`).
fn itinerary(d: u8) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec((0..d, 0usize..8, 1usize..3), 1..40).prop_map(move |parts| {
        parts
            .into_iter()
            .flat_map(|(r, len, ys)| std::iter::repeat(r).take(len).chain(std::iter::repeat(d).take(ys)))
            .collect()
    })
}

proptest! {
    #[test]
    fn inverse_is_an_involution_on_ramps(f in ramp(), t in 0.0f64..20.0) {
        let back = f.rc_inverse().unwrap().rc_inverse().unwrap();
        let (a, b) = (f.eval(t).unwrap(), back.eval(t).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a), "{a} vs {b}");
    }

    #[test]
    fn first_and_last_passage_bracket_t(f in ramp(), t in 0.0f64..30.0) {
        let g = f.g_op(t).unwrap();
        let d = f.d_op(t).unwrap();
        prop_assert!(g <= t && t <= d);
        // right-continuity in t
        let h = 1e-9;
        prop_assert!((f.g_op(t + h).unwrap() - g).abs() < 1e-6 || g == t);
        prop_assert!((f.d_op(t + h).unwrap() - d).abs() < 1e-6 || d == t);
    }

    #[test]
    fn occupation_times_add_up(it in itinerary(2)) {
        let s: Vec<_> = (0..=2u8).map(|r| occupation_counting(&it, r)).collect();
        for u in 0..=it.len() {
            let total: f64 = s.iter().map(|f| f.eval(u as f64).unwrap()).sum();
            prop_assert_eq!(total, u as f64);
        }
    }

    #[test]
    fn williams_formula_on_itineraries(it in itinerary(3)) {
        let d = 3;
        let trace = ExcursionTrace::from_regions(d, &it).unwrap();
        prop_assume!(!trace.is_empty());
        let eta: Vec<_> = (0..d).map(|j| trace.eta(j)).collect();
        let s: Vec<_> = (0..d as u8).map(|r| occupation_counting(&it, r)).collect();
        let grid: Vec<f64> = (0..=it.len()).map(|k| k as f64 / 2.0).collect();
        let w = williams_discrete_check(&eta, &trace.phi(), &s, &grid);
        prop_assert_eq!(w.violations, 0);
        prop_assert!(w.checked > 0);
    }

    #[test]
    fn boole_is_symmetric(x in 0.0f64..0.499) {
        let (a, b) = (boole_eval(1.0 - x), 1.0 - boole_eval(x));
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
    }
}
