use proptest::prelude::*;
use vnfrep_core::cost::{default_cost_function, CostFunction};

const SLOPES: [f64; 6] = [1.0, 3.0, 10.0, 70.0, 500.0, 5000.0];
const BREAKS: [f64; 6] = [0.0, 1.0 / 3.0, 2.0 / 3.0, 0.9, 1.0, 1.1];

/// Integral of the step slope function from 0 to `u`.
fn integrated(u: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..SLOPES.len() {
        let lo = BREAKS[i];
        let hi = BREAKS.get(i + 1).copied().unwrap_or(f64::INFINITY);
        if u > lo {
            total += SLOPES[i] * (u.min(hi) - lo);
        }
    }
    total
}

fn grid() -> Vec<f64> {
    (0..1000).map(|i| 1.5 * i as f64 / 999.0).collect()
}

#[test]
fn matches_integrated_slopes() {
    let f = default_cost_function();
    for u in grid() {
        let (got, want) = (f.envelope(u), integrated(u));
        assert!((got - want).abs() <= 1e-9 * want.max(1.0), "u={u}: {got} vs {want}");
    }
}

#[test]
fn convex_and_nondecreasing_on_grid() {
    let f = default_cost_function();
    let g = grid();
    let v: Vec<f64> = g.iter().map(|&u| f.envelope(u)).collect();
    for w in v.windows(2) {
        assert!(w[1] >= w[0] - 1e-12);
    }
    for w in v.windows(3) {
        assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-9, "{w:?}");
    }
}

#[test]
fn known_values() {
    let f = default_cost_function();
    assert_eq!(f.envelope(0.0), 0.0);
    assert!((f.envelope(1.0 / 3.0) - 1.0 / 3.0).abs() < 1e-12);
    assert!((f.envelope(2.0 / 3.0) - 4.0 / 3.0).abs() < 1e-12);
    assert!((f.envelope(1.0) - (4.0 / 3.0 + 10.0 * (0.9 - 2.0 / 3.0) + 70.0 * 0.1)).abs() < 1e-12);
}

#[test]
fn pairs_round_trip() {
    let f = default_cost_function();
    assert_eq!(CostFunction::from_pairs(&f.pairs()).unwrap(), f);
    let pairs: Vec<(f64, f64)> = SLOPES.iter().copied().zip(BREAKS).collect();
    assert_eq!(f.pairs(), pairs);
}

proptest! {
    #[test]
    fn envelope_dominates_every_segment(u in 0.0f64..3.0) {
        let f = default_cost_function();
        let e = f.envelope(u);
        prop_assert!(f.segments().iter().all(|s| e >= s.eval(u) - 1e-12));
        prop_assert!(f.segments().iter().any(|s| (e - s.eval(u)).abs() <= 1e-9 * e.max(1.0)));
    }

    #[test]
    fn any_valid_shape_is_convex(
        steps in prop::collection::vec((0.1f64..50.0, 0.05f64..0.5), 1..6),
        a0 in 0.0f64..5.0,
        xs in prop::collection::vec(0.0f64..4.0, 3),
    ) {
        let mut pairs = vec![(a0, 0.0)];
        for (da, dx) in steps {
            let (a, x) = *pairs.last().unwrap();
            pairs.push((a + da, x + dx));
        }
        let f = CostFunction::from_pairs(&pairs).unwrap();
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        let [x, y, z] = [xs[0], xs[1], xs[2]];
        prop_assert!(f.envelope(x) <= f.envelope(y) + 1e-12);
        if z > x {
            let t = (y - x) / (z - x);
            prop_assert!(f.envelope(y) <= (1.0 - t) * f.envelope(x) + t * f.envelope(z) + 1e-9 * f.envelope(z).max(1.0));
        }
    }
}
