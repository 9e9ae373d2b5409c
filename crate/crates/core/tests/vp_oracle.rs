//! Exhaustive oracle for the Victor-Purpura distance: enumerate every
//! injective partial matching between two trains and take the cheapest
//! total cost. The dynamic program must agree exactly (costs here are sums
//! of integers and exactly-representable q multiples, so no tolerance).

use dasbe_core::eval::vp::vp_distance;

/// All spike trains with at most `max_spikes` spikes in a window of
/// `window` steps.
fn all_trains(window: usize, max_spikes: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for mask in 1u32..(1 << window) {
        if (mask.count_ones() as usize) <= max_spikes {
            out.push((0..window).filter(|&t| mask & (1 << t) != 0).collect());
        }
    }
    out
}

/// Brute force: try every way of matching a subset of `a` injectively to
/// spikes of `b`; unmatched spikes on either side cost 1 each, matched
/// pairs cost q·|Δt|.
fn brute_force(a: &[usize], b: &[usize], q: f64) -> f64 {
    fn recurse(a: &[usize], b: &[usize], q: f64, i: usize, used: &mut Vec<bool>) -> f64 {
        if i == a.len() {
            let unmatched_b = used.iter().filter(|&&u| !u).count();
            return unmatched_b as f64;
        }
        // leave a[i] unmatched
        let mut best = 1.0 + recurse(a, b, q, i + 1, used);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                let cost = q * (a[i] as f64 - b[j] as f64).abs()
                    + recurse(a, b, q, i + 1, used);
                used[j] = false;
                if cost < best {
                    best = cost;
                }
            }
        }
        best
    }
    let mut used = vec![false; b.len()];
    recurse(a, b, q, 0, &mut used)
}

#[test]
fn dp_matches_brute_force_on_all_small_pairs() {
    let trains = all_trains(8, 3);
    // q values chosen exactly representable so sums are order-independent
    for &q in &[0.0, 0.25, 0.5, 1.0, 2.0] {
        for a in &trains {
            for b in &trains {
                let dp = vp_distance(a, b, q);
                let bf = brute_force(a, b, q);
                assert_eq!(dp, bf, "a={a:?} b={b:?} q={q}");
            }
        }
    }
}

#[test]
fn q_zero_equals_spike_count_difference() {
    let trains = all_trains(8, 3);
    for a in &trains {
        for b in &trains {
            let want = (a.len() as f64 - b.len() as f64).abs();
            assert_eq!(vp_distance(a, b, 0.0), want, "a={a:?} b={b:?}");
        }
    }
}

#[test]
fn large_q_counts_non_coincident_spikes() {
    // with q·1 > 2 every shift is dearer than delete+insert, so distance
    // = |a \ b| + |b \ a|
    let trains = all_trains(8, 3);
    for a in &trains {
        for b in &trains {
            let shared = a.iter().filter(|t| b.contains(t)).count();
            let want = (a.len() - shared) as f64 + (b.len() - shared) as f64;
            assert_eq!(vp_distance(a, b, 3.0), want, "a={a:?} b={b:?}");
        }
    }
}

#[test]
fn triangle_inequality_holds_on_small_trains() {
    // windows kept tighter so the triple loop stays quick
    let trains = all_trains(6, 3);
    for &q in &[0.25, 1.0] {
        let n = trains.len();
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                d[i][j] = vp_distance(&trains[i], &trains[j], q);
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    assert!(
                        d[i][j] <= d[i][k] + d[k][j] + 1e-12,
                        "triangle violated: {:?} {:?} {:?} q={q}",
                        trains[i],
                        trains[j],
                        trains[k]
                    );
                }
            }
        }
    }
}

#[test]
fn symmetry_and_identity_hold_for_positive_q() {
    let trains = all_trains(8, 3);
    for a in &trains {
        for b in &trains {
            let d = vp_distance(a, b, 1.0);
            assert_eq!(d, vp_distance(b, a, 1.0));
            if a == b {
                assert_eq!(d, 0.0);
            } else {
                assert!(d > 0.0, "distinct trains at zero distance: {a:?} {b:?}");
            }
        }
    }
}
