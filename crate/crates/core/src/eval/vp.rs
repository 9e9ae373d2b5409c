//! Victor-Purpura spike-train distance: edit distance with unit
//! insert/delete cost and a shift cost of q per step.

/// Minimum cost transforming train `a` into train `b`: insert 1, delete 1,
/// shift a spike by Δt at cost q·|Δt|. Standard O(|a|·|b|) dynamic
/// program over sorted spike times.
pub fn vp_distance(a: &[usize], b: &[usize], q: f64) -> f64 {
    debug_assert!(q >= 0.0, "negative q");
    debug_assert!(a.windows(2).all(|w| w[0] < w[1]), "unsorted train");
    debug_assert!(b.windows(2).all(|w| w[0] < w[1]), "unsorted train");
    let (na, nb) = (a.len(), b.len());
    if na == 0 {
        return nb as f64;
    }
    if nb == 0 {
        return na as f64;
    }
    let mut prev: Vec<f64> = (0..=nb).map(|j| j as f64).collect();
    let mut cur = vec![0.0; nb + 1];
    for i in 1..=na {
        cur[0] = i as f64;
        for j in 1..=nb {
            let shift = q * (a[i - 1] as f64 - b[j - 1] as f64).abs();
            cur[j] = (prev[j] + 1.0)
                .min(cur[j - 1] + 1.0)
                .min(prev[j - 1] + shift);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[nb]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_trains_have_zero_distance() {
        assert_eq!(vp_distance(&[1, 5, 9], &[1, 5, 9], 1.0), 0.0);
        assert_eq!(vp_distance(&[], &[], 1.0), 0.0);
    }

    #[test]
    fn empty_versus_two_spikes_costs_two() {
        for q in [0.0, 0.3, 1.0, 10.0] {
            assert_eq!(vp_distance(&[], &[5, 9], q), 2.0);
            assert_eq!(vp_distance(&[5, 9], &[], q), 2.0);
        }
    }

    #[test]
    fn shift_beats_delete_insert_when_cheap() {
        // {10} vs {12}: shift costs 2q, replace costs 2
        assert_eq!(vp_distance(&[10], &[12], 0.5), 1.0);
        assert_eq!(vp_distance(&[10], &[12], 2.0), 2.0);
    }

    #[test]
    fn q_zero_counts_rate_difference_only() {
        assert_eq!(vp_distance(&[0, 1, 2, 3], &[7], 0.0), 3.0);
        assert_eq!(vp_distance(&[4], &[0, 7], 0.0), 1.0);
    }

    #[test]
    fn distance_is_symmetric() {
        let a = [0, 3, 4];
        let b = [1, 6];
        for q in [0.0, 0.5, 1.0, 3.0] {
            assert_eq!(vp_distance(&a, &b, q), vp_distance(&b, &a, q));
        }
    }
}
