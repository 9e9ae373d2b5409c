//! Population-rate oscillation detection via the normalized autocorrelation
//! of per-step spike counts. The period is the lag of the tallest local
//! autocorrelation peak; its height is the oscillation strength.

use crate::raster::SpikeRaster;

#[derive(Debug, Clone, PartialEq)]
pub struct Oscillation {
    /// Lag of the tallest positive local autocorrelation maximum, if any.
    pub period: Option<usize>,
    /// Autocorrelation at that lag (0 when no peak exists).
    pub strength: f64,
    /// Normalized autocorrelation for lags `0..=max_lag`.
    pub autocorr: Vec<f64>,
}

/// Detect a rhythm in a count signal. The autocorrelation is mean-centered
/// and normalized by the total centered energy, so lag 0 reads 1 and a
/// constant signal yields no peak.
pub fn detect_oscillation(counts: &[u32], max_lag: usize) -> Oscillation {
    let t = counts.len();
    let max_lag = max_lag.min(t.saturating_sub(1));
    let x: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let mean = x.iter().sum::<f64>() / t.max(1) as f64;
    let energy: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    if energy <= 0.0 || t < 3 {
        return Oscillation { period: None, strength: 0.0, autocorr: vec![0.0; max_lag + 1] };
    }
    let mut autocorr = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let num: f64 = (0..t - lag).map(|i| (x[i] - mean) * (x[i + lag] - mean)).sum();
        autocorr.push(num / energy);
    }
    // tallest positive local maximum, not the first: staggered subgroup
    // volleys put side peaks at the volley spacing, but only the full cycle
    // aligns every subgroup with itself
    let mut period: Option<usize> = None;
    for k in 1..max_lag {
        if autocorr[k] > 0.0
            && autocorr[k] > autocorr[k - 1]
            && autocorr[k] >= autocorr[k + 1]
            && period.is_none_or(|p| autocorr[k] > autocorr[p])
        {
            period = Some(k);
        }
    }
    let strength = period.map_or(0.0, |k| autocorr[k]);
    Oscillation { period, strength, autocorr }
}

/// Oscillation of the population spike count over `[start, end)`.
pub fn raster_oscillation(
    raster: &SpikeRaster,
    start: usize,
    end: usize,
    max_lag: usize,
) -> Oscillation {
    let counts = raster.population_counts();
    let end = end.min(counts.len());
    let start = start.min(end);
    detect_oscillation(&counts[start..end], max_lag)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_comb_has_its_period() {
        // bursts every 8 steps
        let counts: Vec<u32> = (0..160).map(|t| if t % 8 == 0 { 50 } else { 2 }).collect();
        let osc = detect_oscillation(&counts, 40);
        assert_eq!(osc.period, Some(8));
        assert!(osc.strength > 0.8, "strength: {}", osc.strength);
    }

    #[test]
    fn jittered_comb_still_detected() {
        // period 10 with deterministic jitter in burst height
        let counts: Vec<u32> =
            (0..200).map(|t| if t % 10 == 0 { 30 + (t % 7) as u32 } else { 3 + (t % 3) as u32 }).collect();
        let osc = detect_oscillation(&counts, 50);
        assert_eq!(osc.period, Some(10));
        assert!(osc.strength > 0.3, "strength: {}", osc.strength);
    }

    #[test]
    fn flat_and_constant_signals_have_no_period() {
        let osc = detect_oscillation(&[7; 100], 30);
        assert_eq!(osc.period, None);
        assert_eq!(osc.strength, 0.0);
        let osc = detect_oscillation(&[], 10);
        assert_eq!(osc.period, None);
    }

    #[test]
    fn monotone_signal_has_no_peak() {
        let counts: Vec<u32> = (0..50).collect();
        let osc = detect_oscillation(&counts, 20);
        assert_eq!(osc.period, None);
    }

    #[test]
    fn raster_window_is_respected() {
        let mut raster = SpikeRaster::new(100, 4);
        // silent first half, period 5 in the second half
        for t in 50..100 {
            if t % 5 == 0 {
                raster.set_row(t, &[1, 1, 1, 1]);
            }
        }
        let osc = raster_oscillation(&raster, 50, 100, 20);
        assert_eq!(osc.period, Some(5));
        let silent = raster_oscillation(&raster, 0, 50, 20);
        assert_eq!(silent.period, None);
    }
}
