//! Spike coding space: stimulus-gated Bernoulli neurons with refractory
//! counters, plus the stochastic coincidence detector that reads the spike
//! window out into a binary snapshot.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::rng::ChaCha8Rng;

/// Coincidence-detector settings: window length, firing threshold and the
/// per-lag decay base of the stochastic weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdConfig {
    pub tau_w: usize,
    pub v_th: u32,
    pub p: f64,
}

impl Default for CdConfig {
    fn default() -> Self {
        CdConfig { tau_w: 3, v_th: 1, p: 0.5 }
    }
}

impl CdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_w < 1 {
            return Err(CoreError::validation("tau_w must be at least 1"));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(CoreError::validation("p must lie in (0, 1]"));
        }
        if self.v_th < 1 {
            return Err(CoreError::validation("v_th must be at least 1"));
        }
        Ok(())
    }
}

/// Mutable per-run neuron state: refractory counters, the recent spike
/// window and the run's RNG stream.
pub struct ScsState {
    rfr: Vec<u32>,
    /// history[0] is the most recent step; capped at tau_w + 1 entries.
    history: VecDeque<Vec<u8>>,
    window: usize,
    rng: ChaCha8Rng,
}

impl ScsState {
    pub fn new(n: usize, tau_w: usize, rng: ChaCha8Rng) -> Self {
        ScsState {
            rfr: vec![0; n],
            history: VecDeque::with_capacity(tau_w + 1),
            window: tau_w + 1,
            rng,
        }
    }

    pub fn n(&self) -> usize {
        self.rfr.len()
    }

    /// One sampling step: active neurons (stimulated, counter at zero) fire
    /// with probability x_i·γ_i. A spiker's counter is set to `tau_rfr` and
    /// skips this step's decrement, so it stays silent for exactly
    /// `tau_rfr` subsequent steps.
    pub fn step(&mut self, x: &[u8], gamma: &[f64], tau_rfr: u32) -> Vec<u8> {
        assert_eq!(x.len(), self.n(), "stimulus length mismatch");
        assert_eq!(gamma.len(), self.n(), "gamma length mismatch");
        let mut spikes = vec![0u8; self.n()];
        for i in 0..self.n() {
            let g = gamma[i];
            assert!((0.0..=1.0).contains(&g), "gamma out of [0,1]: {g}");
            let mut spiked = false;
            // RNG consumption order is pinned: one draw per active
            // stimulated neuron, in index order.
            if x[i] == 1 && self.rfr[i] == 0 && g > 0.0 && self.rng.random::<f64>() < g {
                spikes[i] = 1;
                spiked = true;
            }
            if spiked {
                self.rfr[i] = tau_rfr;
            } else if self.rfr[i] > 0 {
                self.rfr[i] -= 1;
            }
        }
        if self.history.len() == self.window {
            self.history.pop_back();
        }
        self.history.push_front(spikes.clone());
        spikes
    }

    /// Coincidence-detector readout over the stored window.
    pub fn detect(&mut self, cfg: &CdConfig) -> Vec<u8> {
        let lags: Vec<&[u8]> = self.history.iter().map(|v| v.as_slice()).collect();
        coincidence_detect(&lags, cfg, &mut self.rng)
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Threshold a stochastically decayed spike count: neuron i reads 1 iff
/// Σ_τ α_i^τ · s_i(t−τ) ≥ v_th with fresh α_i^τ ~ Ber(p^τ) per call.
/// `history[τ]` is the spike vector at lag τ; missing lags count as silent.
///
/// Draws are taken only where a spike could contribute (lag ≥ 1) and stop
/// once the threshold is reached, which leaves the output distribution
/// unchanged; the consumption order (neuron-major, lag-minor) is pinned.
pub fn coincidence_detect(history: &[&[u8]], cfg: &CdConfig, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n = match history.first() {
        Some(h) => h.len(),
        None => return Vec::new(),
    };
    let lags = history.len().min(cfg.tau_w + 1);
    let mut pow = Vec::with_capacity(lags);
    let mut acc_p = 1.0;
    for _ in 0..lags {
        pow.push(acc_p);
        acc_p *= cfg.p;
    }
    let mut out = vec![0u8; n];
    for i in 0..n {
        let mut acc = 0u32;
        for tau in 0..lags {
            if history[tau][i] == 0 {
                continue;
            }
            let hit = tau == 0 || rng.random::<f64>() < pow[tau];
            if hit {
                acc += 1;
                if acc >= cfg.v_th {
                    out[i] = 1;
                    break;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    #[test]
    fn unstimulated_neurons_never_spike() {
        let mut state = ScsState::new(4, 3, stream(1, "scs", 0));
        let x = [0u8, 1, 0, 1];
        let gamma = [1.0; 4];
        for _ in 0..200 {
            let s = state.step(&x, &gamma, 0);
            assert_eq!(s[0], 0);
            assert_eq!(s[2], 0);
        }
    }

    #[test]
    fn saturated_neuron_fires_every_step_without_refractory() {
        let mut state = ScsState::new(1, 3, stream(2, "scs", 0));
        for _ in 0..100 {
            assert_eq!(state.step(&[1], &[1.0], 0), vec![1]);
        }
    }

    #[test]
    fn refractory_five_silences_exactly_five_steps() {
        let mut state = ScsState::new(1, 3, stream(3, "scs", 0));
        let mut trace = Vec::new();
        for _ in 0..30 {
            trace.push(state.step(&[1], &[1.0], 5)[0]);
        }
        // deterministic at gamma = 1: spike, five silent steps, repeat
        for (t, &s) in trace.iter().enumerate() {
            assert_eq!(s, if t % 6 == 0 { 1 } else { 0 }, "step {t}");
        }
    }

    #[test]
    fn free_firing_rate_matches_gamma() {
        let mut state = ScsState::new(1, 3, stream(4, "scs", 0));
        let gamma = 0.3;
        let steps = 20_000;
        let mut count = 0;
        for _ in 0..steps {
            count += state.step(&[1], &[gamma], 0)[0] as u32;
        }
        let rate = count as f64 / steps as f64;
        let sigma = (gamma * (1.0 - gamma) / steps as f64).sqrt();
        assert!((rate - gamma).abs() < 3.0 * sigma, "rate {rate}");
    }

    #[test]
    fn cd_empty_window_reads_zero() {
        let cfg = CdConfig::default();
        let mut rng = stream(5, "cd", 0);
        let h0 = [0u8, 0, 0];
        let out = coincidence_detect(&[&h0], &cfg, &mut rng);
        assert_eq!(out, vec![0, 0, 0]);
    }

    #[test]
    fn cd_fresh_spike_always_reads_one() {
        let cfg = CdConfig::default();
        let mut rng = stream(6, "cd", 0);
        for _ in 0..100 {
            let h0 = [1u8];
            let h1 = [0u8];
            let out = coincidence_detect(&[&h0, &h1], &cfg, &mut rng);
            assert_eq!(out, vec![1]);
        }
    }

    #[test]
    fn cd_lone_spike_response_matches_lag_power() {
        let cfg = CdConfig::default();
        let trials = 100_000;
        for lag in 1..=3usize {
            let mut rng = stream(7, "cd-mc", lag as u64);
            let mut hits = 0;
            for _ in 0..trials {
                let mut window = vec![vec![0u8]; 4];
                window[lag] = vec![1u8];
                let refs: Vec<&[u8]> = window.iter().map(|v| v.as_slice()).collect();
                hits += coincidence_detect(&refs, &cfg, &mut rng)[0] as u32;
            }
            let freq = hits as f64 / trials as f64;
            let expect = cfg.p.powi(lag as i32);
            assert!((freq - expect).abs() < 0.01, "lag {lag}: {freq} vs {expect}");
        }
    }

    #[test]
    fn cd_response_is_monotone_in_spikes() {
        // distributional check: a superset window fires at least as often
        let cfg = CdConfig::default();
        let trials = 40_000;
        let freq = |window: [u8; 4], salt: u64| {
            let mut rng = stream(8, "cd-mono", salt);
            let mut hits = 0;
            for _ in 0..trials {
                let rows: Vec<Vec<u8>> = window.iter().map(|&b| vec![b]).collect();
                let refs: Vec<&[u8]> = rows.iter().map(|v| v.as_slice()).collect();
                hits += coincidence_detect(&refs, &cfg, &mut rng)[0] as u32;
            }
            hits as f64 / trials as f64
        };
        let lone = freq([0, 0, 1, 0], 0);
        let pair = freq([0, 1, 1, 0], 1);
        assert!(pair > lone - 0.01, "pair {pair} vs lone {lone}");
    }

    proptest! {
        #[test]
        fn no_double_spike_inside_refractory_window(
            seed in 0u64..500,
            tau_rfr in 1u32..8,
            gamma in 0.05f64..1.0,
        ) {
            let n = 6;
            let mut state = ScsState::new(n, 3, stream(seed, "prop", 0));
            let x = vec![1u8; n];
            let g = vec![gamma; n];
            let mut traces: Vec<Vec<u8>> = vec![Vec::new(); n];
            for _ in 0..150 {
                let s = state.step(&x, &g, tau_rfr);
                for i in 0..n {
                    traces[i].push(s[i]);
                }
            }
            for tr in &traces {
                let times: Vec<usize> = tr.iter().enumerate()
                    .filter(|(_, &s)| s == 1).map(|(t, _)| t).collect();
                for w in times.windows(2) {
                    prop_assert!(w[1] - w[0] > tau_rfr as usize,
                        "gap {} <= tau_rfr {}", w[1] - w[0], tau_rfr);
                }
            }
        }
    }
}
