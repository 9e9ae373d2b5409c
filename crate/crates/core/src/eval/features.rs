//! Factor selectivity of latent units, measured on a probe sweep that
//! varies object shape and position independently. Selectivity is eta
//! squared: the fraction of a unit's activation variance explained by one
//! factor. A unit counts as a feature detector for a factor when that
//! factor explains most of its variance and the other explains little.

use crate::error::{CoreError, Result};

/// Minimum variance a factor must explain for a unit to count as selective.
pub const SELECTIVE_MIN: f64 = 0.5;
/// Maximum variance the competing factor may explain.
pub const CONFOUND_MAX: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct FeatureSelectivity {
    /// Per-unit variance fraction explained by shape.
    pub shape_eta: Vec<f64>,
    /// Per-unit variance fraction explained by position.
    pub position_eta: Vec<f64>,
    /// Units selective for shape and insensitive to position.
    pub shape_neurons: Vec<usize>,
    /// Units selective for position and insensitive to shape.
    pub position_neurons: Vec<usize>,
}

/// Variance fraction of `values` explained by `groups` (between-group sum
/// of squares over total). Constant values give 0.
pub fn eta_squared(values: &[f64], groups: &[usize]) -> f64 {
    assert_eq!(values.len(), groups.len());
    let n = values.len() as f64;
    let mean: f64 = values.iter().sum::<f64>() / n;
    let ss_total: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_total <= 0.0 {
        return 0.0;
    }
    let mut ids: Vec<usize> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut ss_between = 0.0;
    for g in ids {
        let members: Vec<f64> = values
            .iter()
            .zip(groups)
            .filter(|(_, &gg)| gg == g)
            .map(|(&v, _)| v)
            .collect();
        let gm: f64 = members.iter().sum::<f64>() / members.len() as f64;
        ss_between += members.len() as f64 * (gm - mean) * (gm - mean);
    }
    ss_between / ss_total
}

/// Classify latent units from probe activations: one row per probe sample,
/// one column per unit, with the sample's shape and position factor labels.
pub fn selectivity(
    activations: &[Vec<f64>],
    shape_labels: &[usize],
    position_labels: &[usize],
) -> Result<FeatureSelectivity> {
    if activations.is_empty() {
        return Err(CoreError::validation("no probe activations"));
    }
    if activations.len() != shape_labels.len() || activations.len() != position_labels.len() {
        return Err(CoreError::validation("probe labels do not match activations"));
    }
    let k = activations[0].len();
    if activations.iter().any(|r| r.len() != k) {
        return Err(CoreError::validation("ragged activation rows"));
    }
    let mut shape_eta = Vec::with_capacity(k);
    let mut position_eta = Vec::with_capacity(k);
    for unit in 0..k {
        let column: Vec<f64> = activations.iter().map(|r| r[unit]).collect();
        shape_eta.push(eta_squared(&column, shape_labels));
        position_eta.push(eta_squared(&column, position_labels));
    }
    let shape_neurons = (0..k)
        .filter(|&u| shape_eta[u] > SELECTIVE_MIN && position_eta[u] < CONFOUND_MAX)
        .collect();
    let position_neurons = (0..k)
        .filter(|&u| position_eta[u] > SELECTIVE_MIN && shape_eta[u] < CONFOUND_MAX)
        .collect();
    Ok(FeatureSelectivity { shape_eta, position_eta, shape_neurons, position_neurons })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eta_squared_extremes() {
        // perfectly explained by the grouping
        let v = [1.0, 1.0, 5.0, 5.0];
        let g = [0, 0, 1, 1];
        assert_abs_diff_eq!(eta_squared(&v, &g), 1.0, epsilon = 1e-12);
        // grouping orthogonal to the values
        let g2 = [0, 1, 0, 1];
        assert_abs_diff_eq!(eta_squared(&v, &g2), 0.0, epsilon = 1e-12);
        // constant values
        assert_eq!(eta_squared(&[2.0; 4], &g), 0.0);
    }

    #[test]
    fn eta_squared_hand_value() {
        // groups {1,2} and {4}: mean 7/3, between = 2*(1.5-7/3)^2 + (4-7/3)^2
        // = 2*(5/6)^2 + (5/3)^2 = 25/18 + 25/9 = 25/6; total = (1-7/3)^2 +
        // (2-7/3)^2 + (4-7/3)^2 = 16/9 + 1/9 + 25/9 = 14/3
        let v = [1.0, 2.0, 4.0];
        let g = [0, 0, 1];
        assert_abs_diff_eq!(eta_squared(&v, &g), (25.0 / 6.0) / (14.0 / 3.0), epsilon = 1e-12);
    }

    #[test]
    fn classifies_pure_and_mixed_units() {
        // 3 shapes x 3 positions, fully crossed
        let mut shape_labels = Vec::new();
        let mut position_labels = Vec::new();
        let mut activations = Vec::new();
        for s in 0..3usize {
            for p in 0..3usize {
                shape_labels.push(s);
                position_labels.push(p);
                activations.push(vec![
                    s as f64,              // unit 0: pure shape
                    (p as f64) * 2.0,      // unit 1: pure position
                    s as f64 + p as f64,   // unit 2: mixed
                    0.0,                   // unit 3: dead
                ]);
            }
        }
        let sel = selectivity(&activations, &shape_labels, &position_labels).unwrap();
        assert_eq!(sel.shape_neurons, vec![0]);
        assert_eq!(sel.position_neurons, vec![1]);
        assert_abs_diff_eq!(sel.shape_eta[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sel.position_eta[0], 0.0, epsilon = 1e-12);
        // the mixed unit splits its variance evenly
        assert_abs_diff_eq!(sel.shape_eta[2], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sel.position_eta[2], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn shape_mismatch_errors() {
        assert!(selectivity(&[vec![0.0]], &[0, 1], &[0]).is_err());
        assert!(selectivity(&[], &[], &[]).is_err());
    }
}
