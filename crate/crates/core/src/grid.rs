//! Logarithmically spaced timeline nodes and their rate constants.
//!
//! Node `j` represents the lag `taus[j] = tau_min * (1 + c)^j` and is paired
//! with a leaky integrator of rate `s_j = k / taus[j]`. The rate axis carries
//! `k` extra nodes on each side, continuing the same geometric progression, so
//! the k-th derivative in `s` has a full stencil at every exposed node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Construction parameters of a [`TaustarGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub tau_min: f64,
    pub tau_max: f64,
    pub n_units: usize,
    pub k: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            tau_min: 0.5,
            tau_max: 100.0,
            n_units: 64,
            k: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaustarGrid {
    params: GridParams,
    c: f64,
    log_ratio: f64,
    taus: Vec<f64>,
    /// Rate constants for nodes `-k .. n_units + k`, ordered by increasing lag.
    s_values: Vec<f64>,
}

impl PartialEq for TaustarGrid {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
    }
}

impl TaustarGrid {
    pub fn new(params: GridParams) -> Result<Self> {
        let GridParams {
            tau_min,
            tau_max,
            n_units,
            k,
        } = params;
        if !(tau_min.is_finite() && tau_min > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "tau_min must be positive and finite, got {tau_min}"
            )));
        }
        if !(tau_max.is_finite() && tau_max > tau_min) {
            return Err(Error::InvalidGrid(format!(
                "tau_max must exceed tau_min ({tau_max} <= {tau_min})"
            )));
        }
        if k < 1 {
            return Err(Error::InvalidGrid("k must be at least 1".into()));
        }
        if n_units < 2 * k + 1 {
            return Err(Error::InvalidGrid(format!(
                "n_units = {n_units} is too small for a derivative stencil of order {k} (need >= {})",
                2 * k + 1
            )));
        }

        let log_ratio = (tau_max / tau_min).ln() / (n_units - 1) as f64;
        let c = log_ratio.exp_m1();
        let mut taus: Vec<f64> = (0..n_units)
            .map(|j| tau_min * (j as f64 * log_ratio).exp())
            .collect();
        taus[0] = tau_min;
        taus[n_units - 1] = tau_max;

        let kf = k as f64;
        let s_values = (0..n_units + 2 * k)
            .map(|m| {
                let j = m as isize - k as isize;
                if (0..n_units as isize).contains(&j) {
                    kf / taus[j as usize]
                } else {
                    kf / (tau_min * (j as f64 * log_ratio).exp())
                }
            })
            .collect();

        Ok(Self {
            params,
            c,
            log_ratio,
            taus,
            s_values,
        })
    }

    pub fn build(tau_min: f64, tau_max: f64, n_units: usize, k: usize) -> Result<Self> {
        Self::new(GridParams {
            tau_min,
            tau_max,
            n_units,
            k,
        })
    }

    pub fn params(&self) -> GridParams {
        self.params
    }

    pub fn tau_min(&self) -> f64 {
        self.params.tau_min
    }

    pub fn tau_max(&self) -> f64 {
        self.params.tau_max
    }

    pub fn n_units(&self) -> usize {
        self.params.n_units
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    /// Spacing constant: adjacent lags differ by the factor `1 + c`.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// `ln(1 + c)`, the node spacing on a log axis.
    pub fn log_spacing(&self) -> f64 {
        self.log_ratio
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn tau(&self, j: usize) -> f64 {
        self.taus[j]
    }

    /// All rate constants including padding, ordered by increasing lag
    /// (so decreasing `s`). Exposed node `j` sits at offset `j + k`.
    pub fn s_values(&self) -> &[f64] {
        &self.s_values
    }

    pub fn s(&self, j: usize) -> f64 {
        self.s_values[j + self.params.k]
    }

    pub fn n_rates(&self) -> usize {
        self.s_values.len()
    }

    /// Number density `g = 1/tau*` of nodes under logarithmic spacing.
    pub fn number_density(&self, j: usize) -> Result<f64> {
        self.taus
            .get(j)
            .map(|t| t.recip())
            .ok_or(Error::NodeOutOfRange {
                index: j,
                len: self.taus.len(),
            })
    }

    /// Width in lag covered by node `j`, i.e. `1/g` times the log spacing.
    /// Summing `h(tau_j) * node_measure(j)` approximates `∫ h dτ*`.
    pub fn node_measure(&self, j: usize) -> f64 {
        self.taus[j] * self.log_ratio
    }

    /// Lags in `[tau_min (1+c)^k, tau_max (1+c)^-k]` are far enough from
    /// both ends that the truncated grid represents them faithfully.
    pub fn interior_range(&self) -> (f64, f64) {
        let shift = (self.params.k as f64 * self.log_ratio).exp();
        (self.params.tau_min * shift, self.params.tau_max / shift)
    }

    pub fn is_interior(&self, lag: f64) -> bool {
        let (lo, hi) = self.interior_range();
        lag >= lo && lag <= hi
    }

    /// Index of the node whose lag is closest to `lag` on a log axis.
    pub fn nearest_node(&self, lag: f64) -> usize {
        let x = (lag / self.params.tau_min).ln() / self.log_ratio;
        (x.round().max(0.0) as usize).min(self.params.n_units - 1)
    }

    /// Fractional node position of `lag` (node `j` sits at position `j`).
    pub fn node_position(&self, lag: f64) -> f64 {
        (lag / self.params.tau_min).ln() / self.log_ratio
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spacing_constant_matches_closed_form() {
        let grid = TaustarGrid::build(0.5, 100.0, 64, 4).unwrap();
        let expected = (100.0f64 / 0.5).powf(1.0 / 63.0) - 1.0;
        assert_relative_eq!(grid.c(), expected, max_relative = 1e-12);
        assert_relative_eq!(grid.c(), 0.0877, epsilon = 1e-4);
        assert_eq!(grid.taus()[0], 0.5);
        assert_eq!(grid.taus()[63], 100.0);
        assert_eq!(grid.s_values().len(), 64 + 8);
    }

    #[test]
    fn geometric_spacing_and_rate_duality() {
        let grid = TaustarGrid::build(0.5, 100.0, 64, 4).unwrap();
        let ratio = 1.0 + grid.c();
        for w in grid.taus().windows(2) {
            assert!((w[1] / w[0] / ratio - 1.0).abs() < 1e-12);
        }
        for j in 0..grid.n_units() {
            assert!((grid.s(j) * grid.tau(j) / 4.0 - 1.0).abs() < 1e-14);
        }
        // Padding continues the progression on both sides.
        let s = grid.s_values();
        for w in s.windows(2) {
            assert!((w[0] / w[1] / ratio - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rebuild_from_endpoints_is_bit_identical() {
        let a = TaustarGrid::build(0.3, 47.0, 40, 3).unwrap();
        let b = TaustarGrid::build(a.taus()[0], a.taus()[39], 40, 3).unwrap();
        assert_eq!(a.taus(), b.taus());
        assert_eq!(a.s_values(), b.s_values());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TaustarGrid::build(1.0, 1.0, 64, 4).is_err());
        assert!(TaustarGrid::build(0.0, 10.0, 64, 4).is_err());
        assert!(TaustarGrid::build(-1.0, 10.0, 64, 4).is_err());
        assert!(TaustarGrid::build(0.5, 10.0, 8, 4).is_err());
        assert!(TaustarGrid::build(0.5, 10.0, 64, 0).is_err());
        assert!(TaustarGrid::build(0.5, 10.0, 9, 4).is_ok());
    }

    #[test]
    fn number_density_is_reciprocal_lag() {
        let grid = TaustarGrid::build(2.0, 10.0, 9, 4).unwrap();
        assert_eq!(grid.number_density(0).unwrap(), 0.5);
        assert_eq!(grid.number_density(8).unwrap(), 0.1);
        assert!(matches!(
            grid.number_density(9),
            Err(Error::NodeOutOfRange { index: 9, len: 9 })
        ));
    }

    #[test]
    fn density_integrates_to_node_count() {
        // Trapezoid rule for ∫ g dτ* between neighbouring nodes, in units of
        // the log spacing, counts the intervals between nodes.
        let grid = TaustarGrid::build(0.5, 100.0, 64, 4).unwrap();
        let taus = grid.taus();
        let integral: f64 = (0..taus.len() - 1)
            .map(|j| {
                let g0 = grid.number_density(j).unwrap();
                let g1 = grid.number_density(j + 1).unwrap();
                0.5 * (g0 + g1) * (taus[j + 1] - taus[j])
            })
            .sum();
        let units = integral / grid.log_spacing();
        assert!((units - 63.0).abs() / 63.0 < 2e-3, "{units}");
        // The per-node measure realises the density exactly.
        let exact: f64 = (0..64)
            .map(|j| grid.number_density(j).unwrap() * grid.node_measure(j))
            .sum::<f64>()
            / grid.log_spacing();
        assert_relative_eq!(exact, 64.0, max_relative = 1e-12);
    }

    #[test]
    fn nearest_node_rounds_on_log_axis() {
        let grid = TaustarGrid::build(0.5, 100.0, 64, 4).unwrap();
        for j in 0..64 {
            assert_eq!(grid.nearest_node(grid.tau(j)), j);
        }
        assert_eq!(grid.nearest_node(1e-3), 0);
        assert_eq!(grid.nearest_node(1e6), 63);
    }
}
