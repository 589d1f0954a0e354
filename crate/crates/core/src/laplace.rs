//! Leaky-integrator memory and its approximate inverse.
//!
//! Each stimulus drives a bank of leaky integrators `dF/dt = -s F + f(t)`,
//! one per rate constant of the grid. The bank holds the running Laplace
//! transform of the stimulus history. The Post approximation
//! `f̃ = C_k s^(k+1) d^k F / ds^k` turns it back into a compressed estimate of
//! what happened how long ago.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::TaustarGrid;
use crate::vocab::StimulusVocabulary;

/// `(-1)^k / k!`.
pub fn post_constant(k: usize) -> f64 {
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    if k.is_multiple_of(2) {
        fact.recip()
    } else {
        -fact.recip()
    }
}

/// Closed-form response of the node with lag `tau_star` at time `t` after a
/// unit delta input:
/// `(k^(k+1)/k!) (1/τ*) (t/τ*)^k e^(-k t/τ*)`.
pub fn impulse_response_analytic(grid: &TaustarGrid, tau_star: f64, t: f64) -> Result<f64> {
    if !(tau_star > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau_star must be positive, got {tau_star}"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "elapsed time must be non-negative, got {t}"
        )));
    }
    let k = grid.k() as i32;
    let kf = grid.k() as f64;
    let norm = kf.powi(k + 1) * post_constant(grid.k()).abs();
    let x = t / tau_star;
    Ok(norm / tau_star * x.powi(k) * (-kf * x).exp())
}

/// Applies the discrete Post inverse to one stimulus column.
///
/// `column` holds `F` over every rate node of the grid (padding included).
/// The k-th derivative is taken as `k` passes of centred two-point divided
/// differences; each pass drops one node at each end, which leaves exactly the
/// exposed nodes after `k` passes. `out` receives one value per exposed node.
pub fn post_inverse(grid: &TaustarGrid, column: &[f64], out: &mut [f64]) {
    let k = grid.k();
    let s = grid.s_values();
    debug_assert_eq!(column.len(), s.len());
    debug_assert_eq!(out.len(), grid.n_units());

    let mut buf = column.to_vec();
    let mut len = buf.len();
    for pass in 1..=k {
        // After `pass` passes, entry `m` sits on rate node `m + pass`.
        for m in 0..len - 2 {
            let lo = m + pass - 1;
            let hi = m + pass + 1;
            buf[m] = (buf[m + 2] - buf[m]) / (s[hi] - s[lo]);
        }
        len -= 2;
    }

    let ck = post_constant(k);
    for (j, o) in out.iter_mut().enumerate() {
        *o = ck * grid.s(j).powi(k as i32 + 1) * buf[j];
    }
}

/// Leaky-integrator activations `F[s, i]`, laid out rate-major.
#[derive(Debug, Clone)]
pub struct LaplaceState {
    grid: Arc<TaustarGrid>,
    vocab: Arc<StimulusVocabulary>,
    values: Vec<f64>,
    now: f64,
}

impl LaplaceState {
    pub fn new(grid: Arc<TaustarGrid>, vocab: Arc<StimulusVocabulary>) -> Self {
        let values = vec![0.0; grid.n_rates() * vocab.len()];
        Self {
            grid,
            vocab,
            values,
            now: 0.0,
        }
    }

    pub fn grid(&self) -> &Arc<TaustarGrid> {
        &self.grid
    }

    pub fn vocab(&self) -> &Arc<StimulusVocabulary> {
        &self.vocab
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Activation at rate node `rate` (padding included) for stimulus `i`.
    pub fn get(&self, rate: usize, i: usize) -> f64 {
        self.values[rate * self.vocab.len() + i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn reset(&mut self) {
        self.values.fill(0.0);
        self.now = 0.0;
    }

    /// Exact free decay over `dt`: `F ← F e^(-s dt)`.
    pub fn decay(&mut self, dt: f64) -> Result<()> {
        if !(dt >= 0.0) {
            return Err(Error::NegativeTimeStep(dt));
        }
        if dt > 0.0 {
            let n_stim = self.vocab.len();
            for (row, &s) in self
                .values
                .chunks_exact_mut(n_stim)
                .zip(self.grid.s_values())
            {
                let factor = (-s * dt).exp();
                row.iter_mut().for_each(|v| *v *= factor);
            }
        }
        self.now += dt;
        Ok(())
    }

    /// Decays up to absolute time `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.now {
            return Err(Error::NegativeTimeStep(t - self.now));
        }
        let dt = t - self.now;
        self.decay(dt)?;
        self.now = t;
        Ok(())
    }

    /// Delta input of area `magnitude`: every rate node of the stimulus jumps
    /// by `magnitude`.
    pub fn inject(&mut self, stimulus: &str, magnitude: f64) -> Result<()> {
        let i = self.vocab.index_of(stimulus)?;
        self.inject_index(i, magnitude);
        Ok(())
    }

    pub fn inject_index(&mut self, i: usize, magnitude: f64) {
        let n_stim = self.vocab.len();
        for row in self.values.chunks_exact_mut(n_stim) {
            row[i] += magnitude;
        }
    }

    /// Holds `input` constant for `dt` and integrates exactly:
    /// `F ← F e^(-s dt) + input (1 - e^(-s dt)) / s`.
    pub fn step_constant(&mut self, input: &[f64], dt: f64) -> Result<()> {
        if input.len() != self.vocab.len() {
            return Err(Error::ShapeMismatch(format!(
                "input has {} entries, vocabulary has {}",
                input.len(),
                self.vocab.len()
            )));
        }
        if !(dt >= 0.0) {
            return Err(Error::NegativeTimeStep(dt));
        }
        let n_stim = self.vocab.len();
        for (row, &s) in self
            .values
            .chunks_exact_mut(n_stim)
            .zip(self.grid.s_values())
        {
            let decay = (-s * dt).exp();
            let gain = -(-s * dt).exp_m1() / s;
            for (v, &x) in row.iter_mut().zip(input) {
                *v = *v * decay + x * gain;
            }
        }
        self.now += dt;
        Ok(())
    }

    pub fn invert(&self) -> PastTimeline {
        let n = self.grid.n_units();
        let n_stim = self.vocab.len();
        let n_rates = self.grid.n_rates();
        let mut values = vec![0.0; n * n_stim];
        let mut column = vec![0.0; n_rates];
        let mut out = vec![0.0; n];
        for i in 0..n_stim {
            for (r, c) in column.iter_mut().enumerate() {
                *c = self.values[r * n_stim + i];
            }
            post_inverse(&self.grid, &column, &mut out);
            for (j, &v) in out.iter().enumerate() {
                values[j * n_stim + i] = v;
            }
        }
        PastTimeline {
            grid: self.grid.clone(),
            vocab: self.vocab.clone(),
            values,
        }
    }
}

/// Compressed estimate of the past: `f̃[j, i]` approximates the input of
/// stimulus `i` at time `now - taus[j]`.
#[derive(Debug, Clone)]
pub struct PastTimeline {
    grid: Arc<TaustarGrid>,
    vocab: Arc<StimulusVocabulary>,
    values: Vec<f64>,
}

impl PastTimeline {
    pub fn grid(&self) -> &Arc<TaustarGrid> {
        &self.grid
    }

    pub fn vocab(&self) -> &Arc<StimulusVocabulary> {
        &self.vocab
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.vocab.len() + i]
    }

    /// Node-major values, `values[j * n_stimuli + i]`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.values
            .chunks_exact(self.vocab.len())
            .map(|row| row[i])
            .collect()
    }
}
