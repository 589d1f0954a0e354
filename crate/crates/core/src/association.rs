//! Hebbian association between the present input and the compressed past.
//!
//! `M[j, β, α]` accumulates `rate · f_β · f̃[j, α]`: how strongly stimulus `β`
//! arriving now has been preceded by `α` at lag `taus[j]`. Read the other way
//! round, the same entry predicts `β` following `α` at that lag.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TaustarGrid;
use crate::laplace::PastTimeline;
use crate::vocab::StimulusVocabulary;

/// Relative denominator floor used when no explicit epsilon is supplied.
pub const RELATIVE_EPSILON: f64 = 1e-12;

/// Read access to a three-index association `[lag node][present β][past α]`.
pub trait AssociationView {
    fn grid(&self) -> &Arc<TaustarGrid>;
    fn vocab(&self) -> &Arc<StimulusVocabulary>;
    fn weight(&self, j: usize, beta: usize, alpha: usize) -> f64;
}

#[derive(Debug, Clone)]
pub struct AssociativeTensor {
    grid: Arc<TaustarGrid>,
    vocab: Arc<StimulusVocabulary>,
    values: Vec<f64>,
    episodes_seen: u64,
    presentations: Vec<u64>,
}

impl PartialEq for AssociativeTensor {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid
            && self.vocab == other.vocab
            && self.episodes_seen == other.episodes_seen
            && self.presentations == other.presentations
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl AssociativeTensor {
    pub fn new(grid: Arc<TaustarGrid>, vocab: Arc<StimulusVocabulary>) -> Self {
        let n = grid.n_units() * vocab.len() * vocab.len();
        let presentations = vec![0; vocab.len()];
        Self {
            grid,
            vocab,
            values: vec![0.0; n],
            episodes_seen: 0,
            presentations,
        }
    }

    pub(crate) fn from_parts(
        grid: Arc<TaustarGrid>,
        vocab: Arc<StimulusVocabulary>,
        values: Vec<f64>,
        episodes_seen: u64,
        presentations: Vec<u64>,
    ) -> Result<Self> {
        let expected = grid.n_units() * vocab.len() * vocab.len();
        if values.len() != expected || presentations.len() != vocab.len() {
            return Err(Error::ShapeMismatch(format!(
                "tensor has {} values and {} presentation counts, expected {expected} and {}",
                values.len(),
                presentations.len(),
                vocab.len()
            )));
        }
        Ok(Self {
            grid,
            vocab,
            values,
            episodes_seen,
            presentations,
        })
    }

    pub fn grid(&self) -> &Arc<TaustarGrid> {
        &self.grid
    }

    pub fn vocab(&self) -> &Arc<StimulusVocabulary> {
        &self.vocab
    }

    #[inline]
    fn offset(&self, j: usize, beta: usize, alpha: usize) -> usize {
        let n_stim = self.vocab.len();
        (j * n_stim + beta) * n_stim + alpha
    }

    pub fn get(&self, j: usize, beta: usize, alpha: usize) -> f64 {
        self.values[self.offset(j, beta, alpha)]
    }

    /// Dense values in `(τ*, β, α)` row-major order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn episodes_seen(&self) -> u64 {
        self.episodes_seen
    }

    pub fn record_episode(&mut self) {
        self.episodes_seen += 1;
    }

    /// Number of events of each stimulus observed during training.
    pub fn presentations(&self) -> &[u64] {
        &self.presentations
    }

    pub fn record_presentation(&mut self, i: usize) {
        self.presentations[i] += 1;
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `M[j, β, α] += rate · f_now[β] · f̃[j, α]`.
    pub fn hebbian_update(&mut self, f_now: &[f64], past: &PastTimeline, rate: f64) -> Result<()> {
        let n_stim = self.vocab.len();
        if f_now.len() != n_stim {
            return Err(Error::ShapeMismatch(format!(
                "present input has {} entries, vocabulary has {n_stim}",
                f_now.len()
            )));
        }
        if **past.grid() != *self.grid || **past.vocab() != *self.vocab {
            return Err(Error::ShapeMismatch(
                "past timeline was built on a different grid or vocabulary".into(),
            ));
        }
        for (beta, &fb) in f_now.iter().enumerate() {
            if fb == 0.0 {
                continue;
            }
            let gain = rate * fb;
            for j in 0..self.grid.n_units() {
                let past_row = &past.values()[j * n_stim..(j + 1) * n_stim];
                let start = self.offset(j, beta, 0);
                for (m, &f) in self.values[start..start + n_stim].iter_mut().zip(past_row) {
                    *m += gain * f;
                }
            }
        }
        Ok(())
    }

    /// Adds another tensor built on the same grid and vocabulary.
    pub fn merge(&mut self, other: &AssociativeTensor) -> Result<()> {
        if other.grid != self.grid || other.vocab != self.vocab {
            return Err(Error::ShapeMismatch(
                "cannot merge tensors over different grids or vocabularies".into(),
            ));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        for (a, b) in self.presentations.iter_mut().zip(&other.presentations) {
            *a += b;
        }
        self.episodes_seen += other.episodes_seen;
        Ok(())
    }

    /// `M[·, β, α]` as a function of lag.
    pub fn slice(&self, beta: usize, alpha: usize) -> Vec<f64> {
        (0..self.grid.n_units())
            .map(|j| self.get(j, beta, alpha))
            .collect()
    }

    fn row_sum(&self, axis: NormalizationAxis, j: usize, fixed: usize) -> f64 {
        let n_stim = self.vocab.len();
        (0..n_stim)
            .map(|free| {
                let v = match axis {
                    NormalizationAxis::PastStimulus => self.get(j, fixed, free),
                    NormalizationAxis::PresentStimulus => self.get(j, free, fixed),
                };
                v.max(0.0)
            })
            .sum()
    }

    /// `RELATIVE_EPSILON` times the largest (clamped) row sum along `axis`.
    pub fn default_epsilon(&self, axis: NormalizationAxis) -> f64 {
        let mut max_sum = 0.0f64;
        for j in 0..self.grid.n_units() {
            for fixed in 0..self.vocab.len() {
                max_sum = max_sum.max(self.row_sum(axis, j, fixed));
            }
        }
        if max_sum > 0.0 {
            RELATIVE_EPSILON * max_sum
        } else {
            f64::MIN_POSITIVE
        }
    }

    /// Divisive normalisation. Negative entries are clamped to zero first;
    /// rows whose sum does not exceed `epsilon` come out identically zero.
    pub fn normalize(&self, axis: NormalizationAxis, epsilon: f64) -> Result<NormalizedTensor> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let n_stim = self.vocab.len();
        let mut values = vec![0.0; self.values.len()];
        for j in 0..self.grid.n_units() {
            for fixed in 0..n_stim {
                let denom = self.row_sum(axis, j, fixed);
                if denom <= epsilon {
                    continue;
                }
                for free in 0..n_stim {
                    let (beta, alpha) = match axis {
                        NormalizationAxis::PastStimulus => (fixed, free),
                        NormalizationAxis::PresentStimulus => (free, fixed),
                    };
                    let o = self.offset(j, beta, alpha);
                    values[o] = self.values[o].max(0.0) / denom;
                }
            }
        }
        Ok(NormalizedTensor {
            grid: self.grid.clone(),
            vocab: self.vocab.clone(),
            values,
            axis,
            epsilon,
        })
    }

    /// The association as seen through `readout`. `epsilon` only applies to
    /// the normalized readout and defaults to `default_epsilon`.
    pub fn view(
        &self,
        readout: Readout,
        axis: NormalizationAxis,
        epsilon: Option<f64>,
    ) -> Result<Box<dyn AssociationView + Send + Sync>> {
        Ok(match readout {
            Readout::Raw => Box::new(self.clone()),
            Readout::Exposure => Box::new(self.exposure_averaged()),
            Readout::Normalized => {
                let eps = epsilon.unwrap_or_else(|| self.default_epsilon(axis));
                Box::new(self.normalize(axis, eps)?)
            }
        })
    }

    pub fn normalize_default(&self, axis: NormalizationAxis) -> NormalizedTensor {
        self.normalize(axis, self.default_epsilon(axis))
            .expect("default epsilon is positive")
    }

    /// Co-occurrence per presentation of the past stimulus:
    /// `M[j, β, α] / n_α`, zero for stimuli never presented.
    pub fn exposure_averaged(&self) -> ExposureAveraged {
        let n_stim = self.vocab.len();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(o, &v)| {
                let n = self.presentations[o % n_stim];
                if n == 0 {
                    0.0
                } else {
                    v / n as f64
                }
            })
            .collect();
        ExposureAveraged {
            grid: self.grid.clone(),
            vocab: self.vocab.clone(),
            values,
        }
    }
}

impl AssociationView for AssociativeTensor {
    fn grid(&self) -> &Arc<TaustarGrid> {
        &self.grid
    }

    fn vocab(&self) -> &Arc<StimulusVocabulary> {
        &self.vocab
    }

    fn weight(&self, j: usize, beta: usize, alpha: usize) -> f64 {
        self.get(j, beta, alpha)
    }
}

/// How a trained tensor is read when forming predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Readout {
    /// Accumulated co-occurrence, unscaled.
    Raw,
    /// Rows scaled to sum to one.
    Normalized,
    /// Co-occurrence per presentation of the cue.
    #[default]
    Exposure,
}

/// Which index the normalising sum runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationAxis {
    /// Sum over the past stimulus for fixed `(τ*, β)`.
    #[default]
    PastStimulus,
    /// Sum over the present stimulus for fixed `(τ*, α)`; gives rows that read
    /// as `P[β at lag | α now]`.
    PresentStimulus,
}

#[derive(Debug, Clone)]
pub struct NormalizedTensor {
    grid: Arc<TaustarGrid>,
    vocab: Arc<StimulusVocabulary>,
    values: Vec<f64>,
    axis: NormalizationAxis,
    epsilon: f64,
}

impl NormalizedTensor {
    pub fn axis(&self) -> NormalizationAxis {
        self.axis
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, j: usize, beta: usize, alpha: usize) -> f64 {
        let n_stim = self.vocab.len();
        self.values[(j * n_stim + beta) * n_stim + alpha]
    }

    /// Sum of row `(j, fixed)` along the normalisation axis.
    pub fn row_sum(&self, j: usize, fixed: usize) -> f64 {
        (0..self.vocab.len())
            .map(|free| match self.axis {
                NormalizationAxis::PastStimulus => self.get(j, fixed, free),
                NormalizationAxis::PresentStimulus => self.get(j, free, fixed),
            })
            .sum()
    }

    /// Row sums for every `(j, fixed)` pair, node-major.
    pub fn row_sums(&self) -> Vec<f64> {
        let n_stim = self.vocab.len();
        (0..self.grid.n_units() * n_stim)
            .map(|r| self.row_sum(r / n_stim, r % n_stim))
            .collect()
    }
}

impl AssociationView for NormalizedTensor {
    fn grid(&self) -> &Arc<TaustarGrid> {
        &self.grid
    }

    fn vocab(&self) -> &Arc<StimulusVocabulary> {
        &self.vocab
    }

    fn weight(&self, j: usize, beta: usize, alpha: usize) -> f64 {
        self.get(j, beta, alpha)
    }
}

/// Association scaled to one presentation of the cue.
#[derive(Debug, Clone)]
pub struct ExposureAveraged {
    grid: Arc<TaustarGrid>,
    vocab: Arc<StimulusVocabulary>,
    values: Vec<f64>,
}

impl AssociationView for ExposureAveraged {
    fn grid(&self) -> &Arc<TaustarGrid> {
        &self.grid
    }

    fn vocab(&self) -> &Arc<StimulusVocabulary> {
        &self.vocab
    }

    fn weight(&self, j: usize, beta: usize, alpha: usize) -> f64 {
        let n_stim = self.vocab.len();
        self.values[(j * n_stim + beta) * n_stim + alpha]
    }
}
