//! Future timelines and the values computed over them.
//!
//! Contracting an association with the present input gives
//! `p[j, β] = Σ_i W[j, β, i] f_i`, a compressed estimate of what follows at
//! each future lag. Because nodes are laid out with number density
//! `g = 1/τ*`, summing over nodes realises `∫ p g dτ*`, which discounts
//! outcomes as a power law with exponent -1.

use std::sync::Arc;

use crate::association::AssociationView;
use crate::error::{Error, Result};
use crate::grid::TaustarGrid;
use crate::vocab::StimulusVocabulary;

#[derive(Debug, Clone)]
pub struct FuturePrediction {
    grid: Arc<TaustarGrid>,
    vocab: Arc<StimulusVocabulary>,
    values: Vec<f64>,
}

impl FuturePrediction {
    pub fn zeros(grid: Arc<TaustarGrid>, vocab: Arc<StimulusVocabulary>) -> Self {
        let values = vec![0.0; grid.n_units() * vocab.len()];
        Self {
            grid,
            vocab,
            values,
        }
    }

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

    /// Prediction for one stimulus as a function of future lag.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values
            .chunks_exact(self.vocab.len())
            .map(|r| r[i])
            .collect()
    }

    pub fn row_by_name(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.row(self.vocab.index_of(name)?))
    }

    fn check_len(&self, n: usize, what: &str) -> Result<()> {
        if n != self.vocab.len() {
            return Err(Error::ShapeMismatch(format!(
                "{what} has {n} entries, vocabulary has {}",
                self.vocab.len()
            )));
        }
        Ok(())
    }
}

pub fn predict<A: AssociationView + ?Sized>(assoc: &A, f_now: &[f64]) -> Result<FuturePrediction> {
    let grid = assoc.grid().clone();
    let vocab = assoc.vocab().clone();
    let n_stim = vocab.len();
    if f_now.len() != n_stim {
        return Err(Error::ShapeMismatch(format!(
            "present input has {} entries, vocabulary has {n_stim}",
            f_now.len()
        )));
    }
    let mut p = FuturePrediction::zeros(grid, vocab);
    for j in 0..p.grid.n_units() {
        for beta in 0..n_stim {
            p.values[j * n_stim + beta] = f_now
                .iter()
                .enumerate()
                .filter(|(_, &f)| f != 0.0)
                .map(|(i, &f)| assoc.weight(j, beta, i) * f)
                .sum();
        }
    }
    Ok(p)
}

/// Future cued by a single stimulus: the `α` slice of the association.
pub fn predict_state<A: AssociationView + ?Sized>(assoc: &A, alpha: &str) -> Result<FuturePrediction> {
    let a = assoc.vocab().index_of(alpha)?;
    let mut p = FuturePrediction::zeros(assoc.grid().clone(), assoc.vocab().clone());
    let n_stim = p.vocab.len();
    for j in 0..p.grid.n_units() {
        for beta in 0..n_stim {
            p.values[j * n_stim + beta] = assoc.weight(j, beta, a);
        }
    }
    Ok(p)
}

/// Signed value of each state.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardVector {
    values: Vec<f64>,
}

impl RewardVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite reward {v}")));
        }
        Ok(Self { values })
    }

    /// Builds a reward vector from `(state, value)` pairs; unnamed states are 0.
    pub fn from_pairs<'a, I>(vocab: &StimulusVocabulary, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut values = vec![0.0; vocab.len()];
        for (name, v) in pairs {
            values[vocab.index_of(name)?] = v;
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Weighting over future lags that restricts which outcomes count.
#[derive(Debug, Clone, PartialEq)]
pub enum TemporalWindow {
    /// Weight 1 on nodes with `lo <= τ* <= hi`, else 0.
    Rectangular { lo: f64, hi: f64 },
    /// One weight per exposed node.
    Tabulated(Vec<f64>),
}

impl TemporalWindow {
    pub fn rectangular(lo: f64, hi: f64) -> Result<Self> {
        let w = TemporalWindow::Rectangular { lo, hi };
        w.validate(None)?;
        Ok(w)
    }

    pub fn validate(&self, grid: Option<&TaustarGrid>) -> Result<()> {
        match self {
            TemporalWindow::Rectangular { lo, hi } => {
                if !(*lo >= 0.0 && lo < hi) || lo.is_nan() || hi.is_nan() {
                    return Err(Error::InvalidWindow(format!(
                        "rectangular window needs 0 <= lo < hi, got [{lo}, {hi}]"
                    )));
                }
            }
            TemporalWindow::Tabulated(w) => {
                if let Some(bad) = w.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::InvalidWindow(format!(
                        "tabulated weight {bad} outside [0, 1]"
                    )));
                }
                if let Some(grid) = grid {
                    if w.len() != grid.n_units() {
                        return Err(Error::InvalidWindow(format!(
                            "tabulated window has {} weights, grid has {} nodes",
                            w.len(),
                            grid.n_units()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn weights(&self, grid: &TaustarGrid) -> Result<Vec<f64>> {
        self.validate(Some(grid))?;
        Ok(match self {
            TemporalWindow::Rectangular { lo, hi } => grid
                .taus()
                .iter()
                .map(|t| if t >= lo && t <= hi { 1.0 } else { 0.0 })
                .collect(),
            TemporalWindow::Tabulated(w) => w.clone(),
        })
    }
}

/// `V = Σ_j Σ_i r_i p[j, i]`.
pub fn cached_value(p: &FuturePrediction, rewards: &RewardVector) -> Result<f64> {
    p.check_len(rewards.values.len(), "reward vector")?;
    Ok(p.values
        .chunks_exact(p.vocab.len())
        .map(|row| row.iter().zip(&rewards.values).map(|(x, r)| x * r).sum::<f64>())
        .sum())
}

/// `V = Σ_j w_j Σ_i r_i p[j, i]`.
pub fn windowed_value(
    p: &FuturePrediction,
    rewards: &RewardVector,
    window: &TemporalWindow,
) -> Result<f64> {
    p.check_len(rewards.values.len(), "reward vector")?;
    let w = window.weights(&p.grid)?;
    Ok(p.values
        .chunks_exact(p.vocab.len())
        .zip(&w)
        .map(|(row, &wj)| {
            wj * row.iter().zip(&rewards.values).map(|(x, r)| x * r).sum::<f64>()
        })
        .sum())
}

/// First node (scanning outward from the present) where the target reaches
/// `threshold`. The node index doubles as the number of nodes visited.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanHit {
    pub node: usize,
    pub tau_star: f64,
}

impl ScanHit {
    pub fn cost(&self) -> usize {
        self.node
    }
}

pub fn scan_future(p: &FuturePrediction, target: &str, threshold: f64) -> Result<Option<ScanHit>> {
    let i = p.vocab.index_of(target)?;
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scan threshold must be positive, got {threshold}"
        )));
    }
    Ok((0..p.grid.n_units())
        .find(|&j| p.get(j, i) >= threshold)
        .map(|node| ScanHit {
            node,
            tau_star: p.grid.tau(node),
        }))
}

/// A contiguous run of nodes around one local maximum of a prediction row.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub peak_node: usize,
    pub peak_tau: f64,
    pub peak_value: f64,
    /// Inclusive node range.
    pub first: usize,
    pub last: usize,
    /// `Σ p_j · node_measure(j)` over the range.
    pub mass: f64,
}

/// Valleys shallower than this fraction of the smaller neighbouring peak do
/// not separate two bumps.
pub const BUMP_SEPARATION: f64 = 0.5;

/// Splits a prediction row into bumps.
///
/// Peaks are local maxima exceeding `floor` times the row maximum. Adjacent
/// peaks are separated at the minimum between them; if that minimum is not
/// below `BUMP_SEPARATION` of the smaller peak the bumps overlap too much to
/// be measured and an error is returned.
pub fn find_bumps(grid: &TaustarGrid, row: &[f64], floor: f64) -> Result<Vec<Bump>> {
    let n = row.len();
    if n != grid.n_units() {
        return Err(Error::ShapeMismatch(format!(
            "row has {n} entries, grid has {} nodes",
            grid.n_units()
        )));
    }
    let max = row.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Ok(Vec::new());
    }
    let cut = floor * max;
    let peaks: Vec<usize> = (0..n)
        .filter(|&j| {
            let left = if j == 0 { f64::NEG_INFINITY } else { row[j - 1] };
            let right = if j + 1 == n { f64::NEG_INFINITY } else { row[j + 1] };
            row[j] > cut && row[j] > left && row[j] >= right
        })
        .collect();

    let mut bounds = Vec::with_capacity(peaks.len() + 1);
    bounds.push(0usize);
    for w in peaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let valley = (a..=b)
            .min_by(|&x, &y| row[x].total_cmp(&row[y]))
            .unwrap();
        let smaller = row[a].min(row[b]);
        if row[valley] >= BUMP_SEPARATION * smaller {
            return Err(Error::Unmeasurable(format!(
                "peaks at nodes {a} and {b} are joined by a valley at {:.3} of the smaller peak",
                row[valley] / smaller
            )));
        }
        bounds.push(valley);
    }
    bounds.push(n);

    Ok(peaks
        .iter()
        .enumerate()
        .map(|(b, &peak)| {
            // Each valley node belongs to the bump on its left.
            let first = if b == 0 { 0 } else { bounds[b] + 1 };
            let last = if b + 1 == peaks.len() {
                n - 1
            } else {
                bounds[b + 1]
            };
            let mass = (first..=last).map(|j| row[j] * grid.node_measure(j)).sum();
            Bump {
                peak_node: peak,
                peak_tau: grid.tau(peak),
                peak_value: row[peak],
                first,
                last,
                mass,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::{AssociativeTensor, NormalizationAxis};
    use crate::laplace::LaplaceState;

    fn setup() -> (Arc<TaustarGrid>, Arc<StimulusVocabulary>) {
        let grid = Arc::new(TaustarGrid::build(0.5, 100.0, 64, 4).unwrap());
        let vocab = Arc::new(StimulusVocabulary::new(["alpha", "beta", "R"]).unwrap());
        (grid, vocab)
    }

    /// `cue` at 0 followed by `R` at `delay` with area `magnitude`.
    fn pairing(
        m: &mut AssociativeTensor,
        cue: &str,
        delay: f64,
        magnitude: f64,
    ) {
        let mut st = LaplaceState::new(m.grid().clone(), m.vocab().clone());
        st.inject(cue, 1.0).unwrap();
        m.record_presentation(m.vocab().index_of(cue).unwrap());
        st.decay(delay).unwrap();
        let f_now = m.vocab().one_hot("R", magnitude).unwrap();
        m.hebbian_update(&f_now, &st.invert(), 1.0).unwrap();
    }

    fn trained(grid: &Arc<TaustarGrid>, vocab: &Arc<StimulusVocabulary>) -> AssociativeTensor {
        let mut m = AssociativeTensor::new(grid.clone(), vocab.clone());
        pairing(&mut m, "alpha", 5.0, 1.0);
        pairing(&mut m, "beta", 10.0, 2.0);
        m
    }

    #[test]
    fn zero_inputs_give_zero_predictions() {
        let (grid, vocab) = setup();
        let m = AssociativeTensor::new(grid.clone(), vocab.clone());
        let p = predict_state(&m, "alpha").unwrap();
        assert!(p.values().iter().all(|&v| v == 0.0));
        let m = trained(&grid, &vocab);
        let p = predict(&m, &[0.0; 3]).unwrap();
        assert!(p.values().iter().all(|&v| v == 0.0));
        assert_eq!(scan_future(&p, "R", 1e-6).unwrap(), None);
        let r = RewardVector::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(cached_value(&p, &r).unwrap(), 0.0);
    }

    #[test]
    fn one_hot_contraction_is_the_slice() {
        let (grid, vocab) = setup();
        let m = trained(&grid, &vocab).normalize_default(NormalizationAxis::PresentStimulus);
        let a = predict(&m, &vocab.one_hot("alpha", 1.0).unwrap()).unwrap();
        let b = predict_state(&m, "alpha").unwrap();
        assert_eq!(a.values(), b.values());
        assert!(matches!(
            predict_state(&m, "gamma"),
            Err(Error::UnknownStimulus(_))
        ));
        assert!(predict(&m, &[1.0]).is_err());
    }

    #[test]
    fn contraction_is_linear() {
        let (grid, vocab) = setup();
        let m = trained(&grid, &vocab);
        let mixed = predict(&m, &[0.5, 0.5, 0.0]).unwrap();
        let pa = predict_state(&m, "alpha").unwrap();
        let pb = predict_state(&m, "beta").unwrap();
        for ((x, a), b) in mixed.values().iter().zip(pa.values()).zip(pb.values()) {
            let expected = 0.5 * (a + b);
            assert!((x - expected).abs() <= 1e-12 * expected.abs().max(1e-300));
        }
    }

    #[test]
    fn exposure_averaged_prediction_has_bump_before_delay() {
        let (grid, vocab) = setup();
        let m = trained(&grid, &vocab);
        let avg = m.exposure_averaged();
        let row = predict_state(&avg, "alpha").unwrap().row_by_name("R").unwrap();
        let bumps = find_bumps(&grid, &row, 0.05).unwrap();
        assert_eq!(bumps.len(), 1);
        // Across nodes the Post response peaks at k/(k+1) of the delay.
        let expected = grid.nearest_node(5.0 * 4.0 / 5.0);
        assert!(bumps[0].peak_node.abs_diff(expected) <= 1);
    }

    #[test]
    fn values_are_linear_in_rewards() {
        let (grid, vocab) = setup();
        let m = trained(&grid, &vocab).exposure_averaged();
        let p = predict_state(&m, "beta").unwrap();
        let r = RewardVector::new(vec![0.0, 0.0, 1.0]).unwrap();
        let v = cached_value(&p, &r).unwrap();
        assert!(v > 0.0);
        let tripled = cached_value(&p, &r.scaled(3.0)).unwrap();
        assert!((tripled / (3.0 * v) - 1.0).abs() < 1e-14);
        assert!(cached_value(&p, &RewardVector::new(vec![1.0]).unwrap()).is_err());
    }

    #[test]
    fn windows() {
        let (grid, vocab) = setup();
        let m = trained(&grid, &vocab).exposure_averaged();
        let p = predict_state(&m, "alpha").unwrap();
        let r = RewardVector::new(vec![0.0, 0.0, 1.0]).unwrap();
        let all = TemporalWindow::rectangular(0.0, 1000.0).unwrap();
        assert_eq!(
            windowed_value(&p, &r, &all).unwrap(),
            cached_value(&p, &r).unwrap()
        );
        let none = TemporalWindow::Tabulated(vec![0.0; 64]);
        assert_eq!(windowed_value(&p, &r, &none).unwrap(), 0.0);
        // Inclusive edges snap to nodes.
        let w = TemporalWindow::rectangular(grid.tau(3), grid.tau(5))
            .unwrap()
            .weights(&grid)
            .unwrap();
        assert_eq!(w.iter().sum::<f64>(), 3.0);
        assert_eq!(w[3], 1.0);
        assert_eq!(w[5], 1.0);

        assert!(TemporalWindow::rectangular(5.0, 5.0).is_err());
        assert!(TemporalWindow::rectangular(-1.0, 5.0).is_err());
        assert!(windowed_value(&p, &r, &TemporalWindow::Tabulated(vec![0.5; 3])).is_err());
        assert!(windowed_value(&p, &r, &TemporalWindow::Tabulated(vec![1.5; 64])).is_err());
    }

    #[test]
    fn scan_cost_grows_with_lag() {
        let (grid, vocab) = setup();
        let m = trained(&grid, &vocab).exposure_averaged();
        let pa = predict_state(&m, "alpha").unwrap();
        let pb = predict_state(&m, "beta").unwrap();
        let ha = scan_future(&pa, "R", 0.01).unwrap().unwrap();
        let hb = scan_future(&pb, "R", 0.01).unwrap().unwrap();
        assert!(ha.cost() < hb.cost());
        // β's reward is twice as large at twice the lag: the same curve
        // shifted by ln 2 / ln(1+c) nodes.
        let shift = 2f64.ln() / grid.log_spacing();
        assert!((hb.cost() as f64 - ha.cost() as f64 - shift).abs() <= 1.0);
        assert_eq!(ha.tau_star, grid.tau(ha.node));
        assert!(scan_future(&pa, "R", 0.0).is_err());
        assert!(scan_future(&pa, "nope", 0.1).is_err());
    }

    #[test]
    fn bump_splitting() {
        let grid = TaustarGrid::build(0.5, 100.0, 64, 4).unwrap();
        let gauss = |c: f64, h: f64| -> Vec<f64> {
            (0..64)
                .map(|j| h * (-((j as f64 - c) / 3.0).powi(2)).exp())
                .collect()
        };
        let a = gauss(15.0, 1.0);
        let b = gauss(40.0, 0.5);
        let row: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let bumps = find_bumps(&grid, &row, 0.05).unwrap();
        assert_eq!(bumps.len(), 2);
        assert_eq!(bumps[0].peak_node, 15);
        assert_eq!(bumps[1].peak_node, 40);
        let ma: f64 = (0..64).map(|j| a[j] * grid.node_measure(j)).sum();
        let mb: f64 = (0..64).map(|j| b[j] * grid.node_measure(j)).sum();
        assert!((bumps[0].mass / ma - 1.0).abs() < 1e-3);
        assert!((bumps[1].mass / mb - 1.0).abs() < 1e-3);
        assert_eq!(bumps[0].last + 1, bumps[1].first);

        let close: Vec<f64> = gauss(30.0, 1.0)
            .iter()
            .zip(gauss(34.0, 1.0))
            .map(|(x, y)| x + y)
            .collect();
        // Peaks four nodes apart with width three merge into one bump.
        assert_eq!(find_bumps(&grid, &close, 0.05).unwrap().len(), 1);
        let shoulder: Vec<f64> = gauss(30.0, 1.0)
            .iter()
            .zip(gauss(36.0, 0.9))
            .map(|(x, y)| x + y)
            .collect();
        assert!(matches!(
            find_bumps(&grid, &shoulder, 0.05),
            Err(Error::Unmeasurable(_))
        ));
        assert!(find_bumps(&grid, &[0.0; 64], 0.05).unwrap().is_empty());
    }
}
