//! Train-then-probe pipeline: replay sampled episodes into an associative tensor.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::association::AssociativeTensor;
use crate::error::{Error, Result};
use crate::grid::TaustarGrid;
use crate::laplace::LaplaceState;
use crate::scenario::{Episode, Scenario};
use crate::vocab::StimulusVocabulary;

/// Episodes per partial tensor. Fixed so the summation order, and hence the
/// result, does not depend on the worker count.
const CHUNK: usize = 64;

pub const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub episodes_per_choice: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes_per_choice: 1,
            seed: DEFAULT_SEED,
            workers: 0,
            learning_rate: 1.0,
        }
    }
}

/// Samples `episodes_per_choice` episodes for every choice, in choice order.
pub fn sample_episodes(scenario: &Scenario, episodes_per_choice: usize, seed: u64) -> Vec<Episode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(episodes_per_choice * scenario.choices().len());
    for choice in scenario.choices() {
        for _ in 0..episodes_per_choice {
            out.push(scenario.sample_choice(choice, &mut rng));
        }
    }
    out
}

/// Replays one episode from a zeroed memory. Events sharing a time stamp see
/// the same pre-injection past, so nothing is associated with itself at lag 0.
pub fn replay_episode(
    tensor: &mut AssociativeTensor,
    state: &mut LaplaceState,
    episode: &Episode,
    rate: f64,
) -> Result<()> {
    state.reset();
    let n_stim = tensor.vocab().len();
    let events = episode.stream.events();
    let mut present = vec![0.0; n_stim];
    let mut i = 0;
    while i < events.len() {
        let t = events[i].time;
        let end = i + events[i..].iter().take_while(|e| e.time == t).count();
        state.advance_to(t)?;
        let past = state.invert();
        present.iter_mut().for_each(|x| *x = 0.0);
        for e in &events[i..end] {
            if e.stimulus >= n_stim {
                return Err(Error::NodeOutOfRange {
                    index: e.stimulus,
                    len: n_stim,
                });
            }
            present[e.stimulus] += e.magnitude;
        }
        tensor.hebbian_update(&present, &past, rate)?;
        for e in &events[i..end] {
            state.inject_index(e.stimulus, e.magnitude);
            tensor.record_presentation(e.stimulus);
        }
        i = end;
    }
    tensor.record_episode();
    Ok(())
}

fn train_chunk(
    grid: &Arc<TaustarGrid>,
    vocab: &Arc<StimulusVocabulary>,
    episodes: &[Episode],
    rate: f64,
) -> Result<AssociativeTensor> {
    let mut tensor = AssociativeTensor::new(grid.clone(), vocab.clone());
    let mut state = LaplaceState::new(grid.clone(), vocab.clone());
    for ep in episodes {
        replay_episode(&mut tensor, &mut state, ep, rate)?;
    }
    Ok(tensor)
}

/// Trains on a fixed list of episodes. Bit-identical for any `workers`.
pub fn train_episodes(
    grid: Arc<TaustarGrid>,
    vocab: Arc<StimulusVocabulary>,
    episodes: &[Episode],
    workers: usize,
    rate: f64,
) -> Result<AssociativeTensor> {
    if !rate.is_finite() {
        return Err(Error::InvalidArgument(format!("learning rate {rate} is not finite")));
    }
    let run = || -> Result<Vec<AssociativeTensor>> {
        episodes
            .par_chunks(CHUNK)
            .map(|chunk| train_chunk(&grid, &vocab, chunk, rate))
            .collect()
    };
    let partials = if workers == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run)?
    };
    let mut total = AssociativeTensor::new(grid, vocab);
    for p in &partials {
        total.merge(p)?;
    }
    Ok(total)
}

pub fn train(scenario: &Scenario, grid: Arc<TaustarGrid>, cfg: &TrainConfig) -> Result<AssociativeTensor> {
    if cfg.episodes_per_choice == 0 {
        return Err(Error::InvalidArgument("episodes_per_choice must be at least 1".into()));
    }
    let episodes = sample_episodes(scenario, cfg.episodes_per_choice, cfg.seed);
    train_episodes(grid, scenario.vocab().clone(), &episodes, cfg.workers, cfg.learning_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG4: &str = r#"
states = ["alpha", "beta", "R"]
[rewards]
R = 1.0
[[choices.alpha]]
p = 1.0
outcomes = [{ state = "R", delay = 5.0 }]
[[choices.beta]]
p = 1.0
outcomes = [{ state = "R", delay = 10.0, magnitude = 2.0 }]
"#;

    fn grid() -> Arc<TaustarGrid> {
        Arc::new(TaustarGrid::build(0.5, 100.0, 64, 4).unwrap())
    }

    fn argmax(xs: &[f64]) -> usize {
        (0..xs.len()).max_by(|&a, &b| xs[a].total_cmp(&xs[b])).unwrap()
    }

    #[test]
    fn one_episode_stores_reward_near_its_delay() {
        let s = Scenario::parse(FIG4).unwrap();
        let g = grid();
        let m = train(&s, g.clone(), &TrainConfig::default()).unwrap();
        let row = m.slice(2, 0);
        let peak = argmax(&row) as isize;
        // Across nodes the stored lag peaks at k/(k+1) of the delay.
        let expect = g.nearest_node(5.0 * 4.0 / 5.0) as isize;
        assert!((peak - expect).abs() <= 1, "{peak} vs {expect}");
        assert_eq!(m.episodes_seen(), 2);
        assert_eq!(m.presentations(), &[1, 1, 2]);
    }

    #[test]
    fn no_self_association_from_a_single_event() {
        let doc = r#"
states = ["a", "b"]
[[choices.a]]
p = 1.0
"#;
        let s = Scenario::parse(doc).unwrap();
        let m = train(&s, grid(), &TrainConfig::default()).unwrap();
        assert!(m.is_zero());
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let s = Scenario::parse(FIG4).unwrap();
        let cfg = TrainConfig {
            episodes_per_choice: 300,
            ..TrainConfig::default()
        };
        let one = train(&s, grid(), &TrainConfig { workers: 1, ..cfg }).unwrap();
        let four = train(&s, grid(), &TrainConfig { workers: 4, ..cfg }).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn zero_episodes_is_rejected() {
        let s = Scenario::parse(FIG4).unwrap();
        let cfg = TrainConfig {
            episodes_per_choice: 0,
            ..TrainConfig::default()
        };
        assert!(train(&s, grid(), &cfg).is_err());
    }
}
