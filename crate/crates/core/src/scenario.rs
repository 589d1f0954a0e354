//! Scenario documents: timed stimulus/outcome decision trees.
//!
//! A scenario is written in TOML:
//!
//! ```toml
//! states = ["alpha", "beta", "R"]
//! time_scale = 1.0
//!
//! [rewards]
//! R = 1.0
//!
//! [[choices.alpha]]
//! p = 1.0
//! outcomes = [{ state = "R", delay = 5.0, magnitude = 1.0 }]
//! ```
//!
//! Each choice is a root stimulus presented at `t = 0`; one of its branches is
//! drawn with probability `p` and its outcomes follow at `delay * time_scale`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::future::RewardVector;
use crate::grid::TaustarGrid;
use crate::vocab::StimulusVocabulary;

pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    states: Vec<String>,
    #[serde(default)]
    rewards: BTreeMap<String, f64>,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    time_scale: f64,
    choices: BTreeMap<String, Vec<RawBranch>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBranch {
    p: f64,
    #[serde(default)]
    outcomes: Vec<RawOutcome>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutcome {
    state: String,
    delay: f64,
    #[serde(default = "one")]
    magnitude: f64,
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stimulus: usize,
    pub delay: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub probability: f64,
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub stimulus: usize,
    pub branches: Vec<Branch>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    vocab: Arc<StimulusVocabulary>,
    choices: Vec<Choice>,
    rewards: RewardVector,
    time_scale: f64,
}

fn offset_to_line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| offset_to_line_col(text, s.start))
                .unwrap_or((0, 0));
            Error::ScenarioSyntax {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawScenario) -> Result<Self> {
        let vocab = Arc::new(StimulusVocabulary::new(raw.states)?);
        if !(raw.time_scale.is_finite() && raw.time_scale > 0.0) {
            return Err(Error::Scenario(format!(
                "time_scale must be positive, got {}",
                raw.time_scale
            )));
        }
        let rewards =
            RewardVector::from_pairs(&vocab, raw.rewards.iter().map(|(k, v)| (k.as_str(), *v)))?;
        if raw.choices.is_empty() {
            return Err(Error::Scenario("at least one choice is required".into()));
        }

        let mut choices = Vec::with_capacity(raw.choices.len());
        for (label, raw_branches) in &raw.choices {
            let stimulus = vocab.index_of(label)?;
            if raw_branches.is_empty() {
                return Err(Error::Scenario(format!("choice `{label}` has no branches")));
            }
            let mut total = 0.0;
            let mut branches = Vec::with_capacity(raw_branches.len());
            for b in raw_branches {
                if !(b.p.is_finite() && b.p >= 0.0) {
                    return Err(Error::Scenario(format!(
                        "choice `{label}`: branch probability {} is not in [0, 1]",
                        b.p
                    )));
                }
                total += b.p;
                let mut outcomes = Vec::with_capacity(b.outcomes.len());
                for o in &b.outcomes {
                    if !(o.delay.is_finite() && o.delay > 0.0) {
                        return Err(Error::Scenario(format!(
                            "choice `{label}`: delay of `{}` must be positive, got {}",
                            o.state, o.delay
                        )));
                    }
                    if !o.magnitude.is_finite() {
                        return Err(Error::Scenario(format!(
                            "choice `{label}`: magnitude of `{}` is not finite",
                            o.state
                        )));
                    }
                    outcomes.push(Outcome {
                        stimulus: vocab.index_of(&o.state)?,
                        delay: o.delay,
                        magnitude: o.magnitude,
                    });
                }
                branches.push(Branch {
                    probability: b.p,
                    outcomes,
                });
            }
            if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(Error::Scenario(format!(
                    "choice `{label}`: branch probabilities sum to {total}, not 1"
                )));
            }
            choices.push(Choice { stimulus, branches });
        }
        // Choices follow the order of `states`.
        choices.sort_by_key(|c| c.stimulus);

        Ok(Self {
            vocab,
            choices,
            rewards,
            time_scale: raw.time_scale,
        })
    }

    pub fn to_toml(&self) -> String {
        let rewards = self
            .rewards
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &r)| r != 0.0)
            .map(|(i, &r)| (self.vocab.name(i).to_string(), r))
            .collect();
        let choices = self
            .choices
            .iter()
            .map(|c| {
                let branches = c
                    .branches
                    .iter()
                    .map(|b| RawBranch {
                        p: b.probability,
                        outcomes: b
                            .outcomes
                            .iter()
                            .map(|o| RawOutcome {
                                state: self.vocab.name(o.stimulus).to_string(),
                                delay: o.delay,
                                magnitude: o.magnitude,
                            })
                            .collect(),
                    })
                    .collect();
                (self.vocab.name(c.stimulus).to_string(), branches)
            })
            .collect();
        let raw = RawScenario {
            states: self.vocab.names().to_vec(),
            rewards,
            time_scale: self.time_scale,
            choices,
        };
        toml::to_string(&raw).expect("scenario serialises")
    }

    pub fn vocab(&self) -> &Arc<StimulusVocabulary> {
        &self.vocab
    }

    pub fn choices(&self) -> &[Choice] {
        &self.choices
    }

    pub fn choice_labels(&self) -> Vec<&str> {
        self.choices
            .iter()
            .map(|c| self.vocab.name(c.stimulus))
            .collect()
    }

    pub fn choice(&self, label: &str) -> Result<&Choice> {
        let i = self.vocab.index_of(label)?;
        self.choices
            .iter()
            .find(|c| c.stimulus == i)
            .ok_or_else(|| Error::Scenario(format!("`{label}` is not a choice")))
    }

    pub fn rewards(&self) -> &RewardVector {
        &self.rewards
    }

    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    /// Same decision tree with every delay stretched by a further `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Scenario(format!("invalid time scale factor {factor}")));
        }
        Ok(Self {
            time_scale: self.time_scale * factor,
            ..self.clone()
        })
    }

    /// Outcome lags (after `time_scale`) that fall outside the grid interior.
    pub fn interior_warnings(&self, grid: &TaustarGrid) -> Vec<String> {
        let (lo, hi) = grid.interior_range();
        let mut warnings = Vec::new();
        for c in &self.choices {
            for b in &c.branches {
                for o in &b.outcomes {
                    let lag = o.delay * self.time_scale;
                    if !grid.is_interior(lag) {
                        warnings.push(format!(
                            "`{}` -> `{}` at lag {lag} lies outside the grid interior [{lo:.4}, {hi:.4}]",
                            self.vocab.name(c.stimulus),
                            self.vocab.name(o.stimulus)
                        ));
                    }
                }
            }
        }
        warnings
    }

    /// Draws one episode of `label`: the choice stimulus at `t = 0`, then the
    /// outcomes of a branch drawn by probability.
    pub fn sample_episode<R: Rng + ?Sized>(&self, label: &str, rng: &mut R) -> Result<Episode> {
        let choice = self.choice(label)?;
        Ok(self.sample_choice(choice, rng))
    }

    pub(crate) fn sample_choice<R: Rng + ?Sized>(&self, choice: &Choice, rng: &mut R) -> Episode {
        let branch = if choice.branches.len() == 1 {
            0
        } else {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let last = choice.branches.len() - 1;
            choice
                .branches
                .iter()
                .position(|b| {
                    acc += b.probability;
                    u < acc
                })
                .unwrap_or(last)
        };
        let mut events = vec![Event {
            time: 0.0,
            stimulus: choice.stimulus,
            magnitude: 1.0,
        }];
        events.extend(choice.branches[branch].outcomes.iter().map(|o| Event {
            time: o.delay * self.time_scale,
            stimulus: o.stimulus,
            magnitude: o.magnitude,
        }));
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Episode {
            choice: choice.stimulus,
            branch,
            stream: EventStream { events },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub stimulus: usize,
    pub magnitude: f64,
}

/// Time-ordered events.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventStream {
    events: Vec<Event>,
}

impl EventStream {
    pub fn new(events: Vec<Event>) -> Result<Self> {
        if events.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(Error::InvalidArgument("event times must be non-decreasing".into()));
        }
        if events
            .iter()
            .any(|e| !e.magnitude.is_finite() || !e.time.is_finite())
        {
            return Err(Error::InvalidArgument("event with non-finite time or magnitude".into()));
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    /// Stimulus index of the choice.
    pub choice: usize,
    /// Index of the branch that was drawn.
    pub branch: usize,
    pub stream: EventStream,
}
