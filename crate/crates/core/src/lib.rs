// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod association;
pub mod error;
pub mod figures;
pub mod future;
pub mod grid;
pub mod laplace;
pub mod report;
pub mod scenario;
pub mod snapshot;
pub mod train;
pub mod vocab;

pub use association::{
    AssociationView, AssociativeTensor, ExposureAveraged, NormalizationAxis, NormalizedTensor,
    Readout,
};
pub use error::{Error, Result};
pub use grid::{GridParams, TaustarGrid};
pub use laplace::{impulse_response_analytic, LaplaceState, PastTimeline};
pub use vocab::StimulusVocabulary;
pub use future::{
    cached_value, predict, predict_state, scan_future, windowed_value, FuturePrediction,
    RewardVector, ScanHit, TemporalWindow,
};
pub use scenario::{Episode, Event, EventStream, Scenario};
pub use train::{train, train_episodes, TrainConfig, DEFAULT_SEED};
pub use report::Table;
pub use figures::{reproduce_figure, Claim, FigureConfig, FigureResult, FIGURES};
