use std::sync::Arc;

use logfuture::figures::{canonical_scenario, FIGURES};
use logfuture::train::{replay_episode, sample_episodes};
use logfuture::{
    predict_state, snapshot, train, train_episodes, AssociativeTensor, Episode, Event,
    EventStream, GridParams, LaplaceState, NormalizationAxis, Readout, Scenario,
    StimulusVocabulary, TaustarGrid, TrainConfig,
};

fn grid() -> Arc<TaustarGrid> {
    Arc::new(TaustarGrid::new(GridParams::default()).unwrap())
}

fn argmax(xs: &[f64]) -> usize {
    (0..xs.len()).max_by(|&a, &b| xs[a].total_cmp(&xs[b])).unwrap()
}

fn episode(events: &[(f64, usize)]) -> Episode {
    Episode {
        choice: events[0].1,
        branch: 0,
        stream: EventStream::new(
            events
                .iter()
                .map(|&(time, stimulus)| Event {
                    time,
                    stimulus,
                    magnitude: 1.0,
                })
                .collect(),
        )
        .unwrap(),
    }
}

#[test]
fn later_predecessor_sits_closer_to_the_present() {
    // alpha at 0, beta at 3, gamma at 6.
    let g = grid();
    let vocab = Arc::new(StimulusVocabulary::new(["alpha", "beta", "gamma"]).unwrap());
    let m = train_episodes(g, vocab, &[episode(&[(0.0, 0), (3.0, 1), (6.0, 2)])], 1, 1.0).unwrap();
    let from_beta = argmax(&m.slice(2, 1));
    let from_alpha = argmax(&m.slice(2, 0));
    assert!(from_beta < from_alpha, "{from_beta} vs {from_alpha}");
    // Nothing preceded alpha.
    for b in 0..3 {
        assert!(m.slice(0, b).iter().all(|&v| v == 0.0));
    }
}

#[test]
fn event_times_are_sufficient() {
    // Replaying only at event times equals stepping the decay densely.
    let g = grid();
    let vocab = Arc::new(StimulusVocabulary::new(["a", "b"]).unwrap());
    let ep = episode(&[(0.0, 0), (7.3, 1)]);
    let mut m = AssociativeTensor::new(g.clone(), vocab.clone());
    let mut st = LaplaceState::new(g.clone(), vocab.clone());
    replay_episode(&mut m, &mut st, &ep, 1.0).unwrap();

    let mut dense = LaplaceState::new(g.clone(), vocab.clone());
    dense.inject("a", 1.0).unwrap();
    for _ in 0..730 {
        dense.decay(0.01).unwrap();
    }
    let mut m2 = AssociativeTensor::new(g, vocab.clone());
    m2.hebbian_update(&vocab.one_hot("b", 1.0).unwrap(), &dense.invert(), 1.0)
        .unwrap();
    // The k-th difference amplifies round-off, so compare against the peak.
    let peak = m.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (x, y) in m.values().iter().zip(m2.values()) {
        assert!((x - y).abs() <= 1e-9 * peak, "{x} vs {y}");
    }
}

#[test]
fn episode_sets_add() {
    let s = canonical_scenario("fig7").unwrap();
    let g = grid();
    let a = sample_episodes(&s, 150, 1);
    let b = sample_episodes(&s, 90, 2);
    let all: Vec<Episode> = a.iter().chain(&b).cloned().collect();
    let whole = train_episodes(g.clone(), s.vocab().clone(), &all, 0, 1.0).unwrap();
    let mut parts = train_episodes(g.clone(), s.vocab().clone(), &a, 0, 1.0).unwrap();
    parts
        .merge(&train_episodes(g, s.vocab().clone(), &b, 0, 1.0).unwrap())
        .unwrap();
    let scale = whole.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (x, y) in whole.values().iter().zip(parts.values()) {
        assert!((x - y).abs() <= 1e-12 * scale);
    }
    assert_eq!(whole.episodes_seen(), parts.episodes_seen());
    assert_eq!(whole.presentations(), parts.presentations());
}

#[test]
fn a_lone_event_leaves_no_self_association() {
    for id in FIGURES {
        let s = canonical_scenario(id).unwrap();
        let m = train(&s, grid(), &TrainConfig::default()).unwrap();
        for i in 0..s.vocab().len() {
            assert_eq!(m.get(0, i, i), 0.0, "{id}: {}", s.vocab().name(i));
        }
    }
}

#[test]
fn choices_without_outcomes_predict_nothing() {
    let s = canonical_scenario("fig6").unwrap();
    let m = train(&s, grid(), &TrainConfig::default()).unwrap();
    let alpha = s.vocab().index_of("alpha").unwrap();
    for beta in 0..s.vocab().len() {
        assert!(m.slice(beta, alpha).iter().all(|&v| v == 0.0));
    }
}

#[test]
fn branch_frequency_concentrates() {
    let doc = r#"
states = ["a", "x", "y"]
[[choices.a]]
p = 0.7
outcomes = [{ state = "x", delay = 5.0 }]
[[choices.a]]
p = 0.3
outcomes = [{ state = "y", delay = 15.0 }]
"#;
    let s = Scenario::parse(doc).unwrap();
    let eps = sample_episodes(&s, 10_000, 42);
    let freq = eps.iter().filter(|e| e.branch == 0).count() as f64 / eps.len() as f64;
    assert!((freq - 0.7).abs() <= 0.015, "{freq}");
}

#[test]
fn normalized_rows_sum_to_one_on_every_canonical_scenario() {
    let g = grid();
    for id in FIGURES {
        let s = canonical_scenario(id).unwrap();
        let cfg = TrainConfig {
            episodes_per_choice: 500,
            ..TrainConfig::default()
        };
        let m = train(&s, g.clone(), &cfg).unwrap();
        for axis in [NormalizationAxis::PastStimulus, NormalizationAxis::PresentStimulus] {
            let n = m.normalize_default(axis);
            for (r, sum) in n.row_sums().iter().enumerate() {
                assert!(
                    *sum == 0.0 || (sum - 1.0).abs() <= 1e-9,
                    "{id} {axis:?} row {r}: {sum}"
                );
            }
            assert!(n.row_sums().iter().any(|&s| s > 0.0));
        }
    }
}

#[test]
fn snapshot_preserves_predictions() {
    let s = canonical_scenario("fig4").unwrap();
    let m = train(&s, grid(), &TrainConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.lft");
    snapshot::save(&m, &path).unwrap();
    let back = snapshot::load_checked(&path, m.grid(), s.vocab()).unwrap();
    for readout in [Readout::Raw, Readout::Normalized, Readout::Exposure] {
        let a = predict_state(
            m.view(readout, NormalizationAxis::PastStimulus, None).unwrap().as_ref(),
            "alpha",
        )
        .unwrap();
        let b = predict_state(
            back.view(readout, NormalizationAxis::PastStimulus, None).unwrap().as_ref(),
            "alpha",
        )
        .unwrap();
        assert_eq!(a.values(), b.values());
    }
}

#[test]
fn dilated_scenario_stores_dilated_lags() {
    let s = canonical_scenario("fig4").unwrap();
    let g = grid();
    let m1 = train(&s, g.clone(), &TrainConfig::default()).unwrap();
    let m4 = train(&s.rescaled(4.0).unwrap(), g.clone(), &TrainConfig::default()).unwrap();
    let shift = 4f64.ln() / g.log_spacing();
    let p1 = argmax(&m1.slice(2, 0)) as f64;
    let p4 = argmax(&m4.slice(2, 0)) as f64;
    assert!((p4 - p1 - shift).abs() <= 1.0, "{p1} -> {p4}, expected +{shift}");
}
