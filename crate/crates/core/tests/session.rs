use trustwalk::synth::{generate_protocol, generate_ratings, ProtocolConfig};
use trustwalk::{
    median_time_delta, predict_ratings, run_session, Block, ModelParams, Session, TrialOutcome,
    TrialRecord,
};

use TrialOutcome::{Match as M, Mismatch as X, NoResponse as N};

fn block(outcomes: &[TrialOutcome], dt: f64, rating: f64) -> Block {
    Block {
        trials: outcomes.iter().map(|&o| TrialRecord::new(o, dt)).collect(),
        reported_rating: rating,
    }
}

fn session(initial: f64, blocks: Vec<Block>) -> Session {
    Session {
        participant_id: "t".into(),
        initial_rating: initial,
        blocks,
    }
}

fn synthetic(seed: u64, params: &ModelParams) -> Session {
    let proto = generate_protocol(&ProtocolConfig { seed, ..Default::default() }).unwrap();
    generate_ratings(&proto, params, 0.0).unwrap()
}

#[test]
fn median_conventions() {
    let with = |deltas: &[f64]| {
        let trials = deltas.iter().map(|&d| TrialRecord::new(M, d)).collect();
        median_time_delta(&session(50.0, vec![Block { trials, reported_rating: 50.0 }])).unwrap()
    };
    assert_eq!(with(&[1.0, 2.0, 3.0]), 2.0);
    assert_eq!(with(&[1.0, 2.0, 3.0, 10.0]), 2.5);
    assert_eq!(with(&[10.0, 1.0, 3.0, 2.0]), 2.5);

    let s = synthetic(5, &ModelParams::default());
    let mut all: Vec<f64> = s.trials().map(|t| t.time_delta).collect();
    all.sort_by(f64::total_cmp);
    let oracle = (all[279] + all[280]) / 2.0;
    assert_eq!(median_time_delta(&s).unwrap(), oracle);
}

#[test]
fn norm_conserved_over_full_session() {
    let params = ModelParams::new(0.7, 8.0, 9.0, 6.0, 0.75);
    let s = synthetic(3, &params);
    assert_eq!(s.trial_count(), 560);
    for collapse in [true, false] {
        let traj = run_session(&s, &params, collapse).unwrap();
        assert_eq!(traj.snapshots.len(), 560);
        for snap in &traj.snapshots {
            let total: f64 = snap.propensities.iter().sum();
            assert!((total - 1.0).abs() <= 1e-9, "drift {}", total - 1.0);
        }
    }
}

#[test]
fn near_identity_no_response() {
    let s = session(37.0, vec![block(&[N; 28], 2.5, 40.0)]);
    for gamma in [0.01, 0.1, 0.5, 1.0] {
        let params = ModelParams::new(gamma, 1.0, 1.0, 0.01, 0.75);
        let pred = predict_ratings(&s, &params).unwrap();
        // within two percent of the starting rating
        assert!((pred[0] - 3.7).abs() < 0.2, "gamma {gamma}: {}", pred[0]);
    }
}

#[test]
fn gradient_directions() {
    let params = ModelParams::default();
    let up = session(25.0, vec![block(&[M; 28], 1.0, 50.0)]);
    assert!(predict_ratings(&up, &params).unwrap()[0] > 2.5);
    let down = session(75.0, vec![block(&[X; 28], 1.0, 50.0)]);
    assert!(predict_ratings(&down, &params).unwrap()[0] < 7.5);
}

#[test]
fn interleaved_differs_from_sorted() {
    // values from an independent dense matrix-exponential replay
    let params = ModelParams::default();
    let interleaved = session(50.0, vec![block(&[M, X, M, X, M, X, M, X], 1.0, 50.0)]);
    let sorted = session(50.0, vec![block(&[M, M, M, M, X, X, X, X], 1.0, 50.0)]);
    let a = predict_ratings(&interleaved, &params).unwrap()[0];
    let b = predict_ratings(&sorted, &params).unwrap()[0];
    assert!((a - 5.052053121134783).abs() <= 1e-9, "{a}");
    assert!((b - 5.205622242982243).abs() <= 1e-9, "{b}");
    assert!((a - b).abs() > 0.1);
}

#[test]
fn first_trial_uses_session_median() {
    let params = ModelParams::default();
    let mut s = session(50.0, vec![block(&[M, X, M], 2.0, 60.0), block(&[X, M, M], 2.0, 40.0)]);
    let base = predict_ratings(&s, &params).unwrap();
    // 0.5 and 1000 leave the median unchanged at 2
    s.blocks[0].trials[0].time_delta = 0.5;
    s.blocks[1].trials[0].time_delta = 1000.0;
    assert_eq!(median_time_delta(&s).unwrap(), 2.0);
    assert_eq!(predict_ratings(&s, &params).unwrap(), base);
}

#[test]
fn collapse_resets_moduli_but_keeps_phase_memory() {
    let params = ModelParams::default();
    let b1 = block(&[M, M, N, X], 1.5, 70.0);
    let a = session(50.0, vec![block(&[M, X, M, X], 1.5, 60.0), b1.clone()]);
    let b = session(50.0, vec![block(&[X, X, X, M], 1.5, 60.0), b1]);
    let ta = run_session(&a, &params, true).unwrap();
    let tb = run_session(&b, &params, true).unwrap();
    // propensities right after the first collapse agree exactly
    for (p, q) in ta.collapses[0].propensities.iter().zip(&tb.collapses[0].propensities) {
        assert!((p - q).abs() <= 1e-12);
    }
    // the phases carried through the collapse still steer block 1
    assert!((ta.predictions[1] - tb.predictions[1]).abs() > 1e-6);
}

#[test]
fn collapse_never_changes_first_block() {
    let params = ModelParams::new(0.3, 2.0, 0.5, 1.5, 0.75);
    let s = synthetic(9, &params);
    let on = run_session(&s, &params, true).unwrap();
    let off = run_session(&s, &params, false).unwrap();
    assert_eq!(on.predictions[0], off.predictions[0]);
    assert!(off.collapses.is_empty());
    assert_eq!(on.collapses.len(), 20);
}

#[test]
fn self_consistent_on_generated_ratings() {
    for params in [ModelParams::default(), ModelParams::new(0.6, 3.0, 7.0, 0.2, 1.1)] {
        let s = synthetic(1, &params);
        let pred = predict_ratings(&s, &params).unwrap();
        assert_eq!(pred.len(), 20);
        for (p, r) in pred.iter().zip(s.reported_levels()) {
            assert!((p - r).abs() <= 1e-9);
            assert!((0.5..=9.5).contains(p));
        }
    }
}

#[test]
fn zero_time_trials_are_identity() {
    let params = ModelParams::default();
    let plain = session(50.0, vec![block(&[M, M, M], 1.0, 50.0)]);
    let trials = [(M, 1.0), (M, 1.0), (X, 0.0), (M, 1.0), (X, 0.0)]
        .iter()
        .map(|&(o, dt)| TrialRecord::new(o, dt))
        .collect();
    // both medians are 1, so the padded block evolves exactly like the plain one
    let padded = session(50.0, vec![Block { trials, reported_rating: 50.0 }]);
    assert_eq!(predict_ratings(&plain, &params).unwrap(), predict_ratings(&padded, &params).unwrap());
}

#[test]
fn invalid_trials_report_indices() {
    let params = ModelParams::default();
    let mut s = session(50.0, vec![block(&[M, M], 1.0, 50.0), block(&[M, M, M], 1.0, 50.0)]);
    s.blocks[1].trials[2].time_delta = f64::NAN;
    match run_session(&s, &params, true) {
        Err(trustwalk::Error::InvalidTrial { block, trial, .. }) => assert_eq!((block, trial), (1, 2)),
        other => panic!("unexpected {other:?}"),
    }
    assert!(predict_ratings(&session(50.0, vec![]), &params).is_err());
}
