use std::fs;

use proptest::prelude::*;
use tempfile::TempDir;
use trustwalk::fitter::{fit, FitConfig};
use trustwalk::io::{
    blocks_csv, export_fit, export_trajectory, format_sig, insilico_csv, insilico_ratings_csv,
    load_fit, load_session, load_session_with_warnings, parse_session, save_session, sweep_csv,
};
use trustwalk::synth::{generate_protocol, generate_ratings, ProtocolConfig};
use trustwalk::{insilico, run_session, Error, ModelParams, Session, TrialOutcome};

fn synthetic(seed: u64, noise: f64) -> Session {
    let proto = generate_protocol(&ProtocolConfig { seed, ..Default::default() }).unwrap();
    generate_ratings(&proto, &ModelParams::default(), noise).unwrap()
}

fn pointer_of(text: &str) -> String {
    match parse_session(text) {
        Err(Error::Schema { pointer, .. }) => pointer,
        other => panic!("expected schema error, got {other:?}"),
    }
}

#[test]
fn session_round_trip_is_exact() {
    let dir = TempDir::new().unwrap();
    for seed in 0..5 {
        let s = synthetic(seed, 7.0);
        let path = dir.path().join(format!("s{seed}.json"));
        save_session(&s, &path).unwrap();
        assert_eq!(load_session(&path).unwrap(), s);
        let first = fs::read(&path).unwrap();
        save_session(&load_session(&path).unwrap(), &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
    }
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn schema_violations_carry_pointers() {
    let ok_trial = r#"{"outcome":"match","time_delta_s":1.0}"#;
    let cases = [
        (r#"[]"#.to_string(), ""),
        (r#"{"initial_rating":50,"blocks":[]}"#.to_string(), "/participant_id"),
        (r#"{"participant_id":"p","initial_rating":150,"blocks":[]}"#.to_string(), "/initial_rating"),
        (r#"{"participant_id":"p","initial_rating":50,"blocks":[]}"#.to_string(), "/blocks"),
        (
            format!(r#"{{"participant_id":"p","initial_rating":50,"blocks":[{{"trials":[{ok_trial}]}}]}}"#),
            "/blocks/0/reported_rating",
        ),
        (
            format!(r#"{{"participant_id":"p","initial_rating":50,"blocks":[{{"trials":[{ok_trial}],"reported_rating":1}},{{"trials":[{ok_trial},{{"outcome":"yes","time_delta_s":1}}],"reported_rating":1}}]}}"#),
            "/blocks/1/trials/1/outcome",
        ),
        (
            r#"{"participant_id":"p","initial_rating":50,"blocks":[{"trials":[{"outcome":"match","time_delta_s":"1"}],"reported_rating":1}]}"#.to_string(),
            "/blocks/0/trials/0/time_delta_s",
        ),
        (
            r#"{"participant_id":"p","initial_rating":50,"blocks":[{"trials":[{"outcome":"match","time_delta_s":-0.5}],"reported_rating":1}]}"#.to_string(),
            "/blocks/0/trials/0/time_delta_s",
        ),
    ];
    for (text, pointer) in cases {
        assert_eq!(pointer_of(&text), pointer, "{text}");
    }
}

#[test]
fn syntax_errors_report_position() {
    match parse_session("{\n  \"blocks\": [\n") {
        Err(e @ Error::Parse { line, .. }) => {
            assert!(line >= 2);
            assert!(e.is_validation());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_fields_warn_but_load() {
    let text = r#"{"participant_id":"p","initial_rating":50,"notes":"x","blocks":[{"trials":[{"outcome":"no_response","time_delta_s":2,"rt":0.3}],"reported_rating":55}]}"#;
    let loaded = parse_session(text).unwrap();
    assert_eq!(loaded.session.blocks[0].trials[0].outcome, TrialOutcome::NoResponse);
    assert_eq!(
        loaded.warnings,
        vec!["unknown field /notes ignored", "unknown field /blocks/0/trials/0/rt ignored"]
    );
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("w.json");
    fs::write(&path, text).unwrap();
    assert_eq!(load_session_with_warnings(&path).unwrap().warnings.len(), 2);
}

#[test]
fn missing_file_is_io_error() {
    let err = load_session("/nonexistent/session.json").unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(!err.is_validation());
}

#[test]
fn fit_export_reloads_equal() {
    let dir = TempDir::new().unwrap();
    let s = synthetic(1, 0.0);
    let result = fit(&s, &FitConfig { budget: 300, ..Default::default() }).unwrap();
    let path = dir.path().join("fit.json");
    export_fit(&result, &path).unwrap();
    assert_eq!(load_fit(&path).unwrap(), result);
}

#[test]
fn csv_layouts() {
    let dir = TempDir::new().unwrap();
    let s = synthetic(2, 0.0);
    let traj = run_session(&s, &ModelParams::default(), true).unwrap();
    let path = dir.path().join("traj.csv");
    let blocks_path = export_trajectory(&traj, &path).unwrap();
    assert_eq!(blocks_path, dir.path().join("traj.blocks.csv"));
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1 + 5600);
    assert!(text.lines().nth(1).unwrap().starts_with("0,0,0.5,"));
    let blocks = fs::read_to_string(&blocks_path).unwrap();
    assert_eq!(blocks, blocks_csv(&traj));
    assert_eq!(blocks.lines().count(), 21);

    assert_eq!(sweep_csv(&[(0.05, 0.25), (0.15, 1.0 / 3.0)]), "collapse_std,mae\n0.05,0.25\n0.15,0.333333333333\n");

    let run = insilico(TrialOutcome::Match, &ModelParams::default(), 2.5, 2, 0.5).unwrap();
    let props = insilico_csv(&run);
    assert_eq!(props.lines().next(), Some("step,time_s,level,propensity"));
    assert_eq!(props.lines().count(), 1 + 3 * 10);
    let ratings = insilico_ratings_csv(&run);
    assert_eq!(ratings.lines().next(), Some("step,time_s,expected_rating"));
    assert!(ratings.lines().nth(1).unwrap().starts_with("0,0,2.5"));
    assert!(ratings.lines().nth(3).unwrap().starts_with("2,1,"));
}

#[test]
fn significant_digit_formatting() {
    assert_eq!(format_sig(0.0), "0");
    assert_eq!(format_sig(-0.0), "0");
    assert_eq!(format_sig(2.5), "2.5");
    assert_eq!(format_sig(100.0), "100");
    assert_eq!(format_sig(1.0 / 3.0), "0.333333333333");
    assert_eq!(format_sig(-2.0 / 3.0), "-0.666666666667");
    assert_eq!(format_sig(1e-7), "1.00000000000e-7");
    assert_eq!(format_sig(123456.789), "123456.789");
}

proptest! {
    #[test]
    fn format_sig_round_trips_to_twelve_digits(x in -1e6f64..1e6) {
        let back: f64 = format_sig(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs().max(1e-5));
    }

    #[test]
    fn arbitrary_sessions_round_trip(
        initial in 0.0f64..=100.0,
        blocks in prop::collection::vec(
            (prop::collection::vec((0usize..3, 0.0f64..60.0), 1..30), 0.0f64..=100.0),
            1..6,
        ),
    ) {
        let s = Session {
            participant_id: "p/~1".into(),
            initial_rating: initial,
            blocks: blocks
                .into_iter()
                .map(|(trials, rating)| trustwalk::Block {
                    trials: trials
                        .into_iter()
                        .map(|(o, dt)| trustwalk::TrialRecord::new(TrialOutcome::ALL[o], dt))
                        .collect(),
                    reported_rating: rating,
                })
                .collect(),
        };
        let text = trustwalk::io::session_to_json(&s);
        let loaded = parse_session(&text).unwrap();
        prop_assert_eq!(loaded.session, s);
        prop_assert!(loaded.warnings.is_empty());
    }
}
