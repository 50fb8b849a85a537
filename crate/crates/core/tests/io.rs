use std::fs;
use std::path::Path;

use proptest::prelude::*;

use smctrack_core::appearance::{load_params, save_params, AttentionParams};
use smctrack_core::io::{
    attach_embeddings, config_to_string, detection_records, detections_from_str, embeddings_to_string,
    ground_truth_from_records, ground_truth_records, parse_config, parse_embeddings, parse_mot_str, read_detections,
    read_ground_truth, records_to_string, result_records, write_embeddings, write_records, write_results_csv,
};
use smctrack_core::synth::{generate_scenario, random_scenario, AppearanceSource, RandomScenarioParams};
use smctrack_core::{run_sequence, BoundingBox, Error, FusionMode, TrackOutput, TrackerConfig};

fn out(frame: u32, id: u64, l: f64, t: f64, w: f64, h: f64, score: f64) -> TrackOutput {
    TrackOutput { frame, id, bbox: BoundingBox::new(l, t, w, h).unwrap(), score }
}

#[test]
fn results_match_golden_file() {
    // Deliberately unsorted input.
    let tracks = vec![
        out(4, 2, -5.0, -7.5, 30.0, 60.0, 0.5),
        out(2, 3, 0.0, 0.0, 1.0, 1.0, 1.0),
        out(1, 2, 100.5, 20.0, 30.0, 60.0, 0.75),
        out(2, 1, 12.25, 21.0, 30.0, 40.0, 0.125),
        out(1, 1, 10.0, 20.0, 30.0, 40.0, 0.9),
    ];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("res.txt");
    write_results_csv(&tracks, &path).unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_results.txt");
    assert_eq!(fs::read(&path).unwrap(), fs::read(golden).unwrap());
}

#[test]
fn empty_results_write_an_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("res.txt");
    write_results_csv(&[], &path).unwrap();
    assert!(fs::read(&path).unwrap().is_empty());
}

#[test]
fn single_detection_line() {
    let frames = detections_from_str("1,-1,10,20,30,40,0.9,-1,-1,-1\n").unwrap();
    assert_eq!(frames.len(), 1);
    let d = &frames[0].detections()[0];
    assert_eq!((frames[0].frame(), d.bbox, d.score()), (1, BoundingBox::new(10.0, 20.0, 30.0, 40.0).unwrap(), 0.9));
}

#[test]
fn malformed_lines_report_their_number() {
    for (text, line) in [
        ("1,-1,10,20,30,40,0.9,-1,-1,-1\n1,-1,10,20,30\n", 2),
        ("1,-1,10,20,30,40,0.9,-1,-1,-1\n\n2,-1,10,20,0,40,0.9,-1,-1,-1\n", 3),
        ("x,-1,10,20,30,40,0.9,-1,-1,-1\n", 1),
    ] {
        match detections_from_str(text) {
            Err(Error::Parse { line: got, .. }) => assert_eq!(got, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn missing_file_names_the_path() {
    let err = read_detections(Path::new("/nonexistent/det.txt")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/det.txt"));
}

#[test]
fn config_round_trips_every_mode() {
    for mode in [FusionMode::Gate, FusionMode::Weighted, FusionMode::Eq4Literal, FusionMode::IouOnly] {
        let cfg = TrackerConfig { fusion_mode: mode, alpha: 0.3, lost_ttl: 12, stage2_appearance: true, ..Default::default() };
        assert_eq!(parse_config(&config_to_string(&cfg)).unwrap(), cfg);
    }
}

#[test]
fn params_archive_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    let params = AttentionParams::seeded(8, 8, 128, 4);
    save_params(&params, &path).unwrap();
    assert_eq!(load_params(&path).unwrap(), params);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generated_files_round_trip(seed in any::<u64>(), ids in 1usize..6, rendered in any::<bool>()) {
        let spec = random_scenario(&RandomScenarioParams {
            identities: ids,
            frames: 30,
            seed,
            staggered: true,
            appearance_source: if rendered { AppearanceSource::Rendered } else { AppearanceSource::Vector },
            ..Default::default()
        });
        let s = generate_scenario(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = |n: &str| dir.path().join(n);

        write_records(&detection_records(&s.frames), &p("det.txt")).unwrap();
        write_records(&ground_truth_records(&s.ground_truth), &p("gt.txt")).unwrap();
        write_embeddings(&s.frames, &p("emb.txt")).unwrap();

        let mut frames = read_detections(&p("det.txt")).unwrap();
        let table = parse_embeddings(&fs::read_to_string(p("emb.txt")).unwrap()).unwrap();
        attach_embeddings(&mut frames, table).unwrap();
        let kept: Vec<_> = s.frames.iter().filter(|f| !f.is_empty()).cloned().collect();
        prop_assert_eq!(&frames, &kept);
        prop_assert_eq!(embeddings_to_string(&frames), fs::read_to_string(p("emb.txt")).unwrap());

        let mut gt = read_ground_truth(&p("gt.txt")).unwrap();
        let mut want = s.ground_truth.clone();
        gt.sort_by_key(|e| (e.frame, e.id));
        want.sort_by_key(|e| (e.frame, e.id));
        prop_assert_eq!(gt, want);

        let results = run_sequence(&s.frames, &TrackerConfig::default()).unwrap();
        let text = records_to_string(&result_records(&results));
        let parsed = parse_mot_str(&text).unwrap();
        prop_assert_eq!(records_to_string(&parsed), text);
        let back = ground_truth_from_records(&parsed).unwrap();
        prop_assert_eq!(back.len(), results.len());
    }
}
