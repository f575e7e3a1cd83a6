mod common;

use std::fs;

use glint_core::analysis::{bias_index, read_ratings_csv};
use glint_exprig::{parse_submission, Catalog, ExpError, Experiment, Submission};
use tempfile::TempDir;

fn experiment(dir: &TempDir) -> Experiment {
    Experiment::open(Catalog::new(common::design()).unwrap(), dir.path().join("log.ndjson")).unwrap()
}

fn sub(id: &str, r: [f64; 4]) -> Submission {
    Submission {
        stimulus_id: id.into(),
        metal: r[0],
        shiny_black: r[1],
        shiny_white: r[2],
        other: r[3],
    }
}

fn current(exp: &Experiment, session: u64) -> String {
    exp.next_trial(session).unwrap().unwrap().stimulus_id
}

#[test]
fn catalog_must_hold_exactly_75_unique_stimuli() {
    let mut entries = common::design();
    assert_eq!(Catalog::new(entries.clone()).unwrap().len(), 75);
    entries.pop();
    assert!(matches!(Catalog::new(entries.clone()), Err(ExpError::Catalog(_))));
    entries.push(entries[0].clone());
    assert!(matches!(Catalog::new(entries), Err(ExpError::Catalog(_))));
}

#[test]
fn same_seed_gives_same_order() {
    let dir = TempDir::new().unwrap();
    let exp = experiment(&dir);
    let a = exp.start_session("ann", 1, 42).unwrap();
    let b = exp.start_session("bob", 1, 42).unwrap();
    let c = exp.start_session("cat", 1, 43).unwrap();
    assert_eq!(a.order, b.order);
    assert_ne!(a.order, c.order);
    assert_eq!((a.cursor, a.completed()), (0, false));
    let mut sorted = a.order.clone();
    sorted.sort();
    let mut ids: Vec<_> = common::design().into_iter().map(|e| e.id).collect();
    ids.sort();
    assert_eq!(sorted, ids);
}

#[test]
fn duplicate_observer_session_conflicts() {
    let dir = TempDir::new().unwrap();
    let exp = experiment(&dir);
    exp.start_session("ann", 1, 1).unwrap();
    assert!(matches!(exp.start_session("ann", 1, 2), Err(ExpError::Conflict(_))));
    exp.start_session("ann", 2, 1).unwrap();
    assert!(matches!(exp.start_session("ann", 3, 1), Err(ExpError::BadRequest(_))));
}

#[test]
fn trial_is_stable_until_accepted() {
    let dir = TempDir::new().unwrap();
    let exp = experiment(&dir);
    let s = exp.start_session("ann", 1, 7).unwrap();
    let first = exp.next_trial(s.id).unwrap().unwrap();
    assert_eq!(first.stimulus_id, s.order[0]);
    assert_eq!(exp.next_trial(s.id).unwrap().unwrap(), first);

    let err = exp.submit(s.id, &sub(&first.stimulus_id, [30.0, 50.0, 15.0, 10.0])).unwrap_err();
    assert!(matches!(err, ExpError::Validation { sum } if sum == 105.0));
    assert_eq!(exp.next_trial(s.id).unwrap().unwrap(), first);

    let err = exp.submit(s.id, &sub(&s.order[1], [25.0; 4])).unwrap_err();
    assert!(matches!(err, ExpError::OutOfOrder { .. }));

    exp.submit(s.id, &sub(&first.stimulus_id, [30.0, 50.0, 15.0, 5.0])).unwrap();
    let err = exp.submit(s.id, &sub(&first.stimulus_id, [30.0, 50.0, 15.0, 5.0])).unwrap_err();
    assert!(matches!(err, ExpError::AlreadyRecorded(_)));
    assert_eq!(current(&exp, s.id), s.order[1]);
    assert!(matches!(exp.next_trial(99), Err(ExpError::UnknownSession(99))));
}

#[test]
fn completed_session_has_one_record_per_stimulus() {
    let dir = TempDir::new().unwrap();
    let exp = experiment(&dir);
    let s = exp.start_session("ann", 1, 3).unwrap();
    for i in 0..75 {
        let id = current(&exp, s.id);
        let m = (i % 5) as f64 * 20.0;
        exp.submit(s.id, &sub(&id, [m, 100.0 - m, 0.0, 0.0])).unwrap();
    }
    assert!(exp.next_trial(s.id).unwrap().is_none());
    assert!(exp.session(s.id).unwrap().completed());
    let err = exp.submit(s.id, &sub("nope", [25.0; 4])).unwrap_err();
    assert!(matches!(err, ExpError::OutOfOrder { expected: None, .. }));

    let records = exp.records();
    assert_eq!(records.len(), 75);
    let mut seen: Vec<_> = records.iter().map(|r| r.stimulus.clone()).collect();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 75);
}

#[test]
fn log_replay_restores_state() {
    let dir = TempDir::new().unwrap();
    let (order, id) = {
        let exp = experiment(&dir);
        let s = exp.start_session("ann", 1, 11).unwrap();
        for _ in 0..10 {
            let id = current(&exp, s.id);
            exp.submit(s.id, &sub(&id, [40.0, 40.0, 10.0, 10.0])).unwrap();
        }
        (s.order, s.id)
    };
    let exp = experiment(&dir);
    let s = exp.session(id).unwrap();
    assert_eq!(s.order, order);
    assert_eq!(s.cursor, 10);
    assert_eq!(exp.records().len(), 10);
    assert!(matches!(exp.start_session("ann", 1, 0), Err(ExpError::Conflict(_))));
    assert_eq!(exp.start_session("bob", 1, 0).unwrap().id, id + 1);
}

#[test]
fn torn_final_line_is_discarded() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("log.ndjson");
    {
        let exp = experiment(&dir);
        let s = exp.start_session("ann", 1, 5).unwrap();
        let id = current(&exp, s.id);
        exp.submit(s.id, &sub(&id, [25.0; 4])).unwrap();
    }
    let mut bytes = fs::read(&path).unwrap();
    let good = bytes.len();
    bytes.extend_from_slice(br#"{"event":"rating","session_id":1,"tri"#);
    fs::write(&path, &bytes).unwrap();

    let exp = experiment(&dir);
    assert_eq!(exp.records().len(), 1);
    assert_eq!(fs::metadata(&path).unwrap().len() as usize, good);
    let id = current(&exp, 1);
    exp.submit(1, &sub(&id, [25.0; 4])).unwrap();
    drop(exp);
    assert_eq!(experiment(&dir).records().len(), 2);
}

#[test]
fn corrupt_log_is_refused() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("log.ndjson"), "{\"event\":\"rating\",\"session_id\":4}\n").unwrap();
    let err = Experiment::open(Catalog::new(common::design()).unwrap(), dir.path().join("log.ndjson")).unwrap_err();
    assert!(matches!(err, ExpError::Log(_)));
}

#[test]
fn export_round_trips_through_ingest() {
    let dir = TempDir::new().unwrap();
    let exp = experiment(&dir);
    let empty = String::from_utf8(exp.export_csv().unwrap()).unwrap();
    assert_eq!(empty.lines().count(), 1);

    for (obs, seed) in [("ann", 1u64), ("bob", 2)] {
        let s = exp.start_session(obs, 1, seed).unwrap();
        for k in 0..75 {
            let id = current(&exp, s.id);
            let a = (k * 7 % 60) as f64 + 0.5;
            exp.submit(s.id, &sub(&id, [a, 60.0 - a, 30.0, 10.0])).unwrap();
        }
    }
    let csv = exp.export_csv().unwrap();
    let back = read_ratings_csv(csv.as_slice()).unwrap();
    assert_eq!(back, exp.records());
    assert_eq!(back.len(), 150);
    for map in common::MAPS {
        assert!(bias_index(&back, map).unwrap() > 0.0);
    }
}

#[test]
fn submission_parsing() {
    let ok = parse_submission(br#"{"stimulus_id":"a\"b","metal":30,"shiny_black":50,"shiny_white":15,"other":5}"#).unwrap();
    assert_eq!(ok.stimulus_id, "a\"b");
    let err = parse_submission(br#"{"stimulus_id":"a","metal":30,"shiny_black":50,"shiny_white":15,"other":10}"#);
    assert!(matches!(err, Err(ExpError::Validation { sum }) if sum == 105.0));
    let err = parse_submission(br#"{"stimulus_id":"a","metal":-10,"shiny_black":50,"shiny_white":50,"other":10}"#);
    assert!(matches!(err, Err(ExpError::Validation { .. })));
    assert!(matches!(parse_submission(b"{}"), Err(ExpError::BadRequest(_))));
}
