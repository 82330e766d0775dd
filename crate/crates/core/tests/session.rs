use std::path::{Path, PathBuf};

use wrangle::registry::Bindings;
use wrangle::{Error, ReplayScript, Session, Settings, Status};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn toy() -> Session {
    let b: Bindings = vec![
        ("input".into(), fixture("toy_input.csv")),
        ("reference".into(), fixture("toy_reference.csv")),
    ];
    Session::init("datadiff", b, Settings::default()).unwrap()
}

#[test]
fn selection_follows_the_cached_choice_list() {
    let mut s = toy();
    assert!(matches!(s.select(0), Err(Error::StaleChoice)));
    let next = s.step().unwrap().choices[0].next.clone();
    s.select_at(0, Some(0)).unwrap();
    assert_eq!(s.constraints(), next.as_slice());
    assert_eq!(s.revision(), 1);
    s.step().unwrap();
    assert!(matches!(s.select_at(0, Some(0)), Err(Error::StaleChoice)));
    let n = s.step().unwrap().choices.len();
    assert!(matches!(s.select(n), Err(Error::ChoiceOutOfRange { .. })));
}

#[test]
fn constrain_is_idempotent_and_transactional() {
    let mut s = toy();
    s.constrain("notransform(City)").unwrap();
    s.constrain("notransform(2)").unwrap();
    assert_eq!(s.constraints(), ["notransform(2)"]);
    assert_eq!(s.revision(), 1);
    assert!(s.constrain("explode(1)").is_err());
    assert!(s.constrain("match(9,9)").is_err());
    assert_eq!(s.constraints(), ["notransform(2)"]);
    assert_eq!(s.revision(), 1);
}

#[test]
fn accept_freezes_the_session() {
    let mut s = toy();
    assert!(matches!(s.accept(), Err(Error::NoRecommendation)));
    s.step().unwrap();
    let r = s.accept().unwrap();
    assert_eq!(
        r.script_text,
        "delete(3)\npermute((1,2),(2,1))\nrecode(2,[Cardiff->London])\n"
    );
    assert_eq!(s.status(), Status::Accepted);
    assert_eq!(s.result(), Some(&r));
    assert!(matches!(s.step(), Err(Error::SessionAccepted)));
    assert!(matches!(s.constrain("notransform(1)"), Err(Error::SessionAccepted)));
}

#[test]
fn replay_rebuilds_the_same_session() {
    let mut s = toy();
    s.constrain("notransform(2)").unwrap();
    s.select_at(0, None).unwrap();
    let script = s.replay_script();
    let json = script.to_json();
    let back = ReplayScript::from_json(&json).unwrap();
    assert_eq!(back, script);
    let mut r = Session::from_replay(&back).unwrap();
    assert_eq!(r.constraints(), s.constraints());
    assert_eq!(r.step().unwrap().script, s.step().unwrap().script);
    assert!(ReplayScript::from_json("{\"assistant\": 3}").is_err());
}

#[test]
fn settings_select_the_column() {
    let b: Bindings = vec![("input".into(), fixture("aviation.csv"))];
    let settings = Settings {
        column: Some("c_geo".into()),
        ..Settings::default()
    };
    let mut s = Session::init("ptype", b, settings.clone()).unwrap();
    assert!(s.step().unwrap().script.join(" ").contains("string"));
    assert_eq!(s.replay_script().settings, settings);
}
