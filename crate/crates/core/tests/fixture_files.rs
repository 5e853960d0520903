//! The sample files under `data/` stay in sync with the built-in generators.
//! Set `COSMOS_BLESS=1` to rewrite them.

use std::fs;
use std::path::PathBuf;

use cosmos_core::harness::fixtures::{daily_routine, routine_user};
use cosmos_core::harness::{ScenarioScript, UserModel};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn check(name: &str, expected: &str) {
    let path = data(name);
    if std::env::var_os("COSMOS_BLESS").is_some() {
        fs::write(&path, expected).unwrap();
    }
    let actual = fs::read_to_string(&path).unwrap();
    assert_eq!(
        actual,
        expected,
        "{} is stale; rerun with COSMOS_BLESS=1",
        path.display()
    );
}

#[test]
fn routine_scenario_file_matches_generator() {
    let script = daily_routine(10, 7);
    let mut text = String::from("# ten days of the built-in routine, one tick per hour from 05:00 UTC\n");
    text.push_str(&script.to_text());
    check("routine.scenario", &text);
    assert_eq!(ScenarioScript::parse(&text).unwrap(), script);
}

#[test]
fn routine_user_file_matches_generator() {
    let user = routine_user(0.0).unwrap();
    let mut text = String::from("# preferences behind routine.scenario; first matching rule wins\n");
    text.push_str(&user.to_text());
    check("routine.user", &text);
    assert_eq!(UserModel::parse(&text).unwrap(), user);
}
