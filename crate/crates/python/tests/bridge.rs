use conceptpref::domain::Choice;
use conceptpref::runner::SessionResult;
use conceptpref::theory::{Strategy, ValidationReport};
use conceptpref_py::bridge;

const SESSION: &str = r#"{"env": {"kind": "home_grid"}, "instruction_id": "clear-02", "method": "maple_top", "budget": 2, "seed": 4}"#;

#[test]
fn names_parse() {
    assert_eq!(bridge::strategy("oaqs").unwrap(), Strategy::Oaqs);
    assert!(bridge::strategy("best").is_err());
    assert_eq!(bridge::choice("second").unwrap(), Some(Choice::Second));
    assert_eq!(bridge::choice("skip").unwrap(), None);
    assert!(bridge::choice("both").is_err());
}

#[test]
fn session_json_round_trips_deterministically() {
    let a = bridge::run_session_json(SESSION).unwrap();
    assert_eq!(a, bridge::run_session_json(SESSION).unwrap());
    let r: SessionResult = serde_json::from_str(&a).unwrap();
    assert_eq!(r.records.len(), 2);
    assert!(bridge::run_session_json("{}").is_err());
}

#[test]
fn interactive_session_matches_the_json_runner_wiring() {
    let mut s = bridge::start_session_json(SESSION, None).unwrap();
    let q = s.next_query().unwrap();
    let r: SessionResult = serde_json::from_str(&bridge::run_session_json(SESSION).unwrap()).unwrap();
    assert_eq!(q.query, r.records[0].query);
    let free = r#"{"env": {"kind": "routing"}, "method": "brex", "budget": 1}"#;
    assert!(bridge::start_session_json(free, None).is_err());
    assert!(bridge::start_session_json(free, Some("Go fast.".into())).is_ok());
}

#[test]
fn theory_report_from_a_small_grid() {
    let grid = r#"{"aqsr": [0.5], "y0": [0.6], "y1": [0.8], "k": [2], "n_queries": 10, "strategies": ["oaqs"], "measures": ["qsr"]}"#;
    let r: ValidationReport = serde_json::from_str(&bridge::validate_theory_json(grid, 5000, 1).unwrap()).unwrap();
    assert_eq!(r.cells.len(), 1);
    assert!(r.cells[0].z <= 4.0);
}
