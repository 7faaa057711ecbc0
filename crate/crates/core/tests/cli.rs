mod common;

use std::fs;

use common::{regrad, without_timing};
use regrad::pipeline::run;
use regrad::report::{exit, Report, TaskStatus};
use regrad::scenario::{parse_scenario, Task};
use tempfile::tempdir;

fn stdout(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn exit_codes_follow_the_verdicts() {
    let dir = tempdir().unwrap();
    for (name, code) in [
        ("quadratic-counterexample", exit::NEGATIVE),
        ("linear-baseline", exit::SUCCESS),
        ("product-combinator", exit::SUCCESS),
        ("nonassociative-combinator", exit::NEGATIVE),
    ] {
        let o = regrad(&["run", name], dir.path());
        assert_eq!(o.status.code(), Some(code), "{name}: {}", stdout(&o));
    }
}

#[test]
fn malformed_files_exit_with_an_error() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{\"slits\": [\"a\", \"a'\"],").unwrap();
    let o = regrad(&["run", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(exit::ERROR));
    assert!(stderr(&o).starts_with("error:"), "{}", stderr(&o));

    let o = regrad(&["run", "no-such-scenario"], dir.path());
    assert_eq!(o.status.code(), Some(exit::ERROR));
    assert!(stderr(&o).contains("no-such-scenario"));
}

#[test]
fn missing_prerequisite_is_reported() {
    let dir = tempdir().unwrap();
    let text = r#"{
        "slits": ["a", "a'"],
        "theory": {"kind": "linear"},
        "sampler": {"kind": "real_uniform", "seed": 1, "lo": -1, "hi": 1},
        "tasks": ["combinator"]
    }"#;
    fs::write(dir.path().join("s.json"), text).unwrap();
    let o = regrad(&["run", "s.json"], dir.path());
    assert_eq!(o.status.code(), Some(exit::ERROR));
    let err = stderr(&o);
    assert!(err.contains("combinator") && err.contains("representation"), "{err}");
}

#[test]
fn overrides_reach_the_echoed_scenario() {
    let dir = tempdir().unwrap();
    let o = regrad(
        &[
            "run",
            "linear-baseline",
            "--format",
            "json",
            "--seed",
            "99",
            "--tol",
            "representation=1e-7",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(exit::SUCCESS));
    let report = Report::from_json(&stdout(&o)).unwrap();
    assert_eq!(report.scenario.sampler.seed(), Some(99));
    assert_eq!(report.scenario.tolerances["representation"], 1e-7);

    let o = regrad(&["run", "linear-baseline", "--tol", "bogus=1"], dir.path());
    assert_eq!(o.status.code(), Some(exit::ERROR));
    let o = regrad(&["run", "linear-baseline", "--tol", "representation=-1"], dir.path());
    assert_eq!(o.status.code(), Some(exit::ERROR));
    let o = regrad(&["run", "linear-baseline", "--tol", "representation"], dir.path());
    assert_eq!(o.status.code(), Some(exit::ERROR));
}

#[test]
fn exported_fixtures_run_from_disk() {
    let dir = tempdir().unwrap();
    let o = regrad(&["fixtures", "--export", "out"], dir.path());
    assert_eq!(o.status.code(), Some(exit::SUCCESS));
    let listing = stdout(&o);
    assert_eq!(listing.lines().count(), 4);
    let exported = dir.path().join("out/quadratic-counterexample.json");
    assert!(exported.exists());
    let o = regrad(&["run", exported.to_str().unwrap(), "--format", "json"], dir.path());
    let from_disk = stdout(&o);
    let o = regrad(&["run", "quadratic-counterexample.json", "--format", "json"], dir.path());
    assert_eq!(without_timing(&from_disk), without_timing(&stdout(&o)));
}

#[test]
fn out_flag_writes_the_report_and_prints_the_headline() {
    let dir = tempdir().unwrap();
    let o = regrad(
        &["run", "nonassociative-combinator", "--format", "json", "--out", "r.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(exit::NEGATIVE));
    let written = fs::read_to_string(dir.path().join("r.json")).unwrap();
    let report = Report::from_json(&written).unwrap();
    assert_eq!(stdout(&o).trim(), report.headline);
    assert!(report.headline.contains("NOT ASSOCIATIVE"));
}

#[test]
fn json_reports_round_trip() {
    for name in ["quadratic-counterexample", "product-combinator"] {
        let f = regrad::fixtures::fixture(name).unwrap();
        let report = run(&parse_scenario(f.json).unwrap());
        let back = Report::from_json(&report.to_json()).unwrap();
        assert_eq!(back, report, "{name}");
    }
}

#[test]
fn empty_task_list_gives_an_empty_report() {
    let s = parse_scenario(
        r#"{
        "slits": ["a", "a'"],
        "theory": {"kind": "quadratic"},
        "sampler": {"kind": "complex_gaussian", "seed": 3, "sigma": 1},
        "tasks": []
    }"#,
    )
    .unwrap();
    let report = run(&s);
    assert!(report.tasks.is_empty());
    assert_eq!(report.headline, "NO TASKS");
    assert_eq!(report.exit_code(), exit::SUCCESS);
    assert_eq!(Report::from_json(&report.to_json()).unwrap(), report);
}

#[test]
fn text_report_shows_witness_and_forcing_equations() {
    let dir = tempdir().unwrap();
    let o = regrad(&["run", "quadratic-counterexample"], dir.path());
    let text = stdout(&o);
    assert!(text.starts_with("NOT A REPRESENTATION"));
    assert!(text.contains("state (a=1, a'=1): φ(a) = 1, φ(a') = 1, φ(a ∨ a') = 4"));
    assert!(text.contains("state (a=1, a'=-1): φ(a) = 1, φ(a') = 1, φ(a ∨ a') = 0"));
    assert!(text.contains("ξ(4) = 2ξ(1)"));
    assert!(text.contains("ξ(0) = 2ξ(1)"));
}

#[test]
fn verify_witness_accepts_genuine_and_rejects_tampered_reports() {
    let dir = tempdir().unwrap();
    let o = regrad(
        &["run", "quadratic-counterexample", "--format", "json", "--out", "r.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(exit::NEGATIVE));
    let o = regrad(&["verify-witness", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(exit::SUCCESS), "{}", stdout(&o));
    assert!(stdout(&o).contains("VALID"));

    let text = fs::read_to_string(dir.path().join("r.json")).unwrap();
    let mut report = Report::from_json(&text).unwrap();
    let entry = report.tasks.iter_mut().find(|t| t.task == Task::Representation).unwrap();
    let Some(regrad::report::Payload::Representation(p)) = entry.payload.as_mut() else {
        panic!("representation payload");
    };
    let w = p.witness.as_mut().unwrap();
    // claim the second state also gives 4: the recomputation disagrees
    w.second.phi.joint.re = 4.0;
    fs::write(dir.path().join("t.json"), report.to_json()).unwrap();
    let o = regrad(&["verify-witness", "t.json"], dir.path());
    assert_eq!(o.status.code(), Some(exit::NEGATIVE));
    assert!(stdout(&o).contains("INVALID"));

    let o = regrad(&["verify-witness", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(exit::ERROR));
}

#[test]
fn worst_triple_is_rechecked() {
    let dir = tempdir().unwrap();
    regrad(
        &["run", "nonassociative-combinator", "--format", "json", "--out", "r.json"],
        dir.path(),
    );
    let o = regrad(&["verify-witness", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(exit::SUCCESS), "{}", stdout(&o));
    assert!(stdout(&o).contains("worst triple VALID"));
}

#[test]
fn cubic_theory_witness_survives_verification() {
    let s = parse_scenario(
        r#"{
        "slits": ["a", "a'"],
        "theory": {"kind": "power", "p": 3},
        "sampler": {"kind": "complex_gaussian", "seed": 8, "sigma": 1},
        "tasks": ["representation"]
    }"#,
    )
    .unwrap();
    let report = run(&s);
    assert_eq!(report.task(Task::Representation).unwrap().status, TaskStatus::Fail);
    let checks = regrad::verify::verify_report(&report);
    assert_eq!(checks.len(), 1);
    assert!(checks[0].valid, "{}", checks[0].detail);
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempdir().unwrap();
    let args = ["run", "product-combinator", "--format", "json"];
    let first = stdout(&regrad(&args, dir.path()));
    let second = stdout(&regrad(&args, dir.path()));
    assert_eq!(without_timing(&first), without_timing(&second));
}
