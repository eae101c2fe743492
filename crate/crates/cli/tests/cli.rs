use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use ssdkit_cli::report::{to_csv, to_json, Metric};
use ssdkit_cli::scenario::Scenario;
use ssdkit_cli::suite::{parse_all, SCENARIOS};
use ssdkit_cli::{run_path, run_scenario, Report, RunOptions, Status, VERBS};

fn run_text(text: &str) -> Report {
    run_scenario(&Scenario::parse(text).unwrap(), "inline", &RunOptions::default()).unwrap()
}

fn bundled(name: &str) -> Scenario {
    parse_all().unwrap().into_iter().find(|(n, _)| *n == name).unwrap().1
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ssdkit"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn every_verb_is_exercised_by_the_suite() {
    let used: BTreeSet<&str> =
        parse_all().unwrap().iter().flat_map(|(_, s)| s.tasks.iter().map(|t| t.kind.verb())).collect();
    let all: BTreeSet<&str> = VERBS.into_iter().collect();
    assert_eq!(all.len(), 13);
    assert_eq!(used, all);
}

/// Each library operation and the verb or object descriptor that reaches it.
const COVERAGE: &[(&str, &str)] = &[
    ("pair", "conjugate-eval"),
    ("qform", "fitzpatrick-eval"),
    ("iota", "conjugate-eval"),
    ("norm", "decompose"),
    ("reflect1", "rho1"),
    ("reflect2", "rho2"),
    ("is_q_positive", "check-qpositive"),
    ("q_defect", "fitzpatrick-eval"),
    ("fitzpatrick", "fitzpatrick-eval"),
    ("eval", "episum-eval"),
    ("conjugate", "conjugate"),
    ("intrinsic_conjugate", "intrinsic-conjugate"),
    ("translate", "translated"),
    ("compose_reflection", "reflected"),
    ("certify_bc", "certify-bc"),
    ("certify_tbc", "certify-tbc"),
    ("pq_membership", "decompose"),
    ("nq_membership", "decompose"),
    ("partial_episum", "episum-eval"),
    ("posneg_decompose", "decompose"),
    ("maximality_check", "check-maximal"),
    ("minnorm_surjectivity", "minnorm"),
    ("graph_as_pointset", "graph"),
    ("fitzpatrick_op", "fitzpatrick"),
    ("duality_map", "surjectivity"),
    ("surjectivity_solve", "surjectivity"),
    ("sum_check", "sum-check"),
    ("sum_surjectivity", "sum-surjectivity"),
    ("hammerstein_solve", "hammerstein"),
];

#[test]
fn every_operation_is_reachable_from_the_suite() {
    let text: String = SCENARIOS.iter().map(|(_, t)| *t).collect::<Vec<_>>().join("\n");
    for (op, via) in COVERAGE {
        let as_verb = format!("verb = \"{via}\"");
        let as_descriptor = format!("\n{via} = ");
        let as_value = format!("\"{via}\"");
        assert!(
            text.contains(&as_verb) || text.contains(&as_descriptor) || text.contains(&as_value),
            "{op}: no bundled scenario uses `{via}`"
        );
    }
}

#[test]
fn runs_are_deterministic() {
    let sc = bundled("decomposition");
    let a = to_json(&run_scenario(&sc, "d", &RunOptions::default()).unwrap());
    let b = to_json(&run_scenario(&sc, "d", &RunOptions::default()).unwrap());
    assert_eq!(a, b);
    // the seed reaches the sampled probes
    let c = run_scenario(&sc, "d", &RunOptions { seed: Some(7), ..Default::default() }).unwrap();
    assert_eq!(c.seed, 7);
}

#[test]
fn json_round_trip_is_exact() {
    for name in ["conjugation", "spaces"] {
        let report = run_scenario(&bundled(name), name, &RunOptions::default()).unwrap();
        let text = to_json(&report);
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(to_json(&back), text);
    }
    // non-finite values survive as strings
    let r = run_scenario(&bundled("conjugation"), "c", &RunOptions::default()).unwrap();
    let values = &r.tasks[0].metrics["values"];
    let Metric::Vec(v) = values else { panic!("{values:?}") };
    assert_eq!(v[5].0, f64::INFINITY);
    assert!(to_json(&r).contains("\"inf\""));
}

#[test]
fn empty_task_list_passes() {
    let r = run_text("space = { kind = \"hilbert\", dim = 2 }\n");
    assert!(r.tasks.is_empty());
    assert_eq!(r.summary.exit_code(), 0);
}

#[test]
fn half_pitch_helix_fails_with_a_witness() {
    let r = run_text(
        r#"
space = { kind = "triple" }
[sets.h]
helix = { lambda = 0.5, theta = { lo = -6.283185307179586, hi = 6.283185307179586, n = 80 } }
[[tasks]]
id = "helix"
verb = "check-qpositive"
set = "h"
"#,
    );
    let t = &r.tasks[0];
    assert_eq!(t.status, Status::Fail);
    let failure = t.failure.as_ref().unwrap();
    let Metric::Num(observed) = failure.observed else { panic!() };
    assert!(observed.0 < 0.0);
    // the recorded pair really violates q-positivity: q(a − b) = d1 d2 + ½ d3²
    let get = |k: &str| match &t.metrics[k] {
        Metric::Vec(v) => v.iter().map(|n| n.0).collect::<Vec<_>>(),
        other => panic!("{other:?}"),
    };
    let (a, b) = (get("witness_a"), get("witness_b"));
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let q = d[0] * d[1] + 0.5 * d[2] * d[2];
    assert!(q < -1e-10);
    assert_eq!(q, observed.0);
    assert_eq!(r.summary.exit_code(), 1);
}

#[test]
fn soft_threshold_surjectivity_passes() {
    let r = run_text(
        r#"
space = { kind = "product", n = 1 }
[functions.abs]
abs = {}
[operators.s]
subdiff = { function = "abs" }
[[tasks]]
id = "y2"
verb = "surjectivity"
operator = "s"
y-star = [2.0]
expect-x = [1.0]
"#,
    );
    let t = &r.tasks[0];
    assert_eq!(t.status, Status::Pass, "{t:?}");
    assert_eq!(t.metrics["x"], Metric::from(vec![1.0]));
}

#[test]
fn csv_rows_and_columns() {
    let sc = bundled("minnorm");
    let r = run_scenario(&sc, "minnorm", &RunOptions::default()).unwrap();
    let text = to_csv(&[&r]).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    for col in ["scenario", "status", "lhs", "rhs", "abs_diff"] {
        assert!(header.contains(&col.to_string()), "{header:?}");
    }
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for row in &rows {
        assert_eq!(&row[col("status")], "pass");
        let lhs: f64 = row[col("lhs")].parse().unwrap();
        let rhs: f64 = row[col("rhs")].parse().unwrap();
        let diff: f64 = row[col("abs_diff")].parse().unwrap();
        assert_eq!(diff, (lhs - rhs).abs());
    }
    assert_eq!(&rows[0][col("lhs")], "0.5");
}

#[test]
fn schema_errors_are_reported() {
    let bad_verb = "space = { kind = \"triple\" }\n[[tasks]]\nid = \"a\"\nverb = \"no-such-verb\"\n";
    let e = Scenario::parse(bad_verb).unwrap_err().to_string();
    assert!(e.contains("line 2"), "{e}");

    let unknown_ref = "space = { kind = \"triple\" }\n[[tasks]]\nid = \"a\"\nverb = \"certify-bc\"\nfunction = \"f\"\n";
    let e = run_scenario(&Scenario::parse(unknown_ref).unwrap(), "x", &RunOptions::default()).unwrap_err();
    assert!(e.to_string().contains("functions.f"), "{e}");

    let cycle = r#"
space = { kind = "product", n = 1 }
[functions.a]
sum = { parts = ["b"] }
[functions.b]
fitzpatrick = { operator = "s" }
[operators.s]
subdiff = { function = "a" }
"#;
    let e = run_scenario(&Scenario::parse(cycle).unwrap(), "x", &RunOptions::default()).unwrap_err();
    assert!(e.to_string().contains("cycle"), "{e}");
}

#[test]
fn library_errors_fail_the_task_and_the_run_continues() {
    let r = run_text(
        r#"
space = { kind = "product", n = 1 }
[operators.bad]
graph = { points = [[0.0, 1.0], [1.0, 0.0]] }
[operators.good]
identity = { n = 1 }
[[tasks]]
id = "not-monotone"
verb = "surjectivity"
operator = "bad"
y-star = [1.0]
[[tasks]]
id = "fine"
verb = "surjectivity"
operator = "good"
y-star = [1.0]
expect-x = [0.5]
"#,
    );
    assert_eq!(r.tasks[0].status, Status::Fail);
    assert!(r.tasks[0].failure.as_ref().unwrap().observed.to_string().contains("monotone"));
    assert_eq!(r.tasks[1].status, Status::Pass);
}

const SPLIT: &str = r#"
space = { kind = "product", n = 1 }
[functions.abs]
abs = {}
[operators.abs]
subdiff = { function = "abs" }
[functions.phi]
fitzpatrick = { operator = "abs" }
[functions.g0]
g0 = {}
[solver]
restarts = 0
[[tasks]]
id = "split"
verb = "decompose"
f = "phi"
g = "g0"
c = [3.0, 0.5]
"#;

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let pass = write(dir.path(), "pass.toml", SPLIT);
    let fail = write(
        dir.path(),
        "fail.toml",
        "space = { kind = \"antihilbert\", dim = 1 }\n[sets.s]\npoints = { points = [[0.0], [1.0]] }\n\
         [[tasks]]\nid = \"a\"\nverb = \"check-qpositive\"\nset = \"s\"\n",
    );
    let broken = write(dir.path(), "broken.toml", "space = 3\n");
    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code().unwrap();
    let p = pass.to_str().unwrap();
    assert_eq!(code(&["run", p]), 0);
    assert_eq!(code(&["run", fail.to_str().unwrap()]), 1);
    // one iteration cannot reach the tolerance
    assert_eq!(code(&["run", p, "--max-iters", "1"]), 2);
    assert_eq!(code(&["run", broken.to_str().unwrap()]), 3);
    assert_eq!(code(&["run", "/nonexistent/x.toml"]), 3);
    assert_eq!(code(&["run", p, "--format", "xml"]), 3);
    assert_eq!(code(&["run"]), 3);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
}

#[test]
fn flags_reach_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "s.toml", SPLIT);
    let out = dir.path().join("r.json");
    let status = bin()
        .args(["run", path.to_str().unwrap(), "--seed", "11", "--tol", "1e-3", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let r: Report = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r.seed, 11);
    assert_eq!(r.scenario, "s");
    let coarse = r.tasks[0].metrics["iterations"].as_f64().unwrap();
    let fine = run_path(&path, &RunOptions::default()).unwrap().tasks[0].metrics["iterations"].as_f64().unwrap();
    assert!(coarse <= fine);
    assert!(r.tasks[0].wall_ms.is_none());

    let csv_out = bin().args(["run", path.to_str().unwrap(), "--format", "csv", "--timings"]).output().unwrap();
    let text = String::from_utf8(csv_out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("scenario,id,verb,status") && header.ends_with("wall_ms"), "{header}");
    assert!(text.lines().nth(1).unwrap().starts_with("s,split,decompose,pass"));
}
