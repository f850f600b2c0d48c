use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn beepnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beepnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in {out}"))
        .to_string()
}

#[test]
fn amplify_example() {
    let o = beepnet(&["oracle", "amplify", "--c", "2", "--p", "0.5", "--q", "1", "--n", "16"]);
    assert_eq!(o.status.code(), Some(0));
    let rounds: f64 = field(&stdout(&o), "rounds").parse().unwrap();
    assert!((rounds - 22.18).abs() < 0.01, "{rounds}");
}

#[test]
fn amplify_domain_error() {
    let o = beepnet(&["oracle", "amplify", "--c", "2", "--p", "0", "--q", "1", "--n", "16"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ballsbins_gate() {
    let o = beepnet(&["oracle", "ballsbins", "--m", "12", "--n", "12", "--trials", "20000"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let p: f64 = field(&out, "P[Z > m/4]").parse().unwrap();
    let e: f64 = field(&out, "E[Z]").parse().unwrap();
    assert!(p > 0.5);
    assert!(e > 6.0);
    assert_eq!(field(&out, "passed"), "true");
}

#[test]
fn lowerbound_report() {
    let o = beepnet(&["oracle", "lowerbound", "--k", "16", "--slots", "8", "--trials", "10000"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(field(&out, "horizon"), "4");
    let rate: f64 = field(&out, "same_action_rate").parse().unwrap();
    assert!((rate - 0.5).abs() < 0.02);
    let shared = beepnet(&["oracle", "lowerbound", "--k", "16", "--slots", "8", "--trials", "200", "--shared"]);
    assert_eq!(field(&stdout(&shared), "divergences"), "0");
}

#[test]
fn kappa_below_four_over_eta_is_rejected() {
    let o = beepnet(&["static", "--kappa", "32", "--graph", "clique:4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kappa"));
}

#[test]
fn jitterjump_random_graph_passes() {
    let o = beepnet(&["static", "--graph", "regular:64:8", "--delta", "8", "--trials", "3", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "passed"), "true");
    let max: f64 = field(&out, "max_convergence").parse().unwrap();
    assert!(max >= 1.0);
}

#[test]
fn delta_below_graph_degree_is_rejected() {
    let o = beepnet(&["static", "--graph", "clique:6", "--delta", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn beepfirst_converges_within_three_periods() {
    let o = beepnet(&[
        "static", "--protocol", "beepfirst", "--graph", "gnp:40:0.15", "--trials", "5", "--wakeup", "uniform:2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let max: f64 = field(&stdout(&o), "max_convergence").parse().unwrap();
    assert!(max <= 3.0);
}

#[test]
fn period_cap_failure_exits_one() {
    let o = beepnet(&["static", "--graph", "clique:12", "--max-periods", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_generator_exits_two() {
    let o = beepnet(&["static", "--graph", "torus:4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn edge_list_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("ring.txt");
    fs::write(&g, "# ring\n0 1\n1 2\n2 3\n3 4\n4 0\n").unwrap();
    let o = beepnet(&["static", "--graph", g.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["trials"][0]["nodes"], 5);
    assert_eq!(v["passed"], true);
    let bad = beepnet(&["static", "--graph", g.to_str().unwrap(), "--n", "6"]);
    assert_eq!(bad.status.code(), Some(2));
}

fn read(p: &Path) -> Vec<u8> {
    fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn csv_is_reproducible_and_split_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = beepnet(&[
            "static", "--graph", "gnp:30:0.1", "--delta", "8", "--trials", "3", "--seed", "9",
            "--wakeup", "uniform:1", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    };
    run("a.csv");
    run("b.csv");
    for t in 0..3 {
        let a = read(&dir.path().join(format!("a_t{t}.csv")));
        let b = read(&dir.path().join(format!("b_t{t}.csv")));
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert_eq!(
            text.lines().next(),
            Some("period,node,phase,jitter,interval,colored,label,beeps_heard")
        );
    }
    assert!(!dir.path().join("a.csv").exists());
}

#[test]
fn single_trial_writes_the_named_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = beepnet(&[
        "static", "--protocol", "beepfirst", "--graph", "clique:5", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(out).unwrap();
    // five nodes, at least four periods
    assert!(text.lines().count() > 20);
}

#[test]
fn dynamic_star_spoke_removal_restabilizes() {
    let dir = tempfile::tempdir().unwrap();
    let ev = dir.path().join("events.txt");
    let lines: String = (5..17).map(|v| format!("10 remove_node {v}\n")).collect();
    fs::write(&ev, lines).unwrap();
    let o = beepnet(&["dynamic", "--graph", "star:17", "--events", ev.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    let row = out.lines().last().unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    // restabilization column is measured from the churn period
    let restab: f64 = cols[5].parse().unwrap();
    assert!(restab >= 1.0);
}

#[test]
fn dynamic_empty_events_matches_no_events() {
    let dir = tempfile::tempdir().unwrap();
    let ev = dir.path().join("none.txt");
    fs::write(&ev, "# nothing happens\n").unwrap();
    let with = beepnet(&["dynamic", "--graph", "regular:24:4", "--events", ev.to_str().unwrap(), "--seed", "2"]);
    let without = beepnet(&["dynamic", "--graph", "regular:24:4", "--seed", "2"]);
    assert_eq!(with.status.code(), Some(0));
    assert_eq!(with.stdout, without.stdout);
}

#[test]
fn dynamic_malformed_event_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let ev = dir.path().join("bad.txt");
    fs::write(&ev, "3 teleport 1 2\n").unwrap();
    let o = beepnet(&["dynamic", "--graph", "star:5", "--events", ev.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn beepfirst_has_no_dynamic_mode() {
    let o = beepnet(&["dynamic", "--protocol", "beepfirst", "--graph", "clique:4"]);
    assert_eq!(o.status.code(), Some(2));
}
