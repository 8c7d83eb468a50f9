use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

use relaynet::mission::{DeploymentPlan, Mode};

fn relaynet(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaynet"))
        .args(args)
        .current_dir(dir)
        .env("RELAYNET_LOG", "error")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// A 10 m by 2 m open strip with one robot and one goal; the threshold puts
/// the coverage edge at 8 m from the base station.
fn strip(dir: &Path, name: &str, goal: [f64; 2], extra: Value) -> PathBuf {
    let rows = vec![".".repeat(20); 4].join("\n");
    fs::write(dir.join("strip.txt"), format!("width 20\nheight 4\nresolution 0.5\n{rows}\n")).unwrap();
    let mut doc = json!({
        "map": "strip.txt",
        "bs": [0.75, 0.75],
        "robot_starts": [[1.25, 0.75]],
        "goals": [goal],
        "radio": { "gamma": -45.36 }
    });
    for (k, v) in extra.as_object().unwrap() {
        match (doc.get_mut(k), v) {
            (Some(Value::Object(into)), Value::Object(from)) => into.extend(from.clone()),
            _ => {
                doc[k] = v.clone();
            }
        }
    }
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    path
}

fn reachable(dir: &Path) -> PathBuf {
    strip(dir, "near.json", [6.75, 0.75], json!({}))
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path).unwrap()
}

#[test]
fn plan_writes_json_and_svg() {
    let tmp = TempDir::new().unwrap();
    let s = reachable(tmp.path());
    let out = relaynet(&["plan", s.to_str().unwrap(), "--out", "plans/p.json"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let plan = DeploymentPlan::from_json(&read(tmp.path().join("plans/p.json"))).unwrap();
    assert_eq!(plan.mode, Mode::DpaFmm);
    assert_eq!(plan.goal_visits(), vec![(0, 0)]);
    assert!(read(tmp.path().join("plans/p.svg")).starts_with("<svg"));
}

#[test]
fn mode_names_and_aliases_agree() {
    let tmp = TempDir::new().unwrap();
    let s = reachable(tmp.path());
    let s = s.to_str().unwrap();
    for (i, mode) in ["ca", "CA-FMM", "ca_fmm"].iter().enumerate() {
        let out = relaynet(&["plan", s, "--mode", mode, "--out", &format!("{i}.json")], tmp.path());
        assert_eq!(code(&out), 0);
    }
    assert_eq!(read(tmp.path().join("0.json")), read(tmp.path().join("1.json")));
    assert_eq!(read(tmp.path().join("0.json")), read(tmp.path().join("2.json")));
    let out = relaynet(&["plan", s, "--mode", "astar"], tmp.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn infeasible_scenario_exits_3_with_report() {
    let tmp = TempDir::new().unwrap();
    let s = strip(tmp.path(), "far.json", [9.75, 1.25], json!({}));
    let out = relaynet(&["plan", s.to_str().unwrap()], tmp.path());
    assert_eq!(code(&out), 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    let report: Value = serde_json::from_str(&stderr[stderr.find('{').unwrap()..]).unwrap();
    assert_eq!(report["feasible"], json!(false));
    assert!(report["ratio"].as_f64().unwrap() > 1.0);
    assert!(!tmp.path().join("plan.json").exists());
}

#[test]
fn schema_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let typo = strip(tmp.path(), "typo.json", [6.75, 0.75], json!({ "radio": { "gama": -50.0 } }));
    assert_eq!(code(&relaynet(&["plan", typo.to_str().unwrap()], tmp.path())), 2);
    let no_goals = strip(tmp.path(), "empty.json", [6.75, 0.75], json!({ "goals": [] }));
    assert_eq!(code(&relaynet(&["plan", no_goals.to_str().unwrap()], tmp.path())), 2);
    let in_wall = strip(tmp.path(), "outside.json", [30.0, 0.75], json!({}));
    assert_eq!(code(&relaynet(&["plan", in_wall.to_str().unwrap()], tmp.path())), 2);
}

#[test]
fn missing_files_exit_5() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&relaynet(&["plan", "nowhere.json"], tmp.path())), 5);
    let s = strip(tmp.path(), "lost_map.json", [6.75, 0.75], json!({ "map": "gone.txt" }));
    assert_eq!(code(&relaynet(&["run", s.to_str().unwrap()], tmp.path())), 5);
}

#[test]
fn seeded_runs_are_reproducible() {
    let tmp = TempDir::new().unwrap();
    let s = reachable(tmp.path());
    let s = s.to_str().unwrap();
    for out in ["a", "b"] {
        let o = relaynet(&["run", s, "--noise-seed", "7", "--out", out], tmp.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["trace.json", "metrics.csv", "plan.json", "plan.svg"] {
        assert_eq!(read(tmp.path().join("a").join(file)), read(tmp.path().join("b").join(file)), "{file}");
    }
    let metrics = read(tmp.path().join("a/metrics.csv"));
    let mut lines = metrics.lines();
    assert_eq!(lines.next().unwrap(), "scenario,mode,seed,d_max,d_tot,T,C_mean,C_min,O_mean,R,replans");
    assert!(lines.next().unwrap().starts_with("near,DPA-FMM,7,"));
}

#[test]
fn flaky_goal_link_exhausts_the_replan_budget() {
    // The goal sits just inside the mean coverage edge and multipath is
    // strong, so the link drops on about half the ticks. With no patience at
    // the goal, every drop triggers a replan.
    let tmp = TempDir::new().unwrap();
    let s = strip(
        tmp.path(),
        "flaky.json",
        [8.75, 0.75],
        json!({ "radio": { "sigma2_los": 400.0 }, "knobs": { "hold_limit": 0 } }),
    );
    let s = s.to_str().unwrap();
    let out = relaynet(&["run", s, "--noise-seed", "1"], tmp.path());
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("replan budget"));
    // Without noise the same mission completes.
    assert_eq!(code(&relaynet(&["run", s], tmp.path())), 0);
}

#[test]
fn compare_marks_failed_modes() {
    let tmp = TempDir::new().unwrap();
    let s = strip(tmp.path(), "far.json", [9.75, 1.25], json!({}));
    let out = relaynet(&["compare", s.to_str().unwrap(), "--out", "cmp"], tmp.path());
    assert_eq!(code(&out), 0);
    let table = read(tmp.path().join("cmp/comparison.csv"));
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[1].starts_with("FMM,ok,"));
    assert!(rows[3].starts_with("DP-FMM,failed,N/A,"));
    assert!(rows[4].starts_with("DPA-FMM,failed,N/A,"));
    assert!(tmp.path().join("cmp/FMM.svg").exists());
    assert!(!tmp.path().join("cmp/DP-FMM.svg").exists());
}

#[test]
fn single_trial_sweep_aggregates_to_itself() {
    let tmp = TempDir::new().unwrap();
    let spec = json!({
        "generator": { "width": 48, "height": 48 },
        "goal_counts": [4],
        "trials": 1,
        "modes": ["FMM", "DPA-FMM"],
        "seed_base": 3
    });
    fs::write(tmp.path().join("exp.json"), spec.to_string()).unwrap();
    let out = relaynet(&["sweep", "exp.json", "--out", "sw"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let mut trials = csv::Reader::from_path(tmp.path().join("sw/trials.csv")).unwrap();
    let mut agg = csv::Reader::from_path(tmp.path().join("sw/aggregate.csv")).unwrap();
    let t_head = trials.headers().unwrap().clone();
    let a_head = agg.headers().unwrap().clone();
    let t_rows: Vec<_> = trials.records().map(Result::unwrap).collect();
    let a_rows: Vec<_> = agg.records().map(Result::unwrap).collect();
    assert_eq!(t_rows.len(), 2);
    assert_eq!(a_rows.len(), 2);
    let col = |head: &csv::StringRecord, name: &str| head.iter().position(|h| h == name).unwrap();
    for (t, a) in t_rows.iter().zip(&a_rows) {
        assert_eq!(&t[col(&t_head, "mode")], &a[col(&a_head, "mode")]);
        assert_eq!(&a[col(&a_head, "runs")], "1");
        for name in ["d_max", "d_tot", "T", "C_mean", "C_min", "O_mean", "R", "T_norm"] {
            let x: f64 = t[col(&t_head, name)].parse().unwrap();
            let y: f64 = a[col(&a_head, name)].parse().unwrap();
            assert!((x - y).abs() < 1e-6, "{name}: {x} vs {y}");
        }
    }
}

#[test]
fn render_draws_a_saved_plan() {
    let tmp = TempDir::new().unwrap();
    let s = reachable(tmp.path());
    let s = s.to_str().unwrap();
    assert_eq!(code(&relaynet(&["plan", s, "--mode", "fmm"], tmp.path())), 0);
    assert_eq!(code(&relaynet(&["render", s, "--plan", "plan.json", "--out", "r.svg"], tmp.path())), 0);
    assert_eq!(read(tmp.path().join("r.svg")), read(tmp.path().join("plan.svg")));
    assert_eq!(code(&relaynet(&["render", s], tmp.path())), 0);
    assert!(!read(tmp.path().join("scenario.svg")).contains("<polyline"));
}
