use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn forceful(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forceful")).args(args).output().unwrap()
}

fn run_in(dir: &Path, cmd: &str, scenario: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, scenario.to_str().unwrap(), "--out", dir.to_str().unwrap()];
    args.extend(extra);
    forceful(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// CSV with the `wall_time` column blanked.
fn without_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn default_bottle_is_grasp_twist_on_the_table() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "solve", &scenario("bottle_a1.json5"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("strategy GT+SF(T)") && out.contains("steps 4"), "{out}");
    assert!(out.contains("margin 0."), "{out}");
    let plan = dir.path().join("plan.json");
    let v = forceful(&["validate", scenario("bottle_a1.json5").to_str().unwrap(), plan.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0), "{}", stderr(&v));
    let text = fs::read_to_string(plan).unwrap();
    assert!(text.contains("\"impedance\""), "twist step carries a set-point");
}

#[test]
fn disabling_table_and_second_arm_moves_the_bottle() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "solve", &scenario("bottle_a1.json5"), &["--disable", "rf,sft"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(
        (out.contains("GT+SF(M)") && out.contains("steps 8")) || (out.contains("GT+VF") && out.contains("steps 9")),
        "{out}"
    );
}

#[test]
fn unknown_key_is_a_config_error_and_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let s = write(dir.path(), "bad.json5", "{\n  domain: { kind: 'bottle' },\n  scene: {\n    bottel: {},\n  },\n}\n");
    let out = dir.path().join("out");
    let o = run_in(&out, "solve", &s, &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("scene.bottel") && err.contains("line 4"), "{err}");
    assert!(!out.join("plan.json").exists());
}

#[test]
fn bad_flags_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let s = scenario("bottle_a1.json5");
    assert_eq!(run_in(dir.path(), "solve", &s, &["--disable", "xyz"]).status.code(), Some(1));
    assert_eq!(run_in(dir.path(), "robustness", &s, &["--sweep", "mass:1:2:3"]).status.code(), Some(1));
    assert_eq!(run_in(dir.path(), "solve", &s, &["--samples", "0"]).status.code(), Some(1));
    assert!(!dir.path().join("plan.json").exists());
}

#[test]
fn no_twisting_method_is_a_planner_failure() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "solve", &scenario("bottle_a1.json5"), &["--disable", "gt,pt,ft,tt"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!dir.path().join("plan.json").exists());
}

#[test]
fn same_seed_gives_identical_files() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for dir in [&a, &b] {
        for cmd in ["solve", "ablate"] {
            assert!(run_in(dir.path(), cmd, &scenario("bottle_a1.json5"), &["--seed", "7"]).status.success());
        }
        let o = run_in(dir.path(), "robustness", &scenario("nut.json5"), &["--seed", "7", "--sweep", "mass:0.5:2:3", "--placements", "4"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |d: &TempDir, f: &str| fs::read_to_string(d.path().join(f)).unwrap();
    assert_eq!(read(&a, "plan.json"), read(&b, "plan.json"));
    assert_eq!(read(&a, "robustness.csv"), read(&b, "robustness.csv"));
    assert_eq!(without_wall_time(&read(&a, "ablation.csv")), without_wall_time(&read(&b, "ablation.csv")));
}

#[test]
fn ablation_without_a_vise_leaves_that_row_unsolved() {
    let dir = TempDir::new().unwrap();
    let s = write(dir.path(), "novise.json5", "{ domain: { kind: 'bottle' }, scene: { vise: null } }");
    assert!(run_in(dir.path(), "ablate", &s, &[]).status.success());
    let csv = fs::read_to_string(dir.path().join("ablation.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "strategy,steps,solved,cost,wall_time");
    assert!(rows[1].starts_with("GT+SF(T),4,true,"), "{csv}");
    assert!(rows[2].starts_with("GT+RF,6,true,"), "{csv}");
    assert!(rows[3].starts_with("GT+SF(M),8,true,"), "{csv}");
    assert!(rows[4].starts_with("GT+VF,0,false,inf,"), "{csv}");
}

#[test]
fn robustness_tables_have_their_columns() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "robustness", &scenario("bottle_a1.json5"), &["--sweep", "force:0:40:3", "--samples", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("robustness.csv")).unwrap();
    assert!(csv.starts_with("sweep_value,method,probability,cost\n"));
    for m in ["GT", "PT", "FT", "TT", "SF(T)", "SF(M)", "RF", "VF"] {
        assert!(csv.contains(&format!(",{m},")), "{m} missing:\n{csv}");
    }
    let o = run_in(dir.path(), "robustness", &scenario("nut.json5"), &["--sweep", "mass:1:2:2", "--placements", "3", "--samples", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("robustness.csv")).unwrap();
    assert!(csv.starts_with("sweep_value,method,probability,cost,median,lo95,hi95\n"), "{csv}");
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn nut_scenarios_solve_and_validate() {
    let dir = TempDir::new().unwrap();
    for (file, label) in [("nut.json5", "finger+weight(1 kg)"), ("nut_two_arms.json5", "finger+RF")] {
        let o = run_in(dir.path(), "solve", &scenario(file), &[]);
        assert!(stdout(&o).contains(label), "{}", stdout(&o));
        let plan = dir.path().join("plan.json");
        let v = forceful(&["validate", scenario(file).to_str().unwrap(), plan.to_str().unwrap()]);
        assert_eq!(v.status.code(), Some(0), "{}", stderr(&v));
    }
}

#[test]
fn tampered_plan_fails_validation() {
    let dir = TempDir::new().unwrap();
    assert!(run_in(dir.path(), "solve", &scenario("bottle_a1.json5"), &[]).status.success());
    let path = dir.path().join("plan.json");
    let text = fs::read_to_string(&path).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let actions = v["actions"].as_array_mut().unwrap();
    actions.swap(0, 1);
    fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    let o = forceful(&["validate", scenario("bottle_a1.json5").to_str().unwrap(), path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
