use std::path::Path;
use std::process::{Command, Output};

fn perilod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perilod"))
        .args(args)
        .env_remove("PERILOD_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn advise_large_display() {
    let o = perilod(&["advise", "--hfov", "270", "--vfov", "270", "--hpx", "4000", "--vpx", "4000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("inset area fraction: 1.23%"), "{}", stdout(&o));
}

#[test]
fn advise_defaults() {
    let o = perilod(&["advise"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("21.72 arcmin/px horizontal"), "{s}");
    assert!(s.contains("degraded area fraction: 79.53%"), "{s}");
    assert!(s.contains("recommended inset with 2 deg blend band: 34 x 34 deg"), "{s}");
}

#[test]
fn advise_narrow_display_warns() {
    let o = perilod(&["advise", "--hfov", "25"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"));
    assert!(stdout(&o).contains("recommended inset: full display"));
}

#[test]
fn advise_rejects_bad_display() {
    let o = perilod(&["advise", "--hpx", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_is_reproducible_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<_> = ["a.csv", "b.csv", "c.csv"].iter().map(|f| dir.path().join(f)).collect();
    for (f, threads) in files.iter().zip(["1", "1", "8"]) {
        let o = perilod(&["run", "--seed", "42", "--trials", "200", "--threads", threads, "--out", path(f)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = std::fs::read(&files[0]).unwrap();
    assert_eq!(a, std::fs::read(&files[1]).unwrap());
    assert_eq!(a, std::fs::read(&files[2]).unwrap());

    let text = String::from_utf8(a).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "h_extent_deg,v_extent_deg,n,mean_time_present_s,sd_time_s,accuracy_present");
    assert_eq!(lines.len(), 18);
    assert!(lines[17].starts_with(",,"));

    let other = dir.path().join("d.csv");
    assert!(perilod(&["run", "--seed", "43", "--trials", "200", "--out", path(&other)]).status.success());
    assert_ne!(text.as_bytes(), std::fs::read(&other).unwrap());
}

#[test]
fn run_check_passes_on_defaults() {
    let o = perilod(&["run", "--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("40x40 matches undegraded: pass"));
}

#[test]
fn missing_config_is_a_config_error() {
    let o = perilod(&["run", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config error"));
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("syntax.json", "{ not json"),
        ("unknown.json", r#"{"trials_per_conditon": 10}"#),
        ("invalid.json", r#"{"trials_per_condition": 0}"#),
    ] {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        let o = perilod(&["run", "--config", path(&p)]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", stderr(&o));
    }
}

#[test]
fn config_file_sets_up_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("small.json");
    std::fs::write(&p, r#"{"inset_grid": [[10, 10]], "trials_per_condition": 40, "master_seed": 9}"#).unwrap();
    let o = perilod(&["run", "--config", path(&p)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(s.lines().count(), 3);
    assert!(s.lines().nth(1).unwrap().starts_with("10.000000,10.000000,28,"));
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("seeded.json");
    std::fs::write(&cfg, r#"{"master_seed": 5}"#).unwrap();
    let sim = |extra: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_perilod"));
        c.args(["simulate", "--trial", "3", "--absent"]).args(extra).env_remove("PERILOD_SEED");
        if let Some(v) = env {
            c.env("PERILOD_SEED", v);
        }
        let o = c.output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    let flag5 = sim(&["--seed", "5"], None);
    let flag6 = sim(&["--seed", "6"], None);
    assert_ne!(flag5, flag6);
    assert_eq!(sim(&["--config", path(&cfg)], Some("6")), flag5);
    assert_eq!(sim(&["--config", path(&cfg), "--seed", "6"], None), flag6);
    assert_eq!(sim(&[], Some("6")), flag6);
    assert_eq!(sim(&[], None), sim(&["--seed", "1996"], None));

    let o = Command::new(env!("CARGO_BIN_EXE_perilod"))
        .args(["simulate"])
        .env("PERILOD_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_prints_fixation_log() {
    let o = perilod(&["simulate", "--trial", "0", "--inset", "10x10", "--absent"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("trial_id,fixation_index,object_index,kind,duration_s"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 5);
    for (k, row) in rows.iter().enumerate() {
        let f: Vec<_> = row.split(',').collect();
        assert_eq!(f[0], "0");
        assert_eq!(f[1], k.to_string());
        assert!(f[3] == "eye_only" || f[3] == "combined");
        assert_eq!(f[4].split('.').nth(1).unwrap().len(), 6);
    }

    let j = perilod(&["simulate", "--json", "--inset", "undegraded"]);
    assert!(j.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&j)).unwrap();
    assert!(v["result"]["search_time_s"].as_f64().unwrap() > 0.0);
    assert_eq!(v["trial"]["objects"].as_array().unwrap().len(), 5);

    assert_eq!(perilod(&["simulate", "--inset", "wide"]).status.code(), Some(2));
}

#[test]
fn calibrate_writes_a_loadable_parameter_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("params.json");
    let o = perilod(&["calibrate", "--trials", "200", "--out", path(&p)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&p).unwrap()).unwrap();
    assert_eq!(v["params"]["eye_only_threshold_deg"].as_f64(), Some(30.0));
    assert!(v["provenance"]["rms_residual_s"].as_f64().unwrap() <= 0.25);
}
