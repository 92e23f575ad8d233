use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mapf_collapse::Instance;
use mapf_collapse_cli::bench::{read_csv, CSV_HEADER};
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mapf-collapse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn validate_fig2() {
    let out = run(&["validate", p(&data("fig2.json"))]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(&out)["feasible"], true);
}

#[test]
fn validate_reports_collision() {
    let out = run(&["validate", p(&data("collision.json"))]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["feasible"], false);
    assert_eq!(json(&out)["violations"][0]["kind"], "vertex-collision");
    assert!(
        stderr(&out).contains("vertex-collision at t=1"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn optimize_fig2() {
    let dir = tempfile::tempdir().unwrap();
    let optimized = dir.path().join("fig2.opt.json");
    let out = run(&["optimize", p(&data("fig2.json")), "--out", p(&optimized)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stats = json(&out);
    assert_eq!(stats["cost_before"], 10);
    assert_eq!(stats["cost_after"], 4);
    assert_eq!(stats["saving"], 6);
    assert_eq!(stats["optimal"], true);
    assert_eq!(stats["config"]["time_limit_ms"], 5000);
    assert_eq!(stats["config"]["aba_filter"], true);

    let rerun = run(&["validate", p(&optimized)]);
    assert_eq!(code(&rerun), 0);
    let again = run(&["optimize", p(&optimized), "--aba-filter", "off"]);
    assert_eq!(code(&again), 0);
    assert_eq!(json(&again)["saving"], 0);
}

#[test]
fn optimize_writes_stats_and_relations() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.json");
    let rel = dir.path().join("rel.json");
    let out = run(&[
        "optimize",
        p(&data("fig2.json")),
        "--stats",
        p(&stats),
        "--dump-relations",
        p(&rel),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let stats: Value = serde_json::from_str(&fs::read_to_string(stats).unwrap()).unwrap();
    assert_eq!(stats["n_actions"], 4);
    let rel: Value = serde_json::from_str(&fs::read_to_string(rel).unwrap()).unwrap();
    assert_eq!(rel["mutex_in"], serde_json::json!([[2, 3]]));
    assert_eq!(rel["deps"][0]["S"], serde_json::json!([2]));
}

#[test]
fn optimize_already_optimal() {
    let out = run(&["optimize", p(&data("shortest.json"))]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(&out)["saving"], 0);
}

#[test]
fn optimize_refuses_infeasible_input() {
    let out = run(&["optimize", p(&data("collision.json"))]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr(&out).contains("vertex-collision"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn usage_errors() {
    assert_eq!(code(&run(&["optimize"])), 1);
    assert_eq!(
        code(&run(&[
            "optimize",
            p(&data("fig2.json")),
            "--candidates",
            "all"
        ])),
        1
    );
    assert_eq!(code(&run(&["validate", p(&data("missing.json"))])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn oracle_fig2() {
    let out = run(&["oracle", p(&data("fig2.json")), "--cap", "24"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(&out)["best_saving"], 6);
    let refused = run(&["oracle", p(&data("fig2.json"))]);
    assert_eq!(code(&refused), 4);
    assert!(stderr(&refused).contains("24 exhaustive candidates"));
}

#[test]
fn reduce_single_edge() {
    let out = run(&[
        "reduce",
        p(&data("edge.graph.json")),
        "--k",
        "1",
        "--verify",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_eq!((v["c0"].as_u64(), v["beta"].as_u64()), (Some(10), Some(4)));
    assert_eq!(v["roundtrip"]["opt"], 4);
    assert_eq!(v["instance"]["horizon"], 6);

    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("edge.json");
    let out = run(&[
        "reduce",
        p(&data("edge.graph.json")),
        "--k",
        "1",
        "--out",
        p(&inst),
    ]);
    assert_eq!(code(&out), 0);
    let opt = run(&["optimize", p(&inst)]);
    assert_eq!(json(&opt)["cost_after"], 4);

    assert_eq!(
        code(&run(&["reduce", p(&data("lonely.graph.json")), "--k", "1"])),
        4
    );
    assert_eq!(
        code(&run(&["reduce", p(&data("edge.graph.json")), "--k", "3"])),
        4
    );
}

#[test]
fn gen_on_map_file() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("corridor.map");
    fs::copy(data("corridor.map"), &map).unwrap();
    let inst = dir.path().join("plan.json");
    let out = run(&[
        "gen",
        "--map",
        p(&map),
        "--agents",
        "3",
        "--seed",
        "4",
        "--mode",
        "plan",
        "--out",
        p(&inst),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = json(&out);
    assert_eq!(summary["rng"], "ChaCha8Rng/seed_from_u64");
    assert_eq!(summary["isr"], 1.0);
    assert_eq!(summary["map_file"], "corridor.map");
    assert_eq!(code(&run(&["validate", p(&inst)])), 0);
}

#[test]
fn gen_random_rollout_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("r.json");
    let args = [
        "gen",
        "--map",
        "random:12x12:0.1",
        "--agents",
        "6",
        "--seed",
        "9",
        "--noise",
        "0.4",
        "--horizon",
        "64",
        "--out",
        p(&inst),
    ];
    assert_eq!(code(&run(&args)), 0);
    assert!(dir.path().join("random-12-12-10-seed9.map").exists());
    let first = fs::read_to_string(&inst).unwrap();
    assert_eq!(code(&run(&args)), 0);
    assert_eq!(fs::read_to_string(&inst).unwrap(), first);

    let loaded = Instance::load(&inst).unwrap();
    assert_eq!(loaded.to_json_string() + "\n", first);
    assert_eq!(code(&run(&["validate", p(&inst), "--mode", "relaxed"])), 0);

    let optimized = dir.path().join("sub").join("r.opt.json");
    fs::create_dir(optimized.parent().unwrap()).unwrap();
    let out = run(&[
        "optimize",
        p(&inst),
        "--mode",
        "relaxed",
        "--out",
        p(&optimized),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        code(&run(&["validate", p(&optimized), "--mode", "relaxed"])),
        0
    );
}

#[test]
fn bench_directory() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..4 {
        let inst = dir.path().join(format!("roll{seed}.json"));
        let out = run(&[
            "gen",
            "--map",
            "random:10x10",
            "--agents",
            "5",
            "--seed",
            &seed.to_string(),
            "--noise",
            "0.4",
            "--horizon",
            "48",
            "--out",
            p(&inst),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    fs::copy(data("collision.json"), dir.path().join("bad.json")).unwrap();
    fs::write(dir.path().join("garbage.json"), "{").unwrap();
    let csv_path = dir.path().join("out").join("bench.csv");
    fs::create_dir(csv_path.parent().unwrap()).unwrap();
    let out = run(&[
        "bench",
        p(dir.path()),
        "--mode",
        "relaxed",
        "--jobs",
        "3",
        "--out",
        p(&csv_path),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = json(&out);
    assert_eq!(summary["instances"], 6);
    assert_eq!(summary["failed"], 2);
    let frac = summary["within_1s_fraction"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&frac));

    let text = fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let rows = read_csv(&text).unwrap();
    let ids: Vec<&str> = rows.iter().map(|r| r.instance_id.as_str()).collect();
    assert_eq!(ids, ["bad", "garbage", "roll0", "roll1", "roll2", "roll3"]);
    assert!(rows[0]
        .error
        .as_deref()
        .unwrap()
        .contains("vertex-collision"));
    assert!(rows[1].error.is_some());
    for row in &rows[2..] {
        assert!(row.error.is_none());
        let ratio = row.saving_ratio.unwrap();
        assert!((0.0..=1.0).contains(&ratio));
        assert!(row.cost_after.unwrap() <= row.cost_before.unwrap());
        assert!(row.agent_density.unwrap() > 0.0);
        assert!(row
            .map_type
            .as_deref()
            .unwrap()
            .starts_with("random-10-10-20"));
    }
}

#[test]
fn bench_empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["bench", p(dir.path())]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        CSV_HEADER.join(",") + "\n"
    );
    let summary: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(summary["instances"], 0);
    assert_eq!(summary["median_saving_ratio"], Value::Null);
}
