use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use openh_core::store::{episode_file_name, read_episode, write_episode};
use serde_json::Value;
use statrs::distribution::{Beta, ContinuousCDF};

const BIN: &str = env!("CARGO_BIN_EXE_openh");

fn openh(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).env("OHE_LOG", "error").output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = openh(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path, dataset: &str, episodes: usize) {
    ok(dir, &["synth", "--out", "raw", "--dataset", dataset, "--episodes", &episodes.to_string()]);
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn validate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "ds", 6);
    assert_eq!(openh(dir, &["validate", "raw/ds"]).status.code(), Some(0));

    // Un-normalize one quaternion and re-encode so the container stays intact.
    let file = dir.join("raw/ds").join(episode_file_name(0));
    let mut ep = read_episode(&file).unwrap();
    let o = 4 * ep.state_width + 8 + 3;
    ep.kinematics[o..o + 4].copy_from_slice(&[2.0, 0.0, 0.0, 0.0]);
    write_episode(&ep, &file).unwrap();
    let out = openh(dir, &["validate", "raw/ds"]);
    assert_eq!(out.status.code(), Some(1));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains(&format!("episodes[{}].kinematics[4].arm1.quaternion", ep.episode_id)), "{report}");

    fs::create_dir_all(dir.join("empty")).unwrap();
    let out = openh(dir, &["validate", "empty"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[store::io]"));
}

#[test]
fn unknown_flags_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = openh(tmp.path(), &["mix", "--size", "a=1", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = openh(tmp.path(), &["--set", "sed=1", "mix", "--size", "a=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_documents_csv_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let help = ok(tmp.path(), &["eval", "trials", "--help"]);
    assert!(help.contains("policy,subtask,successes,trials,rate,ci_lo,ci_hi"));
    let help = ok(tmp.path(), &["eval", "rollout", "--help"]);
    assert!(help.contains("dataset_id,episode_id,seed,frame_index,chunk_index,boundary,l1,ssim"));
}

#[test]
fn normalized_training_means_vanish() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "ds", 12);
    ok(dir, &["convert", "raw/ds", "--out", "conv/ds"]);
    ok(dir, &["stats", "conv/ds"]);
    ok(dir, &["normalize", "conv/ds", "--out", "norm.json"]);
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.join("norm.json")).unwrap()).unwrap();
    let mean = summary["mean"].as_array().unwrap();
    assert_eq!(mean.len(), 16);
    for row in mean {
        for v in row.as_array().unwrap() {
            assert!(v.as_f64().unwrap().abs() < 1e-6, "{v}");
        }
    }
    // The quantile normalizer reports padded slots as degenerate cells.
    let q: Value = serde_json::from_str(&ok(dir, &["normalize", "conv/ds", "--kind", "quantile"])).unwrap();
    assert!(!q["degenerate_cells"].as_array().unwrap().is_empty());
}

#[test]
fn convert_does_not_touch_its_input() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "ds", 3);
    let before = fs::read(dir.join("raw/ds").join(episode_file_name(0))).unwrap();
    ok(dir, &["convert", "raw/ds", "--out", "conv/ds"]);
    assert_eq!(before, fs::read(dir.join("raw/ds").join(episode_file_name(0))).unwrap());
    assert_eq!(openh(dir, &["convert", "raw/ds", "--out", "raw/ds"]).status.code(), Some(2));
    // Converting again keeps the 10 Hz sampling.
    ok(dir, &["convert", "conv/ds", "--out", "conv2/ds"]);
    let a = read_episode(&dir.join("conv/ds").join(episode_file_name(0))).unwrap();
    let b = read_episode(&dir.join("conv2/ds").join(episode_file_name(0))).unwrap();
    assert_eq!(a.sample_count(), b.sample_count());
}

#[test]
fn capped_mixture_table() {
    let tmp = tempfile::tempdir().unwrap();
    let table = ok(tmp.path(), &["mix", "--size", "a=800", "--size", "b=100", "--size", "c=100", "--cap", "a=0.2"]);
    assert_eq!(table, "Dataset / Embodiment Group\tMixture ratio\na\t0.2000\nb\t0.4000\nc\t0.4000\n");
    // Caps from a config file apply unless a flag overrides them.
    fs::write(tmp.path().join("openh.toml"), "[cap]\na = 0.5\n").unwrap();
    let table = ok(tmp.path(), &["--config", "openh.toml", "mix", "--size", "a=800", "--size", "b=100"]);
    assert!(table.contains("a\t0.5000"));
    let table =
        ok(tmp.path(), &["--config", "openh.toml", "mix", "--size", "a=800", "--size", "b=100", "--cap", "a=0.25"]);
    assert!(table.contains("a\t0.2500"));
}

#[test]
fn merge_stats_records_mixture_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "ds_a", 6);
    ok(dir, &["synth", "--out", "raw", "--dataset", "ds_b", "--episodes", "3", "--family", "lissajous"]);
    for ds in ["ds_a", "ds_b"] {
        ok(dir, &["convert", &format!("raw/{ds}"), "--out", &format!("conv/{ds}")]);
        ok(dir, &["stats", &format!("conv/{ds}")]);
    }
    ok(dir, &["mix", "conv/ds_a", "conv/ds_b", "--out", "mix.tsv"]);
    ok(
        dir,
        &[
            "merge-stats",
            "conv/ds_a/stats.json",
            "conv/ds_b/stats.json",
            "--mixture",
            "mix.tsv",
            "--out",
            "merged.json",
        ],
    );
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.join("merged.json")).unwrap()).unwrap();
    let prov = doc["provenance"].as_array().unwrap();
    let ids: Vec<&str> = prov.iter().map(|p| p["dataset_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["ds_a", "ds_b"]);
    let weights: Vec<f64> = prov.iter().map(|p| p["weight"].as_f64().unwrap()).collect();
    // Equal episode lengths: ratios follow episode counts, up to table rounding.
    assert!((weights[0] - 2.0 / 3.0).abs() < 1e-4 && (weights[1] - 1.0 / 3.0).abs() < 1e-4, "{weights:?}");
    assert!(doc.get("dataset_id").is_none());

    let out = openh(dir, &["merge-stats", "conv/ds_a/stats.json", "--weight", "other=1", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
}

fn rollout_dataset(dir: &Path) {
    ok(dir, &["synth", "--out", "raw", "--dataset", "ds", "--episodes", "40"]);
    ok(dir, &["convert", "raw/ds", "--out", "conv/ds"]);
}

fn assert_identity(out: &Path) {
    let rows = csv_rows(&out.join("rollout_frames.csv"));
    assert_eq!(rows.len(), 2 * 3 * 72);
    for r in &rows {
        assert_eq!(r[6], "0");
        assert_eq!(r[7], "1");
    }
    assert_eq!(csv_rows(&out.join("rollout_failures.csv")).len(), 0);
    let summary = csv_rows(&out.join("rollout_summary.csv"));
    assert_eq!(summary.len(), 2 * 72);
    assert!(summary.iter().all(|r| r[0] == "benchtop" && r[4] == "0"));
}

#[test]
fn identity_rollout_in_process_and_over_protocols() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    rollout_dataset(dir);
    ok(dir, &["eval", "rollout", "conv/ds", "--out", "ev"]);
    assert_identity(&dir.join("ev"));

    let cmd = format!("cmd:{BIN} serve-replay conv/ds");
    ok(dir, &["eval", "rollout", "conv/ds", "--out", "ev_cmd", "--generator", &cmd]);
    assert_identity(&dir.join("ev_cmd"));
    assert!(!dir.join("ev_cmd/generator_stage").exists());

    let mut server =
        Command::new(BIN).current_dir(dir).args(["serve-replay", "conv/ds", "--stage", "stage"]).spawn().unwrap();
    ok(dir, &["eval", "rollout", "conv/ds", "--out", "ev_stage", "--generator", "stage:stage", "--timeout-secs", "30"]);
    fs::write(dir.join("stage/STOP"), "").unwrap();
    assert!(server.wait().unwrap().success());
    assert_identity(&dir.join("ev_stage"));

    for sub in ["ev_cmd", "ev_stage"] {
        assert_eq!(
            fs::read(dir.join("ev/rollout_frames.csv")).unwrap(),
            fs::read(dir.join(sub).join("rollout_frames.csv")).unwrap()
        );
    }
}

#[test]
fn generator_timeouts_are_recorded_and_the_run_continues() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    rollout_dataset(dir);
    // Nobody serves this stage directory.
    let out = openh(
        dir,
        &[
            "eval",
            "rollout",
            "conv/ds",
            "--out",
            "ev",
            "--generator",
            "stage:nobody",
            "--timeout-secs",
            "0.2",
            "--seeds",
            "1",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let failures = csv_rows(&dir.join("ev/rollout_failures.csv"));
    assert_eq!(failures.len(), 2);
    assert!(failures.iter().all(|r| r[3].contains("timed out") || r[3].contains("timeout")), "{failures:?}");
}

#[test]
fn category_flag_overrides_manifest_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    rollout_dataset(dir);
    ok(dir, &["eval", "rollout", "conv/ds", "--out", "ev", "--category", "ds=tissue", "--seeds", "1"]);
    let summary = csv_rows(&dir.join("ev/rollout_summary.csv"));
    assert!(summary.iter().all(|r| r[0] == "tissue"));
}

fn hypergeometric_p(table: [[u64; 2]; 2]) -> f64 {
    fn choose(n: u64, k: u64) -> u128 {
        (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
    }
    let r1 = table[0][0] + table[0][1];
    let r2 = table[1][0] + table[1][1];
    let c1 = table[0][0] + table[1][0];
    let n = r1 + r2;
    let lo = c1.saturating_sub(r2);
    let hi = c1.min(r1);
    let total = choose(n, c1);
    let weight = |x: u64| choose(r1, x) * choose(r2, c1 - x);
    let observed = weight(table[0][0]);
    let tail: u128 = (lo..=hi).map(weight).filter(|w| *w as f64 <= observed as f64 * (1.0 + 1e-7)).sum();
    tail as f64 / total as f64
}

fn beta_interval(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    let a = (1.0 - confidence) / 2.0;
    let lo = if k == 0 { 0.0 } else { Beta::new(k as f64, (n - k + 1) as f64).unwrap().inverse_cdf(a) };
    let hi = if k == n { 1.0 } else { Beta::new((k + 1) as f64, (n - k) as f64).unwrap().inverse_cdf(1.0 - a) };
    (lo, hi)
}

#[test]
fn trial_tables_match_oracles() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let log = r#"{"subtasks":["suture"],"outcomes":[{"policy":"ours","counts":[[5,20]]},{"policy":"baseline","counts":[[0,20]]}]}"#;
    fs::write(dir.join("log.json"), log).unwrap();
    ok(dir, &["eval", "trials", "log.json", "--out", "t"]);

    let rates = csv_rows(&dir.join("t/rates.csv"));
    let ours = rates.iter().find(|r| r[0] == "ours").unwrap();
    let (lo, hi): (f64, f64) = (ours[5].parse().unwrap(), ours[6].parse().unwrap());
    let (olo, ohi) = beta_interval(5, 20, 0.95);
    assert!((lo - olo).abs() < 1e-6 && (hi - ohi).abs() < 1e-6);
    assert!((lo - 0.087).abs() < 5e-4 && (hi - 0.491).abs() < 5e-4, "({lo}, {hi})");
    let base = rates.iter().find(|r| r[0] == "baseline").unwrap();
    assert_eq!(base[5].parse::<f64>().unwrap(), 0.0);

    let cmp = csv_rows(&dir.join("t/comparisons.csv"));
    assert_eq!(cmp.len(), 1);
    let p: f64 = cmp[0][3].parse().unwrap();
    let oracle = hypergeometric_p([[5, 15], [0, 20]]);
    assert!((p - oracle).abs() <= 1e-12 * oracle.max(1.0), "{p} vs {oracle}");

    // A config-file confidence applies; the flag wins over it.
    fs::write(dir.join("c.toml"), "confidence = 0.9\n").unwrap();
    ok(dir, &["--config", "c.toml", "eval", "trials", "log.json", "--out", "t90"]);
    let r90 = csv_rows(&dir.join("t90/rates.csv"));
    assert!((r90[0][5].parse::<f64>().unwrap() - beta_interval(5, 20, 0.9).0).abs() < 1e-6);
    ok(dir, &["--config", "c.toml", "eval", "trials", "log.json", "--confidence", "0.95", "--out", "t95"]);
    assert_eq!(fs::read(dir.join("t/rates.csv")).unwrap(), fs::read(dir.join("t95/rates.csv")).unwrap());
}

#[test]
fn subtask_average_over_29_subtasks() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // Successes out of 10 trials per subtask: 186 of 290 overall.
    let successes: Vec<u64> = (0..29).map(|i| if i < 12 { 7 } else { 6 }).collect();
    let hand = successes.iter().map(|&s| s as f64 / 10.0).sum::<f64>() / 29.0;
    assert!((hand - 0.64).abs() < 0.005);
    let subtasks: Vec<String> = (0..29).map(|i| format!("subtask_{i:02}")).collect();
    let counts: Vec<[u64; 2]> = successes.iter().map(|&s| [s, 10]).collect();
    let log = serde_json::json!({"subtasks": subtasks, "outcomes": [{"policy": "ours", "counts": counts}]});
    fs::write(dir.join("log.json"), log.to_string()).unwrap();
    let stdout = ok(dir, &["eval", "trials", "log.json"]);
    assert!(stdout.contains("# averages.csv"));
    ok(dir, &["eval", "trials", "log.json", "--out", "t"]);
    let avg = csv_rows(&dir.join("t/averages.csv"));
    let mean: f64 = avg[0][3].parse().unwrap();
    assert!((mean - hand).abs() < 1e-12);
    assert!((mean - 0.64).abs() < 0.005);
}

fn snapshot(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let run = |workers: &str| {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        let w = ["--seed", "11", "--workers", workers];
        let with = |args: &[&str]| -> Vec<String> { w.iter().chain(args).map(|s| s.to_string()).collect() };
        let run = |args: &[&str]| {
            let a = with(args);
            ok(dir, &a.iter().map(String::as_str).collect::<Vec<_>>());
        };
        run(&["synth", "--out", "raw", "--dataset", "ds", "--episodes", "40", "--noise", "0.001"]);
        run(&["convert", "raw/ds", "--out", "conv/ds"]);
        run(&["stats", "conv/ds"]);
        run(&["normalize", "conv/ds", "--out", "norm.json"]);
        run(&[
            "mix",
            "conv/ds",
            "--size",
            "other=2",
            "--steps",
            "500",
            "--stream-out",
            "stream.txt",
            "--out",
            "mix.tsv",
        ]);
        run(&["eval", "rollout", "conv/ds", "--out", "ev", "--generator", "constant:0.25"]);
        snapshot(dir)
    };
    let a = run("1");
    let b = run("4");
    assert_eq!(a.len(), b.len());
    for ((pa, da), (pb, db)) in a.iter().zip(&b) {
        assert_eq!(pa, pb);
        assert!(da == db, "{} differs", pa.display());
    }
}
