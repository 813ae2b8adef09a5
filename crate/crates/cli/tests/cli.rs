use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use redor::agent::{evaluate, train, CheckpointStore, TrainConfig, TrainingView};
use redor::analysis::{read_metrics, read_reports, PROBE_NAMES};
use redor::envdata::read_dataset;
use redor::selector::read_selection;
use tempfile::TempDir;

fn redor(args: &[&str]) -> Output {
    redor_env(args, &[])
}

fn redor_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_redor"));
    cmd.args(args).env_remove("REDOR_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn ok(out: Output) -> Output {
    assert_eq!(
        code(&out),
        0,
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small dataset in `dir/dataset.jsonl`.
fn small_dataset(dir: &Path) -> PathBuf {
    ok(redor(&[
        "generate",
        "--expert",
        "4",
        "--random",
        "4",
        "--seed",
        "3",
        "--out",
        s(dir),
    ]));
    dir.join("dataset.jsonl")
}

const FAST: &[&str] = &["--hidden", "8"];

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(code(&redor(&["--help"])), 0);
    assert_eq!(code(&redor(&["--version"])), 0);
    assert_eq!(code(&redor(&[])), 1);
    assert_eq!(code(&redor(&["generate", "--bogus"])), 1);
    assert_eq!(code(&redor(&["select", "--method", "random"])), 1);
}

#[test]
fn generate_is_deterministic_and_hard_triples_random() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = |d: &Path| {
        vec![
            "generate",
            "--env",
            "point-mass",
            "--expert",
            "50",
            "--random",
            "50",
            "--seed",
            "1",
            "--out",
        ]
        .into_iter()
        .map(String::from)
        .chain([s(d).to_string()])
        .collect::<Vec<_>>()
    };
    let run = |d: &Path| ok(redor(&args(d).iter().map(String::as_str).collect::<Vec<_>>()));
    run(a.path());
    run(b.path());
    let fa = fs::read(a.path().join("dataset.jsonl")).unwrap();
    assert_eq!(fa, fs::read(b.path().join("dataset.jsonl")).unwrap());
    assert_eq!(fs::read_dir(a.path()).unwrap().count(), 1);
    assert_eq!(read_dataset(&a.path().join("dataset.jsonl")).unwrap().len(), 100);

    let h = TempDir::new().unwrap();
    ok(redor(&[
        "generate",
        "--expert",
        "50",
        "--random",
        "50",
        "--hard",
        "--seed",
        "1",
        "--out",
        s(h.path()),
    ]));
    let ds = read_dataset(&h.path().join("dataset.jsonl")).unwrap();
    assert_eq!(ds.len(), 200);
    let random = ds.provenance.policy_mix.iter().find(|m| m.policy == "random").unwrap();
    assert_eq!(random.count, 150);
}

#[test]
fn generate_into_missing_directory_fails_without_output() {
    let d = TempDir::new().unwrap();
    let missing = d.path().join("nope");
    let out = redor(&["generate", "--out", s(&missing)]);
    assert_eq!(code(&out), 1);
    assert!(!missing.exists());
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);
}

#[test]
fn pretrain_checkpoint_counts_and_determinism() {
    let d = TempDir::new().unwrap();
    let ds = small_dataset(d.path());
    let c50 = d.path().join("c50");
    let again = d.path().join("again");
    let c1 = d.path().join("c1");
    for p in [&c50, &again, &c1] {
        fs::create_dir(p).unwrap();
    }
    let base = ["pretrain", "--dataset", s(&ds), "--steps", "60", "--seed", "4"];
    let run = |dir: &Path, t: &str| {
        let mut a: Vec<&str> = base.to_vec();
        a.extend(["--rounds", t, "--out", s(dir)]);
        a.extend(FAST);
        ok(redor(&a));
    };
    run(&c50, "50");
    run(&again, "50");
    run(&c1, "1");
    assert_eq!(fs::read_dir(&c50).unwrap().count(), 50);
    for round in 1..=50 {
        let name = CheckpointStore::file_name(round);
        assert_eq!(fs::read(c50.join(&name)).unwrap(), fs::read(again.join(&name)).unwrap());
    }
    let store = CheckpointStore::read_dir(&c1).unwrap();
    assert_eq!(store.rounds(), vec![1]);
    assert_eq!(store.get(1).unwrap().step, 60);

    // a rerun with fewer rounds replaces the older snapshots
    run(&c50, "2");
    assert_eq!(CheckpointStore::read_dir(&c50).unwrap().rounds(), vec![1, 2]);
}

#[test]
fn select_methods() {
    let d = TempDir::new().unwrap();
    let ds_path = small_dataset(d.path());
    let n = read_dataset(&ds_path).unwrap().len();
    let ck = d.path().join("ck");
    fs::create_dir(&ck).unwrap();
    ok(redor(&[
        "pretrain",
        "--dataset",
        s(&ds_path),
        "--steps",
        "40",
        "--rounds",
        "3",
        "--hidden",
        "8",
        "--out",
        s(&ck),
    ]));

    ok(redor(&[
        "select",
        "--method",
        "random",
        "--size",
        "5",
        "--dataset",
        s(&ds_path),
        "--out",
        s(d.path()),
    ]));
    let r = read_selection(&d.path().join("random.selection.jsonl")).unwrap();
    assert_eq!(r.ids.len(), 5);

    ok(redor(&[
        "select",
        "--method",
        "full",
        "--dataset",
        s(&ds_path),
        "--out",
        s(d.path()),
    ]));
    let f = read_selection(&d.path().join("full.selection.jsonl")).unwrap();
    assert_eq!(f.ids, (0..n).collect::<Vec<_>>());

    let out = ok(redor(&[
        "select",
        "--method",
        "redor",
        "--dataset",
        s(&ds_path),
        "--checkpoints",
        s(&ck),
        "--out",
        s(d.path()),
    ]));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("fraction="), "{text}");
    let sel = read_selection(&d.path().join("redor.selection.jsonl")).unwrap();
    assert_eq!(sel.rounds.len(), 3);
    for round in &sel.rounds {
        assert!(round.residuals.windows(2).all(|w| w[1] <= w[0]));
    }

    ok(redor(&[
        "select",
        "--method",
        "prioritized",
        "--size",
        "3",
        "--dataset",
        s(&ds_path),
        "--checkpoints",
        s(&ck),
        "--out",
        s(d.path()),
    ]));
    assert_eq!(
        read_selection(&d.path().join("prioritized.selection.jsonl"))
            .unwrap()
            .ids
            .len(),
        3
    );

    // pursuit without checkpoints is a usage error; too many rounds a runtime failure
    assert_eq!(
        code(&redor(&[
            "select",
            "--method",
            "redor",
            "--dataset",
            s(&ds_path),
            "--out",
            s(d.path())
        ])),
        1
    );
    let out = redor(&[
        "select",
        "--method",
        "redor",
        "--rounds",
        "5",
        "--dataset",
        s(&ds_path),
        "--checkpoints",
        s(&ck),
        "--out",
        s(d.path()),
    ]);
    assert_eq!(code(&out), 2);
    assert_eq!(
        code(&redor(&[
            "select",
            "--method",
            "nope",
            "--dataset",
            s(&ds_path),
            "--out",
            s(d.path())
        ])),
        1
    );
}

#[test]
fn random_size_ten_on_default_dataset() {
    let d = TempDir::new().unwrap();
    ok(redor(&["generate", "--out", s(d.path())]));
    let ds = d.path().join("dataset.jsonl");
    ok(redor(&[
        "select",
        "--method",
        "random",
        "--size",
        "10",
        "--dataset",
        s(&ds),
        "--out",
        s(d.path()),
    ]));
    assert_eq!(
        read_selection(&d.path().join("random.selection.jsonl"))
            .unwrap()
            .ids
            .len(),
        10
    );
}

#[test]
fn train_eval_rows_and_full_equivalence() {
    let d = TempDir::new().unwrap();
    let ds_path = small_dataset(d.path());
    ok(redor(&[
        "select",
        "--method",
        "full",
        "--dataset",
        s(&ds_path),
        "--out",
        s(d.path()),
    ]));
    let sel = d.path().join("full.selection.jsonl");
    let common = [
        "train-eval",
        "--dataset",
        s(&ds_path),
        "--selection",
        s(&sel),
        "--steps",
        "30",
        "--hidden",
        "8",
    ];

    let one = d.path().join("one");
    fs::create_dir(&one).unwrap();
    let mut a = common.to_vec();
    a.extend(["--eval-every", "10", "--seed", "7", "--out", s(&one)]);
    ok(redor(&a));
    let rows = read_metrics(&one.join("metrics.csv")).unwrap();
    assert_eq!(rows.iter().map(|r| r.step).collect::<Vec<_>>(), vec![10, 20, 30]);

    // same seed through the library: identical final evaluation
    let ds = read_dataset(&ds_path).unwrap();
    let cfg = TrainConfig {
        steps: 30,
        hidden: 8,
        ..TrainConfig::default()
    };
    let params = train(&TrainingView::full(&ds), &cfg, 7, None).unwrap().params;
    let stats = evaluate(&params, &ds.env, 10, 7 ^ 0x5eed_e7a1_0000_0000).unwrap();
    assert_eq!(rows[2].mean_return, stats.mean);
    assert_eq!(rows[2].std_return, stats.std);
    assert_eq!(rows[2].subset_fraction, 1.0);

    // rerunning upserts instead of appending
    ok(redor(&a));
    assert_eq!(read_metrics(&one.join("metrics.csv")).unwrap(), rows);

    let five = d.path().join("five");
    fs::create_dir(&five).unwrap();
    let mut b = common.to_vec();
    b.extend(["--eval-every", "10", "--out", s(&five)]);
    for seed in ["1", "2", "3", "4", "5"] {
        b.extend(["--seed", seed]);
    }
    ok(redor(&b));
    assert_eq!(read_metrics(&five.join("metrics.csv")).unwrap().len(), 5 * rows.len());

    let once = d.path().join("once");
    fs::create_dir(&once).unwrap();
    let mut c = common.to_vec();
    c.extend(["--eval-every", "30", "--seed", "1", "--seed", "2", "--out", s(&once)]);
    ok(redor(&c));
    assert_eq!(read_metrics(&once.join("metrics.csv")).unwrap().len(), 2);
}

#[test]
fn train_eval_rejects_mismatched_selection() {
    let d = TempDir::new().unwrap();
    let ds_path = small_dataset(d.path());
    ok(redor(&[
        "select",
        "--method",
        "full",
        "--dataset",
        s(&ds_path),
        "--out",
        s(d.path()),
    ]));
    let other = d.path().join("other");
    fs::create_dir(&other).unwrap();
    ok(redor(&[
        "generate",
        "--expert",
        "2",
        "--random",
        "2",
        "--out",
        s(&other),
    ]));
    let out = redor(&[
        "train-eval",
        "--dataset",
        s(&other.join("dataset.jsonl")),
        "--selection",
        s(&d.path().join("full.selection.jsonl")),
        "--steps",
        "5",
        "--hidden",
        "4",
        "--out",
        s(d.path()),
    ]);
    assert_ne!(code(&out), 0);
    assert!(!d.path().join("metrics.csv").exists());
}

fn summary_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn compare_full_only_summary() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(
        d.path(),
        "[run]\nseeds = [0, 1, 2]\n[env]\nexpert = 3\nrandom = 3\n[train]\nsteps = 20\nhidden = 8\n[compare]\nmethods = [\"full\"]\neval_every = 10\n",
    );
    let run = |dir: &Path| ok(redor(&["compare", "--config", s(&cfg), "--out", s(dir)]));
    let a = d.path().join("a");
    let b = d.path().join("b");
    fs::create_dir(&a).unwrap();
    fs::create_dir(&b).unwrap();
    run(&a);
    run(&b);
    let rows = summary_rows(&a.join("summary.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "full");

    // re-aggregation from the metrics file
    let metrics = read_metrics(&a.join("metrics.csv")).unwrap();
    let finals: Vec<f64> = metrics.iter().filter(|r| r.step == 20).map(|r| r.mean_return).collect();
    assert_eq!(finals.len(), 3);
    let mean = finals.iter().sum::<f64>() / 3.0;
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), mean);

    // every column but the wall time reproduces exactly
    let strip = |rows: Vec<Vec<String>>| rows.into_iter().map(|r| r[..5].to_vec()).collect::<Vec<_>>();
    assert_eq!(strip(rows), strip(summary_rows(&b.join("summary.csv"))));
    assert_eq!(
        fs::read(a.join("dataset.jsonl")).unwrap(),
        fs::read(b.join("dataset.jsonl")).unwrap()
    );
}

#[test]
fn compare_requires_size_for_baselines_without_pursuit() {
    let d = TempDir::new().unwrap();
    let out = redor(&["compare", "--method", "random", "--out", s(d.path())]);
    assert_eq!(code(&out), 1);
}

#[test]
fn probe_all_and_unknown_name() {
    let d = TempDir::new().unwrap();
    ok(redor(&["probe", "--name", "all", "--seed", "2", "--out", s(d.path())]));
    let reports = read_reports(&d.path().join("probes.jsonl")).unwrap();
    let mut families: Vec<&str> = reports.iter().map(|r| r.probe.as_str()).collect();
    families.dedup();
    assert_eq!(families.len(), PROBE_NAMES.len());
    assert!(reports.iter().all(|r| r.passed));
    let first = fs::read(d.path().join("probes.jsonl")).unwrap();
    ok(redor(&["probe", "--seed", "2", "--out", s(d.path())]));
    assert_eq!(first, fs::read(d.path().join("probes.jsonl")).unwrap());

    let out = redor(&["probe", "--name", "bogus", "--out", s(d.path())]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    for name in PROBE_NAMES {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn config_and_thread_errors_are_usage_errors() {
    let d = TempDir::new().unwrap();
    let bad = write_config(d.path(), "[train]\nstepz = 3\n");
    assert_eq!(code(&redor(&["probe", "--config", s(&bad), "--out", s(d.path())])), 1);
    let missing = d.path().join("missing.toml");
    assert_eq!(
        code(&redor(&["probe", "--config", s(&missing), "--out", s(d.path())])),
        1
    );
    let out = redor_env(
        &["probe", "--name", "descent", "--out", s(d.path())],
        &[("REDOR_THREADS", "1")],
    );
    assert_eq!(code(&out), 0);
    let ds = small_dataset(d.path());
    let out = redor_env(
        &["select", "--method", "full", "--dataset", s(&ds), "--out", s(d.path())],
        &[("REDOR_THREADS", "zero")],
    );
    assert_eq!(code(&out), 1);
    let out = redor(&[
        "select",
        "--method",
        "full",
        "--dataset",
        s(&d.path().join("nope.jsonl")),
        "--out",
        s(d.path()),
    ]);
    assert_eq!(code(&out), 1);
}
