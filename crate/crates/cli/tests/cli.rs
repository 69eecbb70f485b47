use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use phonedur::io;

fn phonedur(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phonedur")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn simulated(dir: &Path) -> (String, String) {
    let r = dir.join("ref.jsonl").display().to_string();
    let p = dir.join("pred.jsonl").display().to_string();
    let out = phonedur(&[
        "simulate", "--utterances", "40", "--sigmas", "0", "--alphas", "1", "--reference-out", &r, "--predictions-out", &p,
    ]);
    stdout(&out);
    (r, p)
}

#[test]
fn exit_codes_follow_the_error_class() {
    assert_eq!(phonedur(&["--help"]).status.code(), Some(0));
    assert_eq!(phonedur(&["--version"]).status.code(), Some(0));
    assert_eq!(phonedur(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(phonedur(&["stats", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(phonedur(&["modify", "--input", "x", "--sigma", "-1"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\":\"a\",\"phonemes\":[\"AA\"],\"durations\":[3]}\nnot json\n").unwrap();
    let out = phonedur(&["stats", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let missing = dir.path().join("missing.jsonl");
    assert_eq!(phonedur(&["stats", "--input", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn zero_sigma_walk_reproduces_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let (r, _) = simulated(dir.path());
    let out = stdout(&phonedur(&["modify", "--input", &r, "--mode", "walk", "--sigma", "0", "--seed", "4"]));
    assert_eq!(out, fs::read_to_string(&r).unwrap());
}

#[test]
fn walk_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (r, _) = simulated(dir.path());
    let run = |seed: &str| stdout(&phonedur(&["modify", "--input", &r, "--sigma", "0.05", "--seed", seed]));
    assert_eq!(run("1"), run("1"));
    assert_ne!(run("1"), run("2"));
}

#[test]
fn self_divergence_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (r, p) = simulated(dir.path());
    let report: serde_json::Value = serde_json::from_str(&stdout(&phonedur(&["kld", "--pred", &r, "--ref", &r]))).unwrap();
    assert_eq!(report["mean"].as_f64(), Some(0.0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&phonedur(&["kld", "--pred", &p, "--ref", &r]))).unwrap();
    assert!(report["mean"].as_f64().unwrap() > 0.0);
}

#[test]
fn oracle_sub_then_kld_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (r, p) = simulated(dir.path());
    let o = dir.path().join("oracle.jsonl").display().to_string();
    stdout(&phonedur(&["oracle-sub", "--pred", &p, "--ref", &r, "--out", &o]));
    let report: serde_json::Value = serde_json::from_str(&stdout(&phonedur(&["kld", "--pred", &o, "--ref", &r]))).unwrap();
    assert_eq!(report["mean"].as_f64(), Some(0.0));
}

#[test]
fn simulate_writes_one_row_per_setting() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.json");
    fs::write(&cfg, r#"{"utterances": 30, "sigmas": [0.0, 0.01, 0.02], "alphas": [1.0, 1.1, 1.2, 1.3]}"#).unwrap();
    let csv = stdout(&phonedur(&["simulate", "--config", cfg.to_str().unwrap()]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "mode,parameter,data_hours,length_ratio,kld");
    assert_eq!(lines.len() - 1, 2 + 4 + 3);

    fs::write(&cfg, r#"{"utterances": 30, "no_such_key": 1}"#).unwrap();
    assert_eq!(phonedur(&["simulate", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn manifest_records_resolved_config_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.json");
    fs::write(&cfg, r#"{"utterances": 30, "sigmas": [0.0], "alphas": [1.0], "mean_shrink": 0.8}"#).unwrap();
    let out = dir.path().join("sweep.csv");
    stdout(&phonedur(&[
        "simulate", "--config", cfg.to_str().unwrap(), "--utterances", "20", "--seed", "9", "--out", out.to_str().unwrap(),
    ]));
    assert!(out.exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["utterances"], 20);
    assert_eq!(manifest["config"]["mean_shrink"], 0.8);
    assert_eq!(manifest["config"]["seed"], 9);
}

#[test]
fn stats_and_histogram_export() {
    let dir = tempfile::tempdir().unwrap();
    let (r, _) = simulated(dir.path());
    let stats: serde_json::Value = serde_json::from_str(&stdout(&phonedur(&["stats", "--input", &r]))).unwrap();
    assert_eq!(stats["utterances"], 40);
    assert!(stats["per_phoneme"]["AA"]["mean"].as_f64().unwrap() > 0.0);
    let csv = stdout(&phonedur(&["hist-export", "--input", &r, "--phoneme", "AA"]));
    assert!(csv.lines().count() > 1);
    assert_eq!(phonedur(&["hist-export", "--input", &r, "--phoneme", "QQ"]).status.code(), Some(1));
}

#[test]
fn upsample_writes_weight_rows_per_frame() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("d.jsonl");
    fs::write(&input, "{\"id\":\"u1\",\"phonemes\":[\"AA\",\"B\",\"K\"],\"durations\":[2,0,3],\"frame_shift_ms\":12.5}\n").unwrap();
    let out = dir.path().join("up");
    stdout(&phonedur(&["upsample", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    let w = io::read_matrix(&out.join("u1.fmat")).unwrap();
    assert_eq!((w.rows(), w.cols()), (5, 3));
    for t in 0..5 {
        let s: f64 = (0..3).map(|i| w.get(t, i)).sum();
        assert!((s - 1.0).abs() < 1e-6);
    }

    let states = dir.path().join("states");
    fs::create_dir_all(&states).unwrap();
    let h = phonedur::Matrix::new(3, 2, vec![1.0, 0.0, 5.0, 5.0, 0.0, 1.0]).unwrap();
    io::write_matrix(&states.join("u1.fmat"), &h).unwrap();
    let out2 = dir.path().join("up2");
    stdout(&phonedur(&[
        "upsample", "--input", input.to_str().unwrap(), "--states", states.to_str().unwrap(), "--out", out2.to_str().unwrap(),
    ]));
    let y = io::read_matrix(&out2.join("u1.fmat")).unwrap();
    assert_eq!((y.rows(), y.cols()), (5, 2));
    assert_eq!(phonedur(&["upsample", "--input", input.to_str().unwrap(), "--sigma-g", "0", "--out", out2.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn ctc_align_decodes_emission_files() {
    let dir = tempfile::tempdir().unwrap();
    let vocab = dir.path().join("vocab.txt");
    fs::write(&vocab, "<blank>\nAA\nB\n[space]\n").unwrap();
    let transcripts = dir.path().join("t.jsonl");
    fs::write(&transcripts, "{\"id\":\"u1\",\"phonemes\":[\"AA\",\"[space]\",\"B\"],\"frame_shift_ms\":20.0}\n").unwrap();
    let em = dir.path().join("em");
    fs::create_dir_all(&em).unwrap();
    let peak = |c: usize| (0..4).map(move |j| if j == c { 5.0 } else { 0.0 });
    let logits: Vec<f64> = [1, 1, 0, 3, 0, 2, 2, 2].iter().flat_map(|&c| peak(c)).collect();
    io::write_matrix(&em.join("u1.fmat"), &phonedur::Matrix::new(8, 4, logits).unwrap()).unwrap();
    let run = |extra: &[&str]| -> Vec<u64> {
        let mut args = vec![
            "ctc-align", "--emissions", em.to_str().unwrap(), "--transcripts", transcripts.to_str().unwrap(),
            "--vocab", vocab.to_str().unwrap(), "--logits",
        ];
        args.extend_from_slice(extra);
        let out = stdout(&phonedur(&args));
        let rec: serde_json::Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
        assert_eq!(rec["frame_shift_ms"], 20.0);
        rec["durations"].as_array().unwrap().iter().map(|d| d.as_u64().unwrap()).collect()
    };
    assert_eq!(run(&[]), [2, 2, 4]);
    let forward = run(&["--blank-floor", "1", "--attach", "forward"]);
    let backward = run(&["--blank-floor", "1", "--attach", "backward"]);
    for d in [&forward, &backward] {
        assert!(d.iter().all(|&x| x >= 1));
        assert_eq!(d.iter().sum::<u64>(), 8);
    }
    assert_ne!(forward, backward);
}

#[test]
fn shipped_simulation_config_matches_the_defaults() {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/simulate.json");
    let with = stdout(&phonedur(&["simulate", "--config", cfg, "--utterances", "50"]));
    let without = stdout(&phonedur(&["simulate", "--utterances", "50"]));
    assert_eq!(with, without);
}
