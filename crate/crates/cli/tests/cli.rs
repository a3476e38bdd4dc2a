use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_triplet-embed"));
    c.env_remove("TRIPLET_EMBED_THREADS");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn manifest(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

/// A small feature directory and a triplet file simulated from it.
fn fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["synth", "--objects", "30", "--dims", "3", "--seed", "2", "--out", "feat"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(dir.path(), &["simulate", "--features", "feat", "--n", "3000", "--out", "t.tsv"]);
    assert_eq!(code(&o), 0);
    dir
}

#[test]
fn validate_accepts_well_formed_features() {
    let dir = fixture();
    let o = run(dir.path(), &["validate", "--features", "feat", "--triplets", "t.tsv"]);
    assert_eq!(code(&o), 0);
    let m = manifest(&o);
    assert_eq!(m["command"], "validate");
    assert_eq!(m["result"]["features"]["n_objects"], 30);
    assert_eq!(m["result"]["triplets"]["n_triplets"], 3000);
}

#[test]
fn exit_codes_by_failure_kind() {
    let dir = fixture();
    let o = run(dir.path(), &["frobnicate"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&run(dir.path(), &["simulate", "--features", "feat"])), 1);
    assert_eq!(code(&run(dir.path(), &["--help"])), 0);

    assert_eq!(code(&run(dir.path(), &["validate", "--features", "missing"])), 2);
    fs::write(dir.path().join("feat/features.bin"), [0u8; 12]).unwrap();
    assert_eq!(code(&run(dir.path(), &["validate", "--features", "feat"])), 2);

    // Two all-zero embeddings give constant RSMs with no correlation to speak of.
    fs::write(dir.path().join("zero.tsv"), "0\n0\n0\n0\n0\n").unwrap();
    let o = run(
        dir.path(),
        &["rsa", "--embedding-a", "zero.tsv", "--embedding-b", "zero.tsv", "--out", "r.json"],
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = fixture();
    let train = |out: &str| {
        let o = run(
            dir.path(),
            &[
                "--threads", "1", "train", "--triplets", "t.tsv", "--out", out, "--p-init", "6", "--max-epochs", "5",
                "--batch-size", "128", "--learning-rate", "0.03",
            ],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    };
    train("a");
    train("b");
    for f in ["embedding_mu.tsv", "embedding_sigma.tsv", "embedding_pruned.tsv", "train_log.json"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    let o = run(dir.path(), &["simulate", "--features", "feat", "--n", "3000", "--out", "t2.tsv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(dir.path().join("t.tsv")).unwrap(), fs::read(dir.path().join("t2.tsv")).unwrap());
}

#[test]
fn config_fills_gaps_and_flags_win() {
    let dir = fixture();
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"seed": 5, "simulate": {"n": 40, "tie_rule": "highest"}, "rsa": {"mode": "exact"}}"#,
    )
    .unwrap();
    let o = run(dir.path(), &["--config", "cfg.json", "simulate", "--features", "feat", "--out", "a.tsv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(manifest(&o)["seed"], 5);
    assert_eq!(fs::read_to_string(dir.path().join("a.tsv")).unwrap().lines().count(), 40);

    let o = run(
        dir.path(),
        &["--config", "cfg.json", "simulate", "--features", "feat", "--out", "b.tsv", "--seed", "9", "--n", "7"],
    );
    assert_eq!(manifest(&o)["seed"], 9);
    assert_eq!(fs::read_to_string(dir.path().join("b.tsv")).unwrap().lines().count(), 7);

    fs::write(dir.path().join("bad.json"), r#"{"simulate": {"nn": 3}}"#).unwrap();
    let o = run(dir.path(), &["--config", "bad.json", "simulate", "--features", "feat", "--out", "c.tsv"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn threads_env_mirrors_flag() {
    let dir = fixture();
    let o = bin()
        .current_dir(dir.path())
        .env("TRIPLET_EMBED_THREADS", "2")
        .args(["validate", "--features", "feat"])
        .output()
        .unwrap();
    assert_eq!(manifest(&o)["threads"], 2);
    let o = run(dir.path(), &["--threads", "1", "validate", "--features", "feat"]);
    assert_eq!(manifest(&o)["threads"], 1);
}

#[test]
fn comparison_pipeline_on_planted_embedding() {
    let dir = fixture();
    let truth = "feat/truth.tsv";
    let o = run(dir.path(), &["rsa", "--embedding-a", truth, "--embedding-b", truth, "--out", "rsa.json"]);
    assert_eq!(code(&o), 0);
    assert!((manifest(&o)["result"]["r"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let o = run(dir.path(), &["match-dims", "--source", truth, "--target", truth, "--out", "m.tsv"]);
    assert_eq!(code(&o), 0);
    let tsv = fs::read_to_string(dir.path().join("m.tsv")).unwrap();
    for line in tsv.lines().skip(1) {
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols[0], cols[1]);
    }

    let o = run(dir.path(), &["cumulative-rsa", "--target", truth, "--source", truth, "--out", "c.tsv"]);
    assert_eq!(code(&o), 0);
    assert!((manifest(&o)["result"]["full_r"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    fs::write(dir.path().join("labels.tsv"), "0\tvisual\n1\tsemantic\n").unwrap();
    let o = run(
        dir.path(),
        &["jackknife", "--embedding", truth, "--triplets", "t.tsv", "--labels", "labels.tsv", "--out", "j.json"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let o = run(dir.path(), &["report", "--cumulative", "c.tsv", "--relevance", "j.json", "--out", "figs"]);
    assert_eq!(code(&o), 0);
    for f in ["cumulative_rsa.svg", "relevance_signed.svg", "relevance_absolute.svg"] {
        assert!(fs::read_to_string(dir.path().join("figs").join(f)).unwrap().starts_with("<svg"));
    }

    let o = run(dir.path(), &["ridge", "--features", "feat", "--embedding", truth, "--out", "ridge"]);
    assert_eq!(code(&o), 0);
    let r2 = &manifest(&o)["result"]["r2_heldout"];
    assert!(r2.as_array().unwrap().iter().all(|v| v.as_f64().unwrap() > 0.99));
    assert_eq!(fs::read(dir.path().join("ridge/ridge_weights.bin")).unwrap().len(), 3 * 3 * 4);
}
