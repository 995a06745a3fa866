use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use std::io::Write;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_causal-ate"));
    c.env_remove("CAUSAL_ATE_SEED").env_remove("CAUSAL_ATE_OUTPUT_DIR").env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn toy_config(dir: &Path, extra: &str) -> PathBuf {
    let corpus = dir.join("toy.jsonl");
    std::fs::write(&corpus, "{\"text\": \"bad dog\", \"label\": 1}\n{\"text\": \"good dog\", \"label\": 0}\n").unwrap();
    let cfg = dir.join("toy.toml");
    std::fs::write(
        &cfg,
        format!(
            "output_dir = {:?}\n{extra}\n[dataset]\nadapter = \"jsonl\"\npath = {:?}\n[split]\ntrain_fraction = 1.0\n",
            dir.join("out"),
            corpus
        ),
    )
    .unwrap();
    cfg
}

const MAX_WORD_UNFILTERED: &str = "[[estimators]]\nkind = \"max-word\"\n[ate]\nmin_support = 1\n[ate.replacement]\nassumption1_filter = false\n";

fn table_entries(path: &Path) -> serde_json::Value {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["entries"].clone()
}

#[test]
fn synth_is_deterministic_and_rejects_infeasible_specs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    std::fs::write(&spec, "cooccur_rate = 0.9\nn_sentences = 2000\nseed = 3\n").unwrap();
    for out in ["a", "b"] {
        let o = run(&["synth", "--spec", spec.to_str().unwrap(), "--out", dir.path().join(out).to_str().unwrap()]);
        assert!(o.status.success(), "{}", text(&o.stderr));
    }
    for f in ["corpus.jsonl", "manifest.json"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        assert_eq!(a, std::fs::read(dir.path().join("b").join(f)).unwrap());
    }
    let manifest = std::fs::read_to_string(dir.path().join("a/manifest.json")).unwrap();
    assert!(manifest.contains("spur00") && manifest.contains("tox09"));

    std::fs::write(&spec, "length_range = [1, 1]\n").unwrap();
    let o = run(&["synth", "--spec", spec.to_str().unwrap(), "--out", dir.path().join("c").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("infeasible"), "{}", text(&o.stderr));
}

#[test]
fn toy_pipeline_reproduces_hand_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), MAX_WORD_UNFILTERED);
    let c = cfg.to_str().unwrap();
    let o = run(&["train", "--config", c]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("max-word\tMaxWord\theld-out accuracy 0.5000"));
    let o = run(&["ate", "--config", c]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let table = dir.path().join("out/tables/max-word.json");
    let e = table_entries(&table);
    assert_eq!(e[0]["word"], "bad");
    assert_eq!(e[0]["ate"], 0.5);
    assert_eq!(e[1]["word"], "dog");
    assert_eq!(e[1]["ate"], 0.0);
    assert!(dir.path().join("out/config.resolved.toml").exists());

    let mut child = bin()
        .args(["score", "--table", table.to_str().unwrap()])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"bad dog\n\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    let lines: Vec<serde_json::Value> = text(&o.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["score"], 0.5);
    assert_eq!(lines[0]["argmax"], "bad");
    assert_eq!(lines[1]["score"], 0.0);
    assert!(lines[1]["argmax"].is_null());

    let input = dir.path().join("in.txt");
    std::fs::write(&input, "dog dog\n").unwrap();
    let o = run(&["score", "--table", table.to_str().unwrap(), "--input", input.to_str().unwrap(), "--p", "2"]);
    assert!(text(&o.stdout).contains("\"score\":0.0"));
    let o = run(&["score", "--table", table.to_str().unwrap(), "--p", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn training_twice_gives_identical_model_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "[[estimators]]\nkind = \"naive-bayes\"\n");
    let model = dir.path().join("out/models/naive-bayes.model");
    assert!(run(&["train", "--config", cfg.to_str().unwrap()]).status.success());
    let first = std::fs::read(&model).unwrap();
    assert!(run(&["train", "--config", cfg.to_str().unwrap()]).status.success());
    assert_eq!(first, std::fs::read(&model).unwrap());
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "[[estimators]]\nkind = \"random-forest\"\n");
    let o = run(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("random-forest"));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn high_min_support_gives_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "[[estimators]]\nkind = \"max-word\"\n[ate]\nmin_support = 3\n");
    assert!(run(&["train", "--config", cfg.to_str().unwrap()]).status.success());
    let o = run(&["ate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert_eq!(table_entries(&dir.path().join("out/tables/max-word.json")), serde_json::json!([]));
}

#[test]
fn vocabulary_mismatch_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "[[estimators]]\nkind = \"naive-bayes\"\n");
    assert!(run(&["train", "--config", cfg.to_str().unwrap()]).status.success());
    let changed = toy_config(dir.path(), "vocabulary_min_count = 2\n[[estimators]]\nkind = \"naive-bayes\"\n");
    let o = run(&["ate", "--config", changed.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("vocabulary"), "{}", text(&o.stderr));
}

#[test]
fn report_without_tables_names_the_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "[[estimators]]\nkind = \"naive-bayes\"\n");
    assert!(run(&["train", "--config", cfg.to_str().unwrap()]).status.success());
    let o = run(&["report", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("naive-bayes.json"), "{}", text(&o.stderr));
}

#[test]
fn synthetic_run_verifies_and_tampering_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = bin()
        .args(["run"])
        .env("CAUSAL_ATE_OUTPUT_DIR", &out)
        .env("CAUSAL_ATE_SEED", "11")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", text(&o.stderr));
    let stdout = text(&o.stdout);
    assert!(stdout.contains("5 spurious words checked, 0 missing, 0 violations"), "{stdout}");
    let resolved = std::fs::read_to_string(out.join("config.resolved.toml")).unwrap();
    assert!(resolved.contains("seed = 11"));
    let theorem: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("reports/theorem.json")).unwrap()).unwrap();
    assert_eq!(theorem["n_violations"], 0);
    let md = std::fs::read_to_string(out.join("reports/groups.md")).unwrap();
    assert_eq!(md.matches("| positive |").count(), 20, "{md}");

    let resolved_path = out.join("config.resolved.toml");
    let o = run(&["verify", "--config", resolved_path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));

    let table = out.join("tables/max-word.json");
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&table).unwrap()).unwrap();
    for e in v["entries"].as_array_mut().unwrap() {
        if e["word"] == "gay" {
            e["ate"] = serde_json::json!(0.3);
        }
    }
    std::fs::write(&table, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let o = run(&["verify", "--config", resolved_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", text(&o.stderr));
    assert!(text(&o.stderr).contains("gay"));
}

#[test]
fn config_subcommand_prints_resolved_defaults() {
    let o = bin().args(["config"]).env("CAUSAL_ATE_SEED", "5").output().unwrap();
    assert!(o.status.success());
    let s = text(&o.stdout);
    assert!(s.contains("seed = 5") && s.contains("[[estimators]]") && s.contains("kind = \"max-word\""), "{s}");
}
