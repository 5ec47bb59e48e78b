use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn deephate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deephate"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.conf");
    std::fs::write(
        &path,
        format!(
            "hidden_size = 16\nbatch_size = 32\nepochs = 30\neval_every = 10\nseed = 1\n\
             embeddings.path = {}\ntask.toy.path = {}\ntask.toy.labels = hate,offensive,neither\n{extra}",
            fixture("glove_d8.txt"),
            fixture("toy_target.csv")
        ),
    )
    .unwrap();
    path
}

#[test]
fn preprocess_keeps_every_row() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("raw.csv");
    let output = dir.path().join("clean.csv");
    std::fs::write(&input, "id,text,label\n1,\"Wow!!! http://t.co/x ok\",a\n2,,b\n3,fine,a\n").unwrap();
    let out = deephate(&["preprocess", "--input", s(&input), "--output", s(&output)]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(
        std::fs::read_to_string(&output).unwrap(),
        "id,tokens,label\n1,Wow ! ok,a\n2,,b\n3,fine,a\n"
    );
}

#[test]
fn malformed_csv_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("raw.csv");
    std::fs::write(&input, "id,text,label\n1,ok,a\n2,broken\n").unwrap();
    let out = deephate(&["preprocess", "--input", s(&input), "--output", s(&dir.path().join("o.csv"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn unknown_flag_and_unknown_key_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = deephate(&["train", "--config", s(&cfg), "--out-dir", s(dir.path()), "--fast"]);
    assert_eq!(out.status.code(), Some(2));
    let cfg = write_config(dir.path(), "dropout = 0.5\n");
    let out = deephate(&["train", "--config", s(&cfg), "--out-dir", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dropout"));
}

#[test]
fn missing_data_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.conf");
    std::fs::write(&cfg, "epochs = 10\ntask.a.path = nope.csv\ntask.a.labels = x,y\n").unwrap();
    let out = deephate(&["train", "--config", s(&cfg), "--out-dir", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn diverging_training_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "lr = 1e300\n");
    let out = deephate(&["train", "--config", s(&cfg), "--out-dir", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(4), "{out:?}");
}

#[test]
fn transfer_mode_with_one_task_warns_and_trains() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mode = transfer\n");
    let out = Command::new(env!("CARGO_BIN_EXE_deephate"))
        .args(["train", "--config", s(&cfg), "--out-dir", s(&dir.path().join("o"))])
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("single-task"));
}

/// Trains once, then exercises eval, highlight and map on the result.
#[test]
fn train_then_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let run = dir.path().join("run");
    let out = deephate(&["train", "--config", s(&cfg), "--out-dir", s(&run), "--repetitions", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["checkpoint.bin", "history.csv", "manifest.json", "config.txt", "runs.csv", "summary.json"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["seed"], 1);
    let runs = std::fs::read_to_string(run.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 3);
    let ckpt = run.join("checkpoint.bin");

    // Evaluation on the task's own corpus.
    let eval_dir = dir.path().join("eval");
    let out = deephate(&[
        "eval", "--config", s(&cfg), "--checkpoint", s(&ckpt), "--data", &fixture("toy_target.csv"),
        "--task", "toy", "--out", s(&eval_dir),
    ]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval_dir.join("report.json")).unwrap()).unwrap();
    let f1 = report["macro_f1"].as_f64().unwrap();
    assert!(f1 >= 0.95, "macro-F1 {f1}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("macro-F1"));

    // Highlight of a one-token post.
    let one = dir.path().join("one.csv");
    std::fs::write(&one, "id,text,label\nx,vermin,hate\n").unwrap();
    let html = dir.path().join("h.html");
    let out = deephate(&[
        "highlight", "--config", s(&cfg), "--checkpoint", s(&ckpt), "--data", s(&one), "--task", "toy",
        "--out", s(&html),
    ]);
    assert!(out.status.success());
    let html = std::fs::read_to_string(&html).unwrap();
    assert_eq!(html.matches("<span class=\"token\"").count(), 1);
    assert!(html.contains("rgba(214, 39, 40, 1.000)"));

    // Map over 100 posts.
    let hundred = dir.path().join("hundred.csv");
    let text = std::fs::read_to_string(fixture("toy_target.csv")).unwrap();
    std::fs::write(&hundred, text.lines().take(101).collect::<Vec<_>>().join("\n") + "\n").unwrap();
    let svg = dir.path().join("map.svg");
    let out = deephate(&[
        "map", "--config", s(&cfg), "--checkpoint", s(&ckpt), "--data", s(&hundred), "--task", "toy",
        "--out", s(&svg), "--iterations", "300",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("class=\"marker").count(), 100);
    assert_eq!(std::fs::read_to_string(svg.with_extension("csv")).unwrap().lines().count(), 101);

    // A task the checkpoint does not know.
    let out = deephate(&[
        "eval", "--config", s(&cfg), "--checkpoint", s(&ckpt), "--data", &fixture("toy_helper.csv"),
        "--task", "helper", "--out", s(&eval_dir),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("task table mismatch"));
}

#[test]
fn grid_writes_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g.conf");
    std::fs::write(
        &cfg,
        format!(
            "epochs = 10\neval_every = 5\nembeddings.path = {}\ntask.toy.path = {}\ntask.toy.labels = hate,offensive,neither\n",
            fixture("glove_d8.txt"),
            fixture("toy_target.csv")
        ),
    )
    .unwrap();
    let csv = dir.path().join("grid.csv");
    let out = deephate(&["grid", "--config", s(&cfg), "--hidden", "4,8", "--batch", "16,64", "--out", s(&csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("hidden_size,batch_size,macro_f1\n"));
    assert_eq!(text.lines().count(), 5);
}
