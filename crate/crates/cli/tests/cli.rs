use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn skelgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skelgraph"))
        .args(args)
        .env_remove("SKELGRAPH_RULES")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = skelgraph(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            files.extend(tree(&path));
        } else {
            files.push((path.strip_prefix(dir).unwrap().display().to_string(), fs::read(&path).unwrap()));
        }
    }
    files.sort();
    files
}

#[test]
fn canonicalize_arguments_and_stdin() {
    assert_eq!(ok(&["canonicalize", "OCC", "C(C)O"]), "CCO\nCCO\n");
    let mut child = Command::new(env!("CARGO_BIN_EXE_skelgraph"))
        .arg("canonicalize")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"OCC\n\nc1ccccc1\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "CCO\nc1ccccc1\n");
    assert!(!skelgraph(&["canonicalize", "C(("]).status.success());
}

#[test]
fn augment_then_expand_restores_molecule() {
    let pseudo = ok(&["--seed", "4", "augment", "--abbrev-prob", "1", "--rgroup-prob", "0", "CC(=O)OCc1ccccc1"]);
    assert!(pseudo.contains('['), "{pseudo}");
    let back = ok(&["augment", "--expand", pseudo.trim()]);
    assert_eq!(ok(&["canonicalize", back.trim()]), ok(&["canonicalize", "CC(=O)OCc1ccccc1"]));
}

#[test]
fn generate_is_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&["--seed", "7", "generate", "--out", out.to_str().unwrap(), "--count", "10", "--image-size", "200", "--verify"]);
    }
    let (ta, tb) = (tree(&a), tree(&b));
    assert_eq!(ta.len(), 11);
    assert!(ta == tb);
    let c = dir.path().join("c");
    ok(&["--seed", "8", "generate", "--out", c.to_str().unwrap(), "--count", "10", "--image-size", "200"]);
    assert!(tree(&c) != ta);
}

#[test]
fn predict_evaluate_overlay_round() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds");
    let ds_s = ds.to_str().unwrap();
    ok(&["--seed", "3", "generate", "--out", ds_s, "--count", "6", "--image-size", "200"]);
    let gold = ds.join("dataset.jsonl");
    let pred = dir.path().join("pred.jsonl");
    ok(&["predict", "--dataset", ds_s, "--out", pred.to_str().unwrap()]);

    let report_path = dir.path().join("report.json");
    let json = ok(&[
        "evaluate",
        "--pred",
        pred.to_str().unwrap(),
        "--gold",
        gold.to_str().unwrap(),
        "--format",
        "json",
        "--json",
        report_path.to_str().unwrap(),
    ]);
    let report: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(report["accuracy"], 1.0);
    assert_eq!(report["n"], 6);
    assert_eq!(fs::read_to_string(&report_path).unwrap().trim(), json.trim());
    let self_eval = ok(&["evaluate", "--pred", gold.to_str().unwrap(), "--gold", gold.to_str().unwrap()]);
    assert!(self_eval.contains("100.00%"), "{self_eval}");

    let corrupted = dir.path().join("corrupted.jsonl");
    ok(&["predict", "--dataset", ds_s, "--corruption", "1", "--out", corrupted.to_str().unwrap()]);
    let r = ok(&["evaluate", "--pred", corrupted.to_str().unwrap(), "--gold", gold.to_str().unwrap(), "--format", "json"]);
    let r: serde_json::Value = serde_json::from_str(&r).unwrap();
    assert!(r["accuracy"].as_f64().unwrap() < 1.0);

    let png = dir.path().join("overlay.png");
    ok(&[
        "overlay",
        "--image",
        ds.join("images/000000.png").to_str().unwrap(),
        "--pred",
        pred.to_str().unwrap(),
        "--out",
        png.to_str().unwrap(),
    ]);
    let (w, h) = image::image_dimensions(&png).unwrap();
    assert_eq!((w, h), image::image_dimensions(ds.join("images/000000.png")).unwrap());
}

#[test]
fn vocab_lists_special_coordinate_and_label_tokens() {
    let text = ok(&["--bins", "16", "vocab"]);
    let tokens: Vec<&str> = text.lines().collect();
    assert_eq!(&tokens[..3], &["<pad>", "<bos>", "<eos>"]);
    assert!(tokens.contains(&"[Me]") && tokens.contains(&"[R1]"));
    assert!(tokens.contains(&"<x15>") && !tokens.contains(&"<x16>"));
    let unique: std::collections::BTreeSet<_> = tokens.iter().collect();
    assert_eq!(unique.len(), tokens.len());
    assert!(tokens.len() < ok(&["vocab"]).lines().count());
}

#[test]
fn render_writes_png_and_record() {
    let dir = tempfile::tempdir().unwrap();
    let png = dir.path().join("m.png");
    let line = ok(&["render", "N[C@@H](C)C(=O)O", "--out", png.to_str().unwrap(), "--image-size", "256"]);
    let record: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(record["smiles"], ok(&["canonicalize", "N[C@@H](C)C(=O)O"]).trim());
    assert_eq!(image::image_dimensions(&png).unwrap(), (256, 256));
}

#[test]
fn usage_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();
    for args in [
        vec!["generate", "--out", out, "--count", "0"],
        vec!["generate", "--out", out, "--abbrev-prob", "1.5"],
        vec!["predict"],
        vec!["bogus"],
        vec!["--bins", "0", "vocab"],
    ] {
        assert!(!skelgraph(&args).status.success(), "{args:?}");
    }
}

#[test]
fn external_predictor_arguments_follow_double_dash() {
    let Some(py) = ["python3", "python"]
        .into_iter()
        .find(|p| Command::new(p).arg("--version").output().is_ok())
    else {
        eprintln!("no python interpreter; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds");
    ok(&["generate", "--out", ds.to_str().unwrap(), "--count", "3", "--image-size", "200"]);
    let script = dir.path().join("model.py");
    fs::write(
        &script,
        r#"import sys
assert sys.argv[1:] == ["--flag"], sys.argv
for line in sys.stdin:
    print('{"atoms": [{"label": "C", "x_bin": 1, "y_bin": 1}, {"label": "N", "x_bin": 3, "y_bin": 1}], "bonds": [{"i": 0, "j": 1, "type": "triple", "score": 1.0}]}', flush=True)
"#,
    )
    .unwrap();
    let vocab = dir.path().join("vocab.txt");
    ok(&["vocab", "--out", vocab.to_str().unwrap()]);
    let pred = dir.path().join("pred.jsonl");
    ok(&[
        "predict",
        "--dataset",
        ds.to_str().unwrap(),
        "--predictor",
        "external",
        "--vocab",
        vocab.to_str().unwrap(),
        "--out",
        pred.to_str().unwrap(),
        "--",
        py,
        script.to_str().unwrap(),
        "--flag",
    ]);
    let lines: Vec<serde_json::Value> = fs::read_to_string(&pred)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().all(|l| l["smiles"] == "C#N"), "{lines:?}");
}
