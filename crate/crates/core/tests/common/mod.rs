#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_wrapbox");

/// Runs `wrapbox` with `args` inside `dir`.
pub fn wrapbox(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn wrapbox")
}

/// Like [`wrapbox`], panicking with stderr unless the command succeeds.
pub fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = wrapbox(dir, args);
    assert!(
        out.status.success(),
        "wrapbox {args:?} failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// One end-to-end pass over every subcommand. Returns the produced files in
/// a fixed order.
pub fn full_pipeline(dir: &Path) -> Vec<PathBuf> {
    let steps: &[&[&str]] = &[
        &["synth", "--out", "data.wbx", "--n-per-class", "60", "--classes", "3", "--dims", "6", "--separation", "3", "--skew", "2", "--seed", "5"],
        &["synth", "--out", "data.csv", "--n-per-class", "10", "--classes", "2", "--dims", "3", "--seed", "5"],
        &["fit", "--data", "data.wbx", "--out", "knn.json", "--seed", "5"],
        &["fit", "--data", "data.wbx", "--out", "tree.json", "--kind", "tree", "--max-depth", "2", "--min-samples-leaf", "5", "--seed", "5"],
        &["fit", "--data", "data.wbx", "--out", "lmeans.json", "--kind", "lmeans", "--logit-transform", "--seed", "5"],
        &["fit", "--data", "data.wbx", "--out", "logreg.json", "--kind", "logreg", "--epochs", "50", "--seed", "5"],
        &["predict", "--model", "knn.json", "--out", "knn.pred.jsonl"],
        &["predict", "--model", "logreg.json", "--out", "logreg.pred.jsonl"],
        &["predict", "--model", "knn.json", "--queries", "data.wbx", "--limit", "7", "--out", "queries.pred.jsonl"],
        &["explain", "--model", "knn.json", "--out", "knn.case1.jsonl"],
        &["explain", "--model", "tree.json", "--policy", "case2", "--m", "3", "--out", "tree.case2.jsonl"],
        &["explain", "--model", "knn.json", "--policy", "case3", "--m", "2", "--out", "knn.case3.jsonl"],
        &["explain", "--model", "lmeans.json", "--policy", "case2", "--m", "4", "--out", "lmeans.case2.jsonl"],
        &["attribute", "--model", "knn.json", "--workers", "3", "--out", "knn.attr.jsonl", "--summary", "knn.summary.json"],
        &["attribute", "--model", "tree.json", "--workers", "2", "--limit", "8", "--out", "tree.attr.jsonl"],
        &["attribute", "--model", "lmeans.json", "--limit", "4", "--bins", "5", "--phi", "20", "--out", "lmeans.attr.jsonl"],
        &["evaluate", "--predictions", "knn.pred.jsonl", "--baseline", "logreg.pred.jsonl", "--attribution", "knn.attr.jsonl", "--out", "report.json"],
        &["project", "--data", "data.wbx", "--out", "proj.csv"],
        &["project", "--model", "lmeans.json", "--out", "proj.logits.csv"],
    ];
    let mut files = Vec::new();
    for args in steps {
        ok(dir, args);
        let out = args.iter().position(|a| *a == "--out").map(|i| args[i + 1]);
        files.push(dir.join(out.unwrap()));
        if let Some(i) = args.iter().position(|a| *a == "--summary") {
            files.push(dir.join(args[i + 1]));
        }
    }
    files
}
