//! Subprocess tests of the `spts` binary: the full pipeline on a small
//! synthetic dataset, reproducibility of checkpoint files, config-file
//! resolution, and the exit-code contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spts"))
        .args(args)
        .output()
        .expect("spawn spts")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process had no exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {}", path.display(), e))
}

fn path_str(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Synthesize a small labeled dataset under `dir`.
fn synth(dir: &Path, count: usize, points: usize) {
    assert_ok(&run(&[
        "synth",
        "--family",
        "tables",
        "--count",
        &count.to_string(),
        "--points",
        &points.to_string(),
        "--seed",
        "5",
        "--out",
        path_str(dir),
    ]));
}

#[test]
fn pipeline_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = tmp.path().join("dataset");
    synth(&dataset, 6, 600);
    assert!(dataset.join("manifest.csv").exists());
    assert!(dataset.join("landmarks.csv").exists());

    // train (one epoch; this exercises the full optimizer path)
    let model = tmp.path().join("run").join("model.spts");
    assert_ok(&run(&[
        "train",
        "--dataset",
        path_str(&dataset),
        "--out",
        path_str(&model),
        "--m",
        "16",
        "--epochs",
        "1",
        "--input-points",
        "512",
        "--seed",
        "1",
    ]));
    let loss = read(&tmp.path().join("run").join("loss.csv"));
    let mut lines = loss.lines();
    assert_eq!(lines.next(), Some("epoch,chamfer,consistency,total"));
    assert_eq!(lines.count(), 1);

    // embed two shapes
    let emb = tmp.path().join("emb");
    assert_ok(&run(&[
        "embed",
        "--checkpoint",
        path_str(&model),
        "--inputs",
        path_str(&dataset.join("shape_0000.xyz")),
        path_str(&dataset.join("shape_0001.xyz")),
        "--out",
        path_str(&emb),
    ]));
    let ply = read(&emb.join("shape_0000_sp.ply"));
    assert!(ply.starts_with("ply\n"));
    assert!(ply.contains("element vertex 16"));
    let features = read(&emb.join("shape_0001_features.csv"));
    assert_eq!(features.lines().count(), 17); // header + one row per structure point
    assert!(features.starts_with("structure_point,f0,"));

    // correspondence evaluation over a sampled pair subset
    let corr = tmp.path().join("corr.csv");
    assert_ok(&run(&[
        "eval-corr",
        "--checkpoint",
        path_str(&model),
        "--dataset",
        path_str(&dataset),
        "--pairs",
        "6",
        "--seed",
        "2",
        "--out",
        path_str(&corr),
    ]));
    let corr_text = read(&corr);
    let mut corr_lines = corr_text.lines();
    assert_eq!(corr_lines.next(), Some("0.05,0.1,0.15,0.2,0.25"));
    let row = corr_lines.next().expect("accuracy row");
    assert_eq!(row.split(',').count(), 5);
    for v in row.split(',') {
        let v: f64 = v.parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }

    // few-shot label transfer with exemplar sets drawn from the dataset
    let tr = tmp.path().join("transfer");
    assert_ok(&run(&[
        "transfer",
        "--checkpoint",
        path_str(&model),
        "--queries",
        path_str(&dataset),
        "--pool",
        path_str(&dataset),
        "--per-set",
        "2",
        "--sets",
        "1",
        "--seed",
        "4",
        "--out",
        path_str(&tr),
    ]));
    let iou = read(&tr.join("iou.csv"));
    assert_eq!(iou.lines().next(), Some("set,shape_id,iou"));
    assert_eq!(iou.lines().count(), 7); // header + all six labeled queries
    assert!(tr.join("set0").join("shape_0000.xyz").exists());

    // stability across densities
    let st = tmp.path().join("stability.csv");
    assert_ok(&run(&[
        "stability",
        "--checkpoint",
        path_str(&model),
        "--inputs",
        path_str(&dataset.join("shape_0000.xyz")),
        "--densities",
        "256,512",
        "--reference",
        "600",
        "--out",
        path_str(&st),
    ]));
    let st_text = read(&st);
    assert_eq!(st_text.lines().next(), Some("shape_id,256,512"));
    assert!(st_text.lines().last().unwrap().starts_with("mean,"));

    // morphable model with a component traversal
    let pca_model = tmp.path().join("morphable.spts");
    let trav = tmp.path().join("traverse");
    assert_ok(&run(&[
        "pca",
        "--checkpoint",
        path_str(&model),
        "--dataset",
        path_str(&dataset),
        "--k",
        "2",
        "--out",
        path_str(&pca_model),
        "--traverse",
        "0",
        "--traverse-out",
        path_str(&trav),
    ]));
    assert!(pca_model.exists());
    let recon = read(&tmp.path().join("recon.csv"));
    let errors: Vec<f64> = recon
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(errors.len(), 3); // k = 0, 1, 2
    assert!(errors.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    for ratio in ["-3", "-1.5", "0", "1.5", "3"] {
        assert!(trav.join(format!("component0_ratio{}.ply", ratio)).exists());
    }

    // gradient check
    let gc = run(&["gradcheck", "--seed", "0"]);
    assert_ok(&gc);
    assert!(stdout(&gc).contains("all 12 operators passed"));
}

#[test]
fn identical_seeds_write_identical_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = tmp.path().join("dataset");
    synth(&dataset, 4, 600);

    let mut bytes = Vec::new();
    for name in ["a.spts", "b.spts"] {
        let model = tmp.path().join(name);
        assert_ok(&run(&[
            "train",
            "--dataset",
            path_str(&dataset),
            "--out",
            path_str(&model),
            "--loss-csv",
            path_str(&tmp.path().join(format!("{}.csv", name))),
            "--epochs",
            "1",
            "--input-points",
            "512",
            "--seed",
            "7",
        ]));
        bytes.push(fs::read(&model).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn config_file_supplies_settings_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = tmp.path().join("dataset");
    let cfg = tmp.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# synth settings\nfamily = tables\ncount = 4\npoints = 600\nseed = 9\nout = {}\n",
            dataset.display()
        ),
    )
    .unwrap();

    // --count overrides the file's 4; everything else comes from the file
    assert_ok(&run(&["synth", "--config", path_str(&cfg), "--count", "3"]));
    let manifest = read(&dataset.join("manifest.csv"));
    assert_eq!(manifest.lines().count(), 4); // header + 3 shapes
    assert!(manifest.lines().nth(1).unwrap().contains(",600,"));
}

#[test]
fn usage_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    // unknown family
    let out = run(&["synth", "--family", "chairs", "--out", "/tmp/never"]);
    assert_eq!(exit_code(&out), 1);
    // missing required output
    let out = run(&["synth", "--family", "tables"]);
    assert_eq!(exit_code(&out), 1);
    // unknown flag (clap)
    let out = run(&["gradcheck", "--nope"]);
    assert_eq!(exit_code(&out), 1);
    // unsupported cloud extension
    let txt = tmp.path().join("cloud.txt");
    fs::write(&txt, "0 0 0\n").unwrap();
    let out = run(&[
        "embed",
        "--checkpoint",
        "/tmp/never.spts",
        "--inputs",
        path_str(&txt),
        "--out",
        "/tmp/never",
    ]);
    assert_eq!(exit_code(&out), 1);
    // density above the reference count
    let out = run(&[
        "stability",
        "--checkpoint",
        "/tmp/never.spts",
        "--inputs",
        path_str(&txt),
        "--densities",
        "4096",
        "--reference",
        "600",
        "--out",
        "/tmp/never.csv",
    ]);
    assert_eq!(exit_code(&out), 1);
    // exemplar files and a pool at the same time
    let out = run(&[
        "transfer",
        "--checkpoint",
        "/tmp/never.spts",
        "--queries",
        "/tmp/never",
        "--exemplars",
        path_str(&txt),
        "--pool",
        "/tmp/never",
        "--out",
        "/tmp/never2",
    ]);
    assert_eq!(exit_code(&out), 1);
    // dropout outside [0, 1)
    let out = run(&[
        "train",
        "--dataset",
        "/tmp/never",
        "--out",
        "/tmp/never.spts",
        "--dropout",
        "1.5",
    ]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn data_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    // nonexistent dataset directory
    let out = run(&[
        "train",
        "--dataset",
        path_str(&tmp.path().join("missing")),
        "--out",
        path_str(&tmp.path().join("m.spts")),
    ]);
    assert_eq!(exit_code(&out), 2);

    let dataset = tmp.path().join("dataset");
    synth(&dataset, 3, 600);
    // shapes smaller than the requested training resolution
    let out = run(&[
        "train",
        "--dataset",
        path_str(&dataset),
        "--out",
        path_str(&tmp.path().join("m.spts")),
        "--input-points",
        "700",
    ]);
    assert_eq!(exit_code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(stderr.contains("shape_0000"), "stderr: {}", stderr);

    // missing checkpoint file
    let out = run(&[
        "eval-corr",
        "--checkpoint",
        path_str(&tmp.path().join("missing.spts")),
        "--dataset",
        path_str(&dataset),
        "--out",
        path_str(&tmp.path().join("c.csv")),
    ]);
    assert_eq!(exit_code(&out), 2);
}
