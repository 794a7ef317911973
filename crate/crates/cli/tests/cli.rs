use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;
use topocomp::checkpoint::Checkpoint;
use topocomp::compression::{CompressedArtifact, ARTIFACT_HEADER_BYTES};
use topocomp::inference::hyperedge_count;
use topocomp::ParamStore32;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topocomp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Synthetic Abilene dataset plus a frozen (lr = 0) SetMP checkpoint at 1/3.
struct Abilene {
    _dir: TempDir,
    data: PathBuf,
    run: PathBuf,
    train_stdout: String,
}

fn abilene() -> &'static Abilene {
    static CELL: OnceLock<Abilene> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let data = dir.path().join("data");
        let run = dir.path().join("run");
        ok(&["ingest", "--synthetic", "abilene", "--window", "10", "--seed", "7", "--out", s(&data)]);
        let train_stdout = ok(&[
            "train", "--data", s(&data), "--model", "setmp", "--rc", "1/3", "--p", "8", "--dvc", "2", "--dwc", "10",
            "--epochs", "1", "--lr", "0", "--seed", "7", "--out", s(&run),
        ]);
        Abilene {
            _dir: dir,
            data,
            run,
            train_stdout,
        }
    })
}

/// Four links, `t` intervals of smooth positive traffic.
fn write_series(path: &Path, t: usize) {
    let mut text = String::from("a->b,b->a,b->c,c->b\n");
    for i in 0..t {
        let x = i as f64;
        let row: Vec<String> = (0..4)
            .map(|l| format!("{}", 100.0 + 20.0 * (x * 0.3 + l as f64).sin() + l as f64 * 5.0))
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

/// Period equal to the window, so every window repeats.
fn write_periodic_series(path: &Path, t: usize) {
    let mut text = String::from("a->b,b->a,b->c,c->b\n");
    for i in 0..t {
        let phase = std::f64::consts::TAU * (i % 10) as f64 / 10.0;
        let row: Vec<String> = (0..4)
            .map(|l| format!("{:?}", 100.0 + 20.0 * (phase + l as f64).sin() + l as f64 * 5.0))
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

#[test]
fn ingest_is_deterministic_and_reports_splits() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("series.csv");
    write_series(&csv, 200);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = ok(&["ingest", "--csv", s(&csv), "--window", "10", "--seed", "7", "--out", s(&a)]);
    assert!(out.contains("windows:    20"), "{out}");
    assert!(out.contains("train 12 / val 4 / test 4"), "{out}");
    ok(&["ingest", "--csv", s(&csv), "--window", "10", "--seed", "7", "--out", s(&b)]);
    assert_eq!(fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());
    assert_eq!(fs::read(a.join("series.csv")).unwrap(), fs::read(b.join("series.csv")).unwrap());
}

#[test]
fn ingest_sndlib_trace() {
    let dir = TempDir::new().unwrap();
    let net = dir.path().join("net.xml");
    fs::write(
        &net,
        r#"<network><networkStructure>
  <nodes><node id="a"/><node id="b"/><node id="c"/></nodes>
  <links>
    <link id="ab"><source>a</source><target>b</target></link>
    <link id="bc"><source>b</source><target>c</target></link>
  </links>
</networkStructure></network>"#,
    )
    .unwrap();
    let demands = dir.path().join("demands");
    fs::create_dir(&demands).unwrap();
    for i in 0..60 {
        fs::write(
            demands.join(format!("d{i:03}.xml")),
            format!(
                r#"<network><meta><granularity>5min</granularity></meta><demands>
  <demand id="1"><source>a</source><target>c</target><demandValue>{}</demandValue></demand>
  <demand id="2"><source>c</source><target>b</target><demandValue>{}</demandValue></demand>
</demands></network>"#,
                10.0 + i as f64,
                3.0 + (i % 7) as f64
            ),
        )
        .unwrap();
    }
    let out_dir = dir.path().join("ds");
    let out = ok(&[
        "ingest", "--sndlib", s(&net), "--demands", s(&demands), "--window", "10", "--seed", "7", "--out", s(&out_dir),
    ]);
    assert!(out.contains("links:      4"), "{out}");
    assert!(out.contains("windows:    6"), "{out}");
}

#[test]
fn missing_input_names_the_path() {
    let out = run(&["ingest", "--csv", "/nonexistent/trace.csv", "--seed", "1", "--out", "/tmp/unused"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/trace.csv"));
}

#[test]
fn missing_seed_is_a_config_error() {
    let out = run(&["ingest", "--synthetic", "abilene", "--out", "/tmp/unused"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn frozen_training_keeps_initialization() {
    let a = abilene();
    assert!(a.train_stdout.contains("achieved r_c: 100/300 = 1/3"), "{}", a.train_stdout);
    let ckpt = Checkpoint::load(&a.run.join("model.ckpt")).unwrap();
    let init: ParamStore32 = ckpt.meta.model.init_params(&mut ChaCha8Rng::seed_from_u64(7));
    assert_eq!(ckpt.params, init);
    let history = fs::read_to_string(a.run.join("history.jsonl")).unwrap();
    assert_eq!(history.lines().count(), 1);
}

#[test]
fn checkpoint_load_then_save_is_byte_identical() {
    let a = abilene();
    let bytes = fs::read(a.run.join("model.ckpt")).unwrap();
    let ckpt = Checkpoint::from_bytes(&bytes).unwrap();
    assert_eq!(ckpt.to_bytes().unwrap(), bytes);
}

#[test]
fn compress_decompress_roundtrip() {
    let a = abilene();
    let dir = TempDir::new().unwrap();
    let ckpt = a.run.join("model.ckpt");
    let art = dir.path().join("w.tgsc");
    let art2 = dir.path().join("w2.tgsc");
    ok(&["compress", "--seed", "1", "--checkpoint", s(&ckpt), "--data", s(&a.data), "--index", "5", "--out", s(&art)]);
    ok(&["compress", "--seed", "1", "--checkpoint", s(&ckpt), "--data", s(&a.data), "--index", "5", "--out", s(&art2)]);
    let bytes = fs::read(&art).unwrap();
    assert_eq!(bytes, fs::read(&art2).unwrap());

    let (n, dvc, dwc) = (30, 2, 10);
    let k = hyperedge_count(n, 8);
    assert_eq!(bytes.len(), ARTIFACT_HEADER_BYTES + 2 * n + 4 * (n * dvc + k * dwc));
    let parsed = CompressedArtifact::<f32>::from_bytes(&bytes).unwrap();
    assert_eq!(parsed.to_bytes().unwrap(), bytes);

    let recon = dir.path().join("w.csv");
    ok(&["decompress", "--seed", "1", "--checkpoint", s(&ckpt), "--artifact", s(&art), "--out", s(&recon)]);
    let text = fs::read_to_string(&recon).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + n);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 1 + 10));

    // the reconstruction compresses again from raw units
    let again = dir.path().join("again.tgsc");
    ok(&["compress", "--seed", "1", "--checkpoint", s(&ckpt), "--input", s(&recon), "--out", s(&again)]);
}

#[test]
fn corrupt_artifact_is_a_format_error() {
    let a = abilene();
    let dir = TempDir::new().unwrap();
    let art = dir.path().join("w.tgsc");
    ok(&["compress", "--seed", "1", "--checkpoint", s(&a.run.join("model.ckpt")), "--data", s(&a.data), "--index", "0", "--out", s(&art)]);
    let mut bytes = fs::read(&art).unwrap();
    bytes[4] = 99;
    fs::write(&art, &bytes).unwrap();
    let out = run(&["decompress", "--seed", "1", "--checkpoint", s(&a.run.join("model.ckpt")), "--artifact", s(&art), "--out", "/tmp/x.csv"]);
    assert_eq!(out.status.code(), Some(4));
    bytes[0] = b'Z';
    fs::write(&art, &bytes).unwrap();
    let out = run(&["decompress", "--seed", "1", "--checkpoint", s(&a.run.join("model.ckpt")), "--artifact", s(&art), "--out", "/tmp/x.csv"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn artifact_from_another_model_is_rejected() {
    let a = abilene();
    let dir = TempDir::new().unwrap();
    let other = dir.path().join("other");
    ok(&[
        "train", "--data", s(&a.data), "--model", "setmp", "--rc", "1/3", "--epochs", "1", "--lr", "0", "--seed", "8",
        "--out", s(&other),
    ]);
    let art = dir.path().join("w.tgsc");
    ok(&["compress", "--seed", "1", "--checkpoint", s(&other.join("model.ckpt")), "--data", s(&a.data), "--index", "0", "--out", s(&art)]);
    let out = run(&["decompress", "--seed", "1", "--checkpoint", s(&a.run.join("model.ckpt")), "--artifact", s(&art), "--out", "/tmp/y.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn eval_and_external_fixed_point() {
    let a = abilene();
    let dir = TempDir::new().unwrap();
    let ckpt = a.run.join("model.ckpt");
    let recon = dir.path().join("recon.csv");
    let rep = dir.path().join("rep.json");
    let ext = dir.path().join("ext.json");
    let out = ok(&[
        "eval", "--seed", "1", "--checkpoint", s(&ckpt), "--data", s(&a.data), "--split", "test", "--write-recon", s(&recon), "--out",
        s(&rep),
    ]);
    assert!(out.contains("achieved r_c: 100/300 = 1/3"), "{out}");
    ok(&["eval", "--seed", "1", "--data", s(&a.data), "--split", "test", "--external", s(&recon), "--out", s(&ext)]);
    let splits = |p: &Path| -> serde_json::Value {
        let v: serde_json::Value = serde_json::from_slice(&fs::read(p).unwrap()).unwrap();
        v["splits"].clone()
    };
    assert_eq!(splits(&rep), splits(&ext));

    // truncated external file
    let text = fs::read_to_string(&recon).unwrap();
    let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
    fs::write(&recon, cut).unwrap();
    let out = run(&["eval", "--seed", "1", "--data", s(&a.data), "--external", s(&recon)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn combmp_single_round_trains() {
    let a = abilene();
    let dir = TempDir::new().unwrap();
    let out = ok(&[
        "train", "--data", s(&a.data), "--model", "combmp", "--rc", "2/3", "--T", "1", "--epochs", "1", "--seed", "3",
        "--out", s(dir.path()),
    ]);
    assert!(out.contains("achieved r_c: 200/300 = 2/3"), "{out}");
    let ckpt = Checkpoint::load(&dir.path().join("model.ckpt")).unwrap();
    assert_eq!(ckpt.meta.model.topo().unwrap().1.rounds, 1);
}

#[test]
fn geant_one_third_config_reports_exact_fraction() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data");
    let run_dir = dir.path().join("run");
    ok(&["ingest", "--synthetic", "geant", "--seed", "2", "--out", s(&data)]);
    ok(&[
        "train", "--data", s(&data), "--model", "setmp", "--rc", "1/3", "--epochs", "1", "--lr", "0", "--seed", "2",
        "--out", s(&run_dir),
    ]);
    let out = ok(&["eval", "--seed", "1", "--checkpoint", s(&run_dir.join("model.ckpt")), "--data", s(&data), "--split", "test"]);
    assert!(out.contains("achieved r_c: 234/720 = 13/40"), "{out}");
}

#[test]
fn memorizing_checkpoint_evaluates_near_zero() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("series.csv");
    write_periodic_series(&csv, 50);
    let data = dir.path().join("data");
    let run_dir = dir.path().join("run");
    ok(&["ingest", "--csv", s(&csv), "--window", "10", "--seed", "1", "--out", s(&data)]);
    ok(&[
        "train", "--data", s(&data), "--model", "mlp_ae", "--rc", "1", "--ae-hidden", "64,32", "--epochs", "500",
        "--seed", "1", "--out", s(&run_dir),
    ]);
    let rep = dir.path().join("rep.json");
    ok(&[
        "eval", "--seed", "1", "--checkpoint", s(&run_dir.join("model.ckpt")), "--data", s(&data), "--split", "train", "--out",
        s(&rep),
    ]);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&rep).unwrap()).unwrap();
    let mse = v["splits"][0]["mse"].as_f64().unwrap();
    assert!(mse < 1e-4, "train MSE {mse}");
}

#[test]
fn config_file_supplies_options_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("series.csv");
    write_series(&csv, 100);
    let cfg = dir.path().join("run.toml");
    let from_file = dir.path().join("from_file");
    fs::write(
        &cfg,
        format!("csv = {:?}\nwindow = 5\nseed = 4\nout = {:?}\n", s(&csv), s(&from_file)),
    )
    .unwrap();
    let out = ok(&["ingest", "--config", s(&cfg)]);
    assert!(out.contains("window 5"), "{out}");
    let flagged = dir.path().join("flagged");
    let out = ok(&["ingest", "--config", s(&cfg), "--window", "10", "--out", s(&flagged)]);
    assert!(out.contains("window 10"), "{out}");
    assert!(flagged.join("manifest.json").exists());

    fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(run(&["ingest", "--config", s(&cfg)]).status.code(), Some(3));
}

#[test]
fn seeded_training_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("series.csv");
    write_series(&csv, 200);
    let data = dir.path().join("data");
    ok(&["ingest", "--csv", s(&csv), "--window", "10", "--seed", "5", "--out", s(&data)]);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&[
            "train", "--data", s(&data), "--model", "mpnn", "--rc", "1/3", "--epochs", "3", "--seed", "5", "--out",
            s(out),
        ]);
    }
    for f in ["model.ckpt", "history.jsonl", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn baseline_checkpoints_cannot_compress() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("series.csv");
    write_series(&csv, 60);
    let data = dir.path().join("data");
    ok(&["ingest", "--csv", s(&csv), "--window", "10", "--seed", "5", "--out", s(&data)]);
    let run_dir = dir.path().join("run");
    ok(&[
        "train", "--data", s(&data), "--model", "mlp_ae", "--rc", "1/2", "--ae-hidden", "8", "--epochs", "1", "--seed",
        "5", "--out", s(&run_dir),
    ]);
    let out = run(&[
        "compress", "--seed", "1", "--checkpoint", s(&run_dir.join("model.ckpt")), "--data", s(&data), "--index", "0", "--out",
        s(&dir.path().join("x")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}
