use std::fs::File;
use std::path::Path;
use std::time::Instant;

use num_rational::Ratio;
use serde::Serialize;
use topocomp::autodiff::Tensor;
use topocomp::checkpoint::{Checkpoint, CheckpointMeta};
use topocomp::compression::{decompress as decode_artifact, role, CompressedArtifact, ARTIFACT_VERSION};
use topocomp::harness::{
    compare_external, evaluate, reconstruct_split, train_observed, write_reconstructions, EvalReport, Model,
    ModelKind, TrainConfig,
};
use topocomp::ingestion::{
    generate_series, load_csv_series, load_dataset, load_sndlib, read_window_csv, route_demands, save_dataset,
    window_and_split, write_window_csv, Preset, Split, TrafficDataset, WindowTable,
};
use topocomp::io::{read_file, write_atomic};
use topocomp::Error;

use crate::config::{required, FileConfig};
use crate::failure::Failure;
use crate::{CompressArgs, DecompressArgs, EvalArgs, IngestArgs, TrainArgs};

const CHECKPOINT_FILE: &str = "model.ckpt";
const HISTORY_FILE: &str = "history.jsonl";
const SUMMARY_FILE: &str = "summary.json";

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn json_line<T: Serialize>(v: &T) -> Result<Vec<u8>, Failure> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| Failure::from(Error::Json(e)))?;
    out.push(b'\n');
    Ok(out)
}

fn parse_ratio(s: &str) -> Result<Ratio<u64>, Failure> {
    s.trim()
        .parse::<Ratio<u64>>()
        .map_err(|_| Failure::config(format!("--rc `{s}` is not a fraction such as 1/3")))
}

fn check_links(ckpt: &Checkpoint, links: &[String]) -> Result<(), Failure> {
    if ckpt.meta.links != links {
        return Err(Error::Compatibility(format!(
            "checkpoint was trained on {} links that differ from the {} given",
            ckpt.meta.links.len(),
            links.len()
        ))
        .into());
    }
    Ok(())
}

pub fn ingest(a: IngestArgs) -> Result<(), Failure> {
    let f = FileConfig::load(a.config.as_deref())?;
    let seed = required(a.seed, f.seed, "seed")?;
    let out = required(a.out, f.out, "out")?;
    let window = a.window.or(f.window).unwrap_or(10);
    let sndlib = a.sndlib.or(f.sndlib);
    let demands = a.demands.or(f.demands);
    let csv = a.csv.or(f.csv);
    let synthetic = a.synthetic.or(f.synthetic);
    let sources = [sndlib.is_some(), csv.is_some(), synthetic.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(Failure::config("give exactly one of --sndlib, --csv, --synthetic"));
    }
    if demands.is_some() && sndlib.is_none() {
        return Err(Failure::config("--demands needs --sndlib"));
    }
    let series = if let Some(path) = sndlib {
        let trace = load_sndlib(&path, demands.as_deref())?;
        route_demands(&trace.topology, &trace.demands, trace.interval_minutes)?
    } else if let Some(path) = csv {
        load_csv_series(&path)?
    } else {
        let preset: Preset = synthetic.expect("one source").parse()?;
        generate_series(&preset.topology(), &preset.config(), seed)?
    };
    let windowed = window_and_split(&series, window, seed)?;
    let m = save_dataset(&out, &series, &windowed)?;
    println!("links:      {}", m.links.len());
    println!("intervals:  {}", m.intervals);
    println!("windows:    {} (window {}, {} dropped for gaps)", m.windows.len(), m.window, m.dropped_windows);
    println!("splits:     train {} / val {} / test {}", m.counts.train, m.counts.val, m.counts.test);
    println!("manifest:   {}", out.join("manifest.json").display());
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary {
    model: ModelKind,
    seed: u64,
    target_rc: String,
    achieved_rc: String,
    achieved_rc_reduced: String,
    epochs: usize,
    best_epoch: usize,
    best_val_mse: f64,
    model_id: String,
}

pub fn train(a: TrainArgs) -> Result<(), Failure> {
    let f = FileConfig::load(a.config.as_deref())?;
    let data_dir = required(a.data, f.data, "data")?;
    let seed = required(a.seed, f.seed, "seed")?;
    let out = required(a.out, f.out, "out")?;
    let model: ModelKind = required(a.model, f.model, "model")?.parse()?;
    let rc = parse_ratio(&required(a.rc, f.rc, "rc")?)?;
    let mut tc = TrainConfig::new(model, rc, seed);
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = a.$field.or(f.$field) {
                tc.$field = v;
            }
        };
    }
    set!(p);
    set!(hidden);
    set!(dvc);
    set!(dwc);
    set!(rounds);
    set!(ae_hidden);
    set!(epochs);
    set!(batch_size);
    set!(lr);
    set!(eps);
    tc.final_dim = a.final_dim.or(f.final_dim);
    tc.validate()?;

    let (data, _) = load_dataset(&data_dir)?;
    let config = tc.model_config(data.num_links(), data.window)?;
    let ratio = config.achieved_ratio()?;
    println!(
        "training {model} on {} links x {} (train {}, val {}), {} epochs, target r_c {rc}",
        data.num_links(),
        data.window,
        data.indices(Split::Train).len(),
        data.indices(Split::Val).len(),
        tc.epochs
    );
    let start = Instant::now();
    let outcome = train_observed::<f32>(&tc, &data, |r| {
        println!("epoch {:>4}  train_mse {:.6e}  val_mse {:.6e}", r.epoch, r.train_mse, r.val_mse);
    })?;
    let ckpt = Checkpoint {
        meta: CheckpointMeta {
            model: outcome.model.config.clone(),
            links: data.links.clone(),
            normalization: data.normalization,
            seed,
        },
        params: outcome.params.clone(),
    };
    std::fs::create_dir_all(&out).map_err(|e| Failure::input(format!("{}: {e}", out.display())))?;
    ckpt.save(&out.join(CHECKPOINT_FILE))?;
    let mut history = Vec::new();
    for r in &outcome.history {
        history.extend(serde_json::to_vec(r).map_err(Error::Json)?);
        history.push(b'\n');
    }
    write_atomic(&out.join(HISTORY_FILE), &history)?;
    let best = outcome.best();
    let summary = TrainSummary {
        model,
        seed,
        target_rc: rc.to_string(),
        achieved_rc: ratio.to_string(),
        achieved_rc_reduced: ratio.ratio().to_string(),
        epochs: tc.epochs,
        best_epoch: outcome.best_epoch,
        best_val_mse: best.val_mse,
        model_id: format!("{:016x}", ckpt.model_id()?),
    };
    write_atomic(&out.join(SUMMARY_FILE), &json_line(&summary)?)?;
    println!("best epoch:  {} (val_mse {:.6e})", outcome.best_epoch, best.val_mse);
    println!("achieved r_c: {} = {}", ratio, ratio.ratio());
    println!("model id:    {}", summary.model_id);
    println!("checkpoint:  {}", out.join(CHECKPOINT_FILE).display());
    println!("wall-clock:  {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}

pub fn compress(a: CompressArgs) -> Result<(), Failure> {
    let f = FileConfig::load(a.config.as_deref())?;
    required(a.seed, f.seed, "seed")?;
    let ckpt = Checkpoint::load(&required(a.checkpoint, f.checkpoint, "checkpoint")?)?;
    let out = required(a.out, f.out, "out")?;
    if let Some(v) = a.format_version.or(f.format_version) {
        if v != ARTIFACT_VERSION {
            return Err(Failure::config(format!(
                "artifact format version {v} is not supported (this build writes {ARTIFACT_VERSION})"
            )));
        }
    }
    let model = Model::new(ckpt.meta.model.clone(), &ckpt.meta.links)?;
    let (n, d) = (ckpt.meta.model.n, ckpt.meta.model.d);
    let norm = ckpt.meta.normalization;
    let values: Vec<f64> = match (a.input.or(f.input), a.data.or(f.data)) {
        (Some(path), None) => {
            let table = read_window_csv(open(&path)?, &path.display().to_string())?;
            check_links(&ckpt, &table.links)?;
            if table.window != d {
                return Err(Error::Compatibility(format!(
                    "{}: window of {} values, model expects {d}",
                    path.display(),
                    table.window
                ))
                .into());
            }
            table.values.iter().map(|&v| norm.normalize(v)).collect()
        }
        (None, Some(dir)) => {
            let index = required(a.index, f.index, "index")?;
            let (data, _) = load_dataset(&dir)?;
            check_links(&ckpt, &data.links)?;
            if data.normalization != norm {
                return Err(Error::Compatibility("dataset normalization differs from the checkpoint's".into()).into());
            }
            if index >= data.len() {
                return Err(Failure::config(format!("--index {index} out of range ({} windows)", data.len())));
            }
            data.subsignal(index).to_vec()
        }
        _ => return Err(Failure::config("give exactly one of --input or --data with --index")),
    };
    let x = Tensor::matrix(n, d, values.iter().map(|&v| v as f32).collect())?;
    let mut artifact = model.compress(&ckpt.params, &x)?;
    artifact.meta.model_id = ckpt.model_id()?;
    artifact.meta.normalization = norm;
    let bytes = artifact.to_bytes()?;
    write_atomic(&out, &bytes)?;
    let ratio = artifact.ratio()?;
    println!(
        "{} bytes: {} code floats ({} x {} node + {} x {} hyperedge), r_c {} = {}",
        bytes.len(),
        artifact.stored_floats(),
        n,
        artifact.meta.dvc,
        artifact.meta.k,
        artifact.meta.dwc,
        ratio,
        ratio.ratio()
    );
    Ok(())
}

pub fn decompress(a: DecompressArgs) -> Result<(), Failure> {
    let f = FileConfig::load(a.config.as_deref())?;
    required(a.seed, f.seed, "seed")?;
    let ckpt = Checkpoint::load(&required(a.checkpoint, f.checkpoint, "checkpoint")?)?;
    let artifact_path = required(a.artifact, f.artifact, "artifact")?;
    let out = required(a.out, f.out, "out")?;
    let artifact = CompressedArtifact::<f32>::from_bytes(&read_file(&artifact_path)?)?;
    let id = ckpt.model_id()?;
    if artifact.meta.model_id != id {
        return Err(Error::Compatibility(format!(
            "artifact was produced by model {:016x}, checkpoint is {id:016x}",
            artifact.meta.model_id
        ))
        .into());
    }
    let (pipeline, cfg) = ckpt
        .meta
        .model
        .topo()
        .ok_or_else(|| Error::Compatibility(format!("{} checkpoints have no artifact decoder", ckpt.kind())))?;
    let decoder = cfg.spec(pipeline, role::DECODER)?;
    let recon = decode_artifact(&artifact, &decoder, &ckpt.params)?;
    let norm = artifact.meta.normalization;
    let table = WindowTable {
        links: ckpt.meta.links.clone(),
        window: artifact.meta.d,
        values: recon.values().iter().map(|&v| norm.denormalize(v as f64)).collect(),
    };
    let mut buf = Vec::new();
    write_window_csv(&table, &mut buf)?;
    write_atomic(&out, &buf)?;
    println!("{} links x {} values -> {}", artifact.meta.n, artifact.meta.d, out.display());
    Ok(())
}

fn parse_splits(s: &str) -> Result<Vec<Split>, Failure> {
    if s == "all" {
        return Ok(vec![Split::Train, Split::Val, Split::Test]);
    }
    Ok(vec![s.parse::<Split>().map_err(|e| Failure::config(e.to_string()))?])
}

fn print_report(report: &EvalReport) {
    println!("{:<6} {:>10} {:>14} {:>14}", "split", "subsignals", "MSE", "MAE");
    for s in &report.splits {
        println!("{:<6} {:>10} {:>14.6e} {:>14.6e}", s.split.to_string(), s.subsignals, s.mse, s.mae);
    }
    if let Some(r) = report.achieved_rc {
        println!("achieved r_c: {} = {}", r, r.ratio());
    }
    println!("wall-clock:  {:.2} s", report.wall_clock.as_secs_f64());
}

pub fn eval(a: EvalArgs) -> Result<(), Failure> {
    let f = FileConfig::load(a.config.as_deref())?;
    let seed = required(a.seed, f.seed, "seed")?;
    let (data, _): (TrafficDataset, _) = load_dataset(&required(a.data, f.data, "data")?)?;
    let external = a.external.or(f.external);
    let split = a.split.or(f.split);
    let report = if let Some(path) = &external {
        let split = parse_splits(split.as_deref().unwrap_or("test"))?;
        let [split] = split[..] else {
            return Err(Failure::config("--external compares a single split"));
        };
        let mut r = compare_external(&data, split, open(path)?, &path.display().to_string())?;
        r.seed = Some(seed);
        r
    } else {
        let splits = parse_splits(split.as_deref().unwrap_or("all"))?;
        let ckpt = Checkpoint::load(&required(a.checkpoint, f.checkpoint, "checkpoint")?)?;
        check_links(&ckpt, &data.links)?;
        let model = Model::new(ckpt.meta.model.clone(), &ckpt.meta.links)?;
        if let Some(path) = a.write_recon.or(f.write_recon) {
            let [split] = splits[..] else {
                return Err(Failure::config("--write-recon needs a single --split"));
            };
            let recon = reconstruct_split(&model, &ckpt.params, &data, split)?;
            let mut buf = Vec::new();
            write_reconstructions(&data, split, &recon, &mut buf)?;
            write_atomic(&path, &buf)?;
        }
        evaluate(&model, &ckpt.params, &data, &splits, Some(seed))?
    };
    print_report(&report);
    if let Some(out) = a.out.or(f.out) {
        write_atomic(&out, &json_line(&report)?)?;
    }
    Ok(())
}
