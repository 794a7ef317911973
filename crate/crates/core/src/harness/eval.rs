use std::io::{Read, Write};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::autodiff::ParamStore;
use crate::compression::CompressionRatio;
use crate::error::{Error, Result};
use crate::harness::model::Model;
use crate::ingestion::{Split, TrafficDataset};
use crate::scalar::Scalar;

const EVAL_BATCH: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsignalError {
    /// Index of the window in the dataset.
    pub window: usize,
    pub mse: f64,
    pub mae: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub split: Split,
    pub subsignals: usize,
    pub elements: usize,
    pub mse: f64,
    pub mae: f64,
    pub per_subsignal: Vec<SubsignalError>,
}

/// Reconstruction errors in normalized signal space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Model kind, or `external`.
    pub source: String,
    pub seed: Option<u64>,
    pub achieved_rc: Option<CompressionRatio>,
    pub splits: Vec<SplitReport>,
    /// Not serialized, so persisted reports are reproducible.
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl EvalReport {
    pub fn split(&self, split: Split) -> Option<&SplitReport> {
        self.splits.iter().find(|s| s.split == split)
    }
}

/// Reconstructions of every subsignal of `split`, in dataset order.
pub fn reconstruct_split<S: Scalar>(
    model: &Model,
    params: &ParamStore<S>,
    data: &TrafficDataset,
    split: Split,
) -> Result<Vec<Vec<f64>>> {
    let idx = data.indices(split);
    let mut out = Vec::with_capacity(idx.len());
    for chunk in idx.chunks(EVAL_BATCH) {
        let samples: Vec<&[f64]> = chunk.iter().map(|&i| data.subsignal(i)).collect();
        out.extend(model.reconstruct(params, &samples)?);
    }
    Ok(out)
}

pub(crate) fn split_mse<S: Scalar>(
    model: &Model,
    params: &ParamStore<S>,
    data: &TrafficDataset,
    split: Split,
) -> Result<f64> {
    let recon = reconstruct_split(model, params, data, split)?;
    Ok(split_report(data, split, &recon)?.mse)
}

/// Errors of `recon` (one `N x d` buffer per subsignal of `split`, in
/// dataset order) against the dataset.
pub fn split_report(data: &TrafficDataset, split: Split, recon: &[Vec<f64>]) -> Result<SplitReport> {
    let idx = data.indices(split);
    if recon.len() != idx.len() {
        return Err(Error::Validation(format!(
            "{split} split has {} subsignals, got {} reconstructions",
            idx.len(),
            recon.len()
        )));
    }
    let per = data.num_links() * data.window;
    let mut sq = 0.0;
    let mut abs = 0.0;
    let mut per_subsignal = Vec::with_capacity(idx.len());
    for (&i, r) in idx.iter().zip(recon) {
        if r.len() != per {
            return Err(Error::Validation(format!(
                "reconstruction of window {i} has {} values, expected {per}",
                r.len()
            )));
        }
        let (mut s2, mut s1) = (0.0, 0.0);
        for (a, b) in data.subsignal(i).iter().zip(r) {
            let e = a - b;
            s2 += e * e;
            s1 += e.abs();
        }
        sq += s2;
        abs += s1;
        per_subsignal.push(SubsignalError {
            window: i,
            mse: s2 / per as f64,
            mae: s1 / per as f64,
        });
    }
    let elements = idx.len() * per;
    let denom = elements.max(1) as f64;
    Ok(SplitReport {
        split,
        subsignals: idx.len(),
        elements,
        mse: sq / denom,
        mae: abs / denom,
        per_subsignal,
    })
}

/// MSE and MAE of a trained model on each of `splits`.
pub fn evaluate<S: Scalar>(
    model: &Model,
    params: &ParamStore<S>,
    data: &TrafficDataset,
    splits: &[Split],
    seed: Option<u64>,
) -> Result<EvalReport> {
    model.config.check_dataset(data)?;
    model.config.check_params(params)?;
    let start = Instant::now();
    let mut reports = Vec::with_capacity(splits.len());
    for &split in splits {
        let recon = reconstruct_split(model, params, data, split)?;
        reports.push(split_report(data, split, &recon)?);
    }
    Ok(EvalReport {
        source: model.kind().to_string(),
        seed,
        achieved_rc: Some(model.config.achieved_ratio()?),
        splits: reports,
        wall_clock: start.elapsed(),
    })
}

/// Writes reconstructions of `split` as CSV: `window,link,x0,..,x{d-1}`,
/// one row per (subsignal, link) in dataset order, normalized values.
pub fn write_reconstructions<W: Write>(
    data: &TrafficDataset,
    split: Split,
    recon: &[Vec<f64>],
    writer: W,
) -> Result<()> {
    let idx = data.indices(split);
    if recon.len() != idx.len() {
        return Err(Error::Validation(format!(
            "{split} split has {} subsignals, got {} reconstructions",
            idx.len(),
            recon.len()
        )));
    }
    let d = data.window;
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["window".to_string(), "link".to_string()];
    header.extend((0..d).map(|t| format!("x{t}")));
    w.write_record(&header).map_err(csv_io)?;
    for (&i, r) in idx.iter().zip(recon) {
        for (l, link) in data.links.iter().enumerate() {
            let mut row = vec![i.to_string(), link.clone()];
            row.extend(r[l * d..(l + 1) * d].iter().map(|v| format!("{v:?}")));
            w.write_record(&row).map_err(csv_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Reads reconstructions written in the [`write_reconstructions`] layout,
/// checking that rows follow the split's window and link order.
pub fn read_reconstructions<R: Read>(
    data: &TrafficDataset,
    split: Split,
    reader: R,
    context: &str,
) -> Result<Vec<Vec<f64>>> {
    let parse = |line: u64, message: String| Error::Parse {
        context: format!("{context}, line {line}"),
        message,
    };
    let d = data.window;
    let n = data.num_links();
    let idx = data.indices(split);
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = r.headers().map_err(|e| parse(1, e.to_string()))?.clone();
    if header.len() != d + 2 {
        return Err(Error::Validation(format!(
            "{context}: expected {} columns (window, link, {d} values), found {}",
            d + 2,
            header.len()
        )));
    }
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(idx.len());
    let mut row = 0usize;
    for rec in r.records() {
        let line = row as u64 + 2;
        let rec = rec.map_err(|e| parse(line, e.to_string()))?;
        if rec.len() != d + 2 {
            return Err(Error::Validation(format!(
                "{context}: row {line} has {} columns, expected {}",
                rec.len(),
                d + 2
            )));
        }
        let (k, l) = (row / n, row % n);
        let Some(&want) = idx.get(k) else {
            return Err(Error::Validation(format!(
                "{context}: more rows than the {} x {n} of the {split} split",
                idx.len()
            )));
        };
        let window: usize = rec[0].trim().parse().map_err(|e| parse(line, format!("window: {e}")))?;
        if window != want || rec[1].trim() != data.links[l] {
            return Err(Error::Validation(format!(
                "{context}: row {line} is ({window}, {}), expected ({want}, {})",
                &rec[1], data.links[l]
            )));
        }
        if l == 0 {
            out.push(Vec::with_capacity(n * d));
        }
        let buf = out.last_mut().expect("pushed above");
        for field in rec.iter().skip(2) {
            let v: f64 = field.trim().parse().map_err(|e| parse(line, format!("value `{field}`: {e}")))?;
            buf.push(v);
        }
        row += 1;
    }
    if row != idx.len() * n {
        return Err(Error::Validation(format!(
            "{context}: {row} rows, expected {} for the {split} split",
            idx.len() * n
        )));
    }
    Ok(out)
}

/// Metrics of reconstructions produced by an external tool.
pub fn compare_external<R: Read>(
    data: &TrafficDataset,
    split: Split,
    reader: R,
    context: &str,
) -> Result<EvalReport> {
    let start = Instant::now();
    let recon = read_reconstructions(data, split, reader, context)?;
    Ok(EvalReport {
        source: "external".into(),
        seed: None,
        achieved_rc: None,
        splits: vec![split_report(data, split, &recon)?],
        wall_clock: start.elapsed(),
    })
}
