use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::series::{load_csv_series, write_csv_series, LinkSeries};
use crate::io::{read_file, write_atomic};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SERIES_FILE: &str = "series.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::Parameter(format!("unknown split `{s}` (train|val|test)"))),
        }
    }
}

/// Global min-max constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: f64,
    pub max: f64,
}

impl Normalization {
    pub fn identity() -> Self {
        Normalization { min: 0.0, max: 1.0 }
    }

    /// Zero range maps everything to 0.
    fn span(&self) -> f64 {
        let s = self.max - self.min;
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    pub fn normalize(&self, v: f64) -> f64 {
        (v - self.min) / self.span()
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        v * self.span() + self.min
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRecord {
    /// First interval of the window in the source series.
    pub start: usize,
    pub split: Split,
}

/// Windowed, normalized subsignals with their split assignment.
///
/// Each subsignal is `N x d`, row-major, one row per link.
#[derive(Clone, Debug, PartialEq)]
pub struct TrafficDataset {
    pub links: Vec<String>,
    pub window: usize,
    pub seed: u64,
    pub normalization: Normalization,
    pub records: Vec<WindowRecord>,
    pub subsignals: Vec<Vec<f64>>,
}

impl TrafficDataset {
    /// Builds a dataset from already normalized subsignals.
    pub fn from_subsignals(
        links: Vec<String>,
        window: usize,
        subsignals: Vec<Vec<f64>>,
        splits: Vec<Split>,
        normalization: Normalization,
    ) -> Result<Self> {
        if subsignals.len() != splits.len() {
            return Err(Error::dim("split tags", subsignals.len(), splits.len()));
        }
        let n = links.len() * window;
        for s in &subsignals {
            if s.len() != n {
                return Err(Error::dim("subsignal size", n, s.len()));
            }
        }
        let records = splits
            .into_iter()
            .enumerate()
            .map(|(i, split)| WindowRecord {
                start: i * window,
                split,
            })
            .collect();
        Ok(TrafficDataset {
            links,
            window,
            seed: 0,
            normalization,
            records,
            subsignals,
        })
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn len(&self) -> usize {
        self.subsignals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsignals.is_empty()
    }

    pub fn subsignal(&self, i: usize) -> &[f64] {
        &self.subsignals[i]
    }

    /// Indices of the subsignals in `split`, in temporal order.
    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.records.len())
            .filter(|&i| self.records[i].split == split)
            .collect()
    }

    pub fn split_counts(&self) -> SplitCounts {
        let c = |s| self.records.iter().filter(|r| r.split == s).count();
        SplitCounts {
            train: c(Split::Train),
            val: c(Split::Val),
            test: c(Split::Test),
        }
    }

    pub fn manifest(&self, source_intervals: usize, dropped: usize) -> Manifest {
        Manifest {
            version: MANIFEST_VERSION,
            seed: self.seed,
            window: self.window,
            links: self.links.clone(),
            intervals: source_intervals,
            dropped_windows: dropped,
            normalization: self.normalization,
            counts: self.split_counts(),
            windows: self.records.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

/// Versioned description of a persisted dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub seed: u64,
    pub window: usize,
    pub links: Vec<String>,
    pub intervals: usize,
    pub dropped_windows: usize,
    pub normalization: Normalization,
    pub counts: SplitCounts,
    pub windows: Vec<WindowRecord>,
}

/// Result of windowing, including how many windows were discarded.
#[derive(Clone, Debug)]
pub struct Windowed {
    pub dataset: TrafficDataset,
    pub dropped: usize,
}

/// Cuts `series` into non-overlapping windows of length `d`, drops windows
/// with any missing value, shuffles the rest with `seed` into 60/20/20 and
/// min-max normalizes with constants from the training windows.
pub fn window_and_split(series: &LinkSeries, d: usize, seed: u64) -> Result<Windowed> {
    if d == 0 {
        return Err(Error::Parameter("window length must be at least 1".into()));
    }
    let t = series.num_intervals();
    if t < d {
        return Err(Error::Parameter(format!(
            "series has {t} intervals, fewer than the window length {d}"
        )));
    }
    let n = series.num_links();
    let total = t / d;
    let clean: Vec<usize> = (0..total)
        .map(|w| w * d)
        .filter(|&start| (start..start + d).all(|i| !series.interval_has_gap(i)))
        .collect();
    let dropped = total - clean.len();
    if clean.len() < 5 {
        return Err(Error::DatasetTooSmall { clean: clean.len() });
    }

    let m = clean.len();
    let n_train = (0.6 * m as f64).round() as usize;
    let n_val = (0.2 * m as f64).round() as usize;
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut splits = vec![Split::Test; m];
    for (rank, &w) in order.iter().enumerate() {
        splits[w] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (w, &start) in clean.iter().enumerate() {
        if splits[w] != Split::Train {
            continue;
        }
        for l in 0..n {
            for &v in &series.link_row(l)[start..start + d] {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let norm = Normalization { min: lo, max: hi };

    let subsignals = clean
        .iter()
        .map(|&start| {
            let mut s = Vec::with_capacity(n * d);
            for l in 0..n {
                s.extend(series.link_row(l)[start..start + d].iter().map(|&v| norm.normalize(v)));
            }
            s
        })
        .collect();
    let records = clean
        .iter()
        .zip(&splits)
        .map(|(&start, &split)| WindowRecord { start, split })
        .collect();
    Ok(Windowed {
        dataset: TrafficDataset {
            links: series.links().to_vec(),
            window: d,
            seed,
            normalization: norm,
            records,
            subsignals,
        },
        dropped,
    })
}

/// Persists the raw series and the manifest into `dir`.
pub fn save_dataset(dir: &Path, series: &LinkSeries, windowed: &Windowed) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let mut csv = Vec::new();
    write_csv_series(series, &mut csv)?;
    write_atomic(&dir.join(SERIES_FILE), &csv)?;
    let manifest = windowed
        .dataset
        .manifest(series.num_intervals(), windowed.dropped);
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    write_atomic(&dir.join(MANIFEST_FILE), &json)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = read_file(&path)?;
    let m: Manifest = serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
        context: path.display().to_string(),
        message: e.to_string(),
    })?;
    if m.version != MANIFEST_VERSION {
        return Err(Error::Format(format!(
            "{}: manifest version {} is not supported (expected {MANIFEST_VERSION})",
            path.display(),
            m.version
        )));
    }
    Ok(m)
}

/// Rebuilds the dataset from `dir` and checks it against the manifest.
pub fn load_dataset(dir: &Path) -> Result<(TrafficDataset, Manifest)> {
    let manifest = read_manifest(dir)?;
    let series = load_csv_series(&dir.join(SERIES_FILE))?;
    let w = window_and_split(&series, manifest.window, manifest.seed)?;
    if w.dataset.records != manifest.windows
        || w.dataset.links != manifest.links
        || w.dataset.normalization != manifest.normalization
    {
        return Err(Error::Validation(format!(
            "{}: series does not reproduce the manifest's windows",
            dir.display()
        )));
    }
    Ok((w.dataset, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(links: usize, t: usize, missing_at: &[(usize, usize)]) -> LinkSeries {
        let values = (0..links * t).map(|i| (i as f64 * 0.37).sin() * 10.0 + 20.0).collect();
        let mut missing = vec![false; links * t];
        for &(l, i) in missing_at {
            missing[l * t + i] = true;
        }
        let names = (0..links).map(|l| format!("n{l}->m{l}")).collect();
        LinkSeries::new(names, t, values, missing, Some(5.0)).unwrap()
    }

    #[test]
    fn exact_division_and_truncation() {
        assert!(matches!(
            window_and_split(&series(2, 30, &[]), 10, 1),
            Err(Error::DatasetTooSmall { clean: 3 })
        ));
        assert!(matches!(
            window_and_split(&series(2, 25, &[]), 10, 1),
            Err(Error::DatasetTooSmall { clean: 2 })
        ));
        let w = window_and_split(&series(2, 59, &[]), 10, 1).unwrap();
        assert_eq!(w.dataset.len(), 5);
        assert_eq!(w.dataset.subsignal(0).len(), 20);
    }

    #[test]
    fn window_with_gap_is_dropped() {
        let w = window_and_split(&series(3, 100, &[(2, 35)]), 10, 4).unwrap();
        assert_eq!(w.dataset.len(), 9);
        assert_eq!(w.dropped, 1);
        assert!(w.dataset.records.iter().all(|r| r.start != 30));
    }

    #[test]
    fn split_is_seed_deterministic() {
        let s = series(2, 500, &[]);
        let a = window_and_split(&s, 10, 11).unwrap().dataset;
        let b = window_and_split(&s, 10, 11).unwrap().dataset;
        let c = window_and_split(&s, 10, 12).unwrap().dataset;
        assert_eq!(a, b);
        assert_ne!(a.records, c.records);
        assert_eq!(a.split_counts(), SplitCounts { train: 30, val: 10, test: 10 });
    }

    #[test]
    fn manifest_roundtrip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let s = series(2, 120, &[(0, 3)]);
        let w = window_and_split(&s, 10, 3).unwrap();
        let m = save_dataset(dir.path(), &s, &w).unwrap();
        let (ds, m2) = load_dataset(dir.path()).unwrap();
        assert_eq!(m, m2);
        assert_eq!(ds, w.dataset);
    }

    proptest! {
        #[test]
        fn dataset_invariants(
            t in 50usize..400,
            d in 1usize..12,
            seed in any::<u64>(),
            gaps in proptest::collection::vec((0usize..3, 0usize..400), 0..6),
        ) {
            let gaps: Vec<(usize, usize)> = gaps.into_iter().filter(|&(_, i)| i < t).collect();
            let s = series(3, t, &gaps);
            match window_and_split(&s, d, seed) {
                Err(Error::DatasetTooSmall { clean }) => prop_assert!(clean < 5),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
                Ok(w) => {
                    let ds = &w.dataset;
                    let m = ds.len();
                    prop_assert_eq!(m + w.dropped, t / d);
                    let c = ds.split_counts();
                    prop_assert_eq!(c.train + c.val + c.test, m);
                    prop_assert!((c.train as f64 - 0.6 * m as f64).abs() <= 1.0);
                    prop_assert!((c.val as f64 - 0.2 * m as f64).abs() <= 1.0);
                    prop_assert!((c.test as f64 - 0.2 * m as f64).abs() <= 1.0);
                    for (r, sub) in ds.records.iter().zip(&ds.subsignals) {
                        prop_assert_eq!(sub.len(), 3 * d);
                        prop_assert!((r.start..r.start + d).all(|i| !s.interval_has_gap(i)));
                        if r.split == Split::Train {
                            prop_assert!(sub.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
                        }
                    }
                }
            }
        }
    }
}
