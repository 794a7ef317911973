//! Synthetic backbone traffic for offline experiments.
//!
//! Demands follow a gravity model with lognormal node masses, modulated by a
//! diurnal and a weekly profile, per-pair AR(1) noise in log space and rare
//! multiplicative bursts. Demands are routed with [`ShortestPaths`] and
//! collector outages blank whole intervals, which the windowing step drops.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::routing::ShortestPaths;
use crate::ingestion::series::LinkSeries;
use crate::ingestion::sndlib::{parse_network, ABILENE_XML, GEANT_XML};
use crate::ingestion::topology::NetworkTopology;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Abilene,
    Geant,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "abilene" => Ok(Preset::Abilene),
            "geant" => Ok(Preset::Geant),
            _ => Err(Error::Parameter(format!("unknown preset `{s}` (abilene|geant)"))),
        }
    }
}

impl Preset {
    pub fn topology(self) -> NetworkTopology {
        let (xml, ctx) = match self {
            Preset::Abilene => (ABILENE_XML, "abilene"),
            Preset::Geant => (GEANT_XML, "geant"),
        };
        parse_network(xml, ctx)
            .expect("built-in topology parses")
            .topology
    }

    pub fn config(self) -> SynthConfig {
        match self {
            // 6 months of 5-minute intervals
            Preset::Abilene => SynthConfig {
                intervals: 51_840,
                interval_minutes: 5.0,
                outages: 160,
                ..SynthConfig::default()
            },
            // 4 months of 15-minute intervals
            Preset::Geant => SynthConfig {
                intervals: 11_520,
                interval_minutes: 15.0,
                outages: 36,
                ..SynthConfig::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub intervals: usize,
    pub interval_minutes: f64,
    /// Mean demand of a pair with unit masses.
    pub scale: f64,
    /// Log-space standard deviation of node masses.
    pub mass_sigma: f64,
    pub diurnal_amplitude: f64,
    pub weekly_amplitude: f64,
    pub noise_phi: f64,
    pub noise_sigma: f64,
    /// Per pair and interval probability that a burst starts.
    pub burst_rate: f64,
    pub burst_factor: f64,
    pub burst_len: usize,
    /// Number of collector outages; each blanks 1..=`outage_max_len` intervals.
    pub outages: usize,
    pub outage_max_len: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            intervals: 2_880,
            interval_minutes: 5.0,
            scale: 100.0,
            mass_sigma: 0.6,
            diurnal_amplitude: 0.45,
            weekly_amplitude: 0.15,
            noise_phi: 0.95,
            noise_sigma: 0.04,
            burst_rate: 2e-5,
            burst_factor: 1.8,
            burst_len: 6,
            outages: 10,
            outage_max_len: 24,
        }
    }
}

/// Generates per-link loads for `topology`.
pub fn generate_series(topology: &NetworkTopology, cfg: &SynthConfig, seed: u64) -> Result<LinkSeries> {
    if cfg.intervals == 0 || cfg.interval_minutes <= 0.0 {
        return Err(Error::Parameter("synthetic trace needs intervals and a positive interval length".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = topology.num_nodes();
    let masses: Vec<f64> = {
        let d = LogNormal::new(0.0, cfg.mass_sigma).map_err(|e| Error::Parameter(e.to_string()))?;
        (0..n).map(|_| d.sample(&mut rng)).collect()
    };
    let sp = ShortestPaths::new(topology);
    let mut pairs = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if s != t {
                let path = sp.path(s, t).ok_or_else(|| {
                    Error::Validation(format!(
                        "disconnected origin-destination pairs: {}->{}",
                        topology.node_name(s),
                        topology.node_name(t)
                    ))
                })?;
                // per-pair phase shift so not every pair peaks together
                let phase: f64 = rng.random_range(-1.0..1.0);
                pairs.push((path.to_vec(), cfg.scale * masses[s] * masses[t], phase));
            }
        }
    }

    let links = topology.num_links();
    let steps = cfg.intervals;
    let mut values = vec![0.0; links * steps];
    let innov = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::Parameter(e.to_string()))?;
    let stationary_sd = cfg.noise_sigma / (1.0 - cfg.noise_phi * cfg.noise_phi).max(1e-12).sqrt();
    let mut noise: Vec<f64> = (0..pairs.len())
        .map(|_| rng.sample(Normal::new(0.0, stationary_sd).expect("finite sd")))
        .collect();
    let mut burst_left = vec![0usize; pairs.len()];
    let day = 24.0 * 60.0;
    let week = 7.0 * day;
    let tau = std::f64::consts::TAU;
    for t in 0..steps {
        let minutes = t as f64 * cfg.interval_minutes;
        let weekly = 1.0 + cfg.weekly_amplitude * (tau * minutes / week).cos();
        for (k, (path, base, phase)) in pairs.iter().enumerate() {
            noise[k] = cfg.noise_phi * noise[k] + innov.sample(&mut rng);
            if burst_left[k] == 0 && rng.random_bool(cfg.burst_rate) {
                burst_left[k] = cfg.burst_len;
            }
            let burst = if burst_left[k] > 0 {
                burst_left[k] -= 1;
                cfg.burst_factor
            } else {
                1.0
            };
            let diurnal = 1.0 + cfg.diurnal_amplitude * (tau * minutes / day + phase).sin();
            let v = base * diurnal * weekly * noise[k].exp() * burst;
            for &l in path {
                values[l * steps + t] += v;
            }
        }
    }

    let mut missing = vec![false; links * steps];
    for _ in 0..cfg.outages {
        let len = rng.random_range(1..=cfg.outage_max_len.max(1));
        let start = rng.random_range(0..steps);
        for t in start..(start + len).min(steps) {
            for l in 0..links {
                missing[l * steps + t] = true;
                values[l * steps + t] = 0.0;
            }
        }
    }
    LinkSeries::new(topology.link_names(), steps, values, missing, Some(cfg.interval_minutes))
}
