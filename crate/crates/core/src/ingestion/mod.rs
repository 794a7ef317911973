//! Topology and traffic ingestion: SNDlib XML, routing, CSV series,
//! windowing and splitting.

pub mod dataset;
pub mod routing;
pub mod series;
pub mod sndlib;
pub mod synth;
pub mod topology;

pub use dataset::{
    load_dataset, read_manifest, save_dataset, window_and_split, Manifest, Normalization, Split,
    SplitCounts, TrafficDataset, WindowRecord, Windowed,
};
pub use routing::{route_demands, ShortestPaths};
pub use series::{
    load_csv_series, read_csv_series, read_window_csv, write_csv_series, write_window_csv, LinkSeries,
    WindowTable,
};
pub use sndlib::{
    load_sndlib, parse_demand_file, parse_network, parse_topology_and_demands, Demand,
    DemandMatrix, SndlibTrace,
};
pub use synth::{generate_series, Preset, SynthConfig};
pub use topology::{Link, NetworkTopology};
