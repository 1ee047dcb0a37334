//! Experiment configuration, seeded Monte Carlo sweeps, capture ingestion and plot tables.
//!
//! A run directory holds `manifest.json` (config hash and per-cell status),
//! `coupling.txt`, one record file per cell under `cells/`, and the merged
//! `results.jsonl` and `traces.jsonl`.

mod config;
mod ingest;
mod pipeline;
mod plot;
mod run;

pub use config::{
    Cell, DbpSpec, ExperimentConfig, LinkSpec, NlcSpec, PowerSweep, Preset, PulseSpec, ReceiverSpec, RunPlan, SystemSpec,
    TurboSpec,
};
pub use ingest::{export_channel, ingest_waveform, IngestReport, Sidecar};
pub use pipeline::{base_matrix, cell_link, linear_receiver, simulate_cell, transmit, ChannelJob, ChannelResult, ChannelTx, TraceLine};
pub use plot::{emit_plotdata, read_records, FigureKind, FigureSpec, PlotTable};
pub use run::{run_experiment, CellStatus, Manifest, RunSummary, MANIFEST, MATRIX, RESULTS, TRACES};
