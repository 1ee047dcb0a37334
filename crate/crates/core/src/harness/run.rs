use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Cell, RunPlan};
use super::ingest::{export_channel, Sidecar};
use super::pipeline::{base_matrix, simulate_cell, ChannelJob};
use crate::error::{Error, Result};
use crate::pert::{read_coupling_matrix, write_coupling_matrix, CouplingMatrix};

pub const MANIFEST: &str = "manifest.json";
pub const RESULTS: &str = "results.jsonl";
pub const TRACES: &str = "traces.jsonl";
pub const MATRIX: &str = "coupling.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CellStatus {
    Done,
    Failed { error: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    /// Seconds since the epoch of the first run into this directory.
    pub created_unix: u64,
    pub plan: RunPlan,
    pub cells: BTreeMap<String, CellStatus>,
}

impl Manifest {
    fn load(dir: &Path) -> Result<Option<Self>> {
        let p = dir.join(MANIFEST);
        if !p.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&p)?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| Error::Format { offset: e.column() as u64, message: format!("{}: {e}", p.display()) })
    }

    fn save(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(&dir.join(MANIFEST), text.as_bytes())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub completed: usize,
    /// Cells already done in an earlier run.
    pub skipped: usize,
    pub failed: Vec<(Cell, String)>,
}

impl RunSummary {
    /// 0 when every cell has results, 3 when some failed, 2 when all failed.
    pub fn exit_code(&self) -> i32 {
        match (self.failed.len(), self.completed + self.skipped) {
            (0, _) => 0,
            (_, 0) => 2,
            _ => 3,
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    items.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
}

/// Load the coupling matrix cached next to the results or generate it.
fn matrix_for(plan: &RunPlan, dir: &Path) -> Result<CouplingMatrix> {
    let p = dir.join(MATRIX);
    if p.exists() {
        return read_coupling_matrix(std::io::BufReader::new(fs::File::open(&p)?));
    }
    let m = base_matrix(&plan.system)?;
    let mut buf = Vec::new();
    write_coupling_matrix(&mut buf, &m)?;
    write_atomic(&p, &buf)?;
    Ok(m)
}

fn run_cell(plan: &RunPlan, matrix: &CouplingMatrix, cell: &Cell, dir: &Path) -> Result<()> {
    let sys = &plan.system;
    let layout = sys.layout()?;
    let (mut records, mut traces) = (Vec::new(), Vec::new());
    for (ch, w, tx) in simulate_cell(sys, &layout, cell.power_dbm, cell.seed)? {
        let pilots = tx.frame.slice(0, sys.receiver.pilot_symbols);
        let job = ChannelJob {
            system: sys,
            layout: &layout,
            matrix,
            schemes: &plan.schemes,
            power_dbm: cell.power_dbm,
            seed: cell.seed,
            channel_index: ch,
        };
        if plan.export_waveforms {
            let sidecar = Sidecar::new(sys, cell.power_dbm, cell.seed, ch, &pilots, Some(&tx.codewords));
            export_channel(&dir.join("waveforms").join(format!("{}_ch{ch}", cell.key())), &w, &sidecar)?;
        }
        let r = job.run(&w, &pilots, Some(&tx.frame))?;
        records.extend(r.records);
        traces.extend(r.traces);
    }
    let cells = dir.join("cells");
    write_atomic(&cells.join(format!("{}.trace.jsonl", cell.key())), jsonl(&traces).as_bytes())?;
    write_atomic(&cells.join(format!("{}.jsonl", cell.key())), jsonl(&records).as_bytes())?;
    Ok(())
}

/// Run every (power, seed) cell of the plan, resuming from an existing manifest.
///
/// Cells run in parallel on `workers` threads (0 = all cores). Each cell
/// writes its own record file; `results.jsonl` and `traces.jsonl` are then
/// assembled in plan order, so the output does not depend on scheduling.
pub fn run_experiment(plan: &RunPlan, workers: usize) -> Result<RunSummary> {
    let dir = plan.output_dir.clone();
    fs::create_dir_all(dir.join("cells"))?;
    if plan.export_waveforms {
        fs::create_dir_all(dir.join("waveforms"))?;
    }
    let hash = plan.config_hash();
    let manifest = match Manifest::load(&dir)? {
        Some(m) if m.config_hash != hash => {
            return Err(Error::Config(format!(
                "{} holds results of a different configuration ({}), refusing to mix",
                dir.display(),
                m.config_hash
            )))
        }
        Some(m) => m,
        None => Manifest { config_hash: hash, created_unix: now_unix(), plan: plan.clone(), cells: BTreeMap::new() },
    };
    manifest.save(&dir)?;
    let matrix = matrix_for(plan, &dir)?;
    let cells = plan.cells();
    let done = |c: &Cell| {
        manifest.cells.get(&c.key()) == Some(&CellStatus::Done) && dir.join("cells").join(format!("{}.jsonl", c.key())).exists()
    };
    let todo: Vec<Cell> = cells.iter().filter(|c| !done(c)).copied().collect();
    let mut summary = RunSummary { output_dir: dir.clone(), skipped: cells.len() - todo.len(), ..RunSummary::default() };
    log::info!("{} cells to run, {} already done", todo.len(), summary.skipped);

    let sink = Mutex::new((manifest, Vec::<(Cell, String)>::new(), 0usize));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| {
        todo.par_iter().for_each(|cell| {
            let res = run_cell(plan, &matrix, cell, &dir);
            let mut s = sink.lock().expect("result sink poisoned");
            let status = match res {
                Ok(()) => {
                    s.2 += 1;
                    log::info!("cell {} done", cell.key());
                    CellStatus::Done
                }
                Err(e) => {
                    log::warn!("cell {} failed: {e}", cell.key());
                    s.1.push((*cell, e.to_string()));
                    CellStatus::Failed { error: e.to_string() }
                }
            };
            s.0.cells.insert(cell.key(), status);
            if let Err(e) = s.0.save(&dir) {
                log::warn!("cannot update manifest: {e}");
            }
        });
    });
    let (_, failed, completed) = sink.into_inner().expect("result sink poisoned");
    summary.failed = failed;
    summary.completed = completed;
    assemble(plan, &dir)?;
    Ok(summary)
}

/// Concatenate per-cell files in plan order.
fn assemble(plan: &RunPlan, dir: &Path) -> Result<()> {
    for (name, suffix) in [(RESULTS, "jsonl"), (TRACES, "trace.jsonl")] {
        let mut out = BufWriter::new(fs::File::create(dir.join(name))?);
        for c in plan.cells() {
            let p = dir.join("cells").join(format!("{}.{suffix}", c.key()));
            if p.exists() {
                out.write_all(&fs::read(p)?)?;
            }
        }
        out.flush()?;
    }
    Ok(())
}
