use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pertnlc::harness::{
    base_matrix, emit_plotdata, ingest_waveform, read_records, run_experiment, ExperimentConfig, FigureSpec, Preset, RunPlan,
};
use pertnlc::pert::{write_coupling_matrix, GaussianPulse};
use pertnlc::turbo::Scheme;
use pertnlc::Error;

#[derive(Parser)]
#[command(version, about = "Coherent WDM fiber simulation and nonlinearity compensation receiver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Preset used when no config file is given, or as base of one that names none.
    #[arg(long)]
    preset: Option<Preset>,
    /// Replace the seed list.
    #[arg(long, num_args = 1..)]
    seed: Vec<u64>,
    /// Replace the launch powers, dBm per channel.
    #[arg(long, num_args = 1.., allow_hyphen_values = true)]
    power: Vec<f64>,
    /// Replace the scheme list.
    #[arg(long, num_args = 1..)]
    scheme: Vec<Scheme>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a Monte Carlo sweep and write results to the output directory.
    Simulate {
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Process a captured waveform with its JSON sidecar.
    Ingest {
        file: PathBuf,
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Export the coupling matrix of the configured link.
    GenMatrix {
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Aggregate a results file into a CSV table.
    Plotdata {
        results: PathBuf,
        /// Figure spec file or figure kind (snr-vs-power, q2-vs-power, ...).
        spec: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn plan(config: Option<&PathBuf>, c: &Common) -> Result<RunPlan, Error> {
    let mut cfg = match config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::from_preset(c.preset.unwrap_or_default()),
    };
    if let (Some(p), Some(_)) = (c.preset, config) {
        cfg.preset = p;
    }
    if !c.seed.is_empty() {
        cfg.seeds = c.seed.clone();
    }
    if !c.power.is_empty() {
        cfg.powers = c.power.clone();
    }
    if !c.scheme.is_empty() {
        cfg.schemes = c.scheme.clone();
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    cfg.resolve()
}

fn write_out(out: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.cmd {
        Cmd::Simulate { config, common } => {
            let plan = plan(config.as_ref(), &common)?;
            let s = run_experiment(&plan, common.workers)?;
            for (cell, err) in &s.failed {
                eprintln!("cell {} failed: {err}", cell.key());
            }
            eprintln!(
                "{} cells run, {} resumed, {} failed; results in {}",
                s.completed,
                s.skipped,
                s.failed.len(),
                s.output_dir.display()
            );
            Ok(s.exit_code() as u8)
        }
        Cmd::Ingest { file, config, common } => {
            let plan = plan(config.as_ref(), &common)?;
            let r = ingest_waveform(&file, &plan, None)?;
            for (s, why) in &r.result.refused {
                eprintln!("{}: refused, {why}", s.name());
            }
            let lines: String = r.result.records.iter().map(|m| m.to_json_line() + "\n").collect();
            write_out(common.out.as_ref(), &lines)?;
            Ok(if r.result.refused.is_empty() { 0 } else { 3 })
        }
        Cmd::GenMatrix { config, common } => {
            let plan = plan(config.as_ref(), &common)?;
            let sys = &plan.system;
            let p = 1e-3 * 10f64.powf(plan.powers[0] / 10.0);
            let pulse = GaussianPulse::matched_to(&sys.rrc(), sys.symbol_rate)?;
            let m = base_matrix(sys)?.with_p0(pulse.peak_power(p));
            let mut buf = Vec::new();
            write_coupling_matrix(&mut buf, &m)?;
            write_out(common.out.as_ref(), &String::from_utf8_lossy(&buf))?;
            eprintln!("{} coefficients, {:.2}% of the (2L+1)^2 grid", m.len(), 100.0 * m.retained_fraction());
            Ok(0)
        }
        Cmd::Plotdata { results, spec, out } => {
            let spec = FigureSpec::load(&spec)?;
            let path = if results.is_dir() { results.join(pertnlc::harness::RESULTS) } else { results };
            let table = emit_plotdata(&read_records(&path)?, &spec)?;
            for w in &table.warnings {
                eprintln!("warning: {w}");
            }
            write_out(out.as_ref(), &table.to_csv())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 1,
                _ => 2,
            })
        }
    }
}
