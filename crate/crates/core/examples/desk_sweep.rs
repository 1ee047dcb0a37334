//! A seeded launch-power sweep through the experiment harness. Results land in
//! the output directory (default `desk_sweep_out`); rerunning resumes.
//!
//! ```text
//! cargo run --release --example desk_sweep -- [config.toml] [out_dir]
//! ```

use std::path::PathBuf;

use pertnlc::harness::{emit_plotdata, read_records, run_experiment, ExperimentConfig, FigureKind, FigureSpec, Preset, RESULTS};

fn main() -> pertnlc::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let mut cfg = match args.next() {
        Some(p) => ExperimentConfig::load(p.as_ref())?,
        None => {
            let mut c = ExperimentConfig::from_preset(Preset::DeskScale);
            c.set("link.spans", 4);
            c.powers = vec![-2.0, 1.0, 4.0, 7.0];
            c.seeds = vec![1, 2];
            c
        }
    };
    cfg.output_dir = args.next().map(PathBuf::from).unwrap_or_else(|| "desk_sweep_out".into());
    let plan = cfg.resolve()?;
    println!("config hash {}, {} cells", &plan.config_hash()[..12], plan.cells().len());

    let s = run_experiment(&plan, 0)?;
    println!("{} run, {} resumed, {} failed", s.completed, s.skipped, s.failed.len());
    let table = emit_plotdata(&read_records(&plan.output_dir.join(RESULTS))?, &FigureSpec::new(FigureKind::SnrVsPower))?;
    print!("{}", table.to_csv());
    std::process::exit(s.exit_code());
}
