//! Turn a results file into the CSV tables behind each figure kind.
//!
//! ```text
//! cargo run --example plotdata -- desk_sweep_out/results.jsonl
//! ```

use std::path::PathBuf;

use pertnlc::harness::{emit_plotdata, read_records, FigureKind, FigureSpec};
use pertnlc::turbo::Scheme;

fn main() -> pertnlc::Result<()> {
    let path: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "desk_sweep_out/results.jsonl".into());
    let records = read_records(&path)?;
    println!("{} records from {}", records.len(), path.display());
    for kind in [FigureKind::SnrVsPower, FigureKind::Q2VsPower, FigureKind::PostFecBerVsPower, FigureKind::MaxQ2PerChannel] {
        let table = emit_plotdata(&records, &FigureSpec::new(kind))?;
        println!("\n# {kind:?}");
        print!("{}", table.to_csv());
    }
    // A restricted selection; schemes absent from the file are dropped with a warning.
    let spec = FigureSpec { kind: FigureKind::SnrVsPower, schemes: vec![Scheme::NoNlc, Scheme::Dbp], channel: None };
    let table = emit_plotdata(&records, &spec)?;
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}
