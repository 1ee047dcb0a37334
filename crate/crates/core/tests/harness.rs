use std::fs;
use std::path::Path;

use pertnlc::harness::{
    emit_plotdata, ingest_waveform, read_records, run_experiment, ExperimentConfig, FigureKind, FigureSpec, Preset, Sidecar,
    RESULTS, TRACES,
};
use pertnlc::turbo::Scheme;
use pertnlc::Error;

/// One channel, two short spans, two codewords: seconds per cell.
fn small(dir: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::from_preset(Preset::DeskScale);
    c.set("channels", 1);
    c.set("blocks_per_channel", 2);
    c.set("link.spans", 2);
    c.powers = vec![0.0, 3.0];
    c.seeds = vec![5];
    c.output_dir = dir.to_path_buf();
    c
}

#[test]
fn desk_preset_single_cell_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::from_preset(Preset::DeskScale);
    c.output_dir = dir.path().to_path_buf();
    let s = run_experiment(&c.resolve().unwrap(), 1).unwrap();
    assert_eq!((s.completed, s.failed.len(), s.exit_code()), (1, 0, 0));
    let recs = read_records(&dir.path().join(RESULTS)).unwrap();
    assert!(recs.len() >= 4);
    let snr = |s: Scheme| recs.iter().find(|r| r.scheme == s).unwrap().snr_db;
    assert!(snr(Scheme::Genie) >= snr(Scheme::FecAssisted) - 1e-9);
    assert!(snr(Scheme::Conventional) > snr(Scheme::NoNlc));
}

#[test]
fn results_are_identical_across_runs_and_worker_counts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = run_experiment(&small(a.path()).resolve().unwrap(), 1).unwrap();
    let sb = run_experiment(&small(b.path()).resolve().unwrap(), 2).unwrap();
    assert_eq!((sa.completed, sb.completed), (2, 2));
    for f in [RESULTS, TRACES, "coupling.txt"] {
        let (x, y) = (fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn resume_skips_finished_cells_and_refuses_other_configs() {
    let dir = tempfile::tempdir().unwrap();
    let plan = small(dir.path()).resolve().unwrap();
    run_experiment(&plan, 1).unwrap();
    let full = fs::read(dir.path().join(RESULTS)).unwrap();

    let cell = plan.cells()[1].key();
    fs::remove_file(dir.path().join("cells").join(format!("{cell}.jsonl"))).unwrap();
    let s = run_experiment(&plan, 1).unwrap();
    assert_eq!((s.completed, s.skipped), (1, 1));
    assert_eq!(fs::read(dir.path().join(RESULTS)).unwrap(), full);

    let s = run_experiment(&plan, 1).unwrap();
    assert_eq!((s.completed, s.skipped), (0, 2));

    let mut other = small(dir.path());
    other.seeds = vec![6];
    assert!(matches!(run_experiment(&other.resolve().unwrap(), 1), Err(Error::Config(_))));
}

#[test]
fn exported_capture_reingests_to_the_same_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(dir.path());
    c.powers = vec![3.0];
    c.export_waveforms = true;
    let plan = c.resolve().unwrap();
    run_experiment(&plan, 1).unwrap();
    let sim = read_records(&dir.path().join(RESULTS)).unwrap();
    let wave = dir.path().join("waveforms").join(format!("{}_ch0.dpwf", plan.cells()[0].key()));

    let r = ingest_waveform(&wave, &plan, None).unwrap();
    assert!(r.has_truth && r.result.refused.is_empty());
    assert_eq!(r.result.records.len(), sim.len());
    for (a, b) in r.result.records.iter().zip(&sim) {
        assert_eq!(a.scheme, b.scheme);
        assert!((a.snr_db - b.snr_db).abs() < 1e-9 && (a.pre_fec_ber - b.pre_fec_ber).abs() < 1e-12);
    }

    // Truncated payload.
    let bytes = fs::read(&wave).unwrap();
    let cut = dir.path().join("cut.dpwf");
    fs::write(&cut, &bytes[..bytes.len() - 100]).unwrap();
    fs::copy(wave.with_extension("json"), cut.with_extension("json")).unwrap();
    match ingest_waveform(&cut, &plan, None) {
        Err(Error::Format { message, .. }) => assert!(message.contains("expected") && message.contains("found"), "{message}"),
        other => panic!("{other:?}"),
    }

    // Sidecar without transmitted codewords: genie is refused, the rest runs blind.
    let blind = dir.path().join("blind.dpwf");
    fs::copy(&wave, &blind).unwrap();
    let mut side: Sidecar = serde_json::from_str(&fs::read_to_string(wave.with_extension("json")).unwrap()).unwrap();
    side.truth_codewords = None;
    fs::write(blind.with_extension("json"), serde_json::to_string(&side).unwrap()).unwrap();
    let r = ingest_waveform(&blind, &plan, None).unwrap();
    assert!(!r.has_truth);
    assert_eq!(r.result.refused.len(), 1);
    assert_eq!(r.result.refused[0].0, Scheme::Genie);
    assert_eq!(r.result.records.len(), sim.len() - 1);
    assert!(r.result.records.iter().all(|m| m.post_fec_ber.is_none()));

    let t = emit_plotdata(&sim, &FigureSpec::new(FigureKind::SnrVsPower)).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.header.len(), 1 + 2 * 4);
}
