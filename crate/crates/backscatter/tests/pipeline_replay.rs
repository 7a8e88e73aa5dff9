//! Persistence and stage-isolation properties of the pipeline: a record is
//! rebuildable from its own artifacts, and replaying a persisted
//! intermediate through the downstream stages reproduces the original
//! downstream outputs exactly.

use backscatter::pipeline::persist::{
    grid_from_csv, grid_to_csv, load_grid, load_normals, load_peaks, load_result, persist_record,
    render_record,
};
use backscatter::pipeline::{
    assemble_problem, pairs_from_peaks, run_pipeline, sort_pairs, DirectionRun, RunOutcome,
    SceneConfig,
};
use backscatter::recovery::{group_effective_normals, minimize_distances, MinimizeOptions};
use backscatter::signal::detect_backscatter_peaks;
use std::f64::consts::PI;

fn small_config(delta: f64) -> SceneConfig {
    let k = 6.0 * PI;
    SceneConfig::from_toml(&format!(
        r#"
        [scene]
        vertices = [[1.0, 0.0], [2.5, -0.5], [2.5, 1.0]]
        boundary = "sound-soft"
        radius = 3.0

        [measurement]
        wavenumbers = [{k}]
        incident_indices = [2, 4, 6, 8]

        [noise]
        deltas = [{delta}]
        seed = 42

        [recovery]
        expected_sides = 3
        x0 = [2.136, 0.217]
        initial_distance = 1.0
        "#
    ))
    .unwrap()
}

#[test]
fn persisted_record_replays_bit_identically() {
    let config = small_config(0.05);
    let record = run_pipeline(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    persist_record(&record, dir.path()).unwrap();

    // Reload the filtered grids and drive the downstream stages afresh.
    let run_name = record.runs[0].name();
    let mut pairs = Vec::new();
    let mut directions: Vec<DirectionRun> = Vec::new();
    for (incident_index, &octant) in config.measurement.incident_indices.iter().enumerate() {
        let filtered = load_grid(dir.path(), &run_name, octant, "filtered").unwrap();
        let peaks =
            detect_backscatter_peaks(&filtered, config.peaks.window, config.peaks.prominence)
                .unwrap();
        // Identical to the originally persisted peaks.
        let persisted = load_peaks(dir.path(), &run_name, octant).unwrap();
        assert_eq!(peaks.peaks, persisted.peaks);
        pairs.extend(pairs_from_peaks(&filtered, &peaks, incident_index));
        let original = &record.runs[0].directions[incident_index];
        assert_eq!(original.filtered.values, filtered.values);
        directions.push(DirectionRun {
            octant,
            incident_index,
            d: filtered.d,
            noise_seed: original.noise_seed,
            clean: original.clean.clone(),
            noisy: original.noisy.clone(),
            filtered,
            peaks,
        });
    }
    sort_pairs(&mut pairs);
    assert_eq!(pairs, record.runs[0].pairs);

    let effective = group_effective_normals(&pairs, config.recovery.angle_tol_deg.to_radians())
        .strongest(config.recovery.expected_sides);
    let persisted_normals = load_normals(dir.path(), &run_name).unwrap();
    assert_eq!(effective, persisted_normals.effective);

    let problem =
        assemble_problem(&config, record.x0, record.runs[0].k, &directions, &effective).unwrap();
    let options = MinimizeOptions {
        optimizer: config.recovery.optimizer,
        max_evals: config.recovery.max_evals,
        scan_cycles: config.recovery.scan_cycles,
        ..Default::default()
    };
    let initial = vec![config.initial_distance(); problem.side_count()];
    let replayed = minimize_distances(&problem, &initial, &options).unwrap();

    let persisted_result = load_result(dir.path(), &run_name).unwrap();
    assert_eq!(replayed.distances, persisted_result.distances);
    assert_eq!(replayed.final_cost, persisted_result.final_cost);
}

#[test]
fn zero_noise_identity_filter_grids_are_bit_exact_in_record() {
    let mut config = small_config(0.0);
    config.filter.cutoff = backscatter::pipeline::config::CutoffSpec::Fixed(180);
    let record = run_pipeline(&config).unwrap();
    let rendered = render_record(&record);
    let find = |name: &str| {
        rendered
            .iter()
            .find(|(n, _)| n.ends_with(name))
            .map(|(_, b)| b.clone())
            .unwrap()
    };
    assert_eq!(find("d2_clean.csv"), find("d2_noisy.csv"));
    assert_eq!(find("d2_noisy.csv"), find("d2_filtered.csv"));
}

#[test]
fn seed_override_changes_noisy_but_not_clean_grids() {
    let config = small_config(0.05);
    let mut other = config.clone();
    other.noise.seed = 7;
    let a = run_pipeline(&config).unwrap();
    let b = run_pipeline(&other).unwrap();
    for (da, db) in a.runs[0].directions.iter().zip(&b.runs[0].directions) {
        assert_eq!(da.clean.values, db.clean.values);
        assert_ne!(da.noisy.values, db.noisy.values);
    }
}

#[test]
fn grid_csv_text_roundtrip_preserves_bits() {
    let config = small_config(0.05);
    let record = run_pipeline(&config).unwrap();
    let grid = &record.runs[0].directions[0].noisy;
    let text = grid_to_csv(grid);
    let back = grid_from_csv(&text, "roundtrip").unwrap();
    assert_eq!(grid.values, back.values);
    assert_eq!(grid.k, back.k);
}

#[test]
fn stage_failure_is_persisted_with_partial_record() {
    let mut config = small_config(0.0);
    config.recovery.expected_sides = 25;
    let record = run_pipeline(&config).unwrap();
    assert!(matches!(record.runs[0].outcome, RunOutcome::Failed { .. }));
    let rendered = render_record(&record);
    let names: Vec<&String> = rendered.iter().map(|(n, _)| n).collect();
    assert!(names.iter().any(|n| n.ends_with("failure.toml")));
    assert!(names.iter().any(|n| n.ends_with("d2_filtered.csv")));
    assert!(!names.iter().any(|n| n.ends_with("result.toml")));
}
