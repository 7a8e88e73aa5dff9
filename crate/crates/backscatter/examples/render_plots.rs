//! SVG output: the polar plot of |u∞|² with incident/peak/normal arrows,
//! and the truth-versus-reconstruction overlay.
//!
//! ```bash
//! cargo run --release --example render_plots
//! # → target/example_plots/*.svg
//! ```

use backscatter::pipeline::{run_pipeline, RunOutcome, SceneConfig};
use backscatter::plot::{overlay_svg, polar_svg, PlotSpec};
use backscatter::vec2::Vec2;
use std::f64::consts::PI;

fn main() {
    let config = SceneConfig::from_toml(&format!(
        r#"
        [scene]
        vertices = [[1.0, 0.0], [2.5, -0.5], [2.5, 1.0]]
        boundary = "sound-soft"
        radius = 3.0

        [measurement]
        wavenumbers = [{}]
        incident_indices = [2, 4, 6, 8]

        [noise]
        deltas = [0.0]
        seed = 42

        [recovery]
        expected_sides = 3
        x0 = [2.136, 0.217]
        initial_distance = 1.0
        "#,
        6.0 * PI
    ))
    .unwrap();
    let record = run_pipeline(&config).unwrap();
    let run = &record.runs[0];

    let out = std::path::Path::new("target/example_plots");
    std::fs::create_dir_all(out).unwrap();

    for dir in &run.directions {
        let normals: Vec<Vec2> = run
            .pairs
            .iter()
            .filter(|p| p.incident_index == dir.incident_index)
            .map(|p| p.normal)
            .collect();
        let svg = polar_svg(&dir.filtered, &dir.peaks.peaks, &normals, &PlotSpec::polar());
        let path = out.join(format!("polar_d{}.svg", dir.octant));
        std::fs::write(&path, svg).unwrap();
        println!("wrote {}", path.display());
    }

    if let RunOutcome::Reconstructed { result, .. } = &run.outcome {
        let svg = overlay_svg(
            Some(&record.truth),
            Some(&result.polygon),
            Some(record.x0),
            &PlotSpec::overlay(),
        );
        let path = out.join("overlay.svg");
        std::fs::write(&path, svg).unwrap();
        println!("wrote {}", path.display());
    }
}
