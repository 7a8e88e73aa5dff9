//! The reflection algebra behind Stage 1: every illuminated side of a
//! convex polygon sends a specular beam in the direction x̂ = d − 2(d·ν)ν,
//! and the side's outward normal can be recovered from (d, x̂) alone.
//!
//! ```bash
//! cargo run --release --example critical_directions
//! ```

use backscatter::geometry::{classify_faces, example_triangle, IncidentWave};
use backscatter::recovery::{critical_direction, normal_from_critical};

fn main() {
    let poly = example_triangle();
    println!("side normals and specular directions of the reference triangle:\n");
    for j in 1..=8u32 {
        let d = IncidentWave::octant_direction(j);
        let (front, _) = classify_faces(&poly, d);
        println!("d_{j} at {:6.1}°:", d.angle().to_degrees().rem_euclid(360.0));
        for cell in front {
            if cell.normal.dot(d) > -1e-9 {
                continue; // grazing through rounding only
            }
            let x_hat = critical_direction(d, cell.normal).unwrap();
            let recovered = normal_from_critical(d, x_hat).unwrap();
            println!(
                "  side {}: ν at {:7.2}°, specular x̂ at {:7.2}° (x̂·d = {:+.3}), \
                 ν recovered from (d, x̂) to {:.1e}",
                cell.index,
                cell.normal.angle().to_degrees(),
                x_hat.angle().to_degrees().rem_euclid(360.0),
                x_hat.dot(d),
                (recovered - cell.normal).norm()
            );
        }
    }
    println!("\nx̂·d < 0 marks the backscattering half: only those specular beams are");
    println!("observable as backscatter peaks; shallow hits (|d·ν| < √2/2) reflect");
    println!("into the forward half instead.");
}
