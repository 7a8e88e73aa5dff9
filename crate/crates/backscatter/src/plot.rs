//! Deterministic SVG plots: polar curves of the squared phaseless far
//! field, and overlays of true versus reconstructed polygons.
//!
//! SVG is the only output format: text, diffable, renderer-free. Figure
//! regression tests key on the annotation metadata embedded as XML
//! comments (`<!-- peak-deg: … -->`), never on pixel geometry. All floats
//! are printed with fixed precision so identical inputs give identical
//! bytes.

use crate::forward::FarFieldGrid;
use crate::geometry::ConvexPolygon;
use crate::signal::Peak;
use crate::vec2::Vec2;
use std::fmt::Write;

/// What to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Closed polar curve of |u∞(θ)|².
    PolarSquaredModulus,
    /// True polygon, reconstructed polygon and the location point.
    ReconstructionOverlay,
}

/// Rendering options shared by both plot kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotSpec {
    pub kind: PlotKind,
    /// Black arrow along the incident direction.
    pub show_incident: bool,
    /// Red arrows at detected peak angles.
    pub show_peaks: bool,
    /// Green arrows along recovered normals.
    pub show_normals: bool,
    /// Star marker at the location point.
    pub show_location: bool,
    /// Canvas size in pixels (square).
    pub size: u32,
}

impl PlotSpec {
    pub fn polar() -> Self {
        PlotSpec {
            kind: PlotKind::PolarSquaredModulus,
            show_incident: true,
            show_peaks: true,
            show_normals: true,
            show_location: false,
            size: 600,
        }
    }

    pub fn overlay() -> Self {
        PlotSpec {
            kind: PlotKind::ReconstructionOverlay,
            show_incident: false,
            show_peaks: false,
            show_normals: false,
            show_location: true,
            size: 600,
        }
    }
}

fn header(size: u32) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" \
         width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n\
         <rect width=\"{size}\" height=\"{size}\" fill=\"white\"/>\n"
    )
}

fn fmt_f(v: f64) -> String {
    format!("{v:.4}")
}

fn arrow(out: &mut String, from: (f64, f64), to: (f64, f64), color: &str) {
    let (dx, dy) = (to.0 - from.0, to.1 - from.1);
    let len = (dx * dx + dy * dy).sqrt().max(1e-9);
    let (ux, uy) = (dx / len, dy / len);
    // Two short barbs at the tip.
    let barb = 0.08 * len;
    let left = (
        to.0 - barb * (ux * 0.866 - uy * 0.5),
        to.1 - barb * (uy * 0.866 + ux * 0.5),
    );
    let right = (
        to.0 - barb * (ux * 0.866 + uy * 0.5),
        to.1 - barb * (uy * 0.866 - ux * 0.5),
    );
    let _ = write!(
        out,
        "<path d=\"M {} {} L {} {} M {} {} L {} {} M {} {} L {} {}\" stroke=\"{color}\" \
         stroke-width=\"2\" fill=\"none\"/>\n",
        fmt_f(from.0),
        fmt_f(from.1),
        fmt_f(to.0),
        fmt_f(to.1),
        fmt_f(left.0),
        fmt_f(left.1),
        fmt_f(to.0),
        fmt_f(to.1),
        fmt_f(right.0),
        fmt_f(right.1),
        fmt_f(to.0),
        fmt_f(to.1),
    );
}

/// Polar plot of |u∞|² with optional incident/peak/normal annotations.
///
/// `normals` are the unit normals implied by the plotted grid's peaks (or
/// any other set worth annotating); they are drawn as green arrows and
/// listed in the comment metadata.
pub fn polar_svg(grid: &FarFieldGrid, peaks: &[Peak], normals: &[Vec2], spec: &PlotSpec) -> String {
    let size = spec.size as f64;
    let center = size / 2.0;
    let radius = 0.42 * size;
    let max_mag2 = grid
        .values
        .iter()
        .map(|v| v.norm_sqr())
        .fold(f64::MIN_POSITIVE, f64::max);
    let mut out = header(spec.size);
    let _ = writeln!(out, "<!-- kind: polar-squared-modulus -->");
    let _ = writeln!(out, "<!-- n-angles: {} -->", grid.n_angles());
    let _ = writeln!(out, "<!-- incident-deg: {} -->", fmt_f(grid.d.angle().to_degrees()));
    for p in peaks {
        let _ = writeln!(
            out,
            "<!-- peak-deg: {} mag2: {:e} -->",
            fmt_f(grid.angle_deg(p.index)),
            p.mag2
        );
    }
    for n in normals {
        let _ = writeln!(out, "<!-- normal-deg: {} -->", fmt_f(n.angle().to_degrees()));
    }
    // Reference circle.
    let _ = writeln!(
        out,
        "<circle cx=\"{0}\" cy=\"{0}\" r=\"{1}\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1\"/>",
        fmt_f(center),
        fmt_f(radius)
    );
    // Closed polar curve; SVG y grows downward, so flip the y coordinate.
    let mut path = String::from("<path d=\"");
    for (i, v) in grid.values.iter().enumerate() {
        let r = radius * v.norm_sqr() / max_mag2;
        let t = grid.angle(i);
        let x = center + r * t.cos();
        let y = center - r * t.sin();
        let _ = write!(path, "{} {} {} ", if i == 0 { "M" } else { "L" }, fmt_f(x), fmt_f(y));
    }
    path.push_str("Z\" fill=\"none\" stroke=\"blue\" stroke-width=\"1.5\"/>\n");
    out.push_str(&path);

    if spec.show_incident {
        let d = grid.d;
        arrow(
            &mut out,
            (center, center),
            (center + radius * 1.05 * d.x, center - radius * 1.05 * d.y),
            "black",
        );
    }
    if spec.show_peaks {
        for p in peaks {
            let t = grid.angle(p.index);
            arrow(
                &mut out,
                (center, center),
                (center + radius * 0.95 * t.cos(), center - radius * 0.95 * t.sin()),
                "red",
            );
        }
    }
    if spec.show_normals {
        for n in normals {
            arrow(
                &mut out,
                (center + radius * 0.55 * n.x, center - radius * 0.55 * n.y),
                (center + radius * 0.80 * n.x, center - radius * 0.80 * n.y),
                "green",
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

fn polygon_path(poly: &ConvexPolygon, map: &impl Fn(Vec2) -> (f64, f64), style: &str) -> String {
    let mut path = String::from("<path d=\"");
    for (i, &v) in poly.vertices().iter().enumerate() {
        let (x, y) = map(v);
        let _ = write!(path, "{} {} {} ", if i == 0 { "M" } else { "L" }, fmt_f(x), fmt_f(y));
    }
    path.push_str("Z\" ");
    path.push_str(style);
    path.push_str("/>\n");
    path
}

/// Overlay of the true polygon (dashed black), the reconstruction (solid
/// red) and the location point (star marker).
pub fn overlay_svg(
    truth: Option<&ConvexPolygon>,
    reconstruction: Option<&ConvexPolygon>,
    x0: Option<Vec2>,
    spec: &PlotSpec,
) -> String {
    let size = spec.size as f64;
    // Fit all drawable content with a 10% margin.
    let mut points: Vec<Vec2> = Vec::new();
    if let Some(p) = truth {
        points.extend_from_slice(p.vertices());
    }
    if let Some(p) = reconstruction {
        points.extend_from_slice(p.vertices());
    }
    if let Some(p) = x0 {
        points.push(p);
    }
    let (mut lo, mut hi) = (Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0));
    if !points.is_empty() {
        lo = Vec2::new(
            points.iter().map(|p| p.x).fold(f64::INFINITY, f64::min),
            points.iter().map(|p| p.y).fold(f64::INFINITY, f64::min),
        );
        hi = Vec2::new(
            points.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max),
            points.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max),
        );
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
    let scale = 0.8 * size / span;
    let mid = (lo + hi) * 0.5;
    let map = move |p: Vec2| -> (f64, f64) {
        (
            size / 2.0 + (p.x - mid.x) * scale,
            size / 2.0 - (p.y - mid.y) * scale,
        )
    };

    let mut out = header(spec.size);
    let _ = writeln!(out, "<!-- kind: reconstruction-overlay -->");
    if let Some(p) = truth {
        for v in p.vertices() {
            let _ = writeln!(out, "<!-- truth-vertex: {} {} -->", fmt_f(v.x), fmt_f(v.y));
        }
        out.push_str(&polygon_path(
            p,
            &map,
            "fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"",
        ));
    }
    if let Some(p) = reconstruction {
        for v in p.vertices() {
            let _ = writeln!(out, "<!-- recon-vertex: {} {} -->", fmt_f(v.x), fmt_f(v.y));
        }
        out.push_str(&polygon_path(
            p,
            &map,
            "fill=\"none\" stroke=\"red\" stroke-width=\"1.5\"",
        ));
    }
    if spec.show_location {
        if let Some(p) = x0 {
            let _ = writeln!(out, "<!-- location: {} {} -->", fmt_f(p.x), fmt_f(p.y));
            let (cx, cy) = map(p);
            // Five-pointed star.
            let mut star = String::from("<path d=\"");
            let r_out = 0.018 * size;
            let r_in = 0.007 * size;
            for i in 0..10 {
                let r = if i % 2 == 0 { r_out } else { r_in };
                let t = std::f64::consts::FRAC_PI_2 + i as f64 * std::f64::consts::PI / 5.0;
                let _ = write!(
                    star,
                    "{} {} {} ",
                    if i == 0 { "M" } else { "L" },
                    fmt_f(cx + r * t.cos()),
                    fmt_f(cy - r * t.sin())
                );
            }
            star.push_str("Z\" fill=\"red\"/>\n");
            out.push_str(&star);
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{po_far_field_grid, BoundaryCondition};
    use crate::geometry::{example_triangle, IncidentWave};
    use crate::signal::detect_backscatter_peaks;
    use std::f64::consts::PI;

    fn demo_grid() -> FarFieldGrid {
        let wave = IncidentWave::new(6.0 * PI, Vec2::new(0.0, 1.0)).unwrap();
        po_far_field_grid(&example_triangle(), &wave, BoundaryCondition::SoundSoft, 360)
    }

    #[test]
    fn polar_svg_is_deterministic_and_annotated() {
        let grid = demo_grid();
        let peaks = detect_backscatter_peaks(&grid, 5, 2.0).unwrap();
        let normals: Vec<Vec2> = peaks
            .peaks
            .iter()
            .filter_map(|p| crate::recovery::normal_from_critical(grid.d, grid.x_hat(p.index)).ok())
            .collect();
        let spec = PlotSpec::polar();
        let a = polar_svg(&grid, &peaks.peaks, &normals, &spec);
        let b = polar_svg(&grid, &peaks.peaks, &normals, &spec);
        assert_eq!(a, b);
        assert!(a.contains("<!-- incident-deg: 90.0000 -->"));
        assert!(a.contains("peak-deg"));
        assert!(a.contains("normal-deg"));
    }

    #[test]
    fn bare_polar_curve_is_valid_xml_without_annotations() {
        let grid = demo_grid();
        let spec = PlotSpec {
            show_incident: false,
            show_peaks: false,
            show_normals: false,
            ..PlotSpec::polar()
        };
        let svg = polar_svg(&grid, &[], &[], &spec);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(!svg.contains("stroke=\"red\""));
        assert!(!svg.contains("stroke=\"black\""));
        // Minimal well-formedness: every opened tag is closed or self-closed.
        assert_eq!(svg.matches("<svg").count(), 1);
        assert_eq!(svg.matches("</svg>").count(), 1);
    }

    #[test]
    fn polar_annotation_list_is_pinned_for_south_wave() {
        // Regression on annotation metadata, not pixels: the south
        // detecting wave on the reference triangle yields the specular
        // peak at 157° plus the sidelobe ladder of the lit side.
        let wave = IncidentWave::new(6.0 * PI, Vec2::new(0.0, -1.0)).unwrap();
        let grid = po_far_field_grid(&example_triangle(), &wave, BoundaryCondition::SoundSoft, 360);
        let peaks = detect_backscatter_peaks(&grid, 5, 2.0).unwrap();
        let svg = polar_svg(&grid, &peaks.peaks, &[], &PlotSpec::polar());
        let annotated: Vec<&str> = svg
            .lines()
            .filter(|l| l.starts_with("<!-- peak-deg:"))
            .collect();
        let pinned = [
            "<!-- peak-deg: 157.0000",
            "<!-- peak-deg: 179.0000",
            "<!-- peak-deg: 141.0000",
            "<!-- peak-deg: 129.0000",
            "<!-- peak-deg: 119.0000",
            "<!-- peak-deg: 108.0000",
            "<!-- peak-deg: 96.0000",
        ];
        assert_eq!(annotated.len(), pinned.len());
        for (line, prefix) in annotated.iter().zip(pinned) {
            assert!(line.starts_with(prefix), "{line} !~ {prefix}");
        }
    }

    #[test]
    fn overlay_of_identical_polygons_draws_coincident_paths() {
        let t = example_triangle();
        let svg = overlay_svg(Some(&t), Some(&t), Some(t.centroid()), &PlotSpec::overlay());
        // Both polygons map to the same path coordinates.
        let paths: Vec<&str> = svg
            .lines()
            .filter(|l| l.starts_with("<path d=\"M"))
            .collect();
        assert!(paths.len() >= 2);
        let coords = |s: &str| s.split('"').nth(1).unwrap_or("").to_string();
        assert_eq!(coords(paths[0]), coords(paths[1]));
    }
}
