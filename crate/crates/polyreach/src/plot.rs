//! 2D SVG rendering of reach results: reach polygons in green, the unsafe
//! region in red, simulated trajectory states as blue markers.
//!
//! The viewport is computed from the drawn geometry plus a 10% margin.
//! Coordinates are written with a fixed precision so identical inputs
//! produce identical files.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::Polytope;
use crate::jsonio::ResultDoc;
use crate::verify::Trajectory;

const CANVAS: f64 = 800.0;
const REACH_FILL: &str = "green";
const UNSAFE_FILL: &str = "red";
const MARKER_FILL: &str = "blue";

fn fmt_coord(v: f64) -> String {
    format!("{v:.4}")
}

struct Extent {
    min: [f64; 2],
    max: [f64; 2],
}

impl Extent {
    fn new() -> Self {
        Extent {
            min: [f64::MAX; 2],
            max: [f64::MIN; 2],
        }
    }

    fn include(&mut self, p: &[f64]) {
        for i in 0..2 {
            self.min[i] = self.min[i].min(p[i]);
            self.max[i] = self.max[i].max(p[i]);
        }
    }

    fn is_valid(&self) -> bool {
        self.min[0] <= self.max[0] && self.min[1] <= self.max[1]
    }
}

struct Mapper {
    scale: f64,
    min: [f64; 2],
    height: f64,
    pad: f64,
}

impl Mapper {
    /// World point to SVG pixel coordinates (y axis flipped).
    fn map(&self, p: &[f64]) -> (f64, f64) {
        let x = self.pad + (p[0] - self.min[0]) * self.scale;
        let y = self.height - self.pad - (p[1] - self.min[1]) * self.scale;
        (x, y)
    }
}

/// Render a reach result (2D only) to an SVG document.
pub fn render_svg(doc: &ResultDoc, trajectories: Option<&[Trajectory]>) -> Result<String> {
    if doc.state_dim != 2 {
        return Err(Error::Usage(format!(
            "2D plotting only: result has state dimension {}",
            doc.state_dim
        )));
    }

    let mut extent = Extent::new();
    let mut reach_polygons: Vec<Vec<Vec<f64>>> = Vec::new();
    for step in &doc.per_step {
        for part in step.parts() {
            let poly = ordered_polygon(part)?;
            for p in &poly {
                extent.include(p);
            }
            reach_polygons.push(poly);
        }
    }
    if let Some(trajs) = trajectories {
        for t in trajs {
            for s in &t.states {
                if s.len() != 2 {
                    return Err(Error::Usage(
                        "2D plotting only: trajectory states must have 2 entries".into(),
                    ));
                }
                extent.include(s);
            }
        }
    }
    // Bounded unsafe parts join the extent; unbounded ones are clipped to
    // the viewport box below.
    let mut unsafe_known: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut unsafe_unbounded: Vec<&Polytope> = Vec::new();
    for part in &doc.unsafe_parts {
        match ordered_polygon(part) {
            Ok(poly) => {
                for p in &poly {
                    extent.include(p);
                }
                unsafe_known.push(poly);
            }
            Err(Error::UnboundedPolytope) => unsafe_unbounded.push(part),
            Err(e) => return Err(e),
        }
    }
    if !extent.is_valid() {
        return Err(Error::Usage("nothing to plot".into()));
    }

    let span_x = (extent.max[0] - extent.min[0]).max(1e-9);
    let span_y = (extent.max[1] - extent.min[1]).max(1e-9);
    let span = span_x.max(span_y);
    let pad = 0.1 * span * (CANVAS / (1.2 * span));
    let scale = (CANVAS - 2.0 * pad) / span;
    let width = 2.0 * pad + span_x * scale;
    let height = 2.0 * pad + span_y * scale;
    let mapper = Mapper {
        scale,
        min: extent.min,
        height,
        pad,
    };

    for part in unsafe_unbounded {
        let viewport = Polytope::bounding_box_set(
            &[
                (extent.min[0] + extent.max[0]) / 2.0,
                (extent.min[1] + extent.max[1]) / 2.0,
            ],
            span,
        )?;
        let clipped = part.intersect(&viewport)?;
        if !clipped.is_empty()? {
            unsafe_known.push(ordered_polygon(&clipped)?);
        }
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        fmt_coord(width),
        fmt_coord(height),
        fmt_coord(width),
        fmt_coord(height)
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>",
        fmt_coord(width),
        fmt_coord(height)
    );

    svg.push_str("  <g fill=\"");
    svg.push_str(REACH_FILL);
    svg.push_str("\" fill-opacity=\"0.45\" stroke=\"darkgreen\" stroke-width=\"0.5\">\n");
    for poly in &reach_polygons {
        push_polygon(&mut svg, poly, &mapper);
    }
    svg.push_str("  </g>\n");

    svg.push_str("  <g fill=\"");
    svg.push_str(UNSAFE_FILL);
    svg.push_str("\" fill-opacity=\"0.85\" stroke=\"darkred\" stroke-width=\"0.5\">\n");
    for poly in &unsafe_known {
        push_polygon(&mut svg, poly, &mapper);
    }
    svg.push_str("  </g>\n");

    if let Some(trajs) = trajectories {
        svg.push_str("  <g fill=\"");
        svg.push_str(MARKER_FILL);
        svg.push_str("\">\n");
        for t in trajs {
            for s in &t.states {
                let (x, y) = mapper.map(s);
                let _ = writeln!(
                    svg,
                    "    <circle cx=\"{}\" cy=\"{}\" r=\"1.5\"/>",
                    fmt_coord(x),
                    fmt_coord(y)
                );
            }
        }
        svg.push_str("  </g>\n");
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Vertices of a 2D polytope ordered counterclockwise around the centroid.
/// Degenerate polytopes (segments, points) come back with 2 or 1 entries.
fn ordered_polygon(part: &Polytope) -> Result<Vec<Vec<f64>>> {
    if part.dim() != 2 {
        return Err(Error::Usage("2D plotting only".into()));
    }
    let verts = part.vertices()?;
    if verts.len() <= 2 {
        return Ok(verts.to_vec());
    }
    let n = verts.len() as f64;
    let cx = verts.iter().map(|v| v[0]).sum::<f64>() / n;
    let cy = verts.iter().map(|v| v[1]).sum::<f64>() / n;
    let mut with_angle: Vec<(f64, &Vec<f64>)> = verts
        .iter()
        .map(|v| ((v[1] - cy).atan2(v[0] - cx), v))
        .collect();
    with_angle.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(with_angle.into_iter().map(|(_, v)| v.clone()).collect())
}

fn push_polygon(svg: &mut String, poly: &[Vec<f64>], mapper: &Mapper) {
    match poly.len() {
        0 => {}
        1 => {
            let (x, y) = mapper.map(&poly[0]);
            let _ = writeln!(
                svg,
                "    <circle cx=\"{}\" cy=\"{}\" r=\"2\"/>",
                fmt_coord(x),
                fmt_coord(y)
            );
        }
        2 => {
            let (x1, y1) = mapper.map(&poly[0]);
            let (x2, y2) = mapper.map(&poly[1]);
            let _ = writeln!(
                svg,
                "    <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke-width=\"1.5\"/>",
                fmt_coord(x1),
                fmt_coord(y1),
                fmt_coord(x2),
                fmt_coord(y2)
            );
        }
        _ => {
            svg.push_str("    <polygon points=\"");
            for (i, p) in poly.iter().enumerate() {
                if i > 0 {
                    svg.push(' ');
                }
                let (x, y) = mapper.map(p);
                let _ = write!(svg, "{},{}", fmt_coord(x), fmt_coord(y));
            }
            svg.push_str("\"/>\n");
        }
    }
}
