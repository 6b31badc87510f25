//! Deterministic SVG rendering of face layouts in the unit disk.
//!
//! Hypercycle circles cross the unit circle; they are clipped to the closed
//! disk so only the hyperbolically meaningful arc is drawn. The dual circle
//! is dashed, tangent points are marked with dots. Output is plain SVG 1.1
//! text, byte-identical for identical inputs.

use std::fmt::Write;

use crate::layout::{DiskCircleKind, FaceLayout};

#[derive(Clone, Debug)]
pub struct RenderOptions {
    /// Pixel size of the (square) image.
    pub size: u32,
    /// Stroke width in disk units (the disk has radius 1).
    pub stroke_width: f64,
    /// Draw tangent point markers.
    pub tangent_points: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            size: 640,
            stroke_width: 0.008,
            tangent_points: true,
        }
    }
}

fn color(kind: DiskCircleKind) -> &'static str {
    match kind {
        DiskCircleKind::Hypercycle => "#c0392b",
        DiskCircleKind::Horocycle => "#27ae60",
        DiskCircleKind::Circle => "#2960a8",
        DiskCircleKind::Dual => "#666666",
    }
}

/// Render any number of layouts (all normalized to an origin-centered dual
/// circle) into one SVG document. An empty slice yields the bare disk.
pub fn render_svg(layouts: &[FaceLayout], options: &RenderOptions) -> String {
    let mut svg = String::new();
    let size = options.size;
    let sw = options.stroke_width;
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" \
         viewBox=\"-1.1 -1.1 2.2 2.2\">"
    )
    .unwrap();
    svg.push_str(
        "<defs><clipPath id=\"disk\"><circle cx=\"0\" cy=\"0\" r=\"1\"/></clipPath></defs>\n",
    );
    // y grows upward in the disk model
    svg.push_str("<g transform=\"scale(1,-1)\">\n");
    writeln!(
        svg,
        "<circle cx=\"0\" cy=\"0\" r=\"1\" fill=\"none\" stroke=\"#000000\" stroke-width=\"{sw}\"/>"
    )
    .unwrap();
    for layout in layouts {
        writeln!(
            svg,
            "<circle cx=\"0\" cy=\"0\" r=\"{}\" fill=\"none\" stroke=\"{}\" \
             stroke-width=\"{sw}\" stroke-dasharray=\"{} {}\"/>",
            layout.dual.radius,
            color(DiskCircleKind::Dual),
            3.0 * sw,
            3.0 * sw,
        )
        .unwrap();
        for circle in &layout.circles {
            writeln!(
                svg,
                "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"{}\" \
                 stroke-width=\"{sw}\" clip-path=\"url(#disk)\"/>",
                circle.center[0],
                circle.center[1],
                circle.radius,
                color(circle.kind),
            )
            .unwrap();
        }
        if options.tangent_points {
            for p in &layout.tangent_points {
                writeln!(
                    svg,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#000000\"/>",
                    p[0],
                    p[1],
                    1.8 * sw,
                )
                .unwrap();
            }
        }
    }
    svg.push_str("</g>\n</svg>\n");
    svg
}
