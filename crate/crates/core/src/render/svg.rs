//! SVG scene rendering: hyperstreamline ribbons colored by the major
//! eigenvalue, with dashed template overlays and defect markers.

use std::fmt::Write as _;
use std::path::Path;

use crate::integrator::Hyperstreamline;
use crate::render::colormap;
use crate::render::io::atomic_write;
use crate::render::Scene;
use crate::Result;

const CANVAS: f64 = 800.0;
const MARGIN: f64 = 20.0;

struct Viewport {
    scale: f64,
    ox: f64,
    oy: f64,
    width: f64,
    height: f64,
}

impl Viewport {
    fn new(bbox: [f64; 4]) -> Self {
        let [xmin, ymin, xmax, ymax] = bbox;
        let w = (xmax - xmin).max(1e-12);
        let h = (ymax - ymin).max(1e-12);
        let scale = CANVAS / w.max(h);
        Viewport {
            scale,
            ox: xmin,
            oy: ymin,
            width: w * scale + 2.0 * MARGIN,
            height: h * scale + 2.0 * MARGIN,
        }
    }

    /// World to pixel; the y axis points up in world space, down in SVG.
    fn map(&self, p: [f64; 2]) -> [f64; 2] {
        [
            MARGIN + (p[0] - self.ox) * self.scale,
            self.height - MARGIN - (p[1] - self.oy) * self.scale,
        ]
    }
}

fn fmt_pt(v: [f64; 2]) -> String {
    format!("{:.3},{:.3}", v[0], v[1])
}

/// Ribbon outline: centerline offset left and right by the per-sample
/// half-width along the local normal. Zero-length steps reuse the previous
/// normal.
fn ribbon_path(line: &Hyperstreamline, vp: &Viewport) -> String {
    let pts: Vec<[f64; 2]> = line.samples.iter().map(|s| s.position).collect();
    let n = pts.len();
    let mut normals = Vec::with_capacity(n);
    let mut prev = [0.0, 1.0];
    for k in 0..n {
        let (a, b) = if line.closed {
            (pts[(k + n - 1) % n], pts[(k + 1) % n])
        } else {
            (pts[k.saturating_sub(1)], pts[(k + 1).min(n - 1)])
        };
        let tx = b[0] - a[0];
        let ty = b[1] - a[1];
        let len = (tx * tx + ty * ty).sqrt();
        let nrm = if len > 1e-12 {
            [-ty / len, tx / len]
        } else {
            prev
        };
        prev = nrm;
        normals.push(nrm);
    }
    let offset = |k: usize, sign: f64| -> [f64; 2] {
        let w = line.samples[k].half_width * sign;
        [
            pts[k][0] + normals[k][0] * w,
            pts[k][1] + normals[k][1] * w,
        ]
    };
    let mut d = String::new();
    if line.closed {
        // two concentric loops, even-odd fill
        for sign in [1.0, -1.0] {
            for k in 0..n {
                let p = vp.map(offset(k, sign));
                let cmd = if k == 0 { 'M' } else { 'L' };
                let _ = write!(d, "{cmd}{} ", fmt_pt(p));
            }
            d.push_str("Z ");
        }
    } else {
        for k in 0..n {
            let p = vp.map(offset(k, 1.0));
            let cmd = if k == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{} ", fmt_pt(p));
        }
        for k in (0..n).rev() {
            let p = vp.map(offset(k, -1.0));
            let _ = write!(d, "L{} ", fmt_pt(p));
        }
        d.push('Z');
    }
    d.trim_end().to_string()
}

pub fn svg_to_string(scene: &Scene) -> String {
    let vp = Viewport::new(scene.bbox);
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.3} {:.3}">"#,
        vp.width, vp.height, vp.width, vp.height
    );
    let _ = writeln!(
        out,
        "  <metadata>colormap viridis; lambda_n range {:.16e} {:.16e}</metadata>",
        scene.color_range.0, scene.color_range.1
    );
    let _ = writeln!(
        out,
        r##"  <rect x="0" y="0" width="{:.3}" height="{:.3}" fill="#ffffff"/>"##,
        vp.width, vp.height
    );

    // ribbons, one filled path per streamline, colored by mean lambda_n
    let (lo, hi) = scene.color_range;
    let span = (hi - lo).max(1e-300);
    for line in &scene.streamlines {
        if line.samples.len() < 2 {
            continue;
        }
        let mean: f64 =
            line.samples.iter().map(|s| s.color).sum::<f64>() / line.samples.len() as f64;
        let t = ((mean - lo) / span).clamp(0.0, 1.0);
        let _ = writeln!(
            out,
            r#"  <path d="{}" fill="{}" fill-rule="evenodd" stroke="none"/>"#,
            ribbon_path(line, &vp),
            colormap::hex(t)
        );
    }

    // template overlays as dashed strokes
    for curve in &scene.template.curves {
        if curve.points.len() < 2 {
            continue;
        }
        let mut d = String::new();
        for (k, p) in curve.points.iter().enumerate() {
            let q = vp.map(*p);
            let cmd = if k == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{} ", fmt_pt(q));
        }
        if curve.closed {
            d.push('Z');
        }
        let _ = writeln!(
            out,
            r##"  <path d="{}" fill="none" stroke="#555555" stroke-width="1" stroke-dasharray="6,4"/>"##,
            d.trim_end()
        );
    }

    // defect markers
    for v in &scene.template.graph.vertices {
        let p = vp.map(v.position);
        let _ = writeln!(
            out,
            r##"  <circle cx="{:.3}" cy="{:.3}" r="4" fill="#d62728" stroke="#000000" stroke-width="1"/>"##,
            p[0], p[1]
        );
    }

    let _ = writeln!(out, "</svg>");
    out
}

pub fn write_svg(scene: &Scene, path: &Path) -> Result<()> {
    atomic_write(path, &svg_to_string(scene))
}

/// Minimal well-formedness check used by tests and the CLI self-check:
/// every opened tag is closed, attributes quoted (delegated to the writer),
/// single root element.
pub fn xml_is_well_formed(text: &str) -> bool {
    let mut stack: Vec<String> = Vec::new();
    let mut roots = 0;
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        rest = &rest[start + 1..];
        let Some(end) = rest.find('>') else {
            return false;
        };
        let tag = &rest[..end];
        rest = &rest[end + 1..];
        if tag.starts_with('?') || tag.starts_with('!') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            match stack.pop() {
                Some(open) if open == name.trim() => {
                    if stack.is_empty() {
                        roots += 1;
                    }
                }
                _ => return false,
            }
        } else if tag.ends_with('/') {
            if stack.is_empty() {
                roots += 1;
            }
        } else {
            let name = tag.split_whitespace().next().unwrap_or("").to_string();
            if name.is_empty() {
                return false;
            }
            stack.push(name);
        }
    }
    stack.is_empty() && roots >= 1 && !text.contains("<<")
}
