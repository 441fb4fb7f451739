//! Output stage: scene assembly and the SVG, polydata, and text formats.

pub mod colormap;
pub mod io;
pub mod polydata;
pub mod svg;

use crate::integrator::Hyperstreamline;
use crate::seeding::SeedPoint;
use crate::topology::TopologicalTemplate;

/// Everything needed to draw one figure.
pub struct Scene {
    pub streamlines: Vec<Hyperstreamline>,
    pub template: TopologicalTemplate,
    pub seeds: Vec<SeedPoint>,
    /// world bounding box [xmin, ymin, xmax, ymax]
    pub bbox: [f64; 4],
    /// observed lambda_n range used for coloring
    pub color_range: (f64, f64),
}

impl Scene {
    /// Color range from the observed major eigenvalues; falls back to (0, 1)
    /// for an empty scene.
    pub fn observed_color_range(lines: &[Hyperstreamline]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for q in lines.iter().flat_map(|l| l.samples.iter()) {
            lo = lo.min(q.lam_n);
            hi = hi.max(q.lam_n);
        }
        if lo > hi {
            (0.0, 1.0)
        } else {
            (lo, hi)
        }
    }
}
