//! End-to-end pipeline stages shared by the CLI and the test suites:
//! scenario generation, template extraction + seeding, and tracing into a
//! renderable scene.

use crate::field::{circle_mask, GridSpec, TensorField};
use crate::field_gen::{
    ansatz_field, random_field, relax, Anchoring, DefectSpec, MaterialParams, RelaxReport,
};
use crate::integrator::{cross_sections, scene_width_scale, trace_all, TraceParams};
use crate::render::Scene;
use crate::seeding::{seed_template, SeedPoint, SeedingParams};
use crate::topology::{
    build_graph, build_template, detect_defects, TopologicalTemplate, DEFAULT_CP_THRESHOLD,
};
use crate::{Error, Result};
use std::f64::consts::FRAC_PI_4;

/// Built-in test scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenCase {
    /// Uniform director in a circular domain of diameter 1.
    UniformCircle,
    /// Two +1/2 defects in a circular domain, relaxed under tangential
    /// anchoring.
    TwoDefectCircle,
    /// Random initial state on the unit square, relaxed with free boundaries.
    ManyDefectSquare,
}

impl GenCase {
    /// Default nematic coherence length for the scenario.
    pub fn default_ln(self) -> f64 {
        match self {
            GenCase::UniformCircle | GenCase::TwoDefectCircle => 0.02,
            GenCase::ManyDefectSquare => 0.008,
        }
    }

    /// Default relaxation step count for the scenario.
    pub fn default_steps(self) -> usize {
        match self {
            GenCase::UniformCircle => 0,
            GenCase::TwoDefectCircle => 200,
            GenCase::ManyDefectSquare => 1200,
        }
    }
}

/// Parameters for [`generate`]. `ln`, `steps`, and `prng_seed` fall back to
/// per-case defaults when `None`.
#[derive(Clone, Copy, Debug)]
pub struct GenParams {
    pub case: GenCase,
    pub nx: usize,
    pub ny: usize,
    pub ln: Option<f64>,
    pub steps: Option<usize>,
    pub prng_seed: Option<u64>,
}

/// Coarse-lattice resolution of the random initial state; fixed so the same
/// PRNG seed describes the same continuum field at every grid resolution.
pub const RANDOM_COARSE_LATTICE: usize = 12;

/// Default PRNG seed for the many-defect scenario.
pub const DEFAULT_PRNG_SEED: u64 = 7;

/// Build one of the test fields. Returns the field plus the relaxation
/// report when the scenario relaxes.
pub fn generate(p: &GenParams) -> Result<(TensorField, Option<RelaxReport>)> {
    let ln = p.ln.unwrap_or(p.case.default_ln());
    let steps = p.steps.unwrap_or(p.case.default_steps());
    let params = MaterialParams::nematic_with_ln(ln);
    let grid = GridSpec {
        nx: p.nx,
        ny: p.ny,
        dx: 1.0 / (p.nx.max(2) - 1) as f64,
        dy: 1.0 / (p.ny.max(2) - 1) as f64,
        ox: 0.0,
        oy: 0.0,
    };
    grid.validate()?;
    match p.case {
        GenCase::UniformCircle => {
            let field = ansatz_field(grid, circle_mask([0.5, 0.5], 0.5), &[], &params)?;
            if steps == 0 {
                return Ok((field, None));
            }
            let (relaxed, report) = relax(&field, &params, &Anchoring::Free, steps, None)?;
            Ok((relaxed, Some(report)))
        }
        GenCase::TwoDefectCircle => {
            let defects = [
                DefectSpec {
                    center: [0.35, 0.5],
                    charge: 0.5,
                    phase: FRAC_PI_4,
                },
                DefectSpec {
                    center: [0.65, 0.5],
                    charge: 0.5,
                    phase: FRAC_PI_4,
                },
            ];
            let field = ansatz_field(grid, circle_mask([0.5, 0.5], 0.5), &defects, &params)?;
            let anchoring = Anchoring::Tangential { center: [0.5, 0.5] };
            let (relaxed, report) = relax(&field, &params, &anchoring, steps, None)?;
            Ok((relaxed, Some(report)))
        }
        GenCase::ManyDefectSquare => {
            let seed = p.prng_seed.unwrap_or(DEFAULT_PRNG_SEED);
            let field = random_field(grid, |_| true, &params, seed, RANDOM_COARSE_LATTICE)?;
            let (relaxed, mut report) = relax(&field, &params, &Anchoring::Free, steps, None)?;
            report.prng_seed = Some(seed);
            Ok((relaxed, Some(report)))
        }
    }
}

/// User-facing pipeline parameters: the target spacing plus optional
/// overrides of the derived defaults.
#[derive(Clone, Copy, Debug)]
pub struct PipelineParams {
    /// target hyperstreamline spacing l_s
    pub ls: f64,
    /// defaults to 1.25 * ls (2.5 coherence lengths at the recommended
    /// ls = 2 coherence lengths)
    pub vertex_radius: Option<f64>,
    /// circle-to-edge spacing ratio, defaults to 2
    pub ratio: Option<f64>,
    /// planar-anisotropy detection threshold
    pub cp_threshold: Option<f64>,
    /// integration step, defaults to half a grid cell
    pub step: Option<f64>,
    /// degeneracy stop on c_l, defaults to 0.05
    pub stop_cl: Option<f64>,
}

impl PipelineParams {
    pub fn new(ls: f64) -> Self {
        PipelineParams {
            ls,
            vertex_radius: None,
            ratio: None,
            cp_threshold: None,
            step: None,
            stop_cl: None,
        }
    }

    pub fn vertex_radius(&self) -> f64 {
        self.vertex_radius.unwrap_or(1.25 * self.ls)
    }

    pub fn ratio(&self) -> f64 {
        self.ratio.unwrap_or(2.0)
    }

    pub fn cp_threshold(&self) -> f64 {
        self.cp_threshold.unwrap_or(DEFAULT_CP_THRESHOLD)
    }
}

/// Detect defects, build the topological template, and place seeds.
/// The seeding parameters used are recorded in the template for the trace
/// stage.
pub fn seed_stage(
    field: &TensorField,
    p: &PipelineParams,
) -> Result<(TopologicalTemplate, Vec<SeedPoint>)> {
    if !(p.ls > 0.0 && p.ls.is_finite()) {
        return Err(Error::InvalidParams("ls must be positive".into()));
    }
    let sites = detect_defects(field, p.cp_threshold())?;
    let graph = build_graph(&sites);
    let mut template = build_template(field, &graph, p.vertex_radius())?;
    let seeding = SeedingParams {
        ls: p.ls,
        vertex_radius: p.vertex_radius(),
        ratio: p.ratio(),
    };
    let seeds = seed_template(&template, field, &seeding)?;
    template.params.ls = Some(p.ls);
    template.params.ratio = Some(seeding.ratio);
    Ok((template, seeds))
}

/// Trace every seed and assemble the scene. `ls` is taken from the template
/// when recorded there, falling back to `p.ls`.
pub fn trace_stage(
    field: &TensorField,
    template: &TopologicalTemplate,
    seeds: &[SeedPoint],
    p: &PipelineParams,
) -> Result<Scene> {
    let ls = template.params.ls.unwrap_or(p.ls);
    if !(ls > 0.0 && ls.is_finite()) {
        return Err(Error::InvalidParams("ls must be positive".into()));
    }
    let mut tp = TraceParams::for_field(field);
    if let Some(h) = p.step {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParams("step must be positive".into()));
        }
        tp.h = h;
        tp.loop_eps = 0.5 * h;
    }
    if let Some(cl) = p.stop_cl {
        if !(cl >= 0.0 && cl.is_finite()) {
            return Err(Error::InvalidParams("stop-cl must be >= 0".into()));
        }
        tp.stop_cl = cl;
    }
    tp.vertex_circles = template
        .graph
        .vertices
        .iter()
        .map(|v| (v.position, template.params.vertex_radius))
        .collect();
    let mut lines = trace_all(field, seeds, &tp);
    let width_scale = scene_width_scale(&lines, ls);
    for line in &mut lines {
        cross_sections(line, width_scale);
    }
    let color_range = Scene::observed_color_range(&lines);
    Ok(Scene {
        streamlines: lines,
        template: template.clone(),
        seeds: seeds.to_vec(),
        bbox: field.grid.bbox(),
        color_range,
    })
}

/// Full pipeline: seed stage followed by trace stage. Byte-identical to
/// running the stages separately through the serialized template.
pub fn run_pipeline(field: &TensorField, p: &PipelineParams) -> Result<Scene> {
    let (template, seeds) = seed_stage(field, p)?;
    trace_stage(field, &template, &seeds, p)
}
