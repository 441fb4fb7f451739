//! Hyperstreamline tracing: RK2 integration of the major-eigenvector line
//! field with sign continuity, vertex-circle avoidance, and cross-section
//! annotation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::TensorField;
use crate::seeding::{DirectionConstraint, SeedPoint};
use crate::tensor::{eigendecompose, to_modified, westin, AlignmentTensor};

/// Minimum in-plane eigenvector norm; below it the direction is treated as
/// degenerate.
const INPLANE_FLOOR: f64 = 0.1;

/// Direction-agreement cosine required for closed-loop detection.
const LOOP_COS: f64 = 0.9;

/// Anything that yields an alignment tensor at a point. Implemented by
/// `TensorField` (bilinear interpolation) and by analytic fields in tests.
pub trait TensorSampler: Sync {
    fn sample_tensor(&self, p: [f64; 2]) -> Option<AlignmentTensor>;
}

impl TensorSampler for TensorField {
    fn sample_tensor(&self, p: [f64; 2]) -> Option<AlignmentTensor> {
        self.sample(p)
    }
}

#[derive(Clone, Debug)]
pub struct TraceParams {
    /// integration step (arc length per RK2 step)
    pub h: f64,
    pub max_arclength: f64,
    /// degeneracy stop: c_l below this ends the trace
    pub stop_cl: f64,
    /// forbidden disks around template vertices: (center, radius)
    pub vertex_circles: Vec<([f64; 2], f64)>,
    /// closed-loop capture distance (0 disables loop detection)
    pub loop_eps: f64,
}

impl TraceParams {
    /// Defaults tied to the field resolution: step of half a cell, budget of
    /// twice the bounding-box perimeter.
    pub fn for_field(field: &TensorField) -> Self {
        let g = field.grid;
        let h = 0.5 * g.dx.min(g.dy);
        let [xmin, ymin, xmax, ymax] = g.bbox();
        let perimeter = 2.0 * ((xmax - xmin) + (ymax - ymin));
        TraceParams {
            h,
            max_arclength: 2.0 * perimeter,
            stop_cl: 0.05,
            vertex_circles: Vec::new(),
            loop_eps: 0.5 * h,
        }
    }
}

/// One point of a hyperstreamline with its local tensor data.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Sample {
    pub position: [f64; 2],
    /// arc length from the start of the merged polyline
    pub s: f64,
    pub lam_n: f64,
    pub lam_m: f64,
    pub lam_l: f64,
    /// unit in-plane cross-section axis
    pub cross_axis: [f64; 2],
    /// color scalar (major eigenvalue)
    pub color: f64,
    /// ribbon half-width, assigned by `cross_sections`
    pub half_width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationCause {
    DomainExit,
    Degeneracy,
    VertexCircle,
    MaxLength,
    ClosedLoop,
    /// the seed itself was degenerate or outside; the trace is empty
    DegenerateSeed,
}

#[derive(Clone, Debug)]
pub struct Hyperstreamline {
    pub samples: Vec<Sample>,
    pub closed: bool,
    /// cause at the forward end of the polyline
    pub termination: TerminationCause,
    /// cause at the backward end (None for single-direction traces)
    pub termination_back: Option<TerminationCause>,
    pub seed_index: usize,
}

struct Eval {
    dir: [f64; 2],
    lam_n: f64,
    lam_m: f64,
    lam_l: f64,
    cross_axis: [f64; 2],
}

enum EvalResult {
    Ok(Eval),
    OutOfDomain,
    Degenerate,
}

fn evaluate(sampler: &dyn TensorSampler, p: [f64; 2], stop_cl: f64) -> EvalResult {
    let Some(q) = sampler.sample_tensor(p) else {
        return EvalResult::OutOfDomain;
    };
    let Ok(e) = eigendecompose(&to_modified(&q)) else {
        return EvalResult::Degenerate;
    };
    if westin(&e).c_l < stop_cl {
        return EvalResult::Degenerate;
    }
    let nx = e.vec_n[0];
    let ny = e.vec_n[1];
    let nn = (nx * nx + ny * ny).sqrt();
    if nn < INPLANE_FLOOR {
        return EvalResult::Degenerate;
    }
    let dir = [nx / nn, ny / nn];
    // cross axis: in-plane part of the secondary eigenvector, or the
    // tangent normal when that projection vanishes (in-plane uniaxial case)
    let mx = e.vec_m[0];
    let my = e.vec_m[1];
    let mn = (mx * mx + my * my).sqrt();
    let cross_axis = if mn < INPLANE_FLOOR {
        [-dir[1], dir[0]]
    } else {
        [mx / mn, my / mn]
    };
    EvalResult::Ok(Eval {
        dir,
        lam_n: e.lam_n,
        lam_m: e.lam_m,
        lam_l: e.lam_l,
        cross_axis,
    })
}

fn align(dir: [f64; 2], reference: [f64; 2]) -> [f64; 2] {
    if dir[0] * reference[0] + dir[1] * reference[1] < 0.0 {
        [-dir[0], -dir[1]]
    } else {
        dir
    }
}

fn inside_circle(p: [f64; 2], c: [f64; 2], r: f64) -> bool {
    ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() < r - 1e-9
}

fn make_sample(p: [f64; 2], s: f64, e: &Eval) -> Sample {
    Sample {
        position: p,
        s,
        lam_n: e.lam_n,
        lam_m: e.lam_m,
        lam_l: e.lam_l,
        cross_axis: e.cross_axis,
        color: e.lam_n,
        half_width: 0.0,
    }
}

/// First intersection parameter t in (0, 1] of the segment a + t(b-a) with
/// the circle boundary |x - c| = r, entering from outside.
fn circle_entry(a: [f64; 2], b: [f64; 2], c: [f64; 2], r: f64) -> Option<f64> {
    let d = [b[0] - a[0], b[1] - a[1]];
    let f = [a[0] - c[0], a[1] - c[1]];
    let qa = d[0] * d[0] + d[1] * d[1];
    let qb = 2.0 * (f[0] * d[0] + f[1] * d[1]);
    let qc = f[0] * f[0] + f[1] * f[1] - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 || qa == 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)].into_iter().find(|&t| t > 0.0 && t <= 1.0)
}

/// One half-trace from `start` in initial direction `dir0`.
fn trace_half(
    sampler: &dyn TensorSampler,
    start: [f64; 2],
    start_eval: &Eval,
    dir0: [f64; 2],
    p: &TraceParams,
) -> (Vec<Sample>, TerminationCause, bool) {
    let mut samples = vec![make_sample(start, 0.0, start_eval)];
    let mut pos = start;
    let mut dir = dir0;
    let mut s = 0.0;
    loop {
        if s + p.h > p.max_arclength {
            return (samples, TerminationCause::MaxLength, false);
        }
        // RK2 midpoint, both evaluations sign-aligned to the incoming
        // direction (line field)
        let mid = [pos[0] + 0.5 * p.h * dir[0], pos[1] + 0.5 * p.h * dir[1]];
        let d1 = match evaluate(sampler, mid, p.stop_cl) {
            EvalResult::Ok(e) => align(e.dir, dir),
            EvalResult::OutOfDomain => {
                let (clipped, e) = clip_to_domain(sampler, pos, mid, p.stop_cl);
                if let Some(e) = e {
                    let ds = step_len(pos, clipped);
                    if ds > 1e-12 {
                        samples.push(make_sample(clipped, s + ds, &e));
                    }
                }
                return (samples, TerminationCause::DomainExit, false);
            }
            EvalResult::Degenerate => {
                return (samples, TerminationCause::Degeneracy, false);
            }
        };
        let next = [pos[0] + p.h * d1[0], pos[1] + p.h * d1[1]];

        // vertex-circle avoidance: clip the step onto the circle boundary
        for &(c, r) in &p.vertex_circles {
            if inside_circle(next, c, r) {
                if let Some(t) = circle_entry(pos, next, c, r) {
                    let hit = [
                        pos[0] + t * (next[0] - pos[0]),
                        pos[1] + t * (next[1] - pos[1]),
                    ];
                    if let EvalResult::Ok(e) = evaluate(sampler, hit, p.stop_cl) {
                        let ds = step_len(pos, hit);
                        if ds > 1e-12 {
                            samples.push(make_sample(hit, s + ds, &e));
                        }
                    }
                }
                return (samples, TerminationCause::VertexCircle, false);
            }
        }

        match evaluate(sampler, next, p.stop_cl) {
            EvalResult::Ok(e) => {
                let new_dir = align(e.dir, d1);
                s += p.h;
                samples.push(make_sample(next, s, &e));
                // closed-loop capture once the trace is under way
                if p.loop_eps > 0.0 && s > 3.0 * p.h {
                    let back = step_len(next, start);
                    let cosv = new_dir[0] * dir0[0] + new_dir[1] * dir0[1];
                    if back < p.loop_eps && cosv > LOOP_COS {
                        return (samples, TerminationCause::ClosedLoop, true);
                    }
                }
                pos = next;
                dir = new_dir;
            }
            EvalResult::OutOfDomain => {
                let (clipped, e) = clip_to_domain(sampler, pos, next, p.stop_cl);
                if let Some(e) = e {
                    let ds = step_len(pos, clipped);
                    if ds > 1e-12 {
                        samples.push(make_sample(clipped, s + ds, &e));
                    }
                }
                return (samples, TerminationCause::DomainExit, false);
            }
            EvalResult::Degenerate => {
                let (clipped, e) = clip_to_degeneracy(sampler, pos, next, p.stop_cl);
                if let Some(e) = e {
                    let ds = step_len(pos, clipped);
                    if ds > 1e-12 {
                        samples.push(make_sample(clipped, s + ds, &e));
                    }
                }
                return (samples, TerminationCause::Degeneracy, false);
            }
        }
    }
}

fn step_len(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Bisect the segment a (evaluable) .. b (not) to the last evaluable point.
fn clip_to_domain(
    sampler: &dyn TensorSampler,
    a: [f64; 2],
    b: [f64; 2],
    stop_cl: f64,
) -> ([f64; 2], Option<Eval>) {
    bisect_last_good(a, b, |p| sampler.sample_tensor(p).is_some(), sampler, stop_cl)
}

fn clip_to_degeneracy(
    sampler: &dyn TensorSampler,
    a: [f64; 2],
    b: [f64; 2],
    stop_cl: f64,
) -> ([f64; 2], Option<Eval>) {
    bisect_last_good(
        a,
        b,
        |p| matches!(evaluate(sampler, p, stop_cl), EvalResult::Ok(_)),
        sampler,
        stop_cl,
    )
}

fn bisect_last_good(
    a: [f64; 2],
    b: [f64; 2],
    good: impl Fn([f64; 2]) -> bool,
    sampler: &dyn TensorSampler,
    stop_cl: f64,
) -> ([f64; 2], Option<Eval>) {
    let mut lo = a;
    let mut hi = b;
    for _ in 0..50 {
        let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        if good(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    match evaluate(sampler, lo, stop_cl) {
        EvalResult::Ok(e) => (lo, Some(e)),
        _ => (lo, None),
    }
}

/// Trace the hyperstreamline through one seed. A degenerate or unsampleable
/// seed yields an empty streamline tagged `DegenerateSeed`.
pub fn trace(sampler: &dyn TensorSampler, seed: &SeedPoint, p: &TraceParams) -> Hyperstreamline {
    let EvalResult::Ok(e0) = evaluate(sampler, seed.position, p.stop_cl) else {
        return Hyperstreamline {
            samples: Vec::new(),
            closed: false,
            termination: TerminationCause::DegenerateSeed,
            termination_back: None,
            seed_index: 0,
        };
    };

    match seed.constraint {
        DirectionConstraint::Outward { center } => {
            let out = [
                seed.position[0] - center[0],
                seed.position[1] - center[1],
            ];
            let dir0 = align(e0.dir, out);
            let (samples, cause, closed) = trace_half(sampler, seed.position, &e0, dir0, p);
            Hyperstreamline {
                samples,
                closed,
                termination: cause,
                termination_back: None,
                seed_index: 0,
            }
        }
        DirectionConstraint::Both => {
            let dir0 = e0.dir;
            let (fwd, fwd_cause, fwd_closed) = trace_half(sampler, seed.position, &e0, dir0, p);
            if fwd_closed {
                return Hyperstreamline {
                    samples: fwd,
                    closed: true,
                    termination: fwd_cause,
                    termination_back: None,
                    seed_index: 0,
                };
            }
            let (bwd, bwd_cause, _) =
                trace_half(sampler, seed.position, &e0, [-dir0[0], -dir0[1]], p);
            // merge: backward half reversed, seed sample shared once
            let back_len = bwd.last().map_or(0.0, |q| q.s);
            let mut samples: Vec<Sample> = bwd
                .into_iter()
                .rev()
                .map(|mut q| {
                    q.s = back_len - q.s;
                    q
                })
                .collect();
            samples.extend(fwd.into_iter().skip(1).map(|mut q| {
                q.s += back_len;
                q
            }));
            Hyperstreamline {
                samples,
                closed: false,
                termination: fwd_cause,
                termination_back: Some(bwd_cause),
                seed_index: 0,
            }
        }
    }
}

/// Trace every seed; output order follows seed order independently of the
/// parallel schedule.
pub fn trace_all(
    sampler: &(dyn TensorSampler + Sync),
    seeds: &[SeedPoint],
    p: &TraceParams,
) -> Vec<Hyperstreamline> {
    seeds
        .par_iter()
        .enumerate()
        .map(|(i, seed)| {
            let mut line = trace(sampler, seed, p);
            line.seed_index = i;
            line
        })
        .collect()
}

/// Assign per-sample ribbon half-widths: half_width = width_scale * lam_m.
pub fn cross_sections(line: &mut Hyperstreamline, width_scale: f64) {
    for q in &mut line.samples {
        q.half_width = width_scale * q.lam_m;
    }
}

/// Width scale such that the widest ribbon over the scene has full width
/// 0.6 * ls.
pub fn scene_width_scale(lines: &[Hyperstreamline], ls: f64) -> f64 {
    let max_lam_m = lines
        .iter()
        .flat_map(|l| l.samples.iter())
        .map(|q| q.lam_m.abs())
        .fold(0.0f64, f64::max);
    if max_lam_m <= 0.0 {
        return 0.0;
    }
    0.3 * ls / max_lam_m
}
