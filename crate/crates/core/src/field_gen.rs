//! Test-field generation: analytic defect ansatz fields and Landau-de Gennes
//! gradient-flow relaxation.
//!
//! The free energy density is
//! `f = a/2 (Q:Q) - b/3 tr(Q^3) + c/4 (Q:Q)^2 + L1/2 |grad Q|^2`
//! and relaxation integrates `dQ/dt = -gamma * dF/dQ` with explicit Euler,
//! where the functional derivative is
//! `dF/dQ = a Q - b (Q.Q - (Q:Q) delta/3) + c (Q:Q) Q - L1 lap Q`,
//! projected symmetric-traceless.
//!
//! The elastic energy is accumulated over grid edges, which makes the
//! discrete functional derivative the exact gradient of the discrete energy;
//! the energy trace is then non-increasing to round-off for any stable step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{GridSpec, TensorField};
use crate::tensor::AlignmentTensor;
use crate::{Error, Result};

/// Landau-de Gennes material constants plus the kinetic coefficient.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MaterialParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub l1: f64,
    pub gamma: f64,
}

impl MaterialParams {
    /// Nondimensional defaults with the nematic phase stable; `l1` is chosen
    /// from the requested coherence length l_n = sqrt(L1/|a|).
    pub fn nematic_with_ln(ln: f64) -> Self {
        let a = -1.0;
        MaterialParams {
            a,
            b: 3.0,
            c: 1.0,
            l1: ln * ln * a.abs(),
            gamma: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !(self.l1 > 0.0) || !(self.gamma > 0.0) {
            return Err(Error::InvalidParams(
                "material params require c > 0, l1 > 0, gamma > 0".into(),
            ));
        }
        Ok(())
    }

    /// Nematic coherence length l_n = sqrt(L1/|a|).
    pub fn ln(&self) -> f64 {
        (self.l1 / self.a.abs()).sqrt()
    }
}

/// A point disclination used to build ansatz fields.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DefectSpec {
    pub center: [f64; 2],
    /// +1/2 or -1/2.
    pub charge: f64,
    pub phase: f64,
}

impl DefectSpec {
    pub fn validate(&self) -> Result<()> {
        if (self.charge - 0.5).abs() > 1e-12 && (self.charge + 0.5).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "defect charge must be +1/2 or -1/2, got {}",
                self.charge
            )));
        }
        Ok(())
    }
}

/// How boundary nodes are treated during relaxation.
#[derive(Clone, Copy, Debug)]
pub enum Anchoring {
    /// Zero-Neumann: boundary nodes evolve with mirrored ghost values.
    Free,
    /// Boundary director fixed at a constant in-plane angle.
    FixedUniform { angle: f64 },
    /// Boundary director fixed tangential to circles around `center`.
    Tangential { center: [f64; 2] },
}

/// Record of one relaxation run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelaxReport {
    pub steps: usize,
    pub dt: f64,
    /// Total free energy sampled at step 0, every 50 steps, and at the end.
    pub energies: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prng_seed: Option<u64>,
}

/// Interval between energy checkpoints during relaxation.
pub const ENERGY_CHECKPOINT_INTERVAL: usize = 50;

/// Equilibrium uniaxial order parameter minimizing the bulk free energy,
/// S_eq = (b + sqrt(b^2 - 24ac)) / (4c).
pub fn bulk_equilibrium_order(params: &MaterialParams) -> Result<f64> {
    params.validate()?;
    let disc = params.b * params.b - 24.0 * params.a * params.c;
    if disc < 0.0 {
        return Err(Error::NoNematicMinimum);
    }
    let s = (params.b + disc.sqrt()) / (4.0 * params.c);
    Ok(s.max(0.0))
}

/// Bulk free energy density of a uniaxial state with order parameter S.
pub fn bulk_density_uniaxial(params: &MaterialParams, s: f64) -> f64 {
    params.a * s * s / 3.0 - 2.0 * params.b * s.powi(3) / 27.0 + params.c * s.powi(4) / 9.0
}

/// Uniaxial in-plane ansatz field with the director winding around the given
/// defects: psi(p) = sum_k charge_k atan2(y - y_k, x - x_k) + phase_k, and
/// order S(p) = S_eq (1 - exp(-r_min / l_n)).
pub fn ansatz_field(
    grid: GridSpec,
    mask: impl Fn([f64; 2]) -> bool,
    defects: &[DefectSpec],
    params: &MaterialParams,
) -> Result<TensorField> {
    grid.validate()?;
    for d in defects {
        d.validate()?;
        if !mask(d.center) {
            return Err(Error::InvalidParams(format!(
                "defect center ({}, {}) is outside the domain",
                d.center[0], d.center[1]
            )));
        }
    }
    let min_sep = 2.0 * grid.dx.max(grid.dy);
    for (i, a) in defects.iter().enumerate() {
        for b in &defects[i + 1..] {
            let dist = ((a.center[0] - b.center[0]).powi(2)
                + (a.center[1] - b.center[1]).powi(2))
            .sqrt();
            if dist < min_sep {
                return Err(Error::DefectsTooClose);
            }
        }
    }
    let s_eq = bulk_equilibrium_order(params)?;
    let ln = params.ln();
    TensorField::from_fn(grid, mask, |p| {
        let mut psi = 0.0;
        let mut r_min = f64::INFINITY;
        for d in defects {
            let dx = p[0] - d.center[0];
            let dy = p[1] - d.center[1];
            psi += d.charge * dy.atan2(dx) + d.phase;
            r_min = r_min.min((dx * dx + dy * dy).sqrt());
        }
        let s = if defects.is_empty() {
            s_eq
        } else {
            s_eq * (1.0 - (-r_min / ln).exp())
        };
        AlignmentTensor::uniaxial_in_plane(s, psi)
    })
}

/// Random initial condition for the many-defect scenario. Random directors
/// with S = 0.2 S_eq are drawn on a fixed coarse lattice and interpolated to
/// the grid, so the same seed describes the same continuum field at every
/// resolution.
pub fn random_field(
    grid: GridSpec,
    mask: impl Fn([f64; 2]) -> bool,
    params: &MaterialParams,
    seed: u64,
    coarse: usize,
) -> Result<TensorField> {
    grid.validate()?;
    if coarse < 2 {
        return Err(Error::InvalidParams("coarse lattice must be >= 2".into()));
    }
    let s_eq = bulk_equilibrium_order(params)?;
    let s0 = 0.2 * s_eq;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = coarse;
    let mut coarse_q = Vec::with_capacity((m + 1) * (m + 1));
    for _ in 0..(m + 1) * (m + 1) {
        let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
        coarse_q.push(AlignmentTensor::uniaxial_in_plane(s0, angle));
    }
    let [xmin, ymin, xmax, ymax] = grid.bbox();
    let wx = xmax - xmin;
    let wy = ymax - ymin;
    TensorField::from_fn(grid, mask, |p| {
        let fx = ((p[0] - xmin) / wx * m as f64).clamp(0.0, m as f64);
        let fy = ((p[1] - ymin) / wy * m as f64).clamp(0.0, m as f64);
        let i0 = (fx.floor() as usize).min(m - 1);
        let j0 = (fy.floor() as usize).min(m - 1);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let at = |i: usize, j: usize| &coarse_q[j * (m + 1) + i];
        at(i0, j0)
            .scale((1.0 - tx) * (1.0 - ty))
            .add(&at(i0 + 1, j0).scale(tx * (1.0 - ty)))
            .add(&at(i0, j0 + 1).scale((1.0 - tx) * ty))
            .add(&at(i0 + 1, j0 + 1).scale(tx * ty))
    })
}

/// Largest stable explicit-Euler step: the diffusive bound
/// 0.2 min(dx,dy)^2 / (gamma L1) capped by a bulk-stiffness bound.
pub fn stable_dt(grid: &GridSpec, params: &MaterialParams) -> f64 {
    let h = grid.dx.min(grid.dy);
    let diffusive = 0.2 * h * h / (params.gamma * params.l1);
    let s = bulk_equilibrium_order(params).unwrap_or(1.0).max(1.0);
    let stiffness = params.a.abs() + 2.0 * params.b.abs() * s + 3.0 * params.c * s * s;
    let bulk = 0.4 / (params.gamma * stiffness);
    diffusive.min(bulk)
}

#[derive(Clone, Copy, PartialEq)]
enum NodeKind {
    Outside,
    Anchored,
    FreeBoundary,
    Interior,
}

fn classify_nodes(field: &TensorField, anchoring: &Anchoring) -> Vec<NodeKind> {
    let g = &field.grid;
    let mut kinds = vec![NodeKind::Outside; g.nx * g.ny];
    for j in 0..g.ny {
        for i in 0..g.nx {
            if !field.mask_at(i, j) {
                continue;
            }
            let at_border = i == 0
                || j == 0
                || i == g.nx - 1
                || j == g.ny - 1
                || !field.mask_at(i - 1, j)
                || !field.mask_at(i + 1, j)
                || !field.mask_at(i, j - 1)
                || !field.mask_at(i, j + 1);
            kinds[j * g.nx + i] = if at_border {
                match anchoring {
                    Anchoring::Free => NodeKind::FreeBoundary,
                    _ => NodeKind::Anchored,
                }
            } else {
                NodeKind::Interior
            };
        }
    }
    kinds
}

/// Anchored boundary value at position p, or None for free anchoring.
fn anchor_tensor(anchoring: &Anchoring, p: [f64; 2], s_eq: f64) -> Option<AlignmentTensor> {
    match anchoring {
        Anchoring::Free => None,
        Anchoring::FixedUniform { angle } => Some(AlignmentTensor::uniaxial_in_plane(s_eq, *angle)),
        Anchoring::Tangential { center } => {
            let angle = (p[1] - center[1]).atan2(p[0] - center[0]) + std::f64::consts::FRAC_PI_2;
            Some(AlignmentTensor::uniaxial_in_plane(s_eq, angle))
        }
    }
}

/// Functional derivative dF/dQ of the discrete free energy, one tensor per
/// node (zero at out-of-domain and anchored nodes are still computed but
/// unused by the stepper). Missing neighbors drop out of the Laplacian,
/// which is the zero-Neumann stencil.
pub fn functional_derivative(
    field: &TensorField,
    params: &MaterialParams,
) -> Vec<AlignmentTensor> {
    let g = field.grid;
    let inv_dx2 = 1.0 / (g.dx * g.dx);
    let inv_dy2 = 1.0 / (g.dy * g.dy);
    let mut out = vec![AlignmentTensor::ZERO; g.nx * g.ny];
    out.par_chunks_mut(g.nx)
        .enumerate()
        .for_each(|(j, row)| {
            for (i, slot) in row.iter_mut().enumerate() {
                if !field.mask_at(i, j) {
                    continue;
                }
                let q = field.tensor_at(i, j);
                let qq = q.dot();
                let m = q.to_matrix();
                // Q.Q upper triangle
                let q2 = |r: usize, c: usize| {
                    m[r][0] * m[0][c] + m[r][1] * m[1][c] + m[r][2] * m[2][c]
                };
                let mut lap = AlignmentTensor::ZERO;
                let mut add_nbr = |ii: usize, jj: usize, w: f64| {
                    if field.mask_at(ii, jj) {
                        lap = lap.add(&field.tensor_at(ii, jj).sub(q).scale(w));
                    }
                };
                if i > 0 {
                    add_nbr(i - 1, j, inv_dx2);
                }
                if i + 1 < g.nx {
                    add_nbr(i + 1, j, inv_dx2);
                }
                if j > 0 {
                    add_nbr(i, j - 1, inv_dy2);
                }
                if j + 1 < g.ny {
                    add_nbr(i, j + 1, inv_dy2);
                }
                let bulk = |qc: f64, q2c: f64, diag: bool| {
                    let traceless = if diag { qq / 3.0 } else { 0.0 };
                    params.a * qc - params.b * (q2c - traceless) + params.c * qq * qc
                };
                *slot = AlignmentTensor {
                    qxx: bulk(q.qxx, q2(0, 0), true) - params.l1 * lap.qxx,
                    qxy: bulk(q.qxy, q2(0, 1), false) - params.l1 * lap.qxy,
                    qxz: bulk(q.qxz, q2(0, 2), false) - params.l1 * lap.qxz,
                    qyy: bulk(q.qyy, q2(1, 1), true) - params.l1 * lap.qyy,
                    qyz: bulk(q.qyz, q2(1, 2), false) - params.l1 * lap.qyz,
                };
            }
        });
    out
}

/// Discrete total free energy: bulk terms summed per node, elastic term
/// summed per in-mask grid edge, times the cell area.
pub fn total_free_energy(field: &TensorField, params: &MaterialParams) -> f64 {
    let g = field.grid;
    let area = g.dx * g.dy;
    let row_sums: Vec<f64> = (0..g.ny)
        .into_par_iter()
        .map(|j| {
            let mut acc = 0.0;
            for i in 0..g.nx {
                if !field.mask_at(i, j) {
                    continue;
                }
                let q = field.tensor_at(i, j);
                let qq = q.dot();
                let m = q.to_matrix();
                let mut tr_q3 = 0.0;
                for r in 0..3 {
                    for c in 0..3 {
                        let q2rc = m[r][0] * m[0][c] + m[r][1] * m[1][c] + m[r][2] * m[2][c];
                        tr_q3 += q2rc * m[c][r];
                    }
                }
                acc += 0.5 * params.a * qq - params.b / 3.0 * tr_q3
                    + 0.25 * params.c * qq * qq;
                // elastic contributions of the +x and +y edges
                let grad_sq = |qa: &AlignmentTensor, qb: &AlignmentTensor, h: f64| {
                    let d = qb.sub(qa);
                    let dzz = d.qzz();
                    (d.qxx * d.qxx
                        + d.qyy * d.qyy
                        + dzz * dzz
                        + 2.0 * (d.qxy * d.qxy + d.qxz * d.qxz + d.qyz * d.qyz))
                        / (h * h)
                };
                if i + 1 < g.nx && field.mask_at(i + 1, j) {
                    acc += 0.5 * params.l1 * grad_sq(q, field.tensor_at(i + 1, j), g.dx);
                }
                if j + 1 < g.ny && field.mask_at(i, j + 1) {
                    acc += 0.5 * params.l1 * grad_sq(q, field.tensor_at(i, j + 1), g.dy);
                }
            }
            acc
        })
        .collect();
    row_sums.iter().sum::<f64>() * area
}

/// Explicit-Euler gradient flow. Boundary nodes are overwritten with the
/// anchoring value at the start and held fixed (free anchoring evolves them
/// with the zero-Neumann stencil). Energy is recorded at step 0, every 50
/// steps, and at the end.
pub fn relax(
    field: &TensorField,
    params: &MaterialParams,
    anchoring: &Anchoring,
    steps: usize,
    dt: Option<f64>,
) -> Result<(TensorField, RelaxReport)> {
    params.validate()?;
    let bound = stable_dt(&field.grid, params);
    let dt = dt.unwrap_or(bound);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-9) {
        return Err(Error::InvalidParams(format!(
            "dt = {dt} exceeds the stability bound {bound}"
        )));
    }
    let s_eq = bulk_equilibrium_order(params).unwrap_or(0.0);
    let kinds = classify_nodes(field, anchoring);
    let g = field.grid;

    let mut current = field.clone();
    // apply anchoring
    {
        let tensors = current.tensors_mut();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = j * g.nx + i;
                if kinds[k] == NodeKind::Anchored {
                    if let Some(q) = anchor_tensor(anchoring, g.node_pos(i, j), s_eq) {
                        tensors[k] = q;
                    }
                }
            }
        }
    }

    let mut energies = Vec::new();
    let record = |f: &TensorField, step: usize, energies: &mut Vec<f64>| -> Result<()> {
        if f.tensors().iter().any(|q| !q.is_finite()) {
            return Err(Error::Divergence { step });
        }
        energies.push(total_free_energy(f, params));
        Ok(())
    };
    record(&current, 0, &mut energies)?;

    for step in 1..=steps {
        let grad = functional_derivative(&current, params);
        let mut next = current.clone();
        let scale = dt * params.gamma;
        next.tensors_mut()
            .par_chunks_mut(g.nx)
            .enumerate()
            .for_each(|(j, row)| {
                for (i, q) in row.iter_mut().enumerate() {
                    let k = j * g.nx + i;
                    match kinds[k] {
                        NodeKind::Interior | NodeKind::FreeBoundary => {
                            *q = q.sub(&grad[k].scale(scale));
                        }
                        _ => {}
                    }
                }
            });
        current = next;
        if step % ENERGY_CHECKPOINT_INTERVAL == 0 || step == steps {
            record(&current, step, &mut energies)?;
        }
    }

    Ok((
        current,
        RelaxReport {
            steps,
            dt,
            energies,
            prng_seed: None,
        },
    ))
}

/// Winding number oracle: accumulates director-angle increments along a
/// closed polygonal loop, matching each step into (-pi/2, pi/2] to respect
/// the n = -n line-field symmetry. Returns the total rotation over 2 pi
/// (+-1/2 around a single half-charge defect). None if the director is
/// unreadable anywhere on the loop.
pub fn director_winding(field: &TensorField, loop_points: &[[f64; 2]]) -> Option<f64> {
    use crate::tensor::{eigendecompose, to_modified};
    let mut angles = Vec::with_capacity(loop_points.len());
    for p in loop_points {
        let q = field.sample(*p)?;
        let e = eigendecompose(&to_modified(&q)).ok()?;
        let n = e.vec_n;
        let norm = (n[0] * n[0] + n[1] * n[1]).sqrt();
        if norm < 1e-6 {
            return None;
        }
        angles.push(n[1].atan2(n[0]));
    }
    let mut total = 0.0;
    for k in 0..angles.len() {
        let a = angles[k];
        let b = angles[(k + 1) % angles.len()];
        let mut d = b - a;
        while d > std::f64::consts::FRAC_PI_2 {
            d -= std::f64::consts::PI;
        }
        while d <= -std::f64::consts::FRAC_PI_2 {
            d += std::f64::consts::PI;
        }
        total += d;
    }
    Some(total / (2.0 * std::f64::consts::PI))
}

/// n points on a circle, closed implicitly.
pub fn circle_loop(center: [f64; 2], radius: f64, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect()
}
