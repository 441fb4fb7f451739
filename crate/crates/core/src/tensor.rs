//! Alignment tensor algebra: the traceless symmetric tensor Q, its
//! non-negative counterpart D = Q + delta/3, Jacobi eigendecomposition and
//! Westin anisotropy metrics.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Maximum number of Jacobi sweeps before giving up on a 3x3 matrix.
const JACOBI_MAX_SWEEPS: usize = 50;
/// Off-diagonal Frobenius norm below which the Jacobi iteration stops.
const JACOBI_OFFDIAG_TOL: f64 = 1e-14;

/// Symmetric traceless alignment tensor Q. Only the upper triangle is stored;
/// `qzz` is always `-qxx - qyy`, so the trace is zero by construction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlignmentTensor {
    pub qxx: f64,
    pub qxy: f64,
    pub qxz: f64,
    pub qyy: f64,
    pub qyz: f64,
}

impl AlignmentTensor {
    pub const ZERO: AlignmentTensor = AlignmentTensor {
        qxx: 0.0,
        qxy: 0.0,
        qxz: 0.0,
        qyy: 0.0,
        qyz: 0.0,
    };

    pub fn new(qxx: f64, qxy: f64, qxz: f64, qyy: f64, qyz: f64) -> Self {
        Self {
            qxx,
            qxy,
            qxz,
            qyy,
            qyz,
        }
    }

    /// The derived zz component.
    #[inline]
    pub fn qzz(&self) -> f64 {
        -self.qxx - self.qyy
    }

    /// Uniaxial tensor S (dd - delta/3) for a unit director d.
    pub fn uniaxial(s: f64, d: [f64; 3]) -> Self {
        Self {
            qxx: s * (d[0] * d[0] - 1.0 / 3.0),
            qxy: s * d[0] * d[1],
            qxz: s * d[0] * d[2],
            qyy: s * (d[1] * d[1] - 1.0 / 3.0),
            qyz: s * d[1] * d[2],
        }
    }

    /// Uniaxial tensor with an in-plane director at the given angle.
    pub fn uniaxial_in_plane(s: f64, angle: f64) -> Self {
        Self::uniaxial(s, [angle.cos(), angle.sin(), 0.0])
    }

    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.qxx, self.qxy, self.qxz],
            [self.qxy, self.qyy, self.qyz],
            [self.qxz, self.qyz, self.qzz()],
        ]
    }

    /// Full double contraction Q : Q.
    #[inline]
    pub fn dot(&self) -> f64 {
        let zz = self.qzz();
        self.qxx * self.qxx
            + self.qyy * self.qyy
            + zz * zz
            + 2.0 * (self.qxy * self.qxy + self.qxz * self.qxz + self.qyz * self.qyz)
    }

    #[inline]
    pub fn add(&self, o: &AlignmentTensor) -> AlignmentTensor {
        AlignmentTensor {
            qxx: self.qxx + o.qxx,
            qxy: self.qxy + o.qxy,
            qxz: self.qxz + o.qxz,
            qyy: self.qyy + o.qyy,
            qyz: self.qyz + o.qyz,
        }
    }

    #[inline]
    pub fn sub(&self, o: &AlignmentTensor) -> AlignmentTensor {
        AlignmentTensor {
            qxx: self.qxx - o.qxx,
            qxy: self.qxy - o.qxy,
            qxz: self.qxz - o.qxz,
            qyy: self.qyy - o.qyy,
            qyz: self.qyz - o.qyz,
        }
    }

    #[inline]
    pub fn scale(&self, c: f64) -> AlignmentTensor {
        AlignmentTensor {
            qxx: c * self.qxx,
            qxy: c * self.qxy,
            qxz: c * self.qxz,
            qyy: c * self.qyy,
            qyz: c * self.qyz,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.qxx.is_finite()
            && self.qxy.is_finite()
            && self.qxz.is_finite()
            && self.qyy.is_finite()
            && self.qyz.is_finite()
    }
}

/// Modified alignment tensor D = Q + delta/3. Trace 1, and non-negative
/// eigenvalues whenever Q is physically valid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModifiedTensor {
    pub dxx: f64,
    pub dxy: f64,
    pub dxz: f64,
    pub dyy: f64,
    pub dyz: f64,
    pub dzz: f64,
}

impl ModifiedTensor {
    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.dxx, self.dxy, self.dxz],
            [self.dxy, self.dyy, self.dyz],
            [self.dxz, self.dyz, self.dzz],
        ]
    }
}

/// D = Q + delta/3, componentwise.
pub fn to_modified(q: &AlignmentTensor) -> ModifiedTensor {
    ModifiedTensor {
        dxx: q.qxx + 1.0 / 3.0,
        dxy: q.qxy,
        dxz: q.qxz,
        dyy: q.qyy + 1.0 / 3.0,
        dyz: q.qyz,
        dzz: q.qzz() + 1.0 / 3.0,
    }
}

/// Sorted eigendecomposition of D: lam_n >= lam_m >= lam_l with orthonormal
/// eigenvectors.
#[derive(Clone, Copy, Debug)]
pub struct EigenFrame {
    pub lam_n: f64,
    pub lam_m: f64,
    pub lam_l: f64,
    pub vec_n: [f64; 3],
    pub vec_m: [f64; 3],
    pub vec_l: [f64; 3],
}

/// Westin anisotropy metrics: isotropy c_s, linear c_l, planar c_p.
/// They sum to one whenever trace(D) = 1.
#[derive(Clone, Copy, Debug)]
pub struct WestinMetrics {
    pub c_s: f64,
    pub c_l: f64,
    pub c_p: f64,
}

/// Cyclic Jacobi eigendecomposition of a symmetric 3x3 matrix.
/// Returns unsorted eigenvalues and eigenvectors (columns of v).
fn jacobi3(mut a: [[f64; 3]; 3]) -> Result<([f64; 3], [[f64; 3]; 3])> {
    for row in &a {
        for x in row {
            if !x.is_finite() {
                return Err(Error::EigenNonConvergence);
            }
        }
    }
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off = (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]).sqrt();
        if off < JACOBI_OFFDIAG_TOL {
            let vals = [a[0][0], a[1][1], a[2][2]];
            let mut vecs = [[0.0; 3]; 3];
            for k in 0..3 {
                for i in 0..3 {
                    vecs[k][i] = v[i][k];
                }
            }
            return Ok((vals, vecs));
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq.abs() < 1e-300 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // rotate a
            let app = a[p][p];
            let aqq = a[q][q];
            a[p][p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
            a[q][q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            let r = 3 - p - q; // the remaining index
            let arp = a[r][p];
            let arq = a[r][q];
            a[r][p] = c * arp - s * arq;
            a[p][r] = a[r][p];
            a[r][q] = s * arp + c * arq;
            a[q][r] = a[r][q];
            // accumulate v
            #[allow(clippy::needless_range_loop)]
            for i in 0..3 {
                let vip = v[i][p];
                let viq = v[i][q];
                v[i][p] = c * vip - s * viq;
                v[i][q] = s * vip + c * viq;
            }
        }
    }
    Err(Error::EigenNonConvergence)
}

/// Flip an eigenvector so that its largest-magnitude component is positive.
fn canonical_sign(v: [f64; 3]) -> [f64; 3] {
    let mut imax = 0;
    for i in 1..3 {
        if v[i].abs() > v[imax].abs() {
            imax = i;
        }
    }
    if v[imax] < 0.0 {
        [-v[0], -v[1], -v[2]]
    } else {
        v
    }
}

/// Eigendecompose D into a descending-sorted orthonormal frame.
pub fn eigendecompose(d: &ModifiedTensor) -> Result<EigenFrame> {
    let (vals, vecs) = jacobi3(d.to_matrix())?;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
    let [n, m, l] = order;
    Ok(EigenFrame {
        lam_n: vals[n],
        lam_m: vals[m],
        lam_l: vals[l],
        vec_n: canonical_sign(vecs[n]),
        vec_m: canonical_sign(vecs[m]),
        vec_l: canonical_sign(vecs[l]),
    })
}

/// Westin metrics from a sorted eigenframe:
/// c_l = lam_1 - lam_2, c_p = 2(lam_2 - lam_3), c_s = 3 lam_3.
pub fn westin(e: &EigenFrame) -> WestinMetrics {
    WestinMetrics {
        c_l: e.lam_n - e.lam_m,
        c_p: 2.0 * (e.lam_m - e.lam_l),
        c_s: 3.0 * e.lam_l,
    }
}

/// Convenience composition: Westin metrics of an alignment tensor.
pub fn westin_of(q: &AlignmentTensor) -> Result<WestinMetrics> {
    Ok(westin(&eigendecompose(&to_modified(q))?))
}
