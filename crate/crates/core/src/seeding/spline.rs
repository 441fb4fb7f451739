//! One-dimensional cubic spline interpolation over arbitrary knots, with
//! natural or periodic end conditions. Two of these make a planar curve.

/// Interpolating cubic spline through (u_k, y_k), stored via second
/// derivatives at the knots.
#[derive(Clone, Debug)]
pub struct Spline1 {
    u: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline1 {
    /// Natural spline: second derivative zero at both ends. Knots must be
    /// strictly increasing, n >= 2 (n = 2 degenerates to a line).
    pub fn natural(u: Vec<f64>, y: Vec<f64>) -> Self {
        let n = u.len();
        assert_eq!(n, y.len());
        assert!(n >= 2);
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2; // interior unknowns
            let mut diag = vec![0.0; k];
            let mut sub = vec![0.0; k];
            let mut sup = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = u[i] - u[i - 1];
                let h1 = u[i + 1] - u[i];
                sub[i - 1] = h0;
                diag[i - 1] = 2.0 * (h0 + h1);
                sup[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            let sol = thomas(&sub, &diag, &sup, &rhs);
            m[1..n - 1].copy_from_slice(&sol);
        }
        Spline1 { u, y, m }
    }

    /// Periodic spline: y[n-1] must equal y[0] (same value after one period)
    /// and first/second derivatives match across the seam. n >= 4.
    pub fn periodic(u: Vec<f64>, y: Vec<f64>) -> Self {
        let n = u.len();
        assert_eq!(n, y.len());
        assert!(n >= 4);
        // unknowns M_0 .. M_{n-2}; M_{n-1} = M_0
        let k = n - 1;
        let mut diag = vec![0.0; k];
        let mut sub = vec![0.0; k];
        let mut sup = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        let h = |i: usize| u[i + 1] - u[i];
        let slope = |i: usize| (y[i + 1] - y[i]) / h(i);
        for i in 0..k {
            let hm = if i == 0 { h(k - 1) } else { h(i - 1) };
            let hp = h(i);
            let sm = if i == 0 { slope(k - 1) } else { slope(i - 1) };
            let sp = slope(i);
            sub[i] = hm;
            diag[i] = 2.0 * (hm + hp);
            sup[i] = hp;
            rhs[i] = 6.0 * (sp - sm);
        }
        let sol = cyclic_thomas(&sub, &diag, &sup, &rhs);
        let mut m = sol;
        m.push(m[0]);
        Spline1 { u, y, m }
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.u.len();
        match self.u.partition_point(|&v| v <= t) {
            0 => 0,
            p => (p - 1).min(n - 2),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let h = self.u[k + 1] - self.u[k];
        let a = (self.u[k + 1] - t) / h;
        let b = (t - self.u[k]) / h;
        a * self.y[k]
            + b * self.y[k + 1]
            + ((a * a * a - a) * self.m[k] + (b * b * b - b) * self.m[k + 1]) * h * h / 6.0
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let h = self.u[k + 1] - self.u[k];
        let a = (self.u[k + 1] - t) / h;
        let b = (t - self.u[k]) / h;
        (self.y[k + 1] - self.y[k]) / h
            + ((3.0 * b * b - 1.0) * self.m[k + 1] - (3.0 * a * a - 1.0) * self.m[k]) * h / 6.0
    }
}

/// Thomas algorithm for a tridiagonal system; sub[0] and sup[n-1] unused.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i < n - 1 { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    x
}

/// Cyclic tridiagonal solve via the Sherman-Morrison correction; sub[0] and
/// sup[n-1] are the wrap-around couplings.
fn cyclic_thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 3);
    let alpha = sup[n - 1]; // corner A[n-1][0]
    let beta = sub[0]; // corner A[0][n-1]
    let gamma = -diag[0];
    let mut dmod = diag.to_vec();
    dmod[0] -= gamma;
    dmod[n - 1] -= alpha * beta / gamma;
    let y = thomas(sub, &dmod, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(sub, &dmod, sup, &u);
    let fact = (y[0] + beta * y[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    y.iter().zip(&z).map(|(yi, zi)| yi - fact * zi).collect()
}
