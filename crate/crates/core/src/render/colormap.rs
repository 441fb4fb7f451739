//! Perceptually uniform colormap with fixed control points, linearly
//! interpolated in RGB.

/// Control points of the map (viridis), evenly spaced over [0, 1].
pub const CONTROL_POINTS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

/// Map t in [0, 1] (clamped) to an RGB color.
pub fn sample(t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let n = CONTROL_POINTS.len() - 1;
    let x = t * n as f64;
    let k = (x.floor() as usize).min(n - 1);
    let f = x - k as f64;
    let a = CONTROL_POINTS[k];
    let b = CONTROL_POINTS[k + 1];
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (a[c] as f64 + f * (b[c] as f64 - a[c] as f64)).round() as u8;
    }
    out
}

/// Hex string "#rrggbb" for SVG fills.
pub fn hex(t: f64) -> String {
    let [r, g, b] = sample(t);
    format!("#{r:02x}{g:02x}{b:02x}")
}
