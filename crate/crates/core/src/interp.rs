//! Shape-preserving cubic (Fritsch–Carlson) interpolation on a uniform grid.
//!
//! Node slopes are computed locally, so a query costs O(1) and no setup pass
//! over the (possibly very long) sample array is required.

/// Fritsch–Carlson slope at node `i` of uniformly spaced samples `y` (spacing `dx`).
fn node_slope(y: &[f64], dx: f64, i: usize) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    if i == 0 || i == n - 1 {
        if n == 2 {
            return (y[1] - y[0]) / dx;
        }
        // one-sided three-point estimate, limited as in the standard PCHIP end rule
        let (d0, d1) = if i == 0 {
            ((y[1] - y[0]) / dx, (y[2] - y[1]) / dx)
        } else {
            ((y[n - 1] - y[n - 2]) / dx, (y[n - 2] - y[n - 3]) / dx)
        };
        let m = 0.5 * (3.0 * d0 - d1);
        if m.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            m
        }
    } else {
        let d0 = (y[i] - y[i - 1]) / dx;
        let d1 = (y[i + 1] - y[i]) / dx;
        if d0 == 0.0 || d1 == 0.0 || d0.signum() != d1.signum() {
            0.0
        } else {
            2.0 * d0 * d1 / (d0 + d1)
        }
    }
}

/// Interpolate at `x` given samples `y[k]` at `x0 + k*dx`. Returns `None` outside the grid.
pub fn pchip_uniform(y: &[f64], x0: f64, dx: f64, x: f64) -> Option<f64> {
    let n = y.len();
    if n == 0 || !x.is_finite() {
        return None;
    }
    let s = (x - x0) / dx;
    let last = (n - 1) as f64;
    if s < -1e-12 || s > last + 1e-12 {
        return None;
    }
    if n == 1 {
        return Some(y[0]);
    }
    let s = s.clamp(0.0, last);
    let mut i = s.floor() as usize;
    if i >= n - 1 {
        i = n - 2;
    }
    let u = s - i as f64;
    if u == 0.0 {
        return Some(y[i]);
    }
    if u == 1.0 {
        return Some(y[i + 1]);
    }
    let m0 = node_slope(y, dx, i) * dx;
    let m1 = node_slope(y, dx, i + 1) * dx;
    let u2 = u * u;
    let u3 = u2 * u;
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    Some(h00 * y[i] + h10 * m0 + h01 * y[i + 1] + h11 * m1)
}

/// Piecewise-linear interpolation; `None` outside the grid.
pub fn linear_uniform(y: &[f64], x0: f64, dx: f64, x: f64) -> Option<f64> {
    let n = y.len();
    if n == 0 {
        return None;
    }
    let s = (x - x0) / dx;
    let last = (n - 1) as f64;
    if !(s >= -1e-12 && s <= last + 1e-12) {
        return None;
    }
    if n == 1 {
        return Some(y[0]);
    }
    let s = s.clamp(0.0, last);
    let i = (s.floor() as usize).min(n - 2);
    let u = s - i as f64;
    Some(y[i] + u * (y[i + 1] - y[i]))
}
