//! Linear least squares on small dense bases.

use nalgebra::{DMatrix, DVector};

use crate::error::{KppError, Result};

/// Solution of a weighted least-squares problem.
#[derive(Debug, Clone)]
pub struct LsqFit {
    pub coeffs: Vec<f64>,
    /// σ²(XᵀWX)⁻¹ with σ² estimated from the weighted residuals.
    pub covariance: Vec<Vec<f64>>,
    /// y − Xβ at every sample.
    pub residuals: Vec<f64>,
    pub condition: f64,
}

/// Minimise Σ w_i (y_i − Σ_j X_ij β_j)². Rows of `design` are samples.
pub fn weighted_lsq(design: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<LsqFit> {
    let n = y.len();
    let m = design.first().map_or(0, Vec::len);
    if n != design.len() || n != w.len() || m == 0 || n < m {
        return Err(KppError::IllConditioned(format!("{n} samples for {m} unknowns")));
    }
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let x = DMatrix::from_fn(n, m, |i, j| design[i][j] * sw[i]);
    let b = DVector::from_fn(n, |i, _| y[i] * sw[i]);
    // column scaling keeps the condition number meaningful for mixed bases
    let scale: Vec<f64> = (0..m).map(|j| x.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    let xs = DMatrix::from_fn(n, m, |i, j| x[(i, j)] / scale[j]);
    let svd = xs.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = smax / smin;
    if !(condition < 1e12) {
        return Err(KppError::IllConditioned(format!("condition number {condition:e}")));
    }
    let sol = svd
        .solve(&b, 1e-14 * smax)
        .map_err(|e| KppError::IllConditioned(e.to_string()))?;
    let coeffs: Vec<f64> = (0..m).map(|j| sol[j] / scale[j]).collect();
    let residuals: Vec<f64> = (0..n)
        .map(|i| y[i] - design[i].iter().zip(&coeffs).map(|(a, c)| a * c).sum::<f64>())
        .collect();
    let dof = (n - m).max(1) as f64;
    let sigma2 = residuals.iter().zip(w).map(|(r, w)| w * r * r).sum::<f64>() / dof;
    let xtx = xs.transpose() * &xs;
    let inv = xtx
        .try_inverse()
        .ok_or_else(|| KppError::IllConditioned("singular normal matrix".into()))?;
    let covariance = (0..m)
        .map(|i| (0..m).map(|j| sigma2 * inv[(i, j)] / (scale[i] * scale[j])).collect())
        .collect();
    Ok(LsqFit {
        coeffs,
        covariance,
        residuals,
        condition,
    })
}

/// Least-squares polynomial of degree `deg`; returns coefficients (constant first) and max |residual|.
pub fn poly_fit(xs: &[f64], ys: &[f64], deg: usize) -> Result<(Vec<f64>, f64)> {
    let design: Vec<Vec<f64>> = xs.iter().map(|&x| (0..=deg).map(|k| x.powi(k as i32)).collect()).collect();
    let fit = weighted_lsq(&design, ys, &vec![1.0; xs.len()])?;
    let worst = fit.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok((fit.coeffs, worst))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cubic() {
        let xs: Vec<f64> = (0..21).map(|k| -0.2 + 0.02 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x * x * x).collect();
        let (c, r) = poly_fit(&xs, &ys, 3).unwrap();
        assert!(r < 1e-13);
        for (a, b) in c.iter().zip([1.0, -2.0, 0.5, 3.0]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_degenerate_design() {
        let design = vec![vec![1.0, 2.0]; 5];
        assert!(weighted_lsq(&design, &[1.0; 5], &[1.0; 5]).is_err());
        assert!(weighted_lsq(&[vec![1.0]], &[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn covariance_scales_with_noise() {
        let xs: Vec<f64> = (0..50).map(|k| k as f64 / 49.0).collect();
        let noise = |k: usize| if k % 2 == 0 { 1e-3 } else { -1e-3 };
        let ys: Vec<f64> = xs.iter().enumerate().map(|(k, x)| 2.0 + x + noise(k)).collect();
        let design: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
        let f = weighted_lsq(&design, &ys, &vec![1.0; 50]).unwrap();
        let sd = f.covariance[0][0].sqrt();
        assert!(sd > 1e-5 && sd < 1e-3, "{sd}");
    }
}
