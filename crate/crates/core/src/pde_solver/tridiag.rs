//! Constant-coefficient tridiagonal factorization (Thomas algorithm).

/// Factorization of the m×m matrix with diagonal `1 + 2a` and off-diagonals `-a`.
///
/// The elimination coefficients converge geometrically to constants, so only
/// the transient prefix is stored.
#[derive(Debug, Clone)]
pub struct TridiagFactor {
    m: usize,
    inv: Vec<f64>,
    /// a / d_i, keeping one multiply-add on the forward recurrence chain.
    ainv: Vec<f64>,
    cp: Vec<f64>,
}

impl TridiagFactor {
    pub fn new(a: f64, m: usize) -> Self {
        let b = 1.0 + 2.0 * a;
        let mut inv = Vec::new();
        let mut ainv = Vec::new();
        let mut cp = Vec::new();
        let mut prev_cp = 0.0;
        for i in 0..m {
            let d = if i == 0 { b } else { b + a * prev_cp };
            let id = 1.0 / d;
            let c = -a * id;
            if i > 0 && c == prev_cp {
                break;
            }
            inv.push(id);
            ainv.push(a * id);
            cp.push(c);
            prev_cp = c;
        }
        TridiagFactor { m, inv, ainv, cp }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    #[inline(always)]
    fn coeffs(&self, i: usize) -> (f64, f64, f64) {
        let k = i.min(self.inv.len() - 1);
        (self.inv[k], self.ainv[k], self.cp[k])
    }

    fn forward(&self, x: &mut [f64]) {
        let m = x.len();
        let k = self.inv.len().min(m);
        let mut prev = x[0] * self.inv[0];
        x[0] = prev;
        for i in 1..k {
            prev = self.ainv[i] * prev + x[i] * self.inv[i];
            x[i] = prev;
        }
        let (inv, ainv, _) = self.coeffs(m);
        for v in x[k.max(1)..].iter_mut() {
            prev = ainv * prev + *v * inv;
            *v = prev;
        }
    }

    /// Overwrite `x` (length m) with the solution of A·x = x.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let m = x.len();
        debug_assert_eq!(m, self.m);
        if m == 0 {
            return;
        }
        self.forward(x);
        let mut next = x[m - 1];
        for i in (0..m - 1).rev() {
            next = x[i] - self.coeffs(i).2 * next;
            x[i] = next;
        }
    }

    /// Solve in place, then replace entries below `floor` by zero.
    ///
    /// Returns (max entry, largest magnitude of a replaced negative entry).
    pub fn solve_clamped(&self, x: &mut [f64], floor: f64) -> (f64, f64) {
        let m = x.len();
        debug_assert_eq!(m, self.m);
        if m == 0 {
            return (0.0, 0.0);
        }
        self.forward(x);
        let k = self.cp.len().min(m);
        let cp_inf = self.coeffs(m).2;
        let mut next = x[m - 1];
        let mut vmax = f64::NEG_INFINITY;
        let mut neg: f64 = 0.0;
        let mut store = |v: f64, slot: &mut f64| {
            if v < floor {
                if -v > neg {
                    neg = -v;
                }
                *slot = 0.0;
            } else {
                if v > vmax {
                    vmax = v;
                }
                *slot = v;
            }
        };
        store(next, &mut x[m - 1]);
        for i in (k..m - 1).rev() {
            next = x[i] - cp_inf * next;
            store(next, &mut x[i]);
        }
        for i in (0..k.min(m - 1)).rev() {
            next = x[i] - self.cp[i] * next;
            store(next, &mut x[i]);
        }
        if !vmax.is_finite() && vmax != f64::NEG_INFINITY {
            return (f64::NAN, neg);
        }
        (vmax.max(0.0), neg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_random_system() {
        let a = 12.5;
        let m = 50;
        let f = TridiagFactor::new(a, m);
        let x_true: Vec<f64> = (0..m).map(|i| ((i * 7 % 11) as f64).sin()).collect();
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            rhs[i] = (1.0 + 2.0 * a) * x_true[i];
            if i > 0 {
                rhs[i] -= a * x_true[i - 1];
            }
            if i + 1 < m {
                rhs[i] -= a * x_true[i + 1];
            }
        }
        let mut rhs2 = rhs.clone();
        f.solve_in_place(&mut rhs);
        for i in 0..m {
            assert!((rhs[i] - x_true[i]).abs() < 1e-12);
        }
        let (vmax, neg) = f.solve_clamped(&mut rhs2, 0.0);
        for i in 0..m {
            assert_eq!(rhs2[i], rhs[i].max(0.0));
        }
        assert_eq!(vmax, rhs.iter().cloned().fold(0.0, f64::max));
        assert_eq!(neg, -rhs.iter().cloned().fold(0.0, f64::min));
    }

    #[test]
    fn long_system_uses_converged_tail() {
        let a = 25.0;
        let m = 5000;
        let f = TridiagFactor::new(a, m);
        assert!(f.inv.len() < 1000);
        let x_true: Vec<f64> = (0..m).map(|i| (i as f64 * 0.01).cos()).collect();
        let mut rhs: Vec<f64> = (0..m)
            .map(|i| {
                let l = if i > 0 { x_true[i - 1] } else { 0.0 };
                let r = if i + 1 < m { x_true[i + 1] } else { 0.0 };
                (1.0 + 2.0 * a) * x_true[i] - a * (l + r)
            })
            .collect();
        f.solve_in_place(&mut rhs);
        for i in 0..m {
            assert!((rhs[i] - x_true[i]).abs() < 1e-11);
        }
    }
}
