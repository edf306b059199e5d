//! Signed log-magnitude numbers for quantities that overflow `f64`.

use std::ops::{Add, Mul, Neg};

/// `sign * exp(log_mag)`. Zero is `log_mag = -inf` with sign 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub log_mag: f64,
    pub sign: i8,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        log_mag: f64::NEG_INFINITY,
        sign: 0,
    };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogValue {
                log_mag: x.abs().ln(),
                sign: if x > 0.0 { 1 } else { -1 },
            }
        }
    }

    /// Positive number given by its logarithm.
    pub fn from_log(log_mag: f64) -> Self {
        if log_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue { log_mag, sign: 1 }
        }
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_mag.exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// Multiply by `exp(s)`.
    pub fn scale_exp(self, s: f64) -> Self {
        if self.sign == 0 {
            self
        } else {
            LogValue {
                log_mag: self.log_mag + s,
                sign: self.sign,
            }
        }
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        LogValue {
            log_mag: self.log_mag,
            sign: -self.sign,
        }
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, o: LogValue) -> LogValue {
        if self.sign == 0 || o.sign == 0 {
            return LogValue::ZERO;
        }
        LogValue {
            log_mag: self.log_mag + o.log_mag,
            sign: self.sign * o.sign,
        }
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(self, o: LogValue) -> LogValue {
        if self.sign == 0 {
            return o;
        }
        if o.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_mag >= o.log_mag {
            (self, o)
        } else {
            (o, self)
        };
        let d = (small.log_mag - big.log_mag).exp();
        if big.sign == small.sign {
            LogValue {
                log_mag: big.log_mag + d.ln_1p(),
                sign: big.sign,
            }
        } else if d == 1.0 {
            LogValue::ZERO
        } else {
            LogValue {
                log_mag: big.log_mag + (-d).ln_1p(),
                sign: big.sign,
            }
        }
    }
}

/// Streaming log-sum-exp over positive and negative terms given as `(log|x|, sign)`.
///
/// Keeps a running shift so each term costs one `exp`.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    shift: f64,
    pos: f64,
    neg: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp {
            shift: f64::NEG_INFINITY,
            pos: 0.0,
            neg: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_log(&mut self, log_mag: f64, sign: i8) {
        if sign == 0 || log_mag == f64::NEG_INFINITY {
            return;
        }
        if log_mag > self.shift {
            let r = (self.shift - log_mag).exp();
            self.pos *= r;
            self.neg *= r;
            self.shift = log_mag;
        }
        let v = (log_mag - self.shift).exp();
        if sign > 0 {
            self.pos += v;
        } else {
            self.neg += v;
        }
    }

    pub fn push(&mut self, v: LogValue) {
        self.push_log(v.log_mag, v.sign);
    }

    pub fn value(&self) -> LogValue {
        if self.shift == f64::NEG_INFINITY {
            return LogValue::ZERO;
        }
        let d = self.pos - self.neg;
        LogValue::from_f64(d).scale_exp(self.shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for x in [-3.5, -1e-300, 0.0, 2.0, 1e300] {
            let v = LogValue::from_f64(x);
            assert!((v.to_f64() - x).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn addition_matches_f64() {
        let a = LogValue::from_f64(3.0);
        let b = LogValue::from_f64(-5.0);
        assert!(((a + b).to_f64() + 2.0).abs() < 1e-14);
        assert!((a + (-a)).is_zero());
    }

    #[test]
    fn huge_sums_do_not_overflow() {
        let mut acc = LogSumExp::new();
        acc.push_log(1000.0, 1);
        acc.push_log(1000.0, 1);
        let v = acc.value();
        assert!((v.log_mag - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(v.sign, 1);
    }
}
