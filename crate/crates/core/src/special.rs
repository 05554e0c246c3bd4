//! Thin wrappers over `libm` plus the few helpers the series code needs.

use std::f64::consts::PI;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// 1/Γ(x), finite for every real x (zero at the poles of Γ).
pub fn rgamma(x: f64) -> f64 {
    if x > 0.0 {
        if x > 170.0 {
            return (-ln_gamma(x)).exp();
        }
        return 1.0 / gamma(x);
    }
    if x == x.floor() {
        return 0.0;
    }
    // reflection: 1/Γ(x) = Γ(1-x) sin(πx) / π
    let s = (PI * x).sin() / PI;
    let one_minus = 1.0 - x;
    if one_minus > 170.0 {
        let (lg, _) = libm::lgamma_r(one_minus);
        return s.signum() * (lg + s.abs().ln()).exp();
    }
    gamma(one_minus) * s
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_gamma_at_poles_and_reflection() {
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-3.0), 0.0);
        // Γ(-0.5) = -2√π
        assert!((rgamma(-0.5) + 1.0 / (2.0 * PI.sqrt())).abs() < 1e-15);
        assert!((rgamma(0.5) - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!(rgamma(171.5) > 0.0 && rgamma(171.5) < 1e-305);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let acc: CompensatedSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(acc.value(), 2.0);
    }
}
