//! Sampled moduli of continuity `δ`, `ω`.

use crate::error::{Error, Result};

/// Nondecreasing step function: `eval(t)` is the value at the first breakpoint
/// `≥ t`, and the last value beyond the last breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusOfContinuity {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl ModulusOfContinuity {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != values.len() {
            return Err(Error::InvalidArgument("modulus needs matching breakpoints and values".into()));
        }
        if breaks[0] <= 0.0 || breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("modulus breakpoints must be positive and increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) || values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("modulus values must be finite, nonnegative, nondecreasing".into()));
        }
        Ok(ModulusOfContinuity { breaks, values })
    }

    /// `δ ≡ 0`.
    pub fn zero() -> Self {
        ModulusOfContinuity { breaks: vec![f64::MAX], values: vec![0.0] }
    }

    /// Upper step approximation of `t ↦ L·t` on `(0, t_max]` (exact at 512 breakpoints, above in between).
    pub fn linear(lip: f64, t_max: f64) -> Self {
        let n = 512;
        let breaks: Vec<f64> = (1..=n).map(|j| t_max * j as f64 / n as f64).collect();
        let values = breaks.iter().map(|t| lip * t).collect();
        ModulusOfContinuity { breaks, values }
    }

    /// Smallest step modulus dominating every `(distance, increment)` pair, on the given breakpoints.
    pub fn from_samples(breaks: Vec<f64>, samples: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut values = vec![0.0f64; breaks.len()];
        for (t, inc) in samples {
            if !inc.is_finite() {
                return Err(Error::NonFinite { index: 0, value: inc });
            }
            let j = breaks.partition_point(|&b| b < t);
            if j < values.len() {
                values[j] = values[j].max(inc);
            }
        }
        for j in 1..values.len() {
            values[j] = values[j].max(values[j - 1]);
        }
        ModulusOfContinuity::new(breaks, values)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        let j = self.breaks.partition_point(|&b| b < t);
        self.values[j.min(self.values.len() - 1)]
    }

    /// Value at the first breakpoint, the surrogate for `lim_{t→0⁺}`.
    pub fn limit_at_zero(&self) -> f64 {
        self.values[0]
    }

    /// Whether the modulus vanishes at `0⁺` within `tol`.
    pub fn vanishes_at_zero(&self, tol: f64) -> bool {
        self.limit_at_zero() <= tol
    }

    /// Pointwise sum, on the union of the breakpoints.
    pub fn add(&self, other: &ModulusOfContinuity) -> Self {
        let mut breaks: Vec<f64> = self.breaks.iter().chain(&other.breaks).cloned().collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let values = breaks.iter().map(|&t| self.eval(t) + other.eval(t)).collect();
        ModulusOfContinuity { breaks, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_evaluation() {
        let m = ModulusOfContinuity::new(vec![0.1, 0.2, 0.4], vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(m.eval(0.05), 0.0);
        assert_eq!(m.eval(0.1), 0.0);
        assert_eq!(m.eval(0.15), 0.5);
        assert_eq!(m.eval(9.0), 1.0);
        assert!(m.vanishes_at_zero(1e-12));
        assert!(ModulusOfContinuity::new(vec![0.1, 0.2], vec![1.0, 0.5]).is_err());
    }

    #[test]
    fn samples_are_dominated() {
        let pairs = [(0.05, 0.1), (0.3, 0.7), (0.12, 0.4), (0.31, 0.2)];
        let m = ModulusOfContinuity::from_samples(vec![0.1, 0.2, 0.4, 0.8], pairs).unwrap();
        for (t, inc) in pairs {
            assert!(m.eval(t) >= inc);
        }
        assert_eq!(m.values(), &[0.1, 0.4, 0.7, 0.7]);
        let lin = ModulusOfContinuity::linear(2.0, 1.0);
        for t in [0.001, 0.3, 0.77, 1.0] {
            assert!(lin.eval(t) >= 2.0 * t);
        }
        let s = m.add(&lin);
        assert!(s.eval(0.3) >= 0.7 + 0.6);
    }
}
