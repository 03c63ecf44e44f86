//! Convex nondecreasing profiles `p` with `ρ = p ∘ d` dominating a given function.

use super::cap::CapDomain;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// Piecewise linear convex nondecreasing function, constant left of the first
/// breakpoint and linear with the last slope to the right of the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    breaks: Vec<f64>,
    values: Vec<f64>,
    tail_slope: f64,
}

impl Profile {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>, tail_slope: f64) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != values.len() {
            return Err(Error::InvalidArgument("profile needs matching breakpoints and values".into()));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("profile breakpoints must increase".into()));
        }
        if values.iter().chain([&tail_slope]).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: 0, value: f64::NAN });
        }
        let p = Profile { breaks, values, tail_slope };
        let s = p.slopes();
        let slack = |x: f64| 1e-9 * x.abs().max(1.0);
        if s.first().is_some_and(|&x| x < -slack(x))
            || s.windows(2).any(|w| w[1] < w[0] - slack(w[0]))
            || s.last().is_some_and(|&x| tail_slope < x - slack(x))
        {
            return Err(Error::InvalidArgument("profile is not convex nondecreasing".into()));
        }
        if tail_slope < 0.0 {
            return Err(Error::InvalidArgument("negative tail slope".into()));
        }
        Ok(p)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_slope(&self) -> f64 {
        self.tail_slope
    }

    fn slopes(&self) -> Vec<f64> {
        self.breaks
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(b, v)| (v[1] - v[0]) / (b[1] - b[0]))
            .collect()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.breaks.len();
        if t <= self.breaks[0] {
            return self.values[0];
        }
        if t >= self.breaks[n - 1] {
            return self.values[n - 1] + self.tail_slope * (t - self.breaks[n - 1]);
        }
        let i = self.breaks.partition_point(|&b| b <= t) - 1;
        let s = (t - self.breaks[i]) / (self.breaks[i + 1] - self.breaks[i]);
        self.values[i] + s * (self.values[i + 1] - self.values[i])
    }
}

/// Profile with `p(d(z)) ≥ φ₁(z) + gain·d(z)` at every node where both are defined.
///
/// `φ₁` and `d` live on the same grid; nodes where `φ₁ = −∞` impose nothing.
pub fn choose_profile(phi1: &ScalarField, d: &ScalarField, gain: f64) -> Result<Profile> {
    if phi1.spec() != d.spec() {
        return Err(Error::GridMismatch);
    }
    if !(gain >= 0.0) || !gain.is_finite() {
        return Err(Error::InvalidArgument(format!("gain {gain}")));
    }
    let pairs: Vec<(f64, f64)> = d
        .inside_indices()
        .filter(|&i| phi1.is_inside(i) && d.value(i).is_finite())
        .map(|i| (d.value(i), phi1.value(i)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptyMask("no common nodes for the profile".into()));
    }
    let (lo, hi) = pairs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(t, _)| (a.min(t), b.max(t)));
    const NB: usize = 64;
    let width = (hi - lo).max(1e-9);
    let breaks: Vec<f64> = (0..=NB).map(|j| lo + width * j as f64 / NB as f64).collect();
    // prefix maxima of φ₁ over {d ≤ t_j}; a node with d in (t_{j−1}, t_j] belongs to bucket j
    let mut bucket = vec![f64::NEG_INFINITY; NB + 1];
    for &(t, v) in &pairs {
        let j = breaks.partition_point(|&b| b < t).min(NB);
        bucket[j] = bucket[j].max(v);
    }
    let mut targets = Vec::with_capacity(NB + 1);
    let mut running = f64::NEG_INFINITY;
    for j in 0..=NB {
        running = running.max(bucket[j]);
        targets.push(running);
    }
    if targets.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::NonFinite { index: 0, value: f64::INFINITY });
    }
    let first = targets.iter().position(|v| v.is_finite()).unwrap_or(NB);
    // p(t_{j−1}) must cover bucket j, whose nodes have d ≤ t_j
    let g: Vec<f64> = (0..=NB)
        .map(|j| {
            let k = (j + 1).min(NB);
            if targets[k].is_finite() { targets[k] + gain * breaks[k] } else { f64::NEG_INFINITY }
        })
        .collect();
    // greedy convex majorant with nondecreasing slopes, starting flat
    let mut values = vec![0.0; NB + 1];
    let start = if g[first].is_finite() { g[first] } else { 0.0 };
    for v in values.iter_mut().take(first + 1) {
        *v = start;
    }
    let mut slope = 0.0f64;
    for j in first + 1..=NB {
        let dt = breaks[j] - breaks[j - 1];
        let need = (g[j] - values[j - 1]) / dt;
        slope = slope.max(need);
        values[j] = values[j - 1] + slope * dt;
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: 0, value: f64::INFINITY });
    }
    Profile::new(breaks, values, slope.max(gain))
}

/// `ρ = p ∘ d` and `ρ′ = p ∘ d′` on a cap domain grid.
#[derive(Debug, Clone)]
pub struct ExhaustionProfile {
    pub profile: Profile,
    pub d: ScalarField,
    pub d_prime: ScalarField,
}

impl ExhaustionProfile {
    pub fn new(domain: &CapDomain, spec: &GridSpec, profile: Profile) -> Result<Self> {
        let d = domain.log_distance_field(spec)?;
        let d_prime = domain.log_distance_u_field(spec)?;
        Ok(ExhaustionProfile { profile, d, d_prime })
    }

    pub fn rho(&self) -> Result<ScalarField> {
        self.d.map(|_, v| self.profile.eval(v))
    }

    pub fn rho_prime(&self) -> Result<ScalarField> {
        self.d_prime.map(|_, v| self.profile.eval(v))
    }
}
