//! The atoms `x_k`, weights `c_k`, the potential `λ` and the discs `D_k`.

use std::f64::consts::FRAC_1_SQRT_2;

use super::interval::Interval;
use crate::error::{Error, Result};

/// One atom: `x = 1/m + 4^{−(m+j)}·(√2/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub m: u32,
    pub j: u32,
    pub x: f64,
}

// offsets below a few ulps of 1/m would round the atom onto A
const MIN_ULPS: f64 = 8.0;

fn ulp(x: f64) -> f64 {
    x.next_up() - x
}

/// Pairs `(m, j)`, `m ≥ 2`, `j ≥ 1`, by increasing `m + j` then `m`. Pairs whose
/// offset is below `8·ulp(1/m)` are skipped, so every atom is a float distinct from
/// every `1/m′`; the limit set is `Ā` down to that resolution.
pub fn build_sequence_x(count: usize) -> Result<Vec<Atom>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be ≥ 1".into()));
    }
    let mut out = Vec::with_capacity(count);
    let mut t = 3u32;
    while out.len() < count {
        let mut any = false;
        for m in 2..t {
            let j = t - m;
            let base = 1.0 / m as f64;
            let offset = 4f64.powi(-(t as i32)) * FRAC_1_SQRT_2;
            if offset < MIN_ULPS * ulp(base) {
                continue;
            }
            any = true;
            let x = base + offset;
            // x lies strictly between 1/m and 1/(m − 1)
            debug_assert!(x > base && x < 1.0 / (m - 1) as f64 && x < 1.0);
            out.push(Atom { m, j, x });
            if out.len() == count {
                break;
            }
        }
        if !any {
            return Err(Error::InvalidArgument(format!("only {} distinguishable atoms exist in double precision", out.len())));
        }
        t += 1;
    }
    Ok(out)
}

/// `λ(z) = Σ c_k log|z − x_k|` truncated to the built atoms.
#[derive(Debug, Clone)]
pub struct LogPotential {
    pub atoms: Vec<Atom>,
    pub weights: Vec<f64>,
    /// `s_k = sup_m |log|1/m − x_k||`, as upper bounds.
    pub sup_logs: Vec<f64>,
}

/// Outward enclosure of `max_m |log|1/m − x||`. All distances are below 1, so the
/// sup is `−log` of the smallest one, attained at a bracketing `1/m`.
pub fn sup_log_distance(x: f64) -> Interval {
    let m1 = (1.0 / x).floor().max(1.0);
    let near = [m1, m1 + 1.0]
        .iter()
        .map(|&m| (Interval::new((1.0 / m).next_down(), (1.0 / m).next_up()) - Interval::point(x)).abs())
        .fold(Interval::point(f64::INFINITY), |a, d| Interval::new(a.lo.min(d.lo), a.hi.min(d.hi)));
    -near.ln()
}

impl LogPotential {
    /// Weights `c_k = 2^{−k−1}/(1 + s_k)`, rounded down, so `Σ c_k s_k < 1/2`.
    pub fn build(atoms: Vec<Atom>) -> Result<Self> {
        let mut weights = Vec::with_capacity(atoms.len());
        let mut sup_logs = Vec::with_capacity(atoms.len());
        for (idx, a) in atoms.iter().enumerate() {
            let s = sup_log_distance(a.x);
            if !s.hi.is_finite() {
                return Err(Error::NonFinite { index: idx, value: s.hi });
            }
            let k = idx as i32 + 1;
            let c = (2f64.powi(-k - 1) / (1.0 + s.hi)).next_down();
            weights.push(c);
            sup_logs.push(s.hi);
        }
        Ok(LogPotential { atoms, weights, sup_logs })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `Σ c_k s_k` over the built atoms plus the tail `Σ_{k>K} 2^{−k−1} = 2^{−K−1}`.
    pub fn weighted_sup_sum(&self) -> Interval {
        let head = self
            .weights
            .iter()
            .zip(&self.sup_logs)
            .fold(Interval::point(0.0), |acc, (&c, &s)| acc + Interval::point(c) * Interval::point(s));
        head + Interval::point(2f64.powi(-(self.len() as i32) - 1))
    }

    /// Truncated `λ(z)` for `z = (re, im)`; `−∞` on an atom.
    pub fn eval(&self, z: [f64; 2]) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(a, c)| c * (z[0] - a.x).hypot(z[1]).ln()).sum()
    }

    /// `λ(x_k + w)` in coordinates centred at the atom, so that offsets far below
    /// the spacing of floats near `x_k` still resolve the `k`-th term.
    pub fn eval_near(&self, k: usize, w: [f64; 2]) -> f64 {
        let xk = self.atoms[k].x;
        self.atoms
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(j, (a, c))| if j == k { c * w[0].hypot(w[1]).ln() } else { c * ((xk - a.x) + w[0]).hypot(w[1]).ln() })
            .sum()
    }

    /// Enclosure of `λ(1/m)` including the untruncated tail, which lies in
    /// `[−2^{−K−1}, 0]` because every tail term is `c_k log|1/m − x_k| ∈ [−c_k s_k, 0]`.
    pub fn eval_on_a(&self, m: u32) -> Interval {
        let z = Interval::new((1.0 / m as f64).next_down(), (1.0 / m as f64).next_up());
        let head = self
            .atoms
            .iter()
            .zip(&self.weights)
            .fold(Interval::point(0.0), |acc, (a, &c)| acc + Interval::point(c) * (z - Interval::point(a.x)).abs().ln());
        head + Interval::new(-(2f64.powi(-(self.len() as i32) - 1)), 0.0)
    }
}

/// `D_k` with centre `x_k` and radius `exp(log_radius)`.
#[derive(Debug, Clone)]
pub struct Disc {
    pub centre: f64,
    pub log_radius: f64,
    /// Whether `r_k` is a normal float; otherwise sampling is skipped.
    pub representable: bool,
    /// Largest sampled `λ` on the boundary circle and the centre ray, when representable.
    pub sampled_max: Option<f64>,
}

impl Disc {
    pub fn radius(&self) -> f64 {
        self.log_radius.exp()
    }

    /// Whether `z` lies in the open disc, compared in log form.
    pub fn contains(&self, z: [f64; 2]) -> bool {
        (z[0] - self.centre).hypot(z[1]).ln() < self.log_radius
    }
}

#[derive(Debug, Clone)]
pub struct DiscFamily {
    pub discs: Vec<Disc>,
    /// Upper bound `B` of `Σ_{j≠k} c_j log|z − x_j|` for `|z − x_j| ≤ 2`.
    pub rest_bound: f64,
}

/// `log r_k = −(1 + B)/c_k`, shrunk so that `r_k < dist(x_k, A)/2`; then
/// `λ ≤ c_k log r_k + B ≤ −1` on `D_k`. Discs with a normal radius are sampled at
/// 64 boundary points and 16 points on the centre ray, in atom-centred coordinates.
pub fn build_discs(potential: &LogPotential) -> DiscFamily {
    let total: f64 = potential.weights.iter().sum();
    let rest_bound = (total * 2f64.ln()).next_up();
    let discs = potential
        .atoms
        .iter()
        .zip(&potential.weights)
        .enumerate()
        .map(|(k, (a, &c))| {
            // −log dist(x, A) ≤ s_hi, so exp(−s_hi)/2 ≤ dist/2
            let cap = -sup_log_distance(a.x).hi - 2f64.ln();
            let log_radius = (-(1.0 + rest_bound) / c).min(cap);
            let r = log_radius.exp();
            let representable = r >= f64::MIN_POSITIVE;
            let sampled_max = representable.then(|| {
                let circle = (0..64).map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
                    [r * t.cos(), r * t.sin()]
                });
                let ray = (1..=16).map(|i| [r * i as f64 / 16.0, 0.0]);
                circle.chain(ray).map(|w| potential.eval_near(k, w)).fold(f64::NEG_INFINITY, f64::max)
            });
            Disc { centre: a.x, log_radius, representable, sampled_max }
        })
        .collect();
    DiscFamily { discs, rest_bound }
}

impl DiscFamily {
    pub fn contains(&self, z: [f64; 2]) -> bool {
        self.discs.iter().any(|d| d.contains(z))
    }
}
