//! The ball minus the removed set `K`, in the radial coordinates `(|z′|, Re z_n, Im z_n)`.

use super::potential::{build_discs, build_sequence_x, DiscFamily, LogPotential};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

#[derive(Debug, Clone)]
pub struct CounterDomain {
    pub potential: LogPotential,
    pub discs: DiscFamily,
}

impl CounterDomain {
    pub fn build(atom_count: usize) -> Result<Self> {
        let potential = LogPotential::build(build_sequence_x(atom_count)?)?;
        let discs = build_discs(&potential);
        Ok(CounterDomain { potential, discs })
    }

    /// `|z′|² + |z_n − 1|² < 1`.
    pub fn in_ball(&self, r: f64, z: [f64; 2]) -> bool {
        r * r + (z[0] - 1.0) * (z[0] - 1.0) + z[1] * z[1] < 1.0
    }

    /// Whether `(r, z)` lies within `tol` of `K = {|z′| = |z_n|, z_n ∉ ∪D_k}`. The disc
    /// exclusion is tested exactly at `z`.
    pub fn near_removed(&self, r: f64, z: [f64; 2], tol: f64) -> bool {
        (r - z[0].hypot(z[1])).abs() <= tol && !self.discs.contains(z)
    }

    pub fn contains(&self, r: f64, z: [f64; 2], tol: f64) -> bool {
        self.in_ball(r, z) && !self.near_removed(r, z, tol)
    }

    /// `max{λ(z_n), −1}` on `D = {|z′| < |z_n|}` and `−1` off it.
    pub fn u(&self, r: f64, z: [f64; 2]) -> Result<f64> {
        if self.near_removed(r, z, 0.0) {
            return Err(Error::OnRemovedSet);
        }
        Ok(if r < z[0].hypot(z[1]) { self.potential.eval(z).max(-1.0) } else { -1.0 })
    }
}

/// Half-width `r` of the window `|z_n − 1/k| ≤ r`: nine tenths of the largest value
/// keeping `{|z′| ≤ 2/k} × window` inside the ball, and at most `1/(2k)`.
pub fn window_radius(k: u32) -> Result<f64> {
    let kf = k as f64;
    let room = 1.0 - (2.0 / kf).powi(2);
    if k < 3 || room <= 0.0 {
        return Err(Error::InvalidArgument(format!("k = {k} leaves no window inside the ball")));
    }
    let r = room.sqrt() - (1.0 - 1.0 / kf);
    if r <= 0.0 {
        return Err(Error::InvalidArgument(format!("k = {k} leaves no window inside the ball")));
    }
    Ok((0.9 * r).min(0.5 / kf))
}

/// The grid of `Ω_U = {|z′| ≤ 2/k, |z_n − 1/k| ≤ r} \ K` with `n` nodes per axis.
#[derive(Debug, Clone)]
pub struct WindowGrid {
    pub k: u32,
    pub radius: f64,
    pub spec: GridSpec,
    /// Nodes in the window disc, in the ball and farther than one cell from `K`.
    pub inside: Vec<bool>,
}

impl WindowGrid {
    pub fn new(domain: &CounterDomain, k: u32, radius: f64, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidGrid(format!("{n} nodes per axis")));
        }
        let kf = k as f64;
        let spec = GridSpec::from_bounds(&[0.0, 1.0 / kf - radius, -radius], &[2.0 / kf, 1.0 / kf + radius, radius], &[n, n, n])?;
        let tol = spec.max_spacing();
        let inside = (0..spec.len())
            .map(|i| {
                let p = spec.point(i);
                let z = [p[1], p[2]];
                (z[0] - 1.0 / kf).hypot(z[1]) <= radius && domain.contains(p[0], z, tol)
            })
            .collect();
        Ok(WindowGrid { k, radius, spec, inside })
    }

    pub fn centre(&self) -> [f64; 2] {
        [1.0 / self.k as f64, 0.0]
    }

    /// Nodes on the ring `|z′| = 2/k`.
    pub fn ring(&self) -> impl Iterator<Item = usize> + '_ {
        let last = self.spec.shape()[0] - 1;
        (0..self.spec.len()).filter(move |&i| self.inside[i] && self.spec.multi_index(i)[0] == last)
    }
}
