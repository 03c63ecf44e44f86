//! Downward shift cones.

use crate::error::{Error, Result};
use crate::lowdisc::cube_to_sphere;

/// Open cone with apex at the origin opening towards `−x_m`.
#[derive(Debug, Clone, PartialEq)]
pub enum Cone {
    /// `{(a, x) : −ε < x < −slope·|a|}`; the interior-regularization cone with slope 7C.
    Theorem { eps: f64, slope: f64, dim: usize },
    /// `{(x′, x_m) : −depth < x_m < −slope·|x′|}` together with the radius of the
    /// ball `B(P, radius)` it is attached to in the continuity lemma.
    Lemma { depth: f64, slope: f64, radius: f64, dim: usize },
}

fn lateral_norm(w: &[f64]) -> f64 {
    w[..w.len() - 1].iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Cone {
    pub fn theorem(eps: f64, slope: f64, dim: usize) -> Result<Self> {
        if !(eps >= 0.0) || !(slope >= 0.0) || !(2..=4).contains(&dim) {
            return Err(Error::InvalidArgument(format!("cone eps={eps} slope={slope} dim={dim}")));
        }
        Ok(Cone::Theorem { eps, slope, dim })
    }

    pub fn lemma(depth: f64, slope: f64, radius: f64, dim: usize) -> Result<Self> {
        if !(depth >= 0.0) || !(slope >= 0.0) || !(radius > 0.0) || !(2..=4).contains(&dim) {
            return Err(Error::InvalidArgument(format!("cone depth={depth} slope={slope} radius={radius}")));
        }
        Ok(Cone::Lemma { depth, slope, radius, dim })
    }

    pub fn height(&self) -> f64 {
        match *self {
            Cone::Theorem { eps, .. } => eps,
            Cone::Lemma { depth, .. } => depth,
        }
    }

    pub fn slope(&self) -> f64 {
        match *self {
            Cone::Theorem { slope, .. } | Cone::Lemma { slope, .. } => slope,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Cone::Theorem { dim, .. } | Cone::Lemma { dim, .. } => dim,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.height() <= 0.0
    }

    /// Membership of the shift `w` in the open cone.
    pub fn contains(&self, w: &[f64]) -> bool {
        let x = w[w.len() - 1];
        -self.height() < x && x < -self.slope() * lateral_norm(w)
    }

    /// Membership in the closure.
    pub fn contains_closed(&self, w: &[f64]) -> bool {
        const TOL: f64 = 1e-12;
        let x = w[w.len() - 1];
        let h = self.height();
        h > 0.0 && -h * (1.0 + TOL) <= x && x <= -self.slope() * lateral_norm(w) + TOL * h
    }

    /// Nonzero lattice shifts `(i_1 h_1, …, −j h_m)` in the closed cone.
    pub fn lattice_points(&self, spacing: &[f64]) -> Vec<Vec<f64>> {
        let m = self.dim();
        let mut out = Vec::new();
        if self.is_empty() {
            return out;
        }
        let h = self.height();
        let jmax = (h * (1.0 + 1e-12) / spacing[m - 1]).floor() as i64;
        for j in 1..=jmax {
            let x = -(j as f64) * spacing[m - 1];
            let lateral = if self.slope() > 0.0 { -x / self.slope() } else { f64::INFINITY };
            let bounds: Vec<i64> = (0..m - 1)
                .map(|a| if lateral.is_finite() { (lateral * (1.0 + 1e-12) / spacing[a]).floor() as i64 } else { 0 })
                .collect();
            let mut idx = bounds.iter().map(|b| -b).collect::<Vec<_>>();
            loop {
                let mut w: Vec<f64> = idx.iter().enumerate().map(|(a, &i)| i as f64 * spacing[a]).collect();
                w.push(x);
                if self.contains_closed(&w) {
                    out.push(w);
                }
                // odometer over the lateral box
                let mut a = 0;
                loop {
                    if a == m - 1 {
                        break;
                    }
                    if idx[a] < bounds[a] {
                        idx[a] += 1;
                        break;
                    }
                    idx[a] = -bounds[a];
                    a += 1;
                }
                if a == m - 1 {
                    break;
                }
            }
        }
        out
    }

    /// Points on the rim `{x_m = −height, |x′| = height/slope}`.
    pub fn rim(&self, count: usize) -> Vec<Vec<f64>> {
        self.ring_at(1.0, 1.0, count)
    }

    fn ring_at(&self, depth_frac: f64, lateral_frac: f64, count: usize) -> Vec<Vec<f64>> {
        let m = self.dim();
        let x = -depth_frac * self.height();
        let r = if self.slope() > 0.0 { lateral_frac * depth_frac * self.height() / self.slope() } else { 0.0 };
        let dirs: Vec<Vec<f64>> = match m - 1 {
            1 => vec![vec![-1.0], vec![1.0]],
            2 => (0..count.max(4))
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / count.max(4) as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect(),
            _ => {
                // Fibonacci sphere
                let n = count.max(8);
                let golden = (1.0 + 5f64.sqrt()) / 2.0;
                (0..n)
                    .map(|k| cube_to_sphere(&[(k as f64 + 0.5) / n as f64, (k as f64 / golden).fract()], 3))
                    .collect()
            }
        };
        dirs.into_iter()
            .map(|d| {
                let mut w: Vec<f64> = d.iter().map(|c| r * c).collect();
                w.push(x);
                w
            })
            .collect()
    }

    /// Discrete hull of the closed cone: apex, lattice points, rim.
    pub fn closed_hull(&self, spacing: &[f64]) -> Vec<Vec<f64>> {
        if self.is_empty() {
            return Vec::new();
        }
        let mut out = vec![vec![0.0; self.dim()]];
        out.extend(self.lattice_points(spacing));
        out.extend(self.rim(16));
        out
    }

    /// Deterministic sample of the open cone: lattice points strictly inside plus
    /// rings at several depths pulled slightly inward from the lateral boundary.
    pub fn open_sample(&self, spacing: &[f64]) -> Vec<Vec<f64>> {
        if self.is_empty() {
            return Vec::new();
        }
        let mut out: Vec<Vec<f64>> = self.lattice_points(spacing).into_iter().filter(|w| self.contains(w)).collect();
        for depth in [0.125, 0.25, 0.5, 0.75, 0.97] {
            for lateral in [0.0, 0.5, 0.95] {
                let ring = if lateral == 0.0 { self.ring_at(depth, 0.0, 1).into_iter().take(1).collect() } else { self.ring_at(depth, lateral, 8) };
                out.extend(ring.into_iter().filter(|w| self.contains(w)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership() {
        let k = Cone::theorem(0.5, 7.0, 2).unwrap();
        assert!(k.contains(&[0.0, -0.25]));
        assert!(k.contains(&[0.03, -0.25]));
        assert!(!k.contains(&[0.04, -0.25]));
        assert!(!k.contains(&[0.0, -0.5]));
        assert!(!k.contains(&[0.0, 0.0]));
        assert!(Cone::theorem(0.0, 7.0, 2).unwrap().is_empty());
        let l = Cone::lemma(1.0, 1.0, 0.5, 3).unwrap();
        assert!(l.contains(&[0.1, 0.1, -0.5]));
        assert!(!l.contains(&[0.5, 0.5, -0.5]));
    }

    #[test]
    fn lattice_points_lie_in_closure() {
        let k = Cone::theorem(0.25, 1.0, 2).unwrap();
        let pts = k.lattice_points(&[1.0 / 32.0, 1.0 / 32.0]);
        // rows j = 1..8 hold 2j + 1 points each
        assert_eq!(pts.len(), (1..=8).map(|j| 2 * j + 1).sum::<usize>());
        assert!(pts.iter().all(|w| k.contains_closed(w)));
        let k4 = Cone::theorem(0.5, 2.0, 4).unwrap();
        assert!(k4.lattice_points(&[0.1; 4]).iter().all(|w| k4.contains_closed(w)));
    }

    #[test]
    fn open_sample_is_open() {
        for dim in 2..=4 {
            let k = Cone::theorem(0.3, 7.0, dim).unwrap();
            let s = k.open_sample(&vec![0.01; dim]);
            assert!(!s.is_empty());
            assert!(s.iter().all(|w| k.contains(w)));
        }
    }
}
