//! The cap `Ω = {x < F(a)} ∩ U` with `U = {|a|² + (x/5C)² < 1}` and its distance functions.

use super::graph::LipschitzGraph;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// An open subset of ℝ^m given by a membership test.
pub trait Region: Sync {
    fn dim(&self) -> usize;
    fn contains(&self, p: &[f64]) -> bool;
}

/// Open axis-aligned box.
#[derive(Debug, Clone)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region for BoxRegion {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| l < x && x < h)
    }
}

/// `{x_m < level}`.
#[derive(Debug, Clone)]
pub struct HalfSpace {
    pub dim: usize,
    pub level: f64,
}

impl Region for HalfSpace {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, p: &[f64]) -> bool {
        p[self.dim - 1] < self.level
    }
}

#[derive(Debug, Clone)]
pub struct CapDomain {
    graph: LipschitzGraph,
}

fn split(z: &[f64]) -> (&[f64], f64) {
    (&z[..z.len() - 1], z[z.len() - 1])
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl CapDomain {
    pub fn new(graph: LipschitzGraph) -> Self {
        CapDomain { graph }
    }

    pub fn graph(&self) -> &LipschitzGraph {
        &self.graph
    }

    /// Ambient real dimension `m = base_dim + 1`.
    pub fn ambient_dim(&self) -> usize {
        self.graph.base_dim() + 1
    }

    /// Semi-axis of `U` along `x`.
    pub fn height_axis(&self) -> f64 {
        5.0 * self.graph.c()
    }

    pub fn in_u(&self, z: &[f64]) -> bool {
        let (a, x) = split(z);
        let t = x / self.height_axis();
        a.iter().map(|v| v * v).sum::<f64>() + t * t < 1.0
    }

    pub fn below_graph(&self, z: &[f64]) -> bool {
        let (a, x) = split(z);
        x < self.graph.eval(a)
    }

    /// Box `[-1, 1]^{m−1} × [−5C, sup F]` containing the cap.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.ambient_dim();
        let mut lo = vec![-1.0; m];
        let mut hi = vec![1.0; m];
        lo[m - 1] = -self.height_axis();
        hi[m - 1] = 4.0 * self.graph.c();
        (lo, hi)
    }

    /// Grid over the bounding box with `nodes` per axis.
    pub fn grid(&self, nodes: &[usize]) -> Result<GridSpec> {
        let (lo, hi) = self.bounding_box();
        GridSpec::from_bounds(&lo, &hi, nodes)
    }

    /// Isotropic grid: `n_height` nodes along `x`, lateral counts chosen to match the spacing.
    pub fn isotropic_grid(&self, n_height: usize) -> Result<GridSpec> {
        let (lo, hi) = self.bounding_box();
        let m = self.ambient_dim();
        let h = (hi[m - 1] - lo[m - 1]) / (n_height - 1) as f64;
        let lateral = ((2.0 / h).ceil() as usize + 1).max(3);
        let half = (lateral - 1) as f64 * h / 2.0;
        let mut shape = vec![lateral; m];
        shape[m - 1] = n_height;
        let mut origin = vec![-half; m];
        origin[m - 1] = lo[m - 1];
        GridSpec::new(shape, origin, vec![h; m])
    }

    /// Euclidean distance from `z` to the extended graph `{x = F(a)}`.
    pub fn dist_to_graph(&self, z: &[f64]) -> f64 {
        let (a, x) = split(z);
        match self.graph.meridian_polyline() {
            None => (self.graph.eval(a) - x).abs(),
            Some(poly) => {
                let s = match self.graph.kind() {
                    super::graph::GraphKind::Abs { center, .. } => {
                        norm(&a.iter().zip(center).map(|(p, c)| p - c).collect::<Vec<_>>())
                    }
                    _ => a[0],
                };
                dist_to_polyline(&poly, s, x)
            }
        }
    }

    /// Euclidean distance from `z` to the ellipsoid `∂U`.
    pub fn dist_to_u(&self, z: &[f64]) -> f64 {
        let (a, x) = split(z);
        dist_point_ellipse(1.0, self.height_axis(), norm(a), x.abs())
    }

    /// `dist(z, ∂Ω)` for `z ∈ Ω`: the smaller of the distances to the graph and to `∂U`.
    pub fn distance(&self, z: &[f64]) -> Result<f64> {
        if !self.contains(z) {
            return Err(Error::OutsideDomain(z.to_vec()));
        }
        Ok(self.dist_to_graph(z).min(self.dist_to_u(z)))
    }

    /// `d = −log dist(·, ∂Ω)` on the cap nodes.
    pub fn log_distance_field(&self, spec: &GridSpec) -> Result<ScalarField> {
        ScalarField::build(spec.clone(), |z| -(self.dist_to_graph(z).min(self.dist_to_u(z))).ln(), |z| self.contains(z))
    }

    /// `d′ = −log dist(·, ∂U)` on the cap nodes.
    pub fn log_distance_u_field(&self, spec: &GridSpec) -> Result<ScalarField> {
        ScalarField::build(spec.clone(), |z| -self.dist_to_u(z).ln(), |z| self.contains(z))
    }

    /// Measured Lipschitz constant of the top boundary height `min{F, 5C√(1−|a|²)}`
    /// on `|a| < 0.81`, a neighbourhood of the set where it equals `F`.
    pub fn effective_lipschitz(&self, pair_count: usize, seed: u64) -> Result<f64> {
        let center = vec![0.0; self.graph.base_dim()];
        super::graph::lipschitz_estimate(|a| self.graph.cap_height(a).unwrap_or(f64::NAN), &center, 0.81, pair_count, seed)
    }
}

impl Region for CapDomain {
    fn dim(&self) -> usize {
        self.ambient_dim()
    }

    fn contains(&self, z: &[f64]) -> bool {
        self.in_u(z) && self.below_graph(z)
    }
}

fn dist_to_polyline(poly: &[(f64, f64)], s: f64, x: f64) -> f64 {
    let mut best = f64::INFINITY;
    for w in poly.windows(2) {
        let (p, q) = (w[0], w[1]);
        let (dx, dy) = (q.0 - p.0, q.1 - p.1);
        let len2 = dx * dx + dy * dy;
        let t = (((s - p.0) * dx + (x - p.1) * dy) / len2).clamp(0.0, 1.0);
        let (cx, cy) = (p.0 + t * dx, p.1 + t * dy);
        best = best.min((s - cx).hypot(x - cy));
    }
    best
}

/// Distance from `(y0, y1)`, `y0, y1 ≥ 0`, to the ellipse `(x0/e0)² + (x1/e1)² = 1`.
pub fn dist_point_ellipse(e0: f64, e1: f64, y0: f64, y1: f64) -> f64 {
    if e0 < e1 {
        return dist_point_ellipse(e1, e0, y1, y0);
    }
    // now e0 ≥ e1
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g != 0.0 {
                let r0 = (e0 / e1) * (e0 / e1);
                let sbar = robust_root(r0, z0, z1, g);
                let x0 = r0 * y0 / (sbar + r0);
                let x1 = y1 / (sbar + 1.0);
                (x0 - y0).hypot(x1 - y1)
            } else {
                0.0
            }
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer0 = e0 * y0;
        let denom0 = e0 * e0 - e1 * e1;
        if numer0 < denom0 {
            let xde0 = numer0 / denom0;
            let x0 = e0 * xde0;
            let x1 = e1 * (1.0 - xde0 * xde0).max(0.0).sqrt();
            (x0 - y0).hypot(x1)
        } else {
            (y0 - e0).abs()
        }
    }
}

fn robust_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..200 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        let gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if gs > 0.0 {
            s0 = s;
        } else if gs < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::graph::GraphKind;

    fn flat() -> CapDomain {
        CapDomain::new(LipschitzGraph::flat(1.0, 1))
    }

    // brute-force distance to a dense sample of ∂Ω
    fn brute_distance(dom: &CapDomain, z: &[f64]) -> f64 {
        let c = dom.graph().c();
        let n = 200_000;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            let t = -1.0 + 2.0 * i as f64 / n as f64;
            let top = dom.graph().cap_height(&[t]).unwrap();
            best = best.min((z[0] - t).hypot(z[1] - top));
            let theta = std::f64::consts::PI * 2.0 * i as f64 / n as f64;
            let (ea, ex) = (theta.cos(), 5.0 * c * theta.sin());
            if ex <= dom.graph().eval(&[ea]) {
                best = best.min((z[0] - ea).hypot(z[1] - ex));
            }
        }
        best
    }

    #[test]
    fn origin_distance_matches_brute_force() {
        let dom = flat();
        let d = dom.distance(&[0.0, 0.0]).unwrap();
        let brute = brute_distance(&dom, &[0.0, 0.0]);
        assert!((d - brute).abs() < 1e-6, "{d} vs {brute}");
        // the nearest point of ∂U from the centre lies on the shortest semi-axis
        assert!((dom.dist_to_u(&[0.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((dom.dist_to_graph(&[0.0, 0.0]) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn distances_match_brute_force_for_kinked_graphs() {
        let g = LipschitzGraph::new(1.0, 1, GraphKind::Abs { base: 3.2, slope: 0.7, center: vec![0.1] }).unwrap();
        let dom = CapDomain::new(g);
        for z in [[0.3, 2.9], [-0.7, 1.0], [0.05, -4.0], [0.6, 3.0]] {
            if !dom.contains(&z) {
                continue;
            }
            let d = dom.distance(&z).unwrap();
            let brute = brute_distance(&dom, &z);
            assert!((d - brute).abs() < 1e-4, "{z:?}: {d} vs {brute}");
        }
    }

    #[test]
    fn ellipse_centre_distance_is_smallest_axis() {
        for c in [0.1, 0.2, 1.0, 2.0] {
            let dom = CapDomain::new(LipschitzGraph::flat(c, 1));
            let expect = (5.0f64 * c).min(1.0);
            assert!((dom.dist_to_u(&[0.0, 0.0]) - expect).abs() < 1e-12);
            let dprime = -dom.dist_to_u(&[0.0, 0.0]).ln();
            assert!((dprime + expect.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_decreases_towards_boundary() {
        let dom = flat();
        let mut last = f64::INFINITY;
        for i in 0..50 {
            let x = 2.5 + 0.5 * (1.0 - 0.9f64.powi(i));
            let d = dom.distance(&[0.0, x]).unwrap();
            assert!(d < last);
            last = d;
        }
        assert!(dom.distance(&[0.0, 3.5]).is_err());
    }

    #[test]
    fn membership_flips_at_cap_height() {
        let g = LipschitzGraph::new(1.0, 1, GraphKind::Pwl { knots: vec![-1.0, -0.2, 0.4, 1.0], values: vec![3.1, 3.7, 3.4, 3.9] }).unwrap();
        let dom = CapDomain::new(g);
        for i in 1..200 {
            let a = -0.99 + 1.98 * i as f64 / 200.0;
            let top = dom.graph().cap_height(&[a]).unwrap();
            if top <= 0.0 {
                continue;
            }
            assert!(dom.contains(&[a, top - 1e-9]));
            assert!(!dom.contains(&[a, top + 1e-9]));
        }
    }

    #[test]
    fn effective_constant_below_seven_c() {
        for c in [0.5, 1.0, 2.0] {
            let dom = CapDomain::new(LipschitzGraph::flat(c, 1));
            let cp = dom.effective_lipschitz(20_000, 0).unwrap();
            assert!(cp < 7.0 * c, "{cp}");
        }
    }
}
