//! Lipschitz graphs `x = F(a)` over the unit base ball and their cap modification.

use crate::error::{Error, Result};
use crate::lowdisc::{cube_to_ball, cube_to_sphere, Kronecker};

/// Shape of the boundary function.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    Const(f64),
    /// `base + slope·|a − center|`; `slope` may be negative.
    Abs { base: f64, slope: f64, center: Vec<f64> },
    /// Piecewise linear in one base variable; constant beyond the end knots.
    Pwl { knots: Vec<f64>, values: Vec<f64> },
}

/// `F : B → [3C, 4C]` with `F(a) − F(b) ≤ C|a − b|`, in normalized graph coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzGraph {
    c: f64,
    base_dim: usize,
    kind: GraphKind,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl LipschitzGraph {
    /// Validates the range and Lipschitz conditions exactly for the three shapes.
    pub fn new(c: f64, base_dim: usize, kind: GraphKind) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Graph(format!("constant C = {c} must be positive")));
        }
        if !(1..=3).contains(&base_dim) {
            return Err(Error::Graph(format!("base dimension {base_dim} outside 1..=3")));
        }
        let tol = 1e-12 * c;
        let (lo, hi, lip) = match &kind {
            GraphKind::Const(v) => (*v, *v, 0.0),
            GraphKind::Abs { base, slope, center } => {
                if center.len() != base_dim {
                    return Err(Error::Graph("kink centre has wrong dimension".into()));
                }
                let far = norm(center) + 1.0;
                let near = (norm(center) - 1.0).max(0.0);
                let (a, b) = (base + slope * near, base + slope * far);
                (a.min(b), a.max(b), slope.abs())
            }
            GraphKind::Pwl { knots, values } => {
                if base_dim != 1 {
                    return Err(Error::Graph("piecewise-linear F needs a one-dimensional base".into()));
                }
                if knots.len() < 2 || knots.len() != values.len() {
                    return Err(Error::Graph("piecewise-linear F needs matching knots/values (>= 2)".into()));
                }
                if knots.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Graph("knots must be strictly increasing".into()));
                }
                let mut lip = 0.0f64;
                for i in 0..knots.len() - 1 {
                    if knots[i + 1] > -1.0 && knots[i] < 1.0 {
                        lip = lip.max(((values[i + 1] - values[i]) / (knots[i + 1] - knots[i])).abs());
                    }
                }
                let g = LipschitzGraph { c, base_dim, kind: kind.clone() };
                let mut pts = vec![-1.0, 1.0];
                pts.extend(knots.iter().filter(|k| k.abs() < 1.0));
                let vals: Vec<f64> = pts.iter().map(|&t| g.eval(&[t])).collect();
                (vals.iter().cloned().fold(f64::INFINITY, f64::min), vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max), lip)
            }
        };
        if lo < 3.0 * c - tol || hi > 4.0 * c + tol {
            return Err(Error::Graph(format!("range [{lo}, {hi}] not inside [3C, 4C] = [{}, {}]", 3.0 * c, 4.0 * c)));
        }
        if lip > c + tol {
            return Err(Error::Graph(format!("Lipschitz constant {lip} exceeds C = {c}")));
        }
        Ok(LipschitzGraph { c, base_dim, kind })
    }

    pub fn flat(c: f64, base_dim: usize) -> Self {
        LipschitzGraph { c, base_dim, kind: GraphKind::Const(3.0 * c) }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    /// `F(a)`; defined on all of ℝ^{m−1} by the natural extension of each shape.
    pub fn eval(&self, a: &[f64]) -> f64 {
        match &self.kind {
            GraphKind::Const(v) => *v,
            GraphKind::Abs { base, slope, center } => {
                let d: Vec<f64> = a.iter().zip(center).map(|(x, c)| x - c).collect();
                base + slope * norm(&d)
            }
            GraphKind::Pwl { knots, values } => {
                let t = a[0];
                let n = knots.len();
                if t <= knots[0] {
                    return values[0];
                }
                if t >= knots[n - 1] {
                    return values[n - 1];
                }
                let i = knots.partition_point(|&k| k <= t) - 1;
                let s = (t - knots[i]) / (knots[i + 1] - knots[i]);
                values[i] + s * (values[i + 1] - values[i])
            }
        }
    }

    /// `max{F(a), 5C√(1 − |a|²)}` for `|a| ≤ 1`.
    pub fn hat_f(&self, a: &[f64]) -> Result<f64> {
        let r2: f64 = a.iter().map(|x| x * x).sum();
        if r2 > 1.0 {
            return Err(Error::InvalidArgument(format!("|a| = {} > 1", r2.sqrt())));
        }
        Ok(self.eval(a).max(5.0 * self.c * (1.0 - r2).sqrt()))
    }

    /// Height of the top boundary of the cap `{x < F(a)} ∩ U` above `a`:
    /// `min{F(a), 5C√(1 − |a|²)}`.
    pub fn cap_height(&self, a: &[f64]) -> Result<f64> {
        let r2: f64 = a.iter().map(|x| x * x).sum();
        if r2 > 1.0 {
            return Err(Error::InvalidArgument(format!("|a| = {} > 1", r2.sqrt())));
        }
        Ok(self.eval(a).min(5.0 * self.c * (1.0 - r2).sqrt()))
    }

    /// The graph as a polyline `(s, x)` in a meridian plane, when it is one:
    /// `s = a` for a one-dimensional base, `s` = signed distance to the kink axis
    /// for `Abs`. `None` for `Const` (handled directly).
    pub(crate) fn meridian_polyline(&self) -> Option<Vec<(f64, f64)>> {
        const FAR: f64 = 1e3;
        match &self.kind {
            GraphKind::Const(_) => None,
            GraphKind::Abs { base, slope, .. } => {
                Some(vec![(-FAR, base + slope * FAR), (0.0, *base), (FAR, base + slope * FAR)])
            }
            GraphKind::Pwl { knots, values } => {
                let mut pts = vec![(knots[0] - FAR, values[0])];
                pts.extend(knots.iter().cloned().zip(values.iter().cloned()));
                pts.push((knots[knots.len() - 1] + FAR, values[values.len() - 1]));
                Some(pts)
            }
        }
    }
}

/// Supremum of `|f(a) − f(b)| / |a − b|` over deterministic pairs in the open ball
/// `B(center, radius)`. A lower bound on the Lipschitz constant there.
///
/// Pairs are `(a, a + t·e)` with `a` from a Kronecker sequence, `e` a unit
/// direction and `t` cycling through `radius·10^{-1} … radius·10^{-6}`.
pub fn lipschitz_estimate<F>(f: F, center: &[f64], radius: f64, pair_count: usize, seed: u64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if !(radius > 0.0) || center.is_empty() {
        return Err(Error::InvalidArgument("degenerate region".into()));
    }
    if pair_count < 1000 {
        return Err(Error::InvalidArgument(format!("pair_count {pair_count} < 1000")));
    }
    let dim = center.len();
    let mut seq = Kronecker::new(dim + dim.max(2), seed);
    let mut best = 0.0f64;
    let inside = |p: &[f64]| norm(&p.iter().zip(center).map(|(x, c)| x - c).collect::<Vec<_>>()) < radius;
    for i in 0..pair_count {
        let u = seq.next_point();
        let a = cube_to_ball(&ball_coords(&u[..dim.max(2)], dim), center, radius);
        let e = cube_to_sphere(&u[dim.max(2)..], dim);
        let t = radius * 10f64.powi(-((i % 6) as i32 + 1));
        let b: Vec<f64> = a.iter().zip(&e).map(|(x, d)| x + t * d).collect();
        if !inside(&a) || !inside(&b) {
            continue;
        }
        let dist = norm(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>());
        if dist > 0.0 {
            best = best.max((f(&a) - f(&b)).abs() / dist);
        }
    }
    Ok(best)
}

// cube coordinates for `cube_to_ball`: one radial coordinate plus m − 1 angular ones
fn ball_coords(u: &[f64], dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim.max(2));
    out.push(u[0]);
    for j in 1..dim.max(2) {
        out.push(u.get(j).copied().unwrap_or(0.5));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_graphs() {
        assert!(LipschitzGraph::new(1.0, 1, GraphKind::Const(2.9)).is_err());
        assert!(LipschitzGraph::new(1.0, 1, GraphKind::Abs { base: 3.0, slope: 1.5, center: vec![0.0] }).is_err());
        assert!(LipschitzGraph::new(1.0, 1, GraphKind::Abs { base: 3.0, slope: 0.5, center: vec![0.0] }).is_ok());
        assert!(LipschitzGraph::new(1.0, 1, GraphKind::Pwl { knots: vec![-1.0, 0.0, 1.0], values: vec![3.0, 3.9, 3.0] }).is_ok());
        assert!(LipschitzGraph::new(1.0, 1, GraphKind::Pwl { knots: vec![-1.0, 0.0, 1.0], values: vec![3.0, 4.0, 3.0] }).is_ok());
        assert!(LipschitzGraph::new(1.0, 1, GraphKind::Pwl { knots: vec![-1.0, -0.5, 1.0], values: vec![3.0, 3.9, 3.0] }).is_err());
    }

    #[test]
    fn hat_f_examples() {
        let c = 1.0;
        let g = LipschitzGraph::flat(c, 1);
        assert_eq!(g.hat_f(&[0.0]).unwrap(), 5.0 * c);
        // branches cross where 5C√(1 − t²) = 3C, i.e. t = 4/5
        let t = 0.8;
        assert!((5.0 * c * (1.0f64 - t * t).sqrt() - 3.0 * c).abs() < 1e-12);
        assert!((g.hat_f(&[t]).unwrap() - 3.0).abs() < 1e-12);
        assert!(g.hat_f(&[t - 0.01]).unwrap() > 3.0);
        assert_eq!(g.hat_f(&[t + 0.01]).unwrap(), 3.0);
        let g4 = LipschitzGraph::new(c, 1, GraphKind::Const(4.0)).unwrap();
        assert_eq!(g4.hat_f(&[1.0]).unwrap(), 4.0);
        assert!(g.hat_f(&[1.01]).is_err());
    }

    #[test]
    fn lipschitz_of_linear_and_constant() {
        let est = lipschitz_estimate(|a| 2.5 * a[0] - 1.0, &[0.0], 1.0, 2000, 1).unwrap();
        assert!((est - 2.5).abs() < 1e-9);
        let est = lipschitz_estimate(|a| 0.3 * a[0] + 1.2 * a[1], &[0.0, 0.0], 1.0, 4000, 1).unwrap();
        assert!(est <= 0.3f64.hypot(1.2) + 1e-9 && est > 0.3f64.hypot(1.2) - 1e-3);
        assert_eq!(lipschitz_estimate(|_| 4.0, &[0.0], 1.0, 1000, 0).unwrap(), 0.0);
        assert!(lipschitz_estimate(|_| 4.0, &[0.0], 0.0, 1000, 0).is_err());
        assert!(lipschitz_estimate(|_| 4.0, &[0.0], 1.0, 10, 0).is_err());
    }

    #[test]
    fn hat_f_lipschitz_attains_twenty_thirds() {
        let g = LipschitzGraph::flat(1.0, 1);
        let est = lipschitz_estimate(|a| g.hat_f(a).unwrap(), &[0.0], 0.8, 20_000, 3).unwrap();
        assert!(est <= 20.0 / 3.0 + 1e-9);
        assert!(est >= 20.0 / 3.0 - 0.05, "{est}");
    }
}
