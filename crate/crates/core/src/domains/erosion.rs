//! Cone erosions `Ω_k = {z : z + k·K_ε ⊂ Ω}` and the compact core `L_ε`.

use rayon::prelude::*;

use super::cap::{CapDomain, Region};
use super::cone::Cone;
use crate::error::{Error, Result, ViolatingPair};
use crate::grid::GridSpec;

/// Node set of an erosion on a grid.
#[derive(Debug, Clone)]
pub struct ErosionMask {
    pub keep: Vec<bool>,
    pub warnings: Vec<String>,
}

impl ErosionMask {
    pub fn count(&self) -> usize {
        self.keep.iter().filter(|&&b| b).count()
    }
}

/// Nodes `z ∈ region` with `z + k·w ∈ region` for every `w` of the discrete closed
/// hull of `cone`. An empty cone gives the node set of the region itself.
pub fn erosion_set<R: Region + ?Sized>(region: &R, spec: &GridSpec, cone: &Cone, k: u32) -> Result<ErosionMask> {
    if k == 0 {
        return Err(Error::InvalidArgument("erosion factor k must be ≥ 1".into()));
    }
    if cone.dim() != spec.rank() || region.dim() != spec.rank() {
        return Err(Error::GridMismatch);
    }
    let hull: Vec<Vec<f64>> = cone
        .closed_hull(spec.spacing())
        .into_iter()
        .map(|w| w.iter().map(|c| c * k as f64).collect())
        .collect();
    let keep: Vec<bool> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let z = spec.point(i);
            if !region.contains(&z) {
                return false;
            }
            hull.iter().all(|w| {
                let p: Vec<f64> = z.iter().zip(w).map(|(a, b)| a + b).collect();
                region.contains(&p)
            })
        })
        .collect();
    let mut warnings = Vec::new();
    if keep.iter().all(|&b| !b) {
        warnings.push(format!("erosion with k={k} is empty"));
    }
    Ok(ErosionMask { keep, warnings })
}

/// Erosion of a cap domain; warns when the cone slope is not `7C`.
pub fn cap_erosion(domain: &CapDomain, spec: &GridSpec, cone: &Cone, k: u32) -> Result<ErosionMask> {
    let mut mask = erosion_set(domain, spec, cone, k)?;
    let expected = 7.0 * domain.graph().c();
    if (cone.slope() - expected).abs() > 1e-12 * expected.max(1.0) {
        mask.warnings.push(format!("cone slope {} differs from 7C = {expected}", cone.slope()));
    }
    Ok(mask)
}

/// The compact core: nodes of `Ω₂` with some shift `w ∈ K_ε` satisfying
/// `dist(z + w, ∂Ω) ≤ dist(z, ∂Ω)`.
#[derive(Debug, Clone)]
pub struct CompactCore {
    pub nodes: Vec<usize>,
    pub omega1: ErosionMask,
    pub omega2: ErosionMask,
}

fn split_lattice(shifts: Vec<Vec<f64>>, spec: &GridSpec) -> (Vec<Vec<isize>>, Vec<Vec<f64>>) {
    let mut lattice = Vec::new();
    let mut off_lattice = Vec::new();
    for w in shifts {
        let steps: Vec<f64> = w.iter().zip(spec.spacing()).map(|(c, h)| c / h).collect();
        if steps.iter().all(|s| (s - s.round()).abs() < 1e-9) {
            lattice.push(steps.iter().map(|s| s.round() as isize).collect());
        } else {
            off_lattice.push(w);
        }
    }
    (lattice, off_lattice)
}

/// Node membership and boundary distances of a cap domain, shared by the compact
/// cores of several `ε`. Shifts that land on nodes are answered from the tables.
pub struct CoreBuilder<'a> {
    domain: &'a CapDomain,
    spec: GridSpec,
    inside: Vec<bool>,
    dist: Vec<Option<f64>>,
}

impl<'a> CoreBuilder<'a> {
    pub fn new(domain: &'a CapDomain, spec: &GridSpec) -> Result<Self> {
        if domain.ambient_dim() != spec.rank() {
            return Err(Error::GridMismatch);
        }
        let dist: Vec<Option<f64>> = (0..spec.len()).into_par_iter().map(|i| domain.distance(&spec.point(i)).ok()).collect();
        let inside = (0..spec.len()).into_par_iter().map(|i| domain.contains(&spec.point(i))).collect();
        Ok(CoreBuilder { domain, spec: spec.clone(), inside, dist })
    }

    fn erosion(&self, cone: &Cone, k: u32) -> ErosionMask {
        let spec = &self.spec;
        let hull = cone.closed_hull(spec.spacing()).into_iter().map(|w| w.iter().map(|c| c * k as f64).collect()).collect();
        let (lattice, off_lattice) = split_lattice(hull, spec);
        let keep: Vec<bool> = (0..spec.len())
            .into_par_iter()
            .map(|i| {
                if !self.inside[i] {
                    return false;
                }
                let z = spec.point(i);
                let multi = spec.multi_index(i);
                lattice.iter().all(|off| match spec.offset_from(i, &multi, off) {
                    Some(j) => self.inside[j],
                    None => self.domain.contains(&z.iter().zip(off).zip(spec.spacing()).map(|((a, &o), h)| a + o as f64 * h).collect::<Vec<_>>()),
                }) && off_lattice.iter().all(|w| self.domain.contains(&z.iter().zip(w).map(|(a, b)| a + b).collect::<Vec<_>>()))
            })
            .collect();
        let mut warnings = Vec::new();
        if keep.iter().all(|&b| !b) {
            warnings.push(format!("erosion with k={k} is empty"));
        }
        ErosionMask { keep, warnings }
    }

    /// Computes `L_ε` and checks that it stays at least one grid cell below the graph,
    /// the part of `∂Ω` that `Ω₁` reaches. Near the ellipsoid wall `Ω₂` is
    /// separated from `∂Ω₁` by the cone itself.
    pub fn core(&self, eps: f64) -> Result<CompactCore> {
        let spec = &self.spec;
        let domain = self.domain;
        let m = spec.rank();
        let cone = Cone::theorem(eps, 7.0 * domain.graph().c(), m)?;
        let omega1 = self.erosion(&cone, 1);
        let omega2 = self.erosion(&cone, 2);
        if omega2.count() == 0 {
            return Err(Error::NoCompactCore { violations: Vec::new() });
        }
        let (lattice, off_lattice) = split_lattice(cone.open_sample(spec.spacing()), spec);
        let dist = &self.dist;
        let nodes: Vec<usize> = (0..spec.len())
            .into_par_iter()
            .filter(|&i| {
                if !omega2.keep[i] {
                    return false;
                }
                let Some(d0) = dist[i] else { return false };
                let z = spec.point(i);
                let multi = spec.multi_index(i);
                lattice.iter().any(|off| spec.offset_from(i, &multi, off).and_then(|j| dist[j]).is_some_and(|d| d <= d0))
                    || off_lattice.iter().any(|w| {
                        let p: Vec<f64> = z.iter().zip(w).map(|(a, b)| a + b).collect();
                        domain.distance(&p).map(|d| d <= d0).unwrap_or(false)
                    })
            })
            .collect();
        let mut violations = Vec::new();
        let offsets = neighbourhood_offsets(m);
        for &i in &nodes {
            for off in &offsets {
                match spec.offset(i, off) {
                    Some(j) if domain.below_graph(&spec.point(j)) => {}
                    _ => violations.push(ViolatingPair {
                        node: i,
                        shift: off.iter().zip(spec.spacing()).map(|(&o, h)| o as f64 * h).collect(),
                    }),
                }
            }
        }
        if !violations.is_empty() {
            return Err(Error::NoCompactCore { violations });
        }
        Ok(CompactCore { nodes, omega1, omega2 })
    }
}

/// One-off [`CoreBuilder::core`].
pub fn compact_core(domain: &CapDomain, spec: &GridSpec, eps: f64) -> Result<CompactCore> {
    CoreBuilder::new(domain, spec)?.core(eps)
}

/// All offsets in `{−1, 0, 1}^m`.
pub fn neighbourhood_offsets(m: usize) -> Vec<Vec<isize>> {
    let mut out = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|v: Vec<isize>| {
                (-1..=1).map(move |d| {
                    let mut w = v.clone();
                    w.push(d);
                    w
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::cap::{BoxRegion, HalfSpace};
    use crate::domains::graph::LipschitzGraph;

    #[test]
    fn half_space_erosion_is_a_shift() {
        let spec = GridSpec::from_bounds(&[-1.0, -1.0], &[1.0, 1.0], &[41, 41]).unwrap();
        let h = HalfSpace { dim: 2, level: 0.5 };
        let cone = Cone::theorem(0.3, 2.0, 2).unwrap();
        // shifts go downward, so the half-space is invariant
        let e = erosion_set(&h, &spec, &cone, 1).unwrap();
        for i in 0..spec.len() {
            assert_eq!(e.keep[i], h.contains(&spec.point(i)));
        }
    }

    #[test]
    fn box_erosion_raises_the_floor() {
        let spec = GridSpec::from_bounds(&[-1.0, -1.0], &[1.0, 1.0], &[41, 41]).unwrap();
        let b = BoxRegion { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] };
        let cone = Cone::theorem(0.31, 1e6, 2).unwrap();
        let e1 = erosion_set(&b, &spec, &cone, 1).unwrap();
        let e2 = erosion_set(&b, &spec, &cone, 2).unwrap();
        for i in 0..spec.len() {
            let p = spec.point(i);
            let inside = b.contains(&p);
            assert_eq!(e1.keep[i], inside && p[1] > -0.69);
            assert!(!e2.keep[i] || e1.keep[i]);
        }
    }

    #[test]
    fn unit_square_matches_exhaustive_lattice_check() {
        let spec = GridSpec::from_bounds(&[0.0, 0.0], &[1.0, 1.0], &[33, 33]).unwrap();
        let b = BoxRegion { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
        let e = erosion_set(&b, &spec, &Cone::theorem(0.25, 1.0, 2).unwrap(), 1).unwrap();
        let h = 1.0 / 32.0;
        for i in 0..spec.len() {
            let z = spec.point(i);
            let mut ok = b.contains(&z);
            for j in 0..=8i32 {
                for l in -j..=j {
                    let p = [z[0] + l as f64 * h, z[1] - j as f64 * h];
                    ok &= b.contains(&p);
                }
            }
            assert_eq!(e.keep[i], ok, "node {z:?}");
        }
    }

    #[test]
    fn erosions_nest_and_empty_cone_is_identity() {
        let dom = CapDomain::new(LipschitzGraph::flat(1.0, 1));
        let spec = dom.grid(&[33, 65]).unwrap();
        let cone = Cone::theorem(0.4, 7.0, 2).unwrap();
        let e1 = cap_erosion(&dom, &spec, &cone, 1).unwrap();
        let e2 = cap_erosion(&dom, &spec, &cone, 2).unwrap();
        assert!(e2.count() > 0);
        assert!((0..spec.len()).all(|i| !e2.keep[i] || e1.keep[i]));
        let empty = erosion_set(&dom, &spec, &Cone::theorem(0.0, 7.0, 2).unwrap(), 1).unwrap();
        assert!((0..spec.len()).all(|i| empty.keep[i] == dom.contains(&spec.point(i))));
        let off = cap_erosion(&dom, &spec, &Cone::theorem(0.4, 5.0, 2).unwrap(), 1).unwrap();
        assert!(off.warnings.iter().any(|w| w.contains("7C")));
    }

    #[test]
    fn compact_core_grows_towards_the_ellipsoid() {
        for top in [3.5, 4.0] {
            let g = LipschitzGraph::new(1.0, 1, crate::domains::graph::GraphKind::Const(top)).unwrap();
            let dom = CapDomain::new(g);
            let spec = dom.grid(&[257, 129]).unwrap();
            let mut prev: Vec<usize> = Vec::new();
            for eps in [0.4, 0.2, 0.1] {
                let core = compact_core(&dom, &spec, eps).unwrap();
                assert!(core.nodes.len() >= prev.len());
                // nodes that join L as ε shrinks sit on the ellipsoid side
                for &i in core.nodes.iter().filter(|i| !prev.is_empty() && prev.binary_search(i).is_err()) {
                    let z = spec.point(i);
                    assert!(dom.dist_to_u(&z) <= dom.dist_to_graph(&z), "{top} {eps} {z:?}");
                }
                prev = core.nodes;
            }
        }
        let dom = CapDomain::new(LipschitzGraph::flat(1.0, 1));
        assert!(compact_core(&dom, &dom.grid(&[33, 65]).unwrap(), 10.0).is_err());
    }
}
