//! Clamped Pasch–Hausdorff sup-convolution
//! `φ_k(z) = max_w [max(u(w), −k) − k|z − w|] + 1/k`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

const LEAF: usize = 16;

struct Tree {
    // node coordinates and clamped values, permuted into tree order
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    nodes: Vec<TreeNode>,
}

struct TreeNode {
    lo: Vec<f64>,
    hi: Vec<f64>,
    max: f64,
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

impl Tree {
    fn build(points: Vec<Vec<f64>>, values: Vec<f64>) -> Tree {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        Self::split(&points, &values, &mut order, 0, points.len(), &mut nodes);
        let points = order.iter().map(|&i| points[i].clone()).collect();
        let values = order.iter().map(|&i| values[i]).collect();
        Tree { points, values, nodes }
    }

    fn split(points: &[Vec<f64>], values: &[f64], order: &mut [usize], start: usize, end: usize, nodes: &mut Vec<TreeNode>) -> usize {
        let m = points[order[start]].len();
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        let mut max = f64::NEG_INFINITY;
        for &i in &order[start..end] {
            for j in 0..m {
                lo[j] = lo[j].min(points[i][j]);
                hi[j] = hi[j].max(points[i][j]);
            }
            max = max.max(values[i]);
        }
        let id = nodes.len();
        nodes.push(TreeNode { lo: lo.clone(), hi: hi.clone(), max, start, end, children: None });
        if end - start > LEAF {
            let axis = (0..m).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap();
            let slice = &mut order[start..end];
            // ties broken by index so the layout is deterministic
            slice.sort_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b)));
            let mid = start + (end - start) / 2;
            let left = Self::split(points, values, order, start, mid, nodes);
            let right = Self::split(points, values, order, mid, end, nodes);
            nodes[id].children = Some((left, right));
        }
        id
    }

    fn box_distance(node: &TreeNode, z: &[f64]) -> f64 {
        let mut s = 0.0;
        for j in 0..z.len() {
            let d = if z[j] < node.lo[j] {
                node.lo[j] - z[j]
            } else if z[j] > node.hi[j] {
                z[j] - node.hi[j]
            } else {
                0.0
            };
            s += d * d;
        }
        s.sqrt()
    }

    fn query(&self, z: &[f64], k: f64, mut best: f64) -> f64 {
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let bound = node.max - k * Self::box_distance(node, z);
            // margin keeps pruning exact despite rounding in the bound
            if bound < best - 1e-12 * (1.0 + best.abs()) {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    let dl = Self::box_distance(&self.nodes[l], z);
                    let dr = Self::box_distance(&self.nodes[r], z);
                    if dl <= dr {
                        stack.push(r);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(r);
                    }
                }
                None => {
                    for i in node.start..node.end {
                        let p = &self.points[i];
                        let d = p.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                        best = best.max(self.values[i] - k * d);
                    }
                }
            }
        }
        best
    }
}

fn lattice_point(spec: &GridSpec, i: usize) -> Vec<f64> {
    // coordinates relative to the origin keep distances identical for every query
    spec.multi_index(i).iter().zip(spec.spacing()).map(|(&n, h)| n as f64 * h).collect()
}

/// `φ_k` on the inside nodes of `u`. Exactly nonincreasing in `k` and `≥ u + 1/k`.
pub fn sup_convolution(u: &ScalarField, k: f64) -> Result<ScalarField> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidArgument(format!("sup-convolution index {k}")));
    }
    let spec = u.spec();
    let inside: Vec<usize> = u.inside_indices().collect();
    if inside.is_empty() {
        return Err(Error::EmptyMask("sup-convolution of an empty field".into()));
    }
    let clamped: Vec<f64> = inside.iter().map(|&i| u.value(i).max(-k)).collect();
    let points: Vec<Vec<f64>> = inside.iter().map(|&i| lattice_point(spec, i)).collect();
    let tree = Tree::build(points.clone(), clamped.clone());
    let out: Vec<f64> = (0..inside.len()).into_par_iter().map(|n| tree.query(&points[n], k, clamped[n]) + 1.0 / k).collect();
    let mut values = vec![0.0; spec.len()];
    for (n, &i) in inside.iter().enumerate() {
        values[i] = out[n];
    }
    u.with_values(values)
}

/// Brute-force reference for small grids.
pub fn sup_convolution_brute(u: &ScalarField, k: f64) -> Result<ScalarField> {
    let spec = u.spec();
    let inside: Vec<usize> = u.inside_indices().collect();
    let mut values = vec![0.0; spec.len()];
    for &i in &inside {
        let z = lattice_point(spec, i);
        let mut best = f64::NEG_INFINITY;
        for &j in &inside {
            let w = lattice_point(spec, j);
            let d = w.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            best = best.max(u.value(j).max(-k) - k * d);
        }
        values[i] = best + 1.0 / k;
    }
    u.with_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Mask;
    use proptest::prelude::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::from_bounds(&[-1.0, -1.0], &[1.0, 1.0], &[n, n]).unwrap()
    }

    #[test]
    fn constant_shifts_by_one_over_k() {
        let u = ScalarField::build(grid(17), |_| 0.7, |p| p[0] + p[1] < 0.5).unwrap();
        for k in [1.0, 3.0, 8.0] {
            let f = sup_convolution(&u, k).unwrap();
            assert!(f.inside_indices().all(|i| f.value(i) == 0.7 + 1.0 / k));
        }
    }

    #[test]
    fn lipschitz_input_is_a_fixed_point() {
        let u = ScalarField::build(grid(33), |p| 0.5 * p[0] - 0.25 * p[1].abs(), |_| true).unwrap();
        let f = sup_convolution(&u, 2.0).unwrap();
        assert!(f.inside_indices().all(|i| f.value(i) == u.value(i) + 0.5));
    }

    #[test]
    fn single_peak() {
        let spec = grid(21);
        let peak = spec.index(&[7, 12]);
        let u = ScalarField::from_parts(spec.clone(), (0..spec.len()).map(|i| if i == peak { 0.0 } else { -1.0 }).collect(), vec![Mask::Inside; spec.len()]).unwrap();
        let k = 3.0;
        let f = sup_convolution(&u, k).unwrap();
        let p = lattice_point(&spec, peak);
        for i in 0..spec.len() {
            let z = lattice_point(&spec, i);
            let d = z.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            assert_eq!(f.value(i), (-k * d).max(-1.0) + 1.0 / k);
        }
    }

    #[test]
    fn pole_is_clamped() {
        let spec = grid(9);
        let u = ScalarField::build(spec, |p| p[0].hypot(p[1]).ln(), |_| true).unwrap();
        let f = sup_convolution(&u, 2.0).unwrap();
        assert!(f.inside_indices().all(|i| f.value(i).is_finite() && f.value(i) >= u.value(i)));
    }

    proptest! {
        #[test]
        fn matches_brute_force_and_decreases(vals in proptest::collection::vec(-6.0f64..3.0, 144), cut in 0.2f64..1.5) {
            let spec = GridSpec::from_bounds(&[0.0, 0.0], &[1.1, 1.1], &[12, 12]).unwrap();
            let f = ScalarField::build(spec.clone(), |p| vals[((p[0] * 10.0).round() as usize) * 12 + (p[1] * 10.0).round() as usize], |p| p[0] + p[1] < cut + 0.5).unwrap();
            let mut prev: Option<ScalarField> = None;
            for k in [1.0, 2.0, 3.5, 8.0] {
                let a = sup_convolution(&f, k).unwrap();
                let b = sup_convolution_brute(&f, k).unwrap();
                prop_assert!(a.bit_eq(&b));
                for i in a.inside_indices() {
                    prop_assert!(a.value(i) >= f.value(i));
                    if let Some(p) = &prev {
                        prop_assert!(a.value(i) <= p.value(i));
                    }
                }
                prev = Some(a);
            }
        }
    }
}
