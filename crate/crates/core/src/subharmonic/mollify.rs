//! Interior mollification with the bump `(1 − (t/σ)²)³`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// Lattice offsets inside the open ball of radius `sigma` with normalized kernel weights.
pub fn kernel(spacing: &[f64], sigma: f64) -> Vec<(Vec<isize>, f64)> {
    let m = spacing.len();
    let reach: Vec<isize> = spacing.iter().map(|h| (sigma / h).floor() as isize).collect();
    let mut out = Vec::new();
    let mut idx: Vec<isize> = reach.iter().map(|r| -r).collect();
    loop {
        let t2: f64 = idx.iter().zip(spacing).map(|(&i, h)| (i as f64 * h).powi(2)).sum::<f64>() / (sigma * sigma);
        if t2 < 1.0 {
            out.push((idx.clone(), (1.0 - t2).powi(3)));
        }
        let mut a = 0;
        while a < m {
            if idx[a] < reach[a] {
                idx[a] += 1;
                break;
            }
            idx[a] = -reach[a];
            a += 1;
        }
        if a == m {
            break;
        }
    }
    let total: f64 = out.iter().map(|(_, w)| w).sum();
    out.iter_mut().for_each(|(_, w)| *w /= total);
    out
}

/// Convolution with the normalized bump of radius `sigma`, on the nodes whose
/// whole kernel support is inside. `−∞` nodes count as a null set: their weight
/// is dropped and the rest renormalized.
pub fn mollify_interior(field: &ScalarField, sigma: f64) -> Result<ScalarField> {
    let spec = field.spec();
    if sigma < 2.0 * spec.max_spacing() * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!("mollifier radius {sigma} below twice the spacing")));
    }
    let ker = kernel(spec.spacing(), sigma);
    let out: Vec<Option<f64>> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            if !field.is_inside(i) {
                return None;
            }
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (o, w) in &ker {
                let j = spec.offset(i, o)?;
                if !field.is_inside(j) {
                    return None;
                }
                let v = field.value(j);
                if v != f64::NEG_INFINITY {
                    acc += w * v;
                    wsum += w;
                }
            }
            Some(if wsum > 0.0 { acc / wsum } else { f64::NEG_INFINITY })
        })
        .collect();
    let keep: Vec<bool> = out.iter().map(Option::is_some).collect();
    if !keep.iter().any(|&b| b) {
        return Err(Error::EmptyMask(format!("no node keeps its radius-{sigma} kernel inside")));
    }
    let values = out.into_iter().map(|v| v.unwrap_or(0.0)).collect();
    field.with_values(values)?.restrict(&keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use proptest::prelude::*;

    fn square(n: usize) -> GridSpec {
        GridSpec::from_bounds(&[-1.0, -1.0], &[1.0, 1.0], &[n, n]).unwrap()
    }

    #[test]
    fn constants_are_fixed() {
        let f = ScalarField::build(square(33), |_| 2.5, |_| true).unwrap();
        let g = mollify_interior(&f, 0.2).unwrap();
        assert!(g.inside_indices().all(|i| (g.value(i) - 2.5).abs() < 1e-14));
        assert!(g.inside_indices().count() < f.inside_indices().count());
        assert!(mollify_interior(&f, 5.0).is_err());
        assert!(mollify_interior(&f, 0.01).is_err());
    }

    #[test]
    fn subharmonic_input_increases() {
        let f = ScalarField::build(square(65), |p| p[0] * p[0] + p[1] * p[1] + p[0].max(0.3 * p[1]), |_| true).unwrap();
        let g = mollify_interior(&f, 0.25).unwrap();
        assert!(g.inside_indices().all(|i| g.value(i) >= f.value(i)));
        // smaller radius, smaller average
        let g2 = mollify_interior(&f, 0.125).unwrap();
        let h = 2.0 / 64.0;
        assert!(g.inside_indices().all(|i| g2.value(i) <= g.value(i) + 2.0 * h * h));
    }

    #[test]
    fn log_pole_matches_quadrature() {
        let spec = square(129);
        let f = ScalarField::build(spec.clone(), |p| p[0].hypot(p[1]).ln(), |_| true).unwrap();
        let sigma = 0.25;
        let g = mollify_interior(&f, sigma).unwrap();
        let centre = spec.nearest(&[0.0, 0.0]).unwrap();
        // ∫ k(t) log t / ∫ k(t), radial integrals with k = (1 − t²/σ²)³ t
        let n = 200_000;
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..n {
            let t = sigma * (j as f64 + 0.5) / n as f64;
            let k = (1.0 - (t / sigma).powi(2)).powi(3) * t;
            num += k * t.ln();
            den += k;
        }
        let exact = num / den;
        assert!(g.value(centre).is_finite());
        assert!((g.value(centre) - exact).abs() < 0.02, "{} vs {exact}", g.value(centre));
    }

    proptest! {
        #[test]
        fn monotone_and_shift_equivariant(vals in proptest::collection::vec(-5.0f64..5.0, 81), bump in proptest::collection::vec(0.0f64..1.0, 81), c in -3.0f64..3.0) {
            let spec = GridSpec::from_bounds(&[0.0, 0.0], &[1.0, 1.0], &[9, 9]).unwrap();
            let u = ScalarField::from_parts(spec.clone(), vals.clone(), vec![crate::grid::Mask::Inside; 81]).unwrap();
            let v = u.map(|i, x| x + bump[i]).unwrap();
            let mu = mollify_interior(&u, 0.25).unwrap();
            let mv = mollify_interior(&v, 0.25).unwrap();
            let mc = mollify_interior(&u.map(|_, x| x + c).unwrap(), 0.25).unwrap();
            for i in mu.inside_indices() {
                prop_assert!(mu.value(i) <= mv.value(i) + 1e-12);
                prop_assert!((mc.value(i) - mu.value(i) - c).abs() < 1e-12);
            }
        }
    }
}
