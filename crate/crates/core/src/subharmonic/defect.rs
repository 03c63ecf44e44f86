//! Sub-mean-value defects and the cone-shift comparison.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::modulus::ModulusOfContinuity;
use super::stencil::{Mode, RingStencil, COMPLEX_DIRECTIONS};
use crate::domains::Cone;
use crate::error::{Error, Result};
use crate::grid::{ScalarField, SphereSample};

/// Per-node defects of one test. Positive defect means the inequality fails.
#[derive(Debug, Clone)]
pub struct DefectReport {
    pub kind: String,
    /// `(node, defect)` for every tested node, in index order.
    pub defects: Vec<(usize, f64)>,
    /// Nodes that could not be tested (stencil left the mask or hit a pole).
    pub skipped: usize,
}

impl DefectReport {
    pub fn worst(&self) -> Option<(usize, f64)> {
        self.defects.iter().cloned().fold(None, |best, (i, d)| match best {
            Some((_, b)) if b >= d => best,
            _ => Some((i, d)),
        })
    }

    /// Largest defect, `−∞` if nothing was tested.
    pub fn max_defect(&self) -> f64 {
        self.worst().map_or(f64::NEG_INFINITY, |(_, d)| d)
    }

    /// `max(worst, 0)`.
    pub fn max_positive(&self) -> f64 {
        self.max_defect().max(0.0)
    }

    pub fn count_above(&self, tol: f64) -> usize {
        self.defects.iter().filter(|(_, d)| *d > tol).count()
    }

    pub fn tested(&self) -> usize {
        self.defects.len()
    }

    fn finish(kind: String, raw: Vec<Option<(usize, f64)>>, total: usize) -> Result<Self> {
        let defects: Vec<(usize, f64)> = raw.into_iter().flatten().collect();
        if defects.is_empty() {
            return Err(Error::NoTestableNodes);
        }
        let skipped = total - defects.len();
        Ok(DefectReport { kind, defects, skipped })
    }
}

const CIRCLE_POINTS: usize = 64;
const SPHERE_RESOLUTION: usize = 24;

/// Unit vector pairs spanning the tested complex lines.
fn complex_frames(rank: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    if rank == 2 {
        return vec![(vec![1.0, 0.0], vec![0.0, 1.0])];
    }
    COMPLEX_DIRECTIONS
        .iter()
        .map(|[re, im]| {
            let n = (re.iter().map(|&c| (c * c) as f64).sum::<f64>()).sqrt();
            (re.iter().map(|&c| c as f64 / n).collect(), im.iter().map(|&c| c as f64 / n).collect())
        })
        .collect()
}

/// `u(z)` minus the circle (or sphere) average of radius `r` around each node;
/// for [`Mode::PshDirectional`], the largest such defect over the complex lines.
/// Only `Mask::Inside` nodes whose sample points interpolate inside are tested.
pub fn submean_defect(field: &ScalarField, mode: Mode, r: f64) -> Result<DefectReport> {
    let spec = field.spec();
    let m = spec.rank();
    if r < 2.0 * spec.max_spacing() * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!("radius {r} below twice the spacing {}", spec.max_spacing())));
    }
    if mode == Mode::PshDirectional && m % 2 == 1 {
        return Err(Error::InvalidGrid(format!("PSH_DIRECTIONAL needs an even rank, got {m}")));
    }
    let frames = complex_frames(m);
    let circle: Vec<(f64, f64)> = (0..CIRCLE_POINTS)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / CIRCLE_POINTS as f64;
            (t.cos(), t.sin())
        })
        .collect();
    let sphere_dirs = if mode == Mode::Subharmonic && m > 2 {
        let s = SphereSample::new(&vec![0.0; m], 1.0, SPHERE_RESOLUTION)?;
        let w = s.total_weight();
        Some((s.points().to_vec(), s.weights().iter().map(|x| x / w).collect::<Vec<_>>()))
    } else {
        None
    };
    let raw: Vec<Option<(usize, f64)>> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            if field.mask()[i] != crate::grid::Mask::Inside {
                return None;
            }
            let u0 = field.value(i);
            if u0 == f64::NEG_INFINITY {
                return None;
            }
            let z = spec.point(i);
            let mean = |pts: &mut dyn Iterator<Item = (Vec<f64>, f64)>| -> Option<f64> {
                let mut acc = 0.0;
                for (p, w) in pts {
                    acc += w * field.interpolate(&p)?;
                }
                acc.is_finite().then_some(acc)
            };
            let defect = match (&sphere_dirs, mode) {
                (Some((dirs, ws)), _) => {
                    let mut it = dirs.iter().zip(ws).map(|(d, &w)| (z.iter().zip(d).map(|(a, b)| a + r * b).collect(), w));
                    u0 - mean(&mut it)?
                }
                _ => {
                    let lines = if mode == Mode::Subharmonic { &frames[..1] } else { &frames[..] };
                    let mut worst = f64::NEG_INFINITY;
                    for (e, f) in lines {
                        let mut it = circle.iter().map(|&(c, s)| {
                            let p = (0..m).map(|j| z[j] + r * (c * e[j] + s * f[j])).collect();
                            (p, 1.0 / CIRCLE_POINTS as f64)
                        });
                        worst = worst.max(u0 - mean(&mut it)?);
                    }
                    worst
                }
            };
            Some((i, defect))
        })
        .collect();
    DefectReport::finish(format!("{} circle r={r}", mode.name()), raw, spec.len())
}

/// `u − S u` for the one-ring stencil of `mode` at every node whose stencil fits.
pub fn stencil_defect(field: &ScalarField, mode: Mode) -> Result<DefectReport> {
    let stencil = RingStencil::new(field.spec(), mode)?;
    stencil_defect_with(field, &stencil, |i| field.mask()[i] == crate::grid::Mask::Inside)
}

/// Ring-stencil defect restricted to nodes selected by `test`.
pub fn stencil_defect_with<P>(field: &ScalarField, stencil: &RingStencil, test: P) -> Result<DefectReport>
where
    P: Fn(usize) -> bool + Sync,
{
    let spec = field.spec();
    let raw: Vec<Option<(usize, f64)>> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            if !test(i) || !field.is_inside(i) {
                return None;
            }
            let nb = stencil.neighbours(spec, i)?;
            if nb.iter().any(|&j| !field.is_inside(j)) {
                return None;
            }
            let u0 = field.value(i);
            if u0 == f64::NEG_INFINITY {
                return None;
            }
            let s = stencil.apply(field.values(), &nb);
            if s == f64::NEG_INFINITY {
                return None;
            }
            Some((i, u0 - s))
        })
        .collect();
    DefectReport::finish(format!("{} ring", stencil.mode.name()), raw, spec.len())
}

/// Worst `u(x + y) − u(x) − δ(|y|)` over base nodes `x` and nonzero lattice
/// shifts `y` of the cone; a node-aligned check, so every `x + y` is a node.
pub fn cone_shift_check(field: &ScalarField, cone: &Cone, delta: &ModulusOfContinuity, base: &[usize]) -> Result<DefectReport> {
    let spec = field.spec();
    let h = spec.spacing();
    let shifts: Vec<(Vec<isize>, f64)> = cone
        .lattice_points(h)
        .into_iter()
        .filter(|w| cone.contains(w))
        .map(|w| {
            let o: Vec<isize> = w.iter().zip(h).map(|(c, s)| (c / s).round() as isize).collect();
            let len = w.iter().map(|c| c * c).sum::<f64>().sqrt();
            (o, len)
        })
        .collect();
    if shifts.is_empty() {
        return Err(Error::InvalidArgument("cone holds no lattice shift at this spacing".into()));
    }
    let raw: Vec<Result<Option<(usize, f64)>>> = base
        .par_iter()
        .map(|&x| {
            if !field.is_inside(x) {
                return Err(Error::ConeExits { base: spec.point(x), shift: vec![0.0; spec.rank()] });
            }
            let ux = field.value(x);
            let mut worst = f64::NEG_INFINITY;
            for (o, len) in &shifts {
                let y = match spec.offset(x, o) {
                    Some(y) if field.is_inside(y) => y,
                    _ => {
                        let shift = o.iter().zip(h).map(|(&c, s)| c as f64 * s).collect();
                        return Err(Error::ConeExits { base: spec.point(x), shift });
                    }
                };
                let uy = field.value(y);
                let d = if uy == f64::NEG_INFINITY { f64::NEG_INFINITY } else { uy - ux - delta.eval(*len) };
                worst = worst.max(d);
            }
            Ok(Some((x, worst)))
        })
        .collect();
    let raw = raw.into_iter().collect::<Result<Vec<_>>>()?;
    DefectReport::finish("cone shift".into(), raw, base.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn disc(n: usize, f: impl Fn(&[f64]) -> f64 + Sync) -> ScalarField {
        let spec = GridSpec::from_bounds(&[-1.0, -1.0], &[1.0, 1.0], &[n, n]).unwrap();
        ScalarField::build(spec, f, |p| p[0] * p[0] + p[1] * p[1] < 1.0).unwrap()
    }

    #[test]
    fn harmonic_has_zero_defect() {
        let f = disc(65, |p| p[0]);
        let rep = submean_defect(&f, Mode::Subharmonic, 0.1).unwrap();
        assert!(rep.defects.iter().all(|(_, d)| d.abs() < 1e-9));
        let ring = stencil_defect(&f, Mode::Subharmonic).unwrap();
        assert!(ring.defects.iter().all(|(_, d)| d.abs() < 1e-12));
    }

    #[test]
    fn squared_norm_defect_is_minus_r_squared() {
        let f = disc(129, |p| p[0] * p[0] + p[1] * p[1]);
        let r = 0.1;
        let rep = submean_defect(&f, Mode::Subharmonic, r).unwrap();
        // bilinear interpolation of |z|² overshoots by at most h²/2
        let h = 2.0 / 128.0;
        assert!(rep.defects.iter().all(|(_, d)| *d < 0.0 && (d + r * r).abs() <= h * h / 2.0 + 1e-12));
    }

    #[test]
    fn log_pole_is_superharmonic_after_sign_flip() {
        let f = disc(65, |p| -(p[0] - 0.01).hypot(p[1] - 0.02).ln());
        let rep = submean_defect(&f, Mode::Subharmonic, 0.1).unwrap();
        assert!(rep.max_defect() > 0.1);
        let g = disc(65, |p| (p[0] - 0.01).hypot(p[1] - 0.02).ln());
        // bilinear interpolation error near the pole is about h²·|D²u|/8
        assert!(submean_defect(&g, Mode::Subharmonic, 0.1).unwrap().max_defect() < 0.02);
    }

    #[test]
    fn small_radius_and_empty_stencils_are_errors() {
        let f = disc(17, |_| 0.0);
        assert!(submean_defect(&f, Mode::Subharmonic, 0.05).is_err());
        assert!(matches!(submean_defect(&f, Mode::Subharmonic, 5.0), Err(Error::NoTestableNodes)));
    }

    #[test]
    fn psh_directional_in_c2() {
        let spec = GridSpec::new(vec![13; 4], vec![-1.2; 4], vec![0.2; 4]).unwrap();
        let ball = |p: &[f64]| p.iter().map(|x| x * x).sum::<f64>() < 1.44;
        // |z₁|² − |z₂|² is subharmonic on z₁-lines but superharmonic on z₂-lines
        let f = ScalarField::build(spec.clone(), |p| p[0] * p[0] + p[1] * p[1] - p[2] * p[2] - p[3] * p[3], ball).unwrap();
        assert!(stencil_defect(&f, Mode::PshDirectional).unwrap().max_defect() > 0.0);
        assert!(stencil_defect(&f, Mode::Subharmonic).unwrap().max_defect().abs() < 1e-12);
        let g = ScalarField::build(spec, |p| p.iter().map(|x| x * x).sum(), ball).unwrap();
        assert!(stencil_defect(&g, Mode::PshDirectional).unwrap().max_defect() < 0.0);
        assert!(submean_defect(&g, Mode::PshDirectional, 0.4).unwrap().max_defect() < 0.0);
    }

    #[test]
    fn cone_shift_cases() {
        let spec = GridSpec::from_bounds(&[-1.0, -1.0], &[1.0, 1.0], &[41, 41]).unwrap();
        let cone = Cone::lemma(0.3, 1.0, 0.5, 2).unwrap();
        let base: Vec<usize> = (0..spec.len()).filter(|&i| spec.point(i)[0].abs() < 0.5 && spec.point(i)[1] > 0.0).collect();
        let zero = ModulusOfContinuity::zero();
        let mono = ScalarField::build(spec.clone(), |p| p[1].powi(3), |_| true).unwrap();
        assert!(cone_shift_check(&mono, &cone, &zero, &base).unwrap().max_defect() <= 0.0);
        let norm = ScalarField::build(spec.clone(), |p| p[0].hypot(p[1]), |_| true).unwrap();
        let lin = ModulusOfContinuity::linear(1.0, 4.0);
        assert!(cone_shift_check(&norm, &cone, &lin, &base).unwrap().max_defect() <= 1e-12);
        let jump = ScalarField::build(spec.clone(), |p| if p[1] < 0.2 { 1.0 } else { 0.0 }, |_| true).unwrap();
        let rep = cone_shift_check(&jump, &cone, &lin, &base).unwrap();
        let (node, d) = rep.worst().unwrap();
        assert!(d > 0.5 && spec.point(node)[1] >= 0.2);
        let low: Vec<usize> = vec![spec.nearest(&[0.0, -0.9]).unwrap()];
        assert!(matches!(cone_shift_check(&mono, &cone, &zero, &low), Err(Error::ConeExits { .. })));
    }
}
