//! Numerical form of the sphere-splitting continuity argument at a point `P`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::domains::Cone;
use crate::error::{Error, Result};
use crate::grid::{ScalarField, SphereSample};
use crate::subharmonic::{cone_shift_check, ModulusOfContinuity};

/// Probe sequence `x_n = P + r·e_θ` for every radius, with `directions` angles in
/// the `(x_1, x_m)` plane interleaved.
#[derive(Debug, Clone)]
pub struct ProbePlan {
    pub radii: Vec<f64>,
    pub directions: usize,
    pub resolution: usize,
}

impl ProbePlan {
    pub fn new(radii: Vec<f64>, dim: usize) -> Self {
        let resolution = match dim {
            2 => 1024,
            3 => 96,
            _ => 24,
        };
        ProbePlan { radii, directions: 8, resolution }
    }
}

#[derive(Debug, Clone)]
pub struct LemmaProbe {
    pub radius: f64,
    pub direction: usize,
    pub x: Vec<f64>,
    pub alpha: f64,
    pub sup_sphere: f64,
    pub u_x: f64,
    /// `u(P) + ((1 − α)/α)(u(P) − M) − δ(3r)`.
    pub lower_bound: f64,
    /// `u(P) − lower_bound`.
    pub slack: f64,
    pub chain_ok: bool,
}

#[derive(Debug, Clone)]
pub struct LemmaCertificate {
    pub u_p: f64,
    pub floor: f64,
    /// `2h` times the local Lipschitz constant near `P`.
    pub grid_slack: f64,
    pub probes: Vec<LemmaProbe>,
    pub skipped: usize,
    /// Largest slack among the probes at the smallest radius.
    pub continuity_slack: f64,
    pub holds: bool,
}

fn apex_direction(theta: f64, m: usize) -> Vec<f64> {
    let mut d = vec![0.0; m];
    d[0] = theta.sin();
    d[m - 1] = -theta.cos();
    d
}

/// Smallest sector fraction `σ(S ∩ (x + K))/σ(S)` over apexes `x` at distance `r`
/// from the centre of a sphere of radius `2r`, less the quadrature slack. Depends
/// only on the slope `b` and the dimension.
pub fn sector_floor(b: f64, m: usize, resolution: usize) -> Result<f64> {
    let cone = Cone::lemma(f64::MAX, b, 1.0, m)?;
    let centre = vec![0.0; m];
    let (fracs, slack): (Vec<f64>, f64) = {
        let base = SphereSample::new(&centre, 2.0, resolution)?;
        let total = base.total_weight();
        let wmax = base.weights().iter().cloned().fold(0.0, f64::max);
        let fracs = (0..=64)
            .into_par_iter()
            .map(|j| {
                let apex = apex_direction(PI * j as f64 / 64.0, m);
                base.clone().split_by(|y| cone.contains(&y.iter().zip(&apex).map(|(a, b)| a - b).collect::<Vec<_>>())).alpha()
            })
            .collect();
        (fracs, 2.0 * wmax / total)
    };
    Ok(fracs.into_iter().fold(f64::INFINITY, f64::min) - slack)
}

fn local_lipschitz(u: &ScalarField, p: &[f64], radius: f64) -> f64 {
    let spec = u.spec();
    (0..spec.len())
        .into_par_iter()
        .filter(|&i| u.is_inside(i) && spec.point(i).iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= radius * radius)
        .map(|i| {
            let mut best = 0.0f64;
            for axis in 0..spec.rank() {
                if let (_, Some(j)) = spec.axis_neighbors(i, axis) {
                    if u.is_inside(j) && u.value(i).is_finite() && u.value(j).is_finite() {
                        best = best.max((u.value(j) - u.value(i)).abs() / spec.spacing()[axis]);
                    }
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Evaluates every term of the continuity chain at the probes.
///
/// The hypothesis `u(x + y) ≤ u(x) + δ(|y|)` bounds `u` on the sector by
/// `u(x_n) + δ(3|x_n − P|)`, which gives the `− δ` in the lower bound.
pub fn lemma_continuity_certificate(
    u: &ScalarField,
    p: &[f64],
    cone: &Cone,
    delta: &ModulusOfContinuity,
    plan: &ProbePlan,
) -> Result<LemmaCertificate> {
    let Cone::Lemma { depth, slope, radius, dim } = *cone else {
        return Err(Error::InvalidArgument("the certificate needs a lemma cone".into()));
    };
    let spec = u.spec();
    if dim != spec.rank() || p.len() != dim {
        return Err(Error::GridMismatch);
    }
    let u_p = u.interpolate(p).filter(|v| v.is_finite()).ok_or_else(|| Error::OutsideDomain(p.to_vec()))?;
    let reach = plan.radii.iter().cloned().fold(0.0, f64::max) * 3.0 + spec.max_spacing();
    let grid_slack = 2.0 * spec.max_spacing() * local_lipschitz(u, p, reach.max(radius));
    // a sampled δ is a step function; its first step must be at grid scale
    if !delta.vanishes_at_zero(grid_slack.max(1e-9)) {
        return Err(Error::Refused(format!("δ(0⁺) = {} does not vanish", delta.limit_at_zero())));
    }

    let base: Vec<usize> = (0..spec.len())
        .filter(|&i| u.is_inside(i) && spec.point(i).iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < radius * radius)
        .collect();
    match cone_shift_check(u, cone, delta, &base) {
        Ok(rep) if rep.max_positive() <= grid_slack => {}
        Ok(rep) => return Err(Error::Refused(format!("cone hypothesis fails by {:e}", rep.max_positive()))),
        Err(Error::ConeExits { .. }) => return Err(Error::Refused("B + K leaves the domain".into())),
        Err(e) => return Err(e),
    }

    let floor = sector_floor(slope, dim, plan.resolution)?;
    let mut probes = Vec::new();
    let mut skipped = 0;
    for &r in &plan.radii {
        for j in 0..plan.directions {
            if 3.0 * r > depth || r > radius {
                skipped += 1;
                continue;
            }
            let e = apex_direction(2.0 * PI * j as f64 / plan.directions as f64, dim);
            let x: Vec<f64> = p.iter().zip(&e).map(|(a, b)| a + r * b).collect();
            let sphere = SphereSample::new(p, 2.0 * r, plan.resolution)?
                .split_by(|y| cone.contains(&y.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>()));
            let alpha = sphere.alpha();
            if alpha < floor {
                return Err(Error::SectorFloor { alpha, floor });
            }
            let (samples, u_x) = match (sphere.sample(u), u.interpolate(&x)) {
                (Ok(s), Some(v)) if v.is_finite() => (s, v),
                _ => {
                    skipped += 1;
                    continue;
                }
            };
            let means = sphere.average_values(&samples);
            let sup_sphere = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let d3 = delta.eval(3.0 * r);
            let lower_bound = u_p + (1.0 - alpha) / alpha * (u_p - sup_sphere) - d3;
            let chain_ok = means.total >= u_p - grid_slack && means.a <= u_x + d3 + grid_slack && u_x >= lower_bound - grid_slack;
            probes.push(LemmaProbe { radius: r, direction: j, x, alpha, sup_sphere, u_x, lower_bound, slack: u_p - lower_bound, chain_ok });
        }
    }
    let r_min = probes.iter().map(|q| q.radius).fold(f64::INFINITY, f64::min);
    let continuity_slack = probes.iter().filter(|q| q.radius == r_min).map(|q| q.slack.max(0.0)).fold(0.0, f64::max);
    let holds = !probes.is_empty() && probes.iter().all(|q| q.chain_ok);
    Ok(LemmaCertificate { u_p, floor, grid_slack, probes, skipped, continuity_slack, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{cone_solid_angle_fraction, GridSpec};

    fn plane(n: usize, f: impl Fn(&[f64]) -> f64 + Sync) -> ScalarField {
        let spec = GridSpec::from_bounds(&[-1.0, -1.0], &[1.0, 1.0], &[n, n]).unwrap();
        ScalarField::build(spec, f, |_| true).unwrap()
    }

    #[test]
    fn floor_sits_below_the_apex_centred_fraction() {
        let f = sector_floor(7.0, 2, 1024).unwrap();
        let centred = cone_solid_angle_fraction(7.0, 2).unwrap();
        // apex below the centre sees a smaller share of the sphere
        assert!(f > 0.3 * centred && f < 0.75 * centred, "{f} {centred}");
    }

    #[test]
    fn smooth_field_slack_shrinks_with_the_probe() {
        let u = plane(257, |z| z[0] * z[0] + z[1] * z[1] + 0.5 * z[0]);
        let cone = Cone::lemma(0.6, 1.0, 0.3, 2).unwrap();
        let delta = ModulusOfContinuity::linear(3.0, 2.0);
        let p = [0.0, 0.2];
        let plan = ProbePlan::new(vec![0.16, 0.08, 0.04], 2);
        let c = lemma_continuity_certificate(&u, &p, &cone, &delta, &plan).unwrap();
        assert!(c.holds);
        let sum = |r: f64| c.probes.iter().filter(|q| q.radius == r).map(|q| q.slack).sum::<f64>();
        let ratio = sum(0.04) / sum(0.08);
        assert!((0.4..=0.6).contains(&ratio), "{ratio}");
        assert!(c.probes.iter().all(|q| q.alpha >= c.floor));
    }

    #[test]
    fn truncated_log_pole_chain_holds() {
        let q = [0.0, -0.95];
        let u = plane(257, |z| ((z[0] - q[0]).hypot(z[1] - q[1])).ln().max(-5.0));
        let cone = Cone::lemma(0.3, 1.0, 0.2, 2).unwrap();
        // cone shifts move towards Q, so u decreases along them
        let delta = ModulusOfContinuity::linear(0.05, 2.0);
        let plan = ProbePlan::new(vec![0.08, 0.06, 0.04, 0.03, 0.02], 2);
        let c = lemma_continuity_certificate(&u, &[0.0, 0.0], &cone, &delta, &plan).unwrap();
        assert!(c.holds);
        assert!(c.probes.len() >= 10);
    }

    #[test]
    fn refuses_a_delta_that_does_not_vanish() {
        let u = plane(65, |z| z[0]);
        let cone = Cone::lemma(0.3, 1.0, 0.2, 2).unwrap();
        let bad = ModulusOfContinuity::new(vec![0.1, 1.0], vec![1.0, 1.0]).unwrap();
        let r = lemma_continuity_certificate(&u, &[0.0, 0.0], &cone, &bad, &ProbePlan::new(vec![0.05], 2));
        assert!(matches!(r, Err(Error::Refused(_))));
    }
}
