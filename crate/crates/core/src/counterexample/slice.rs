//! Maximum principle on a disc `{|z′| ≤ R} × {z_n}` for radial profiles.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceVerdict {
    pub holds: bool,
    /// The profile value at `z′ = 0`.
    pub centre: f64,
    /// Largest value on the ring `|z′| = R`.
    pub ring: f64,
}

/// Discrete radial Laplacian `v″ + v′/r` of samples `v_i = v(i·h)`; at the centre
/// the two-dimensional value `4(v_1 − v_0)/h²`.
pub fn radial_laplacian(profile: &[f64], h: f64) -> Vec<f64> {
    let n = profile.len();
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    if n < 2 {
        return out;
    }
    out.push(4.0 * (profile[1] - profile[0]) / (h * h));
    for i in 1..n - 1 {
        let r = i as f64 * h;
        let second = (profile[i + 1] - 2.0 * profile[i] + profile[i - 1]) / (h * h);
        let first = (profile[i + 1] - profile[i - 1]) / (2.0 * h);
        out.push(second + first / r);
    }
    out
}

/// Checks that the profile is subharmonic on the slice (Laplacian `≥ −tol`
/// everywhere) and then whether the centre value is at most `bound + slack`.
pub fn slice_max_principle(profile: &[f64], h: f64, bound: f64, slack: f64, tol: f64) -> Result<SliceVerdict> {
    if profile.len() < 3 || !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("profile of {} samples, h = {h}", profile.len())));
    }
    if let Some(i) = profile.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i, value: profile[i] });
    }
    for (i, lap) in radial_laplacian(profile, h).into_iter().enumerate() {
        if lap < -tol {
            return Err(Error::SliceNotSubharmonic { index: i, defect: -lap });
        }
    }
    let centre = profile[0];
    let ring = profile[profile.len() - 1];
    Ok(SliceVerdict { holds: centre <= bound + slack, centre, ring })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(n: usize, r_max: f64, f: impl Fn(f64) -> f64) -> (Vec<f64>, f64) {
        let h = r_max / (n - 1) as f64;
        ((0..n).map(|i| f(i as f64 * h)).collect(), h)
    }

    #[test]
    fn paraboloid_and_constant() {
        let (p, h) = samples(65, 1.0, |r| r * r - 1.0);
        let v = slice_max_principle(&p, h, 0.0, 0.0, 1e-9).unwrap();
        assert!(v.holds && v.centre == -1.0);
        let lap = radial_laplacian(&p, h);
        assert!(lap.iter().all(|l| (l - 4.0).abs() < 1e-9));
        let (c, h) = samples(65, 1.0, |_| 0.3);
        assert!(slice_max_principle(&c, h, 0.3, 0.0, 1e-12).unwrap().holds);
    }

    #[test]
    fn a_bump_is_refused() {
        let (p, h) = samples(65, 1.0, |r| (-8.0 * r * r).exp());
        let err = slice_max_principle(&p, h, 0.0, 0.0, 1e-9).unwrap_err();
        assert!(matches!(err, Error::SliceNotSubharmonic { index: 0, .. }));
    }

    #[test]
    fn log_profile_is_harmonic_away_from_the_centre() {
        let (p, h) = samples(129, 1.0, |r| (r.max(1e-300)).ln());
        let lap = radial_laplacian(&p, h);
        assert!(lap[20..].iter().all(|l| l.abs() < 2e-3 / h), "{:?}", &lap[20..24]);
    }
}
