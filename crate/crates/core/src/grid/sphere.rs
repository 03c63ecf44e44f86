//! Sphere quadrature with sector splitting, and solid-angle fractions of
//! downward cones `{x_m < −b|x′|}`.

use std::f64::consts::PI;

use super::ScalarField;
use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Surface measure of the sphere of radius `r` in ℝ^m.
pub fn sphere_measure(m: usize, r: f64) -> f64 {
    match m {
        2 => 2.0 * PI * r,
        3 => 4.0 * PI * r * r,
        4 => 2.0 * PI * PI * r * r * r,
        _ => {
            // 2π^{m/2} / Γ(m/2) r^{m−1}, via the recursion σ_m = 2π/(m−2) σ_{m−2}
            2.0 * PI / (m - 2) as f64 * sphere_measure(m - 2, 1.0) * r.powi(m as i32 - 1)
        }
    }
}

/// Quadrature nodes on a sphere, optionally tagged into a sector `A` (inside a
/// translated open cone) and its complement `B`.
#[derive(Debug, Clone)]
pub struct SphereSample {
    center: Vec<f64>,
    radius: f64,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    in_a: Vec<bool>,
}

/// Weighted means over the whole sphere and over the two sectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorMeans {
    pub total: f64,
    pub a: f64,
    pub b: f64,
    /// σ(A)/σ(S).
    pub alpha: f64,
}

impl SphereSample {
    /// Builds the quadrature. `resolution` is the number of azimuthal nodes; polar
    /// directions use `max(resolution / 2, 8)` Gauss–Legendre nodes.
    ///
    /// m = 2: uniform angles. m = 3: Gauss–Legendre in cos θ times uniform azimuth.
    /// m = 4: Gauss–Legendre in ψ (weight sin²ψ) times the m = 3 rule.
    pub fn new(center: &[f64], radius: f64, resolution: usize) -> Result<Self> {
        let m = center.len();
        if !(2..=4).contains(&m) {
            return Err(Error::InvalidArgument(format!("sphere in dimension {m}")));
        }
        if !(radius > 0.0) || resolution < 4 {
            return Err(Error::InvalidArgument("sphere needs radius > 0 and resolution >= 4".into()));
        }
        let n_az = resolution;
        let n_pol = (resolution / 2).max(8);
        // unit directions with weights summing to the unit-sphere measure
        let mut dirs: Vec<(Vec<f64>, f64)> = Vec::new();
        let azimuth = |k: usize| 2.0 * PI * k as f64 / n_az as f64;
        match m {
            2 => {
                for k in 0..n_az {
                    let t = azimuth(k);
                    dirs.push((vec![t.sin(), -t.cos()], 2.0 * PI / n_az as f64));
                }
            }
            3 => {
                let (cs, ws) = gauss_legendre(n_pol);
                for (c, w) in cs.iter().zip(&ws) {
                    let s = (1.0 - c * c).max(0.0).sqrt();
                    for k in 0..n_az {
                        let t = azimuth(k);
                        dirs.push((vec![s * t.cos(), s * t.sin(), *c], w * 2.0 * PI / n_az as f64));
                    }
                }
            }
            _ => {
                let (xs, wxs) = gauss_legendre(2 * n_pol);
                let (cs, ws) = gauss_legendre(n_pol);
                for (xpsi, wpsi) in xs.iter().zip(&wxs) {
                    let psi = PI * (xpsi + 1.0) / 2.0;
                    let wp = wpsi * PI / 2.0 * psi.sin().powi(2);
                    for (c, w) in cs.iter().zip(&ws) {
                        let s = (1.0 - c * c).max(0.0).sqrt();
                        for k in 0..n_az {
                            let t = azimuth(k);
                            let sp = psi.sin();
                            dirs.push((
                                vec![sp * s * t.cos(), sp * s * t.sin(), sp * c, psi.cos()],
                                wp * w * 2.0 * PI / n_az as f64,
                            ));
                        }
                    }
                }
            }
        }
        let scale = radius.powi(m as i32 - 1);
        let points = dirs
            .iter()
            .map(|(d, _)| d.iter().zip(center).map(|(di, ci)| ci + radius * di).collect())
            .collect();
        let weights = dirs.iter().map(|(_, w)| w * scale).collect::<Vec<_>>();
        let n = weights.len();
        Ok(SphereSample { center: center.to_vec(), radius, points, weights, in_a: vec![false; n] })
    }

    /// Tags as `A` every node where `in_sector` holds; everything else is `B`.
    pub fn split_by<P: Fn(&[f64]) -> bool>(mut self, in_sector: P) -> Self {
        self.in_a = self.points.iter().map(|p| in_sector(p)).collect();
        self
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sector_a(&self) -> &[bool] {
        &self.in_a
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// σ(A)/σ(S) from the quadrature weights.
    pub fn alpha(&self) -> f64 {
        let wa: f64 = self.weights.iter().zip(&self.in_a).filter(|(_, &a)| a).map(|(w, _)| w).sum();
        wa / self.total_weight()
    }

    /// Interpolated field values at the quadrature nodes.
    pub fn sample(&self, field: &ScalarField) -> Result<Vec<f64>> {
        self.points
            .iter()
            .enumerate()
            .map(|(index, p)| {
                field.interpolate(p).ok_or_else(|| Error::OutsideRegion { index, point: p.clone() })
            })
            .collect()
    }

    /// Means over S, A and B. An empty sector reports the total mean.
    pub fn average(&self, field: &ScalarField) -> Result<SectorMeans> {
        let values = self.sample(field)?;
        Ok(self.average_values(&values))
    }

    pub fn average_values(&self, values: &[f64]) -> SectorMeans {
        let (mut sa, mut wa, mut sb, mut wb) = (0.0, 0.0, 0.0, 0.0);
        for ((v, w), &a) in values.iter().zip(&self.weights).zip(&self.in_a) {
            if a {
                sa += w * v;
                wa += w;
            } else {
                sb += w * v;
                wb += w;
            }
        }
        let total = (sa + sb) / (wa + wb);
        let alpha = wa / (wa + wb);
        SectorMeans {
            total,
            a: if wa > 0.0 { sa / wa } else { total },
            b: if wb > 0.0 { sb / wb } else { total },
            alpha,
        }
    }

    /// Largest interpolated value over the sample.
    pub fn max_value(&self, field: &ScalarField) -> Result<f64> {
        Ok(self.sample(field)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Fraction of the unit sphere in ℝ^m lying in the open cone `{x_m < −b|x′|}`.
///
/// Closed form for m = 2; adaptive Simpson on `∫ sin^{m−2}` for m ≥ 3.
pub fn cone_solid_angle_fraction(b: f64, m: usize) -> Result<f64> {
    if !(b >= 0.0) {
        return Err(Error::InvalidArgument(format!("cone slope {b} must be >= 0")));
    }
    if m < 2 {
        return Err(Error::InvalidArgument(format!("dimension {m} must be >= 2")));
    }
    if b == 0.0 {
        return Ok(0.5);
    }
    // half-aperture about the −x_m axis
    let aperture = 1.0f64.atan2(b);
    if m == 2 {
        return Ok(aperture / PI);
    }
    let k = (m - 2) as i32;
    let f = |t: f64| t.sin().powi(k);
    let cap = adaptive_simpson(&f, 0.0, aperture, 1e-15);
    let whole = 2.0 * adaptive_simpson(&f, 0.0, PI / 2.0, 1e-15);
    Ok(cap / whole)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, ScalarField};

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_sphere_measure() {
        for m in 2..=4 {
            let c = vec![0.0; m];
            let s = SphereSample::new(&c, 0.7, 24).unwrap();
            let exact = sphere_measure(m, 0.7);
            assert!((s.total_weight() - exact).abs() / exact < 1e-10, "m = {m}");
        }
    }

    #[test]
    fn cone_fraction_values() {
        assert_eq!(cone_solid_angle_fraction(0.0, 2).unwrap(), 0.5);
        assert_eq!(cone_solid_angle_fraction(0.0, 4).unwrap(), 0.5);
        assert!((cone_solid_angle_fraction(1.0, 2).unwrap() - 0.25).abs() < 1e-12);
        let exact3 = (1.0 - (PI / 4.0).cos()) / 2.0;
        assert!((cone_solid_angle_fraction(1.0, 3).unwrap() - exact3).abs() < 1e-12);
        assert!(cone_solid_angle_fraction(-0.1, 3).is_err());
        let mut last = 0.5;
        for i in 1..40 {
            let v = cone_solid_angle_fraction(i as f64 * 0.25, 4).unwrap();
            assert!(v < last && v > 0.0);
            last = v;
        }
    }

    #[test]
    fn sector_alpha_matches_cone_fraction() {
        // sphere centred at the cone apex: A is exactly the cap
        for m in 2..=4 {
            let c = vec![0.0; m];
            let b = 1.0;
            let s = SphereSample::new(&c, 1.0, 64).unwrap().split_by(|p| {
                let r: f64 = p[..m - 1].iter().map(|x| x * x).sum::<f64>().sqrt();
                p[m - 1] < -b * r
            });
            let exact = cone_solid_angle_fraction(b, m).unwrap();
            assert!((s.alpha() - exact).abs() < 0.03, "m = {m}: {} vs {exact}", s.alpha());
        }
    }

    #[test]
    fn averages_of_simple_fields() {
        let spec = GridSpec::from_bounds(&[-2.0, -2.0], &[2.0, 2.0], &[81, 81]).unwrap();
        let c = ScalarField::build(spec.clone(), |_| 3.5, |_| true).unwrap();
        let s = SphereSample::new(&[0.1, 0.2], 0.9, 64).unwrap().split_by(|p| p[1] < -0.1);
        let means = s.average(&c).unwrap();
        assert!((means.total - 3.5).abs() < 1e-14 && (means.a - 3.5).abs() < 1e-14 && (means.b - 3.5).abs() < 1e-14);

        let x1 = ScalarField::build(spec.clone(), |x| x[0], |_| true).unwrap();
        let s0 = SphereSample::new(&[0.0, 0.0], 1.0, 64).unwrap();
        assert!(s0.average(&x1).unwrap().total.abs() < 1e-14);

        // mean of log|x − P| over the circle of radius r about P is log r
        let p = [0.0, 0.0];
        let lg = ScalarField::build(spec, |x| (x[0] - p[0]).hypot(x[1] - p[1]).ln(), |_| true).unwrap();
        let r = 1.0;
        let mean = SphereSample::new(&p, r, 256).unwrap().average(&lg).unwrap().total;
        assert!((mean - r.ln()).abs() < 2e-3, "{mean}");
    }

    #[test]
    fn outside_node_is_reported() {
        let spec = GridSpec::from_bounds(&[-1.0, -1.0], &[1.0, 1.0], &[21, 21]).unwrap();
        let f = ScalarField::build(spec, |_| 0.0, |x| x[0] < 0.5).unwrap();
        let s = SphereSample::new(&[0.0, 0.0], 0.8, 16).unwrap();
        assert!(matches!(s.average(&f), Err(Error::OutsideRegion { .. })));
    }
}
