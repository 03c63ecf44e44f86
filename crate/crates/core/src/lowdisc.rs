//! Seeded Kronecker (additive recurrence) sequences for deterministic sampling.

/// Generalised golden-ratio sequence in `[0,1)^dim`; `seed` shifts the start index.
#[derive(Debug, Clone)]
pub struct Kronecker {
    alpha: Vec<f64>,
    index: u64,
}

impl Kronecker {
    pub fn new(dim: usize, seed: u64) -> Self {
        // φ_d is the unique positive root of x^{d+1} = x + 1
        let mut phi = 2.0f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim).map(|j| (1.0 / phi.powi(j as i32)).fract()).collect();
        Kronecker { alpha, index: seed.wrapping_mul(7919).wrapping_add(1) }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let n = self.index as f64;
        self.index += 1;
        self.alpha.iter().map(|a| (0.5 + a * n).fract()).collect()
    }
}

/// Maps a point of the unit cube to the closed ball of `radius` about `center`
/// (radius from the first coordinate, direction from the rest).
pub fn cube_to_ball(u: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let m = center.len();
    let r = radius * u[0].powf(1.0 / m as f64);
    let dir = cube_to_sphere(&u[1..], m);
    center.iter().zip(&dir).map(|(c, d)| c + r * d).collect()
}

/// Unit vector in ℝ^m from `m − 1` uniform coordinates.
pub fn cube_to_sphere(u: &[f64], m: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    match m {
        1 => vec![if u.first().copied().unwrap_or(0.0) < 0.5 { -1.0 } else { 1.0 }],
        2 => {
            let t = 2.0 * PI * u[0];
            vec![t.cos(), t.sin()]
        }
        3 => {
            let z = 2.0 * u[0] - 1.0;
            let s = (1.0 - z * z).max(0.0).sqrt();
            let t = 2.0 * PI * u[1];
            vec![s * t.cos(), s * t.sin(), z]
        }
        _ => {
            // two independent angles on S¹ × S¹ scaled to S³ (Hopf-type parametrisation)
            let s = u[0].sqrt();
            let c = (1.0 - u[0]).sqrt();
            let (t1, t2) = (2.0 * PI * u[1], 2.0 * PI * u[2]);
            vec![s * t1.cos(), s * t1.sin(), c * t2.cos(), c * t2.sin()]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_unit_cube() {
        let mut a = Kronecker::new(3, 42);
        let mut b = Kronecker::new(3, 42);
        for _ in 0..100 {
            let p = a.next_point();
            assert_eq!(p, b.next_point());
            assert!(p.iter().all(|x| (0.0..1.0).contains(x)));
        }
    }

    #[test]
    fn ball_points_stay_in_ball() {
        let mut k = Kronecker::new(4, 0);
        for _ in 0..200 {
            let p = cube_to_ball(&k.next_point(), &[1.0, 0.0, 0.0, 2.0], 0.5);
            let r: f64 = [p[0] - 1.0, p[1], p[2], p[3] - 2.0].iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(r <= 0.5 + 1e-12);
        }
    }
}
