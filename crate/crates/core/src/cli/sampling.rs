//! The sampling experiments: the `ĤF` Lipschitz bound and the cone solid angle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{num, take, Band, Report, ReportRow, Table};
use crate::config::Config;
use crate::domains::{lipschitz_estimate, GraphKind, LipschitzGraph};
use crate::error::{Error, Result};
use crate::grid::cone_solid_angle_fraction;

pub const LIPSCHITZ_KEYS: &[&str] = &["seed", "C", "draws", "pairs", "slack"];
pub const CONE_KEYS: &[&str] = &["seed", "samples", "slope", "mc_tolerance"];

// |a| < 4/5, where the cap term of ĤF has slope below 20C/3
const INNER_RADIUS: f64 = 0.8;

/// Draw `i` of the seeded suite: constants, kinks and piecewise-linear `F`, cycling.
pub fn random_graph(rng: &mut ChaCha8Rng, c: f64, i: usize) -> Result<LipschitzGraph> {
    let dim = if i % 2 == 0 { 1 } else { 3 };
    match i % 3 {
        0 => LipschitzGraph::new(c, dim, GraphKind::Const(c * rng.gen_range(3.0..=4.0))),
        1 => {
            let center: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let far = center.iter().map(|x| x * x).sum::<f64>().sqrt() + 1.0;
            let slope = c * rng.gen_range(-0.5..0.5);
            let lo = 3.0 * c + (-slope * far).max(0.0);
            let hi = 4.0 * c - (slope * far).max(0.0);
            LipschitzGraph::new(c, dim, GraphKind::Abs { base: rng.gen_range(lo..hi), slope, center })
        }
        _ => {
            let knots: Vec<f64> = (0..5).map(|j| -1.0 + 0.5 * j as f64).collect();
            let mut v = c * rng.gen_range(3.0..=4.0);
            let mut values = vec![v];
            for _ in 1..knots.len() {
                v = (v + 0.5 * c * rng.gen_range(-0.95..0.95)).clamp(3.0 * c, 4.0 * c);
                values.push(v);
            }
            LipschitzGraph::new(c, 1, GraphKind::Pwl { knots, values })
        }
    }
}

fn kind_name(g: &LipschitzGraph) -> &'static str {
    match g.kind() {
        GraphKind::Const(_) => "const",
        GraphKind::Abs { .. } => "abs",
        GraphKind::Pwl { .. } => "pwl",
    }
}

fn hat_f_estimate(g: &LipschitzGraph, pairs: usize, seed: u64) -> Result<f64> {
    let center = vec![0.0; g.base_dim()];
    lipschitz_estimate(|a| g.hat_f(a).unwrap_or(f64::NAN), &center, INNER_RADIUS, pairs, seed)
}

pub fn lipschitz(mut cfg: Config) -> Result<Report> {
    let seed: u64 = take(&mut cfg, "seed", 1)?;
    let c: f64 = take(&mut cfg, "C", 1.0)?;
    let draws: usize = take(&mut cfg, "draws", 100)?;
    let pairs: usize = take(&mut cfg, "pairs", 20_000)?;
    let slack: f64 = take(&mut cfg, "slack", 0.05)?;
    let bound = 20.0 / 3.0 * c;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Table::new("lipschitz", &["draw", "kind", "base_dim", "estimate"]);
    let mut worst = 0.0f64;
    for i in 0..draws {
        let g = random_graph(&mut rng, c, i)?;
        let est = hat_f_estimate(&g, pairs, seed.wrapping_add(i as u64))?;
        worst = worst.max(est);
        table.push(vec![i.to_string(), kind_name(&g).into(), g.base_dim().to_string(), num(est)]);
    }
    let flat = hat_f_estimate(&LipschitzGraph::flat(c, 1), pairs, seed)?;
    table.push(vec!["flat".into(), "const".into(), "1".into(), num(flat)]);

    let mut report = Report::new("lipschitz", cfg);
    report.rows.push(ReportRow::new("lipschitz", "max_estimate", worst, Band::AtMost(bound + slack)));
    report.rows.push(ReportRow::new("lipschitz", "flat_estimate", flat, Band::AtLeast(bound - slack)));
    report.tables.push(table);
    Ok(report)
}

/// Closed form of the cone fraction in ℝ³: a polar cap of half-angle `atan(1/b)`.
fn cone_fraction_r3(b: f64) -> f64 {
    0.5 * (1.0 - b / b.hypot(1.0))
}

/// Monte Carlo oracle: uniform points of the unit ball in ℝ³ by rejection, counted
/// in the cone. Independent of the sphere parametrisations used elsewhere.
fn monte_carlo_r3(b: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut hits, mut taken) = (0usize, 0usize);
    while taken < samples {
        let p: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        if r2 >= 1.0 || r2 == 0.0 {
            continue;
        }
        taken += 1;
        if p[2] < -b * p[0].hypot(p[1]) {
            hits += 1;
        }
    }
    hits as f64 / samples as f64
}

pub fn cone_fraction(mut cfg: Config) -> Result<Report> {
    let seed: u64 = take(&mut cfg, "seed", 1)?;
    let samples: usize = take(&mut cfg, "samples", 10_000_000)?;
    let b: f64 = take(&mut cfg, "slope", 1.0)?;
    let mc_tol: f64 = take(&mut cfg, "mc_tolerance", 3e-3)?;
    if samples == 0 {
        return Err(Error::Config { line: 0, msg: "samples must be positive".into() });
    }
    let plane = cone_solid_angle_fraction(b, 2)?;
    let space = cone_solid_angle_fraction(b, 3)?;
    let mc = monte_carlo_r3(b, samples, seed);
    let plane_ref = (1.0f64).atan2(b) / std::f64::consts::PI;
    let space_ref = cone_fraction_r3(b);

    let mut table = Table::new("cone_fraction", &["m", "method", "value", "reference"]);
    table.push(vec!["2".into(), "closed-form".into(), num(plane), num(plane_ref)]);
    table.push(vec!["3".into(), "quadrature".into(), num(space), num(space_ref)]);
    table.push(vec!["3".into(), "monte-carlo".into(), num(mc), num(space)]);

    let mut report = Report::new("cone-fraction", cfg);
    report.rows.push(ReportRow::new("cone-fraction", "m2", plane, Band::Near { target: plane_ref, tol: 1e-12 }));
    report.rows.push(ReportRow::new("cone-fraction", "m3_quadrature", space, Band::Near { target: space_ref, tol: 1e-6 }));
    report.rows.push(ReportRow::new("cone-fraction", "m3_monte_carlo", mc, Band::Near { target: space, tol: mc_tol }));
    report.tables.push(table);
    Ok(report)
}
