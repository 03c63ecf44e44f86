//! Envelope solver checks and the continuity demo on the ball.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{num, take, take_list, Band, Report, ReportRow, Table};
use crate::config::Config;
use crate::envelope::{envelope_residual, solve_envelope, EnvelopeProblem, Solver};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::subharmonic::Mode;

pub const ENVELOPE_KEYS: &[&str] = &["seed", "n", "small_n", "tolerance", "pairs", "subsolutions"];
pub const Q2_KEYS: &[&str] = &["seed", "complex_dim", "ns", "tolerance"];

fn unit_ball(n: usize, rank: usize, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<ScalarField> {
    let spec = GridSpec::from_bounds(&vec![-1.0; rank], &vec![1.0; rank], &vec![n; rank])?;
    ScalarField::build(spec, f, |p| p.iter().map(|x| x * x).sum::<f64>() < 1.0)
}

fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.inside_indices().map(|i| (a.value(i) - b.value(i)).abs()).fold(0.0, f64::max)
}

/// Largest `a − b` over inside nodes, floored at zero.
fn excess(a: &ScalarField, b: &ScalarField) -> f64 {
    a.inside_indices().map(|i| a.value(i) - b.value(i)).fold(0.0, f64::max)
}

/// Smooth random obstacle: a few random planar waves plus a kink.
struct Wave {
    terms: Vec<(f64, f64, f64, f64)>,
    kink: (f64, f64),
}

impl Wave {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let terms = (0..3)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(0.0..6.3)))
            .collect();
        Wave { terms, kink: (rng.gen_range(0.0..1.0), rng.gen_range(-0.5..0.5)) }
    }

    fn eval(&self, p: &[f64]) -> f64 {
        let s: f64 = self.terms.iter().map(|&(a, kx, ky, ph)| a * (kx * p[0] + ky * p[1] + ph).sin()).sum();
        s + self.kink.0 * (p[0] - self.kink.1).abs()
    }
}

/// `max_j (a_j·p + b_j)`: convex, hence a discrete subsolution for interpolating stencils.
fn affine_max(rng: &mut ChaCha8Rng) -> Vec<(f64, f64, f64)> {
    let count = rng.gen_range(1..=4);
    (0..count).map(|_| (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-1.0..1.0))).collect()
}

fn eval_affine(planes: &[(f64, f64, f64)], p: &[f64]) -> f64 {
    planes.iter().map(|&(a, b, c)| a * p[0] + b * p[1] + c).fold(f64::NEG_INFINITY, f64::max)
}

fn main_obstacle(p: &[f64]) -> f64 {
    (3.0 * p[0]).sin() + p[1] * p[1] - (2.0 * p[1]).cos() + 0.5 * (p[0] - 0.2).abs()
}

pub fn envelope(mut cfg: Config) -> Result<Report> {
    let seed: u64 = take(&mut cfg, "seed", 1)?;
    let n: usize = take(&mut cfg, "n", 256)?;
    let small_n: usize = take(&mut cfg, "small_n", 65)?;
    let tol: f64 = take(&mut cfg, "tolerance", 1e-10)?;
    let pairs: usize = take(&mut cfg, "pairs", 20)?;
    let subs: usize = take(&mut cfg, "subsolutions", 50)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = Report::new("envelope", cfg);
    let mut trials = Table::new("envelope_trials", &["check", "trial", "value"]);
    let exp = "envelope";

    // the 3×3 instance: a unit spike over a zero frame flattens to zero
    let spec = GridSpec::from_bounds(&[-1.0, -1.0], &[1.0, 1.0], &[3, 3])?;
    let spike = ScalarField::build(spec, |p| if p[0] == 0.0 && p[1] == 0.0 { 1.0 } else { 0.0 }, |_| true)?;
    for (solver, name) in [(Solver::Jacobi, "three_by_three_jacobi"), (Solver::Policy, "three_by_three_policy")] {
        let s = solve_envelope(&EnvelopeProblem::new(spike.clone(), Mode::Subharmonic, 1e-12)?.with_solver(solver))?;
        let err = s.u.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        report.rows.push(ReportRow::new(exp, name, err, Band::AtMost(1e-12)));
    }

    let f = unit_ball(n, 2, main_obstacle)?;
    let problem = EnvelopeProblem::new(f.clone(), Mode::Subharmonic, tol)?;
    let sol = solve_envelope(&problem)?;
    report.rows.push(ReportRow::new(exp, "residual", envelope_residual(&sol.u, &problem)?, Band::AtMost(tol)));
    report.rows.push(ReportRow::new(exp, "fixed_point_residual", sol.residual, Band::AtMost(tol)));
    let again = solve_envelope(&EnvelopeProblem::new(sol.u.clone(), Mode::Subharmonic, tol)?)?;
    report.rows.push(ReportRow::new(exp, "idempotence_drift", max_diff(&again.u, &sol.u), Band::AtMost(tol)));

    let mut worst_subsolution = 0.0f64;
    let mut worst_above = 0.0f64;
    for t in 0..subs {
        let planes = affine_max(&mut rng);
        let w = f.map(|i, _| eval_affine(&planes, &f.spec().point(i)))?;
        let shift = w.inside_indices().map(|i| w.value(i) - f.value(i)).fold(f64::NEG_INFINITY, f64::max);
        let w = w.map(|_, v| v - shift)?;
        worst_subsolution = worst_subsolution.max(envelope_residual(&w, &problem)?);
        let above = excess(&w, &sol.u);
        worst_above = worst_above.max(above);
        trials.push(vec!["maximality".into(), t.to_string(), num(above)]);
    }
    report.rows.push(ReportRow::new(exp, "affine_max_subsolution_residual", worst_subsolution, Band::AtMost(1e-12)));
    report.rows.push(ReportRow::new(exp, "maximality_excess", worst_above, Band::AtMost(tol)));

    let mut worst_order = 0.0f64;
    for t in 0..pairs {
        let wave = Wave::draw(&mut rng);
        let (cx, cy, height) = (rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6), rng.gen_range(0.0..1.0));
        let lift = rng.gen_range(0.0..0.1);
        let lo = unit_ball(small_n, 2, |p| wave.eval(p))?;
        let hi = lo.map(|i, v| {
            let p = lo.spec().point(i);
            v + lift + height * (1.0 - 8.0 * ((p[0] - cx).powi(2) + (p[1] - cy).powi(2))).max(0.0)
        })?;
        let plo = solve_envelope(&EnvelopeProblem::new(lo, Mode::Subharmonic, tol)?)?;
        let phi = solve_envelope(&EnvelopeProblem::new(hi, Mode::Subharmonic, tol)?)?;
        let v = excess(&plo.u, &phi.u);
        worst_order = worst_order.max(v);
        trials.push(vec!["monotone".into(), t.to_string(), num(v)]);
    }
    report.rows.push(ReportRow::new(exp, "monotonicity_violation", worst_order, Band::AtMost(tol)));

    report.tables.push(trials);
    report.fields.push(("obstacle".into(), f));
    report.fields.push(("envelope".into(), sol.u));
    Ok(report)
}

/// Envelope of a continuous obstacle on the unit ball of ℂ^d at several resolutions,
/// recording how large the discrete jumps of the envelope are. No continuity claim
/// is made; the rows only certify that each solve is a subsolution below `f`.
pub fn q2_demo(mut cfg: Config) -> Result<Report> {
    let _seed: u64 = take(&mut cfg, "seed", 1)?;
    let d: usize = take(&mut cfg, "complex_dim", 1)?;
    let default_ns = if d == 1 { vec![33, 65, 129] } else { vec![7, 9, 11] };
    let ns: Vec<usize> = take_list(&mut cfg, "ns", default_ns)?;
    let tol: f64 = take(&mut cfg, "tolerance", 1e-9)?;
    if !(1..=2).contains(&d) {
        return Err(Error::Config { line: 0, msg: format!("complex_dim {d} outside 1..=2") });
    }
    let rank = 2 * d;
    let mode = if d == 1 { Mode::Subharmonic } else { Mode::PshDirectional };
    // |Re z_1| − |z|²/2 + Im z_d: continuous, neither psh nor pluriharmonic
    let f = |p: &[f64]| p[0].abs() - 0.5 * p.iter().map(|x| x * x).sum::<f64>() + 0.3 * p[rank - 1];

    let mut report = Report::new("q2-demo", cfg);
    let mut table = Table::new("q2_demo", &["n", "h", "iterations", "residual", "max_jump", "max_jump_over_h", "max_gap"]);
    let mut last = None;
    for &n in &ns {
        let obstacle = unit_ball(n, rank, f)?;
        let problem = EnvelopeProblem::new(obstacle.clone(), mode, tol)?;
        let sol = solve_envelope(&problem)?;
        let residual = envelope_residual(&sol.u, &problem)?;
        let spec = sol.u.spec();
        let h = spec.max_spacing();
        let mut jump = 0.0f64;
        for i in sol.u.inside_indices() {
            for axis in 0..rank {
                if let (_, Some(j)) = spec.axis_neighbors(i, axis) {
                    if sol.u.is_inside(j) {
                        jump = jump.max((sol.u.value(j) - sol.u.value(i)).abs());
                    }
                }
            }
        }
        let gap = max_diff(&obstacle, &sol.u);
        table.push(vec![n.to_string(), num(h), sol.iterations.to_string(), num(residual), num(jump), num(jump / h), num(gap)]);
        report.rows.push(ReportRow::new("q2-demo", format!("residual_n{n}"), residual, Band::AtMost(tol)));
        last = Some(sol.u);
    }
    report.tables.push(table);
    if let Some(u) = last {
        report.fields.push(("q2_envelope".into(), u));
    }
    Ok(report)
}
