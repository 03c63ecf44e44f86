//! The boundary regularization pipeline and the continuity certificate.

use super::report::{num, take, take_list, Band, Report, ReportRow, Table};
use crate::config::Config;
use crate::domains::descriptor::graph_from_config;
use crate::domains::{CapDomain, Cone, Region};
use crate::error::{Error, Result};
use crate::grid::{read_field, ScalarField};
use crate::regularize::{
    gluing_check, lemma_continuity_certificate, modulus_transfer_check, regularize_boundary, ApproxSequence, LemmaCertificate, ProbePlan,
    RegularizationParams,
};
use crate::subharmonic::ModulusOfContinuity;

pub const REGULARIZE_KEYS: &[&str] = &[
    "C", "dim", "F.kind", "F.params", "grid.n", "epsilon", "seed", "ks", "tolerance", "gain", "input_slack", "const_value", "pole",
    "lemma.point", "lemma.cone", "lemma.delta", "lemma.radii", "inputs", "probe_radius", "refine", "seam_tolerance", "write_fields",
];
pub const LEMMA_KEYS: &[&str] = &[
    "C", "dim", "F.kind", "F.params", "grid.n", "epsilon", "seed", "ks", "tolerance", "gain", "input_slack", "const_value", "pole",
    "lemma.point", "lemma.cone", "lemma.delta", "lemma.radii", "input", "field",
];

/// Domain, grid size and regularization parameters shared by both commands.
struct Setup {
    domain: CapDomain,
    n: Vec<usize>,
    params: RegularizationParams,
    const_value: f64,
    pole: Vec<f64>,
    lemma: LemmaSettings,
}

struct LemmaSettings {
    point: Vec<f64>,
    cone: Cone,
    delta: ModulusOfContinuity,
    /// Probe radii in units of the grid spacing.
    radii: Vec<f64>,
}

impl LemmaSettings {
    fn certify(&self, u: &ScalarField) -> Result<LemmaCertificate> {
        let h = u.spec().max_spacing();
        let plan = ProbePlan::new(self.radii.iter().map(|r| r * h).collect(), u.spec().rank());
        lemma_continuity_certificate(u, &self.point, &self.cone, &self.delta, &plan)
    }
}

fn setup(cfg: &mut Config, default_n: usize) -> Result<Setup> {
    let c: f64 = take(cfg, "C", 0.25)?;
    let _dim: usize = take(cfg, "dim", 1)?;
    // resolve the graph keys before reading them back
    let kind: String = take(cfg, "F.kind", "const".to_string())?;
    if cfg.raw("F.params").is_some() || kind != "const" {
        take_list::<f64>(cfg, "F.params", vec![3.0 * c])?;
    }
    let graph = graph_from_config(cfg)?;
    let domain = CapDomain::new(graph);
    let m = domain.ambient_dim();
    let n: Vec<usize> = take_list(cfg, "grid.n", vec![default_n; m])?;
    if n.len() != m {
        return Err(Error::Config { line: 0, msg: format!("grid.n needs {m} entries") });
    }
    let d = RegularizationParams::default();
    let params = RegularizationParams {
        ks: take_list(cfg, "ks", d.ks)?,
        eps0: take(cfg, "epsilon", d.eps0)?,
        tolerance: take(cfg, "tolerance", d.tolerance)?,
        gain: take(cfg, "gain", d.gain)?,
        input_slack: take(cfg, "input_slack", d.input_slack)?,
        ..d
    };
    let _seed: u64 = take(cfg, "seed", 1)?;
    let const_value = take(cfg, "const_value", 0.3)?;
    // default pole: the top of the cap above the axis, a boundary point
    let mut top = vec![0.0; m];
    top[m - 1] = domain.graph().cap_height(&vec![0.0; m - 1])?;
    let pole: Vec<f64> = take_list(cfg, "pole", top)?;
    let mut p0 = vec![0.0; m];
    p0[0] = 0.3;
    let point: Vec<f64> = take_list(cfg, "lemma.point", p0)?;
    let cone: Vec<f64> = take_list(cfg, "lemma.cone", vec![0.3, 1.0, 0.2])?;
    let delta: Vec<f64> = take_list(cfg, "lemma.delta", vec![1.2, 1.0])?;
    let radii: Vec<f64> = take_list(cfg, "lemma.radii", vec![8.0, 4.0])?;
    if pole.len() != m || point.len() != m || cone.len() != 3 || delta.len() != 2 {
        return Err(Error::Config { line: 0, msg: "pole/lemma.point need one entry per axis, lemma.cone three, lemma.delta two".into() });
    }
    let lemma = LemmaSettings {
        point,
        cone: Cone::lemma(cone[0], cone[1], cone[2], m)?,
        delta: ModulusOfContinuity::linear(delta[0], delta[1]),
        radii,
    };
    Ok(Setup { domain, n, params, const_value, pole, lemma })
}

impl Setup {
    fn input(&self, name: &str, n: &[usize]) -> Result<ScalarField> {
        let spec = self.domain.grid(n)?;
        let dom = &self.domain;
        let inside = |z: &[f64]| dom.contains(z);
        match name {
            "const" => ScalarField::build(spec, |_| self.const_value, inside),
            "quad" => ScalarField::build(spec, |z| z.iter().map(|x| x * x).sum::<f64>() - 10.0, inside),
            "log" => ScalarField::build(spec, |z| z.iter().zip(&self.pole).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt().ln(), inside),
            other => Err(Error::Config { line: 0, msg: format!("unknown input `{other}` (const, quad, log)") }),
        }
    }

    /// `|a|² + (x/5C)² ≤ r²`, a compact of the cap away from `∂U`.
    fn in_probe(&self, z: &[f64], r: f64) -> bool {
        let m = z.len();
        let h = 5.0 * self.domain.graph().c();
        z[..m - 1].iter().map(|x| x * x).sum::<f64>() + (z[m - 1] / h).powi(2) <= r * r
    }
}

fn min_gap<I: Iterator<Item = usize>>(nodes: I, a: &ScalarField, b: &ScalarField) -> f64 {
    nodes.map(|i| a.value(i) - b.value(i)).fold(f64::INFINITY, f64::min)
}

/// Per-entry checks of one input; returns the rows and the per-k table lines.
fn check_sequence(setup: &Setup, name: &str, seq: &ApproxSequence, probe_r: f64, seam_tol: f64, table: &mut Table) -> Result<Vec<ReportRow>> {
    let exp = format!("regularize/{name}");
    let u = &seq.input;
    let spec = u.spec();
    let h = spec.max_spacing();
    let tol = seq.params.tolerance;
    let mut worst_increase = 0.0f64;
    let mut worst_below_u = f64::INFINITY;
    let mut worst_residual = 0.0f64;
    let mut worst_sandwich = f64::INFINITY;
    let mut worst_seam = 0.0f64;
    let mut worst_gap = 0.0f64;
    let mut worst_transfer = f64::NEG_INFINITY;
    for (idx, e) in seq.entries.iter().enumerate() {
        if idx > 0 {
            let prev = &seq.entries[idx - 1].u_hat;
            let inc = u.inside_indices().map(|i| e.u_hat.value(i) - prev.value(i)).fold(0.0, f64::max);
            worst_increase = worst_increase.max(inc);
        }
        worst_below_u = worst_below_u.min(min_gap(u.inside_indices(), &e.u_hat, u));
        worst_residual = worst_residual.max(e.residual);
        let floor = seq.glue_floor(e.k)?;
        let on2 = || u.inside_indices().filter(|&i| e.omega2[i]);
        let sandwich = min_gap(on2(), &e.phi_tilde, &e.u_hat).min(min_gap(on2(), &e.u_hat, &floor));
        worst_sandwich = worst_sandwich.min(sandwich);
        let glue = gluing_check(seq, idx, 0.0)?;
        worst_seam = worst_seam.max(glue.seam_defect);
        worst_gap = worst_gap.max(glue.envelope_gap);
        let transfer = modulus_transfer_check(seq, idx, &e.omega)?.max_defect();
        let bound = 2.0 * h * e.k as f64;
        worst_transfer = worst_transfer.max(transfer - bound);
        let sup = u
            .inside_indices()
            .filter(|&i| setup.in_probe(&spec.point(i), probe_r))
            .map(|i| e.u_hat.value(i) - u.value(i))
            .fold(0.0, f64::max);
        let slack = setup.lemma.certify(&e.u_hat).map(|c| num(c.continuity_slack)).unwrap_or_default();
        table.push(vec![
            name.to_string(),
            e.k.to_string(),
            num(e.epsilon),
            num(e.residual),
            num(sup),
            num(transfer),
            num(bound),
            slack,
            num(glue.seam_defect),
            num(glue.envelope_gap),
        ]);
    }
    Ok(vec![
        ReportRow::new(&exp, "max_increase", worst_increase, Band::Exactly(0.0)),
        ReportRow::new(&exp, "min_uhat_minus_u", worst_below_u, Band::AtLeast(-tol)),
        ReportRow::new(&exp, "max_residual", worst_residual, Band::AtMost(tol)),
        ReportRow::new(&exp, "min_sandwich_gap", worst_sandwich, Band::AtLeast(-tol)),
        ReportRow::new(&exp, "max_seam_defect", worst_seam, Band::AtMost(seam_tol)),
        ReportRow::new(&exp, "max_gluing_gap", worst_gap, Band::AtMost(seam_tol)),
        ReportRow::new(&exp, "max_transfer_excess", worst_transfer, Band::AtMost(0.0)),
    ])
}

pub fn regularize(mut cfg: Config) -> Result<Report> {
    let setup = setup(&mut cfg, 256)?;
    let inputs: Vec<String> = take_list(&mut cfg, "inputs", vec!["const".to_string(), "quad".into(), "log".into()])?;
    let probe_r: f64 = take(&mut cfg, "probe_radius", 0.5)?;
    let refine: bool = take(&mut cfg, "refine", true)?;
    let seam_tol: f64 = take(&mut cfg, "seam_tolerance", 1e-6)?;
    let write_fields: bool = take(&mut cfg, "write_fields", false)?;
    let mut report = Report::new("regularize", cfg);
    let mut table = Table::new(
        "regularize",
        &["input", "k", "epsilon", "residual", "sup_uhat_minus_u", "transfer_defect", "transfer_bound", "continuity_slack", "seam_defect", "gluing_gap"],
    );
    let mut quad_fine = None;
    for name in &inputs {
        let u = setup.input(name, &setup.n)?;
        let seq = regularize_boundary(&setup.domain, &u, &setup.params)?;
        report.rows.extend(check_sequence(&setup, name, &seq, probe_r, seam_tol, &mut table)?);
        let last = seq.entries.last().expect("ks is non-empty");
        if name == "quad" {
            quad_fine = Some(last.u_hat.clone());
        }
        if write_fields {
            report.fields.push((format!("uhat_{name}_k{}", last.k), last.u_hat.clone()));
        }
    }
    report.tables.push(table);

    if refine {
        // halve the spacing: the certificate slack should at least halve
        let fine = match quad_fine {
            Some(f) => f,
            None => regularize_boundary(&setup.domain, &setup.input("quad", &setup.n)?, &setup.params)?.entries.pop().expect("ks is non-empty").u_hat,
        };
        let coarse_n: Vec<usize> = setup.n.iter().map(|n| n / 2).collect();
        let coarse_seq = regularize_boundary(&setup.domain, &setup.input("quad", &coarse_n)?, &setup.params)?;
        let coarse = &coarse_seq.entries.last().expect("ks is non-empty").u_hat;
        let cf = setup.lemma.certify(&fine)?;
        let cc = setup.lemma.certify(coarse)?;
        let mut t = Table::new("lemma_refinement", &["grid", "h", "continuity_slack", "grid_slack", "holds"]);
        for (c, u) in [(&cc, coarse), (&cf, &fine)] {
            let grid = u.spec().shape().iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x");
            t.push(vec![grid, num(u.spec().max_spacing()), num(c.continuity_slack), num(c.grid_slack), c.holds.to_string()]);
        }
        report.tables.push(t);
        let exp = "regularize/lemma";
        report.rows.push(ReportRow::flag(exp, "certificate_holds", cf.holds && cc.holds));
        report.rows.push(ReportRow::new(exp, "coarse_slack", cc.continuity_slack, Band::AtLeast(f64::MIN_POSITIVE)));
        report.rows.push(ReportRow::new(exp, "slack_ratio", cf.continuity_slack / cc.continuity_slack, Band::AtMost(0.6)));
    }
    Ok(report)
}

pub fn lemma_check(mut cfg: Config) -> Result<Report> {
    let setup = setup(&mut cfg, 128)?;
    let input: String = take(&mut cfg, "input", "quad".to_string())?;
    let field: String = take(&mut cfg, "field", String::new())?;
    let u = if field.is_empty() {
        let seq = regularize_boundary(&setup.domain, &setup.input(&input, &setup.n)?, &setup.params)?;
        seq.entries.into_iter().last().expect("ks is non-empty").u_hat
    } else {
        read_field(&field)?
    };
    let cert = setup.lemma.certify(&u)?;
    let mut table = Table::new("lemma_probes", &["radius", "direction", "x", "alpha", "sup_sphere", "u_x", "lower_bound", "slack", "chain_ok"]);
    for p in &cert.probes {
        let x = p.x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" ");
        table.push(vec![
            num(p.radius),
            p.direction.to_string(),
            x,
            num(p.alpha),
            num(p.sup_sphere),
            num(p.u_x),
            num(p.lower_bound),
            num(p.slack),
            p.chain_ok.to_string(),
        ]);
    }
    let mut report = Report::new("lemma-check", cfg);
    report.rows.push(ReportRow::flag("lemma-check", "holds", cert.holds));
    report.rows.push(ReportRow::flag("lemma-check", "chain_ok", cert.probes.iter().all(|p| p.chain_ok)));
    report.rows.push(ReportRow::new("lemma-check", "continuity_slack", cert.continuity_slack, Band::AtLeast(0.0)));
    report.tables.push(table);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_regularize_run_passes() {
        let cfg = Config::parse("grid.n = 48, 48\nks = 1, 2, 4\ninputs = quad\nrefine = false\n").unwrap();
        let r = regularize(cfg).unwrap();
        assert!(r.passed(), "{}", r.summary());
        assert_eq!(r.tables[0].rows.len(), 3);
        assert!(r.config.render().contains("C = 0.25"));
    }

    #[test]
    fn missing_field_file_is_an_error() {
        let cfg = Config::parse("field = /nonexistent/u.pshf\n").unwrap();
        assert!(matches!(lemma_check(cfg), Err(Error::Io(_))));
    }

    #[test]
    fn unknown_input_is_rejected() {
        let cfg = Config::parse("grid.n = 32, 32\ninputs = cubic\nrefine = false\n").unwrap();
        assert!(regularize(cfg).is_err());
    }
}
