//! `counterexample build|verify|falsify`.

use super::report::{num, take, take_list, Band, Report, ReportRow, Table};
use super::CounterStage;
use crate::config::Config;
use crate::counterexample::{
    falsify, window_radius, Candidate, CellLowerCandidate, ChainStep, ConstantCandidate, CounterDomain, Mutation, Reordered, WindowGrid,
    Witness,
};
use crate::error::{Error, Result};

pub const COUNTER_KEYS: &[&str] =
    &["seed", "atoms", "m_max", "k", "n", "count", "candidate", "constant_value", "order", "mutations", "axis_slack"];

fn certificate_table(domain: &CounterDomain) -> Table {
    let p = &domain.potential;
    let mut t = Table::new("certificate", &["k", "m", "x_k", "c_k", "s_k", "log_r_k", "representable", "sampled_max", "lambda_at_1_over_k"]);
    for (i, (a, disc)) in p.atoms.iter().zip(&domain.discs.discs).enumerate() {
        let k = i as u32 + 1;
        let lam = p.eval_on_a(k);
        t.push(vec![
            k.to_string(),
            a.m.to_string(),
            num(a.x),
            num(p.weights[i]),
            num(p.sup_logs[i]),
            num(disc.log_radius),
            disc.representable.to_string(),
            disc.sampled_max.map(num).unwrap_or_default(),
            num(lam.lo),
        ]);
    }
    t
}

fn certificate_rows(domain: &CounterDomain, m_max: u32) -> Vec<ReportRow> {
    let p = &domain.potential;
    let exp = "counterexample/certificates";
    let min_lambda = (1..=m_max).map(|m| p.eval_on_a(m).lo).fold(f64::INFINITY, f64::min);
    let sampled: Vec<f64> = domain.discs.discs.iter().filter_map(|d| d.sampled_max).collect();
    let max_sampled = sampled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    vec![
        ReportRow::new(exp, "weighted_sup_sum_hi", p.weighted_sup_sum().hi, Band::AtMost(0.5)),
        ReportRow::new(exp, "min_lambda_on_a_lo", min_lambda, Band::AtLeast(-0.5)),
        ReportRow::new(exp, "max_lambda_on_sampled_discs", max_sampled, Band::AtMost(-1.0)),
        ReportRow::new(exp, "sampled_discs", sampled.len() as f64, Band::AtLeast(1.0)),
    ]
}

fn step_name(step: Option<ChainStep>) -> &'static str {
    match step {
        None => "none",
        Some(ChainStep::Hypotheses) => "hypotheses",
        Some(ChainStep::Dini) => "dini",
        Some(ChainStep::Slices) => "slices",
        Some(ChainStep::Continuity) => "continuity",
    }
}

fn chain_row(table: &mut Table, disabled: Option<ChainStep>, w: &Witness) {
    let mut cells = vec![step_name(disabled).to_string(), w.verdict().to_string()];
    match w {
        Witness::Contradiction(r) | Witness::BelowU(r) | Witness::Inconclusive(r) => {
            let slices = r.slices.iter().map(|(y, v)| format!("{}:{}", num(*y), num(*v))).collect::<Vec<_>>().join(" ");
            cells.extend([
                r.q0.to_string(),
                num(r.ring_max),
                slices,
                num(r.lipschitz),
                num(r.axis_bound),
                num(r.axis_value),
                num(r.u_floor),
                String::new(),
            ]);
        }
        Witness::Hypothesis { property, q, point, value } => {
            cells.extend(std::iter::repeat(String::new()).take(7));
            cells.push(format!("{property:?} q={q} at {} {} {} value {}", num(point[0]), num(point[1]), num(point[2]), num(*value)));
        }
        Witness::Incomplete { step } => {
            cells.extend(std::iter::repeat(String::new()).take(7));
            cells.push(format!("{step:?} disabled"));
        }
    }
    table.push(cells);
}

pub fn counterexample(stage: CounterStage, mut cfg: Config) -> Result<Report> {
    let _seed: u64 = take(&mut cfg, "seed", 1)?;
    let atoms: usize = take(&mut cfg, "atoms", 256)?;
    let m_max: u32 = take(&mut cfg, "m_max", 30)?;
    let domain = CounterDomain::build(atoms)?;
    let command = match stage {
        CounterStage::Build => "counterexample-build",
        CounterStage::Verify => "counterexample-verify",
        CounterStage::Falsify => "counterexample-falsify",
    };
    if stage == CounterStage::Build {
        let mut report = Report::new(command, cfg);
        report.rows.push(ReportRow::new("counterexample/build", "atoms", domain.potential.len() as f64, Band::AtLeast(1.0)));
        report.tables.push(certificate_table(&domain));
        return Ok(report);
    }
    if stage == CounterStage::Verify {
        let mut report = Report::new(command, cfg);
        report.rows.extend(certificate_rows(&domain, m_max));
        report.tables.push(certificate_table(&domain));
        report.verdict = Some(format!("verdict=certificates-{}", if report.passed() { "hold" } else { "fail" }));
        return Ok(report);
    }

    let k: u32 = take(&mut cfg, "k", 4)?;
    let n: usize = take(&mut cfg, "n", 96)?;
    let count: usize = take(&mut cfg, "count", 6)?;
    let name: String = take(&mut cfg, "candidate", "cell-lower".to_string())?;
    let mutations: bool = take(&mut cfg, "mutations", true)?;
    let axis_slack: f64 = take(&mut cfg, "axis_slack", 0.02)?;
    let radius = window_radius(k)?;
    let grid = WindowGrid::new(&domain, k, radius, n)?;
    let candidate: Box<dyn Candidate> = match name.as_str() {
        "cell-lower" => Box::new(CellLowerCandidate::new(&domain, &grid, count)),
        "constant" => Box::new(ConstantCandidate { value: take(&mut cfg, "constant_value", -1.0)?, count }),
        "reordered" => {
            let order: Vec<usize> = take_list(&mut cfg, "order", (0..count).rev().collect())?;
            if order.len() != count || order.iter().any(|&q| q >= count) {
                return Err(Error::Config { line: 0, msg: format!("order must permute 0..{count}") });
            }
            Box::new(Reordered { inner: CellLowerCandidate::new(&domain, &grid, count), order })
        }
        other => return Err(Error::Config { line: 0, msg: format!("unknown candidate `{other}` (cell-lower, constant, reordered)") }),
    };

    let mut report = Report::new(command, cfg);
    report.rows.extend(certificate_rows(&domain, m_max));
    let mut chain = Table::new(
        "chain",
        &["disabled", "verdict", "q0", "ring_max", "slices", "lipschitz", "axis_bound", "axis_value", "u_floor", "witness"],
    );
    let base = falsify(&domain, &grid, candidate.as_ref(), Mutation::default())?;
    chain_row(&mut chain, None, &base);
    let exp = "counterexample/falsify";
    if name == "cell-lower" {
        report.rows.push(ReportRow::flag(exp, "contradiction", matches!(base, Witness::Contradiction(_))));
        if let Witness::Contradiction(r) = &base {
            report.rows.push(ReportRow::new(exp, "axis_bound", r.axis_bound, Band::AtMost(-0.75 + axis_slack)));
            report.rows.push(ReportRow::new(exp, "u_floor", r.u_floor, Band::AtLeast(-0.5)));
        }
    }
    if mutations {
        for step in [ChainStep::Hypotheses, ChainStep::Dini, ChainStep::Slices, ChainStep::Continuity] {
            let w = falsify(&domain, &grid, candidate.as_ref(), Mutation { disabled: Some(step) })?;
            chain_row(&mut chain, Some(step), &w);
            let changed = w.verdict() != base.verdict();
            report.rows.push(ReportRow::flag(exp, format!("mutation_{}_changes_verdict", step_name(Some(step))), changed));
        }
    }
    report.tables.push(certificate_table(&domain));
    report.tables.push(chain);
    report.verdict = Some(format!("verdict={} candidate={name} k={k} n={n}", base.verdict()));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_and_small_falsify() {
        let r = counterexample(CounterStage::Verify, Config::parse("atoms = 120\n").unwrap()).unwrap();
        assert!(r.passed(), "{}", r.summary());
        assert_eq!(r.verdict.as_deref(), Some("verdict=certificates-hold"));
        let r = counterexample(CounterStage::Falsify, Config::parse("n = 32\ncount = 4\n").unwrap()).unwrap();
        assert!(r.passed(), "{}", r.summary());
        assert!(r.verdict.unwrap().starts_with("verdict=contradiction"));
        assert_eq!(r.tables[1].rows.len(), 5);
    }

    #[test]
    fn constant_candidate_is_caught_by_a_hypothesis() {
        let r = counterexample(CounterStage::Falsify, Config::parse("n = 32\ncandidate = constant\nmutations = false\n").unwrap()).unwrap();
        assert!(r.verdict.unwrap().starts_with("verdict=hypothesis"));
    }
}
