//! Gluing across `∂Ω₂` and transfer of the cone modulus to `û_k`.

use rayon::prelude::*;

use super::{cone_shifts, ApproxSequence};
use crate::domains::Cone;
use crate::envelope::{solve_envelope, EnvelopeProblem};
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::subharmonic::{stencil_defect_with, DefectReport, ModulusOfContinuity, RingStencil};

#[derive(Debug, Clone)]
pub struct GluingReport {
    pub k: u32,
    /// `max |P_{Ω₂} φ̃_k − û_k|` over `Ω₂`.
    pub envelope_gap: f64,
    /// Largest ring-stencil defect of the glued field at nodes whose stencil meets both sides.
    pub seam_defect: f64,
    /// Seam nodes with defect above the tolerance.
    pub witnesses: Vec<usize>,
    pub glued: ScalarField,
    pub passed: bool,
}

/// Solves the envelope on `Ω₂` with the collar held at `ρ′ − k + outside_offset`
/// and checks it against `û_k`. `outside_offset = 0` is the actual gluing; other
/// values are for negative controls.
pub fn gluing_check(seq: &ApproxSequence, index: usize, outside_offset: f64) -> Result<GluingReport> {
    let entry = seq.entries.get(index).ok_or_else(|| Error::InvalidArgument(format!("no entry {index}")))?;
    let tol = seq.params.tolerance;
    let glue = seq.glue_floor(entry.k)?;
    let omega2 = &entry.omega2;
    let obstacle = entry.phi_tilde.map(|i, v| if omega2[i] { v } else { glue.value(i) + outside_offset })?;
    let pinned: Vec<bool> = omega2.iter().map(|&b| !b).collect();
    let problem = EnvelopeProblem::new(obstacle, seq.params.mode, tol)?.with_pinned(pinned).with_start(&entry.u_hat);
    let sol = solve_envelope(&problem)?;
    let glued = sol.u;
    let envelope_gap = glued
        .inside_indices()
        .filter(|&i| omega2[i])
        .map(|i| (glued.value(i) - entry.u_hat.value(i)).abs())
        .fold(0.0, f64::max);

    let spec = glued.spec();
    let stencil = RingStencil::new(spec, seq.params.mode)?;
    let seam = |i: usize| match stencil.neighbours(spec, i) {
        Some(nb) => {
            let side = omega2[i];
            nb.iter().any(|&j| glued.is_inside(j) && omega2[j] != side)
        }
        None => false,
    };
    let (seam_defect, witnesses) = match stencil_defect_with(&glued, &stencil, seam) {
        Ok(rep) => (rep.max_positive(), rep.defects.iter().filter(|(_, d)| *d > tol).map(|(i, _)| *i).collect()),
        Err(Error::NoTestableNodes) => (0.0, Vec::new()),
        Err(e) => return Err(e),
    };
    let passed = envelope_gap <= 2.0 * tol && seam_defect <= tol;
    Ok(GluingReport { k: entry.k, envelope_gap, seam_defect, witnesses, glued, passed })
}

/// `û_k(z + w) − û_k(z) − ω(|w|)` maximized over sampled shifts `w` of `K_ε`, per node
/// `z ∈ Ω₂`, with `û_k(z + w)` interpolated. Shifts that leave the inside nodes are skipped and counted.
pub fn modulus_transfer_check(seq: &ApproxSequence, index: usize, omega: &ModulusOfContinuity) -> Result<DefectReport> {
    let entry = seq.entries.get(index).ok_or_else(|| Error::InvalidArgument(format!("no entry {index}")))?;
    let u = &entry.u_hat;
    let spec = u.spec();
    let cone = Cone::theorem(entry.epsilon, 7.0 * seq.domain.graph().c(), spec.rank())?;
    let shifts = cone_shifts(&cone, spec.spacing());
    if shifts.is_empty() {
        return Err(Error::InvalidArgument(format!("cone of height {} is empty", entry.epsilon)));
    }
    let per_node: Vec<(Option<(usize, f64)>, usize)> = (0..spec.len())
        .into_par_iter()
        .filter(|&i| entry.omega2[i] && u.is_inside(i))
        .map(|i| {
            let z = spec.point(i);
            let mut worst = f64::NEG_INFINITY;
            let mut skipped = 0;
            for (w, len) in &shifts {
                let p: Vec<f64> = z.iter().zip(w).map(|(a, b)| a + b).collect();
                match u.interpolate(&p) {
                    Some(v) => worst = worst.max(v - u.value(i) - omega.eval(*len)),
                    None => skipped += 1,
                }
            }
            (worst.is_finite().then_some((i, worst)), skipped)
        })
        .collect();
    let skipped = per_node.iter().map(|p| p.1).sum();
    let defects: Vec<(usize, f64)> = per_node.into_iter().filter_map(|p| p.0).collect();
    if defects.is_empty() {
        return Err(Error::NoTestableNodes);
    }
    Ok(DefectReport { kind: "modulus transfer".into(), defects, skipped })
}
