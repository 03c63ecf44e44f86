//! Boundary regularization on a cap: the decreasing sequence
//! `û_k = P_Ω max{φ_k, ρ − k}` and the checks that make it continuous.

mod checks;
mod lemma;

pub use checks::{gluing_check, modulus_transfer_check, GluingReport};
pub use lemma::{lemma_continuity_certificate, sector_floor, LemmaCertificate, LemmaProbe, ProbePlan};

use std::collections::HashMap;

use rayon::prelude::*;

use crate::domains::{choose_profile, neighbourhood_offsets, CapDomain, Cone, CoreBuilder, ExhaustionProfile};
use crate::envelope::{envelope_residual, solve_envelope, EnvelopeProblem};
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::subharmonic::{submean_defect, sup_convolution, Mode, ModulusOfContinuity};

#[derive(Debug, Clone)]
pub struct RegularizationParams {
    pub ks: Vec<u32>,
    /// Starting `ε`; each `k` starts from the previous `ε` and halves until containment holds.
    pub eps0: f64,
    pub max_halvings: u32,
    pub tolerance: f64,
    /// Extra growth of `ρ` over `φ₁` per unit of `d`.
    pub gain: f64,
    pub mode: Mode,
    /// Largest circle submean defect accepted in the input, at radius `2h`.
    pub input_slack: f64,
}

impl Default for RegularizationParams {
    fn default() -> Self {
        RegularizationParams {
            ks: vec![1, 2, 4, 8, 16, 32],
            eps0: 0.25,
            max_halvings: 12,
            tolerance: 1e-8,
            gain: 2.0,
            mode: Mode::Subharmonic,
            input_slack: 0.05,
        }
    }
}

impl RegularizationParams {
    fn validate(&self) -> Result<()> {
        if self.ks.is_empty() || self.ks[0] == 0 || self.ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!("indices {:?} must be positive and strictly increasing", self.ks)));
        }
        if !(self.eps0 > 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("epsilon and tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ApproxEntry {
    pub k: u32,
    pub epsilon: f64,
    pub phi: ScalarField,
    pub phi_tilde: ScalarField,
    pub u_hat: ScalarField,
    pub residual: f64,
    pub iterations: usize,
    /// Inside nodes of `Ω₂(ε)`.
    pub omega2: Vec<bool>,
    /// `L_ε`.
    pub core: Vec<usize>,
    /// Modulus of `φ̃_k` over the pairs `(z, z + w)`, `z ∈ L_ε`, `w` a lattice shift of `K_ε`.
    pub omega: ModulusOfContinuity,
}

#[derive(Debug, Clone)]
pub struct ApproxSequence {
    pub domain: CapDomain,
    pub input: ScalarField,
    pub exhaustion: ExhaustionProfile,
    pub rho: ScalarField,
    pub rho_prime: ScalarField,
    pub params: RegularizationParams,
    pub input_defect: f64,
    pub entries: Vec<ApproxEntry>,
}

impl ApproxSequence {
    /// `ρ′ − k` on the inside nodes.
    pub fn glue_floor(&self, k: u32) -> Result<ScalarField> {
        self.rho_prime.map(|_, v| v - k as f64)
    }
}

fn same_mask(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if a.spec() != b.spec() || a.mask() != b.mask() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Nodes of `cl(Ω \ Ω₂)`: inside nodes off `Ω₂` and their inside 3^m neighbours.
pub fn collar_closure(field: &ScalarField, omega2: &[bool]) -> Vec<bool> {
    let spec = field.spec();
    let offsets = neighbourhood_offsets(spec.rank());
    (0..spec.len())
        .into_par_iter()
        .map(|i| {
            field.is_inside(i)
                && offsets.iter().any(|o| match spec.offset(i, o) {
                    Some(j) => field.is_inside(j) && !omega2[j],
                    None => false,
                })
        })
        .collect()
}

/// Whether `φ̃_k = ρ′ − k` holds bitwise on the closed collar.
fn containment_holds(phi_tilde: &ScalarField, glue: &ScalarField, omega2: &[bool]) -> bool {
    let closure = collar_closure(phi_tilde, omega2);
    (0..closure.len()).all(|i| !closure[i] || phi_tilde.value(i).to_bits() == glue.value(i).to_bits())
}

/// Shifts of the open cone used by the modulus and transfer checks: interior lattice
/// points plus rings, so small cones below grid scale still get samples.
pub fn cone_shifts(cone: &Cone, spacing: &[f64]) -> Vec<(Vec<f64>, f64)> {
    cone.open_sample(spacing)
        .into_iter()
        .map(|w| {
            let len = w.iter().map(|c| c * c).sum::<f64>().sqrt();
            (w, len)
        })
        .collect()
}

/// `ω` dominating `|φ̃(z + w) − φ̃(z)|` for `z` in `base` and sampled shifts `w` of the
/// cone, so pairs inside `L = L_ε + K_ε` when `base = L_ε`. Off-node values are interpolated.
pub fn measure_modulus(field: &ScalarField, base: &[usize], cone: &Cone) -> Result<ModulusOfContinuity> {
    let spec = field.spec();
    let shifts = cone_shifts(cone, spec.spacing());
    let reach = shifts.iter().map(|s| s.1).fold(0.0, f64::max);
    if reach == 0.0 {
        return Ok(ModulusOfContinuity::zero());
    }
    let breaks: Vec<f64> = (1..=256).map(|j| reach * j as f64 / 256.0).collect();
    let samples: Vec<(f64, f64)> = base
        .par_iter()
        .filter(|&&i| field.is_inside(i))
        .flat_map_iter(|&i| {
            let z = spec.point(i);
            let fz = field.value(i);
            shifts.iter().filter_map(move |(w, len)| {
                let p: Vec<f64> = z.iter().zip(w).map(|(a, b)| a + b).collect();
                field.interpolate(&p).map(|v| (*len, (v - fz).abs()))
            })
        })
        .collect();
    ModulusOfContinuity::from_samples(breaks, samples)
}

/// Runs the regularization for every index in `params.ks`.
///
/// After each solve the field is clipped to `max(·, ρ′ − k)` and to the previous
/// entry; both are subsolutions below `φ̃_k`, so the clip only removes solver
/// error, and the recorded residual is measured after it.
pub fn regularize_boundary(domain: &CapDomain, u: &ScalarField, params: &RegularizationParams) -> Result<ApproxSequence> {
    params.validate()?;
    let spec = u.spec().clone();
    let d = domain.log_distance_field(&spec)?;
    same_mask(u, &d)?;
    let input_defect = submean_defect(u, params.mode, 2.0 * spec.max_spacing())?.max_positive();
    if input_defect > params.input_slack {
        return Err(Error::Refused(format!("input submean defect {input_defect:e} above {}", params.input_slack)));
    }
    let phi1 = sup_convolution(u, 1.0)?;
    let profile = choose_profile(&phi1, &d, params.gain)?;
    let exhaustion = ExhaustionProfile::new(domain, &spec, profile)?;
    let rho = exhaustion.rho()?;
    let rho_prime = exhaustion.rho_prime()?;
    let mut seq = ApproxSequence {
        domain: domain.clone(),
        input: u.clone(),
        exhaustion,
        rho,
        rho_prime,
        params: params.clone(),
        input_defect,
        entries: Vec::new(),
    };
    let slope = 7.0 * domain.graph().c();
    let mut eps = params.eps0;
    let builder = CoreBuilder::new(domain, &spec)?;
    let mut cores = HashMap::new();
    for &k in &params.ks {
        let kf = k as f64;
        let phi = if k == 1 { phi1.clone() } else { sup_convolution(u, kf)? };
        let phi_tilde = phi.map(|i, v| v.max(seq.rho.value(i) - kf))?;
        let glue = seq.glue_floor(k)?;

        let mut found = None;
        for _ in 0..=params.max_halvings {
            if !cores.contains_key(&eps.to_bits()) {
                cores.insert(eps.to_bits(), builder.core(eps).ok());
            }
            if let Some(core) = &cores[&eps.to_bits()] {
                if containment_holds(&phi_tilde, &glue, &core.omega2.keep) {
                    found = Some(core.clone());
                    break;
                }
            }
            eps /= 2.0;
        }
        let core = found.ok_or(Error::Containment { k })?;

        let prev = seq.entries.last().map(|e| &e.u_hat);
        let mut problem = EnvelopeProblem::new(phi_tilde.clone(), params.mode, params.tolerance)?;
        if let Some(p) = prev {
            problem = problem.with_start(p);
        }
        let sol = solve_envelope(&problem)?;
        let clipped = sol.u.map(|i, v| {
            let v = v.max(glue.value(i));
            match prev {
                Some(p) => v.min(p.value(i)),
                None => v,
            }
        })?;
        let residual = envelope_residual(&clipped, &problem)?;
        let cone = Cone::theorem(eps, slope, spec.rank())?;
        let omega = measure_modulus(&phi_tilde, &core.nodes, &cone)?;
        seq.entries.push(ApproxEntry {
            k,
            epsilon: eps,
            phi,
            phi_tilde,
            u_hat: clipped,
            residual,
            iterations: sol.iterations,
            omega2: core.omega2.keep,
            core: core.nodes,
            omega,
        });
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::LipschitzGraph;

    pub(super) fn small_case(f: impl Fn(&[f64]) -> f64 + Sync, n: usize) -> (CapDomain, ScalarField) {
        let dom = CapDomain::new(LipschitzGraph::flat(0.25, 1));
        let spec = dom.grid(&[n, n]).unwrap();
        let u = ScalarField::build(spec, f, |z| dom.contains(z)).unwrap();
        (dom, u)
    }

    use crate::domains::Region;

    #[test]
    fn constant_input_gives_a_decreasing_sandwiched_sequence() {
        let (dom, u) = small_case(|_| 0.5, 97);
        let seq = regularize_boundary(&dom, &u, &RegularizationParams::default()).unwrap();
        let mut prev: Option<&ScalarField> = None;
        for e in &seq.entries {
            assert!(e.residual <= 1e-8, "k={} residual {}", e.k, e.residual);
            for i in u.inside_indices() {
                let v = e.u_hat.value(i);
                assert!(v >= u.value(i));
                assert!(v <= e.phi_tilde.value(i));
                assert!(v >= seq.rho_prime.value(i) - e.k as f64);
                if let Some(p) = prev {
                    assert!(v <= p.value(i));
                }
            }
            prev = Some(&e.u_hat);
        }
        // on a compact well below the graph the constant is recovered within 1/k
        let last = seq.entries.last().unwrap();
        let spec = u.spec();
        for i in u.inside_indices() {
            let z = spec.point(i);
            if z[0].hypot(z[1] / 1.25) <= 0.25 {
                assert!(last.u_hat.value(i) <= 0.5 + 1.0 / last.k as f64 + 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_indices() {
        let (dom, u) = small_case(|_| 0.0, 33);
        let p = RegularizationParams { ks: vec![2, 2], ..Default::default() };
        assert!(regularize_boundary(&dom, &u, &p).is_err());
    }

    #[test]
    fn containment_fails_when_the_collar_cannot_be_glued() {
        let (dom, u) = small_case(|_| 0.0, 65);
        // no growth beyond φ₁ leaves ρ − k below φ_k in the collar for large k
        let p = RegularizationParams { ks: vec![40], gain: 0.0, max_halvings: 3, ..Default::default() };
        assert!(matches!(regularize_boundary(&dom, &u, &p), Err(Error::Containment { k: 40 })));
    }
}
