//! Discrete envelopes `P f`: the largest grid subsolution below an obstacle.

pub mod cg;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Mask, ScalarField};
use crate::subharmonic::{Mode, RingStencil};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// `u ← min(f, S u)` sweeps from `u = f`.
    Jacobi,
    /// Howard policy iteration with conjugate-gradient inner solves (SUBHARMONIC only).
    Policy,
}

#[derive(Debug, Clone)]
pub struct EnvelopeProblem {
    pub obstacle: ScalarField,
    pub mode: Mode,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Extra nodes held at the obstacle value besides the band.
    pub pinned: Option<Vec<bool>>,
    pub solver: Option<Solver>,
    /// Starting field for policy iteration; the first policy is read off `min(start, f)`.
    pub start: Option<Vec<f64>>,
}

impl EnvelopeProblem {
    pub fn new(obstacle: ScalarField, mode: Mode, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {tolerance}")));
        }
        if let Some(i) = obstacle.inside_indices().find(|&i| !obstacle.value(i).is_finite()) {
            return Err(Error::NonFinite { index: i, value: obstacle.value(i) });
        }
        Ok(EnvelopeProblem { obstacle, mode, tolerance, max_iterations: 1_000_000, pinned: None, solver: None, start: None })
    }

    pub fn with_pinned(mut self, pinned: Vec<bool>) -> Self {
        self.pinned = Some(pinned);
        self
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = Some(solver);
        self
    }

    pub fn with_start(mut self, start: &ScalarField) -> Self {
        self.start = Some(start.values().to_vec());
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    fn solver(&self) -> Solver {
        self.solver.unwrap_or(if self.mode == Mode::Subharmonic { Solver::Policy } else { Solver::Jacobi })
    }
}

#[derive(Debug, Clone)]
pub struct EnvelopeSolution {
    pub u: ScalarField,
    /// `max |min(f − u, S u − u)|` over free nodes.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Free nodes with their stencil neighbour lists; every other inside node is pinned.
struct Layout {
    stencil: RingStencil,
    free: Vec<usize>,
    neighbours: Vec<Vec<usize>>,
}

impl Layout {
    fn new(problem: &EnvelopeProblem) -> Result<Self> {
        let f = &problem.obstacle;
        let spec = f.spec();
        let stencil = RingStencil::new(spec, problem.mode)?;
        let mut free = Vec::new();
        let mut neighbours = Vec::new();
        for i in 0..spec.len() {
            if f.mask()[i] != Mask::Inside || problem.pinned.as_ref().is_some_and(|p| p[i]) {
                continue;
            }
            if let Some(nb) = stencil.neighbours(spec, i) {
                if nb.iter().all(|&j| f.is_inside(j)) {
                    free.push(i);
                    neighbours.push(nb);
                }
            }
        }
        Ok(Layout { stencil, free, neighbours })
    }
}

fn check_grid(u: &ScalarField, problem: &EnvelopeProblem) -> Result<()> {
    if u.spec() != problem.obstacle.spec() || u.mask() != problem.obstacle.mask() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `max over free nodes of max(u − f, u − S u)⁺`, also counting `u − f` at pinned nodes.
/// Zero exactly when `u` is a discrete subsolution below the obstacle.
pub fn envelope_residual(u: &ScalarField, problem: &EnvelopeProblem) -> Result<f64> {
    check_grid(u, problem)?;
    let layout = Layout::new(problem)?;
    let f = &problem.obstacle;
    let over = f.inside_indices().map(|i| u.value(i) - f.value(i)).fold(0.0f64, f64::max);
    let defect = layout
        .free
        .par_iter()
        .zip(&layout.neighbours)
        .map(|(&i, nb)| u.value(i) - layout.stencil.apply(u.values(), nb))
        .reduce(|| 0.0f64, f64::max);
    Ok(over.max(defect))
}

fn fixed_point_residual(u: &[f64], f: &ScalarField, layout: &Layout) -> f64 {
    layout
        .free
        .par_iter()
        .zip(&layout.neighbours)
        .map(|(&i, nb)| {
            let s = layout.stencil.apply(u, nb);
            (f.value(i) - u[i]).min(s - u[i]).abs()
        })
        .reduce(|| 0.0f64, f64::max)
}

pub fn solve_envelope(problem: &EnvelopeProblem) -> Result<EnvelopeSolution> {
    let layout = Layout::new(problem)?;
    match problem.solver() {
        Solver::Jacobi => jacobi(problem, &layout, |_, _| {}),
        Solver::Policy => {
            if problem.mode != Mode::Subharmonic {
                return Err(Error::InvalidArgument("policy iteration needs the SUBHARMONIC stencil".into()));
            }
            policy(problem, &layout)
        }
    }
}

/// Jacobi iteration calling `observe(t, u)` after every sweep.
pub fn solve_envelope_jacobi_observed<O: FnMut(usize, &[f64])>(problem: &EnvelopeProblem, observe: O) -> Result<EnvelopeSolution> {
    let layout = Layout::new(problem)?;
    jacobi(problem, &layout, observe)
}

fn jacobi<O: FnMut(usize, &[f64])>(problem: &EnvelopeProblem, layout: &Layout, mut observe: O) -> Result<EnvelopeSolution> {
    let f = &problem.obstacle;
    let mut u = f.values().to_vec();
    let mut next = u.clone();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < problem.max_iterations {
        let updates: Vec<f64> = layout
            .free
            .par_iter()
            .zip(&layout.neighbours)
            .map(|(&i, nb)| f.value(i).min(layout.stencil.apply(&u, nb)))
            .collect();
        let mut step = 0.0f64;
        for (&i, v) in layout.free.iter().zip(updates) {
            step = step.max((u[i] - v).abs());
            next[i] = v;
        }
        std::mem::swap(&mut u, &mut next);
        iterations += 1;
        observe(iterations, &u);
        if step < problem.tolerance / 10.0 && fixed_point_residual(&u, f, layout) < problem.tolerance {
            converged = true;
            break;
        }
    }
    let residual = fixed_point_residual(&u, f, layout);
    Ok(EnvelopeSolution { u: f.with_values(u)?, residual, iterations, converged })
}

fn policy(problem: &EnvelopeProblem, layout: &Layout) -> Result<EnvelopeSolution> {
    let f = &problem.obstacle;
    let n = f.len();
    let nf = layout.free.len();
    let mut slot = vec![usize::MAX; n];
    for (s, &i) in layout.free.iter().enumerate() {
        slot[i] = s;
    }
    let weights: Vec<f64> = layout.stencil.groups[0].weights.clone();
    let mut u = f.values().to_vec();
    if let Some(start) = &problem.start {
        if start.len() != n {
            return Err(Error::GridMismatch);
        }
        for &i in &layout.free {
            u[i] = start[i].min(f.value(i));
        }
    }
    presmooth(&mut u, f, layout, &weights, problem.tolerance);
    let mut active = vec![true; nf];
    let mut iterations = 0;
    let cg_tol = problem.tolerance * 1e-3;
    // cheap inner solves while the policy moves, then one tight pass to confirm it
    let mut loose = true;
    loop {
        // new policy: obstacle wherever S u ≥ f
        let new_active: Vec<bool> = (0..nf)
            .into_par_iter()
            .map(|s| layout.stencil.apply(&u, &layout.neighbours[s]) >= f.value(layout.free[s]))
            .collect();
        if iterations > 0 && new_active == active {
            if !loose {
                break;
            }
            loose = false;
        } else {
            loose = true;
        }
        active = new_active;
        iterations += 1;
        if iterations > problem.max_iterations {
            break;
        }
        // unknowns: free nodes off the obstacle
        let unknown: Vec<usize> = (0..nf).filter(|&s| !active[s]).collect();
        let mut col = vec![usize::MAX; nf];
        for (c, &s) in unknown.iter().enumerate() {
            col[s] = c;
        }
        for s in 0..nf {
            if active[s] {
                u[layout.free[s]] = f.value(layout.free[s]);
            }
        }
        let known = |j: usize| slot[j] == usize::MAX || active[slot[j]];
        let b: Vec<f64> = unknown
            .par_iter()
            .map(|&s| {
                layout.neighbours[s]
                    .iter()
                    .zip(&weights)
                    .filter(|(&j, _)| known(j))
                    .map(|(&j, w)| w * u[j])
                    .sum()
            })
            .collect();
        // off-diagonal entries of A = I − S among the unknowns, row by row
        let mut row_ptr = Vec::with_capacity(unknown.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for &s in &unknown {
            for (&j, &w) in layout.neighbours[s].iter().zip(&weights) {
                if !known(j) {
                    cols.push(col[slot[j]]);
                    vals.push(w);
                }
            }
            row_ptr.push(cols.len());
        }
        let apply = |x: &[f64], y: &mut [f64]| {
            y.par_iter_mut().enumerate().for_each(|(c, yc)| {
                let mut acc = 0.0;
                for e in row_ptr[c]..row_ptr[c + 1] {
                    acc += vals[e] * x[cols[e]];
                }
                *yc = x[c] - acc;
            });
        };
        let mut x: Vec<f64> = unknown.iter().map(|&s| u[layout.free[s]]).collect();
        let max_cg = 50 * (unknown.len() as f64).sqrt() as usize + 1000;
        let tol = if loose { (cg_tol * 1e5).max(1e-9) } else { cg_tol };
        conjugate(apply, &b, &mut x, tol, max_cg);
        for (c, &s) in unknown.iter().enumerate() {
            u[layout.free[s]] = x[c];
        }
    }
    for &i in &layout.free {
        u[i] = u[i].min(f.value(i));
    }
    let residual = fixed_point_residual(&u, f, layout);
    Ok(EnvelopeSolution { u: f.with_values(u)?, residual, iterations, converged: residual <= problem.tolerance })
}

/// Projected SOR sweeps in node order, so that policy iteration starts next to
/// the final contact set instead of moving it one layer per step.
fn presmooth(u: &mut [f64], f: &ScalarField, layout: &Layout, weights: &[f64], tol: f64) {
    let nf = layout.free.len();
    if nf == 0 {
        return;
    }
    let side = (nf as f64).sqrt().max(2.0);
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / side).sin());
    let max_sweeps = 20 * side as usize + 100;
    for _ in 0..max_sweeps {
        let mut step = 0.0f64;
        for (&i, nb) in layout.free.iter().zip(&layout.neighbours) {
            let mut other = 0.0;
            let mut own = 0.0;
            for (&j, &w) in nb.iter().zip(weights) {
                if j == i {
                    own += w;
                } else {
                    other += w * u[j];
                }
            }
            let gs = other / (1.0 - own);
            let v = f.value(i).min(u[i] + omega * (gs - u[i]));
            step = step.max((v - u[i]).abs());
            u[i] = v;
        }
        if step < tol {
            break;
        }
    }
}

fn conjugate<M: Fn(&[f64], &mut [f64]) + Sync>(apply: M, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) {
    if !b.is_empty() {
        cg::conjugate_gradient(apply, b, x, tol, max_iter);
    }
}
