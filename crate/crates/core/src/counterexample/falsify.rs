//! The maximum-principle chain run against candidate approximating sequences.
//!
//! A candidate is a finite list of functions `v_q` on the radial window grid. The
//! chain checks the hypotheses a decreasing smooth psh sequence would have, then
//! derives `v_q(0, 1/k) ≤ −3/4 + slack` from the ring, the atom slices and
//! continuity. Since `u(0, 1/k) ≥ −1/2`, a candidate that also claims `v_q ≥ u`
//! is refuted at that point.

use rayon::prelude::*;

use super::domain::{CounterDomain, WindowGrid};
use super::slice::slice_max_principle;
use crate::error::{Error, Result};

/// Ring value the Dini step must reach, and the value of `u` on the ring.
pub const THRESHOLD: f64 = -0.75;
pub const RING_VALUE: f64 = -1.0;
/// Lower bound of `u(0, 1/k)` the chain compares against.
pub const AXIS_FLOOR: f64 = -0.5;

/// Oscillation of `u` over a node's cell below which the node counts as a
/// continuity point of `u`; `v_q ≥ u − OSC_TOL` is checked there.
pub const OSC_TOL: f64 = 0.05;
const DECREASE_TOL: f64 = 1e-12;
const LAPLACIAN_TOL: f64 = 1e-9;

pub trait Candidate: Sync {
    fn name(&self) -> &str;
    fn count(&self) -> usize;
    fn value(&self, q: usize, r: f64, z: [f64; 2]) -> f64;
    /// Whether the candidate claims `v_q ≥ u` on `Ω_U`.
    fn declares_above_u(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    Decreasing,
    LowerBound,
    Continuity,
    SliceSubharmonic,
    Dini,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainStep {
    Hypotheses,
    Dini,
    Slices,
    Continuity,
}

#[derive(Debug, Clone)]
pub struct ChainRecord {
    pub k: u32,
    pub radius: f64,
    pub q0: usize,
    pub ring_max: f64,
    /// Atom slices `z_n = y_p` and the centre values `v_{q0}(0, y_p)`.
    pub slices: Vec<(f64, f64)>,
    /// Grid Lipschitz constant of `v_{q0}` in `z_n`.
    pub lipschitz: f64,
    /// `v_{q0}(0, y*) + L·|y* − 1/k|` for the atom `y*` nearest `1/k`.
    pub axis_bound: f64,
    /// `v_{q0}(0, 1/k)` sampled directly.
    pub axis_value: f64,
    /// Certified lower bound of `u(0, 1/k)`.
    pub u_floor: f64,
}

#[derive(Debug, Clone)]
pub enum Witness {
    /// A hypothesis fails at `point = (|z′|, Re z_n, Im z_n)`.
    Hypothesis { property: Property, q: usize, point: [f64; 3], value: f64 },
    /// Every step passed and `v_{q0}(0, 1/k) ≤ −3/4 + slack < u(0, 1/k)` although `v_q ≥ u` was declared.
    Contradiction(ChainRecord),
    /// The chain went through but the candidate never claimed to dominate `u`.
    BelowU(ChainRecord),
    /// The derived bound does not separate from `u(0, 1/k)`.
    Inconclusive(ChainRecord),
    /// A step was switched off, so nothing can be concluded.
    Incomplete { step: ChainStep },
}

impl Witness {
    pub fn verdict(&self) -> &'static str {
        match self {
            Witness::Hypothesis { .. } => "hypothesis",
            Witness::Contradiction(_) => "contradiction",
            Witness::BelowU(_) => "below-u",
            Witness::Inconclusive(_) => "inconclusive",
            Witness::Incomplete { .. } => "incomplete",
        }
    }
}

fn point_of(grid: &WindowGrid, i: usize) -> [f64; 3] {
    let p = grid.spec.point(i);
    [p[0], p[1], p[2]]
}

/// Per-node cell data: whether `u` is continuous over the cell at `OSC_TOL`, and
/// the smallest sampled value of `u` on the cell.
#[derive(Debug, Clone)]
pub struct CellTable {
    pub lower: Vec<f64>,
    pub continuous: Vec<bool>,
}

/// Cells are the boxes of half-width one spacing around each node. A cell whose
/// `z_n` square holds an atom meets the slice `z_n = x_j`, where `u = −1`; a cell
/// crossing `|z′| = |z_n|` meets the `−1` branch.
pub fn cell_table(domain: &CounterDomain, grid: &WindowGrid) -> CellTable {
    let spec = &grid.spec;
    let shape = spec.shape();
    let h = spec.spacing();
    let atoms: Vec<f64> = domain.potential.atoms.iter().map(|a| a.x).collect();
    // λ samples and atom presence per z_n column
    let columns: Vec<(f64, f64, f64, f64, bool)> = (0..shape[1] * shape[2])
        .into_par_iter()
        .map(|c| {
            let (a, b) = (c / shape[2], c % shape[2]);
            let re = spec.coord(1, a);
            let im = spec.coord(2, b);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut zmin = f64::INFINITY;
            let mut zmax = 0.0f64;
            for da in [-1.0, 0.0, 1.0] {
                for db in [-1.0, 0.0, 1.0] {
                    let z = [re + da * h[1], im + db * h[2]];
                    let v = domain.potential.eval(z).max(-1.0);
                    lo = lo.min(v);
                    hi = hi.max(v);
                    let m = z[0].hypot(z[1]);
                    zmin = zmin.min(m);
                    zmax = zmax.max(m);
                }
            }
            // the modulus over the square can dip below the corner samples
            zmin = (zmin - h[1].hypot(h[2])).max(0.0);
            let atom = im.abs() <= h[2] && atoms.iter().any(|&x| (x - re).abs() <= h[1]);
            (lo, hi, zmin, zmax, atom)
        })
        .collect();
    let (lower, continuous): (Vec<f64>, Vec<bool>) = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let mi = spec.multi_index(i);
            let (lo, hi, zmin, zmax, atom) = columns[mi[1] * shape[2] + mi[2]];
            let r = spec.coord(0, mi[0]);
            let (rlo, rhi) = ((r - h[0]).max(0.0), r + h[0]);
            if rlo >= zmax {
                (RING_VALUE, true)
            } else if atom || rhi >= zmin {
                (RING_VALUE, false)
            } else {
                (lo, hi - lo <= OSC_TOL)
            }
        })
        .unzip();
    CellTable { lower, continuous }
}

/// The grid-scale lower envelope of `u`, interpolated and lifted by `2^{−q−2}`:
/// the naive smoothing that resolves `u` only down to the cell size, where the
/// atom slices near `1/k` pull every cell around the axis point to `−1`.
pub struct CellLowerCandidate {
    spec: crate::grid::GridSpec,
    lower: Vec<f64>,
    count: usize,
}

impl CellLowerCandidate {
    pub fn new(domain: &CounterDomain, grid: &WindowGrid, count: usize) -> Self {
        let cells = cell_table(domain, grid);
        CellLowerCandidate { spec: grid.spec.clone(), lower: cells.lower, count }
    }

    fn lift(q: usize) -> f64 {
        2f64.powi(-(q as i32) - 2)
    }
}

impl Candidate for CellLowerCandidate {
    fn name(&self) -> &str {
        "cell-lower"
    }

    fn count(&self) -> usize {
        self.count
    }

    fn value(&self, q: usize, r: f64, z: [f64; 2]) -> f64 {
        trilinear(&self.spec, &self.lower, [r, z[0], z[1]]) + Self::lift(q)
    }
}

fn trilinear(spec: &crate::grid::GridSpec, values: &[f64], p: [f64; 3]) -> f64 {
    let shape = spec.shape();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let t = ((p[a] - spec.origin()[a]) / spec.spacing()[a]).clamp(0.0, (shape[a] - 1) as f64);
        let i = (t.floor() as usize).min(shape[a] - 2);
        base[a] = i;
        frac[a] = t - i as f64;
    }
    let mut acc = 0.0;
    for corner in 0..8 {
        let mut w = 1.0;
        let mut idx = 0;
        for a in 0..3 {
            let bit = (corner >> a) & 1;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            idx += (base[a] + bit) * spec.strides()[a];
        }
        if w != 0.0 {
            acc += w * values[idx];
        }
    }
    acc
}

/// `v_q ≡ value` for every `q`.
pub struct ConstantCandidate {
    pub value: f64,
    pub count: usize,
}

impl Candidate for ConstantCandidate {
    fn name(&self) -> &str {
        "constant"
    }

    fn count(&self) -> usize {
        self.count
    }

    fn value(&self, _q: usize, _r: f64, _z: [f64; 2]) -> f64 {
        self.value
    }
}

/// Another candidate with its sequence order permuted.
pub struct Reordered<C> {
    pub inner: C,
    pub order: Vec<usize>,
}

impl<C: Candidate> Candidate for Reordered<C> {
    fn name(&self) -> &str {
        "reordered"
    }

    fn count(&self) -> usize {
        self.order.len()
    }

    fn value(&self, q: usize, r: f64, z: [f64; 2]) -> f64 {
        self.inner.value(self.order[q], r, z)
    }
}

/// Marks one chain step as switched off; used to show each step is load-bearing.
#[derive(Debug, Clone, Copy, Default)]
pub struct Mutation {
    pub disabled: Option<ChainStep>,
}

fn sample(c: &dyn Candidate, grid: &WindowGrid, nodes: &[usize], q: usize) -> Vec<f64> {
    nodes
        .par_iter()
        .map(|&i| {
            let p = point_of(grid, i);
            c.value(q, p[0], [p[1], p[2]])
        })
        .collect()
}

/// Runs the five steps at scale `k` on `grid`.
pub fn falsify(domain: &CounterDomain, grid: &WindowGrid, candidate: &dyn Candidate, mutation: Mutation) -> Result<Witness> {
    let k = grid.k;
    let count = candidate.count();
    if count == 0 {
        return Err(Error::InvalidArgument("candidate has no fields".into()));
    }
    let spec = &grid.spec;
    let nodes: Vec<usize> = (0..spec.len()).filter(|&i| grid.inside[i]).collect();
    let fields: Vec<Vec<f64>> = (0..count).map(|q| sample(candidate, grid, &nodes, q)).collect();

    // (1) hypotheses: finite, decreasing, above u where u is continuous at grid scale
    if mutation.disabled == Some(ChainStep::Hypotheses) {
        return Ok(Witness::Incomplete { step: ChainStep::Hypotheses });
    }
    for (q, f) in fields.iter().enumerate() {
        if let Some(s) = f.iter().position(|v| !v.is_finite()) {
            return Ok(Witness::Hypothesis { property: Property::Continuity, q, point: point_of(grid, nodes[s]), value: f[s] });
        }
    }
    for q in 1..count {
        if let Some(s) = (0..nodes.len()).find(|&s| fields[q][s] > fields[q - 1][s] + DECREASE_TOL) {
            return Ok(Witness::Hypothesis { property: Property::Decreasing, q, point: point_of(grid, nodes[s]), value: fields[q][s] - fields[q - 1][s] });
        }
    }
    let cells = cell_table(domain, grid);
    for (q, f) in fields.iter().enumerate() {
        for (s, &i) in nodes.iter().enumerate() {
            if !cells.continuous[i] {
                continue;
            }
            let p = point_of(grid, i);
            let u = domain.u(p[0], [p[1], p[2]])?;
            if f[s] < u - OSC_TOL {
                return Ok(Witness::Hypothesis { property: Property::LowerBound, q, point: p, value: f[s] - u });
            }
        }
    }

    // (2) Dini on the ring |z′| = 2/k, where u = −1
    if mutation.disabled == Some(ChainStep::Dini) {
        return Ok(Witness::Incomplete { step: ChainStep::Dini });
    }
    let ring: Vec<usize> = grid.ring().collect();
    let slot: std::collections::HashMap<usize, usize> = nodes.iter().enumerate().map(|(s, &i)| (i, s)).collect();
    let ring_max = |q: usize| ring.iter().map(|i| fields[q][slot[i]]).fold(f64::NEG_INFINITY, f64::max);
    let Some(q0) = (0..count).find(|&q| ring_max(q) <= THRESHOLD) else {
        let q = count - 1;
        let worst = ring.iter().cloned().max_by(|a, b| fields[q][slot[a]].total_cmp(&fields[q][slot[b]]));
        let point = worst.map(|i| point_of(grid, i)).unwrap_or([0.0; 3]);
        return Ok(Witness::Hypothesis { property: Property::Dini, q, point, value: ring_max(q) });
    };

    // (3) slices z_n = y_p through atoms converging to 1/k
    if mutation.disabled == Some(ChainStep::Slices) {
        return Ok(Witness::Incomplete { step: ChainStep::Slices });
    }
    let centre = 1.0 / k as f64;
    let mut ys: Vec<f64> = domain
        .potential
        .atoms
        .iter()
        .filter(|a| a.m == k && (a.x - centre).abs() < grid.radius)
        .map(|a| a.x)
        .collect();
    if ys.len() < 3 {
        return Err(Error::EmptyWindow { k, radius: grid.radius, found: ys.len() });
    }
    ys.sort_by(|a, b| (b - centre).abs().total_cmp(&(a - centre).abs()));
    let nr = spec.shape()[0];
    let hr = spec.spacing()[0];
    let mut slices = Vec::with_capacity(ys.len());
    for &y in &ys {
        let profile: Vec<f64> = (0..nr).map(|i| candidate.value(q0, i as f64 * hr, [y, 0.0])).collect();
        match slice_max_principle(&profile, hr, THRESHOLD, 0.0, LAPLACIAN_TOL) {
            Ok(v) if v.holds => slices.push((y, v.centre)),
            Ok(v) => return Ok(Witness::Hypothesis { property: Property::SliceSubharmonic, q: q0, point: [0.0, y, 0.0], value: v.centre }),
            Err(Error::SliceNotSubharmonic { index, defect }) => {
                return Ok(Witness::Hypothesis { property: Property::SliceSubharmonic, q: q0, point: [index as f64 * hr, y, 0.0], value: -defect })
            }
            Err(e) => return Err(e),
        }
    }

    // (4) continuity from the nearest atom slice to the axis point
    if mutation.disabled == Some(ChainStep::Continuity) {
        return Ok(Witness::Incomplete { step: ChainStep::Continuity });
    }
    let lipschitz = zn_lipschitz(grid, &nodes, &fields[q0]);
    let &(y_near, v_near) = slices.last().expect("at least three slices");
    let axis_bound = v_near + lipschitz * (y_near - centre).abs();
    let axis_value = candidate.value(q0, 0.0, [centre, 0.0]);
    if axis_value > axis_bound + DECREASE_TOL {
        return Ok(Witness::Hypothesis { property: Property::Continuity, q: q0, point: [0.0, centre, 0.0], value: axis_value - axis_bound });
    }

    // (5) compare with u(0, 1/k) ≥ −1/2
    let u_floor = domain.potential.eval_on_a(k).lo.max(RING_VALUE);
    let record = ChainRecord { k, radius: grid.radius, q0, ring_max: ring_max(q0), slices, lipschitz, axis_bound, axis_value, u_floor };
    Ok(if axis_bound < u_floor && u_floor >= AXIS_FLOOR {
        if candidate.declares_above_u() {
            Witness::Contradiction(record)
        } else {
            Witness::BelowU(record)
        }
    } else {
        Witness::Inconclusive(record)
    })
}

/// Largest difference quotient of `v` between adjacent window nodes along `Re z_n` and `Im z_n`.
fn zn_lipschitz(grid: &WindowGrid, nodes: &[usize], values: &[f64]) -> f64 {
    let spec = &grid.spec;
    let slot: std::collections::HashMap<usize, usize> = nodes.iter().enumerate().map(|(s, &i)| (i, s)).collect();
    nodes
        .par_iter()
        .enumerate()
        .map(|(s, &i)| {
            let mut best = 0.0f64;
            for axis in 1..3 {
                if let (_, Some(j)) = spec.axis_neighbors(i, axis) {
                    if let Some(&t) = slot.get(&j) {
                        best = best.max((values[t] - values[s]).abs() / spec.spacing()[axis]);
                    }
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}
