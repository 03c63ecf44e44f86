//! One-ring averaging stencils.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// Which sub-mean-value condition a field is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Averages over full circles or spheres in ℝ^m.
    Subharmonic,
    /// Minimum over a fixed set of complex lines of the average on that line.
    /// On ℂ¹ (rank 2) this is the same as [`Mode::Subharmonic`].
    PshDirectional,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Subharmonic => "SUBHARMONIC",
            Mode::PshDirectional => "PSH_DIRECTIONAL",
        }
    }
}

/// One weighted group of neighbour offsets; the stencil value is the weighted mean.
#[derive(Debug, Clone)]
pub struct Group {
    pub offsets: Vec<Vec<isize>>,
    pub weights: Vec<f64>,
}

/// Precomputed ring stencil: the operator value at a node is the minimum over
/// groups of the group's weighted mean.
#[derive(Debug, Clone)]
pub struct RingStencil {
    pub mode: Mode,
    pub groups: Vec<Group>,
}

/// Complex directions in ℂ² as pairs of real offset vectors `(ζ = 1, ζ = i)`:
/// `e₁`, `e₂`, `(e₁ ± e₂)/√2`, `(e₁ ± i e₂)/√2`, coordinates `(Re z₁, Im z₁, Re z₂, Im z₂)`.
pub const COMPLEX_DIRECTIONS: [[[isize; 4]; 2]; 6] = [
    [[1, 0, 0, 0], [0, 1, 0, 0]],
    [[0, 0, 1, 0], [0, 0, 0, 1]],
    [[1, 0, 1, 0], [0, 1, 0, 1]],
    [[1, 0, -1, 0], [0, 1, 0, -1]],
    [[1, 0, 0, 1], [0, 1, -1, 0]],
    [[1, 0, 0, -1], [0, 1, 1, 0]],
];

impl RingStencil {
    pub fn new(spec: &GridSpec, mode: Mode) -> Result<Self> {
        let m = spec.rank();
        let axis_group = || {
            let mut offsets = Vec::new();
            let mut weights = Vec::new();
            for j in 0..m {
                let w = 1.0 / (spec.spacing()[j] * spec.spacing()[j]);
                for s in [-1, 1] {
                    let mut o = vec![0; m];
                    o[j] = s;
                    offsets.push(o);
                    weights.push(w);
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            Group { offsets, weights }
        };
        let groups = match (mode, m) {
            (Mode::Subharmonic, _) | (Mode::PshDirectional, 2) => vec![axis_group()],
            (Mode::PshDirectional, 4) => {
                let h = spec.spacing()[0];
                if spec.spacing().iter().any(|&s| (s - h).abs() > 1e-12 * h) {
                    return Err(Error::InvalidGrid("PSH_DIRECTIONAL needs equal spacing on every axis".into()));
                }
                COMPLEX_DIRECTIONS
                    .iter()
                    .map(|[re, im]| {
                        let mut offsets = Vec::new();
                        for s in [-1isize, 1] {
                            offsets.push(re.iter().map(|&c| s * c).collect());
                            offsets.push(im.iter().map(|&c| s * c).collect());
                        }
                        Group { offsets, weights: vec![0.25; 4] }
                    })
                    .collect()
            }
            (Mode::PshDirectional, _) => {
                return Err(Error::InvalidGrid(format!("PSH_DIRECTIONAL needs an even rank, got {m}")));
            }
        };
        Ok(RingStencil { mode, groups })
    }

    /// Flattened neighbour indices of `index`, group by group; `None` if any is off-grid.
    pub fn neighbours(&self, spec: &GridSpec, index: usize) -> Option<Vec<usize>> {
        let mut out = Vec::with_capacity(self.groups.iter().map(|g| g.offsets.len()).sum());
        for g in &self.groups {
            for o in &g.offsets {
                out.push(spec.offset(index, o)?);
            }
        }
        Some(out)
    }

    /// Whether every stencil node of `index` is inside the field's mask.
    pub fn fits(&self, field: &ScalarField, index: usize) -> bool {
        match self.neighbours(field.spec(), index) {
            Some(n) => n.iter().all(|&j| field.is_inside(j)),
            None => false,
        }
    }

    /// Stencil value `S u` from the flattened neighbour list.
    pub fn apply(&self, values: &[f64], neighbours: &[usize]) -> f64 {
        let mut best = f64::INFINITY;
        let mut at = 0;
        for g in &self.groups {
            let mut acc = 0.0;
            for w in &g.weights {
                acc += w * values[neighbours[at]];
                at += 1;
            }
            best = best.min(acc);
        }
        best
    }
}
