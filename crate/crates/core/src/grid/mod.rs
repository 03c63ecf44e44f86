//! Scalar fields on uniform rectilinear grids over ℝ^m, m ∈ {2, 3, 4}.
//!
//! Nodes are stored in row-major order: the last axis varies fastest. A field
//! carries one value and one [`Mask`] tag per node; values at outside nodes are
//! stored as `0.0` and never read by the numerical kernels.

mod io;
mod sphere;

pub use io::{decode_field, encode_field, read_field, write_field, MAGIC};
pub use sphere::{cone_solid_angle_fraction, gauss_legendre, sphere_measure, SectorMeans, SphereSample};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Node tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Mask {
    Outside = 0,
    Inside = 1,
    /// Inside node with at least one outside (or missing) axis neighbour.
    Band = 2,
}

impl Mask {
    pub fn is_inside(self) -> bool {
        !matches!(self, Mask::Outside)
    }

    pub fn from_byte(b: u8) -> Option<Mask> {
        match b {
            0 => Some(Mask::Outside),
            1 => Some(Mask::Inside),
            2 => Some(Mask::Band),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    shape: Vec<usize>,
    origin: Vec<f64>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
}

impl GridSpec {
    pub fn new(shape: Vec<usize>, origin: Vec<f64>, spacing: Vec<f64>) -> Result<Self> {
        let rank = shape.len();
        if !(2..=4).contains(&rank) {
            return Err(Error::InvalidGrid(format!("rank {rank} outside 2..=4")));
        }
        if origin.len() != rank || spacing.len() != rank {
            return Err(Error::InvalidGrid("origin/spacing length differs from rank".into()));
        }
        if let Some(n) = shape.iter().find(|&&n| n < 3) {
            return Err(Error::InvalidGrid(format!("axis with {n} nodes, need at least 3")));
        }
        if spacing.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::InvalidGrid("spacing must be positive and finite".into()));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        let mut strides = vec![1; rank];
        for j in (0..rank - 1).rev() {
            strides[j] = strides[j + 1] * shape[j + 1];
        }
        Ok(GridSpec { shape, origin, spacing, strides })
    }

    /// Grid with `shape[j]` nodes spanning `[lo[j], hi[j]]` inclusive.
    pub fn from_bounds(lo: &[f64], hi: &[f64], shape: &[usize]) -> Result<Self> {
        if lo.len() != shape.len() || hi.len() != shape.len() {
            return Err(Error::InvalidGrid("bounds length differs from rank".into()));
        }
        let spacing = (0..shape.len())
            .map(|j| (hi[j] - lo[j]) / (shape[j].max(2) - 1) as f64)
            .collect();
        GridSpec::new(shape.to_vec(), lo.to_vec(), spacing)
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.rank()];
        for j in 0..self.rank() {
            out[j] = index / self.strides[j];
            index %= self.strides[j];
        }
        out
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing[axis]
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        self.multi_index(index)
            .iter()
            .enumerate()
            .map(|(j, &i)| self.coord(j, i))
            .collect()
    }

    /// Index of the node displaced from `index` by `offset` lattice steps, if on the grid.
    pub fn offset(&self, index: usize, offset: &[isize]) -> Option<usize> {
        self.offset_from(index, &self.multi_index(index), offset)
    }

    /// [`offset`](Self::offset) with the multi-index of `index` already known.
    pub fn offset_from(&self, index: usize, multi: &[usize], offset: &[isize]) -> Option<usize> {
        let mut out = index as isize;
        for j in 0..self.rank() {
            let i = multi[j] as isize + offset[j];
            if i < 0 || i >= self.shape[j] as isize {
                return None;
            }
            out += offset[j] * self.strides[j] as isize;
        }
        Some(out as usize)
    }

    /// The two axis neighbours along `axis`, if present.
    pub fn axis_neighbors(&self, index: usize, axis: usize) -> (Option<usize>, Option<usize>) {
        let i = (index / self.strides[axis]) % self.shape[axis];
        let lo = (i > 0).then(|| index - self.strides[axis]);
        let hi = (i + 1 < self.shape[axis]).then(|| index + self.strides[axis]);
        (lo, hi)
    }

    /// Nearest node to `p`, if `p` lies within the grid box.
    pub fn nearest(&self, p: &[f64]) -> Option<usize> {
        let mut multi = Vec::with_capacity(self.rank());
        for j in 0..self.rank() {
            let t = ((p[j] - self.origin[j]) / self.spacing[j]).round();
            if t < 0.0 || t > (self.shape[j] - 1) as f64 {
                return None;
            }
            multi.push(t as usize);
        }
        Some(self.index(&multi))
    }

    /// Lower cell corner and fractional offsets for multilinear interpolation.
    fn locate(&self, p: &[f64]) -> Option<(Vec<usize>, Vec<f64>)> {
        const EDGE: f64 = 1e-9;
        let mut base = Vec::with_capacity(self.rank());
        let mut frac = Vec::with_capacity(self.rank());
        for j in 0..self.rank() {
            let t = (p[j] - self.origin[j]) / self.spacing[j];
            let last = (self.shape[j] - 1) as f64;
            if !(t >= -EDGE && t <= last + EDGE) {
                return None;
            }
            let t = t.clamp(0.0, last);
            let i0 = (t.floor() as usize).min(self.shape[j] - 2);
            base.push(i0);
            frac.push(t - i0 as f64);
        }
        Some((base, frac))
    }
}

/// Sampled real-valued function with an inside/outside mask.
#[derive(Debug, Clone)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
    mask: Vec<Mask>,
}

fn check_value(index: usize, value: f64) -> Result<()> {
    if value.is_nan() || value == f64::INFINITY {
        return Err(Error::NonFinite { index, value });
    }
    Ok(())
}

impl ScalarField {
    /// Samples `evaluator` on every node where `inside` holds. Inside nodes with an
    /// outside or missing axis neighbour are tagged [`Mask::Band`].
    pub fn build<E, P>(spec: GridSpec, evaluator: E, inside: P) -> Result<Self>
    where
        E: Fn(&[f64]) -> f64 + Sync,
        P: Fn(&[f64]) -> bool + Sync,
    {
        let inside_flags: Vec<bool> = (0..spec.len())
            .into_par_iter()
            .map(|i| inside(&spec.point(i)))
            .collect();
        let mask = band_mask(&spec, &inside_flags);
        let values: Vec<f64> = (0..spec.len())
            .into_par_iter()
            .map(|i| if inside_flags[i] { evaluator(&spec.point(i)) } else { 0.0 })
            .collect();
        for (i, &v) in values.iter().enumerate() {
            if inside_flags[i] {
                check_value(i, v)?;
            }
        }
        Ok(ScalarField { spec, values, mask })
    }

    pub fn from_parts(spec: GridSpec, values: Vec<f64>, mask: Vec<Mask>) -> Result<Self> {
        if values.len() != spec.len() || mask.len() != spec.len() {
            return Err(Error::InvalidGrid("value/mask length differs from node count".into()));
        }
        for (i, (&v, m)) in values.iter().zip(&mask).enumerate() {
            if m.is_inside() {
                check_value(i, v)?;
            }
        }
        Ok(ScalarField { spec, values, mask })
    }

    /// Same grid and mask, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        ScalarField::from_parts(self.spec.clone(), values, self.mask.clone())
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[Mask] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn is_inside(&self, index: usize) -> bool {
        self.mask[index].is_inside()
    }

    pub fn inside_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.mask[i].is_inside())
    }

    /// Nodewise map over inside nodes; outside nodes stay `0.0`.
    pub fn map<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(usize, f64) -> f64 + Sync,
    {
        let values = (0..self.len())
            .into_par_iter()
            .map(|i| if self.mask[i].is_inside() { f(i, self.values[i]) } else { 0.0 })
            .collect();
        self.with_values(values)
    }

    /// Same values restricted to the nodes where `keep` holds; band tags are recomputed.
    pub fn restrict(&self, keep: &[bool]) -> Result<Self> {
        let flags: Vec<bool> = (0..self.len()).map(|i| keep[i] && self.mask[i].is_inside()).collect();
        let mask = band_mask(&self.spec, &flags);
        let values = (0..self.len()).map(|i| if flags[i] { self.values[i] } else { 0.0 }).collect();
        ScalarField::from_parts(self.spec.clone(), values, mask)
    }

    /// Multilinear interpolation. `None` when `p` is off the grid or a corner with
    /// positive weight is outside.
    pub fn interpolate(&self, p: &[f64]) -> Option<f64> {
        let (base, frac) = self.spec.locate(p)?;
        let m = self.spec.rank();
        let mut acc = 0.0;
        for corner in 0..(1usize << m) {
            let mut w = 1.0;
            let mut idx = 0;
            for j in 0..m {
                let up = (corner >> j) & 1 == 1;
                w *= if up { frac[j] } else { 1.0 - frac[j] };
                idx += (base[j] + up as usize) * self.spec.strides[j];
            }
            if w == 0.0 {
                continue;
            }
            if !self.mask[idx].is_inside() {
                return None;
            }
            let v = self.values[idx];
            if v == f64::NEG_INFINITY {
                return Some(f64::NEG_INFINITY);
            }
            acc += w * v;
        }
        Some(acc)
    }

    /// Bitwise equality of spec, values and mask.
    pub fn bit_eq(&self, other: &ScalarField) -> bool {
        self.spec == other.spec
            && self.mask == other.mask
            && self.values.iter().zip(&other.values).all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn max_inside(&self) -> f64 {
        self.inside_indices().map(|i| self.values[i]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Mask from inside flags: inside nodes touching an outside or missing axis
/// neighbour become [`Mask::Band`].
pub fn band_mask(spec: &GridSpec, inside: &[bool]) -> Vec<Mask> {
    (0..spec.len())
        .into_par_iter()
        .map(|i| {
            if !inside[i] {
                return Mask::Outside;
            }
            for axis in 0..spec.rank() {
                let (lo, hi) = spec.axis_neighbors(i, axis);
                for n in [lo, hi] {
                    match n {
                        Some(n) if inside[n] => {}
                        _ => return Mask::Band,
                    }
                }
            }
            Mask::Inside
        })
        .collect()
}
