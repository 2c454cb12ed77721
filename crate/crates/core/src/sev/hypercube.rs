use super::SevError;
use crate::data::Span;

/// Hypercube dimensions are limited by the mask width.
pub const MAX_FEATURES: usize = 64;

/// Bit `j` set: feature `j` takes the query's value; clear: the reference's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VertexMask(pub u64);

impl VertexMask {
    pub fn zeros() -> Self {
        VertexMask(0)
    }

    pub fn ones(p: usize) -> Self {
        if p >= 64 {
            VertexMask(u64::MAX)
        } else {
            VertexMask((1u64 << p) - 1)
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        VertexMask(bits.iter().enumerate().filter(|(_, &b)| b).fold(0, |m, (j, _)| m | (1 << j)))
    }

    pub fn get(self, j: usize) -> bool {
        self.0 >> j & 1 == 1
    }

    pub fn with(self, j: usize, on: bool) -> Self {
        if on {
            VertexMask(self.0 | 1 << j)
        } else {
            VertexMask(self.0 & !(1 << j))
        }
    }

    pub fn count_ones(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn bits(self, p: usize) -> Vec<bool> {
        (0..p).map(|j| self.get(j)).collect()
    }

    /// Neighbours differ in exactly one bit.
    pub fn is_adjacent(self, other: VertexMask) -> bool {
        (self.0 ^ other.0).count_ones() == 1
    }
}

/// A query, its reference and the group map, all in encoded space.
#[derive(Debug, Clone, Copy)]
pub struct Hypercube<'a> {
    pub query: &'a [f64],
    pub reference: &'a [f64],
    pub groups: &'a [Span],
}

impl<'a> Hypercube<'a> {
    pub fn new(query: &'a [f64], reference: &'a [f64], groups: &'a [Span]) -> Result<Self, SevError> {
        let width = groups.last().map_or(0, |s| s.end);
        for v in [query, reference] {
            if v.len() != width {
                return Err(SevError::DimensionMismatch { expected: width, found: v.len() });
            }
        }
        if groups.len() > MAX_FEATURES {
            return Err(SevError::TooManyFeatures { found: groups.len(), limit: MAX_FEATURES });
        }
        Ok(Self { query, reference, groups })
    }

    pub fn n_features(&self) -> usize {
        self.groups.len()
    }

    pub fn width(&self) -> usize {
        self.query.len()
    }

    /// Writes the point of vertex `mask` into `out`.
    pub fn point_into(&self, mask: VertexMask, out: &mut [f64]) {
        for (j, span) in self.groups.iter().enumerate() {
            let src = if mask.get(j) { self.query } else { self.reference };
            out[span.range()].copy_from_slice(&src[span.range()]);
        }
    }

    pub fn point(&self, mask: VertexMask) -> Vec<f64> {
        let mut out = vec![0.0; self.width()];
        self.point_into(mask, &mut out);
        out
    }
}

/// `mask ⊙ query + (1 - mask) ⊙ reference`, lifted to feature groups.
pub fn vertex_to_point(mask: &[bool], query: &[f64], reference: &[f64], groups: &[Span]) -> Result<Vec<f64>, SevError> {
    if mask.len() != groups.len() {
        return Err(SevError::DimensionMismatch { expected: groups.len(), found: mask.len() });
    }
    let cube = Hypercube::new(query, reference, groups)?;
    Ok(cube.point(VertexMask::from_bits(mask)))
}
