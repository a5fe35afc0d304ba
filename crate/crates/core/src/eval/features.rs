use alloc::vec::Vec;

use crate::grid::Grid;
use crate::lorentz::{log_origin_raw, Curvature, LorentzPoint};
use crate::math::{exp, sq_dist};
use crate::{Error, Result};

/// Per-pixel Lorentz features of one view, `(D+1)` coordinates per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    height: usize,
    width: usize,
    dim: usize,
    coords: Vec<f64>,
}

impl FeatureGrid {
    pub fn new(height: usize, width: usize, points: Vec<LorentzPoint>) -> Result<Self> {
        if points.len() != height * width {
            return Err(Error::DimensionMismatch {
                expected: height * width,
                got: points.len(),
            });
        }
        let first = points.first().ok_or(Error::Empty("feature grid"))?;
        let dim = first.dim();
        let mut coords = Vec::with_capacity(points.len() * (dim + 1));
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
            coords.extend_from_slice(p.as_slice());
        }
        Ok(Self {
            height,
            width,
            dim,
            coords,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Spatial dimension `D`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, pixel: usize) -> &[f64] {
        let w = self.dim + 1;
        &self.coords[pixel * w..(pixel + 1) * w]
    }

    /// Log-map-at-origin of every pixel, `D` values per pixel.
    pub fn tangent(&self, c: Curvature) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| log_origin_raw(&self.point(i)[1..], c))
            .collect()
    }
}

/// Query affinity in `(0, 1]`.
pub type ScoreMap = Grid<f64>;

/// `exp(-|z(p) - z(q)|^2)` with `z` the tangent vector at the origin.
pub fn tangent_affinity_score(
    grid: &FeatureGrid,
    query: (usize, usize),
    c: Curvature,
) -> Result<ScoreMap> {
    let (qr, qc) = query;
    if qr >= grid.height || qc >= grid.width {
        return Err(Error::UnknownId(qr * grid.width + qc));
    }
    let z = grid.tangent(c);
    let zq = &z[qr * grid.width + qc];
    let scores = z.iter().map(|zp| exp(-sq_dist(zp, zq))).collect();
    Grid::from_vec(grid.height, grid.width, scores)
}
