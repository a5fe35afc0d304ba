//! Row-major 2D grids and binary masks.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Dense `height x width` grid stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::DimensionMismatch {
                expected: height * width,
                got: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.width, index % self.width)
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&T> {
        if row < self.height && col < self.width {
            self.data.get(row * self.width + col)
        } else {
            None
        }
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        let i = self.index(row, col);
        self.data[i] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn same_shape<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.height != other.height || self.width != other.width {
            return Err(Error::ShapeMismatch(
                self.height,
                self.width,
                other.height,
                other.width,
            ));
        }
        Ok(())
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// 4-neighbours of a flat index.
    pub fn neighbors4(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = self.coords(index);
        let h = self.height;
        let w = self.width;
        [
            (r > 0).then(|| index - w),
            (r + 1 < h).then(|| index + w),
            (c > 0).then(|| index - 1),
            (c + 1 < w).then(|| index + 1),
        ]
        .into_iter()
        .flatten()
    }
}

/// Binary pixel mask.
pub type Mask = Grid<bool>;

impl Grid<bool> {
    pub fn empty(height: usize, width: usize) -> Self {
        Self::filled(height, width, false)
    }

    pub fn from_indices(height: usize, width: usize, indices: &[usize]) -> Self {
        let mut m = Self::empty(height, width);
        for &i in indices {
            m.data[i] = true;
        }
        m
    }

    pub fn area(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn intersection_count(&self, other: &Mask) -> usize {
        self.data
            .iter()
            .zip(&other.data)
            .filter(|(&a, &b)| a && b)
            .count()
    }

    pub fn union_count(&self, other: &Mask) -> usize {
        self.data
            .iter()
            .zip(&other.data)
            .filter(|(&a, &b)| a || b)
            .count()
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }
}

/// Splits the set pixels of `mask` into 4-connected components, each sorted
/// by flat index; components are ordered by their first pixel in raster order.
pub fn connected_components(mask: &Mask) -> Vec<Vec<usize>> {
    let mut seen = vec![false; mask.len()];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask.data[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut comp = Vec::new();
        while let Some(i) = stack.pop() {
            comp.push(i);
            for j in mask.neighbors4(i) {
                if mask.data[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}
