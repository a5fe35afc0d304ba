//! On-disk formats: binary matrices, PGM grids and forest JSON.

pub mod forest;
pub mod matrix;
pub mod pgm;
