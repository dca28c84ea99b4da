//! Stump files, OpenSCAD export, occupancy grids and isosurface meshes.

mod grid;
mod json;
mod mc_table;
mod mesh;
mod scad;

use thiserror::Error;

pub use grid::{rasterize, rasterize_field, rasterize_soft, OccupancyGrid};
pub use json::{soft_stump_to_json, stump_from_json, stump_to_json, StumpDoc};
pub use mesh::{marching_cubes, Mesh};
pub use scad::{export_openscad, export_openscad_soft, export_openscad_tree, fmt_num, import_scad, CLAMP_FACTOR};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("at '{pointer}': {msg}")]
    Json { pointer: String, msg: String },
    #[error("grid: {0}")]
    Grid(String),
    #[error("scad line {line}: {msg}")]
    Scad { line: usize, msg: String },
    #[error("soft stumps cannot be exported; binarize the weights first (threshold 0.5)")]
    SoftExport,
}
