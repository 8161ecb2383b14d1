//! Area distortion of planar harmonic mappings of the unit disk.
//!
//! A harmonic map `f = h + conj(g)` sends a set `E` to a set of measure
//! `int_E J_f dA` with `J_f = |h'|^2 - |g'|^2`. This crate evaluates that
//! integral on disks, star-shaped sets and pixel grids, cross-checks it against
//! a rasterized image of `f(E)`, and measures the margins of the associated
//! contraction and Schwarz-Pick type inequalities. A derivative-free search
//! looks for extremal maps within parametric families.

pub mod analytic;
pub mod cli;
pub mod distortion;
pub mod error;
pub mod presets;
pub mod quadrature;
pub mod regions;
pub mod report;
pub mod search;
pub mod sum;

pub use analytic::{construct_map, validate, HarmonicMap, MapSpec, Series, ValidityReport};
pub use error::{Error, Result};
pub use quadrature::{integrate_grid, integrate_polar, mc_image_area, QuadOptions, QuadResult};
pub use regions::{region_measure, MeasureValue, PixelGrid, Region, RegionSpec};
pub use report::{ChainReport, VerificationReport};
pub use search::{FamilyKind, FamilySpec, SearchOptions, SearchResult};
