//! Measurable subsets of the unit disk: disks, star-shaped sets given by a
//! sampled radial profile, and pixel indicator grids on `[-1, 1]^2`.

use std::f64::consts::{PI, TAU};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

pub const MIN_PROFILE_SAMPLES: usize = 8;
pub const MAX_GRID_RESOLUTION: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskRegion {
    radius: f64,
}

impl DiskRegion {
    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// `{ r e^{i theta} : 0 <= r <= R(theta) }` with `R` the periodic piecewise-linear
/// interpolant of uniform samples `R(2 pi j / M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StarRegion {
    profile: Vec<f64>,
}

impl StarRegion {
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn radius_at(&self, theta: f64) -> f64 {
        interpolate_periodic(&self.profile, theta)
    }

    pub fn max_radius(&self) -> f64 {
        self.profile.iter().copied().fold(0.0, f64::max)
    }

    /// The dilated set `tE`.
    pub fn scaled(&self, t: f64) -> Result<StarRegion> {
        let profile = self.profile.iter().map(|r| r * t).collect();
        match Region::star(profile)? {
            Region::Star(s) => Ok(s),
            _ => unreachable!(),
        }
    }
}

/// Periodic piecewise-linear interpolation of samples taken at `2 pi j / M`.
pub fn interpolate_periodic(samples: &[f64], theta: f64) -> f64 {
    let m = samples.len();
    let u = theta.rem_euclid(TAU) / TAU * m as f64;
    let j = (u.floor() as usize).min(m - 1);
    let t = u - j as f64;
    samples[j] * (1.0 - t) + samples[(j + 1) % m] * t
}

/// Indicator grid on `[-1, 1]^2`. Cell `(row, col)` has center
/// `(-1 + (col + 1/2) h, -1 + (row + 1/2) h)` with `h = 2 / n`; row 0 is the bottom row.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    n: usize,
    mask: Vec<bool>,
}

impl PixelGrid {
    pub fn new(n: usize, mask: Vec<bool>) -> Result<Self> {
        if n == 0 || n > MAX_GRID_RESOLUTION {
            return Err(Error::InvalidRegion(format!(
                "grid resolution must be in 1..={MAX_GRID_RESOLUTION}, got {n}"
            )));
        }
        if mask.len() != n * n {
            return Err(Error::InvalidRegion(format!(
                "mask has {} cells, expected {}",
                mask.len(),
                n * n
            )));
        }
        let grid = Self { n, mask };
        for (k, &on) in grid.mask.iter().enumerate() {
            if on && grid.center(k / n, k % n).norm() >= 1.0 {
                return Err(Error::InvalidRegion(format!(
                    "cell ({}, {}) is set but its center lies outside the open unit disk",
                    k / n,
                    k % n
                )));
            }
        }
        Ok(grid)
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn cell_side(&self) -> f64 {
        2.0 / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        let h = self.cell_side();
        h * h
    }

    pub fn center(&self, row: usize, col: usize) -> Complex64 {
        let h = self.cell_side();
        Complex64::new(-1.0 + (col as f64 + 0.5) * h, -1.0 + (row as f64 + 0.5) * h)
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.n + col]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Centers of all set cells in row-major order.
    pub fn set_centers(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(move |(k, _)| self.center(k / self.n, k % self.n))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let h = self.cell_side();
        let col = ((z.re + 1.0) / h).floor();
        let row = ((z.im + 1.0) / h).floor();
        if !(0.0..self.n as f64).contains(&col) || !(0.0..self.n as f64).contains(&row) {
            return false;
        }
        self.get(row as usize, col as usize)
    }

    /// Row-major bits, most significant bit first, base64 encoded.
    pub fn mask_base64(&self) -> String {
        let mut bytes = vec![0u8; self.mask.len().div_ceil(8)];
        for (k, &on) in self.mask.iter().enumerate() {
            if on {
                bytes[k / 8] |= 0x80 >> (k % 8);
            }
        }
        BASE64.encode(bytes)
    }

    pub fn from_base64(n: usize, encoded: &str) -> Result<Self> {
        let bytes = BASE64
            .decode(encoded.trim())
            .map_err(|e| Error::Parse(format!("grid mask: {e}")))?;
        let cells = n
            .checked_mul(n)
            .ok_or_else(|| Error::InvalidRegion("grid resolution overflows".into()))?;
        if bytes.len() != cells.div_ceil(8) {
            return Err(Error::Parse(format!(
                "grid mask has {} bytes, expected {} for n = {n}",
                bytes.len(),
                cells.div_ceil(8)
            )));
        }
        let mask = (0..cells)
            .map(|k| bytes[k / 8] & (0x80 >> (k % 8)) != 0)
            .collect();
        Self::new(n, mask)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Disk(DiskRegion),
    Star(StarRegion),
    Grid(PixelGrid),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureValue {
    pub value: f64,
    pub exact: bool,
}

impl Region {
    pub fn disk(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0 && radius <= 1.0) {
            return Err(Error::InvalidRegion(format!(
                "disk radius must lie in (0, 1], got {radius}"
            )));
        }
        Ok(Self::Disk(DiskRegion { radius }))
    }

    pub fn star(profile: Vec<f64>) -> Result<Self> {
        if profile.len() < MIN_PROFILE_SAMPLES {
            return Err(Error::InvalidRegion(format!(
                "star profile needs at least {MIN_PROFILE_SAMPLES} samples, got {}",
                profile.len()
            )));
        }
        if let Some(bad) = profile
            .iter()
            .find(|r| !(r.is_finite() && **r > 0.0 && **r <= 1.0))
        {
            return Err(Error::InvalidRegion(format!(
                "star profile values must lie in (0, 1], got {bad}"
            )));
        }
        Ok(Self::Star(StarRegion { profile }))
    }

    /// Samples `radius(theta_j)` at `m` uniform angles.
    pub fn star_from_fn(m: usize, radius: impl Fn(f64) -> f64) -> Result<Self> {
        Self::star((0..m).map(|j| radius(TAU * j as f64 / m as f64)).collect())
    }

    pub fn grid(grid: PixelGrid) -> Self {
        Self::Grid(grid)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Disk(_) => "disk",
            Self::Star(_) => "star",
            Self::Grid(_) => "grid",
        }
    }

    pub fn measure(&self) -> MeasureValue {
        region_measure(self)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        contains(self, z)
    }

    /// Largest `|z|` over the region's geometric model (cell centers for grids).
    pub fn max_radius(&self) -> f64 {
        match self {
            Self::Disk(d) => d.radius,
            Self::Star(s) => s.max_radius(),
            Self::Grid(g) => g.set_centers().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }
}

/// Planar Lebesgue measure. The star-shaped value integrates `R(theta)^2 / 2`
/// segment by segment; the integrand is quadratic on each segment, so the
/// sum is exact.
pub fn region_measure(region: &Region) -> MeasureValue {
    match region {
        Region::Disk(d) => MeasureValue {
            value: PI * d.radius * d.radius,
            exact: true,
        },
        Region::Star(s) => {
            let m = s.profile.len();
            let step = TAU / m as f64;
            let mut acc = NeumaierSum::new();
            for j in 0..m {
                let a = s.profile[j];
                let b = s.profile[(j + 1) % m];
                acc.add((a * a + a * b + b * b) / 3.0);
            }
            MeasureValue {
                value: 0.5 * step * acc.total(),
                exact: true,
            }
        }
        Region::Grid(g) => MeasureValue {
            value: g.count() as f64 * g.cell_area(),
            exact: true,
        },
    }
}

pub fn contains(region: &Region, z: Complex64) -> bool {
    match region {
        Region::Disk(d) => z.norm() <= d.radius,
        Region::Star(s) => z.norm() <= s.radius_at(z.arg()),
        Region::Grid(g) => g.contains(z),
    }
}

pub fn radial_profile(region: &Region, theta: f64) -> Result<f64> {
    match region {
        Region::Disk(d) => Ok(d.radius),
        Region::Star(s) => Ok(s.radius_at(theta)),
        Region::Grid(_) => Err(Error::UnsupportedRegion("grid")),
    }
}

/// Pixel model of `region`: a cell is set iff its center belongs to the region.
/// `n` must be a power of two in `64..=4096`.
pub fn rasterize(region: &Region, n: usize) -> Result<PixelGrid> {
    if !n.is_power_of_two() || !(64..=4096).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "raster resolution must be a power of two in 64..=4096, got {n}"
        )));
    }
    Ok(rasterize_any(region, n))
}

pub(crate) fn rasterize_any(region: &Region, n: usize) -> PixelGrid {
    let h = 2.0 / n as f64;
    let mut mask = vec![false; n * n];
    for row in 0..n {
        let y = -1.0 + (row as f64 + 0.5) * h;
        for col in 0..n {
            let z = Complex64::new(-1.0 + (col as f64 + 0.5) * h, y);
            mask[row * n + col] = z.norm() < 1.0 && contains(region, z);
        }
    }
    PixelGrid { n, mask }
}

/// Region file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegionSpec {
    Disk { r: f64 },
    Star { profile: Vec<f64> },
    Grid { n: usize, mask: String },
}

impl RegionSpec {
    pub fn build(&self) -> Result<Region> {
        match self {
            Self::Disk { r } => Region::disk(*r),
            Self::Star { profile } => Region::star(profile.clone()),
            Self::Grid { n, mask } => Ok(Region::Grid(PixelGrid::from_base64(*n, mask)?)),
        }
    }
}

impl From<&Region> for RegionSpec {
    fn from(region: &Region) -> Self {
        match region {
            Region::Disk(d) => Self::Disk { r: d.radius },
            Region::Star(s) => Self::Star {
                profile: s.profile.clone(),
            },
            Region::Grid(g) => Self::Grid {
                n: g.n,
                mask: g.mask_base64(),
            },
        }
    }
}
