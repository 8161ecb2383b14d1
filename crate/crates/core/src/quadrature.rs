//! Integration of scalar fields over regions, and an image-area estimate that
//! rasterizes `f(E)` directly without touching the Jacobian.
//!
//! Every reduction gathers per-node values in index order and sums them with
//! compensated summation, so results do not depend on the rayon pool size.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::HarmonicMap;
use crate::error::{Error, Result};
use crate::regions::{rasterize_any, PixelGrid, Region, StarRegion};
use crate::sum::{compensated_sum, NeumaierSum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    /// Difference between the two finest refinement levels.
    pub error_estimate: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadOptions {
    pub tol: f64,
    pub radial_start: usize,
    pub angular_start: usize,
    pub radial_cap: usize,
    pub angular_cap: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            radial_start: 16,
            angular_start: 64,
            radial_cap: 256,
            angular_cap: 4096,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.tol >= 1e-12 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "quadrature tolerance must be >= 1e-12, got {}",
                self.tol
            )));
        }
        if self.radial_start < 1
            || self.angular_start < 1
            || self.radial_cap < self.radial_start
            || self.angular_cap < self.angular_start
        {
            return Err(Error::InvalidArgument(format!(
                "inconsistent quadrature caps: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Newton iteration on the Legendre three-term recurrence, seeded with the
    /// Chebyshev-like guess `cos(pi (i + 3/4) / (q + 1/2))`.
    pub fn compute(q: usize) -> Self {
        assert!(q >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; q];
        let mut weights = vec![0.0; q];
        for i in 0..q.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(q, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(q, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[q - 1 - i] = x;
            weights[i] = w;
            weights[q - 1 - i] = w;
        }
        if q % 2 == 1 {
            nodes[q / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Cached rules for powers of two up to 1024.
    pub fn cached(q: usize) -> std::borrow::Cow<'static, GaussRule> {
        static RULES: [OnceLock<GaussRule>; 11] = [const { OnceLock::new() }; 11];
        if q.is_power_of_two() && q <= 1024 {
            let slot = &RULES[q.trailing_zeros() as usize];
            std::borrow::Cow::Borrowed(slot.get_or_init(|| Self::compute(q)))
        } else {
            std::borrow::Cow::Owned(Self::compute(q))
        }
    }

    /// `int_0^radius phi(r) r dr`.
    fn radial<F>(&self, radius: f64, mut phi: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let half = 0.5 * radius;
        let mut acc = NeumaierSum::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let r = half * (1.0 + x);
            acc.add(w * phi(r)? * r);
        }
        Ok(half * acc.total())
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { p0 } else { p1 };
    let prev = if n == 0 { 0.0 } else { p0 };
    let d = n as f64 * (x * p - prev) / (x * x - 1.0);
    (p, d)
}

/// `int_0^radius field(r e^{i theta}) r dr` by a `q`-point Gauss rule.
pub fn radial_integral<F>(field: &F, theta: f64, radius: f64, q: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Result<f64>,
{
    let dir = Complex64::from_polar(1.0, theta);
    GaussRule::cached(q).radial(radius, |r| field(dir * r))
}

/// Radial Gauss rule with node doubling until two levels agree to
/// `tol * max(1, |value|)`.
pub fn radial_integral_adaptive<F>(
    field: &F,
    theta: f64,
    radius: f64,
    opts: &QuadOptions,
) -> Result<QuadResult>
where
    F: Fn(Complex64) -> Result<f64>,
{
    opts.check()?;
    let mut q = opts.radial_start;
    let mut value = radial_integral(field, theta, radius, q)?;
    let mut evals = q;
    while q < opts.radial_cap {
        let next = (2 * q).min(opts.radial_cap);
        let fine = radial_integral(field, theta, radius, next)?;
        evals += next;
        let err = (fine - value).abs();
        let scale = fine.abs().max(1.0);
        let capped = next == opts.radial_cap;
        if err <= opts.tol * scale || (capped && err <= 10.0 * opts.tol * scale) {
            return Ok(QuadResult {
                value: fine,
                error_estimate: err,
                evals,
            });
        }
        if capped {
            return Err(Error::NonConvergence {
                radial_nodes: next,
                angular_nodes: 1,
                coarse: value,
                fine,
                error_estimate: err,
                limit: 10.0 * opts.tol * scale,
            });
        }
        q = next;
        value = fine;
    }
    Err(Error::NonConvergence {
        radial_nodes: q,
        angular_nodes: 1,
        coarse: value,
        fine: value,
        error_estimate: f64::INFINITY,
        limit: 10.0 * opts.tol,
    })
}

/// Angular layout of one refinement level: ray angles, ray weights, ray radii.
struct AngularLevel {
    rays: Vec<(f64, f64, f64)>,
}

impl AngularLevel {
    fn disk(radius: f64, m: usize) -> Self {
        let step = TAU / m as f64;
        let rays = (0..m).map(|j| (step * j as f64, step, radius)).collect();
        Self { rays }
    }

    /// Composite Gauss rule with `p` nodes on each profile segment; the profile
    /// is linear there, so the ray integrals are smooth within a segment.
    fn star(star: &StarRegion, p: usize) -> Self {
        let rule = GaussRule::cached(p);
        let m = star.profile().len();
        let width = TAU / m as f64;
        let mut rays = Vec::with_capacity(m * p);
        for j in 0..m {
            let left = width * j as f64;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let theta = left + 0.5 * width * (1.0 + x);
                rays.push((theta, 0.5 * width * w, star.radius_at(theta)));
            }
        }
        Self { rays }
    }

    fn integrate<F>(&self, field: &F, q: usize) -> Result<f64>
    where
        F: Fn(Complex64) -> Result<f64> + Sync,
    {
        let rule = GaussRule::cached(q);
        let rule = rule.as_ref();
        let parts = self
            .rays
            .par_iter()
            .map(|&(theta, weight, radius)| {
                let dir = Complex64::from_polar(1.0, theta);
                Ok(weight * rule.radial(radius, |r| field(dir * r))?)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(compensated_sum(parts))
    }
}

/// Tensor-product polar rule over a disk or star-shaped region.
///
/// Radially a `q`-point Gauss-Legendre rule on `[0, R(theta)]` with weight `r`.
/// Angularly the periodic trapezoid rule with `M` nodes on disks, and a
/// composite Gauss rule aligned with the profile segments on star regions.
/// Both node counts double until successive levels agree to
/// `tol * max(1, |value|)`.
pub fn integrate_polar<F>(field: F, region: &Region, opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(Complex64) -> Result<f64> + Sync,
{
    opts.check()?;
    // angular "resolution" is M for disks and nodes-per-segment for stars
    let (angular_start, angular_cap, level): (usize, usize, Box<dyn Fn(usize) -> AngularLevel>) =
        match region {
            Region::Disk(d) => {
                let r = d.radius();
                (
                    opts.angular_start,
                    opts.angular_cap,
                    Box::new(move |m| AngularLevel::disk(r, m)),
                )
            }
            Region::Star(s) => {
                let segments = s.profile().len();
                let cap = (opts.angular_cap / segments).max(2);
                let start = (opts.angular_start / segments).clamp(2, cap);
                (start, cap, Box::new(move |p| AngularLevel::star(s, p)))
            }
            Region::Grid(_) => return Err(Error::UnsupportedRegion("grid")),
        };

    let mut q = opts.radial_start;
    let mut a = angular_start;
    let mut current = level(a);
    let mut value = current.integrate(&field, q)?;
    let mut evals = current.rays.len() * q;
    loop {
        let next_q = (2 * q).min(opts.radial_cap);
        let next_a = (2 * a).min(angular_cap);
        let at_cap = next_q == q && next_a == a;
        if at_cap {
            // nothing finer is allowed; error is unknown only if we never refined
            return Err(Error::NonConvergence {
                radial_nodes: q,
                angular_nodes: current.rays.len(),
                coarse: value,
                fine: value,
                error_estimate: f64::INFINITY,
                limit: 10.0 * opts.tol,
            });
        }
        if next_a != a {
            current = level(next_a);
        }
        let fine = current.integrate(&field, next_q)?;
        evals += current.rays.len() * next_q;
        let err = (fine - value).abs();
        let scale = fine.abs().max(1.0);
        let capped =
            (2 * next_q).min(opts.radial_cap) == next_q && (2 * next_a).min(angular_cap) == next_a;
        if err <= opts.tol * scale || (capped && err <= 10.0 * opts.tol * scale) {
            return Ok(QuadResult {
                value: fine,
                error_estimate: err,
                evals,
            });
        }
        if capped {
            return Err(Error::NonConvergence {
                radial_nodes: next_q,
                angular_nodes: current.rays.len(),
                coarse: value,
                fine,
                error_estimate: err,
                limit: 10.0 * opts.tol * scale,
            });
        }
        q = next_q;
        a = next_a;
        value = fine;
    }
}

/// Midpoint rule over the set cells. The error estimate compares against the
/// same mask refined once dyadically (four sub-cells per cell).
pub fn integrate_grid<F>(field: F, grid: &PixelGrid) -> Result<QuadResult>
where
    F: Fn(Complex64) -> Result<f64> + Sync,
{
    let centers: Vec<Complex64> = grid.set_centers().collect();
    let area = grid.cell_area();
    let quarter = 0.25 * grid.cell_side();
    let offsets = [
        Complex64::new(-quarter, -quarter),
        Complex64::new(quarter, -quarter),
        Complex64::new(-quarter, quarter),
        Complex64::new(quarter, quarter),
    ];
    let parts = centers
        .par_iter()
        .map(|&z| {
            let mid = field(z)?;
            let mut sub = NeumaierSum::new();
            for o in offsets {
                sub.add(field(z + o)?);
            }
            Ok((mid, 0.25 * sub.total()))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let coarse = area * compensated_sum(parts.iter().map(|p| p.0));
    let fine = area * compensated_sum(parts.iter().map(|p| p.1));
    Ok(QuadResult {
        value: coarse,
        error_estimate: (fine - coarse).abs(),
        evals: 5 * centers.len(),
    })
}

/// Half-width of the square window that receives image points.
pub const IMAGE_WINDOW: f64 = 2.0;

/// Image-area estimate that never evaluates the Jacobian.
///
/// The centers of an `n x n` rasterization of `region` are pushed through `f`
/// and binned on an `n x n` grid over `[-2, 2]^2`. Gaps between mapped samples
/// are closed with a one-cell morphological closing (dilate, then erode) and
/// the occupied area is returned. The error estimate is the larger of the
/// change against resolution `n / 2` and the change under a seeded sub-cell
/// shift of the sample points. `f` is assumed injective on `region`.
pub fn mc_image_area(f: &HarmonicMap, region: &Region, n: usize, seed: u64) -> Result<QuadResult> {
    if !n.is_power_of_two() || !(64..=4096).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "image raster resolution must be a power of two in 64..=4096, got {n}"
        )));
    }
    let zero = Complex64::new(0.0, 0.0);
    let (value, evals_fine) = occupied_image_area(f, region, n, zero)?;
    let (coarse, evals_coarse) = occupied_image_area(f, region, n / 2, zero)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 1.0 / n as f64;
    let shift = Complex64::new(rng.random_range(-half..half), rng.random_range(-half..half));
    let (shifted, evals_shift) = occupied_image_area(f, region, n, shift)?;

    Ok(QuadResult {
        value,
        error_estimate: (value - coarse).abs().max((value - shifted).abs()),
        evals: evals_fine + evals_coarse + evals_shift,
    })
}

fn occupied_image_area(
    f: &HarmonicMap,
    region: &Region,
    n: usize,
    shift: Complex64,
) -> Result<(f64, usize)> {
    let pre = rasterize_any(region, n);
    let centers: Vec<Complex64> = pre.set_centers().collect();
    let images = centers
        .par_iter()
        .map(|&z| {
            let moved = z + shift;
            let z = if moved.norm() <= 1.0 { moved } else { z };
            f.eval(z)
        })
        .collect::<Result<Vec<Complex64>>>()?;

    let side = 2.0 * IMAGE_WINDOW / n as f64;
    let mut occupied = vec![false; n * n];
    for w in &images {
        let col = ((w.re + IMAGE_WINDOW) / side).floor();
        let row = ((w.im + IMAGE_WINDOW) / side).floor();
        if (0.0..n as f64).contains(&col) && (0.0..n as f64).contains(&row) {
            occupied[row as usize * n + col as usize] = true;
        }
    }
    let closed = erode(&dilate(&occupied, n), n);
    let count = closed.iter().filter(|&&b| b).count();
    Ok((count as f64 * side * side, centers.len()))
}

fn dilate(mask: &[bool], n: usize) -> Vec<bool> {
    let mut out = vec![false; n * n];
    for row in 0..n {
        for col in 0..n {
            if mask[row * n + col] {
                for r in row.saturating_sub(1)..=(row + 1).min(n - 1) {
                    for c in col.saturating_sub(1)..=(col + 1).min(n - 1) {
                        out[r * n + c] = true;
                    }
                }
            }
        }
    }
    out
}

fn erode(mask: &[bool], n: usize) -> Vec<bool> {
    let mut out = vec![false; n * n];
    for row in 1..n.saturating_sub(1) {
        for col in 1..n - 1 {
            out[row * n + col] =
                (row - 1..=row + 1).all(|r| (col - 1..=col + 1).all(|c| mask[r * n + c]));
        }
    }
    out
}
