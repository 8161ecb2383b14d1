//! Area distortion quantities and inequality checks.
//!
//! Every check computes both sides independently and reports the margin; the
//! inequality is never assumed. Hypothesis violations (not a self-map, not
//! sense-preserving, `f(0) != 0`) are attached as warnings and downgrade the
//! report to "hypothesis unmet" instead of failing the computation.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{validate, HarmonicMap};
use crate::error::{Error, Result};
use crate::quadrature::{
    integrate_grid, integrate_polar, radial_integral_adaptive, QuadOptions, QuadResult,
};
use crate::regions::{rasterize_any, region_measure, PixelGrid, Region};
use crate::report::{report_tolerance, ChainReport, VerificationReport};
use crate::sum::NeumaierSum;

/// Boundary samples used to estimate `sup |f|` on the unit circle.
pub const BOUNDARY_SAMPLES: usize = 1024;
const SELF_MAP_SLACK: f64 = 1e-12;
const ORIGIN_SLACK: f64 = 1e-10;

/// `m(f(E)) = int_E J_f dA`.
pub fn image_area(f: &HarmonicMap, region: &Region, opts: &QuadOptions) -> Result<QuadResult> {
    integrate_field(|z| f.jacobian(z), region, opts)
}

/// `int_E |h'|^2 dA`.
pub fn analytic_energy(f: &HarmonicMap, region: &Region, opts: &QuadOptions) -> Result<QuadResult> {
    integrate_field(|z| f.analytic_energy_density(z), region, opts)
}

fn integrate_field<F>(field: F, region: &Region, opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(Complex64) -> Result<f64> + Sync,
{
    match region {
        Region::Grid(g) => integrate_grid(field, g),
        _ => integrate_polar(field, region, opts),
    }
}

/// Sampled hypotheses shared by the self-map inequalities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypotheses {
    pub self_map_sup: f64,
    pub sup_abs_dilatation: Option<f64>,
    pub f_at_origin: f64,
}

impl Hypotheses {
    pub fn check(f: &HarmonicMap) -> Result<Self> {
        let self_map_sup = boundary_sup(f, BOUNDARY_SAMPLES)?;
        let sup_abs_dilatation = match validate(f, 256, 64) {
            Ok(rep) => Some(rep.sup_abs_dilatation),
            Err(Error::CriticalPoint(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            self_map_sup,
            sup_abs_dilatation,
            f_at_origin: f.eval(Complex64::new(0.0, 0.0))?.norm(),
        })
    }

    pub fn is_self_map(&self) -> bool {
        self.self_map_sup <= 1.0 + SELF_MAP_SLACK
    }

    pub fn is_sense_preserving(&self) -> bool {
        self.sup_abs_dilatation
            .is_some_and(crate::analytic::is_sense_preserving_value)
    }

    pub fn fixes_origin(&self) -> bool {
        self.f_at_origin <= ORIGIN_SLACK
    }

    /// Warnings for a sense-preserving self-map hypothesis.
    pub fn self_map_warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.is_self_map() {
            w.push(format!(
                "not a self-map of the disk: sup|f| on the circle = {:.6}",
                self.self_map_sup
            ));
        }
        match self.sup_abs_dilatation {
            None => w.push("critical point of h: sense-preservation undecidable".into()),
            Some(k) if !self.is_sense_preserving() => {
                w.push(format!("not sense-preserving: sup|omega| = {k:.6}"))
            }
            _ => {}
        }
        w
    }

    pub fn origin_warnings(&self) -> Vec<String> {
        if self.fixes_origin() {
            Vec::new()
        } else {
            vec![format!("f(0) != 0: |f(0)| = {:.6}", self.f_at_origin)]
        }
    }
}

/// `max |f(e^{i theta_j})|` over `samples` equally spaced boundary points.
pub fn boundary_sup(f: &HarmonicMap, samples: usize) -> Result<f64> {
    (0..samples).try_fold(0.0f64, |acc, j| {
        let z = Complex64::from_polar(1.0, TAU * j as f64 / samples as f64);
        Ok(acc.max(f.eval(z)?.norm()))
    })
}

/// Sample points of a region: a polar grid of `n` radii (including the origin
/// and the boundary radius) by `n` angles for disks and star regions, and the
/// set cell centers for pixel grids.
pub fn region_samples(region: &Region, n: usize) -> Vec<Complex64> {
    match region {
        Region::Grid(g) => g.set_centers().collect(),
        _ => {
            let n = n.max(2);
            let mut pts = vec![Complex64::new(0.0, 0.0)];
            for j in 0..n {
                let theta = TAU * j as f64 / n as f64;
                let radius = crate::regions::radial_profile(region, theta).unwrap_or(0.0);
                for i in 1..n {
                    pts.push(Complex64::from_polar(
                        radius * i as f64 / (n - 1) as f64,
                        theta,
                    ));
                }
            }
            pts
        }
    }
}

/// Largest sampled `|omega|` on the region (the constant `k`).
pub fn sup_dilatation_on(f: &HarmonicMap, region: &Region, n: usize) -> Result<f64> {
    region_samples(region, n)
        .into_iter()
        .try_fold(0.0f64, |acc, z| Ok(acc.max(f.dilatation(z)?.norm())))
}

/// The two one-sided bounds `(1 - k^2) A <= m(f(E)) <= A` with
/// `A = int_E |h'|^2` and `k` the sampled sup of `|omega|` on `E`.
pub fn quantitative_bounds(
    f: &HarmonicMap,
    region: &Region,
    opts: &QuadOptions,
) -> Result<(VerificationReport, VerificationReport)> {
    let k = sup_dilatation_on(f, region, 256)?;
    if k >= 1.0 {
        return Err(Error::InvalidMap(format!(
            "quantitative bounds need sup|omega| < 1 on the region, got {k}"
        )));
    }
    let energy = analytic_energy(f, region, opts)?;
    let area = image_area(f, region, opts)?;
    let tol = report_tolerance(&[energy.error_estimate, area.error_estimate]);
    let evals = energy.evals + area.evals;
    let detail = format!(
        "k={k:.16e}; energy_err={:.3e}; area_err={:.3e}",
        energy.error_estimate, area.error_estimate
    );
    let lower = VerificationReport::at_most(
        "quantitative_lower",
        (1.0 - k * k) * energy.value,
        area.value,
        tol,
    )
    .with_evals(evals)
    .with_detail(detail.clone());
    let upper = VerificationReport::at_most("quantitative_upper", area.value, energy.value, tol)
        .with_evals(evals)
        .with_detail(detail);
    Ok((lower, upper))
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "radius must lie in (0, 1), got {r}"
        )));
    }
    Ok(())
}

/// `m(f(D_r)) <= int_{D_r} |h'|^2 <= pi r^2`, each link reported separately.
pub fn disk_contraction_report(f: &HarmonicMap, r: f64, opts: &QuadOptions) -> Result<ChainReport> {
    check_radius(r)?;
    let disk = Region::disk(r)?;
    let hyp = Hypotheses::check(f)?;
    let warnings = hyp.self_map_warnings();
    let area = image_area(f, &disk, opts)?;
    let energy = analytic_energy(f, &disk, opts)?;
    let reference = PI * r * r;

    let energy_link = VerificationReport::at_most(
        format!("disk_chain_energy r={r}"),
        area.value,
        energy.value,
        report_tolerance(&[area.error_estimate, energy.error_estimate]),
    )
    .with_evals(area.evals + energy.evals)
    .with_detail(format!(
        "area_err={:.3e}; energy_err={:.3e}",
        area.error_estimate, energy.error_estimate
    ))
    .with_warnings(&warnings);
    let reference_link = VerificationReport::at_most(
        format!("disk_chain_reference r={r}"),
        energy.value,
        reference,
        report_tolerance(&[energy.error_estimate]),
    )
    .with_evals(energy.evals)
    .with_detail(format!(
        "image_area={:.16e}; self_map_sup={:.16e}",
        area.value, hyp.self_map_sup
    ))
    .with_warnings(&warnings);

    Ok(ChainReport {
        r,
        image_area: area,
        analytic_energy: energy,
        reference_area: reference,
        energy_link,
        reference_link,
        self_map_sup: hyp.self_map_sup,
        warnings,
    })
}

/// Which integrand the radial profile checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialIntegrand {
    /// `J_f`
    Jacobian,
    /// `|h'|^2`
    AnalyticEnergy,
}

/// For `theta_j = 2 pi j / m`, checks `int_0^r F(t e^{i theta_j}) t dt <= r^2 / 2`.
pub fn radial_bound_profile(
    f: &HarmonicMap,
    r: f64,
    m: usize,
    integrand: RadialIntegrand,
    opts: &QuadOptions,
) -> Result<Vec<VerificationReport>> {
    check_radius(r)?;
    if m < 16 {
        return Err(Error::InvalidArgument(format!(
            "radial profile needs m >= 16, got {m}"
        )));
    }
    let hyp = Hypotheses::check(f)?;
    let mut warnings = hyp.self_map_warnings();
    warnings.extend(hyp.origin_warnings());
    let label = match integrand {
        RadialIntegrand::Jacobian => "radial_jacobian",
        RadialIntegrand::AnalyticEnergy => "radial_energy",
    };
    let bound = 0.5 * r * r;
    let opts = QuadOptions {
        tol: 1e-12,
        ..*opts
    };
    (0..m)
        .into_par_iter()
        .map(|j| {
            let theta = TAU * j as f64 / m as f64;
            let q = match integrand {
                RadialIntegrand::Jacobian => {
                    radial_integral_adaptive(&|z| f.jacobian(z), theta, r, &opts)?
                }
                RadialIntegrand::AnalyticEnergy => {
                    radial_integral_adaptive(&|z| f.analytic_energy_density(z), theta, r, &opts)?
                }
            };
            Ok(VerificationReport::at_most(
                format!("{label} r={r} theta={theta:.6}"),
                q.value,
                bound,
                report_tolerance(&[q.error_estimate]),
            )
            .with_evals(q.evals)
            .with_warnings(&warnings))
        })
        .collect()
}

/// `m(f(E)) <= m(E)` for star-shaped `E` and `f(0) = 0`.
pub fn star_contraction_report(
    f: &HarmonicMap,
    region: &Region,
    opts: &QuadOptions,
) -> Result<VerificationReport> {
    if matches!(region, Region::Grid(_)) {
        return Err(Error::UnsupportedRegion("grid"));
    }
    let hyp = Hypotheses::check(f)?;
    let mut warnings = hyp.self_map_warnings();
    warnings.extend(hyp.origin_warnings());
    let area = image_area(f, region, opts)?;
    let measure = region_measure(region).value;
    Ok(VerificationReport::at_most(
        format!("star_contraction {}", region.kind()),
        area.value,
        measure,
        report_tolerance(&[area.error_estimate]),
    )
    .with_evals(area.evals)
    .with_detail(format!("area_err={:.3e}", area.error_estimate))
    .with_warnings(&warnings))
}

/// Sampled maximum with a two-level agreement figure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampledMax {
    /// Maximum on the refined sampling.
    pub value: f64,
    /// Maximum on the coarse sampling.
    pub coarse: f64,
    pub argmax: [f64; 2],
}

/// `C_K = sup_{z in K} J_f(z)` on a `grid x grid` polar sampling of `K`,
/// refined once to `2 grid`.
pub fn local_contraction_constant(
    f: &HarmonicMap,
    region: &Region,
    grid: usize,
) -> Result<SampledMax> {
    if region.max_radius() > 1.0 - 1e-6 {
        return Err(Error::InvalidRegion(format!(
            "region must lie compactly inside the disk (max radius {} > 1 - 1e-6)",
            region.max_radius()
        )));
    }
    let scan = |pts: Vec<Complex64>| -> Result<(f64, Complex64)> {
        pts.into_iter().try_fold(
            (f64::NEG_INFINITY, Complex64::new(0.0, 0.0)),
            |(best, at), z| {
                let j = f.jacobian(z)?;
                Ok(if j > best { (j, z) } else { (best, at) })
            },
        )
    };
    let (coarse, _) = scan(region_samples(region, grid))?;
    let fine_pts = match region {
        Region::Grid(g) => refined_grid_samples(g),
        _ => region_samples(region, 2 * grid),
    };
    let (value, at) = scan(fine_pts)?;
    Ok(SampledMax {
        value,
        coarse,
        argmax: [at.re, at.im],
    })
}

fn refined_grid_samples(g: &PixelGrid) -> Vec<Complex64> {
    let q = 0.25 * g.cell_side();
    g.set_centers()
        .flat_map(|z| {
            [(-q, -q), (q, -q), (-q, q), (q, q)]
                .into_iter()
                .map(move |(dx, dy)| z + Complex64::new(dx, dy))
        })
        .collect()
}

/// Decreasing rearrangement of `J_f` over a pixel model of a domain.
///
/// `W(s) = sup { int_E J_f : E subset domain, m(E) = s }` is the integral of the
/// `s` largest units of Jacobian mass; in the grid model it is exact and
/// piecewise linear, concave and nondecreasing in `s` (while `J_f >= 0`).
#[derive(Debug, Clone)]
pub struct JacobianProfile {
    /// Jacobian samples in decreasing order.
    values: Vec<f64>,
    /// `prefix[k]` = sum of the `k` largest values.
    prefix: Vec<f64>,
    cell_area: f64,
}

impl JacobianProfile {
    /// Samples `J_f` at the cell centers of the domain rasterized at `grid`
    /// (pixel-grid domains use their own cells).
    pub fn new(f: &HarmonicMap, domain: &Region, grid: usize) -> Result<Self> {
        let pixels = match domain {
            Region::Grid(g) => g.clone(),
            _ => {
                if grid < 2 {
                    return Err(Error::InvalidArgument(format!(
                        "grid must be >= 2, got {grid}"
                    )));
                }
                rasterize_any(domain, grid)
            }
        };
        let centers: Vec<Complex64> = pixels.set_centers().collect();
        if centers.is_empty() {
            return Err(Error::InvalidRegion(
                "domain has no cells at this resolution".into(),
            ));
        }
        let mut values = centers
            .par_iter()
            .map(|&z| f.jacobian(z))
            .collect::<Result<Vec<f64>>>()?;
        values.sort_by(|a, b| b.total_cmp(a));
        let mut prefix = Vec::with_capacity(values.len() + 1);
        let mut acc = NeumaierSum::new();
        prefix.push(0.0);
        for v in &values {
            acc.add(*v);
            prefix.push(acc.total());
        }
        Ok(Self {
            values,
            prefix,
            cell_area: pixels.cell_area(),
        })
    }

    /// Measure of the domain's pixel model.
    pub fn measure(&self) -> f64 {
        self.values.len() as f64 * self.cell_area
    }

    pub fn max_jacobian(&self) -> f64 {
        self.values[0]
    }

    /// `W(s)`.
    pub fn worst_case_image_area(&self, s: f64) -> Result<f64> {
        let total = self.measure();
        if !(s > 0.0 && s <= total * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!(
                "set measure must lie in (0, {total}], got {s}"
            )));
        }
        let cells = s / self.cell_area;
        let full = (cells.floor() as usize).min(self.values.len());
        let partial = if full < self.values.len() {
            (cells - full as f64) * self.values[full]
        } else {
            0.0
        };
        Ok(self.cell_area * (self.prefix[full] + partial))
    }

    /// Largest `s` with `W(s') <= s'` for all `s' <= s`; the full measure when
    /// the contraction holds for every subset.
    pub fn small_set_threshold(&self) -> f64 {
        // g(s) = W(s) - s is concave with g(0) = 0; walk cells until it turns positive
        let slack = 1e-12;
        let mut excess = 0.0;
        for (k, &v) in self.values.iter().enumerate() {
            let slope = v - 1.0;
            let next = excess + slope * self.cell_area;
            if slope > slack && next > slack * (k + 1) as f64 * self.cell_area {
                let s0 = k as f64 * self.cell_area;
                return s0 + ((-excess).max(0.0) / slope).min(self.cell_area);
            }
            excess = next;
        }
        self.measure()
    }
}

pub fn worst_case_image_area(f: &HarmonicMap, domain: &Region, s: f64, grid: usize) -> Result<f64> {
    JacobianProfile::new(f, domain, grid)?.worst_case_image_area(s)
}

pub fn small_set_threshold(f: &HarmonicMap, domain: &Region, grid: usize) -> Result<f64> {
    Ok(JacobianProfile::new(f, domain, grid)?.small_set_threshold())
}

/// `J_f(z) (1 - |z|^2)^2 / (1 - |f(z)|^2)^2`; `+inf` when `1 - |f(z)|^2 < 1e-12`.
pub fn sp_ratio(f: &HarmonicMap, z: Complex64) -> Result<f64> {
    crate::error::ensure_finite(z, "evaluation point")?;
    if z.norm() >= 1.0 {
        return Err(Error::Domain(z));
    }
    let w = f.eval(z)?;
    let image_gap = 1.0 - w.norm_sqr();
    if image_gap < 1e-12 {
        return Ok(f64::INFINITY);
    }
    let source_gap = 1.0 - z.norm_sqr();
    let ratio = source_gap / image_gap;
    Ok(f.jacobian(z)? * ratio * ratio)
}

/// A reference integral next to its closed form and a claimed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceIntegral {
    pub r: f64,
    pub quadrature: QuadResult,
    pub closed_form: f64,
    pub claimed: f64,
}

impl ReferenceIntegral {
    /// Equality check of quadrature against the closed form; the claimed value
    /// and its gap are carried in the detail column.
    pub fn report(&self, name: &str) -> VerificationReport {
        VerificationReport::equal(
            format!("{name} r={}", self.r),
            self.quadrature.value,
            self.closed_form,
            report_tolerance(&[self.quadrature.error_estimate]),
        )
        .with_evals(self.quadrature.evals)
        .with_detail(format!(
            "claimed={:.16e}; claimed_minus_closed_form={:.16e}",
            self.claimed,
            self.claimed - self.closed_form
        ))
    }

    /// Informational row comparing the claimed value with the closed form.
    pub fn claim_report(&self, name: &str) -> VerificationReport {
        VerificationReport::equal(
            format!("{name}_claim r={}", self.r),
            self.claimed,
            self.closed_form,
            report_tolerance(&[self.quadrature.error_estimate]),
        )
        .informational()
        .with_detail(format!("quadrature={:.16e}", self.quadrature.value))
    }

    pub fn claim_discrepancy(&self) -> f64 {
        self.claimed - self.closed_form
    }
}

/// `int_{|z|<r} (1 - |z|^2)^{-2} dA` by quadrature, by the antiderivative
/// `pi r^2 / (1 - r^2)`, and the often quoted `pi r^2`.
pub fn hyperbolic_disk_integral(r: f64, opts: &QuadOptions) -> Result<ReferenceIntegral> {
    check_radius(r)?;
    let quadrature = integrate_polar(
        |z| {
            let d = 1.0 - z.norm_sqr();
            Ok(1.0 / (d * d))
        },
        &Region::disk(r)?,
        opts,
    )?;
    Ok(ReferenceIntegral {
        r,
        quadrature,
        closed_form: PI * r * r / (1.0 - r * r),
        claimed: PI * r * r,
    })
}

/// Image area of `D_r` under the shear `z + alpha conj(z)^2`: quadrature,
/// `pi r^2 - 2 pi alpha^2 r^4`, and the claimed `pi r^2 - pi alpha^2 r^4`.
pub fn shear_disk_integral(alpha: f64, r: f64, opts: &QuadOptions) -> Result<ReferenceIntegral> {
    check_radius(r)?;
    let f = crate::analytic::construct_map(&crate::analytic::MapSpec::Shear {
        alpha: [alpha, 0.0],
        power: 2,
    })?;
    let quadrature = image_area(&f, &Region::disk(r)?, opts)?;
    let (r2, a2) = (r * r, alpha * alpha);
    Ok(ReferenceIntegral {
        r,
        quadrature,
        closed_form: PI * r2 - 2.0 * PI * a2 * r2 * r2,
        claimed: PI * r2 - PI * a2 * r2 * r2,
    })
}

/// `pi r^2 - m(f(D_r))`.
pub fn rigidity_margin(f: &HarmonicMap, r: f64, opts: &QuadOptions) -> Result<f64> {
    check_radius(r)?;
    Ok(PI * r * r - image_area(f, &Region::disk(r)?, opts)?.value)
}
