//! Analytic series, harmonic maps `f = h + conj(g)` and their pointwise
//! differential quantities (Jacobian, second complex dilatation).

use std::f64::consts::TAU;
use std::ops::Add;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Maximum polynomial degree accepted by [`Series::new`].
pub const DEGREE_CAP: usize = 64;

/// Slack allowed on `|z| <= 1` before a point is rejected.
pub const DOMAIN_SLACK: f64 = 1e-12;

const POLE_GUARD: f64 = 1e-14;
const CRITICAL_GUARD: f64 = 1e-12;
const SENSE_MARGIN: f64 = 1e-9;

pub(crate) fn check_domain(z: Complex64) -> Result<()> {
    ensure_finite(z, "evaluation point")?;
    if z.norm() > 1.0 + DOMAIN_SLACK {
        return Err(Error::Domain(z));
    }
    Ok(())
}

/// Truncated power series `c_0 + c_1 z + ... + c_N z^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    coeffs: Vec<Complex64>,
}

impl Series {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() > DEGREE_CAP + 1 {
            return Err(Error::InvalidMap(format!(
                "series degree {} exceeds cap {DEGREE_CAP}",
                coeffs.len() - 1
            )));
        }
        for c in &coeffs {
            ensure_finite(*c, "series coefficient")?;
        }
        if coeffs.is_empty() {
            return Ok(Self::zero());
        }
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0)],
        }
    }

    /// The series `z`.
    pub fn identity() -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        }
    }

    /// `c z^power`.
    pub fn monomial(c: Complex64, power: usize) -> Result<Self> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); power + 1];
        coeffs[power] = c;
        Self::new(coeffs)
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Horner evaluation, restricted to the closed unit disk.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        check_domain(z)?;
        Ok(self.horner(z))
    }

    pub(crate) fn horner(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Series {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        Self { coeffs }
    }

    pub fn scale(&self, factor: Complex64) -> Series {
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * factor).collect(),
        }
    }
}

impl Add for &Series {
    type Output = Series;

    fn add(self, rhs: &Series) -> Series {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        let coeffs = (0..len)
            .map(|k| {
                self.coeffs.get(k).copied().unwrap_or(zero)
                    + rhs.coeffs.get(k).copied().unwrap_or(zero)
            })
            .collect();
        Series { coeffs }
    }
}

/// `f = h + conj(g)` with polynomial `h`, `g`. Derivatives are cached.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialMap {
    h: Series,
    g: Series,
    dh: Series,
    dg: Series,
}

impl PolynomialMap {
    pub fn new(h: Series, g: Series) -> Self {
        let dh = h.derivative();
        let dg = g.derivative();
        Self { h, g, dh, dg }
    }

    pub fn h(&self) -> &Series {
        &self.h
    }

    pub fn g(&self) -> &Series {
        &self.g
    }
}

/// Disk automorphism `e^{i rotation} (z - a) / (1 - conj(a) z)`, evaluated in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskAutomorphism {
    a: Complex64,
    rotation: f64,
}

impl DiskAutomorphism {
    pub fn new(a: Complex64, rotation: f64) -> Result<Self> {
        ensure_finite(a, "automorphism center")?;
        if !rotation.is_finite() {
            return Err(Error::NonFinite("automorphism rotation"));
        }
        if a.norm() >= 1.0 {
            return Err(Error::InvalidMap(format!(
                "automorphism center must satisfy |a| < 1, got |a| = {}",
                a.norm()
            )));
        }
        Ok(Self { a, rotation })
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    fn denominator(&self, z: Complex64) -> Result<Complex64> {
        let d = Complex64::new(1.0, 0.0) - self.a.conj() * z;
        if d.norm() < POLE_GUARD {
            return Err(Error::Pole(z));
        }
        Ok(d)
    }

    fn derivative_norm_sqr(&self, z: Complex64) -> Result<f64> {
        let d = self.denominator(z)?;
        let num = 1.0 - self.a.norm_sqr();
        Ok(num * num / (d.norm_sqr() * d.norm_sqr()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HarmonicMap {
    Polynomial(PolynomialMap),
    Automorphism(DiskAutomorphism),
}

impl HarmonicMap {
    pub fn polynomial(h: Series, g: Series) -> Self {
        Self::Polynomial(PolynomialMap::new(h, g))
    }

    pub fn identity() -> Self {
        Self::polynomial(Series::identity(), Series::zero())
    }

    pub fn automorphism(a: Complex64, rotation: f64) -> Result<Self> {
        Ok(Self::Automorphism(DiskAutomorphism::new(a, rotation)?))
    }

    pub fn rotation(angle: f64) -> Result<Self> {
        Self::automorphism(Complex64::new(0.0, 0.0), angle)
    }

    pub fn is_automorphism(&self) -> bool {
        matches!(self, Self::Automorphism(_))
    }

    /// `f(z)`; errors outside the closed disk.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        check_domain(z)?;
        self.eval_unchecked(z)
    }

    pub(crate) fn eval_unchecked(&self, z: Complex64) -> Result<Complex64> {
        match self {
            Self::Polynomial(p) => Ok(p.h.horner(z) + p.g.horner(z).conj()),
            Self::Automorphism(m) => {
                let d = m.denominator(z)?;
                Ok(Complex64::from_polar(1.0, m.rotation) * (z - m.a) / d)
            }
        }
    }

    /// `J_f(z) = |h'(z)|^2 - |g'(z)|^2`.
    pub fn jacobian(&self, z: Complex64) -> Result<f64> {
        check_domain(z)?;
        match self {
            Self::Polynomial(p) => Ok(p.dh.horner(z).norm_sqr() - p.dg.horner(z).norm_sqr()),
            Self::Automorphism(m) => m.derivative_norm_sqr(z),
        }
    }

    /// `|h'(z)|^2`, the integrand of the analytic energy.
    pub fn analytic_energy_density(&self, z: Complex64) -> Result<f64> {
        check_domain(z)?;
        match self {
            Self::Polynomial(p) => Ok(p.dh.horner(z).norm_sqr()),
            Self::Automorphism(m) => m.derivative_norm_sqr(z),
        }
    }

    /// Second complex dilatation `g'(z) / h'(z)`.
    pub fn dilatation(&self, z: Complex64) -> Result<Complex64> {
        check_domain(z)?;
        match self {
            Self::Polynomial(p) => {
                let dh = p.dh.horner(z);
                if dh.norm() < CRITICAL_GUARD {
                    return Err(Error::CriticalPoint(z));
                }
                Ok(p.dg.horner(z) / dh)
            }
            Self::Automorphism(m) => {
                m.denominator(z)?;
                Ok(Complex64::new(0.0, 0.0))
            }
        }
    }

    /// Multiplies `f` by a positive real factor. Only polynomial maps are closed
    /// under scaling.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scale factor must be positive and finite, got {factor}"
            )));
        }
        match self {
            Self::Polynomial(p) => {
                let c = Complex64::new(factor, 0.0);
                Ok(Self::polynomial(p.h.scale(c), p.g.scale(c)))
            }
            Self::Automorphism(_) => Err(Error::InvalidMap(
                "automorphisms cannot be rescaled without leaving the Möbius form".into(),
            )),
        }
    }

    /// Lossless description in the JSON map format.
    pub fn to_spec(&self) -> MapSpec {
        let pairs = |s: &Series| s.coefficients().iter().map(|c| [c.re, c.im]).collect();
        match self {
            Self::Polynomial(p) => MapSpec::Polynomial {
                h: pairs(&p.h),
                g: pairs(&p.g),
            },
            Self::Automorphism(m) => MapSpec::Automorphism {
                a: [m.a.re, m.a.im],
                rotation: m.rotation,
            },
        }
    }
}

/// Map definition as read from JSON. Complex numbers are `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum MapSpec {
    Polynomial { h: Vec<[f64; 2]>, g: Vec<[f64; 2]> },
    Affine { alpha: [f64; 2] },
    Shear { alpha: [f64; 2], power: u32 },
    Automorphism { a: [f64; 2], rotation: f64 },
}

fn pair(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// Builds a map from its description, enforcing the family constraints.
pub fn construct_map(spec: &MapSpec) -> Result<HarmonicMap> {
    match spec {
        MapSpec::Polynomial { h, g } => {
            let h = Series::new(h.iter().copied().map(pair).collect())?;
            let g = Series::new(g.iter().copied().map(pair).collect())?;
            Ok(HarmonicMap::polynomial(h, g))
        }
        MapSpec::Affine { alpha } => {
            let alpha = pair(*alpha);
            ensure_finite(alpha, "affine alpha")?;
            if alpha.norm() >= 1.0 {
                return Err(Error::InvalidMap(format!(
                    "affine map needs |alpha| < 1, got {}",
                    alpha.norm()
                )));
            }
            // conj(g(z)) = alpha * conj(z)
            Ok(HarmonicMap::polynomial(
                Series::identity(),
                Series::monomial(alpha.conj(), 1)?,
            ))
        }
        MapSpec::Shear { alpha, power } => {
            let alpha = pair(*alpha);
            ensure_finite(alpha, "shear alpha")?;
            let p = *power as usize;
            if p < 2 {
                return Err(Error::InvalidMap(format!(
                    "shear power must be >= 2, got {p}"
                )));
            }
            if p as f64 * alpha.norm() >= 1.0 {
                return Err(Error::InvalidMap(format!(
                    "shear needs power * |alpha| < 1, got {}",
                    p as f64 * alpha.norm()
                )));
            }
            Ok(HarmonicMap::polynomial(
                Series::identity(),
                Series::monomial(alpha, p)?,
            ))
        }
        MapSpec::Automorphism { a, rotation } => HarmonicMap::automorphism(pair(*a), *rotation),
    }
}

/// Sampled sense-preservation and self-map diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub sense_preserving: bool,
    /// Largest sampled `|omega|`.
    pub sup_abs_dilatation: f64,
    /// Largest sampled `|f|` on the unit circle.
    pub self_map_sup: f64,
    pub dilatation_samples: usize,
    pub boundary_samples: usize,
}

/// Samples `|omega|` on a polar grid over the closed disk (radii `k / radial`,
/// `k = 0..=radial`) and `|f|` at `angular` points of the unit circle.
pub fn validate(f: &HarmonicMap, angular: usize, radial: usize) -> Result<ValidityReport> {
    if angular < 16 || radial < 16 {
        return Err(Error::InvalidArgument(format!(
            "validate needs at least 16 samples per axis, got angular={angular}, radial={radial}"
        )));
    }
    let mut sup_w = 0.0f64;
    let mut dilatation_samples = 0;
    for i in 0..=radial {
        let r = i as f64 / radial as f64;
        let rays = if i == 0 { 1 } else { angular };
        for j in 0..rays {
            let z = Complex64::from_polar(r, TAU * j as f64 / angular as f64);
            sup_w = sup_w.max(f.dilatation(z)?.norm());
            dilatation_samples += 1;
        }
    }
    let mut self_map_sup = 0.0f64;
    for j in 0..angular {
        let z = Complex64::from_polar(1.0, TAU * j as f64 / angular as f64);
        self_map_sup = self_map_sup.max(f.eval(z)?.norm());
    }
    Ok(ValidityReport {
        sense_preserving: sup_w < 1.0 - SENSE_MARGIN,
        sup_abs_dilatation: sup_w,
        self_map_sup,
        dilatation_samples,
        boundary_samples: angular,
    })
}

pub(crate) fn is_sense_preserving_value(sup_abs_dilatation: f64) -> bool {
    sup_abs_dilatation < 1.0 - SENSE_MARGIN
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn affine(a: f64) -> HarmonicMap {
        construct_map(&MapSpec::Affine { alpha: [a, 0.0] }).unwrap()
    }

    fn shear(a: f64) -> HarmonicMap {
        construct_map(&MapSpec::Shear {
            alpha: [a, 0.0],
            power: 2,
        })
        .unwrap()
    }

    #[test]
    fn eval_series_examples() {
        let id = Series::identity();
        assert_eq!(id.eval(c(0.3, 0.4)).unwrap(), c(0.3, 0.4));
        let sq = Series::monomial(c(1.0, 0.0), 2).unwrap();
        assert_abs_diff_eq!((sq.eval(c(0.0, 1.0)).unwrap() - c(-1.0, 0.0)).norm(), 0.0);
        let s = Series::from_real(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.eval(c(0.5, 0.0)).unwrap(), c(2.75, 0.0));
    }

    #[test]
    fn eval_series_rejects_outside_disk() {
        let s = Series::identity();
        assert!(matches!(s.eval(c(1.0 + 1e-9, 0.0)), Err(Error::Domain(_))));
        assert!(s.eval(c(1.0 + 1e-13, 0.0)).is_ok());
        assert!(matches!(s.eval(c(f64::NAN, 0.0)), Err(Error::NonFinite(_))));
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(
            Series::identity().derivative().coefficients(),
            &[c(1.0, 0.0)]
        );
        let alpha = c(0.3, -0.2);
        let d = Series::monomial(alpha, 2).unwrap().derivative();
        assert_eq!(d.coefficients(), &[c(0.0, 0.0), alpha * 2.0]);
        let k = Series::from_real(&[5.0]).unwrap().derivative();
        assert_eq!(k.coefficients(), &[c(0.0, 0.0)]);
    }

    #[test]
    fn degree_cap_is_enforced() {
        assert!(Series::new(vec![c(1.0, 0.0); DEGREE_CAP + 1]).is_ok());
        assert!(matches!(
            Series::new(vec![c(1.0, 0.0); DEGREE_CAP + 2]),
            Err(Error::InvalidMap(_))
        ));
    }

    #[test]
    fn eval_map_examples() {
        assert_eq!(affine(0.5).eval(c(1.0, 0.0)).unwrap(), c(1.5, 0.0));
        let id = HarmonicMap::automorphism(c(0.0, 0.0), 0.0).unwrap();
        assert_eq!(id.eval(c(0.0, 0.7)).unwrap(), c(0.0, 0.7));
        let v = shear(0.3).eval(c(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!((v - c(-0.3, 1.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn affine_uses_conjugate_convention() {
        let alpha = c(0.3, 0.4);
        let f = construct_map(&MapSpec::Affine {
            alpha: [alpha.re, alpha.im],
        })
        .unwrap();
        let z = c(0.2, -0.5);
        let want = z + alpha * z.conj();
        assert_abs_diff_eq!((f.eval(z).unwrap() - want).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_examples() {
        assert_abs_diff_eq!(
            affine(0.5).jacobian(c(0.1, 0.2)).unwrap(),
            0.75,
            epsilon = 1e-15
        );
        let z = Complex64::from_polar(0.5, 1.1);
        assert_abs_diff_eq!(shear(0.3).jacobian(z).unwrap(), 0.91, epsilon = 1e-14);
        let m = HarmonicMap::automorphism(c(0.5, 0.0), 0.0).unwrap();
        assert_abs_diff_eq!(m.jacobian(c(0.0, 0.0)).unwrap(), 0.5625, epsilon = 1e-15);
    }

    #[test]
    fn dilatation_examples() {
        let w = shear(0.2).dilatation(c(0.5, 0.0)).unwrap();
        assert_abs_diff_eq!((w - c(0.2, 0.0)).norm(), 0.0, epsilon = 1e-15);
        let w = affine(0.4).dilatation(c(-0.3, 0.6)).unwrap();
        assert_abs_diff_eq!((w - c(0.4, 0.0)).norm(), 0.0, epsilon = 1e-15);
        let m = HarmonicMap::automorphism(c(0.1, 0.4), 2.0).unwrap();
        assert_eq!(m.dilatation(c(0.3, 0.3)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn dilatation_reports_critical_points() {
        // h(z) = z^2 has a critical point at the origin
        let f = HarmonicMap::polynomial(Series::monomial(c(1.0, 0.0), 2).unwrap(), Series::zero());
        assert!(matches!(
            f.dilatation(c(0.0, 0.0)),
            Err(Error::CriticalPoint(_))
        ));
        assert!(matches!(validate(&f, 16, 16), Err(Error::CriticalPoint(_))));
    }

    #[test]
    fn construct_map_rejections() {
        assert!(construct_map(&MapSpec::Affine { alpha: [1.0, 0.0] }).is_err());
        assert!(construct_map(&MapSpec::Shear {
            alpha: [0.5, 0.0],
            power: 2
        })
        .is_err());
        assert!(construct_map(&MapSpec::Shear {
            alpha: [0.1, 0.0],
            power: 1
        })
        .is_err());
        assert!(construct_map(&MapSpec::Automorphism {
            a: [0.6, 0.8],
            rotation: 0.0
        })
        .is_err());
    }

    #[test]
    fn shear_dilatation_sup() {
        let f = shear(0.3);
        let w = f.dilatation(c(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(w.norm(), 0.6, epsilon = 1e-15);
    }

    #[test]
    fn validate_examples() {
        let rep = validate(&affine(0.5), 64, 32).unwrap();
        assert!(rep.sense_preserving);
        assert_abs_diff_eq!(rep.sup_abs_dilatation, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.self_map_sup, 1.5, epsilon = 1e-15);

        let rep = validate(&shear(0.3), 64, 32).unwrap();
        assert_abs_diff_eq!(rep.sup_abs_dilatation, 0.6, epsilon = 1e-14);

        assert!(validate(&affine(0.5), 8, 32).is_err());
    }

    #[test]
    fn automorphism_pole_guard() {
        let a = c(1.0 - 1e-15, 0.0);
        let m = HarmonicMap::automorphism(a, 0.0).unwrap();
        assert!(matches!(m.eval(c(1.0, 0.0)), Err(Error::Pole(_))));
    }

    #[test]
    fn scaling_polynomial_maps() {
        let f = affine(0.5).scaled(1.0 / 1.5).unwrap();
        assert_abs_diff_eq!(f.eval(c(1.0, 0.0)).unwrap().re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            f.jacobian(c(0.0, 0.0)).unwrap(),
            0.75 / 2.25,
            epsilon = 1e-15
        );
        assert!(HarmonicMap::rotation(0.3).unwrap().scaled(0.5).is_err());
    }
}
