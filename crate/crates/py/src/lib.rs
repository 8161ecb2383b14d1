use harmarea::distortion::{self, RadialIntegrand};
use harmarea::search::{self, SearchOptions};
use harmarea::{construct_map, quadrature, Error, MapSpec, QuadOptions, RegionSpec};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NonConvergence { .. } | Error::Budget(_) | Error::Io(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Converts any serializable value into plain Python objects through JSON.
fn to_python<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn quad(tol: f64) -> QuadOptions {
    QuadOptions::with_tol(tol)
}

/// Harmonic map `f = h + conj(g)` of the unit disk.
#[pyclass(name = "HarmonicMap", frozen)]
struct PyHarmonicMap {
    inner: harmarea::HarmonicMap,
}

#[pymethods]
impl PyHarmonicMap {
    /// Builds a map from the JSON map format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: MapSpec =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self {
            inner: construct_map(&spec).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let spec = harmarea::presets::preset(name).map_err(py_err)?;
        Ok(Self {
            inner: construct_map(&spec).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn preset_names() -> Vec<&'static str> {
        harmarea::presets::PRESETS.iter().map(|p| p.name).collect()
    }

    /// `h = z + sum h_k z^k`, `g = sum g_k z^k` from coefficient lists starting at degree 0.
    #[staticmethod]
    fn polynomial(h: Vec<Complex64>, g: Vec<Complex64>) -> PyResult<Self> {
        let h = harmarea::Series::new(h).map_err(py_err)?;
        let g = harmarea::Series::new(g).map_err(py_err)?;
        Ok(Self {
            inner: harmarea::HarmonicMap::polynomial(h, g),
        })
    }

    #[staticmethod]
    fn affine(alpha: Complex64) -> PyResult<Self> {
        Self::from_spec(MapSpec::Affine {
            alpha: [alpha.re, alpha.im],
        })
    }

    #[staticmethod]
    fn shear(alpha: Complex64, power: u32) -> PyResult<Self> {
        Self::from_spec(MapSpec::Shear {
            alpha: [alpha.re, alpha.im],
            power,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (a, rotation=0.0))]
    fn automorphism(a: Complex64, rotation: f64) -> PyResult<Self> {
        Ok(Self {
            inner: harmarea::HarmonicMap::automorphism(a, rotation).map_err(py_err)?,
        })
    }

    fn scaled(&self, factor: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.scaled(factor).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_spec())
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __call__(&self, z: Complex64) -> PyResult<Complex64> {
        self.inner.eval(z).map_err(py_err)
    }

    fn jacobian(&self, z: Complex64) -> PyResult<f64> {
        self.inner.jacobian(z).map_err(py_err)
    }

    fn dilatation(&self, z: Complex64) -> PyResult<Complex64> {
        self.inner.dilatation(z).map_err(py_err)
    }

    fn __repr__(&self) -> PyResult<String> {
        Ok(format!("HarmonicMap({})", self.to_json()?))
    }
}

impl PyHarmonicMap {
    fn from_spec(spec: MapSpec) -> PyResult<Self> {
        Ok(Self {
            inner: construct_map(&spec).map_err(py_err)?,
        })
    }
}

/// Planar set: disk, star-shaped profile, or pixel grid.
#[pyclass(name = "Region", frozen)]
struct PyRegion {
    inner: harmarea::Region,
}

#[pymethods]
impl PyRegion {
    #[staticmethod]
    fn disk(r: f64) -> PyResult<Self> {
        Ok(Self {
            inner: harmarea::Region::disk(r).map_err(py_err)?,
        })
    }

    /// Star-shaped set with radii sampled at `theta_j = 2 pi j / len(profile)`.
    #[staticmethod]
    fn star(profile: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: harmarea::Region::star(profile).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: RegionSpec =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self {
            inner: spec.build().map_err(py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&RegionSpec::from(&self.inner))
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn rasterize(&self, n: usize) -> PyResult<Self> {
        let grid = harmarea::regions::rasterize(&self.inner, n).map_err(py_err)?;
        Ok(Self {
            inner: harmarea::Region::grid(grid),
        })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind()
    }

    fn measure(&self) -> f64 {
        self.inner.measure().value
    }

    fn contains(&self, z: Complex64) -> bool {
        self.inner.contains(z)
    }

    fn __repr__(&self) -> String {
        format!(
            "Region(kind={:?}, measure={})",
            self.inner.kind(),
            self.inner.measure().value
        )
    }
}

/// `(value, error_estimate, evals)` of `m(f(E)) = int_E J_f dA`.
#[pyfunction]
#[pyo3(signature = (f, region, tol=1e-9))]
fn image_area(f: &PyHarmonicMap, region: &PyRegion, tol: f64) -> PyResult<(f64, f64, usize)> {
    let q = distortion::image_area(&f.inner, &region.inner, &quad(tol)).map_err(py_err)?;
    Ok((q.value, q.error_estimate, q.evals))
}

/// Rasterized image area `(value, error_estimate, evals)`.
#[pyfunction]
#[pyo3(signature = (f, region, n=1024, seed=42))]
fn mc_image_area(
    f: &PyHarmonicMap,
    region: &PyRegion,
    n: usize,
    seed: u64,
) -> PyResult<(f64, f64, usize)> {
    let q = quadrature::mc_image_area(&f.inner, &region.inner, n, seed).map_err(py_err)?;
    Ok((q.value, q.error_estimate, q.evals))
}

#[pyfunction]
fn sp_ratio(f: &PyHarmonicMap, z: Complex64) -> PyResult<f64> {
    distortion::sp_ratio(&f.inner, z).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (f, r, tol=1e-9))]
fn disk_contraction<'py>(
    py: Python<'py>,
    f: &PyHarmonicMap,
    r: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    to_python(
        py,
        &distortion::disk_contraction_report(&f.inner, r, &quad(tol)).map_err(py_err)?,
    )
}

#[pyfunction]
#[pyo3(signature = (f, r, m=64, tol=1e-9))]
fn radial_bound_profile<'py>(
    py: Python<'py>,
    f: &PyHarmonicMap,
    r: f64,
    m: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let rows =
        distortion::radial_bound_profile(&f.inner, r, m, RadialIntegrand::Jacobian, &quad(tol))
            .map_err(py_err)?;
    to_python(py, &rows)
}

#[pyfunction]
#[pyo3(signature = (f, region, tol=1e-9))]
fn star_contraction<'py>(
    py: Python<'py>,
    f: &PyHarmonicMap,
    region: &PyRegion,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    to_python(
        py,
        &distortion::star_contraction_report(&f.inner, &region.inner, &quad(tol))
            .map_err(py_err)?,
    )
}

/// The `verify` suite as a list of report dicts.
#[pyfunction]
#[pyo3(signature = (f, radii=None, tol=1e-9))]
fn verify<'py>(
    py: Python<'py>,
    f: &PyHarmonicMap,
    radii: Option<Vec<f64>>,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let radii = radii.unwrap_or_else(|| (1..=9).map(|i| i as f64 / 10.0).collect());
    let rows = harmarea::cli::verify_reports(&f.inner, &radii, &quad(tol)).map_err(py_err)?;
    to_python(py, &rows)
}

#[pyfunction]
#[pyo3(signature = (f, domain, s, grid=512))]
fn worst_case_image_area(
    f: &PyHarmonicMap,
    domain: &PyRegion,
    s: f64,
    grid: usize,
) -> PyResult<f64> {
    distortion::worst_case_image_area(&f.inner, &domain.inner, s, grid).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (f, domain, grid=512))]
fn small_set_threshold(f: &PyHarmonicMap, domain: &PyRegion, grid: usize) -> PyResult<f64> {
    distortion::small_set_threshold(&f.inner, &domain.inner, grid).map_err(py_err)
}

fn family(text: &str) -> PyResult<search::FamilySpec> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Area-ratio sweep of a family (JSON), rows sorted by decreasing ratio.
#[pyfunction]
#[pyo3(signature = (family_json, region, per_axis=10, tol=1e-9))]
fn sweep<'py>(
    py: Python<'py>,
    family_json: &str,
    region: &PyRegion,
    per_axis: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let fam = family(family_json)?;
    let problem = search::area_ratio_problem(&fam, &region.inner, quad(tol)).map_err(py_err)?;
    to_python(py, &search::sweep(&problem, per_axis).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (family_json, region, iterations=500, seed=42, lattice=17, tol=1e-9))]
fn maximize_area_ratio<'py>(
    py: Python<'py>,
    family_json: &str,
    region: &PyRegion,
    iterations: usize,
    seed: u64,
    lattice: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = SearchOptions {
        lattice_per_axis: lattice,
        iterations,
        seed,
    };
    let res = search::maximize_area_ratio(&family(family_json)?, &region.inner, &opts, quad(tol))
        .map_err(py_err)?;
    to_python(py, &res)
}

#[pyfunction]
#[pyo3(signature = (f, domain, iterations=500, seed=42, lattice=17))]
fn maximize_sp_ratio<'py>(
    py: Python<'py>,
    f: &PyHarmonicMap,
    domain: &PyRegion,
    iterations: usize,
    seed: u64,
    lattice: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = SearchOptions {
        lattice_per_axis: lattice,
        iterations,
        seed,
    };
    let res = search::maximize_sp_ratio(&f.inner, &domain.inner, &opts).map_err(py_err)?;
    to_python(py, &res)
}

#[pymodule]
fn harmarea_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHarmonicMap>()?;
    m.add_class::<PyRegion>()?;
    m.add_function(wrap_pyfunction!(image_area, m)?)?;
    m.add_function(wrap_pyfunction!(mc_image_area, m)?)?;
    m.add_function(wrap_pyfunction!(sp_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(disk_contraction, m)?)?;
    m.add_function(wrap_pyfunction!(radial_bound_profile, m)?)?;
    m.add_function(wrap_pyfunction!(star_contraction, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(worst_case_image_area, m)?)?;
    m.add_function(wrap_pyfunction!(small_set_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(maximize_area_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(maximize_sp_ratio, m)?)?;
    Ok(())
}
