//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a binding check failed, 2 bad input,
//! 3 quadrature non-convergence, 4 budget exceeded.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytic::{construct_map, HarmonicMap, MapSpec};
use crate::distortion::{
    disk_contraction_report, hyperbolic_disk_integral, image_area, quantitative_bounds,
    radial_bound_profile, shear_disk_integral, star_contraction_report, RadialIntegrand,
};
use crate::error::{Error, Result};
use crate::presets::preset;
use crate::quadrature::{mc_image_area, QuadOptions};
use crate::regions::{Region, RegionSpec};
use crate::report::{fmt_float, reports_to_json, write_reports_csv, VerificationReport};
use crate::search::{
    area_ratio_problem, maximize, sp_argmax_point, sp_family_problem, sp_ratio_problem, sweep,
    write_sweep_csv, write_trace_csv, FamilySpec, SearchOptions, SearchResult,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "harmarea",
    version,
    about = "Area distortion of harmonic maps of the unit disk"
)]
pub struct Cli {
    /// Worker threads for parallel evaluation (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Image area of a region under a map.
    Area(CommonArgs),
    /// Run the inequality suite for a map over r = 0.1, ..., 0.9.
    Verify(CommonArgs),
    /// Area ratio over a parameter lattice of a map family.
    Sweep(CommonArgs),
    /// Lattice plus simplex search for extremal area or Schwarz-Pick ratios.
    Search(CommonArgs),
    /// Jacobian integral against a rasterized image area.
    Oracle(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    Area,
    Sp,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Map JSON file.
    #[arg(long, conflicts_with = "preset")]
    pub map: Option<PathBuf>,
    /// Built-in map name.
    #[arg(long)]
    pub preset: Option<String>,
    /// Region JSON file (default: disk of radius --r).
    #[arg(long)]
    pub region: Option<PathBuf>,
    /// Family JSON file (sweep, search).
    #[arg(long)]
    pub family: Option<PathBuf>,
    /// Disk radius; for verify, restricts the run to this single radius.
    #[arg(long)]
    pub r: Option<f64>,
    /// Quadrature tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Raster resolution (oracle), or lattice points per axis (sweep, search).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory; reports go to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Search objective.
    #[arg(long, value_enum, default_value_t = Objective::Area)]
    pub objective: Objective,
    /// Simplex iteration budget for search.
    #[arg(long, default_value_t = 500)]
    pub iterations: usize,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        Error::Budget(_) => EXIT_BUDGET,
        _ => EXIT_INPUT,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {what} file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{what} file {}: {e}", path.display())))
}

impl CommonArgs {
    fn quad(&self) -> QuadOptions {
        QuadOptions::with_tol(self.tol)
    }

    fn map(&self) -> Result<HarmonicMap> {
        let spec: MapSpec = match (&self.map, &self.preset) {
            (Some(path), _) => read_json(path, "map")?,
            (None, Some(name)) => preset(name)?,
            (None, None) => {
                return Err(Error::Parse("one of --map or --preset is required".into()))
            }
        };
        construct_map(&spec)
    }

    fn region(&self) -> Result<Region> {
        match &self.region {
            Some(path) => read_json::<RegionSpec>(path, "region")?.build(),
            None => Region::disk(self.r.unwrap_or(0.5)),
        }
    }

    fn family(&self) -> Result<FamilySpec> {
        match &self.family {
            Some(path) => read_json(path, "family"),
            None => Err(Error::Parse("--family is required".into())),
        }
    }

    fn search_options(&self) -> SearchOptions {
        SearchOptions {
            lattice_per_axis: self.n.unwrap_or(SearchOptions::default().lattice_per_axis),
            iterations: self.iterations,
            seed: self.seed,
        }
    }

    fn emit(&self, stem: &str, csv: &[u8], json: &str, stdout: &mut dyn Write) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(e.to_string());
        let (want_csv, want_json) = match self.format {
            Format::Csv => (true, false),
            Format::Json => (false, true),
            Format::Both => (true, true),
        };
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(io)?;
                if want_csv {
                    fs::write(dir.join(format!("{stem}.csv")), csv).map_err(io)?;
                }
                if want_json {
                    fs::write(dir.join(format!("{stem}.json")), json).map_err(io)?;
                }
            }
            None => {
                if want_csv {
                    stdout.write_all(csv).map_err(io)?;
                }
                if want_json {
                    writeln!(stdout, "{json}").map_err(io)?;
                }
            }
        }
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Io(format!("json output: {e}")))
}

/// Parses `args` and runs the chosen subcommand. Human-readable summaries go to
/// `stderr`; machine-readable reports go to `--out` or `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Area(a) => cmd_area(a, stdout, stderr),
        Command::Verify(a) => cmd_verify(a, stdout, stderr),
        Command::Sweep(a) => cmd_sweep(a, stdout, stderr),
        Command::Search(a) => cmd_search(a, stdout, stderr),
        Command::Oracle(a) => cmd_oracle(a, stdout, stderr),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[derive(Serialize)]
struct AreaRecord {
    region: &'static str,
    measure: f64,
    measure_exact: bool,
    image_area: f64,
    ratio: f64,
    error_estimate: f64,
    evals: usize,
}

fn cmd_area(a: &CommonArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let f = a.map()?;
    let region = a.region()?;
    let measure = region.measure();
    let area = image_area(&f, &region, &a.quad())?;
    let rec = AreaRecord {
        region: region.kind(),
        measure: measure.value,
        measure_exact: measure.exact,
        image_area: area.value,
        ratio: area.value / measure.value,
        error_estimate: area.error_estimate,
        evals: area.evals,
    };
    let _ = writeln!(
        stderr,
        "m(E) = {}\nm(f(E)) = {}\nratio = {}\nerror estimate = {}",
        fmt_float(rec.measure),
        fmt_float(rec.image_area),
        fmt_float(rec.ratio),
        fmt_float(rec.error_estimate)
    );
    let mut csv = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut csv);
        let io = |e: csv::Error| Error::Io(format!("csv output: {e}"));
        w.write_record([
            "region",
            "measure",
            "measure_exact",
            "image_area",
            "ratio",
            "error_estimate",
            "evals",
        ])
        .map_err(io)?;
        w.write_record([
            rec.region.to_string(),
            fmt_float(rec.measure),
            rec.measure_exact.to_string(),
            fmt_float(rec.image_area),
            fmt_float(rec.ratio),
            fmt_float(rec.error_estimate),
            rec.evals.to_string(),
        ])
        .map_err(io)?;
        w.flush().map_err(|e| Error::Io(e.to_string()))?;
    }
    a.emit("area", &csv, &to_json(&rec)?, stdout)?;
    Ok(EXIT_OK)
}

/// Coefficient `alpha` when `f` is exactly `z + alpha conj(z)^2` with real `alpha`.
fn pure_shear_alpha(f: &HarmonicMap) -> Option<f64> {
    match f.to_spec() {
        MapSpec::Polynomial { h, g } => {
            let h_is_z = h.len() == 2 && h[0] == [0.0, 0.0] && h[1] == [1.0, 0.0];
            let g_is_sq =
                g.len() == 3 && g[0] == [0.0, 0.0] && g[1] == [0.0, 0.0] && g[2][1] == 0.0;
            (h_is_z && g_is_sq).then(|| g[2][0])
        }
        _ => None,
    }
}

/// The cos 3 theta star shape rescaled so its outer radius is `r`.
pub fn verify_star_region(r: f64) -> Result<Region> {
    Region::star_from_fn(256, |t| r * (0.5 + 0.2 * (3.0 * t).cos()) / 0.7)
}

pub fn verify_reports(
    f: &HarmonicMap,
    radii: &[f64],
    opts: &QuadOptions,
) -> Result<Vec<VerificationReport>> {
    let shear_alpha = pure_shear_alpha(f);
    let origin_warnings = crate::distortion::Hypotheses::check(f)?.origin_warnings();
    let mut rows = Vec::new();
    for &r in radii {
        let chain = disk_contraction_report(f, r, opts)?;
        let area_vs_disk = VerificationReport::at_most(
            format!("disk_area r={r}"),
            chain.image_area.value,
            chain.reference_area,
            crate::report::report_tolerance(&[chain.image_area.error_estimate]),
        )
        .with_evals(chain.image_area.evals)
        .with_warnings(&chain.warnings)
        .with_warnings(&origin_warnings);
        rows.push(area_vs_disk);
        rows.push(chain.energy_link);
        rows.push(chain.reference_link);

        let radial = radial_bound_profile(f, r, 16, RadialIntegrand::Jacobian, opts)?;
        // keep the tightest direction
        if let Some(worst) = radial
            .into_iter()
            .min_by(|x, y| x.margin.total_cmp(&y.margin))
        {
            rows.push(worst);
        }

        let mut star = star_contraction_report(f, &verify_star_region(r)?, opts)?;
        star.name = format!("star_contraction r={r}");
        rows.push(star);

        match quantitative_bounds(f, &Region::disk(r)?, opts) {
            Ok((mut lower, mut upper)) => {
                lower.name = format!("{} r={r}", lower.name);
                upper.name = format!("{} r={r}", upper.name);
                rows.push(lower);
                rows.push(upper);
            }
            Err(Error::InvalidMap(msg)) => rows.push(
                VerificationReport::at_most(format!("quantitative r={r}"), f64::NAN, f64::NAN, 0.0)
                    .with_warnings(&[msg]),
            ),
            Err(e) => return Err(e),
        }

        let hyperbolic = hyperbolic_disk_integral(r, opts)?;
        rows.push(hyperbolic.report("hyperbolic_reference"));
        rows.push(hyperbolic.claim_report("hyperbolic_reference"));
        if let Some(alpha) = shear_alpha {
            let shear = shear_disk_integral(alpha, r, opts)?;
            rows.push(shear.report("shear_reference"));
            rows.push(shear.claim_report("shear_reference"));
        }
    }
    Ok(rows)
}

fn cmd_verify(a: &CommonArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let f = a.map()?;
    let radii: Vec<f64> = match a.r {
        Some(r) => vec![r],
        None => (1..=9).map(|i| i as f64 / 10.0).collect(),
    };
    let rows = verify_reports(&f, &radii, &a.quad())?;
    let failed: Vec<&VerificationReport> =
        rows.iter().filter(|r| r.is_binding() && !r.pass).collect();
    for r in &failed {
        let _ = writeln!(stderr, "FAIL {}: margin {}", r.name, fmt_float(r.margin));
    }
    let unmet = rows.iter().filter(|r| !r.hypothesis_met).count();
    let _ = writeln!(
        stderr,
        "{} rows, {} failed, {} with unmet hypotheses",
        rows.len(),
        failed.len(),
        unmet
    );
    let mut csv = Vec::new();
    write_reports_csv(&rows, &mut csv)?;
    a.emit("verify", &csv, &reports_to_json(&rows)?, stdout)?;
    Ok(if failed.is_empty() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn cmd_sweep(a: &CommonArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let family = a.family()?;
    let region = a.region()?;
    let problem = area_ratio_problem(&family, &region, a.quad())?;
    let rows = sweep(&problem, a.n.unwrap_or(10))?;
    if let Some(best) = rows.first() {
        let params: Vec<String> = problem
            .axes
            .iter()
            .zip(&best.params)
            .map(|(ax, v)| format!("{}={}", ax.name, fmt_float(*v)))
            .collect();
        let _ = writeln!(
            stderr,
            "best: {} ratio={}",
            params.join(" "),
            fmt_float(best.eval.value)
        );
    }
    let mut csv = Vec::new();
    write_sweep_csv(&problem.axes, &rows, &mut csv)?;
    a.emit("sweep", &csv, &to_json(&rows)?, stdout)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SpSummary<'a> {
    #[serde(flatten)]
    result: &'a SearchResult,
    argmax: [f64; 2],
    exceeds_one: bool,
}

fn cmd_search(a: &CommonArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let region = a.region()?;
    let opts = a.search_options();
    let (result, json) = if a.family.is_some() {
        let family = a.family()?;
        match a.objective {
            Objective::Area => {
                let res = maximize(&area_ratio_problem(&family, &region, a.quad())?, &opts)?;
                let json = to_json(&res)?;
                (res, json)
            }
            Objective::Sp => {
                let res = maximize(&sp_family_problem(&family, &region)?, &opts)?;
                let json = sp_json(&region, &res, stderr)?;
                (res, json)
            }
        }
    } else {
        let f = a.map()?;
        let res = maximize(&sp_ratio_problem(&f, &region)?, &opts)?;
        let json = sp_json(&region, &res, stderr)?;
        (res, json)
    };
    let params: Vec<String> = result
        .axis_names
        .iter()
        .zip(&result.best_params)
        .map(|(n, v)| format!("{n}={}", fmt_float(*v)))
        .collect();
    let _ = writeln!(
        stderr,
        "best: {} value={} evaluations={} converged={}",
        params.join(" "),
        fmt_float(result.best_value),
        result.evaluations,
        result.converged
    );
    let mut csv = Vec::new();
    write_trace_csv(&result, &mut csv)?;
    a.emit("search", &csv, &json, stdout)?;
    Ok(EXIT_OK)
}

fn sp_json(region: &Region, res: &SearchResult, stderr: &mut dyn Write) -> Result<String> {
    let z = sp_argmax_point(region, res);
    // the report tolerance floor is the only error scale for pointwise values
    let exceeds_one = res.best_value > 1.0 + 10.0 * crate::report::TOLERANCE_FLOOR;
    let _ = writeln!(
        stderr,
        "argmax z = {} + {}i; exceeds 1: {exceeds_one}",
        fmt_float(z.re),
        fmt_float(z.im)
    );
    to_json(&SpSummary {
        result: res,
        argmax: [z.re, z.im],
        exceeds_one,
    })
}

#[derive(Serialize)]
struct OracleRecord {
    image_area: f64,
    image_area_error: f64,
    raster_area: f64,
    raster_error: f64,
    relative_gap: f64,
    threshold: f64,
    n: usize,
    seed: u64,
    pass: bool,
}

fn cmd_oracle(a: &CommonArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let f = a.map()?;
    let region = a.region()?;
    let n = a.n.unwrap_or(1024);
    let quad = image_area(&f, &region, &a.quad())?;
    let mc = mc_image_area(&f, &region, n, a.seed)?;
    let gap = (mc.value - quad.value).abs() / quad.value.abs();
    let threshold = 0.02f64.max(5.0 * (quad.error_estimate + mc.error_estimate) / quad.value.abs());
    let rec = OracleRecord {
        image_area: quad.value,
        image_area_error: quad.error_estimate,
        raster_area: mc.value,
        raster_error: mc.error_estimate,
        relative_gap: gap,
        threshold,
        n,
        seed: a.seed,
        pass: gap <= threshold,
    };
    let _ = writeln!(
        stderr,
        "jacobian integral = {}\nraster image area = {}\nrelative gap = {} (threshold {})",
        fmt_float(rec.image_area),
        fmt_float(rec.raster_area),
        fmt_float(rec.relative_gap),
        fmt_float(rec.threshold)
    );
    let mut csv = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut csv);
        let io = |e: csv::Error| Error::Io(format!("csv output: {e}"));
        w.write_record([
            "image_area",
            "image_area_error",
            "raster_area",
            "raster_error",
            "relative_gap",
            "threshold",
            "n",
            "seed",
            "pass",
        ])
        .map_err(io)?;
        w.write_record([
            fmt_float(rec.image_area),
            fmt_float(rec.image_area_error),
            fmt_float(rec.raster_area),
            fmt_float(rec.raster_error),
            fmt_float(rec.relative_gap),
            fmt_float(rec.threshold),
            rec.n.to_string(),
            rec.seed.to_string(),
            rec.pass.to_string(),
        ])
        .map_err(io)?;
        w.flush().map_err(|e| Error::Io(e.to_string()))?;
    }
    a.emit("oracle", &csv, &to_json(&rec)?, stdout)?;
    Ok(if rec.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}
