//! Parameter sweeps and derivative-free extremal search over map families.
//!
//! A search seeds from a row-major parameter lattice and then refines the best
//! lattice point with a Nelder-Mead simplex (reflection 1.0, contraction 0.5,
//! shrink 0.5, no expansion). Box bounds are enforced by projection, periodic
//! axes wrap, and points violating the family constraints score -1.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{construct_map, validate, HarmonicMap, MapSpec, Series};
use crate::distortion::{boundary_sup, image_area, sp_ratio, BOUNDARY_SAMPLES};
use crate::error::{Error, Result};
use crate::quadrature::QuadOptions;
use crate::regions::{radial_profile, Region};
use crate::report::fmt_float;

pub const MAX_SWEEP_POINTS: usize = 1_000_000;
pub const MAX_ITERATIONS: usize = 1_000_000;
pub const INFEASIBLE: f64 = -1.0;
const SIMPLEX_DIAMETER: f64 = 1e-6;
const SELF_MAP_SLACK: f64 = 1e-12;
/// Relative gap below which two objective values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

fn improves(candidate: f64, incumbent: f64) -> bool {
    candidate > incumbent + TIE_TOLERANCE * incumbent.abs().max(1.0)
}

/// Family of maps, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// `z + alpha conj(z)` with real `alpha`.
    Affine { alpha: [f64; 2] },
    /// `z + alpha conj(z)^p` with real `alpha`, `p` drawn from `powers`.
    Shear { alpha: [f64; 2], powers: Vec<u32> },
    /// `e^{i rotation} (z - a) / (1 - a z)` with real `a >= 0`.
    Automorphism {
        modulus: [f64; 2],
        rotation: [f64; 2],
    },
    /// `h = z + sum_{k=2}^d a_k z^k`, `g = sum_{k=1}^d b_k z^k`, real coefficients in `[-bound, bound]`.
    RawBall { degree: usize, bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    #[serde(flatten)]
    pub kind: FamilyKind,
    #[serde(default)]
    pub require_self_map: bool,
    #[serde(default)]
    pub require_sense_preserving: bool,
    /// Divide polynomial members by their sampled boundary sup when it exceeds 1.
    #[serde(default)]
    pub normalize: bool,
}

/// One search coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
    /// Discrete axes take only these values and are held fixed by the simplex.
    pub values: Option<Vec<f64>>,
}

impl Axis {
    pub fn continuous(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            lo,
            hi,
            periodic: false,
            values: None,
        }
    }

    pub fn periodic(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self {
            periodic: true,
            ..Self::continuous(name, lo, hi)
        }
    }

    fn lattice(&self, n: usize) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        if n == 1 || self.hi == self.lo {
            return vec![self.lo];
        }
        // periodic axes exclude the duplicate endpoint
        let div = if self.periodic { n } else { n - 1 };
        (0..n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / div as f64)
            .collect()
    }

    fn spacing(&self, n: usize) -> f64 {
        let div = if self.periodic {
            n
        } else {
            n.saturating_sub(1).max(1)
        };
        (self.hi - self.lo) / div as f64
    }

    fn project(&self, x: f64) -> f64 {
        if self.periodic {
            self.lo + (x - self.lo).rem_euclid(self.hi - self.lo)
        } else {
            x.clamp(self.lo, self.hi)
        }
    }

    fn is_refinable(&self) -> bool {
        self.values.is_none() && self.hi > self.lo
    }
}

/// A family member together with its sampled hypothesis flags.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub map: HarmonicMap,
    pub self_map: bool,
    pub sense_preserving: bool,
}

fn check_range(name: &str, r: [f64; 2]) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
        return Err(Error::InvalidArgument(format!(
            "{name} range must be nonempty, got {r:?}"
        )));
    }
    Ok(())
}

impl FamilySpec {
    pub fn new(kind: FamilyKind) -> Self {
        Self {
            kind,
            require_self_map: false,
            require_sense_preserving: false,
            normalize: false,
        }
    }

    pub fn with_self_map(mut self) -> Self {
        self.require_self_map = true;
        self
    }

    pub fn with_sense_preserving(mut self) -> Self {
        self.require_sense_preserving = true;
        self
    }

    pub fn normalized(mut self) -> Self {
        self.normalize = true;
        self
    }

    pub fn axes(&self) -> Result<Vec<Axis>> {
        match &self.kind {
            FamilyKind::Affine { alpha } => {
                check_range("alpha", *alpha)?;
                Ok(vec![Axis::continuous("alpha", alpha[0], alpha[1])])
            }
            FamilyKind::Shear { alpha, powers } => {
                check_range("alpha", *alpha)?;
                if powers.is_empty() || powers.iter().any(|&p| p < 2) {
                    return Err(Error::InvalidArgument(format!(
                        "shear powers must be a nonempty list of integers >= 2, got {powers:?}"
                    )));
                }
                let values: Vec<f64> = powers.iter().map(|&p| p as f64).collect();
                let (lo, hi) = values
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                        (a.min(v), b.max(v))
                    });
                Ok(vec![
                    Axis::continuous("alpha", alpha[0], alpha[1]),
                    Axis {
                        values: Some(values),
                        ..Axis::continuous("power", lo, hi)
                    },
                ])
            }
            FamilyKind::Automorphism { modulus, rotation } => {
                check_range("modulus", *modulus)?;
                check_range("rotation", *rotation)?;
                if modulus[0] < 0.0 || modulus[1] >= 1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "automorphism modulus range must lie in [0, 1), got {modulus:?}"
                    )));
                }
                let rot = if rotation[1] - rotation[0] >= TAU {
                    Axis::periodic("rotation", rotation[0], rotation[0] + TAU)
                } else {
                    Axis::continuous("rotation", rotation[0], rotation[1])
                };
                Ok(vec![
                    Axis::continuous("modulus", modulus[0], modulus[1]),
                    rot,
                ])
            }
            FamilyKind::RawBall { degree, bound } => {
                if *degree < 1 || *degree > crate::analytic::DEGREE_CAP {
                    return Err(Error::InvalidArgument(format!(
                        "raw ball degree must lie in 1..={}, got {degree}",
                        crate::analytic::DEGREE_CAP
                    )));
                }
                if !(bound.is_finite() && *bound >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "raw ball bound must be finite and >= 0, got {bound}"
                    )));
                }
                let mut axes: Vec<Axis> = (2..=*degree)
                    .map(|k| Axis::continuous(format!("a{k}"), -bound, *bound))
                    .collect();
                axes.extend(
                    (1..=*degree).map(|k| Axis::continuous(format!("b{k}"), -bound, *bound)),
                );
                Ok(axes)
            }
        }
    }

    /// Builds the member at `params`; `Err` when the parameters leave the
    /// family's construction constraints.
    pub fn member(&self, params: &[f64]) -> Result<FamilyMember> {
        let map = match &self.kind {
            FamilyKind::Affine { .. } => construct_map(&MapSpec::Affine {
                alpha: [params[0], 0.0],
            })?,
            FamilyKind::Shear { .. } => construct_map(&MapSpec::Shear {
                alpha: [params[0], 0.0],
                power: params[1].round() as u32,
            })?,
            FamilyKind::Automorphism { .. } => {
                HarmonicMap::automorphism(Complex64::new(params[0], 0.0), params[1])?
            }
            FamilyKind::RawBall { degree, .. } => {
                let d = *degree;
                let mut h = vec![0.0, 1.0];
                h.extend_from_slice(&params[..d - 1]);
                let mut g = vec![0.0];
                g.extend_from_slice(&params[d - 1..]);
                HarmonicMap::polynomial(Series::from_real(&h)?, Series::from_real(&g)?)
            }
        };
        let mut sup = boundary_sup(&map, BOUNDARY_SAMPLES)?;
        let map = if self.normalize && sup > 1.0 && !map.is_automorphism() {
            let scaled = map.scaled(1.0 / sup)?;
            sup = boundary_sup(&scaled, BOUNDARY_SAMPLES)?;
            scaled
        } else {
            map
        };
        let sense_preserving = match validate(&map, 64, 16) {
            Ok(rep) => rep.sense_preserving,
            Err(Error::CriticalPoint(_)) => false,
            Err(e) => return Err(e),
        };
        Ok(FamilyMember {
            map,
            self_map: sup <= 1.0 + SELF_MAP_SLACK,
            sense_preserving,
        })
    }

    fn satisfies(&self, m: &FamilyMember) -> bool {
        (!self.require_self_map || m.self_map)
            && (!self.require_sense_preserving || m.sense_preserving)
    }
}

/// Objective value at one parameter vector. `value` is the raw objective
/// (`NaN` when no map exists there); `feasible` folds in all constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: f64,
    pub feasible: bool,
    pub self_map: bool,
    pub sense_preserving: bool,
}

impl Evaluation {
    fn invalid() -> Self {
        Self {
            value: f64::NAN,
            feasible: false,
            self_map: false,
            sense_preserving: false,
        }
    }

    /// Score used by the optimizer.
    pub fn score(&self) -> f64 {
        if self.feasible && self.value.is_finite() {
            self.value
        } else {
            INFEASIBLE
        }
    }
}

type Objective<'a> = Box<dyn Fn(&[f64]) -> Result<Evaluation> + Sync + 'a>;

/// A box-constrained maximization problem.
pub struct Problem<'a> {
    pub axes: Vec<Axis>,
    objective: Objective<'a>,
}

impl<'a> Problem<'a> {
    pub fn new(
        axes: Vec<Axis>,
        objective: impl Fn(&[f64]) -> Result<Evaluation> + Sync + 'a,
    ) -> Self {
        Self {
            axes,
            objective: Box::new(objective),
        }
    }

    pub fn evaluate(&self, params: &[f64]) -> Result<Evaluation> {
        (self.objective)(params)
    }

    fn project(&self, params: &mut [f64]) {
        for (x, axis) in params.iter_mut().zip(&self.axes) {
            *x = axis.project(*x);
        }
    }

    /// Row-major lattice (first axis slowest).
    pub fn lattice(&self, per_axis: usize) -> Result<Vec<Vec<f64>>> {
        if per_axis == 0 {
            return Err(Error::InvalidArgument(
                "lattice needs at least one point per axis".into(),
            ));
        }
        let grids: Vec<Vec<f64>> = self.axes.iter().map(|a| a.lattice(per_axis)).collect();
        let total = grids
            .iter()
            .try_fold(1usize, |acc, g| acc.checked_mul(g.len()))
            .filter(|&t| t <= MAX_SWEEP_POINTS)
            .ok_or_else(|| {
                Error::Budget(format!(
                    "lattice with {per_axis} points per axis over {} axes exceeds {MAX_SWEEP_POINTS} points",
                    self.axes.len()
                ))
            })?;
        let mut points = Vec::with_capacity(total);
        for mut k in 0..total {
            let mut p = vec![0.0; grids.len()];
            for (d, g) in grids.iter().enumerate().rev() {
                p[d] = g[k % g.len()];
                k /= g.len();
            }
            points.push(p);
        }
        Ok(points)
    }
}

/// `m(f(E)) / m(E)` over a family.
pub fn area_ratio_problem<'a>(
    family: &'a FamilySpec,
    region: &'a Region,
    opts: QuadOptions,
) -> Result<Problem<'a>> {
    let measure = region.measure().value;
    Ok(Problem::new(family.axes()?, move |p| {
        let member = match family.member(p) {
            Ok(m) => m,
            Err(Error::InvalidMap(_)) => return Ok(Evaluation::invalid()),
            Err(e) => return Err(e),
        };
        let area = image_area(&member.map, region, &opts)?;
        Ok(Evaluation {
            value: area.value / measure,
            feasible: family.satisfies(&member),
            self_map: member.self_map,
            sense_preserving: member.sense_preserving,
        })
    }))
}

fn check_sp_domain(domain: &Region) -> Result<()> {
    if matches!(domain, Region::Grid(_)) {
        return Err(Error::UnsupportedRegion("grid"));
    }
    if domain.max_radius() > 1.0 - 1e-3 {
        return Err(Error::InvalidRegion(format!(
            "Schwarz-Pick search domain must have radius <= 1 - 1e-3, got {}",
            domain.max_radius()
        )));
    }
    Ok(())
}

/// `z = t R(theta) e^{i theta}` for `t in [0, 1]`.
fn domain_point(domain: &Region, t: f64, theta: f64) -> Complex64 {
    let radius = radial_profile(domain, theta).unwrap_or(0.0);
    Complex64::from_polar(t * radius, theta)
}

fn point_axes() -> [Axis; 2] {
    [
        Axis::continuous("t", 0.0, 1.0),
        Axis::periodic("theta", 0.0, TAU),
    ]
}

fn sp_evaluation(
    f: &HarmonicMap,
    z: Complex64,
    self_map: bool,
    sense: bool,
    ok: bool,
) -> Result<Evaluation> {
    let value = sp_ratio(f, z)?;
    Ok(Evaluation {
        value,
        // |f(z)| >= 1 leaves the inequality's scope
        feasible: ok && value.is_finite(),
        self_map,
        sense_preserving: sense,
    })
}

/// Schwarz-Pick ratio of one map over points `(t, theta)` of a domain.
pub fn sp_ratio_problem<'a>(f: &'a HarmonicMap, domain: &'a Region) -> Result<Problem<'a>> {
    check_sp_domain(domain)?;
    Ok(Problem::new(point_axes().to_vec(), move |p| {
        sp_evaluation(f, domain_point(domain, p[0], p[1]), true, true, true)
    }))
}

/// Schwarz-Pick ratio over family parameters followed by `(t, theta)`.
pub fn sp_family_problem<'a>(family: &'a FamilySpec, domain: &'a Region) -> Result<Problem<'a>> {
    check_sp_domain(domain)?;
    let mut axes = family.axes()?;
    let split = axes.len();
    axes.extend(point_axes());
    Ok(Problem::new(axes, move |p| {
        let member = match family.member(&p[..split]) {
            Ok(m) => m,
            Err(Error::InvalidMap(_)) => return Ok(Evaluation::invalid()),
            Err(e) => return Err(e),
        };
        let z = domain_point(domain, p[split], p[split + 1]);
        sp_evaluation(
            &member.map,
            z,
            member.self_map,
            member.sense_preserving,
            family.satisfies(&member),
        )
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub params: Vec<f64>,
    pub eval: Evaluation,
}

/// Evaluates the lattice and returns rows sorted by decreasing objective
/// (ties keep lattice order; rows without a value sort last).
pub fn sweep(problem: &Problem<'_>, per_axis: usize) -> Result<Vec<SweepRow>> {
    let points = problem.lattice(per_axis)?;
    let evals = points
        .par_iter()
        .map(|p| problem.evaluate(p))
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<SweepRow> = points
        .into_iter()
        .zip(evals)
        .map(|(params, eval)| SweepRow { params, eval })
        .collect();
    rows.sort_by(|a, b| {
        let key = |r: &SweepRow| {
            if r.eval.value.is_nan() {
                f64::NEG_INFINITY
            } else {
                r.eval.value
            }
        };
        key(b).total_cmp(&key(a))
    });
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    pub lattice_per_axis: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            lattice_per_axis: 17,
            iterations: 500,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub params: Vec<f64>,
    pub value: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub axis_names: Vec<String>,
    pub best_params: Vec<f64>,
    pub best_value: f64,
    pub lattice_best_value: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
    pub seed: u64,
}

struct Vertex {
    x: Vec<f64>,
    score: f64,
    feasible: bool,
}

/// Lattice seeding followed by simplex refinement of the continuous axes.
pub fn maximize(problem: &Problem<'_>, opts: &SearchOptions) -> Result<SearchResult> {
    if opts.iterations == 0 || opts.iterations > MAX_ITERATIONS {
        return Err(Error::Budget(format!(
            "iterations must lie in 1..={MAX_ITERATIONS}, got {}",
            opts.iterations
        )));
    }
    let points = problem.lattice(opts.lattice_per_axis)?;
    let evals = points
        .par_iter()
        .map(|p| problem.evaluate(p))
        .collect::<Result<Vec<_>>>()?;
    let mut evaluations = points.len();
    let mut seed_idx = 0;
    for (k, e) in evals.iter().enumerate() {
        if improves(e.score(), evals[seed_idx].score()) {
            seed_idx = k;
        }
    }
    let lattice_best_value = evals[seed_idx].score();
    let mut trace = vec![TracePoint {
        iteration: 0,
        params: points[seed_idx].clone(),
        value: lattice_best_value,
        feasible: evals[seed_idx].feasible,
    }];

    let free: Vec<usize> = (0..problem.axes.len())
        .filter(|&d| problem.axes[d].is_refinable())
        .collect();
    let mut best = Vertex {
        x: points[seed_idx].clone(),
        score: lattice_best_value,
        feasible: evals[seed_idx].feasible,
    };
    if free.is_empty() {
        return Ok(finish(
            problem,
            best,
            lattice_best_value,
            evaluations,
            0,
            true,
            trace,
            opts.seed,
        ));
    }

    let eval_at = |x: &mut Vec<f64>| -> Result<(f64, bool)> {
        problem.project(x);
        let e = problem.evaluate(x)?;
        Ok((e.score(), e.feasible))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut simplex = vec![best_clone(&best)];
    for &d in &free {
        let axis = &problem.axes[d];
        let step = axis.spacing(opts.lattice_per_axis) * rng.random_range(0.5..1.0);
        let mut x = best.x.clone();
        x[d] = if axis.periodic || x[d] + step <= axis.hi {
            x[d] + step
        } else {
            x[d] - step
        };
        let (score, feasible) = eval_at(&mut x)?;
        evaluations += 1;
        trace.push(TracePoint {
            iteration: 0,
            params: x.clone(),
            value: score,
            feasible,
        });
        simplex.push(Vertex { x, score, feasible });
    }

    let mut converged = false;
    let mut iteration = 0;
    let record = |trace: &mut Vec<TracePoint>, it: usize, v: &Vertex| {
        trace.push(TracePoint {
            iteration: it,
            params: v.x.clone(),
            value: v.score,
            feasible: v.feasible,
        });
    };
    while iteration < opts.iterations {
        // stable sort keeps earlier vertices first among ties
        simplex.sort_by(|a, b| b.score.total_cmp(&a.score));
        if improves(simplex[0].score, best.score) {
            best = best_clone(&simplex[0]);
        }
        if diameter(&simplex, &free) < SIMPLEX_DIAMETER {
            converged = true;
            break;
        }
        iteration += 1;
        let n = simplex.len();
        let centroid: Vec<f64> = (0..best.x.len())
            .map(|d| simplex[..n - 1].iter().map(|v| v.x[d]).sum::<f64>() / (n - 1) as f64)
            .collect();
        let worst = &simplex[n - 1];
        let along = |from: &[f64], coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, x)| c + coef * (x - c))
                .collect()
        };

        let mut reflected = along(&worst.x, -1.0);
        let (rs, rf) = eval_at(&mut reflected)?;
        evaluations += 1;
        if rs > simplex[n - 2].score {
            let v = Vertex {
                x: reflected,
                score: rs,
                feasible: rf,
            };
            record(&mut trace, iteration, &v);
            simplex[n - 1] = v;
            continue;
        }
        let (mut contracted, base) = if rs > worst.score {
            (along(&reflected, 0.5), rs)
        } else {
            (along(&worst.x, 0.5), worst.score)
        };
        let (cs, cf) = eval_at(&mut contracted)?;
        evaluations += 1;
        if cs > base {
            let v = Vertex {
                x: contracted,
                score: cs,
                feasible: cf,
            };
            record(&mut trace, iteration, &v);
            simplex[n - 1] = v;
            continue;
        }
        let anchor = simplex[0].x.clone();
        for v in simplex.iter_mut().skip(1) {
            let mut x: Vec<f64> = anchor
                .iter()
                .zip(&v.x)
                .map(|(a, x)| a + 0.5 * (x - a))
                .collect();
            let (s, f) = eval_at(&mut x)?;
            evaluations += 1;
            *v = Vertex {
                x,
                score: s,
                feasible: f,
            };
            record(&mut trace, iteration, v);
        }
    }
    simplex.sort_by(|a, b| b.score.total_cmp(&a.score));
    if improves(simplex[0].score, best.score) {
        best = best_clone(&simplex[0]);
    }
    Ok(finish(
        problem,
        best,
        lattice_best_value,
        evaluations,
        iteration,
        converged,
        trace,
        opts.seed,
    ))
}

fn best_clone(v: &Vertex) -> Vertex {
    Vertex {
        x: v.x.clone(),
        score: v.score,
        feasible: v.feasible,
    }
}

fn diameter(simplex: &[Vertex], free: &[usize]) -> f64 {
    let mut d: f64 = 0.0;
    for a in simplex {
        for b in simplex {
            let dist = free
                .iter()
                .map(|&k| (a.x[k] - b.x[k]).powi(2))
                .sum::<f64>()
                .sqrt();
            d = d.max(dist);
        }
    }
    d
}

#[allow(clippy::too_many_arguments)]
fn finish(
    problem: &Problem<'_>,
    best: Vertex,
    lattice_best_value: f64,
    evaluations: usize,
    iterations: usize,
    converged: bool,
    trace: Vec<TracePoint>,
    seed: u64,
) -> SearchResult {
    SearchResult {
        axis_names: problem.axes.iter().map(|a| a.name.clone()).collect(),
        best_params: best.x,
        best_value: best.score,
        lattice_best_value,
        evaluations,
        iterations,
        converged,
        trace,
        seed,
    }
}

pub fn maximize_area_ratio(
    family: &FamilySpec,
    region: &Region,
    opts: &SearchOptions,
    quad: QuadOptions,
) -> Result<SearchResult> {
    maximize(&area_ratio_problem(family, region, quad)?, opts)
}

pub fn maximize_sp_ratio(
    f: &HarmonicMap,
    domain: &Region,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    maximize(&sp_ratio_problem(f, domain)?, opts)
}

pub fn maximize_sp_ratio_family(
    family: &FamilySpec,
    domain: &Region,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    maximize(&sp_family_problem(family, domain)?, opts)
}

/// `z` at the `(t, theta)` coordinates of a Schwarz-Pick search result.
pub fn sp_argmax_point(domain: &Region, result: &SearchResult) -> Complex64 {
    let n = result.best_params.len();
    domain_point(domain, result.best_params[n - 2], result.best_params[n - 1])
}

pub fn write_sweep_csv<W: Write>(axes: &[Axis], rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(format!("csv output: {e}"));
    let mut header: Vec<String> = axes.iter().map(|a| a.name.clone()).collect();
    header.extend(["ratio", "feasible", "self_map", "sense_preserving"].map(String::from));
    w.write_record(&header).map_err(io)?;
    for row in rows {
        let mut rec: Vec<String> = row.params.iter().map(|&x| fmt_float(x)).collect();
        rec.push(fmt_float(row.eval.value));
        rec.push(row.eval.feasible.to_string());
        rec.push(row.eval.self_map.to_string());
        rec.push(row.eval.sense_preserving.to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Io(format!("csv output: {e}")))?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(result: &SearchResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(format!("csv output: {e}"));
    let mut header = vec!["iteration".to_string()];
    header.extend(result.axis_names.iter().cloned());
    header.extend(["value", "feasible"].map(String::from));
    w.write_record(&header).map_err(io)?;
    for p in &result.trace {
        let mut rec = vec![p.iteration.to_string()];
        rec.extend(p.params.iter().map(|&x| fmt_float(x)));
        rec.push(fmt_float(p.value));
        rec.push(p.feasible.to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Io(format!("csv output: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn disk(r: f64) -> Region {
        Region::disk(r).unwrap()
    }

    fn quad() -> QuadOptions {
        QuadOptions::default()
    }

    #[test]
    fn affine_sweep_follows_constant_jacobian_law() {
        let fam = FamilySpec::new(FamilyKind::Affine { alpha: [0.0, 0.9] });
        let region = disk(0.5);
        let p = area_ratio_problem(&fam, &region, quad()).unwrap();
        let rows = sweep(&p, 10).unwrap();
        assert_eq!(rows.len(), 10);
        for r in &rows {
            let a = r.params[0];
            assert_abs_diff_eq!(r.eval.value, 1.0 - a * a, epsilon = 1e-12);
        }
        assert_eq!(rows[0].params, vec![0.0]);
        assert!(rows.windows(2).all(|w| w[0].eval.value >= w[1].eval.value));
    }

    #[test]
    fn rotation_sweep_is_flat() {
        let fam = FamilySpec::new(FamilyKind::Automorphism {
            modulus: [0.0, 0.0],
            rotation: [0.0, TAU],
        });
        let region = Region::star_from_fn(64, |t| 0.5 + 0.1 * t.sin()).unwrap();
        let p = area_ratio_problem(&fam, &region, quad()).unwrap();
        for r in sweep(&p, 8).unwrap() {
            assert_abs_diff_eq!(r.eval.value, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn shear_sweep_matches_closed_form() {
        let fam = FamilySpec::new(FamilyKind::Shear {
            alpha: [0.0, 0.4],
            powers: vec![2],
        });
        let region = disk(0.5);
        let p = area_ratio_problem(&fam, &region, quad()).unwrap();
        for r in sweep(&p, 9).unwrap() {
            let a = r.params[0];
            assert_abs_diff_eq!(r.eval.value, 1.0 - 2.0 * a * a * 0.25, epsilon = 1e-10);
        }
    }

    #[test]
    fn lattice_budget_is_enforced() {
        let fam = FamilySpec::new(FamilyKind::RawBall {
            degree: 4,
            bound: 0.1,
        });
        let region = disk(0.5);
        let p = area_ratio_problem(&fam, &region, quad()).unwrap();
        assert!(matches!(p.lattice(8), Err(Error::Budget(_))));
        assert!(p.lattice(7).is_ok());
    }

    #[test]
    fn affine_search_finds_conformal_point() {
        let fam = FamilySpec::new(FamilyKind::Affine {
            alpha: [-0.37, 0.9],
        });
        let res = maximize_area_ratio(&fam, &disk(0.5), &SearchOptions::default(), quad()).unwrap();
        assert_abs_diff_eq!(res.best_value, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(res.best_params[0], 0.0, epsilon = 1e-3);
        assert!(res.best_value >= res.lattice_best_value);
        let max_trace = res
            .trace
            .iter()
            .map(|p| p.value)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(!improves(max_trace, res.best_value));
        assert!(res.best_value <= max_trace);
    }

    #[test]
    fn self_map_shears_do_not_expand() {
        let fam = FamilySpec::new(FamilyKind::Shear {
            alpha: [0.0, 0.45],
            powers: vec![2],
        })
        .with_self_map();
        let res = maximize_area_ratio(&fam, &disk(0.5), &SearchOptions::default(), quad()).unwrap();
        assert!(res.best_value <= 1.0 + 1e-6);
        for p in res.trace.iter().filter(|p| p.feasible) {
            assert!(fam.member(&p.params).unwrap().self_map);
        }
    }

    #[test]
    fn rotations_have_ratio_exactly_one() {
        let fam = FamilySpec::new(FamilyKind::Automorphism {
            modulus: [0.0, 0.0],
            rotation: [0.0, TAU],
        });
        let res = maximize_area_ratio(&fam, &disk(0.5), &SearchOptions::default(), quad()).unwrap();
        assert_abs_diff_eq!(res.best_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_sp_ratio_is_identically_one() {
        let rot = HarmonicMap::rotation(0.7).unwrap();
        let res = maximize_sp_ratio(&rot, &disk(0.9), &SearchOptions::default()).unwrap();
        assert_abs_diff_eq!(res.best_value, 1.0, epsilon = 1e-12);
        assert!(res.trace.iter().all(|p| (p.value - 1.0).abs() < 1e-12));
        assert_eq!(res.best_params, vec![0.0, 0.0]);
    }

    #[test]
    fn unbuildable_members_are_infeasible() {
        let fam = FamilySpec::new(FamilyKind::Shear {
            alpha: [0.0, 0.9],
            powers: vec![2, 3],
        });
        let region = disk(0.5);
        let p = area_ratio_problem(&fam, &region, quad()).unwrap();
        let e = p.evaluate(&[0.8, 2.0]).unwrap();
        assert!(!e.feasible && e.value.is_nan());
        assert_eq!(e.score(), INFEASIBLE);
    }

    #[test]
    fn search_is_deterministic() {
        let fam = FamilySpec::new(FamilyKind::Automorphism {
            modulus: [0.0, 0.6],
            rotation: [0.0, 1.0],
        });
        let region = disk(0.5);
        let opts = SearchOptions {
            lattice_per_axis: 5,
            iterations: 60,
            seed: 42,
        };
        let a = maximize_area_ratio(&fam, &region, &opts, quad()).unwrap();
        let b = maximize_area_ratio(&fam, &region, &opts, quad()).unwrap();
        assert_eq!(a, b);
        let mut ca = Vec::new();
        let mut cb = Vec::new();
        write_trace_csv(&a, &mut ca).unwrap();
        write_trace_csv(&b, &mut cb).unwrap();
        assert_eq!(ca, cb);
    }

    #[test]
    fn sp_domain_must_stay_off_the_boundary() {
        let rot = HarmonicMap::rotation(0.0).unwrap();
        assert!(maximize_sp_ratio(&rot, &disk(0.9995), &SearchOptions::default()).is_err());
    }
}
