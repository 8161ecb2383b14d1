//! Verification reports and their JSON / CSV serializations.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::QuadResult;

/// Smallest tolerance any report uses.
pub const TOLERANCE_FLOOR: f64 = 1e-9;

/// Ten times the summed quadrature error estimates, floored at [`TOLERANCE_FLOOR`].
pub fn report_tolerance(error_estimates: &[f64]) -> f64 {
    (10.0 * error_estimates.iter().sum::<f64>()).max(TOLERANCE_FLOOR)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `lhs <= rhs`; passes when `rhs - lhs >= -tolerance`.
    AtMost,
    /// `lhs == rhs`; passes when `|rhs - lhs| <= tolerance`.
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub name: String,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    pub pass: bool,
    pub tolerance: f64,
    pub evals: usize,
    /// False when the inputs violate a hypothesis of the inequality being checked.
    pub hypothesis_met: bool,
    /// Informational rows never affect exit status.
    pub informational: bool,
    pub detail: String,
    pub warnings: Vec<String>,
}

impl VerificationReport {
    fn build(
        name: impl Into<String>,
        relation: Relation,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
    ) -> Self {
        let margin = rhs - lhs;
        let pass = match relation {
            Relation::AtMost => margin >= -tolerance,
            Relation::Equal => margin.abs() <= tolerance,
        };
        Self {
            name: name.into(),
            relation,
            lhs,
            rhs,
            margin,
            pass,
            tolerance,
            evals: 0,
            hypothesis_met: true,
            informational: false,
            detail: String::new(),
            warnings: Vec::new(),
        }
    }

    pub fn at_most(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::build(name, Relation::AtMost, lhs, rhs, tolerance)
    }

    pub fn equal(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::build(name, Relation::Equal, lhs, rhs, tolerance)
    }

    pub fn with_evals(mut self, evals: usize) -> Self {
        self.evals = evals;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    /// Attaches hypothesis warnings; any warning marks the hypothesis unmet.
    pub fn with_warnings(mut self, warnings: &[String]) -> Self {
        if !warnings.is_empty() {
            self.hypothesis_met = false;
            self.warnings.extend_from_slice(warnings);
        }
        self
    }

    /// Rows whose failure should fail a verification run.
    pub fn is_binding(&self) -> bool {
        self.hypothesis_met && !self.informational
    }

    pub fn status(&self) -> &'static str {
        if self.informational {
            "info"
        } else if !self.hypothesis_met {
            "hypothesis-unmet"
        } else if self.pass {
            "pass"
        } else {
            "fail"
        }
    }
}

/// Three-term chain `m(f(D_r)) <= int_{D_r} |h'|^2 <= pi r^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub r: f64,
    pub image_area: QuadResult,
    pub analytic_energy: QuadResult,
    pub reference_area: f64,
    /// `image_area <= analytic_energy`.
    pub energy_link: VerificationReport,
    /// `analytic_energy <= reference_area`.
    pub reference_link: VerificationReport,
    pub self_map_sup: f64,
    pub warnings: Vec<String>,
}

impl ChainReport {
    pub fn links(&self) -> [&VerificationReport; 2] {
        [&self.energy_link, &self.reference_link]
    }
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "name", "lhs", "rhs", "margin", "pass", "tol", "evals", "relation", "status", "detail",
];

pub fn write_reports_csv<W: Write>(reports: &[VerificationReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(format!("csv output: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in reports {
        let relation = match r.relation {
            Relation::AtMost => "<=",
            Relation::Equal => "==",
        };
        let mut detail = r.detail.clone();
        for warning in &r.warnings {
            if !detail.is_empty() {
                detail.push_str("; ");
            }
            detail.push_str(warning);
        }
        w.write_record([
            r.name.as_str(),
            &fmt_float(r.lhs),
            &fmt_float(r.rhs),
            &fmt_float(r.margin),
            if r.pass { "true" } else { "false" },
            &fmt_float(r.tolerance),
            &r.evals.to_string(),
            relation,
            r.status(),
            &detail,
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Io(format!("csv output: {e}")))?;
    Ok(())
}

pub fn reports_to_json(reports: &[VerificationReport]) -> Result<String> {
    serde_json::to_string_pretty(reports).map_err(|e| Error::Io(format!("json output: {e}")))
}
