//! Serializable run reports.
//!
//! The CSV holds one row per recorded iteration with a fixed column set;
//! the JSON summary carries the full report. Both are byte-stable for a
//! fixed config and seed: floats print with 17 significant digits in the
//! CSV and shortest-round-trip form in the JSON, and wall-clock time is
//! deliberately kept out of both.

use std::io::{self, Write};
use std::time::Duration;

use serde::Serialize;

use crate::analysis::{
    CertificateReport, ConstantsProfile, IncoherenceProfile, RateFit, RecursionReport, RscEstimate,
    SmoothnessFit,
};
use crate::greedy::{IterateRecord, StopReason, Variant};

/// Echo of the resolved configuration, minus anything environmental
/// (output paths), so reports are comparable across working directories.
#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub variant: Variant,
    pub seed: u64,
    pub problem: crate::problems::ProblemSpec,
    pub solver: crate::greedy::SolverConfig,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AnalysisReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<SmoothnessFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rsc: Option<RscEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub incoherence: Option<IncoherenceProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificates: Option<CertificateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recursion: Option<RecursionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_check: Option<BoundCheck>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundViolation {
    pub m: usize,
    pub gap: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    /// Iterations with a quotable bound (inside the sparsity window).
    pub checked: usize,
    pub violations: Vec<BoundViolation>,
    /// Smallest bound-minus-gap margin over the checked iterations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_slack: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub stop: StopReason,
    pub iterations: usize,
    pub final_energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_energy: Option<f64>,
    pub records: Vec<IterateRecord>,
    /// Present only when the constants profile is complete.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsProfile>,
    /// One entry per record; empty outside the quotable window. Present
    /// exactly when `constants` is.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<Option<f64>>>,
    pub analyses: AnalysisReport,
    pub pass: bool,
    #[serde(skip)]
    pub wall_clock: Duration,
}

pub const CSV_HEADER: &str =
    "m,atom_index,sign,pairing,sup_pairing,energy,gap,orth_residual,thm21_bound";

/// 17 significant digits, '.' decimal separator.
pub fn fmt_float(x: f64) -> String {
    debug_assert!(x.is_finite());
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Fixed-column per-iteration CSV. `bounds`, when given, must have one
/// entry per record.
pub fn write_csv<W: Write>(
    w: &mut W,
    records: &[IterateRecord],
    bounds: Option<&[Option<f64>]>,
) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for (i, r) in records.iter().enumerate() {
        let bound = bounds.and_then(|b| b.get(i).copied().flatten());
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.m,
            r.atom_index.map(|v| v.to_string()).unwrap_or_default(),
            r.sign.map(|v| v.to_string()).unwrap_or_default(),
            opt_float(r.pairing),
            opt_float(r.sup_pairing),
            fmt_float(r.energy),
            opt_float(r.gap),
            opt_float(r.orth_residual),
            opt_float(bound),
        )?;
    }
    Ok(())
}

pub fn csv_string(records: &[IterateRecord], bounds: Option<&[Option<f64>]>) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, records, bounds).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("csv output is ascii")
}

/// Pretty JSON with a trailing newline.
pub fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(m: usize) -> IterateRecord {
        IterateRecord {
            m,
            atom_index: (m > 0).then(|| m - 1),
            sign: (m > 0).then_some(1),
            pairing: (m > 0).then_some(1.5),
            sup_pairing: (m > 0).then_some(1.5),
            weakness_t: (m > 0).then_some(1.0),
            line_value: None,
            energy: 10.0 / (m + 1) as f64,
            gap: Some(10.0 / (m + 1) as f64 - 0.5),
            orth_residual: (m > 0).then_some(1e-12),
            coefficients: vec![0.25; m],
        }
    }

    #[test]
    fn csv_has_fixed_header_and_blank_cells_for_m0() {
        let rows = vec![record(0), record(1)];
        let csv = csv_string(&rows, None);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER);
        // m = 0 row: no atom, no pairing, no residual, no bound.
        assert!(lines[1].starts_with("0,,,,,"));
        assert!(lines[1].ends_with(",,"));
        assert!(lines[2].starts_with("1,0,1,"));
    }

    #[test]
    fn floats_carry_seventeen_significant_digits() {
        assert_eq!(fmt_float(2.5), "2.5000000000000000e0");
        assert_eq!(fmt_float(-0.01), "-1.0000000000000000e-2");
        let x = 24.230830861908604;
        let s = fmt_float(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_is_byte_stable() {
        let rows = vec![record(0), record(1), record(2)];
        let bounds = vec![Some(25.0), Some(24.23), None];
        let a = csv_string(&rows, Some(&bounds));
        let b = csv_string(&rows, Some(&bounds));
        assert_eq!(a, b);
    }
}
