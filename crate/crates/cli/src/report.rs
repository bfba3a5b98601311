//! Report envelopes and the JSON/CSV writers.

use std::io::Write;

use serde::{Deserialize, Serialize};

use qcrb_core::bounds::{BoundReport, FrontierKind, FrontierPoint};
use qcrb_core::infogeo::FisherMatrix;
use qcrb_core::matcore::HermitianOperator;
use qcrb_core::povmopt::SearchResult;

use crate::config::{fmt_f64, ConfigEcho};
use crate::CliError;

/// Top-level report: `{version, config, result, wall_ms}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub version: String,
    pub config: ConfigEcho,
    pub result: ResultPayload,
    pub wall_ms: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ResultPayload {
    Fisher(FisherReport),
    Bounds(BoundReport),
    Frontier(FrontierReport),
    Povm(Box<SearchResult>),
    Sweep(SweepReport),
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FisherReport {
    pub j_sld: FisherMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_rld: Option<FisherMatrix>,
    pub rld_note: String,
    pub slds: Vec<HermitianOperator>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FrontierReport {
    pub kind: FrontierKind,
    pub points: Vec<FrontierPoint>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub step_value: f64,
    pub c: Option<f64>,
    pub c_a: Option<f64>,
    pub c_r: Option<f64>,
    pub searched: Option<f64>,
    pub gap_c_ca: Option<f64>,
}

impl ReportEnvelope {
    pub fn new(config: ConfigEcho, result: ResultPayload, wall_ms: f64) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            result,
            wall_ms,
        }
    }

    pub fn write_json(&self, out: &mut dyn Write) -> Result<(), CliError> {
        serde_json::to_writer_pretty(&mut *out, self)
            .map_err(|e| CliError::Config(format!("serialization failed: {e}")))?;
        out.write_all(b"\n").map_err(CliError::Io)
    }
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Frontier CSV: `y,z,x,v11,v12,v22`, with an extra `v00` radial column for
/// the full-family kind.
pub fn write_frontier_csv(report: &FrontierReport, out: &mut dyn Write) -> Result<(), CliError> {
    let full = matches!(report.kind, FrontierKind::FullAsymptotic);
    if full {
        writeln!(out, "y,z,x,v00,v11,v12,v22").map_err(CliError::Io)?;
    } else {
        writeln!(out, "y,z,x,v11,v12,v22").map_err(CliError::Io)?;
    }
    for p in &report.points {
        let (y, z) = p.coords.unwrap_or((f64::NAN, f64::NAN));
        // The angular block sits at indices (1, 2) for the 3×3 full kind and
        // (0, 1) otherwise; x is its mean diagonal.
        let off = usize::from(full);
        let v11 = p.v.entry(off, off);
        let v12 = p.v.entry(off, off + 1);
        let v22 = p.v.entry(off + 1, off + 1);
        let x = 0.5 * (v11 + v22);
        if full {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_f64(y),
                fmt_f64(z),
                fmt_f64(x),
                fmt_f64(p.v.entry(0, 0)),
                fmt_f64(v11),
                fmt_f64(v12),
                fmt_f64(v22)
            )
            .map_err(CliError::Io)?;
        } else {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(y),
                fmt_f64(z),
                fmt_f64(x),
                fmt_f64(v11),
                fmt_f64(v12),
                fmt_f64(v22)
            )
            .map_err(CliError::Io)?;
        }
    }
    Ok(())
}

/// Sweep CSV with the fixed column set.
pub fn write_sweep_csv(report: &SweepReport, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "step_value,C,C_A,C_R,searched,gap_C_CA").map_err(CliError::Io)?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(r.step_value),
            opt_cell(r.c),
            opt_cell(r.c_a),
            opt_cell(r.c_r),
            opt_cell(r.searched),
            opt_cell(r.gap_c_ca)
        )
        .map_err(CliError::Io)?;
    }
    Ok(())
}
