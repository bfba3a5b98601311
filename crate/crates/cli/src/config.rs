//! Argument parsing helpers and the config echo embedded in every report.

use serde::{Deserialize, Serialize};

use qcrb_core::bounds::WeightMatrix;
use qcrb_core::error::CoreError;
use qcrb_core::families::{ParamPoint, StateFamily};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("unknown format '{other}' (expected json or csv)")),
        }
    }
}

/// Echo of the fully parsed run configuration, embedded in every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub command: String,
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<Vec<f64>>,
    pub format: OutputFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_range: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_range: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub copies: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_param: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_range: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<bool>,
}

impl ConfigEcho {
    pub fn new(command: &str, family: &str, format: OutputFormat) -> Self {
        Self {
            command: command.into(),
            family: family.into(),
            theta: None,
            weight: None,
            format,
            output: None,
            kind: None,
            y_range: None,
            z_range: None,
            copies: None,
            outcomes: None,
            restarts: None,
            iters: None,
            seed: None,
            sweep_param: None,
            sweep_range: None,
            search: None,
        }
    }
}

pub fn parse_theta(family: &StateFamily, spec: &str) -> Result<ParamPoint, CliError> {
    let coords: Vec<f64> = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("cannot parse θ component '{s}'")))
        })
        .collect::<Result<_, _>>()?;
    if coords.len() != family.param_dim() {
        return Err(CliError::Core(CoreError::DimensionMismatch {
            left: coords.len(),
            right: family.param_dim(),
            context: "θ component count",
        }));
    }
    Ok(ParamPoint::new(coords))
}

/// Parses `--G`: either the `(g1, g2, g3)` triple for 2-parameter families or
/// the full row-major d×d entries.
pub fn parse_weight(d: usize, spec: &str) -> Result<WeightMatrix, CliError> {
    let vals: Vec<f64> = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("cannot parse G entry '{s}'")))
        })
        .collect::<Result<_, _>>()?;
    let weight = if d == 2 && vals.len() == 3 {
        WeightMatrix::from_g_coords(vals[0], vals[1], vals[2])
    } else if vals.len() == d * d {
        WeightMatrix::from_entries(d, vals)
    } else {
        return Err(CliError::Config(format!(
            "G needs {} row-major entries{} , got {}",
            d * d,
            if d == 2 {
                " or a (g1,g2,g3) triple"
            } else {
                ""
            },
            vals.len()
        )));
    };
    weight.map_err(CliError::Core)
}

/// `start:end:steps` with inclusive endpoints; `steps = 1` degenerates to the
/// start point (requiring `start == end`).
pub fn parse_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "range '{spec}' must have the form start:end:steps"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse range start '{}'", parts[0])))?;
    let end: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse range end '{}'", parts[1])))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse range steps '{}'", parts[2])))?;
    if steps == 0 {
        return Err(CliError::Config("range has zero steps".into()));
    }
    if steps == 1 {
        if (start - end).abs() > 0.0 {
            return Err(CliError::Config(
                "a single-step range needs start == end".into(),
            ));
        }
        return Ok(vec![start]);
    }
    let dx = (end - start) / (steps as f64 - 1.0);
    Ok((0..steps).map(|i| start + i as f64 * dx).collect())
}

/// 17-significant-digit decimal encoding; round-trips `f64` exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
