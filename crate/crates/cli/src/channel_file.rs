//! JSON channel files.
//!
//! ```json
//! {
//!   "input_alphabet": ["0", "1"],
//!   "output_alphabet": ["0", "1"],
//!   "W": [[0.9, 0.1], [0.1, 0.9]],
//!   "P": [0.5, 0.5],
//!   "W_tilde": [[0.9, 0.1], [0.1, 0.9]],
//!   "beta": "inf",
//!   "grid": { "delta": 0.05, "max_alphabet": 3 }
//! }
//! ```
//!
//! Only `W` is required. `P` defaults to uniform, `W_tilde` to `W` and
//! `beta` to `"inf"`.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use trc_exponent::primal::GridSpec;
use trc_exponent::{ChannelModel, DecoderSpec, Error as CoreError};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum BetaField {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridField {
    delta: Option<f64>,
    max_alphabet: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    input_alphabet: Option<Vec<String>>,
    output_alphabet: Option<Vec<String>>,
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    #[serde(rename = "P")]
    p: Option<Vec<f64>>,
    #[serde(rename = "W_tilde")]
    w_tilde: Option<Vec<Vec<f64>>>,
    beta: Option<BetaField>,
    grid: Option<GridField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFile {
    pub model: ChannelModel,
    pub decoder: DecoderSpec,
    pub grid: GridSpec,
    /// Non-fatal remarks, e.g. a metric whose rows do not sum to one.
    pub warnings: Vec<String>,
}

fn parse_beta(b: Option<BetaField>) -> Result<f64, CliError> {
    match b {
        None => Ok(f64::INFINITY),
        Some(BetaField::Number(v)) if v > 0.0 => Ok(v),
        Some(BetaField::Number(v)) => Err(CliError::Input(format!("field `beta`: must be positive, got {v}"))),
        Some(BetaField::Text(s)) if s == "inf" => Ok(f64::INFINITY),
        Some(BetaField::Text(s)) => Err(CliError::Input(format!(
            "field `beta`: expected a number or \"inf\", got \"{s}\""
        ))),
    }
}

fn labels(given: Option<Vec<String>>, n: usize) -> Vec<String> {
    given.unwrap_or_else(|| (0..n).map(|i| i.to_string()).collect())
}

/// Parses channel-file text. `origin` names the source in error messages.
pub fn parse_channel_str(text: &str, origin: &str) -> Result<ChannelFile, CliError> {
    let raw: RawChannel = serde_json::from_str(text)
        .map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
    let nx = raw.w.len();
    let ny = raw.w.first().map_or(0, Vec::len);
    let p = raw.p.unwrap_or_else(|| vec![1.0 / nx.max(1) as f64; nx]);
    let model = ChannelModel {
        input_alphabet: labels(raw.input_alphabet, nx),
        output_alphabet: labels(raw.output_alphabet, ny),
        w: raw.w,
        p,
    }
    .validated()
    .map_err(|e| match e {
        CoreError::InvalidChannel(v) => CliError::Input(format!("{origin}: invalid channel: {}", v.join("; "))),
        other => CliError::Input(format!("{origin}: {other}")),
    })?;
    let beta = parse_beta(raw.beta).map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
    let decoder = DecoderSpec {
        w_tilde: raw.w_tilde.unwrap_or_else(|| model.w.clone()),
        beta,
    };
    let warnings = decoder
        .check(&model)
        .map_err(|e| CliError::Input(format!("{origin}: field `W_tilde`: {e}")))?;
    let mut grid = GridSpec::default();
    if let Some(g) = raw.grid {
        if let Some(d) = g.delta {
            grid.delta = d;
        }
        if let Some(m) = g.max_alphabet {
            grid.max_alphabet = m;
        }
        grid.steps()
            .map_err(|e| CliError::Input(format!("{origin}: field `grid`: {e}")))?;
    }
    Ok(ChannelFile {
        model,
        decoder,
        grid,
        warnings,
    })
}

pub fn parse_channel_file(path: &Path) -> Result<ChannelFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_channel_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let f = parse_channel_str(r#"{"W": [[0.9, 0.1], [0.1, 0.9]]}"#, "t").unwrap();
        assert_eq!(f.model.p, vec![0.5, 0.5]);
        assert!(f.decoder.is_matched_ml(&f.model));
        assert_eq!(f.grid, GridSpec::default());
    }

    #[test]
    fn beta_sentinel_and_number() {
        let f = parse_channel_str(r#"{"W": [[1, 0], [0, 1]], "beta": "inf"}"#, "t").unwrap();
        assert_eq!(f.decoder.beta, f64::INFINITY);
        let f = parse_channel_str(r#"{"W": [[1, 0], [0, 1]], "beta": 2.5}"#, "t").unwrap();
        assert_eq!(f.decoder.beta, 2.5);
        assert!(parse_channel_str(r#"{"W": [[1, 0], [0, 1]], "beta": "big"}"#, "t").is_err());
        assert!(parse_channel_str(r#"{"W": [[1, 0], [0, 1]], "beta": 0}"#, "t").is_err());
    }

    #[test]
    fn negative_entry_is_named() {
        let e = parse_channel_str(r#"{"W": [[1.1, -0.1], [0, 1]]}"#, "t").unwrap_err();
        assert!(e.to_string().contains("W[0][1]"), "{e}");
    }

    #[test]
    fn syntax_errors_report_position() {
        let e = parse_channel_str("{\n  \"W\": [[1, 0],\n  [0, 1]\n", "t").unwrap_err();
        assert!(e.to_string().contains("line"), "{e}");
        let e = parse_channel_str(r#"{"W": [[1, 0], [0, 1]], "Q": 1}"#, "t").unwrap_err();
        assert!(e.to_string().contains("unknown field"), "{e}");
    }

    #[test]
    fn metric_shape_mismatch() {
        let e = parse_channel_str(r#"{"W": [[1, 0], [0, 1]], "W_tilde": [[1, 0]]}"#, "t").unwrap_err();
        assert!(e.to_string().contains("W_tilde"), "{e}");
    }
}
