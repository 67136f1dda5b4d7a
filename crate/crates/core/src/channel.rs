//! Channel and decoder data model.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance;

/// A discrete memoryless channel `W(y|x)` together with the input
/// distribution `P` of the i.i.d. random-coding ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub input_alphabet: Vec<String>,
    pub output_alphabet: Vec<String>,
    /// Row-major, `w[x][y] = W(y|x)`.
    pub w: Vec<Vec<f64>>,
    pub p: Vec<f64>,
}

/// Mismatched metric `W̃` and inverse temperature `β ∈ (0, ∞]`.
///
/// `β = ∞` (stored as `f64::INFINITY`) is deterministic decoding with metric `W̃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderSpec {
    pub w_tilde: Vec<Vec<f64>>,
    pub beta: f64,
}

/// One failed invariant of a [`ChannelModel`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RowLength { row: usize, expected: usize, got: usize },
    NegativeEntry { row: usize, col: usize, value: f64 },
    NonFiniteEntry { row: usize, col: usize },
    RowSum { row: usize, sum: f64 },
    InputDistributionLength { expected: usize, got: usize },
    NegativeInput { index: usize, value: f64 },
    InputDistributionSum { sum: f64 },
    InputAlphabetLength { expected: usize, got: usize },
    OutputAlphabetLength { expected: usize, got: usize },
    Empty,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowLength { row, expected, got } => {
                write!(f, "row {row} has {got} entries, expected {expected}")
            }
            Violation::NegativeEntry { row, col, value } => {
                write!(f, "entry W[{row}][{col}] = {value} is negative")
            }
            Violation::NonFiniteEntry { row, col } => {
                write!(f, "entry W[{row}][{col}] is not finite")
            }
            Violation::RowSum { row, sum } => write!(f, "row {row} sums to {sum}"),
            Violation::InputDistributionLength { expected, got } => {
                write!(f, "input distribution has {got} entries, expected {expected}")
            }
            Violation::NegativeInput { index, value } => {
                write!(f, "input distribution entry P[{index}] = {value} is negative")
            }
            Violation::InputDistributionSum { sum } => {
                write!(f, "input distribution sums to {sum}")
            }
            Violation::InputAlphabetLength { expected, got } => {
                write!(f, "input alphabet has {got} labels, expected {expected}")
            }
            Violation::OutputAlphabetLength { expected, got } => {
                write!(f, "output alphabet has {got} labels, expected {expected}")
            }
            Violation::Empty => write!(f, "channel matrix is empty"),
        }
    }
}

/// Checks every [`ChannelModel`] invariant; an empty list means the model is
/// valid.
pub fn validate_channel(model: &ChannelModel) -> Vec<Violation> {
    let mut out = check_stochastic(&model.w);
    let nx = model.w.len();
    let ny = model.w.first().map_or(0, Vec::len);
    if model.p.len() != nx {
        out.push(Violation::InputDistributionLength {
            expected: nx,
            got: model.p.len(),
        });
    } else {
        let mut sum = 0.0;
        for (index, &value) in model.p.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                out.push(Violation::NegativeInput { index, value });
            }
            sum += value;
        }
        if (sum - 1.0).abs() > tolerance::VALIDATION {
            out.push(Violation::InputDistributionSum { sum });
        }
    }
    if model.input_alphabet.len() != nx {
        out.push(Violation::InputAlphabetLength {
            expected: nx,
            got: model.input_alphabet.len(),
        });
    }
    if model.output_alphabet.len() != ny {
        out.push(Violation::OutputAlphabetLength {
            expected: ny,
            got: model.output_alphabet.len(),
        });
    }
    out
}

/// Row-stochastic checks shared by the channel and the decoding metric.
pub fn check_stochastic(w: &[Vec<f64>]) -> Vec<Violation> {
    let mut out = Vec::new();
    if w.is_empty() || w[0].is_empty() {
        out.push(Violation::Empty);
        return out;
    }
    let ny = w[0].len();
    for (row, r) in w.iter().enumerate() {
        if r.len() != ny {
            out.push(Violation::RowLength {
                row,
                expected: ny,
                got: r.len(),
            });
            continue;
        }
        let mut sum = 0.0;
        for (col, &value) in r.iter().enumerate() {
            if !value.is_finite() {
                out.push(Violation::NonFiniteEntry { row, col });
            } else if value < 0.0 {
                out.push(Violation::NegativeEntry { row, col, value });
            }
            sum += value;
        }
        if (sum - 1.0).abs() > tolerance::VALIDATION {
            out.push(Violation::RowSum { row, sum });
        }
    }
    out
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

impl ChannelModel {
    /// Builds and validates a model with default labels `0, 1, ...`.
    pub fn new(w: Vec<Vec<f64>>, p: Vec<f64>) -> Result<Self> {
        let ny = w.first().map_or(0, Vec::len);
        let model = ChannelModel {
            input_alphabet: default_labels(w.len()),
            output_alphabet: default_labels(ny),
            w,
            p,
        };
        model.validated()
    }

    /// Model with a uniform input distribution.
    pub fn with_uniform_input(w: Vec<Vec<f64>>) -> Result<Self> {
        let nx = w.len().max(1);
        let p = vec![1.0 / nx as f64; w.len()];
        Self::new(w, p)
    }

    /// Returns `self` if it passes [`validate_channel`], otherwise an error
    /// listing every violation.
    pub fn validated(self) -> Result<Self> {
        let violations = validate_channel(&self);
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidChannel(
                violations.iter().map(ToString::to_string).collect(),
            ))
        }
    }

    /// Binary symmetric channel with crossover `crossover` and uniform input.
    pub fn bsc(crossover: f64) -> Self {
        let q = 1.0 - crossover;
        Self::with_uniform_input(vec![vec![q, crossover], vec![crossover, q]])
            .expect("crossover must lie in [0, 1]")
    }

    /// Z-channel: input 0 is received noiselessly, input 1 flips to 0 with
    /// probability `flip`. Uniform input.
    pub fn z_channel(flip: f64) -> Self {
        Self::with_uniform_input(vec![vec![1.0, 0.0], vec![flip, 1.0 - flip]])
            .expect("flip must lie in [0, 1]")
    }

    /// Noiseless channel on `k` symbols with uniform input.
    pub fn noiseless(k: usize) -> Self {
        let w = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::with_uniform_input(w).expect("identity matrix is stochastic")
    }

    pub fn num_inputs(&self) -> usize {
        self.w.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.w.first().map_or(0, Vec::len)
    }

    /// Output distribution `Σ_x P(x) W(y|x)`.
    pub fn output_distribution(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.num_outputs()];
        for (px, row) in self.p.iter().zip(&self.w) {
            for (qy, wy) in q.iter_mut().zip(row) {
                *qy += px * wy;
            }
        }
        q
    }
}

impl DecoderSpec {
    /// Matched metric `W̃ = W` at the given `β`.
    pub fn matched(model: &ChannelModel, beta: f64) -> Self {
        DecoderSpec {
            w_tilde: model.w.clone(),
            beta,
        }
    }

    /// Matched maximum-likelihood decoding (`W̃ = W`, `β = ∞`).
    pub fn ml(model: &ChannelModel) -> Self {
        Self::matched(model, f64::INFINITY)
    }

    pub fn is_deterministic(&self) -> bool {
        self.beta == f64::INFINITY
    }

    /// True when the metric coincides with the channel and decoding is
    /// deterministic, the setting in which the three-regime bounds apply.
    pub fn is_matched_ml(&self, model: &ChannelModel) -> bool {
        self.is_deterministic() && self.w_tilde == model.w
    }

    /// Checks shape and `β`; a metric that is not row-stochastic yields
    /// warnings rather than an error.
    pub fn check(&self, model: &ChannelModel) -> Result<Vec<String>> {
        if !(self.beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {}", self.beta)));
        }
        if self.w_tilde.len() != model.num_inputs() {
            return Err(Error::DimensionMismatch {
                what: "decoding metric rows",
                expected: model.num_inputs(),
                got: self.w_tilde.len(),
            });
        }
        let mut warnings = Vec::new();
        for (row, r) in self.w_tilde.iter().enumerate() {
            if r.len() != model.num_outputs() {
                return Err(Error::DimensionMismatch {
                    what: "decoding metric columns",
                    expected: model.num_outputs(),
                    got: r.len(),
                });
            }
            if r.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::Domain(format!(
                    "decoding metric row {row} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > tolerance::VALIDATION {
                warnings.push(format!("decoding metric row {row} sums to {sum}"));
            }
        }
        Ok(warnings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(w: Vec<Vec<f64>>, p: Vec<f64>) -> ChannelModel {
        ChannelModel {
            input_alphabet: default_labels(w.len()),
            output_alphabet: default_labels(w[0].len()),
            w,
            p,
        }
    }

    #[test]
    fn bsc_is_valid() {
        let m = raw(vec![vec![0.9, 0.1], vec![0.1, 0.9]], vec![0.5, 0.5]);
        assert!(validate_channel(&m).is_empty());
    }

    #[test]
    fn bad_row_sum_is_reported() {
        let m = raw(vec![vec![0.9, 0.2], vec![0.1, 0.9]], vec![0.5, 0.5]);
        let v = validate_channel(&m);
        assert_eq!(v.len(), 1);
        match v[0] {
            Violation::RowSum { row, sum } => {
                assert_eq!(row, 0);
                assert!((sum - 1.1).abs() < 1e-12);
            }
            ref other => panic!("unexpected {other:?}"),
        }
        assert!(v[0].to_string().starts_with("row 0 sums to 1.1"));
    }

    #[test]
    fn bad_input_sum_is_reported() {
        let m = raw(vec![vec![0.9, 0.1], vec![0.1, 0.9]], vec![0.7, 0.4]);
        let v = validate_channel(&m);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::InputDistributionSum { .. }));
    }

    #[test]
    fn negative_entry_names_position() {
        let m = raw(vec![vec![1.1, -0.1], vec![0.1, 0.9]], vec![0.5, 0.5]);
        let v = validate_channel(&m);
        assert!(v.contains(&Violation::NegativeEntry { row: 0, col: 1, value: -0.1 }));
    }

    #[test]
    fn shape_mismatches() {
        let m = raw(vec![vec![0.9, 0.1], vec![1.0]], vec![1.0]);
        let v = validate_channel(&m);
        assert!(v.iter().any(|x| matches!(x, Violation::RowLength { row: 1, .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::InputDistributionLength { .. })));
    }

    #[test]
    fn decoder_checks() {
        let m = ChannelModel::bsc(0.1);
        let mut d = DecoderSpec::ml(&m);
        assert!(d.check(&m).unwrap().is_empty());
        d.w_tilde[0] = vec![0.5, 0.6];
        assert_eq!(d.check(&m).unwrap().len(), 1);
        d.beta = 0.0;
        assert!(d.check(&m).is_err());
    }
}
