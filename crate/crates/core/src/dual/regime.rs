use serde::Serialize;

use crate::channel::{ChannelModel, DecoderSpec};
use crate::classical::{critical_rates, expurgated_exponent, gallager_e0, random_coding_exponent, RhoCap};
use crate::error::{Error, Result};
use crate::logdomain::lse;
use crate::measures::LogTables;

use super::{DualParams, Regime};

/// `E₁(ϱ, λ) = -ln Σ_y exp{2A(y,1+ϱ) - λ(1-ϱ)/(1+ϱ) A(y,λ)}` with `A` built on
/// the channel itself.
pub fn e1(model: &ChannelModel, rho: f64, lambda: f64) -> f64 {
    assert!(rho > 0.0 && rho <= 1.0, "rho must lie in (0, 1]");
    assert!(lambda > 0.0, "lambda must be positive");
    let t = LogTables::new(model, &model.w);
    let c = lambda * (1.0 - rho) / (1.0 + rho);
    -lse((0..t.ny).map(|y| {
        let a1 = t.a_value(y, 1.0 + rho);
        if a1 == f64::NEG_INFINITY {
            return a1;
        }
        let second = if c == 0.0 { 0.0 } else { c * t.a_value(y, lambda) };
        2.0 * a1 - second
    }))
}

/// `β₀ = σ* + τ*`: the inverse temperature beyond which the bound stops
/// improving.
pub fn beta_threshold(sigma_star: f64, tau_star: f64) -> f64 {
    sigma_star + tau_star
}

/// The three closed-form bounds at one rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeBound {
    /// Largest of the three candidates.
    pub value: f64,
    /// Regime selected by comparing the rate with the critical rates.
    pub label: Regime,
    /// Dual parameters realizing the labelled regime.
    pub params: DualParams,
    /// `E_ex(2R) + R`.
    pub low: f64,
    /// `E₀(1) - R`.
    pub moderate: f64,
    /// `E_r(R)`, which equals `E_sp(R)` above the second critical rate.
    pub high: f64,
}

/// Closed-form bound for matched deterministic decoding.
pub fn regime_bound(model: &ChannelModel, decoder: &DecoderSpec, rate: f64) -> Result<RegimeBound> {
    if !decoder.is_matched_ml(model) {
        return Err(Error::Unsupported(
            "the three-regime bound needs matched deterministic decoding".into(),
        ));
    }
    if !(rate >= 0.0) {
        return Err(Error::Domain(format!("rate must be nonnegative, got {rate}")));
    }
    let ex = expurgated_exponent(model, 2.0 * rate, RhoCap::default());
    let low = ex.value + rate;
    let moderate = gallager_e0(model, 1.0) - rate;
    let er = random_coding_exponent(model, rate);
    let high = er.value;
    let rc = critical_rates(model);
    let (label, params) = if rate <= rc.r_c1 {
        let rho = ex.rho;
        (Regime::Low, DualParams::new(0.5, 0.0, 0.0, rho - 1.0, rho))
    } else if rate <= rc.r_c2 {
        (Regime::Moderate, DualParams::new(0.5, 0.0, 0.0, 0.0, 1.0))
    } else {
        let r = er.rho;
        (
            Regime::High,
            DualParams::new(r / (1.0 + r), (1.0 - r) / (1.0 + r), 1.0 + r, 0.0, 1.0),
        )
    };
    Ok(RegimeBound {
        value: low.max(moderate).max(high),
        label,
        params,
        low,
        moderate,
        high,
    })
}
