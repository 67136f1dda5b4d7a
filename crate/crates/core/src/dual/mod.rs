//! The five-parameter dual bound and its optimizer.
//!
//! For a decoder `(W̃, β)` and rate `R` the bound is
//!
//! ```text
//! sup_{σ∈[0,β]} sup_{τ∈[0,β-σ]} inf_{λ≥0} sup_{θ≥0} sup_{ζ≥1+θ}
//!     -ζ ln Σ_x P(x) [Σ_x' P(x') S(x,x')^{1/(1+θ)}]^{(1+θ)/ζ} - (ζ+θ-λτ) R
//! ```
//!
//! with `S(x,x') = Σ_y W(y|x) [W̃(y|x')/W̃(y|x)]^σ [W̃(y|x')/C(y,λ)]^τ` and
//! `C(y,λ) = [Σ_x P(x) W̃(y|x)^{1/λ}]^λ` the collective-competition factor.

mod objective;
mod optimize;
mod regime;

use serde::Serialize;

pub use objective::{dual_objective, inner_sum_log};
pub use optimize::optimize_dual;
pub use regime::{beta_threshold, e1, regime_bound, RegimeBound};

/// The five dual parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualParams {
    pub sigma: f64,
    pub tau: f64,
    /// `0` and `∞` select the analytic limits of the collective factor.
    pub lambda: f64,
    pub theta: f64,
    pub zeta: f64,
}

impl DualParams {
    pub fn new(sigma: f64, tau: f64, lambda: f64, theta: f64, zeta: f64) -> Self {
        DualParams {
            sigma,
            tau,
            lambda,
            theta,
            zeta,
        }
    }

    /// `σ ≤ β` and `τ ≤ β - σ`, with a little slack for rounding at the
    /// boundary.
    pub fn feasible_for(&self, beta: f64) -> bool {
        let slack = 1e-12 * beta.max(1.0);
        self.sigma >= 0.0
            && self.tau >= 0.0
            && (beta == f64::INFINITY || (self.sigma <= beta + slack && self.tau <= beta - self.sigma + slack))
    }

    pub fn zeta_feasible(&self) -> bool {
        self.theta >= 0.0 && self.zeta >= 1.0 + self.theta
    }

    pub(crate) fn key(&self) -> [f64; 5] {
        [self.sigma, self.tau, self.lambda, self.theta, self.zeta]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Low,
    Moderate,
    High,
    Unknown,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Low => "low",
            Regime::Moderate => "moderate",
            Regime::High => "high",
            Regime::Unknown => "unknown",
        }
    }

    pub fn index(self) -> i32 {
        match self {
            Regime::Low => 1,
            Regime::Moderate => 2,
            Regime::High => 3,
            Regime::Unknown => 0,
        }
    }
}

/// Grid for `σ` and `τ`: a linear part near the origin, where the known
/// achievers live, then geometric steps up to `cap`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaTauGrid {
    pub linear_max: f64,
    pub linear_step: f64,
    /// Points per doubling above `linear_max`.
    pub points_per_octave: usize,
    /// Upper end of the search when `β = ∞`.
    pub cap: f64,
}

impl Default for SigmaTauGrid {
    fn default() -> Self {
        SigmaTauGrid {
            linear_max: 2.0,
            linear_step: 0.125,
            points_per_octave: 2,
            cap: 16.0,
        }
    }
}

impl SigmaTauGrid {
    /// Grid points within `[0, min(upper, cap)]`, with `upper` itself added.
    pub fn points(&self, upper: f64) -> Vec<f64> {
        let hi = upper.min(self.cap);
        let mut v = Vec::new();
        let mut i = 0;
        loop {
            let s = i as f64 * self.linear_step;
            if s > self.linear_max + 1e-12 || s > hi + 1e-12 {
                break;
            }
            v.push(s);
            i += 1;
        }
        if self.points_per_octave > 0 {
            let mut k = 1;
            loop {
                let s = self.linear_max * 2f64.powf(k as f64 / self.points_per_octave as f64);
                if s > self.cap * (1.0 + 1e-12) || s > hi + 1e-12 {
                    break;
                }
                v.push(s);
                k += 1;
            }
        }
        if hi.is_finite() {
            v.push(hi);
        }
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        v
    }
}

/// Log-spaced `λ` grid with optional analytic endpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub include_zero: bool,
    pub include_infinity: bool,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid {
            lo: 1e-3,
            hi: 1e3,
            points: 200,
            include_zero: true,
            include_infinity: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualConfig {
    pub sigma_tau_grid: SigmaTauGrid,
    pub lambda_grid: LambdaGrid,
    pub theta_cap: f64,
    pub zeta_cap: f64,
    /// Rounds of 5×5 zoom grids around the incumbent `(σ, τ)`.
    pub refine_rounds: usize,
    /// Final compass search on `(σ, τ)` stops below this step.
    pub polish_tol: f64,
    pub unimodality_check: bool,
    /// Extra `(σ, τ)` points evaluated before the grid.
    pub seeds: Vec<(f64, f64)>,
}

impl Default for DualConfig {
    fn default() -> Self {
        DualConfig {
            sigma_tau_grid: SigmaTauGrid::default(),
            lambda_grid: LambdaGrid::default(),
            theta_cap: 32.0,
            zeta_cap: 64.0,
            refine_rounds: 3,
            polish_tol: 1e-6,
            unimodality_check: true,
            seeds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualDiagnostics {
    /// `(λ, g(λ))` at the achieving `(σ, τ)` over the dense grid.
    pub lambda_profile: Vec<(f64, f64)>,
    pub unimodal: bool,
    pub warnings: Vec<String>,
    /// Number of `(σ, τ)` pairs visited.
    pub pairs_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualResult {
    pub value: f64,
    pub params: DualParams,
    pub regime_hint: Regime,
    pub diagnostics: DualDiagnostics,
}
