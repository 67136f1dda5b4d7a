//! Classical exponents: Gallager's `E₀`, the expurgated `E_x`, and the
//! random-coding, sphere-packing and expurgated curves built from them.

use serde::Serialize;

use crate::channel::ChannelModel;
use crate::logdomain::lse;
use crate::measures::{ln_mean_exp, LogTables};
use crate::search::{golden_max, lin_space, log_space};
use crate::tolerance::{DERIVATIVE_STEP, DERIVATIVE_STEP_COARSE};

/// Truncation of the unbounded `ρ` searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoCap {
    pub rho_max: f64,
    pub grid_points_per_decade: usize,
}

impl Default for RhoCap {
    fn default() -> Self {
        RhoCap {
            rho_max: 64.0,
            grid_points_per_decade: 20,
        }
    }
}

impl RhoCap {
    fn grid(&self, lo: f64) -> Vec<f64> {
        assert!(self.rho_max >= 1.0, "rho_max must be at least 1");
        let decades = (self.rho_max / lo).log10().max(0.0);
        let n = ((decades * self.grid_points_per_decade as f64).ceil() as usize).max(1) + 1;
        log_space(lo, self.rho_max, n)
    }
}

/// Value of a `sup_ρ` exponent together with its maximizer.
///
/// `rho` is `∞` when the analytic `ρ → ∞` candidate (or an unbounded
/// objective) wins. `truncated` marks an objective still increasing at the cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponent {
    pub value: f64,
    pub rho: f64,
    pub truncated: bool,
}

/// `ln Σ_y √(W(y|x) W(y|x'))` for every input pair, row-major.
pub fn bhattacharyya_log(model: &ChannelModel) -> Vec<Vec<f64>> {
    let t = LogTables::new(model, &model.w);
    (0..t.nx)
        .map(|x| {
            (0..t.nx)
                .map(|xp| lse((0..t.ny).map(|y| 0.5 * (t.ln_w(x, y) + t.ln_w(xp, y)))))
                .collect()
        })
        .collect()
}

struct Kernels {
    tables: LogTables,
    /// `(P(x)P(x'), ln B(x,x'))` over support pairs.
    pairs: Vec<(f64, f64)>,
}

impl Kernels {
    fn new(model: &ChannelModel) -> Self {
        let tables = LogTables::new(model, &model.w);
        let b = bhattacharyya_log(model);
        let mut pairs = Vec::new();
        for &x in &tables.support {
            for &xp in &tables.support {
                pairs.push((tables.p[x] * tables.p[xp], b[x][xp]));
            }
        }
        Kernels { tables, pairs }
    }

    fn e0(&self, rho: f64) -> f64 {
        if rho == 0.0 {
            return 0.0;
        }
        let r = 1.0 + rho;
        -lse((0..self.tables.ny).map(|y| {
            let a = self.tables.a_value(y, r);
            if a == f64::NEG_INFINITY {
                a
            } else {
                r * a
            }
        }))
    }

    fn ex(&self, rho: f64) -> f64 {
        -rho * ln_mean_exp(self.pairs.iter().copied(), 1.0 / rho)
    }

    /// Mass of input pairs with a nonzero Bhattacharyya coefficient.
    fn overlap_mass(&self) -> f64 {
        self.pairs
            .iter()
            .filter(|(_, l)| *l > f64::NEG_INFINITY)
            .map(|(w, _)| w)
            .sum()
    }

    /// `lim_{ρ→∞} E_x(ρ) = -Σ P P ln B`, finite only when every `B > 0`.
    /// `lim_{ρ→∞} E₀(ρ) = -ln Σ_y exp{Σ_x P(x) ln W(y|x)}`.
    fn e0_limit(&self) -> f64 {
        -lse((0..self.tables.ny).map(|y| self.tables.collective(y, f64::INFINITY)))
    }

    fn ex_limit(&self) -> f64 {
        -self.pairs.iter().map(|&(w, l)| w * l).sum::<f64>()
    }
}

/// `E₀(ρ) = -ln Σ_y exp{(1+ρ) A(y, 1+ρ)}` with `A` built on `W`.
pub fn gallager_e0(model: &ChannelModel, rho: f64) -> f64 {
    assert!(rho >= 0.0, "rho must be nonnegative");
    Kernels::new(model).e0(rho)
}

/// `E_x(ρ) = -ρ ln Σ_{x,x'} P(x)P(x') B(x,x')^{1/ρ}`.
pub fn expurgated_ex(model: &ChannelModel, rho: f64) -> f64 {
    assert!(rho >= 1.0, "rho must be at least 1");
    Kernels::new(model).ex(rho)
}

/// Maximizes a concave `f` over the sorted `grid`, golden-refining around the
/// best grid point.
fn sup_on_grid<F: Fn(f64) -> f64>(f: &F, grid: &[f64]) -> (f64, f64, usize) {
    let vals: Vec<f64> = grid.iter().map(|&r| f(r)).collect();
    let mut best = 0;
    for i in 1..vals.len() {
        if vals[i] > vals[best] {
            best = i;
        }
    }
    let (mut bx, mut bv) = (grid[best], vals[best]);
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    if hi > lo {
        let (x, v) = golden_max(f, lo, hi, 1e-10 * hi.max(1.0));
        if v > bv {
            bx = x;
            bv = v;
        }
    }
    (bx, bv, best)
}

/// `E_r(R) = max_{0≤ρ≤1} [E₀(ρ) - ρR]`.
pub fn random_coding_exponent(model: &ChannelModel, rate: f64) -> Exponent {
    let k = Kernels::new(model);
    random_coding_with(&k, rate)
}

fn random_coding_with(k: &Kernels, rate: f64) -> Exponent {
    let f = |rho: f64| k.e0(rho) - rho * rate;
    let (rho, value, _) = sup_on_grid(&f, &lin_space(0.0, 1.0, 41));
    Exponent {
        value,
        rho,
        truncated: false,
    }
}

/// `E_sp(R) = sup_{ρ≥0} [E₀(ρ) - ρR]`, searched up to `cap.rho_max`.
///
/// Returns `+∞` when the objective is still increasing at the cap, except
/// at `R = 0` where the `ρ → ∞` limit is used when it is finite.
pub fn sphere_packing_exponent(model: &ChannelModel, rate: f64, cap: RhoCap) -> Exponent {
    let k = Kernels::new(model);
    let f = |rho: f64| k.e0(rho) - rho * rate;
    let mut grid = lin_space(0.0, 1.0, 41);
    grid.extend(cap.grid(1.0).into_iter().skip(1));
    let (rho, value, idx) = sup_on_grid(&f, &grid);
    if idx == grid.len() - 1 && increasing_at(&f, cap.rho_max) {
        let limit = k.e0_limit();
        if rate == 0.0 && limit.is_finite() {
            return Exponent {
                value: limit.max(value),
                rho: f64::INFINITY,
                truncated: false,
            };
        }
        return Exponent {
            value: f64::INFINITY,
            rho: f64::INFINITY,
            truncated: true,
        };
    }
    Exponent {
        value,
        rho,
        truncated: false,
    }
}

fn increasing_at<F: Fn(f64) -> f64>(f: &F, rho: f64) -> bool {
    let h = 1e-3 * rho;
    f(rho) - f(rho - h) > 1e-12 * h
}

/// `E_ex(R) = sup_{ρ≥1} [E_x(ρ) - ρR]`.
///
/// The grid runs to `cap.rho_max`; the analytic `ρ → ∞` limit is an extra
/// candidate at `R = 0`. With input pairs of zero Bhattacharyya coefficient
/// (total mass `1 - q`) the objective grows without bound iff `R < -ln q`,
/// and `+∞` is returned.
pub fn expurgated_exponent(model: &ChannelModel, rate: f64, cap: RhoCap) -> Exponent {
    let k = Kernels::new(model);
    let q = k.overlap_mass();
    if q < 1.0 - 1e-15 && rate < -q.ln() {
        return Exponent {
            value: f64::INFINITY,
            rho: f64::INFINITY,
            truncated: false,
        };
    }
    let f = |rho: f64| k.ex(rho) - rho * rate;
    let grid = cap.grid(1.0);
    let (rho, value, idx) = sup_on_grid(&f, &grid);
    if rate == 0.0 && q >= 1.0 - 1e-15 {
        let limit = k.ex_limit();
        if limit > value {
            return Exponent {
                value: limit,
                rho: f64::INFINITY,
                truncated: false,
            };
        }
    }
    Exponent {
        value,
        rho,
        truncated: idx == grid.len() - 1 && increasing_at(&f, cap.rho_max),
    }
}

/// The two rates bounding the affine middle segment, each with its
/// Richardson cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalRates {
    /// `Ė_x(1) / 2`.
    pub r_c1: f64,
    /// `Ė₀(1)`.
    pub r_c2: f64,
    pub r_c1_check: f64,
    pub r_c2_check: f64,
}

fn central<F: Fn(f64) -> f64>(f: &F, at: f64, h: f64) -> f64 {
    (f(at + h) - f(at - h)) / (2.0 * h)
}

fn richardson<F: Fn(f64) -> f64>(f: &F, at: f64, h: f64) -> f64 {
    (4.0 * central(f, at, h / 2.0) - central(f, at, h)) / 3.0
}

/// `Ė₀(ρ)` by central difference.
pub fn e0_derivative(model: &ChannelModel, rho: f64) -> f64 {
    let k = Kernels::new(model);
    central(&|r: f64| k.e0(r.max(0.0)), rho, DERIVATIVE_STEP)
}

/// `Ė_x(ρ)` by central difference. The formula for `E_x` is smooth through
/// `ρ = 1`, so the left stencil point is evaluated directly.
pub fn ex_derivative(model: &ChannelModel, rho: f64) -> f64 {
    let k = Kernels::new(model);
    central(&|r: f64| k.ex(r), rho, DERIVATIVE_STEP)
}

pub fn critical_rates(model: &ChannelModel) -> CriticalRates {
    let k = Kernels::new(model);
    let e0 = |r: f64| k.e0(r);
    let ex = |r: f64| k.ex(r);
    CriticalRates {
        r_c1: central(&ex, 1.0, DERIVATIVE_STEP) / 2.0,
        r_c2: central(&e0, 1.0, DERIVATIVE_STEP),
        r_c1_check: richardson(&ex, 1.0, DERIVATIVE_STEP_COARSE) / 2.0,
        r_c2_check: richardson(&e0, 1.0, DERIVATIVE_STEP_COARSE),
    }
}

/// `I(P, W)` in nats.
pub fn mutual_information(model: &ChannelModel) -> f64 {
    let q = model.output_distribution();
    let mut i = 0.0;
    for (x, row) in model.w.iter().enumerate() {
        if model.p[x] <= 0.0 {
            continue;
        }
        for (y, &w) in row.iter().enumerate() {
            if w > 0.0 {
                i += model.p[x] * w * (w / q[y]).ln();
            }
        }
    }
    i.max(0.0)
}
